"""Multi-hop eventual leader election toolkit.

Four layers: a pure per-process protocol state machine (`core` +
`arborescence`), a deterministic adversarial network simulator
(`channels`, `netsim`, `trace`), trace auditors that turn the protocol's
correctness and efficiency claims into pass/fail checks (`audit`), and
random-graph Monte Carlo estimators contrasting single-hop with
multi-hop leader election (`montecarlo`).
"""

from .arborescence import (
    Arborescence,
    TopologyError,
    WeightedDigraph,
    brute_force_min_arborescence,
    min_arborescence,
    validate_arborescence,
)
from .audit import (
    AuditReport,
    audit_channel_usage,
    audit_message_efficiency,
    audit_packet_efficiency,
    audit_report,
    audit_timer_bound,
    detect_convergence,
)
from .channels import (
    ChannelState,
    DeliverProb,
    DropPattern,
    EventuallyTimely,
    FairLossy,
    Lossy,
    StronglyNonTimely,
    Timely,
    schedule_delivery,
)
from .core import (
    Alive,
    ConfigurationError,
    Failed,
    MessageId,
    MpoState,
    Packet,
    StartPhase,
    StopPhase,
    TimerConfig,
    advance_timers,
    init_state,
    on_receive,
    on_receiver_timeout,
    on_sender_timeout,
)
from .montecarlo import (
    Mode,
    bitimely_connectivity_bound,
    closed_form_single_hop,
    exhaustive_existence,
    mc_multi_hop,
    mc_single_hop,
    mc_stability,
    stability_sweep,
)
from .netsim import (
    GeneralPropagation,
    Scenario,
    ScenarioError,
    preset_dependable,
    run,
    run_reference,
)
from .trace import Trace, read_trace_file, write_trace_file

__version__ = "0.1.0"

__all__ = [
    "Alive",
    "Arborescence",
    "AuditReport",
    "ChannelState",
    "ConfigurationError",
    "DeliverProb",
    "DropPattern",
    "EventuallyTimely",
    "Failed",
    "FairLossy",
    "GeneralPropagation",
    "Lossy",
    "MessageId",
    "Mode",
    "MpoState",
    "Packet",
    "Scenario",
    "ScenarioError",
    "StartPhase",
    "StopPhase",
    "StronglyNonTimely",
    "Timely",
    "TimerConfig",
    "TopologyError",
    "Trace",
    "WeightedDigraph",
    "advance_timers",
    "audit_channel_usage",
    "audit_message_efficiency",
    "audit_packet_efficiency",
    "audit_report",
    "audit_timer_bound",
    "bitimely_connectivity_bound",
    "brute_force_min_arborescence",
    "closed_form_single_hop",
    "detect_convergence",
    "exhaustive_existence",
    "init_state",
    "mc_multi_hop",
    "mc_single_hop",
    "mc_stability",
    "min_arborescence",
    "on_receive",
    "on_receiver_timeout",
    "on_sender_timeout",
    "preset_dependable",
    "read_trace_file",
    "run",
    "run_reference",
    "schedule_delivery",
    "stability_sweep",
    "validate_arborescence",
    "write_trace_file",
]
