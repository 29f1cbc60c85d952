"""Trace analyzers: convergence, efficiency, and timer-growth checks.

Every function here is a pure, read-only pass over a Trace.  "All but
finitely many" claims about infinite runs are checked in their standard
finite form: pick a cutoff, inspect everything after it within the
horizon.  The default cutoff is convergence_step + 10 * sender_timeout,
and convergence itself requires a stability window (default: the final
20% of the horizon) so transient agreement is not accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .core import MessageId
from .trace import Deliver, LeaderChange, Send, TimerFired, Trace


@dataclass(frozen=True)
class Convergence:
    leader: int
    step: int


@dataclass
class AuditReport:
    converged: bool
    leader: int | None
    convergence_step: int | None
    cutoff: int
    origins_after_cutoff: set[int]
    max_packets_per_message_after_cutoff: int
    channels_used_after_cutoff: int
    timer_growth: dict[int, int] = field(default_factory=dict)
    message_efficient: bool = False
    packet_efficient: bool = False

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "converged": self.converged,
            "leader": self.leader,
            "convergence_step": self.convergence_step,
            "cutoff": self.cutoff,
            "origins_after_cutoff": sorted(self.origins_after_cutoff),
            "max_packets_per_message_after_cutoff":
                self.max_packets_per_message_after_cutoff,
            "channels_used_after_cutoff": self.channels_used_after_cutoff,
            "timer_growth": {str(p): t for p, t in sorted(self.timer_growth.items())},
            "message_efficient": self.message_efficient,
            "packet_efficient": self.packet_efficient,
        }


def detect_convergence(trace: Trace, window: int | None = None) -> Convergence | None:
    """Earliest step from which every correct process outputs one fixed
    correct leader through the horizon, provided at least `window` steps
    of that stability are observed; None otherwise."""
    horizon = trace.horizon
    if window is None:
        window = max(1, horizon // 5)
    correct = trace.correct_processes()

    final: dict[int, int | None] = {p: None for p in correct}
    last_change: dict[int, int] = {p: 0 for p in correct}
    for ev in trace.events:
        if isinstance(ev, LeaderChange) and ev.proc in final:
            final[ev.proc] = ev.new
            last_change[ev.proc] = ev.step

    leaders = set(final.values())
    if len(leaders) != 1:
        return None
    leader = leaders.pop()
    if leader is None or leader not in correct:
        return None
    step = max(last_change.values(), default=0)
    if horizon - step < window:
        return None
    return Convergence(leader=leader, step=step)


def _origination_steps(trace: Trace) -> dict[MessageId, tuple[int, str]]:
    """First send of each message: that send is the origination (events
    are time-ordered and forwards strictly follow a delivery)."""
    firsts: dict[MessageId, tuple[int, str]] = {}
    for ev in trace.events:
        if isinstance(ev, Send) and ev.mid not in firsts:
            firsts[ev.mid] = (ev.step, ev.kind)
    return firsts


def audit_message_efficiency(trace: Trace, cutoff: int) -> set[int]:
    """Origins of messages first originated strictly after `cutoff`.

    The run is message efficient past the cutoff iff the result is
    exactly {leader}.
    """
    return {
        mid.origin
        for mid, (step, _) in _origination_steps(trace).items()
        if step > cutoff
    }


def audit_packet_efficiency(trace: Trace, cutoff: int) -> int:
    """Largest number of packets any message originated after `cutoff` used."""
    firsts = _origination_steps(trace)
    counts: dict[MessageId, int] = {}
    for ev in trace.events:
        if isinstance(ev, Send) and firsts[ev.mid][0] > cutoff:
            counts[ev.mid] = counts.get(ev.mid, 0) + 1
    return max(counts.values(), default=0)


def packet_counts_by_kind(trace: Trace, cutoff: int) -> dict[str, int]:
    """Max packets per message after the cutoff, split by message kind."""
    firsts = _origination_steps(trace)
    counts: dict[MessageId, int] = {}
    for ev in trace.events:
        if isinstance(ev, Send) and firsts[ev.mid][0] > cutoff:
            counts[ev.mid] = counts.get(ev.mid, 0) + 1
    out: dict[str, int] = {}
    for mid, c in counts.items():
        kind = firsts[mid][1]
        out[kind] = max(out.get(kind, 0), c)
    return out


def audit_channel_usage(trace: Trace, cutoff: int) -> int:
    """Distinct ordered (src, dst) pairs carrying sends strictly after `cutoff`."""
    used = {
        (ev.src, ev.dst)
        for ev in trace.events
        if isinstance(ev, Send) and ev.step > cutoff
    }
    return len(used)


@dataclass(frozen=True)
class TimerBoundReport:
    final_timeouts: dict[int, int]  # correct process -> final timeout for the subject
    stabilized: bool                # no firing inside the final quiet window
    last_fire_step: int | None


def audit_timer_bound(
    trace: Trace, leader: int, *, quiet_window: int | None = None
) -> TimerBoundReport:
    """Final receive-timer timeout for subject `leader` at every correct process.

    Timeouts grow only when the timer fires, by the configured
    increment, so finals are reconstructed from TimerFired counts.
    `stabilized` is False if any such timer still fired inside the final
    quiet window (default: last 20% of the horizon), i.e. growth had not
    stopped.
    """
    timers = trace.scenario["timers"]
    initial = int(timers["initial_receiver_timeout"])
    increment = int(timers["timeout_increment"])
    horizon = trace.horizon
    if quiet_window is None:
        quiet_window = max(1, horizon // 5)

    fires: dict[int, int] = {}
    last_fire: int | None = None
    for ev in trace.events:
        if isinstance(ev, TimerFired) and ev.subject == leader and ev.proc != leader:
            fires[ev.proc] = fires.get(ev.proc, 0) + 1
            last_fire = ev.step
    finals = {
        p: initial + increment * fires.get(p, 0)
        for p in trace.correct_processes()
        if p != leader
    }
    stabilized = last_fire is None or last_fire <= horizon - quiet_window
    return TimerBoundReport(
        final_timeouts=finals, stabilized=stabilized, last_fire_step=last_fire
    )


def fair_lossy_stream_counts(trace: Trace) -> dict[tuple[int, int, str, int], tuple[int, int]]:
    """(src, dst, kind, origin) -> (sends, delivers); raw material for
    fair-lossy accounting checks."""
    kinds: dict[MessageId, str] = {}
    sends: dict[tuple[int, int, str, int], int] = {}
    delivers: dict[tuple[int, int, str, int], int] = {}
    for ev in trace.events:
        if isinstance(ev, Send):
            kinds[ev.mid] = ev.kind
            key = (ev.src, ev.dst, ev.kind, ev.mid.origin)
            sends[key] = sends.get(key, 0) + 1
        elif isinstance(ev, Deliver):
            key = (ev.src, ev.dst, kinds[ev.mid], ev.mid.origin)
            delivers[key] = delivers.get(key, 0) + 1
    return {k: (s, delivers.get(k, 0)) for k, s in sends.items()}


def default_cutoff(trace: Trace, convergence_step: int) -> int:
    return convergence_step + 10 * int(trace.scenario["timers"]["sender_timeout"])


def audit_report(trace: Trace, cutoff: int | None = None,
                 window: int | None = None) -> AuditReport:
    """One-stop report: convergence plus the efficiency audits at the cutoff."""
    conv = detect_convergence(trace, window)
    if conv is None:
        eff_cutoff = cutoff if cutoff is not None else 0
        return AuditReport(
            converged=False,
            leader=None,
            convergence_step=None,
            cutoff=eff_cutoff,
            origins_after_cutoff=audit_message_efficiency(trace, eff_cutoff),
            max_packets_per_message_after_cutoff=audit_packet_efficiency(trace, eff_cutoff),
            channels_used_after_cutoff=audit_channel_usage(trace, eff_cutoff),
        )
    eff_cutoff = cutoff if cutoff is not None else default_cutoff(trace, conv.step)
    origins = audit_message_efficiency(trace, eff_cutoff)
    max_packets = audit_packet_efficiency(trace, eff_cutoff)
    n = trace.n
    report = AuditReport(
        converged=True,
        leader=conv.leader,
        convergence_step=conv.step,
        cutoff=eff_cutoff,
        origins_after_cutoff=origins,
        max_packets_per_message_after_cutoff=max_packets,
        channels_used_after_cutoff=audit_channel_usage(trace, eff_cutoff),
        message_efficient=origins == {conv.leader},
        packet_efficient=max_packets <= 2 * (n - 1),
    )
    labels = trace.scenario.get("labels", {})
    if labels.get("preset") == "dependable":
        report.timer_growth = audit_timer_bound(
            trace, int(labels["leader"])
        ).final_timeouts
    return report
