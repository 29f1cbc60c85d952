"""Deterministic discrete-event simulator for the leader election protocol.

A Scenario fully determines a run: topology, per-channel behavior
models, crash schedule, timer constants, seed, and horizon.  `run`
executes it and returns a Trace.  Step semantics, in order, within each
global step: (1) scheduled crashes land, (2) every packet due this step
is delivered (crashed recipients consume silently), (3) timers advance
by one step and the ones that hit their timeout are dispatched in
ascending (process, subject) order.  Packets emitted by a handler are
routed immediately through their channel model, which fixes the
delivery step (never earlier than the next step) or drops them.

`run` skips silently over steps in which nothing can happen (no due
delivery, crash, or timer expiry), which changes nothing observable;
`run_reference` grinds through every step literally via advance_timers
and exists to cross-check the fast path on small horizons.

One timing convention to be aware of: timers advance once per step
including the step in which a delivery reset them, so a timer armed by a
delivery at step s fires (absent further resets) at s + timeout - 1,
while a timer armed at init or by a timeout handler fires at
s + timeout.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from heapq import heappop, heappush
from typing import Any

from . import trace as tr
from .channels import (
    ChannelModel,
    ChannelState,
    DeliverProb,
    DropPattern,
    EventuallyTimely,
    FairLossy,
    Lossy,
    StronglyNonTimely,
    Timely,
    model_from_spec,
    model_to_spec,
    schedule_delivery,
    suppression_windows,
)
from .core import (
    Failed,
    MpoState,
    Packet,
    TimerConfig,
    advance_timers,
    init_state,
    on_receive,
    on_receiver_timeout,
    on_sender_timeout,
)


class ScenarioError(ValueError):
    """Scenario fails validation."""


@dataclass(frozen=True)
class GeneralPropagation:
    """Per-message propagation sampling: no channel has standing properties.

    Each message gets a reliable edge set R (each directed edge present
    with probability p_reliable) and a timely subset T (each R edge also
    timely with probability p_timely).  Packets over edges outside R are
    dropped; T edges deliver within `bound` steps; R-only edges deliver
    late, in (bound, 4*bound].
    """

    p_reliable: float
    p_timely: float
    bound: int = 4


@dataclass
class Scenario:
    """Complete, hashable description of one simulation run."""

    n: int
    horizon: int
    seed: int
    timers: TimerConfig = field(default_factory=TimerConfig)
    default_channel: ChannelModel = field(default_factory=lambda: Timely(4))
    channels: dict[tuple[int, int], ChannelModel] = field(default_factory=dict)
    origin_channels: dict[int, dict[tuple[int, int], ChannelModel]] = field(
        default_factory=dict
    )
    adjacency: tuple[frozenset[int], ...] | None = None
    crash_schedule: dict[int, int] = field(default_factory=dict)
    propagation: GeneralPropagation | None = None
    labels: dict[str, Any] = field(default_factory=dict)

    def channel_for(self, origin: int, src: int, dst: int) -> ChannelModel:
        per_origin = self.origin_channels.get(origin)
        if per_origin is not None and (src, dst) in per_origin:
            return per_origin[(src, dst)]
        return self.channels.get((src, dst), self.default_channel)

    def out_neighbors(self, p: int) -> tuple[int, ...]:
        if self.adjacency is None:
            return tuple(q for q in range(self.n) if q != p)
        return tuple(sorted(self.adjacency[p] - {p}))

    def to_dict(self) -> dict[str, Any]:
        def chanmap(d: dict[tuple[int, int], ChannelModel]) -> dict[str, str]:
            return {f"{u}->{v}": model_to_spec(m) for (u, v), m in sorted(d.items())}

        return {
            "n": self.n,
            "horizon": self.horizon,
            "seed": self.seed,
            "timers": {
                "sender_timeout": self.timers.sender_timeout,
                "initial_receiver_timeout": self.timers.initial_receiver_timeout,
                "timeout_increment": self.timers.timeout_increment,
            },
            "default_channel": model_to_spec(self.default_channel),
            "channels": chanmap(self.channels),
            "origin_channels": {
                str(o): chanmap(d) for o, d in sorted(self.origin_channels.items())
            },
            "adjacency": None
            if self.adjacency is None
            else [sorted(s) for s in self.adjacency],
            "crashes": {str(p): s for p, s in sorted(self.crash_schedule.items())},
            "propagation": None
            if self.propagation is None
            else {
                "p_reliable": self.propagation.p_reliable,
                "p_timely": self.propagation.p_timely,
                "bound": self.propagation.bound,
            },
            # stringified so a config-file round trip keeps the fingerprint
            "labels": {str(k): str(v) for k, v in sorted(self.labels.items())},
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "Scenario":
        def parse_pairs(d: dict[str, str]) -> dict[tuple[int, int], ChannelModel]:
            out = {}
            for key, spec in d.items():
                u, v = key.split("->")
                out[(int(u), int(v))] = model_from_spec(spec)
            return out

        timers = obj.get("timers", {})
        prop = obj.get("propagation")
        adj = obj.get("adjacency")
        return cls(
            n=int(obj["n"]),
            horizon=int(obj["horizon"]),
            seed=int(obj["seed"]),
            timers=TimerConfig(
                sender_timeout=int(timers.get("sender_timeout", 16)),
                initial_receiver_timeout=int(timers.get("initial_receiver_timeout", 8)),
                timeout_increment=int(timers.get("timeout_increment", 1)),
            ),
            default_channel=model_from_spec(obj.get("default_channel", "timely b=4")),
            channels=parse_pairs(obj.get("channels", {})),
            origin_channels={
                int(o): parse_pairs(d)
                for o, d in obj.get("origin_channels", {}).items()
            },
            adjacency=None if adj is None else tuple(frozenset(s) for s in adj),
            crash_schedule={int(p): int(s) for p, s in obj.get("crashes", {}).items()},
            propagation=None
            if prop is None
            else GeneralPropagation(
                p_reliable=float(prop["p_reliable"]),
                p_timely=float(prop["p_timely"]),
                bound=int(prop.get("bound", 4)),
            ),
            labels=dict(obj.get("labels", {})),
        )

    def fingerprint(self) -> str:
        return tr.fingerprint_scenario(self.to_dict())


def validate_scenario(scn: Scenario) -> None:
    if scn.n < 2:
        raise ScenarioError(f"n must be >= 2, got {scn.n}")
    if scn.horizon < 1:
        raise ScenarioError("horizon must be positive")
    for (u, v) in scn.channels:
        if not (0 <= u < scn.n and 0 <= v < scn.n) or u == v:
            raise ScenarioError(f"bad channel pair ({u}, {v})")
    for p, step in scn.crash_schedule.items():
        if not 0 <= p < scn.n:
            raise ScenarioError(f"crash of unknown process {p}")
        if not 1 <= step <= scn.horizon:
            raise ScenarioError(f"crash step {step} outside [1, horizon]")
    if scn.adjacency is not None and len(scn.adjacency) != scn.n:
        raise ScenarioError("adjacency must have one out-neighbor set per process")


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

_DELIVERY_PHASE = 1
_TIMER_PHASE = 0


class _Engine:
    def __init__(self, scn: Scenario):
        validate_scenario(scn)
        self.scn = scn
        self.rng = random.Random(scn.seed)
        self.states: list[MpoState] = [
            init_state(p, scn.n, scn.timers, scn.adjacency) for p in range(scn.n)
        ]
        self.crashed = [False] * scn.n
        self.events: list[tr.TraceEvent] = []
        self.step = 0
        self.seq = 0  # tiebreaker for the delivery heap
        self.delivery_heap: list[tuple[int, int, Packet]] = []
        self.timer_heap: list[tuple[int, int, int, int]] = []
        self.timer_ver: dict[tuple[int, int], int] = {}
        self.channel_states: dict[tuple[int, int], ChannelState] = {}
        self.prop_graphs: dict = {}
        self.crash_queue = sorted(
            (step, p) for p, step in scn.crash_schedule.items()
        )
        self.crash_idx = 0
        for p in range(scn.n):
            for q in range(scn.n):
                self.timer_ver[(p, q)] = 0
            # own timers armed at step 0; they fire at step sender_timeout
            heappush(self.timer_heap, (scn.timers.sender_timeout, p, p, 0))

    # -- channels ----------------------------------------------------------

    def _channel_state(self, src: int, dst: int, model: ChannelModel) -> ChannelState:
        cs = self.channel_states.get((src, dst))
        if cs is None:
            cs = ChannelState()
            if isinstance(model, StronglyNonTimely):
                cs.windows = suppression_windows(
                    self.scn.seed, src, dst, model.burst, model.window_cap,
                    self.scn.horizon, start_after=model.quiet_until,
                )
            self.channel_states[(src, dst)] = cs
        return cs

    def _propagation_graphs(self, mid) -> tuple[set, set]:
        graphs = self.prop_graphs.get(mid)
        if graphs is None:
            gp = self.scn.propagation
            reliable: set[tuple[int, int]] = set()
            timely: set[tuple[int, int]] = set()
            for u in range(self.scn.n):
                for v in range(self.scn.n):
                    if u == v:
                        continue
                    if self.rng.random() < gp.p_reliable:
                        reliable.add((u, v))
                        if self.rng.random() < gp.p_timely:
                            timely.add((u, v))
            graphs = (reliable, timely)
            self.prop_graphs[mid] = graphs
        return graphs

    def _schedule(self, pkt: Packet, step: int) -> int | None:
        if self.scn.propagation is not None:
            reliable, timely = self._propagation_graphs(pkt.msg_id)
            edge = (pkt.src, pkt.dst)
            if edge not in reliable:
                return None
            b = self.scn.propagation.bound
            if edge in timely:
                return step + self.rng.randint(1, b)
            return step + self.rng.randint(b + 1, 4 * b)
        model = self.scn.channel_for(pkt.msg_id.origin, pkt.src, pkt.dst)
        state = self._channel_state(pkt.src, pkt.dst, model)
        return schedule_delivery(model, pkt, step, self.rng, state)

    def _route(self, packets: list[Packet], step: int) -> None:
        for pkt in packets:
            pkt = replace(pkt, sent_step=step)
            self.events.append(
                tr.Send(step, pkt.msg_id, pkt.payload.kind, pkt.src, pkt.dst)
            )
            due = self._schedule(pkt, step)
            if due is None:
                self.events.append(tr.Drop(step, pkt.msg_id, pkt.src, pkt.dst))
            else:
                self.seq += 1
                heappush(self.delivery_heap, (due, self.seq, pkt))

    # -- timers (fast path) --------------------------------------------------

    def _sync_timer(self, proc: int, subject: int, phase: int) -> None:
        ts = self.states[proc].timers[subject]
        key = (proc, subject)
        if self.timer_ver[key] == ts.ver:
            return
        self.timer_ver[key] = ts.ver
        if ts.on:
            fire = self.step + ts.timeout - phase
            heappush(self.timer_heap, (fire, proc, subject, ts.ver))

    def _timer_entry_valid(self, entry: tuple[int, int, int, int]) -> bool:
        _, proc, subject, ver = entry
        if self.crashed[proc]:
            return False
        ts = self.states[proc].timers[subject]
        return ts.ver == ver and ts.on

    def _peek_timer_step(self) -> int | None:
        heap = self.timer_heap
        while heap:
            if self._timer_entry_valid(heap[0]):
                return heap[0][0]
            heappop(heap)
        return None

    # -- dispatch ------------------------------------------------------------

    def _apply_crashes(self, step: int) -> None:
        while self.crash_idx < len(self.crash_queue) and \
                self.crash_queue[self.crash_idx][0] == step:
            _, proc = self.crash_queue[self.crash_idx]
            self.crash_idx += 1
            if not self.crashed[proc]:
                self.crashed[proc] = True
                self.events.append(tr.Crash(step, proc))

    def _deliver_due(self, step: int) -> None:
        heap = self.delivery_heap
        while heap and heap[0][0] == step:
            _, _, pkt = heappop(heap)
            if self.crashed[pkt.dst]:
                continue  # consumed silently, no action runs
            self.events.append(tr.Deliver(step, pkt.msg_id, pkt.src, pkt.dst))
            state = self.states[pkt.dst]
            msg = pkt.payload
            subject = msg.origin if not isinstance(msg, Failed) else None
            phase_before = state.phases[subject] if subject is not None else 0
            _, out = on_receive(state, pkt)
            if subject is not None:
                if state.phases[subject] != phase_before:
                    self.events.append(
                        tr.PhaseChange(step, pkt.dst, subject, state.phases[subject])
                    )
                self._sync_timer(pkt.dst, subject, _DELIVERY_PHASE)
            self._route(out, step)

    def _dispatch_timeout(self, step: int, proc: int, subject: int) -> None:
        self.events.append(tr.TimerFired(step, proc, subject))
        state = self.states[proc]
        if subject == proc:
            leader_before = state.leader
            phase_before = state.phases[proc]
            _, out = on_sender_timeout(state)
            if state.leader != leader_before:
                self.events.append(
                    tr.LeaderChange(step, proc, leader_before, state.leader)
                )
            if state.phases[proc] != phase_before:
                self.events.append(
                    tr.PhaseChange(step, proc, proc, state.phases[proc])
                )
        else:
            _, out = on_receiver_timeout(state, subject)
        self._sync_timer(proc, subject, _TIMER_PHASE)
        self._route(out, step)

    def _fire_timers_fast(self, step: int) -> None:
        due: list[tuple[int, int]] = []
        heap = self.timer_heap
        while heap and heap[0][0] <= step:
            entry = heappop(heap)
            if self._timer_entry_valid(entry):
                due.append((entry[1], entry[2]))
        for proc, subject in sorted(due):
            # re-check: an earlier dispatch this step cannot invalidate these,
            # but staying defensive costs nothing
            ts = self.states[proc].timers[subject]
            if ts.on and not self.crashed[proc]:
                self._dispatch_timeout(step, proc, subject)

    def _fire_timers_reference(self, step: int) -> None:
        due: list[tuple[int, int]] = []
        for proc in range(self.scn.n):
            if self.crashed[proc]:
                continue
            _, fired = advance_timers(self.states[proc])
            due.extend((proc, subject) for subject in fired)
        for proc, subject in sorted(due):
            self._dispatch_timeout(step, proc, subject)

    # -- main loops ------------------------------------------------------------

    def run_fast(self) -> tr.Trace:
        horizon = self.scn.horizon
        while True:
            nxt = None
            if self.crash_idx < len(self.crash_queue):
                nxt = self.crash_queue[self.crash_idx][0]
            if self.delivery_heap:
                d = self.delivery_heap[0][0]
                nxt = d if nxt is None else min(nxt, d)
            t = self._peek_timer_step()
            if t is not None:
                nxt = t if nxt is None else min(nxt, t)
            if nxt is None or nxt > horizon:
                break
            self.step = nxt
            self._apply_crashes(nxt)
            self._deliver_due(nxt)
            self._fire_timers_fast(nxt)
        return self._finish()

    def run_reference(self) -> tr.Trace:
        for step in range(1, self.scn.horizon + 1):
            self.step = step
            self._apply_crashes(step)
            self._deliver_due(step)
            self._fire_timers_reference(step)
        return self._finish()

    def _finish(self) -> tr.Trace:
        return tr.Trace(
            fingerprint=self.scn.fingerprint(),
            scenario=self.scn.to_dict(),
            events=self.events,
            final_leaders=[s.leader for s in self.states],
            crashed=list(self.crashed),
        )


def run(scn: Scenario) -> tr.Trace:
    """Execute the scenario to its horizon; the trace is a pure function of it."""
    return _Engine(scn).run_fast()


def run_reference(scn: Scenario) -> tr.Trace:
    """Literal step-by-step execution; for cross-checking `run` on small horizons."""
    return _Engine(scn).run_reference()


# ---------------------------------------------------------------------------
# Scenario generators
# ---------------------------------------------------------------------------

def preset_dependable(
    n: int,
    seed: int,
    leader: int = 0,
    *,
    horizon: int = 50_000,
    crash_victims: tuple[int, ...] = (),
    crash_steps: tuple[int, ...] = (),
    sender_timeout: int = 64,
    bound: int = 2,
    backup: int | None = None,
) -> Scenario:
    """Scenario in which `leader` provably deserves to win.

    Construction: every channel out of `leader` is eventually timely
    with delay bound `bound` (the adversarial prefix ends no later than
    the first send), every channel into `leader` is fair-lossy, and the
    remaining channels are a seeded mix of fair-lossy, strongly
    non-timely, and dead channels.  That gives the leader an eventually
    timely path to everyone and everyone a fair-lossy path back: the two
    conditions under which an efficient eventual leader service is
    achievable at all.

    Non-leader channels deliver slowly (floor (n-1)*bound) so a fanned
    out heartbeat copy can never outrun the tree copy, and the initial
    receiver timeout absorbs the full tree delay so the leader's
    subjects never false-alarm once its heartbeats flow.

    Crashing the designated leader is allowed only with a `backup`: a
    second process wired the same way, so the survivor network still
    meets the conditions and re-converges after the crash.  When the
    leader is scheduled to crash and no backup is named, the smallest
    surviving id is used.
    """
    if not 0 <= leader < n:
        raise ScenarioError(f"leader {leader} outside [0, {n})")
    if len(crash_victims) != len(crash_steps):
        raise ScenarioError("need one crash step per victim")
    if leader in crash_victims and backup is None:
        survivors = [x for x in range(n) if x != leader and x not in crash_victims]
        if not survivors:
            raise ScenarioError("nobody would survive to take over")
        backup = survivors[0]
    if backup is not None:
        if backup == leader or backup in crash_victims:
            raise ScenarioError("backup must be a surviving non-leader")

    rng = random.Random(seed * 0x9E3779B1 % (1 << 62) ^ 0x5EED)
    slow_lo = (n - 1) * bound
    slow_hi = 2 * slow_lo
    boundary = rng.randint(0, sender_timeout)
    # suppression windows stress the steady-state tail; they open only after
    # startup and any crash-triggered re-election chatter has drained
    quiet = 40 * sender_timeout + (max(crash_steps) if crash_steps else 0)
    hubs = {leader} if backup is None else {leader, backup}

    channels: dict[tuple[int, int], ChannelModel] = {}
    for hub in sorted(hubs):
        for x in range(n):
            if x == hub:
                continue
            channels[(hub, x)] = EventuallyTimely(
                bound=bound, unreliable_until=boundary
            )
            channels.setdefault(
                (x, hub), FairLossy(DeliverProb(0.5), slow_lo, slow_hi)
            )
    for x in range(n):
        for y in range(n):
            if x == y or x in hubs or y in hubs:
                continue
            roll = rng.random()
            if roll < 0.20:
                channels[(x, y)] = FairLossy(
                    DropPattern(rng.randint(1, 2)), slow_lo, slow_hi
                )
            elif roll < 0.40:
                channels[(x, y)] = FairLossy(DeliverProb(0.5), slow_lo, slow_hi)
            elif roll < 0.65:
                channels[(x, y)] = StronglyNonTimely(
                    burst=rng.choice((4, 8, 16)),
                    window_cap=256,
                    delay_min=slow_lo,
                    delay_max=slow_hi,
                    quiet_until=quiet,
                )
            else:
                channels[(x, y)] = Lossy()

    timers = TimerConfig(
        sender_timeout=sender_timeout,
        initial_receiver_timeout=sender_timeout + bound * (n - 1),
        timeout_increment=1,
    )
    labels: dict[str, Any] = {"preset": "dependable", "leader": leader, "bound": bound}
    if backup is not None:
        labels["backup"] = backup
    return Scenario(
        n=n,
        horizon=horizon,
        seed=seed,
        timers=timers,
        default_channel=Lossy(),
        channels=channels,
        crash_schedule=dict(zip(crash_victims, crash_steps)),
        labels=labels,
    )
