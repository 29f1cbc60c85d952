"""Channel behavior models: when (if ever) a packet put on a channel arrives.

Each ordered process pair gets one model.  `schedule_delivery` turns a
send into either a delivery step or None (dropped).  Models that need
running per-channel state (fair-lossy stream counters, non-timely
suppression windows) read and update a ChannelState owned by the caller,
so a model instance itself stays immutable config and one scenario can
drive many independent runs.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass, field

from .core import Packet


@dataclass(frozen=True)
class Timely:
    """Every packet delivered within `bound` steps of the send."""

    bound: int


@dataclass(frozen=True)
class EventuallyTimely:
    """Timely{bound} for sends at or after `unreliable_until`.

    Earlier sends face an adversarial prefix: dropped with probability
    1/2, otherwise delayed uniformly in [1, 4*bound].
    """

    bound: int
    unreliable_until: int = 0


@dataclass(frozen=True)
class DropPattern:
    """Deliver every (drop+1)-th packet of each (kind, origin) stream."""

    drop: int


@dataclass(frozen=True)
class DeliverProb:
    """Deliver each packet independently with probability q > 0."""

    q: float


@dataclass(frozen=True)
class FairLossy:
    """Loses packets but never an entire infinite (kind, origin) stream.

    Delivered packets arrive with a uniform delay in [delay_min, delay_max];
    the fairness guarantee says nothing about latency.
    """

    policy: DropPattern | DeliverProb
    delay_min: int = 1
    delay_max: int = 8


@dataclass(frozen=True)
class StronglyNonTimely:
    """Channel with recurring delivery-free windows of growing length.

    Windows start at `burst` steps long and double up to `window_cap`,
    at seeded positions no earlier than `quiet_until`; an arrival
    falling inside a window is pushed just past its end.  Outside
    windows, packets arrive with a uniform delay in
    [delay_min, delay_max].
    """

    burst: int = 8
    window_cap: int = 256
    delay_min: int = 1
    delay_max: int = 8
    quiet_until: int = 0


@dataclass(frozen=True)
class Lossy:
    """Delivers nothing."""


ChannelModel = Timely | EventuallyTimely | FairLossy | StronglyNonTimely | Lossy


@dataclass
class ChannelState:
    """Mutable per-run, per-channel bookkeeping."""

    stream_counts: dict[tuple[str, int], int] = field(default_factory=dict)
    windows: list[tuple[int, int]] | None = None


def suppression_windows(
    seed: int, src: int, dst: int, burst: int, cap: int, horizon: int,
    start_after: int = 0,
) -> list[tuple[int, int]]:
    """Seeded, channel-specific window schedule [start, end) covering the run.

    Lengths double from `burst` up to `cap`; successive gaps grow with
    the window length so windows recur but thin out.  No window opens
    before `start_after`.
    """
    # mix to a plain int: tuple seeding hashes, which is not stable across runs
    local = random.Random(((seed * 1_000_003 + src) * 1_000_003 + dst) * 2 + 1)
    windows: list[tuple[int, int]] = []
    pos = start_after + local.randint(1, max(2, burst * 2))
    k = 0
    while pos < horizon:
        length = min(burst << k, cap)
        windows.append((pos, pos + length))
        pos = pos + length + local.randint(length, 2 * length)
        k += 1
    return windows


def _dodge_windows(arrival: int, windows: list[tuple[int, int]] | None,
                   rng: random.Random) -> int:
    if not windows:
        return arrival
    i = bisect_right(windows, (arrival, float("inf"))) - 1
    if i >= 0:
        start, end = windows[i]
        if start <= arrival < end:
            # gaps exceed window lengths, so one hop clears the window
            return end + rng.randint(0, 3)
    return arrival


def schedule_delivery(
    model: ChannelModel,
    pkt: Packet,
    send_step: int,
    rng: random.Random,
    state: ChannelState | None = None,
) -> int | None:
    """Delivery step for `pkt` sent at `send_step`, or None if dropped.

    `rng` is the run's seeded stream; `state` the channel's running
    bookkeeping (a throwaway is created when omitted, which is fine for
    the stateless models).
    """
    if state is None:
        state = ChannelState()

    if isinstance(model, Timely):
        return send_step + rng.randint(1, model.bound)

    if isinstance(model, EventuallyTimely):
        if send_step >= model.unreliable_until:
            return send_step + rng.randint(1, model.bound)
        if rng.random() < 0.5:
            return None
        return send_step + rng.randint(1, 4 * model.bound)

    if isinstance(model, FairLossy):
        key = (pkt.payload.kind, pkt.msg_id.origin)
        count = state.stream_counts.get(key, 0) + 1
        state.stream_counts[key] = count
        if isinstance(model.policy, DropPattern):
            if count % (model.policy.drop + 1) != 0:
                return None
        else:
            if rng.random() >= model.policy.q:
                return None
        return send_step + rng.randint(model.delay_min, model.delay_max)

    if isinstance(model, StronglyNonTimely):
        arrival = send_step + rng.randint(model.delay_min, model.delay_max)
        return _dodge_windows(arrival, state.windows, rng)

    if isinstance(model, Lossy):
        return None

    raise TypeError(f"unknown channel model {model!r}")


# ---------------------------------------------------------------------------
# Textual channel specs (config files, scenario hashing)
# ---------------------------------------------------------------------------

def model_to_spec(model: ChannelModel) -> str:
    """Render a model as the one-line form used in scenario config files."""
    if isinstance(model, Timely):
        return f"timely b={model.bound}"
    if isinstance(model, EventuallyTimely):
        return f"eventually_timely b={model.bound} until={model.unreliable_until}"
    if isinstance(model, FairLossy):
        if isinstance(model.policy, DropPattern):
            head = f"fair_lossy drop={model.policy.drop}"
        else:
            head = f"fair_lossy q={model.policy.q}"
        return f"{head} delay={model.delay_min}:{model.delay_max}"
    if isinstance(model, StronglyNonTimely):
        return (
            f"strongly_non_timely burst={model.burst} cap={model.window_cap}"
            f" delay={model.delay_min}:{model.delay_max} quiet={model.quiet_until}"
        )
    if isinstance(model, Lossy):
        return "lossy"
    raise TypeError(f"unknown channel model {model!r}")


class ChannelSpecError(ValueError):
    """Unparseable channel spec string."""


def model_from_spec(spec: str) -> ChannelModel:
    """Parse the textual channel form; inverse of model_to_spec."""
    parts = spec.split()
    if not parts:
        raise ChannelSpecError("empty channel spec")
    name, args = parts[0], {}
    for part in parts[1:]:
        if "=" not in part:
            raise ChannelSpecError(f"expected key=value, got {part!r} in {spec!r}")
        key, val = part.split("=", 1)
        args[key] = val

    def intarg(key, default=None):
        if key not in args:
            if default is None:
                raise ChannelSpecError(f"{name!r} needs {key}= in {spec!r}")
            return default
        return int(args[key])

    def delayargs():
        raw = args.get("delay")
        if raw is None:
            return 1, 8
        lo, _, hi = raw.partition(":")
        return int(lo), int(hi or lo)

    if name == "timely":
        return Timely(bound=intarg("b"))
    if name == "eventually_timely":
        return EventuallyTimely(bound=intarg("b"), unreliable_until=intarg("until", 0))
    if name == "fair_lossy":
        lo, hi = delayargs()
        if "drop" in args:
            return FairLossy(DropPattern(int(args["drop"])), lo, hi)
        if "q" in args:
            return FairLossy(DeliverProb(float(args["q"])), lo, hi)
        raise ChannelSpecError(f"fair_lossy needs drop= or q= in {spec!r}")
    if name == "strongly_non_timely":
        lo, hi = delayargs()
        return StronglyNonTimely(
            burst=intarg("burst", 8),
            window_cap=intarg("cap", 256),
            delay_min=lo,
            delay_max=hi,
            quiet_until=intarg("quiet", 0),
        )
    if name == "lossy":
        return Lossy()
    raise ChannelSpecError(f"unknown channel model {name!r}")
