"""Leader existence and stability probabilities on random timely digraphs.

Each directed channel of a complete n-process network is independently
timely with probability p.  A single-hop leader is a node with timely
direct channels to everyone else; a multi-hop leader only needs timely
paths.  The closed form for single-hop existence is exact (each node's
out-channels are disjoint, so the per-node events are independent):

    P(single-hop leader exists) = 1 - (1 - p**(n-1))**n

Multi-hop existence has no simple exact form; `bitimely_connectivity_bound`
evaluates the classical asymptotic lower-bound proxy via bidirectionally
timely channels, good for trend checks only.

The Monte Carlo estimators sample adjacency matrices with one shared
generator layout, so on equal seeds every single-hop success is counted
as a multi-hop success too (the witness is the same node).  Stability
estimators resample the whole digraph each round and count how many
consecutive extra rounds a fixed node keeps the leader property after a
round in which it holds; per round that is a Bernoulli(q) trial, so the
count is geometric with mean q / (1 - q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Iterator

import numpy as np


_BATCH = 2048


class Mode(Enum):
    SINGLE_HOP = "single_hop"
    MULTI_HOP = "multi_hop"
    # lower-bound witness used by the shrinking-p regime: node 0 must reach
    # everyone through channels timely in both directions
    BITIMELY = "bitimely"


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    trials: int

    def within(self, target: float, k: float = 4.0) -> bool:
        return abs(self.value - target) <= k * self.stderr


@dataclass(frozen=True)
class StabilityEstimate:
    mean: float
    stderr: float
    trials: int
    censored: int
    cap: int


def closed_form_single_hop(n: int, p: float) -> float:
    """Exact probability that some node has timely direct channels to all others."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be a probability")
    return 1.0 - (1.0 - p ** (n - 1)) ** n


def bitimely_connectivity_bound(n: int, p: float) -> float:
    """Asymptotic proxy for multi-hop existence via bidirectionally timely
    channels (edge probability p**2): 1 - n*(1 - p**2)**(n-1).

    Asymptotic in n; can be negative for small n.  Trend checks only.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    ptilde = p * p
    return 1.0 - n * (1.0 - ptilde) ** (n - 1)


def _adjacency_batches(
    n: int, p: float, trials: int, seed: int
) -> Iterator[np.ndarray]:
    """Boolean (batch, n, n) adjacency samples; fixed batching so two
    estimators with equal (n, p, trials, seed) see identical graphs."""
    rng = np.random.default_rng(seed)
    left = trials
    while left > 0:
        k = min(_BATCH, left)
        left -= k
        yield rng.random((k, n, n)) < p


def _has_single_hop_leader(adj: np.ndarray) -> np.ndarray:
    n = adj.shape[1]
    eye = np.eye(n, dtype=bool)
    return (adj | eye).all(axis=2).any(axis=1)


def _reachability(adj: np.ndarray) -> np.ndarray:
    """Transitive closure by repeated boolean squaring (paths <= n-1 edges)."""
    n = adj.shape[1]
    reach = adj | np.eye(n, dtype=bool)
    steps = max(1, math.ceil(math.log2(n)))
    r = reach.astype(np.float32)  # float matmul hits BLAS; integer does not
    for _ in range(steps):
        r = (r @ r > 0).astype(np.float32)
    return r.astype(bool)


def _has_multi_hop_leader(adj: np.ndarray) -> np.ndarray:
    return _reachability(adj).all(axis=2).any(axis=1)


def _estimate(hits: int, trials: int) -> Estimate:
    value = hits / trials
    stderr = math.sqrt(value * (1.0 - value) / trials)
    return Estimate(value=value, stderr=stderr, trials=trials)


def mc_single_hop(n: int, p: float, trials: int, seed: int) -> Estimate:
    """Fraction of sampled digraphs containing a single-hop leader."""
    if trials < 1:
        raise ValueError("need at least one trial")
    hits = sum(
        int(_has_single_hop_leader(adj).sum())
        for adj in _adjacency_batches(n, p, trials, seed)
    )
    return _estimate(hits, trials)


def mc_multi_hop(n: int, p: float, trials: int, seed: int) -> Estimate:
    """Fraction of sampled digraphs containing a node that reaches everyone
    through timely edges."""
    if trials < 1:
        raise ValueError("need at least one trial")
    hits = sum(
        int(_has_multi_hop_leader(adj).sum())
        for adj in _adjacency_batches(n, p, trials, seed)
    )
    return _estimate(hits, trials)


def exhaustive_existence(n: int, p: float, mode: Mode) -> float:
    """Exact existence probability by summing over all 2**(n*(n-1)) edge
    subsets; the oracle the estimators are validated against.  n <= 4."""
    if n > 4:
        raise ValueError("exhaustive enumeration refuses n > 4")
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    total = 0.0
    for bits in product((False, True), repeat=len(pairs)):
        adj = np.zeros((1, n, n), dtype=bool)
        prob = 1.0
        for (u, v), present in zip(pairs, bits):
            adj[0, u, v] = present
            prob *= p if present else (1.0 - p)
        if prob == 0.0:
            continue
        ok = (
            _has_single_hop_leader(adj)[0]
            if mode is Mode.SINGLE_HOP
            else _has_multi_hop_leader(adj)[0]
        )
        if ok:
            total += prob
    return total


def _holds_round(rng: np.random.Generator, k: int, n: int, p: float,
                 mode: Mode) -> np.ndarray:
    """One fresh round for k active trials: does node 0 hold the property?"""
    if mode is Mode.SINGLE_HOP:
        return (rng.random((k, n - 1)) < p).all(axis=1)
    adj = rng.random((k, n, n)) < p
    if mode is Mode.BITIMELY:
        adj = adj & adj.transpose(0, 2, 1)
    return _reachability(adj)[:, 0, :].all(axis=1)


def mc_stability(
    n: int,
    p: float,
    trials: int,
    seed: int,
    mode: Mode,
    cap: int = 100_000,
) -> StabilityEstimate:
    """Mean number of consecutive extra rounds node 0 retains the leader
    property after a round establishing it, the whole digraph resampled
    every round.

    Runs are censored at `cap` retained rounds (and a trial still waiting
    for its first holding round after `cap` rounds is censored at 0);
    with any censoring the mean reads as a lower bound.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    WAITING, COUNTING, DONE, CENSORED = 0, 1, 2, 3
    status = np.full(trials, WAITING, dtype=np.int8)
    counts = np.zeros(trials, dtype=np.int64)
    rounds = 0
    while True:
        active = status < DONE
        k = int(active.sum())
        if k == 0:
            break
        rounds += 1
        if rounds > 2 * cap:
            status[active] = CENSORED
            break
        held = np.zeros(trials, dtype=bool)
        held[active] = _holds_round(rng, k, n, p, mode)
        waiting = active & (status == WAITING)
        counting = active & (status == COUNTING)
        status[waiting & held] = COUNTING
        counts[counting & held] += 1
        status[counting & ~held] = DONE
        capped = counts >= cap
        status[(status == COUNTING) & capped] = CENSORED
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return StabilityEstimate(
        mean=mean,
        stderr=stderr,
        trials=trials,
        censored=int((status == CENSORED).sum()),
        cap=cap,
    )


def stability_regime_probability(n: int, target: float) -> float:
    """Channel probability p(n) for the shrinking-p stability regime.

    Evaluates ptilde(n) = ln(n)/n - ln(ln(1 + target))/n for the
    bidirectionally timely graph and returns p = sqrt(ptilde), clipped
    into (0, 1).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if target <= 0:
        raise ValueError("target must be positive")
    ptilde = (math.log(n) - math.log(math.log(1.0 + target))) / n
    ptilde = min(max(ptilde, 1e-9), 1.0)
    return math.sqrt(ptilde)


@dataclass(frozen=True)
class SweepRow:
    n: int
    p: float
    mean: float
    stderr: float
    trials: int
    censored: int


def stability_sweep(
    target: float,
    ns: tuple[int, ...],
    trials: int,
    seed: int,
    cap: int = 10_000,
) -> list[SweepRow]:
    """Stability of the bitimely witness across n, with p(n) from the
    shrinking-p regime.

    The regime holds the witness's per-round retention probability at a
    constant level even as p(n) -> 0, so the honest check is that the
    means sit in a stable O(1) band as n grows (neither explode nor
    vanish), not that they equal the target.
    """
    rows = []
    for i, n in enumerate(ns):
        p = stability_regime_probability(n, target)
        est = mc_stability(n, p, trials, seed + i, Mode.BITIMELY, cap=cap)
        rows.append(SweepRow(n=n, p=p, mean=est.mean, stderr=est.stderr,
                             trials=est.trials, censored=est.censored))
    return rows
