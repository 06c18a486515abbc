"""Continuous-time Markov chains: steady-state solving and simulation.

Steady states are computed with Grassmann-Taksar-Heyman (GTH) state
reduction. GTH performs no subtractions, only sums and ratios of positive
rates, so it keeps full relative accuracy even when transition rates span
a dozen orders of magnitude, which is routine for the maintenance chains
this package targets. A trajectory simulator is included as an independent
cross-check of the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import SolverError, ValidationError

GENERATOR_ROW_SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Transition:
    """One directed transition with a strictly positive rate in events/hour."""

    src: str
    dst: str
    rate: float


@dataclass(frozen=True)
class Ctmc:
    """A labeled-state chain with a designated initial state.

    Invariants enforced at construction: unique state labels, no self-loops,
    at most one transition per ordered state pair, all rates finite and > 0.
    Instances are immutable; solving and simulating are pure functions.
    """

    states: tuple[str, ...]
    initial: str
    transitions: tuple[Transition, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        if not self.states:
            raise ValidationError("a chain needs at least one state")
        if len(set(self.states)) != len(self.states):
            raise ValidationError("state labels must be unique")
        if self.initial not in self.states:
            raise ValidationError(f"initial state {self.initial!r} is not a declared state")
        seen: set[tuple[str, str]] = set()
        for tr in self.transitions:
            if tr.src not in self.states or tr.dst not in self.states:
                raise ValidationError(f"transition {tr.src!r} -> {tr.dst!r} leaves the state set")
            if tr.src == tr.dst:
                raise ValidationError(f"self-loop transition on {tr.src!r}")
            key = (tr.src, tr.dst)
            if key in seen:
                # almost certainly a typo in a model file, so refuse to sum
                raise ValidationError(f"duplicate transition {tr.src!r} -> {tr.dst!r}")
            seen.add(key)
            if not (tr.rate > 0.0) or not math.isfinite(tr.rate):
                raise ValidationError(
                    f"transition {tr.src!r} -> {tr.dst!r} has non-positive rate {tr.rate!r}"
                )

    def index(self, state: str) -> int:
        return self.states.index(state)


def generator(chain: Ctmc) -> np.ndarray:
    """Infinitesimal generator: off-diagonals are rates, diagonal negates the row sum."""
    n = len(chain.states)
    q = np.zeros((n, n), dtype=float)
    for tr in chain.transitions:
        q[chain.index(tr.src), chain.index(tr.dst)] = tr.rate
    np.fill_diagonal(q, -q.sum(axis=1))
    return q


def _rate_matrix(chain: Ctmc) -> np.ndarray:
    n = len(chain.states)
    r = np.zeros((n, n), dtype=float)
    for tr in chain.transitions:
        r[chain.index(tr.src), chain.index(tr.dst)] = tr.rate
    return r


def reachable_closed_class(chain: Ctmc) -> tuple[str, ...]:
    """States reachable from the initial state, verified to be one closed class.

    The forward-reachable set is closed by construction; the check that can
    fail is strong connectivity. A reachable state that cannot return to the
    initial state means the model leaks probability into a sub-chain, which
    for a maintenance model is a modeling bug rather than a solvable input.
    """
    rates = _rate_matrix(chain)
    n = len(chain.states)
    start = chain.index(chain.initial)

    def closure(adjacency: np.ndarray) -> set[int]:
        seen = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for nxt in np.flatnonzero(adjacency[node]):
                if int(nxt) not in seen:
                    seen.add(int(nxt))
                    stack.append(int(nxt))
        return seen

    forward = closure(rates > 0)
    backward = closure(rates.T > 0)
    stranded = forward - backward
    if stranded:
        names = ", ".join(chain.states[i] for i in sorted(stranded))
        raise SolverError(
            f"reachable states cannot return to {chain.initial!r}: {names}; "
            "the reachable set is not a single closed class"
        )
    return tuple(s for i, s in enumerate(chain.states) if i in forward)


def _gth(rates: np.ndarray) -> np.ndarray:
    """Stationary vector of an irreducible rate matrix by GTH reduction.

    Works on off-diagonal rates only; subtraction-free throughout.
    """
    r = rates.astype(float).copy()
    n = r.shape[0]
    for k in range(n - 1, 0, -1):
        s = r[k, :k].sum()
        # irreducibility of the reduced chain guarantees an exit downward
        if s <= 0.0:
            raise SolverError("GTH reduction hit a state with no exit; chain is not irreducible")
        r[:k, k] /= s
        r[:k, :k] += np.outer(r[:k, k], r[k, :k])
    pi = np.ones(n, dtype=float)
    for k in range(1, n):
        pi[k] = pi[:k] @ r[:k, k]
    return pi / pi.sum()


def steady_state(chain: Ctmc) -> dict[str, float]:
    """Long-run occupancy probabilities, exactly 0 for unreachable states.

    Solves pi . Q = 0 with sum(pi) = 1 on the closed class reachable from the
    initial state. States outside that class (for instance a power-loss state
    whose inbound rate is parameterized to zero) are tolerated and reported
    with probability exactly 0.
    """
    closed = reachable_closed_class(chain)
    result = {state: 0.0 for state in chain.states}
    if len(closed) == 1:
        result[closed[0]] = 1.0
        return result
    idx = [chain.index(s) for s in closed]
    rates = _rate_matrix(chain)[np.ix_(idx, idx)]
    pi = _gth(rates)
    for state, value in zip(closed, pi.tolist()):
        result[state] = value
    return result


@dataclass(frozen=True)
class SimulationResult:
    """Occupancy fractions from one simulated trajectory, with batch-means errors."""

    occupancy: Mapping[str, float]
    standard_error: Mapping[str, float]
    horizon: float
    batches: int
    jumps: int


def simulate(chain: Ctmc, horizon: float, seed: int, batches: int = 20) -> SimulationResult:
    """Simulate one trajectory of exponential sojourns and embedded jumps.

    Occupancy is time-in-state divided by the horizon; standard errors come
    from batch means over ``batches`` equal windows. Fully determined by
    ``seed``: the same seed always yields the identical result.
    """
    if not horizon > 0.0:
        raise ValidationError(f"horizon must be positive, got {horizon!r}")
    if batches < 2:
        raise ValidationError("need at least two batches for a standard error")

    n = len(chain.states)
    rates = _rate_matrix(chain)
    # compact per-state jump tables so a boundary draw can never select a
    # zero-rate target
    targets: list[np.ndarray] = []
    cumulative: list[np.ndarray] = []
    for i in range(n):
        nonzero = np.flatnonzero(rates[i])
        targets.append(nonzero)
        cumulative.append(np.cumsum(rates[i, nonzero]))
    exit_rate = [float(c[-1]) if len(c) else 0.0 for c in cumulative]

    rng = np.random.default_rng(seed)
    batch_len = horizon / batches
    occupancy = np.zeros((batches, n), dtype=float)

    def record(state: int, start: float, end: float) -> None:
        first = min(int(start / batch_len), batches - 1)
        last = min(int(np.nextafter(end, start) / batch_len), batches - 1)
        for b in range(first, last + 1):
            lo = max(start, b * batch_len)
            hi = min(end, (b + 1) * batch_len)
            if hi > lo:
                occupancy[b, state] += hi - lo

    now = 0.0
    state = chain.index(chain.initial)
    jumps = 0
    while now < horizon:
        lam = exit_rate[state]
        if lam <= 0.0:
            record(state, now, horizon)
            break
        leave = now + rng.exponential(1.0 / lam)
        end = min(leave, horizon)
        record(state, now, end)
        now = end
        if leave >= horizon:
            break
        state = int(np.searchsorted(cumulative[state], rng.random() * lam, side="right"))
        state = min(state, n - 1)
        jumps += 1

    fractions = occupancy.sum(axis=0) / horizon
    per_batch = occupancy / batch_len
    errors = per_batch.std(axis=0, ddof=1) / math.sqrt(batches)
    return SimulationResult(
        occupancy=dict(zip(chain.states, fractions.tolist())),
        standard_error=dict(zip(chain.states, errors.tolist())),
        horizon=horizon,
        batches=batches,
        jumps=jumps,
    )
