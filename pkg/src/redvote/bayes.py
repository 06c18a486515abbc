"""Finite discrete Bayesian networks and exact inference.

Networks handled here are small (tens of mostly-binary variables), so
conditional tables are stored dense and queries are answered by variable
elimination with a min-fill ordering. Probabilities stay in plain binary
floating point: the quantities of interest (down to ~1e-16) are well inside
double range, and products over a few dozen factors cannot underflow, so a
log-space transform would only cost reproducibility against brute-force
enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError, ZeroEvidenceError

#: Observed states, keyed by variable id.
Evidence = Mapping[str, str]

ROW_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Variable:
    """A finite discrete variable with an ordered set of state labels."""

    id: str
    states: tuple[str, ...]
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        if not self.id:
            raise ValidationError("variable id must be non-empty")
        if len(self.states) < 2:
            raise ValidationError(f"variable {self.id!r} needs at least two states")
        if len(set(self.states)) != len(self.states):
            raise ValidationError(f"variable {self.id!r} repeats a state label")
        if not self.name:
            object.__setattr__(self, "name", self.id)

    @property
    def cardinality(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table for one child variable.

    ``rows`` maps a full parent-state assignment (ordered like ``parents``)
    to the distribution over the child's states, in the child's state order.
    Root variables use the empty tuple as their single key.
    """

    child: str
    parents: tuple[str, ...]
    rows: Mapping[tuple[str, ...], tuple[float, ...]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))
        frozen = {tuple(key): tuple(float(p) for p in dist) for key, dist in self.rows.items()}
        object.__setattr__(self, "rows", frozen)


@dataclass(frozen=True)
class Distribution:
    """Probability per state of a single variable."""

    variable: str
    probabilities: Mapping[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probabilities", dict(self.probabilities))

    def __getitem__(self, state: str) -> float:
        return self.probabilities[state]


class BayesNet:
    """A validated network; build through :func:`build_net`.

    Immutable after construction: every inference operation is pure, so
    concurrent queries against one net are safe.
    """

    __slots__ = ("variables", "cpts", "_by_id", "_tables", "_topo")

    def __init__(
        self,
        variables: tuple[Variable, ...],
        cpts: Mapping[str, Cpt],
        by_id: Mapping[str, Variable],
        tables: Mapping[str, np.ndarray],
        topo: tuple[str, ...],
    ) -> None:
        self.variables = variables
        self.cpts = dict(cpts)
        self._by_id = dict(by_id)
        self._tables = dict(tables)
        self._topo = topo

    @property
    def variable_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.variables)

    @property
    def topological_order(self) -> tuple[str, ...]:
        return self._topo

    def variable(self, var_id: str) -> Variable:
        try:
            return self._by_id[var_id]
        except KeyError:
            raise ValidationError(f"unknown variable {var_id!r}") from None

    def state_index(self, var_id: str, state: str) -> int:
        var = self.variable(var_id)
        try:
            return var.states.index(state)
        except ValueError:
            raise ValidationError(
                f"variable {var_id!r} has no state {state!r} (states: {', '.join(var.states)})"
            ) from None

    def __len__(self) -> int:
        return len(self.variables)


def build_net(variables: Iterable[Variable], cpts: Iterable[Cpt]) -> BayesNet:
    """Validate and assemble a network; malformed input is rejected, never repaired.

    Raises:
        ValidationError: duplicate/unknown variables, missing or extra CPTs or
            rows, row sums off by more than 1e-9, entries outside [0, 1], or a
            cyclic parent graph.
    """
    vars_ = tuple(variables)
    by_id: dict[str, Variable] = {}
    for var in vars_:
        if var.id in by_id:
            raise ValidationError(f"duplicate variable id {var.id!r}")
        by_id[var.id] = var

    cpt_map: dict[str, Cpt] = {}
    for cpt in cpts:
        if cpt.child not in by_id:
            raise ValidationError(f"CPT child {cpt.child!r} is not a declared variable")
        if cpt.child in cpt_map:
            raise ValidationError(f"variable {cpt.child!r} has more than one CPT")
        cpt_map[cpt.child] = cpt
    missing = [v.id for v in vars_ if v.id not in cpt_map]
    if missing:
        raise ValidationError(f"missing CPT for: {', '.join(missing)}")

    for cpt in cpt_map.values():
        seen: set[str] = set()
        for parent in cpt.parents:
            if parent not in by_id:
                raise ValidationError(
                    f"CPT for {cpt.child!r} references unknown parent {parent!r}"
                )
            if parent in seen:
                raise ValidationError(f"CPT for {cpt.child!r} repeats parent {parent!r}")
            seen.add(parent)

    topo = _topological_order(by_id, cpt_map)
    tables = {child: _dense_table(cpt, by_id) for child, cpt in cpt_map.items()}
    return BayesNet(vars_, cpt_map, by_id, tables, topo)


def _topological_order(by_id: Mapping[str, Variable], cpt_map: Mapping[str, Cpt]) -> tuple[str, ...]:
    remaining_parents = {child: set(cpt.parents) for child, cpt in cpt_map.items()}
    children: dict[str, list[str]] = {vid: [] for vid in by_id}
    for child, cpt in cpt_map.items():
        for parent in cpt.parents:
            children[parent].append(child)
    ready = sorted(vid for vid, parents in remaining_parents.items() if not parents)
    order: list[str] = []
    while ready:
        vid = ready.pop(0)
        order.append(vid)
        for child in children[vid]:
            remaining_parents[child].discard(vid)
            if not remaining_parents[child]:
                # keep the scan order deterministic
                ready.append(child)
                ready.sort()
    if len(order) != len(by_id):
        cyclic = sorted(vid for vid, parents in remaining_parents.items() if parents)
        raise ValidationError(f"cycle detected in the parent graph among: {', '.join(cyclic)}")
    return tuple(order)


def _dense_table(cpt: Cpt, by_id: Mapping[str, Variable]) -> np.ndarray:
    child = by_id[cpt.child]
    parent_states = [by_id[p].states for p in cpt.parents]
    expected = set(itertools.product(*parent_states))
    got = set(cpt.rows)
    if got - expected:
        sample = next(iter(sorted(got - expected)))
        raise ValidationError(f"CPT for {cpt.child!r} has an extra row for {sample!r}")
    if expected - got:
        sample = next(iter(sorted(expected - got)))
        raise ValidationError(f"CPT for {cpt.child!r} is missing the row for {sample!r}")

    shape = tuple(len(states) for states in parent_states) + (child.cardinality,)
    table = np.empty(shape, dtype=float)
    for key, dist in cpt.rows.items():
        if len(dist) != child.cardinality:
            raise ValidationError(
                f"CPT row {key!r} for {cpt.child!r} has {len(dist)} entries, "
                f"expected {child.cardinality}"
            )
        if any(p < 0.0 or p > 1.0 for p in dist):
            raise ValidationError(f"CPT row {key!r} for {cpt.child!r} has entries outside [0, 1]")
        if abs(sum(dist) - 1.0) > ROW_SUM_TOLERANCE:
            raise ValidationError(
                f"CPT row {key!r} for {cpt.child!r} sums to {sum(dist)!r}, not 1"
            )
        index = tuple(states.index(state) for states, state in zip(parent_states, key))
        table[index] = dist
    return table


def joint_probability(net: BayesNet, assignment: Mapping[str, str]) -> float:
    """Probability of one full assignment: the product of matching CPT entries."""
    for var_id in assignment:
        net.variable(var_id)
    missing = [vid for vid in net.variable_ids if vid not in assignment]
    if missing:
        raise ValidationError(f"assignment is incomplete, missing: {', '.join(missing)}")
    product = 1.0
    for var in net.variables:
        cpt = net.cpts[var.id]
        index = tuple(
            net.state_index(parent, assignment[parent]) for parent in cpt.parents
        ) + (net.state_index(var.id, assignment[var.id]),)
        product *= net._tables[var.id][index]
    return product


# --- variable elimination ---------------------------------------------------


@dataclass
class _Factor:
    vars: tuple[str, ...]
    table: np.ndarray


def _restricted_factors(net: BayesNet, evidence: Evidence) -> list[_Factor]:
    ev_idx = {vid: net.state_index(vid, state) for vid, state in evidence.items()}
    factors: list[_Factor] = []
    for var in net.variables:
        cpt = net.cpts[var.id]
        scope = cpt.parents + (var.id,)
        table = net._tables[var.id]
        kept: list[str] = []
        slicer: list[object] = []
        for vid in scope:
            if vid in ev_idx:
                slicer.append(ev_idx[vid])
            else:
                kept.append(vid)
                slicer.append(slice(None))
        factors.append(_Factor(tuple(kept), table[tuple(slicer)]))
    return factors


def _contract(factors: Sequence[_Factor], out_vars: tuple[str, ...]) -> _Factor:
    """Multiply factors and project onto ``out_vars`` in a single einsum."""
    letters: dict[str, str] = {}
    for factor in factors:
        for vid in factor.vars:
            if vid not in letters:
                letters[vid] = chr(ord("a") + len(letters))
    if len(letters) > 26:
        raise ValidationError("factor contraction exceeds 26 distinct variables")
    spec = ",".join("".join(letters[v] for v in f.vars) for f in factors)
    out = "".join(letters[v] for v in out_vars)
    table = np.einsum(f"{spec}->{out}", *[f.table for f in factors])
    return _Factor(out_vars, table)


def elimination_order(
    net: BayesNet, query: str | Iterable[str], evidence: Evidence | None = None
) -> tuple[str, ...]:
    """Min-fill elimination order over the non-query, non-evidence variables.

    Ties on fill count break in variable-id order, which makes the order,
    and therefore every inference result, fully deterministic.
    """
    evidence = dict(evidence or {})
    query_set = {query} if isinstance(query, str) else set(query)
    for vid in itertools.chain(query_set, evidence):
        net.variable(vid)

    nodes = [vid for vid in net.variable_ids if vid not in evidence]
    neighbours: dict[str, set[str]] = {vid: set() for vid in nodes}
    for var in net.variables:
        scope = [v for v in net.cpts[var.id].parents + (var.id,) if v not in evidence]
        for a, b in itertools.combinations(scope, 2):
            neighbours[a].add(b)
            neighbours[b].add(a)

    to_eliminate = {vid for vid in nodes if vid not in query_set}
    order: list[str] = []
    while to_eliminate:
        def fill(vid: str) -> int:
            around = neighbours[vid]
            return sum(
                1 for a, b in itertools.combinations(sorted(around), 2)
                if b not in neighbours[a]
            )

        chosen = min(to_eliminate, key=lambda vid: (fill(vid), vid))
        order.append(chosen)
        around = neighbours.pop(chosen)
        for a in around:
            neighbours[a].discard(chosen)
        for a, b in itertools.combinations(sorted(around), 2):
            neighbours[a].add(b)
            neighbours[b].add(a)
        to_eliminate.remove(chosen)
    return tuple(order)


def _eliminate_all(factors: list[_Factor], order: Sequence[str]) -> list[_Factor]:
    for vid in order:
        related = [f for f in factors if vid in f.vars]
        if not related:
            continue
        out_vars = tuple(
            dict.fromkeys(v for f in related for v in f.vars if v != vid)
        )
        merged = _contract(related, out_vars)
        factors = [f for f in factors if vid not in f.vars]
        factors.append(merged)
    return factors


def marginal(net: BayesNet, target: str, evidence: Evidence | None = None) -> Distribution:
    """Exact ``P(target | evidence)`` by variable elimination.

    With empty evidence this is the prior marginal. Evidence whose own
    probability is zero raises :class:`ZeroEvidenceError` instead of
    returning an all-zero distribution: silently propagating an impossible
    observation would corrupt downstream safety figures.
    """
    evidence = dict(evidence or {})
    var = net.variable(target)
    for vid, state in evidence.items():
        net.state_index(vid, state)

    factors = _restricted_factors(net, evidence)
    if target in evidence:
        # still charge for the evidence check so impossible observations fail
        remaining = _eliminate_all(factors, elimination_order(net, (), evidence))
        z = float(_contract(remaining, ()).table)
        if z <= 0.0:
            raise ZeroEvidenceError(f"evidence {evidence!r} has probability 0")
        probs = {s: (1.0 if s == evidence[target] else 0.0) for s in var.states}
        return Distribution(target, probs)

    order = elimination_order(net, target, evidence)
    remaining = _eliminate_all(factors, order)
    vector = _contract(remaining, (target,)).table
    z = float(vector.sum())
    if z <= 0.0:
        raise ZeroEvidenceError(f"evidence {evidence!r} has probability 0")
    return Distribution(target, dict(zip(var.states, (vector / z).tolist())))


def posterior_report(net: BayesNet, evidence: Evidence) -> list[Distribution]:
    """Posterior of every non-evidence variable, ordered by variable id."""
    evidence = dict(evidence)
    for vid, state in evidence.items():
        net.state_index(vid, state)
    return [
        marginal(net, vid, evidence)
        for vid in sorted(net.variable_ids)
        if vid not in evidence
    ]
