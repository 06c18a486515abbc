"""Independent oracles and randomized generators used across the test suite.

Everything here deliberately avoids the library's solver code paths:
marginals come from a dense full-joint tensor, steady states from a plain
linear solve, and the five-state chain from a hand-derived closed form.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from redvote import bayes, compose, ctmc
from redvote.nmr import FailureParams


# --- Bayesian network oracle --------------------------------------------------


def full_joint(net: bayes.BayesNet) -> np.ndarray:
    """Dense joint tensor with one axis per variable, in declaration order."""
    ids = list(net.variable_ids)
    axis = {vid: i for i, vid in enumerate(ids)}
    shape = tuple(net.variable(vid).cardinality for vid in ids)
    joint = np.ones(shape)
    for vid in ids:
        cpt = net.cpts[vid]
        scope = cpt.parents + (vid,)
        table = np.ones([net.variable(v).cardinality if v in scope else 1 for v in ids])
        for key, dist in cpt.rows.items():
            index: list = [slice(None)] * len(ids)
            for parent, state in zip(cpt.parents, key):
                index[axis[parent]] = net.state_index(parent, state)
            for si, p in enumerate(dist):
                idx = list(index)
                idx[axis[vid]] = si
                table[tuple(idx)] = p
        joint = joint * table
    return joint


def enum_marginal(
    net: bayes.BayesNet, target: str, evidence: dict[str, str] | None = None
) -> np.ndarray:
    """P(target | evidence) by summing the full joint; independent of VE."""
    evidence = evidence or {}
    ids = list(net.variable_ids)
    joint = full_joint(net)
    index: list = [slice(None)] * len(ids)
    for vid, state in evidence.items():
        index[ids.index(vid)] = net.state_index(vid, state)
    sliced = joint[tuple(index)]
    kept = [vid for vid in ids if vid not in evidence]
    keep_axis = kept.index(target)
    other_axes = tuple(i for i in range(len(kept)) if i != keep_axis)
    vector = sliced.sum(axis=other_axes)
    return vector / vector.sum()


def random_net(rng: random.Random, max_nodes: int = 8) -> bayes.BayesNet:
    """A random binary-variable DAG with strictly positive CPT entries."""
    n = rng.randint(1, max_nodes)
    ids = [f"V{i}" for i in range(n)]
    variables = [bayes.Variable(vid, ("False", "True")) for vid in ids]
    cpts = []
    for i, vid in enumerate(ids):
        pool = ids[:i]
        parents = tuple(sorted(rng.sample(pool, k=rng.randint(0, min(3, len(pool))))))
        rows = {}
        parent_states = [("False", "True")] * len(parents)
        for combo in itertools.product(*parent_states):
            p = rng.uniform(0.05, 0.95)
            rows[combo] = (1.0 - p, p)
        cpts.append(bayes.Cpt(vid, parents, rows))
    return bayes.build_net(variables, cpts)


def random_evidence(rng: random.Random, net: bayes.BayesNet, spare: str) -> dict[str, str]:
    """Evidence over a random subset of variables, never covering ``spare``."""
    candidates = [vid for vid in net.variable_ids if vid != spare]
    chosen = rng.sample(candidates, k=rng.randint(0, len(candidates)))
    return {vid: rng.choice(net.variable(vid).states) for vid in chosen}


# --- CTMC oracles ---------------------------------------------------------------


def dense_steady_state(chain: ctmc.Ctmc) -> np.ndarray:
    """Solve pi.Q = 0, sum(pi) = 1 with a plain dense linear solve."""
    q = ctmc.generator(chain)
    a = q.T.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(len(chain.states))
    rhs[-1] = 1.0
    return np.linalg.solve(a, rhs)


def random_irreducible_chain(rng: random.Random, max_states: int = 10) -> ctmc.Ctmc:
    """Random chain made irreducible by a full cycle, with moderate rates."""
    n = rng.randint(2, max_states)
    states = tuple(f"S{i}" for i in range(n))
    pairs = {(i, (i + 1) % n) for i in range(n)}
    extra = rng.randint(0, n * (n - 1) // 2)
    for _ in range(extra):
        i, j = rng.randrange(n), rng.randrange(n)
        if i != j:
            pairs.add((i, j))
    transitions = tuple(
        ctmc.Transition(states[i], states[j], rng.uniform(0.1, 10.0))
        for i, j in sorted(pairs)
    )
    return ctmc.Ctmc(states, states[0], transitions)


def five_state_pi3(
    par4: float, par5: float, par6: float, par7: float, par8: float, par9: float
) -> float:
    """Closed-form steady-state probability of S3 for the five-state chain.

    Derived by eliminating S4 (everything entering it returns to S3) and
    solving the remaining balance equations with pi(S0) = 1, then
    normalizing. Exact, so it doubles as a solver oracle.
    """
    a = 2.0 * par4 - par5
    b = par5
    k = (par7 * par6 + par8) / (par6 + par8)
    pi1 = a / (par6 + b)
    pi3 = b * (1.0 + pi1 * k) / (a * (1.0 - k))
    pi2 = (pi1 * b + pi3 * a) / (par6 + par8)
    pi4 = (pi2 + pi3) * par8 / par9 if par9 > 0 else 0.0
    return pi3 / (1.0 + pi1 + pi2 + pi3 + pi4)


# --- failure-model closed forms ---------------------------------------------


def uncorr_probability(p: FailureParams) -> float:
    """Single-unit incorrect-output probability, by direct arithmetic."""
    transient = p.par1 * p.transient_ratio * p.p_activate
    permanent = p.par1 * (1.0 - p.transient_ratio) * (p.par2 + (1.0 - p.par2) * p.p_miss)
    return transient + permanent


def unsafe_probability(u: float, same: float, excl: float) -> float:
    """Hazard probability by enumerating the sink's five independent parents."""
    total = 0.0
    for ua, ub, so, ea, eb in itertools.product((0, 1), repeat=5):
        if not ((ua and ub and so) or (ua and ea) or (ub and eb)):
            continue
        prob = (u if ua else 1.0 - u) * (u if ub else 1.0 - u)
        prob *= (same if so else 1.0 - same)
        prob *= (excl if ea else 1.0 - excl) * (excl if eb else 1.0 - excl)
        total += prob
    return total


# --- randomized workflows -----------------------------------------------------


def random_workflow(rng: random.Random) -> compose.Workflow:
    """A random structurally valid workflow mixing builtin and inline models."""
    classes: list[compose.ModelClass] = []
    instances: list[compose.ModelInstance] = []
    exports: list[compose.Export] = []

    def rand_literal() -> compose.Literal:
        return compose.Literal(round(rng.uniform(0.0, 1.0), rng.randint(0, 6)))

    n_inline = rng.randint(0, 2)
    for ci in range(n_inline):
        if rng.random() < 0.5:
            n_states = rng.randint(1, 4)
            states = tuple(f"N{ci}S{i}" for i in range(n_states))
            rates = []
            for i in range(n_states):
                for j in range(n_states):
                    if i != j and rng.random() < 0.6:
                        expr: compose.Expr
                        if rng.random() < 0.5:
                            expr = compose.Literal(round(rng.uniform(0.1, 5.0), 3))
                        else:
                            expr = compose.BinOp(
                                rng.choice("+*"),
                                compose.Param(f"K{ci}"),
                                compose.Literal(round(rng.uniform(0.1, 2.0), 3)),
                            )
                        rates.append((states[i], states[j], expr))
            template: compose.InlineCtmc | compose.InlineBayes = compose.InlineCtmc(
                f"chain{ci}", states, states[0], tuple(rates)
            )
        else:
            nodes = []
            n_nodes = rng.randint(1, 3)
            for ni in range(n_nodes):
                parents = tuple(f"X{ci}_{k}" for k in range(ni) if rng.random() < 0.5)
                width = 2 ** len(parents)
                cpt = []
                for _ in range(width):
                    p = round(rng.uniform(0.05, 0.95), 4)
                    cpt += [1.0 - p, p]
                nodes.append(
                    compose.InlineNode(f"X{ci}_{ni}", ("False", "True"), parents, tuple(cpt))
                )
            template = compose.InlineBayes(f"net{ci}", tuple(nodes))
        classes.append(compose.class_from_inline(template))

    available: list[tuple[str, str]] = []  # (instance, output)
    for ii in range(rng.randint(0, 3)):
        pool = list(compose.builtin_classes().values()) + classes
        cls = rng.choice(pool)
        bindings: dict[str, compose.Expr] = {}
        for decl in cls.inputs:
            if available and rng.random() < 0.4:
                src = rng.choice(available)
                bindings[decl.name] = compose.Ref(*src)
            else:
                bindings[decl.name] = rand_literal()
        name = f"inst{ii}"
        instances.append(compose.ModelInstance(name, cls.name, bindings))
        available += [(name, out.name) for out in cls.outputs]

    for ei in range(rng.randint(0, 3)):
        if not available:
            break
        src = rng.choice(available)
        expr = compose.Ref(*src)
        if rng.random() < 0.5:
            expr = compose.BinOp(rng.choice("+-*/"), expr, compose.Literal(3.0))
        exports.append(compose.Export(f"out{ei}", expr))

    return compose.Workflow(f"random-{rng.randint(0, 10**6)}", tuple(classes),
                            tuple(instances), tuple(exports))
