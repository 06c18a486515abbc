"""Model classes, parameter bindings, and sequential workflow composition.

A workflow is a DAG of model instances. Each instance belongs to a model
class (a builtin template or a model defined inline in the same file) that
declares typed input and output parameters. Inputs are bound to literals or
to scalar expressions over other instances' outputs; running the workflow
solves the instances in topological order, feeding solved outputs forward,
then evaluates the exported expressions.

Only this results-feed-instantiation style of composition is implemented;
operators that rewrite the composed models themselves are out of scope, as
is any coupling through shared states or actions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from . import bayes, ctmc, nmr
from .errors import RedvoteError, SolverError, ValidationError

KINDS = ("probability", "rate", "ratio")


# --- scalar expressions ------------------------------------------------------


class Expr:
    """Base class of the scalar expression AST (+, -, *, / and constants)."""

    __slots__ = ()


@dataclass(frozen=True)
class Literal(Expr):
    value: float


@dataclass(frozen=True)
class Ref(Expr):
    """A reference to another instance's output parameter."""

    instance: str
    output: str


@dataclass(frozen=True)
class Param(Expr):
    """A bare parameter name; only valid inside inline model rate expressions."""

    name: str


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr


def expr_refs(expr: Expr) -> Iterator[Ref]:
    if isinstance(expr, Ref):
        yield expr
    elif isinstance(expr, BinOp):
        yield from expr_refs(expr.left)
        yield from expr_refs(expr.right)


def expr_params(expr: Expr) -> Iterator[Param]:
    if isinstance(expr, Param):
        yield expr
    elif isinstance(expr, BinOp):
        yield from expr_params(expr.left)
        yield from expr_params(expr.right)


def eval_expr(expr: Expr, lookup: Callable[[Expr], float]) -> float:
    """Evaluate an expression; Ref and Param leaves resolve through ``lookup``."""
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, (Ref, Param)):
        return lookup(expr)
    if isinstance(expr, BinOp):
        left = eval_expr(expr.left, lookup)
        right = eval_expr(expr.right, lookup)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        if expr.op == "/":
            if right == 0.0:
                raise SolverError("division by zero in a binding or export expression")
            return left / right
        raise ValidationError(f"unknown operator {expr.op!r}")
    raise ValidationError(f"unknown expression node {expr!r}")


# --- inline model templates --------------------------------------------------


@dataclass(frozen=True)
class InlineCtmc:
    """A chain defined inline; rates may reference the class's input parameters."""

    name: str
    states: tuple[str, ...]
    initial: str
    rates: tuple[tuple[str, str, Expr], ...]


@dataclass(frozen=True)
class InlineNode:
    id: str
    states: tuple[str, ...]
    parents: tuple[str, ...]
    cpt: tuple[float, ...]


@dataclass(frozen=True)
class InlineBayes:
    """A network defined inline; tables are flat numeric lists, so no inputs."""

    name: str
    nodes: tuple[InlineNode, ...]


# --- model classes and workflows ---------------------------------------------


@dataclass(frozen=True)
class ParamDecl:
    name: str
    direction: str  # "input" or "output"
    kind: str | None = None  # None means unkinded (inline-model parameters)

    def __post_init__(self) -> None:
        if self.direction not in ("input", "output"):
            raise ValidationError(f"parameter direction must be input/output, got {self.direction!r}")
        if self.kind is not None and self.kind not in KINDS:
            raise ValidationError(f"unknown parameter kind {self.kind!r}")


@dataclass(frozen=True)
class ModelClass:
    """A solvable, parameterized model template with a declared interface."""

    name: str
    formalism: str  # "BAYES" or "CTMC"
    params: tuple[ParamDecl, ...]
    template: str | InlineCtmc | InlineBayes

    def __post_init__(self) -> None:
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValidationError(f"model class {self.name!r} repeats a parameter name")

    @property
    def inputs(self) -> tuple[ParamDecl, ...]:
        return tuple(p for p in self.params if p.direction == "input")

    @property
    def outputs(self) -> tuple[ParamDecl, ...]:
        return tuple(p for p in self.params if p.direction == "output")

    def output_kind(self, name: str) -> str | None:
        for p in self.outputs:
            if p.name == name:
                return p.kind
        raise ValidationError(f"model class {self.name!r} has no output {name!r}")


@dataclass(frozen=True)
class ModelInstance:
    name: str
    class_name: str
    bindings: Mapping[str, Expr]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bindings", dict(self.bindings))


@dataclass(frozen=True)
class Export:
    name: str
    expr: Expr


@dataclass(frozen=True)
class Workflow:
    """A named DAG of model instances plus exported output expressions."""

    name: str
    classes: tuple[ModelClass, ...] = ()
    instances: tuple[ModelInstance, ...] = ()
    exports: tuple[Export, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "exports", tuple(self.exports))


@dataclass(frozen=True)
class SolveResult:
    """Solved output values per instance, export values, and provenance notes."""

    instances: Mapping[str, Mapping[str, float]]
    exports: Mapping[str, float]
    provenance: tuple[str, ...]


def builtin_classes() -> dict[str, ModelClass]:
    """Model classes for the registered builtin templates."""
    classes: dict[str, ModelClass] = {}
    for name, spec in nmr.BUILTIN_TEMPLATES.items():
        params = tuple(
            ParamDecl(pname, "input", kind) for pname, kind in spec.inputs
        ) + tuple(ParamDecl(pname, "output", kind) for pname, kind in spec.outputs)
        classes[name] = ModelClass(name, spec.formalism, params, name)
    return classes


def class_from_inline(template: InlineCtmc | InlineBayes) -> ModelClass:
    """Derive the interface of an inline model definition.

    Inline chain inputs are the free parameter names of its rate expressions,
    in first appearance order, left unkinded so that quantities of any kind
    can feed a rate formula. Outputs are the steady-state probability of each
    state (``pi_<state>``) for chains and every per-state marginal
    (``p_<node>_<state>``) for networks.
    """
    params: list[ParamDecl] = []
    if isinstance(template, InlineCtmc):
        seen: dict[str, None] = {}
        for src, dst, expr in template.rates:
            for ref in expr_refs(expr):
                raise ValidationError(
                    f"inline model {template.name!r}: rate {src} -> {dst} references "
                    f"{ref.instance}.{ref.output}; rate expressions may only use "
                    "the model's own parameters"
                )
            for p in expr_params(expr):
                seen.setdefault(p.name, None)
        params.extend(ParamDecl(name, "input", None) for name in seen)
        params.extend(
            ParamDecl(f"pi_{state}", "output", "probability") for state in template.states
        )
        return ModelClass(template.name, "CTMC", tuple(params), template)
    if isinstance(template, InlineBayes):
        for node in template.nodes:
            params.extend(
                ParamDecl(f"p_{node.id}_{state}", "output", "probability")
                for state in node.states
            )
        return ModelClass(template.name, "BAYES", tuple(params), template)
    raise ValidationError(f"unknown inline template {template!r}")


def inline_bayes_net(template: InlineBayes) -> bayes.BayesNet:
    """Instantiate an inline network definition; raises on malformed tables."""
    variables = []
    cpts = []
    node_states = {node.id: node.states for node in template.nodes}
    for node in template.nodes:
        variables.append(bayes.Variable(node.id, node.states))
        for parent in node.parents:
            if parent not in node_states:
                raise ValidationError(
                    f"inline model {template.name!r}: node {node.id!r} references "
                    f"unknown parent {parent!r}"
                )
        parent_states = [node_states[p] for p in node.parents]
        combos = list(itertools.product(*parent_states))
        expected = len(combos) * len(node.states)
        if len(node.cpt) != expected:
            raise ValidationError(
                f"inline model {template.name!r}: node {node.id!r} needs {expected} "
                f"table entries, got {len(node.cpt)}"
            )
        rows = {}
        width = len(node.states)
        for i, combo in enumerate(combos):
            rows[combo] = tuple(node.cpt[i * width:(i + 1) * width])
        cpts.append(bayes.Cpt(node.id, node.parents, rows))
    return bayes.build_net(variables, cpts)


# --- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class ValidatedWorkflow:
    """A workflow with its class map resolved and topological order cached."""

    workflow: Workflow
    order: tuple[str, ...]
    class_map: Mapping[str, ModelClass] = field(compare=False)

    def instance_class(self, instance: ModelInstance) -> ModelClass:
        return self.class_map[instance.class_name]


def _resolve_classes(workflow: Workflow) -> dict[str, ModelClass]:
    classes = builtin_classes()
    for cls in workflow.classes:
        if cls.name in classes:
            raise ValidationError(
                f"model {cls.name!r} shadows a builtin template of the same name"
            )
        classes[cls.name] = cls
    return classes


def _check_bindings(
    instance: ModelInstance,
    cls: ModelClass,
    by_name: Mapping[str, ModelInstance],
    classes: Mapping[str, ModelClass],
) -> None:
    declared = {p.name: p for p in cls.inputs}
    for pname in instance.bindings:
        if pname not in declared:
            raise ValidationError(
                f"instance {instance.name!r} binds unknown input {pname!r} "
                f"of class {cls.name!r}"
            )
    unbound = [p.name for p in cls.inputs if p.name not in instance.bindings]
    if unbound:
        raise ValidationError(
            f"instance {instance.name!r} leaves inputs unbound: {', '.join(unbound)}"
        )
    for pname, expr in instance.bindings.items():
        decl = declared[pname]
        for param in expr_params(expr):
            raise ValidationError(
                f"instance {instance.name!r}: binding for {pname!r} uses bare "
                f"name {param.name!r}; workflow bindings must reference "
                "instance outputs as <instance>.<output>"
            )
        for ref in expr_refs(expr):
            if ref.instance not in by_name:
                raise ValidationError(
                    f"instance {instance.name!r}: binding for {pname!r} references "
                    f"unknown instance {ref.instance!r}"
                )
            src_cls = classes[by_name[ref.instance].class_name]
            src_kind = src_cls.output_kind(ref.output)  # raises if absent
            if isinstance(expr, Ref) and src_kind and decl.kind and src_kind != decl.kind:
                raise ValidationError(
                    f"instance {instance.name!r}: input {pname!r} expects a "
                    f"{decl.kind}, but {ref.instance}.{ref.output} is a {src_kind}"
                )
        if isinstance(expr, Literal):
            if decl.kind in ("probability", "ratio") and not 0.0 <= expr.value <= 1.0:
                raise ValidationError(
                    f"instance {instance.name!r}: {decl.kind} input {pname!r} "
                    f"must lie in [0, 1], got {expr.value!r}"
                )
            if decl.kind == "rate" and expr.value < 0.0:
                raise ValidationError(
                    f"instance {instance.name!r}: rate input {pname!r} "
                    f"must be non-negative, got {expr.value!r}"
                )


def _topological_order(workflow: Workflow) -> tuple[str, ...]:
    names = [inst.name for inst in workflow.instances]
    deps: dict[str, set[str]] = {name: set() for name in names}
    for inst in workflow.instances:
        for expr in inst.bindings.values():
            for ref in expr_refs(expr):
                deps[inst.name].add(ref.instance)
    order: list[str] = []
    ready = [name for name in names if not deps[name]]
    remaining = {name: set(d) for name, d in deps.items()}
    while ready:
        name = ready.pop(0)
        order.append(name)
        for other in names:
            if name in remaining.get(other, ()):
                remaining[other].discard(name)
                if not remaining[other] and other not in order and other not in ready:
                    ready.append(other)
    if len(order) != len(names):
        cycle = _find_cycle(deps)
        raise ValidationError(f"binding cycle: {' -> '.join(cycle)}")
    return tuple(order)


def _find_cycle(deps: Mapping[str, set[str]]) -> list[str]:
    visiting: list[str] = []
    done: set[str] = set()

    def walk(node: str) -> list[str] | None:
        if node in visiting:
            return visiting[visiting.index(node):] + [node]
        if node in done:
            return None
        visiting.append(node)
        for dep in sorted(deps.get(node, ())):
            found = walk(dep)
            if found:
                return found
        visiting.pop()
        done.add(node)
        return None

    for name in sorted(deps):
        found = walk(name)
        if found:
            return found
    return ["<unknown>"]


def validate_workflow(workflow: Workflow) -> ValidatedWorkflow:
    """Check every workflow invariant and cache the topological solve order.

    Raises:
        ValidationError: duplicate names, unknown classes or templates,
            unbound or unknown inputs, kind mismatches on direct
            output-to-input references, dangling export references, or a
            cyclic binding graph.
    """
    classes = _resolve_classes(workflow)

    by_name: dict[str, ModelInstance] = {}
    for inst in workflow.instances:
        if inst.name in by_name:
            raise ValidationError(f"duplicate instance name {inst.name!r}")
        by_name[inst.name] = inst
    for inst in workflow.instances:
        if inst.class_name not in classes:
            raise ValidationError(
                f"instance {inst.name!r} references unknown model class or "
                f"template {inst.class_name!r}"
            )

    # inline networks are input-free, so their tables can be checked statically
    for cls in workflow.classes:
        if isinstance(cls.template, InlineBayes):
            inline_bayes_net(cls.template)

    for inst in workflow.instances:
        _check_bindings(inst, classes[inst.class_name], by_name, classes)

    seen_exports: set[str] = set()
    for export in workflow.exports:
        if export.name in seen_exports:
            raise ValidationError(f"duplicate export name {export.name!r}")
        seen_exports.add(export.name)
        for param in expr_params(export.expr):
            raise ValidationError(
                f"export {export.name!r} uses bare name {param.name!r}; exports "
                "must reference instance outputs as <instance>.<output>"
            )
        for ref in expr_refs(export.expr):
            if ref.instance not in by_name:
                raise ValidationError(
                    f"export {export.name!r} references unknown instance {ref.instance!r}"
                )
            classes[by_name[ref.instance].class_name].output_kind(ref.output)

    order = _topological_order(workflow)
    return ValidatedWorkflow(workflow, order, classes)


# --- execution ----------------------------------------------------------------


def _solve_instance(
    inst: ModelInstance,
    cls: ModelClass,
    values: Mapping[str, float],
) -> tuple[dict[str, float], str]:
    if isinstance(cls.template, str):
        spec = nmr.BUILTIN_TEMPLATES[cls.template]
        outputs = spec.solve(values)
        return outputs, f"{inst.name}: {cls.name} via {spec.description}"
    if isinstance(cls.template, InlineCtmc):
        template = cls.template
        transitions = []
        for src, dst, expr in template.rates:
            rate = eval_expr(expr, lambda leaf: values[leaf.name])
            if rate < 0.0:
                raise SolverError(
                    f"rate {src} -> {dst} evaluated to {rate!r}; rates must not be negative"
                )
            if rate > 0.0:
                transitions.append(ctmc.Transition(src, dst, rate))
        chain = ctmc.Ctmc(template.states, template.initial, tuple(transitions))
        pi = ctmc.steady_state(chain)
        outputs = {f"pi_{state}": pi[state] for state in template.states}
        return outputs, f"{inst.name}: inline chain {template.name} via GTH steady state"
    if isinstance(cls.template, InlineBayes):
        net = inline_bayes_net(cls.template)
        outputs = {}
        for node in cls.template.nodes:
            dist = bayes.marginal(net, node.id)
            for state in node.states:
                outputs[f"p_{node.id}_{state}"] = dist[state]
        return outputs, (
            f"{inst.name}: inline network {cls.template.name} via variable elimination"
        )
    raise ValidationError(f"instance {inst.name!r} has an unsolvable template")


def run_workflow(
    workflow: Workflow | ValidatedWorkflow,
    order: Sequence[str] | None = None,
) -> SolveResult:
    """Solve all instances in topological order and evaluate the exports.

    The result is fully deterministic, and identical for every admissible
    topological order. ``order`` overrides the cached order, mainly so that
    order-independence can be exercised; it must be a valid topological
    order of the instance dependency graph.
    """
    validated = workflow if isinstance(workflow, ValidatedWorkflow) else validate_workflow(workflow)
    wf = validated.workflow
    by_name = {inst.name: inst for inst in wf.instances}

    solve_order = tuple(order) if order is not None else validated.order
    if order is not None:
        if sorted(solve_order) != sorted(validated.order):
            raise ValidationError("order must be a permutation of the workflow's instances")
        seen: set[str] = set()
        for name in solve_order:
            for expr in by_name[name].bindings.values():
                for ref in expr_refs(expr):
                    if ref.instance not in seen:
                        raise ValidationError(
                            f"order is not topological: {name!r} runs before {ref.instance!r}"
                        )
            seen.add(name)

    solved: dict[str, dict[str, float]] = {}
    notes: list[str] = []

    def lookup(leaf: Expr) -> float:
        assert isinstance(leaf, Ref)
        return solved[leaf.instance][leaf.output]

    for name in solve_order:
        inst = by_name[name]
        cls = validated.instance_class(inst)
        values = {pname: eval_expr(expr, lookup) for pname, expr in inst.bindings.items()}
        try:
            outputs, note = _solve_instance(inst, cls, values)
        except RedvoteError as exc:
            raise SolverError(f"instance {inst.name!r}: {exc}") from exc
        solved[name] = outputs
        notes.append(note)

    exports = {
        export.name: eval_expr(export.expr, lookup) for export in wf.exports
    }
    return SolveResult(instances=solved, exports=exports, provenance=tuple(notes))


def sweep(
    workflow: Workflow | ValidatedWorkflow,
    parameter: str,
    factors: Iterable[float],
) -> list[SolveResult]:
    """Re-run the workflow with a literal-bound input scaled by each factor.

    ``parameter`` is an ``instance.input`` path. Reference-bound inputs are
    derived values and cannot be swept; asking for one is an error.
    """
    validated = workflow if isinstance(workflow, ValidatedWorkflow) else validate_workflow(workflow)
    wf = validated.workflow
    if "." not in parameter:
        raise ValidationError(
            f"sweep parameter must look like <instance>.<input>, got {parameter!r}"
        )
    inst_name, pname = parameter.split(".", 1)
    by_name = {inst.name: inst for inst in wf.instances}
    if inst_name not in by_name:
        raise ValidationError(f"sweep references unknown instance {inst_name!r}")
    inst = by_name[inst_name]
    if pname not in inst.bindings:
        raise ValidationError(
            f"instance {inst_name!r} has no binding for input {pname!r}"
        )
    binding = inst.bindings[pname]
    if not isinstance(binding, Literal):
        raise ValidationError(
            f"{parameter} is not literal-bound; a derived value cannot be swept"
        )

    results: list[SolveResult] = []
    for factor in factors:
        bindings = dict(inst.bindings)
        bindings[pname] = Literal(binding.value * float(factor))
        new_inst = replace(inst, bindings=bindings)
        instances = tuple(new_inst if i.name == inst_name else i for i in wf.instances)
        scaled = replace(wf, instances=instances)
        results.append(run_workflow(scaled))
    return results
