"""Command-line driver for `.rvm` workflow files.

Commands: ``solve``, ``posteriors``, ``sweep``, ``validate``. Exit codes
are fixed: 0 success (and verdict pass), 2 parse failure, 3 validation
failure, 4 numeric or solver failure, 5 verdict fail against a supplied
threshold. Set ``REDVOTE_NO_COLOR`` to disable ANSI styling.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__, bayes, compose, dsl, nmr, report
from .errors import SolverError, ValidationError, ZeroEvidenceError

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4
EXIT_VERDICT = 5


def _use_color(stream) -> bool:
    if os.environ.get("REDVOTE_NO_COLOR"):
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(path: str) -> tuple[bytes, compose.Workflow] | int:
    """Read and parse a workflow file; on failure print diagnostics and
    return the exit code."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        print(f"{path}:1:1: error: cannot read file: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        print(f"{path}:1:1: error: not valid UTF-8: {exc.reason}", file=sys.stderr)
        return EXIT_PARSE
    result = dsl.parse(text, origin=path)
    if not result.ok:
        for line in result.rendered_diagnostics():
            print(line, file=sys.stderr)
        return EXIT_PARSE
    return data, result.workflow


def _verdict_metric(workflow: compose.Workflow) -> str:
    names = [export.name for export in workflow.exports]
    if "HFR_2oo3" in names:
        return "HFR_2oo3"
    if len(names) == 1:
        return names[0]
    raise ValidationError(
        "cannot pick a verdict metric: export one value or name one export HFR_2oo3"
    )


def _base_report(
    workflow: compose.Workflow, data: bytes, result: compose.SolveResult
) -> report.AnalysisReport:
    return report.AnalysisReport(
        workflow=workflow.name,
        tool_version=__version__,
        input_digest=report.input_digest(data),
        generated_at=report.timestamp(),
        instances={name: dict(outputs) for name, outputs in result.instances.items()},
        exports=dict(result.exports),
        provenance=list(result.provenance),
    )


def cmd_solve(args: argparse.Namespace) -> int:
    loaded = _load(args.file)
    if isinstance(loaded, int):
        return loaded
    data, workflow = loaded

    validated = compose.validate_workflow(workflow)
    if args.threshold is not None:
        metric = _verdict_metric(workflow)  # fail fast before solving
    result = compose.run_workflow(validated)

    rep = _base_report(workflow, data, result)
    code = EXIT_OK
    if args.threshold is not None:
        value = result.exports[metric]
        rep.threshold = args.threshold
        rep.verdict_metric = metric
        rep.verdict = "PASS" if value <= args.threshold else "FAIL"
        rep.sil_note = report.sil_band_note(value)
        if rep.verdict == "FAIL":
            code = EXIT_VERDICT

    if args.format == "json":
        _emit(report.to_json(rep), args.out)
    elif args.format == "csv":
        _emit(report.render_csv(rep), args.out)
    else:
        _emit(report.render_text(rep, color=_use_color(sys.stdout) and not args.out), args.out)
    return code


def _failure_net_for_instance(
    validated: compose.ValidatedWorkflow,
    result: compose.SolveResult,
    instance_name: str,
) -> bayes.BayesNet:
    by_name = {inst.name: inst for inst in validated.workflow.instances}
    if instance_name not in by_name:
        raise ValidationError(f"unknown instance {instance_name!r}")
    inst = by_name[instance_name]
    cls = validated.instance_class(inst)
    if cls.formalism != "BAYES":
        raise ValidationError(
            f"instance {instance_name!r} is a {cls.formalism} model; "
            "posteriors need a BAYES instance"
        )

    def lookup(leaf: compose.Expr) -> float:
        assert isinstance(leaf, compose.Ref)
        return result.instances[leaf.instance][leaf.output]

    values = {
        pname: compose.eval_expr(expr, lookup) for pname, expr in inst.bindings.items()
    }
    if isinstance(cls.template, compose.InlineBayes):
        return compose.inline_bayes_net(cls.template)
    params = nmr.FailureParams(values["PAR_1"], values["PAR_2"], values["PAR_3"])
    return nmr.build_failure_bn(params)


def cmd_posteriors(args: argparse.Namespace) -> int:
    loaded = _load(args.file)
    if isinstance(loaded, int):
        return loaded
    data, workflow = loaded

    evidence: dict[str, str] = {}
    for item in args.evidence or []:
        if "=" not in item:
            print(f"error: evidence must look like NODE=STATE, got {item!r}", file=sys.stderr)
            return EXIT_VALIDATION
        node, state = item.split("=", 1)
        evidence[node.strip()] = state.strip()

    validated = compose.validate_workflow(workflow)
    result = compose.run_workflow(validated)
    net = _failure_net_for_instance(validated, result, args.instance)

    table: dict[str, dict[str, float]] = {}
    for var_id in sorted(net.variable_ids):
        dist = bayes.marginal(net, var_id, evidence)
        table[var_id] = dict(dist.probabilities)

    rep = _base_report(workflow, data, result)
    rep.posteriors = table
    if args.format == "json":
        _emit(report.to_json(rep), args.out)
    elif args.format == "csv":
        _emit(report.render_csv(rep), args.out)
    else:
        _emit(report.render_text(rep, color=_use_color(sys.stdout) and not args.out), args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    loaded = _load(args.file)
    if isinstance(loaded, int):
        return loaded
    data, workflow = loaded

    try:
        factors = [float(f) for f in args.factors.split(",") if f.strip()]
    except ValueError:
        print(f"error: --factors must be comma-separated numbers, got {args.factors!r}",
              file=sys.stderr)
        return EXIT_PARSE
    if not factors:
        print("error: --factors is empty", file=sys.stderr)
        return EXIT_PARSE

    validated = compose.validate_workflow(workflow)
    results = compose.sweep(validated, args.param, factors)

    rep = report.SweepReport(
        workflow=workflow.name,
        parameter=args.param,
        tool_version=__version__,
        input_digest=report.input_digest(data),
        generated_at=report.timestamp(),
        export_names=[export.name for export in workflow.exports],
        rows=[
            {"factor": factor, "exports": dict(result.exports)}
            for factor, result in zip(factors, results)
        ],
    )
    if args.format == "json":
        _emit(report.sweep_to_json(rep), args.out)
    elif args.format == "csv":
        _emit(report.render_sweep_csv(rep), args.out)
    else:
        _emit(report.render_sweep_text(rep), args.out)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    loaded = _load(args.file)
    if isinstance(loaded, int):
        return loaded
    _, workflow = loaded
    compose.validate_workflow(workflow)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="redvote",
        description="Solve hazard-rate workflows over voting-architecture models.",
    )
    parser.add_argument("--version", action="version", version=f"redvote {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("file", help="workflow file (.rvm)")
        p.add_argument("--format", choices=("text", "json", "csv"), default="text")
        p.add_argument("--out", help="write the report to this path instead of stdout")

    p_solve = sub.add_parser("solve", help="run a workflow and report its figures")
    add_common(p_solve)
    p_solve.add_argument(
        "--threshold", type=float,
        help="tolerable hazard rate per hour; adds a PASS/FAIL verdict",
    )
    p_solve.set_defaults(func=cmd_solve)

    p_post = sub.add_parser("posteriors", help="per-variable posteriors of a network instance")
    add_common(p_post)
    p_post.add_argument("--instance", required=True, help="name of a BAYES instance")
    p_post.add_argument(
        "--evidence", action="append", metavar="NODE=STATE",
        help="observed state, repeatable",
    )
    p_post.set_defaults(func=cmd_posteriors)

    p_sweep = sub.add_parser("sweep", help="re-run a workflow with a scaled input")
    add_common(p_sweep)
    p_sweep.add_argument("--param", required=True, metavar="INSTANCE.INPUT",
                         help="literal-bound input to scale")
    p_sweep.add_argument("--factors", required=True,
                         help="comma-separated multipliers, e.g. 1,0.1")
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="parse and validate only")
    p_val.add_argument("file", help="workflow file (.rvm)")
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ZeroEvidenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except Exception as exc:  # pragma: no cover - safety net for the exit-code contract
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
