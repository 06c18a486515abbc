"""The `.rvm` workflow file format: parser and canonical printer.

A file declares one workflow: inline model definitions (chains and
networks), model instances with parameter bindings, and exported output
expressions. The grammar, with `#` comments to end of line:

    file     := [ "version" NUMBER ";" ] workflow
    workflow := "workflow" STRING "{" item* "}"
    item     := instance | export | inline
    instance := "instance" IDENT ":" ref "{" binding* "}"
    ref      := "builtin" "." IDENT | IDENT
    binding  := IDENT "=" expr ";"
    export   := "output" IDENT "=" expr ";"
    expr     := NUMBER | IDENT | IDENT "." IDENT
              | expr ("+"|"-"|"*"|"/") expr | "(" expr ")"
    inline   := ctmcdef | bayesdef
    ctmcdef  := "ctmc" IDENT "{" ("state" IDENT ["init"] ";")*
                                 ("rate" IDENT "->" IDENT ":" expr ";")* "}"
    bayesdef := "bayes" IDENT "{" ("node" IDENT
                    "states" "(" IDENT ("," IDENT)* ")"
                    ["parents" "(" IDENT ("," IDENT)* ")"]
                    "cpt" "(" NUMBER ("," NUMBER)* ")" ";")* "}"

Multiplication and division bind tighter than addition and subtraction;
operators associate left. Numbers are non-negative decimals with an
optional exponent; no hex, no underscores, which keeps files reviewable
line by line. Bare identifiers inside rate expressions are the inline
model's input parameters; bindings and exports reference solved values as
`<instance>.<output>`. Inline network tables list one probability row per
parent-state combination (first parent varying slowest), each row in the
node's own state order.

Parsing never raises for bad input: it returns diagnostics with line and
column instead. Printing is deterministic, and `parse(print(w))` yields a
structurally equal workflow.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from . import compose
from .errors import ValidationError

KEYWORDS = frozenset({
    "workflow", "instance", "builtin", "output", "version",
    "ctmc", "bayes", "state", "init", "rate", "node", "states", "parents", "cpt",
})

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<punct>[{}();:,=.+\-*/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" or "warning"
    message: str
    line: int
    column: int

    def render(self, origin: str) -> str:
        return f"{origin}:{self.line}:{self.column}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class ParseResult:
    workflow: compose.Workflow | None
    diagnostics: tuple[ParseDiagnostic, ...]
    origin: str = "<string>"

    @property
    def ok(self) -> bool:
        return self.workflow is not None

    def rendered_diagnostics(self) -> list[str]:
        return [diag.render(self.origin) for diag in self.diagnostics]


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER IDENT STRING ARROW punct-literal EOF
    text: str
    line: int
    column: int


class _ParseAbort(Exception):
    """Internal: unwinds the parser after a diagnostic has been recorded."""


def _lex(text: str) -> tuple[list[_Token], ParseDiagnostic | None]:
    tokens: list[_Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            return tokens, ParseDiagnostic(
                "error", f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        column = pos - line_start + 1
        kind = match.lastgroup
        value = match.group()
        if kind == "number":
            tokens.append(_Token("NUMBER", value, line, column))
        elif kind == "ident":
            tokens.append(_Token("IDENT", value, line, column))
        elif kind == "string":
            tokens.append(_Token("STRING", value[1:-1], line, column))
        elif kind == "arrow":
            tokens.append(_Token("->", value, line, column))
        elif kind == "punct":
            tokens.append(_Token(value, value, line, column))
        # whitespace and comments are skipped, but newlines advance the position
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = match.start() + value.rindex("\n") + 1
        pos = match.end()
    tokens.append(_Token("EOF", "", line, len(text) - line_start + 1))
    return tokens, None


# --- raw syntax tree (keeps positions for the semantic pass) -----------------


@dataclass
class _RawBinding:
    name: str
    expr: compose.Expr
    line: int
    column: int


@dataclass
class _RawInstance:
    name: str
    is_builtin: bool
    class_name: str
    bindings: list[_RawBinding]
    line: int
    column: int
    ref_line: int
    ref_column: int


@dataclass
class _RawExport:
    name: str
    expr: compose.Expr
    line: int
    column: int


@dataclass
class _RawState:
    name: str
    init: bool
    line: int
    column: int


@dataclass
class _RawRate:
    src: str
    dst: str
    expr: compose.Expr
    line: int
    column: int


@dataclass
class _RawCtmc:
    name: str
    states: list[_RawState]
    rates: list[_RawRate]
    line: int
    column: int


@dataclass
class _RawNode:
    name: str
    states: list[str]
    parents: list[str]
    cpt: list[float]
    line: int
    column: int


@dataclass
class _RawBayes:
    name: str
    nodes: list[_RawNode]
    line: int
    column: int


@dataclass
class _RawWorkflow:
    name: str
    items: list[object]
    line: int
    column: int


class _Parser:
    def __init__(self, tokens: list[_Token]) -> None:
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: list[ParseDiagnostic] = []

    # token plumbing

    @property
    def current(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message: str, token: _Token | None = None) -> _ParseAbort:
        tok = token or self.current
        self.diagnostics.append(ParseDiagnostic("error", message, tok.line, tok.column))
        return _ParseAbort()

    def advance(self) -> _Token:
        tok = self.current
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        if self.current.kind != kind:
            found = self.current.text or "end of file"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    def expect_ident(self, what: str) -> _Token:
        tok = self.current
        if tok.kind != "IDENT":
            found = tok.text or "end of file"
            raise self.error(f"expected {what}, found {found!r}")
        if tok.text in KEYWORDS:
            raise self.error(f"{tok.text!r} is a reserved word and cannot name {what}")
        return self.advance()

    def keyword(self) -> str | None:
        tok = self.current
        if tok.kind == "IDENT" and tok.text in KEYWORDS:
            return tok.text
        return None

    # grammar

    def parse_file(self) -> _RawWorkflow:
        if self.keyword() == "version":
            version_tok = self.advance()
            number = self.expect("NUMBER", "a version number")
            self.expect(";", "';'")
            if float(number.text) != 1.0:
                raise self.error(
                    f"unsupported format version {number.text}; this tool reads version 1",
                    version_tok,
                )
        if self.keyword() != "workflow":
            raise self.error("expected 'workflow'")
        tok = self.advance()
        name = self.expect("STRING", "a quoted workflow name")
        self.expect("{", "'{'")
        items: list[object] = []
        while self.current.kind != "}":
            kw = self.keyword()
            if kw == "instance":
                items.append(self.parse_instance())
            elif kw == "output":
                items.append(self.parse_export())
            elif kw == "ctmc":
                items.append(self.parse_ctmc())
            elif kw == "bayes":
                items.append(self.parse_bayes())
            else:
                found = self.current.text or "end of file"
                raise self.error(
                    f"expected 'instance', 'output', 'ctmc', 'bayes' or '}}', found {found!r}"
                )
        self.expect("}", "'}'")
        if self.current.kind != "EOF":
            raise self.error(f"unexpected trailing input {self.current.text!r}")
        return _RawWorkflow(name.text, items, tok.line, tok.column)

    def parse_instance(self) -> _RawInstance:
        self.advance()  # instance
        name = self.expect_ident("an instance")
        self.expect(":", "':'")
        is_builtin = False
        if self.keyword() == "builtin":
            self.advance()
            self.expect(".", "'.'")
            is_builtin = True
        ref = self.current
        if ref.kind != "IDENT" or (not is_builtin and ref.text in KEYWORDS):
            found = ref.text or "end of file"
            raise self.error(f"expected a model class name, found {found!r}")
        self.advance()
        self.expect("{", "'{'")
        bindings: list[_RawBinding] = []
        while self.current.kind != "}":
            pname = self.expect_ident("a parameter")
            self.expect("=", "'='")
            expr = self.parse_expr()
            self.expect(";", "';'")
            bindings.append(_RawBinding(pname.text, expr, pname.line, pname.column))
        self.expect("}", "'}'")
        return _RawInstance(
            name.text, is_builtin, ref.text, bindings,
            name.line, name.column, ref.line, ref.column,
        )

    def parse_export(self) -> _RawExport:
        self.advance()  # output
        name = self.expect_ident("an output")
        self.expect("=", "'='")
        expr = self.parse_expr()
        self.expect(";", "';'")
        return _RawExport(name.text, expr, name.line, name.column)

    def parse_ctmc(self) -> _RawCtmc:
        tok = self.advance()  # ctmc
        name = self.expect_ident("a model")
        self.expect("{", "'{'")
        states: list[_RawState] = []
        rates: list[_RawRate] = []
        while self.current.kind != "}":
            kw = self.keyword()
            if kw == "state":
                self.advance()
                sname = self.expect_ident("a state")
                init = False
                if self.keyword() == "init":
                    self.advance()
                    init = True
                self.expect(";", "';'")
                states.append(_RawState(sname.text, init, sname.line, sname.column))
            elif kw == "rate":
                rate_tok = self.advance()
                src = self.expect_ident("a state")
                self.expect("->", "'->'")
                dst = self.expect_ident("a state")
                self.expect(":", "':'")
                expr = self.parse_expr()
                self.expect(";", "';'")
                rates.append(_RawRate(src.text, dst.text, expr, rate_tok.line, rate_tok.column))
            else:
                found = self.current.text or "end of file"
                raise self.error(f"expected 'state', 'rate' or '}}', found {found!r}")
        self.expect("}", "'}'")
        return _RawCtmc(name.text, states, rates, tok.line, tok.column)

    def parse_bayes(self) -> _RawBayes:
        tok = self.advance()  # bayes
        name = self.expect_ident("a model")
        self.expect("{", "'{'")
        nodes: list[_RawNode] = []
        while self.current.kind != "}":
            if self.keyword() != "node":
                found = self.current.text or "end of file"
                raise self.error(f"expected 'node' or '}}', found {found!r}")
            self.advance()
            nname = self.expect_ident("a node")
            if self.keyword() != "states":
                raise self.error("expected 'states'")
            self.advance()
            states = self.parse_ident_list("a state label")
            parents: list[str] = []
            if self.keyword() == "parents":
                self.advance()
                parents = self.parse_ident_list("a parent node")
            if self.keyword() != "cpt":
                raise self.error("expected 'cpt'")
            self.advance()
            cpt = self.parse_number_list()
            self.expect(";", "';'")
            nodes.append(_RawNode(nname.text, states, parents, cpt, nname.line, nname.column))
        self.expect("}", "'}'")
        return _RawBayes(name.text, nodes, tok.line, tok.column)

    def parse_ident_list(self, what: str) -> list[str]:
        self.expect("(", "'('")
        names = [self.expect_ident(what).text]
        while self.current.kind == ",":
            self.advance()
            names.append(self.expect_ident(what).text)
        self.expect(")", "')'")
        return names

    def parse_number_list(self) -> list[float]:
        self.expect("(", "'('")
        numbers = [float(self.expect("NUMBER", "a probability").text)]
        while self.current.kind == ",":
            self.advance()
            numbers.append(float(self.expect("NUMBER", "a probability").text))
        self.expect(")", "')'")
        return numbers

    # expressions: left-associative, * and / bind tighter than + and -

    def parse_expr(self) -> compose.Expr:
        expr = self.parse_term()
        while self.current.kind in ("+", "-"):
            op = self.advance().kind
            expr = compose.BinOp(op, expr, self.parse_term())
        return expr

    def parse_term(self) -> compose.Expr:
        expr = self.parse_factor()
        while self.current.kind in ("*", "/"):
            op = self.advance().kind
            expr = compose.BinOp(op, expr, self.parse_factor())
        return expr

    def parse_factor(self) -> compose.Expr:
        tok = self.current
        if tok.kind == "NUMBER":
            self.advance()
            return compose.Literal(float(tok.text))
        if tok.kind == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect(")", "')'")
            return expr
        if tok.kind == "IDENT" and tok.text not in KEYWORDS:
            self.advance()
            if self.current.kind == ".":
                self.advance()
                output = self.expect_ident("an output parameter")
                return compose.Ref(tok.text, output.text)
            return compose.Param(tok.text)
        found = tok.text or "end of file"
        raise self.error(f"expected a number, reference or '(', found {found!r}")


# --- semantic pass ------------------------------------------------------------


def _analyze(raw: _RawWorkflow, diagnostics: list[ParseDiagnostic]) -> compose.Workflow | None:
    def err(message: str, line: int, column: int) -> None:
        diagnostics.append(ParseDiagnostic("error", message, line, column))

    classes: list[compose.ModelClass] = []
    class_names: dict[str, tuple[int, int]] = {}
    instances: list[compose.ModelInstance] = []
    instance_names: dict[str, tuple[int, int]] = {}
    exports: list[compose.Export] = []
    export_names: set[str] = set()

    inline_defs = [item for item in raw.items if isinstance(item, (_RawCtmc, _RawBayes))]
    for item in inline_defs:
        if item.name in class_names:
            err(f"duplicate model name {item.name!r}", item.line, item.column)
            continue
        class_names[item.name] = (item.line, item.column)

    for item in raw.items:
        if isinstance(item, _RawCtmc):
            template = _analyze_ctmc(item, diagnostics)
            if template is not None:
                classes.append(compose.class_from_inline(template))
        elif isinstance(item, _RawBayes):
            template = _analyze_bayes(item, diagnostics)
            if template is not None:
                classes.append(compose.class_from_inline(template))
        elif isinstance(item, _RawInstance):
            if item.name in instance_names:
                err(f"duplicate instance name {item.name!r}", item.line, item.column)
                continue
            instance_names[item.name] = (item.line, item.column)
            if not item.is_builtin and item.class_name not in class_names:
                err(
                    f"unknown model {item.class_name!r}: not defined in this file "
                    "(builtin templates need the 'builtin.' prefix)",
                    item.ref_line, item.ref_column,
                )
                continue
            bindings: dict[str, compose.Expr] = {}
            for binding in item.bindings:
                if binding.name in bindings:
                    err(
                        f"duplicate binding for {binding.name!r} in instance {item.name!r}",
                        binding.line, binding.column,
                    )
                    continue
                bindings[binding.name] = binding.expr
            instances.append(compose.ModelInstance(item.name, item.class_name, bindings))
        elif isinstance(item, _RawExport):
            if item.name in export_names:
                err(f"duplicate export name {item.name!r}", item.line, item.column)
                continue
            export_names.add(item.name)
            exports.append(compose.Export(item.name, item.expr))

    if any(d.severity == "error" for d in diagnostics):
        return None
    return compose.Workflow(raw.name, tuple(classes), tuple(instances), tuple(exports))


def _analyze_ctmc(raw: _RawCtmc, diagnostics: list[ParseDiagnostic]) -> compose.InlineCtmc | None:
    def err(message: str, line: int, column: int) -> None:
        diagnostics.append(ParseDiagnostic("error", message, line, column))

    ok = True
    names: list[str] = []
    initial: str | None = None
    for state in raw.states:
        if state.name in names:
            err(f"duplicate state {state.name!r}", state.line, state.column)
            ok = False
            continue
        names.append(state.name)
        if state.init:
            if initial is not None:
                err("more than one state marked 'init'", state.line, state.column)
                ok = False
            initial = state.name
    if not raw.states:
        err(f"model {raw.name!r} declares no states", raw.line, raw.column)
        return None
    if initial is None:
        err(f"model {raw.name!r} has no state marked 'init'", raw.line, raw.column)
        ok = False

    rates: list[tuple[str, str, compose.Expr]] = []
    seen_pairs: set[tuple[str, str]] = set()
    for rate in raw.rates:
        if rate.src not in names or rate.dst not in names:
            unknown = rate.src if rate.src not in names else rate.dst
            err(f"rate references undeclared state {unknown!r}", rate.line, rate.column)
            ok = False
            continue
        if rate.src == rate.dst:
            err(f"self-loop transition on {rate.src!r}", rate.line, rate.column)
            ok = False
            continue
        if (rate.src, rate.dst) in seen_pairs:
            err(f"duplicate transition {rate.src} -> {rate.dst}", rate.line, rate.column)
            ok = False
            continue
        seen_pairs.add((rate.src, rate.dst))
        for ref in compose.expr_refs(rate.expr):
            err(
                f"rate expressions may only use model parameters, not "
                f"{ref.instance}.{ref.output}",
                rate.line, rate.column,
            )
            ok = False
        rates.append((rate.src, rate.dst, rate.expr))
    if not ok:
        return None
    return compose.InlineCtmc(raw.name, tuple(names), initial, tuple(rates))


def _analyze_bayes(raw: _RawBayes, diagnostics: list[ParseDiagnostic]) -> compose.InlineBayes | None:
    def err(message: str, line: int, column: int) -> None:
        diagnostics.append(ParseDiagnostic("error", message, line, column))

    ok = True
    ids: set[str] = set()
    for node in raw.nodes:
        if node.name in ids:
            err(f"duplicate node {node.name!r}", node.line, node.column)
            ok = False
        ids.add(node.name)
        if len(set(node.states)) != len(node.states):
            err(f"node {node.name!r} repeats a state label", node.line, node.column)
            ok = False
        if len(node.states) < 2:
            err(f"node {node.name!r} needs at least two states", node.line, node.column)
            ok = False
    cards = {node.name: len(node.states) for node in raw.nodes}
    for node in raw.nodes:
        expected = len(node.states)
        for parent in node.parents:
            if parent not in cards:
                err(
                    f"node {node.name!r} references unknown parent {parent!r}",
                    node.line, node.column,
                )
                ok = False
                break
            expected *= cards[parent]
        else:
            if len(node.cpt) != expected:
                err(
                    f"node {node.name!r} needs {expected} table entries, "
                    f"got {len(node.cpt)}",
                    node.line, node.column,
                )
                ok = False
    if not ok:
        return None
    nodes = tuple(
        compose.InlineNode(n.name, tuple(n.states), tuple(n.parents), tuple(n.cpt))
        for n in raw.nodes
    )
    return compose.InlineBayes(raw.name, nodes)


def parse(text: str, origin: str = "<string>") -> ParseResult:
    """Parse workflow text; diagnostics instead of exceptions on bad input.

    ``origin`` labels diagnostics (usually the file path). Every rejection
    carries at least one positioned error diagnostic.
    """
    tokens, lex_error = _lex(text)
    if lex_error is not None:
        return ParseResult(None, (lex_error,), origin)
    parser = _Parser(tokens)
    try:
        raw = parser.parse_file()
    except _ParseAbort:
        return ParseResult(None, tuple(parser.diagnostics), origin)
    diagnostics = list(parser.diagnostics)
    workflow = _analyze(raw, diagnostics)
    return ParseResult(workflow, tuple(diagnostics), origin)


# --- canonical printing -------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def _format_number(value: float) -> str:
    if value < 0.0:
        raise ValidationError(f"cannot print negative literal {value!r}")
    return repr(float(value))


def format_expr(expr: compose.Expr) -> str:
    """Render an expression with the fewest parentheses that
    preserve its structure under re-parsing."""

    def render(node: compose.Expr, parent_prec: int, right_side: bool) -> str:
        if isinstance(node, compose.Literal):
            return _format_number(node.value)
        if isinstance(node, compose.Param):
            return node.name
        if isinstance(node, compose.Ref):
            return f"{node.instance}.{node.output}"
        if isinstance(node, compose.BinOp):
            prec = _PRECEDENCE[node.op]
            text = (
                f"{render(node.left, prec, False)} {node.op} "
                f"{render(node.right, prec, True)}"
            )
            if prec < parent_prec or (prec == parent_prec and right_side):
                return f"({text})"
            return text
        raise ValidationError(f"cannot print expression node {node!r}")

    return render(expr, 0, False)


def print_workflow(workflow: compose.Workflow) -> str:
    """Canonical text for a workflow; byte-identical across calls."""
    if '"' in workflow.name or "\n" in workflow.name:
        raise ValidationError("workflow names cannot contain quotes or newlines")
    inline_names = {cls.name for cls in workflow.classes}
    lines: list[str] = [f'workflow "{workflow.name}" {{']
    for cls in workflow.classes:
        template = cls.template
        if isinstance(template, compose.InlineCtmc):
            lines.append(f"  ctmc {template.name} {{")
            for state in template.states:
                suffix = " init" if state == template.initial else ""
                lines.append(f"    state {state}{suffix};")
            for src, dst, expr in template.rates:
                lines.append(f"    rate {src} -> {dst} : {format_expr(expr)};")
            lines.append("  }")
        elif isinstance(template, compose.InlineBayes):
            lines.append(f"  bayes {template.name} {{")
            for node in template.nodes:
                parts = [f"node {node.id} states ({', '.join(node.states)})"]
                if node.parents:
                    parts.append(f"parents ({', '.join(node.parents)})")
                numbers = ", ".join(_format_number(v) for v in node.cpt)
                parts.append(f"cpt ({numbers})")
                lines.append(f"    {' '.join(parts)};")
            lines.append("  }")
        else:
            raise ValidationError(
                f"workflow carries non-inline class {cls.name!r}; only inline "
                "definitions can be printed"
            )
    for inst in workflow.instances:
        ref = inst.class_name if inst.class_name in inline_names else f"builtin.{inst.class_name}"
        lines.append(f"  instance {inst.name} : {ref} {{")
        for pname, expr in inst.bindings.items():
            lines.append(f"    {pname} = {format_expr(expr)};")
        lines.append("  }")
    for export in workflow.exports:
        lines.append(f"  output {export.name} = {format_expr(export.expr)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
