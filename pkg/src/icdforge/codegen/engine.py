"""Deliberately small text template engine with traceability markup.

Grammar: literal text; ``{{expr}}`` substitution; ``{% for x in expr %}``;
``{% if expr %}``; ``{% trace expr %}`` which emits its body and records the
rendered byte range against the evaluated element path.  Tags strip no
whitespace by default; explicit ``-`` markers (``{{-``, ``-}}``, ``{%-``,
``-%}``) trim adjacent whitespace.

Expressions: dotted access into the model, integer arithmetic, comparisons,
string concatenation, ``and``/``or``/``not``, parentheses.  No user-defined
functions, no filters: anything fancier belongs in the model view, where it
stays reviewable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Optional


class TemplateParseError(Exception):
    def __init__(self, message: str, line: int, col: int, name: str = "<template>"):
        super().__init__(f"{name}:{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.name = name


class TemplateRenderError(Exception):
    pass


class UnknownModelField(TemplateRenderError):
    def __init__(self, path: str):
        super().__init__(f"unknown model field {path!r}")
        self.path = path


@dataclass(frozen=True)
class TraceRange:
    """Byte range of rendered output attributed to one model element path."""

    path: str
    start: int
    end: int


# ---------------------------------------------------------------------------
# Expression language

_EXPR_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>[0-9]+)"
    r'|(?P<str>"[^"\\]*")'
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>==|!=|<=|>=|//|[-+*%<>().])"
    r")"
)


def _tokenize_expr(text: str, line: int, col: int, name: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _EXPR_TOKEN.match(text, pos)
        if match is None:
            break
        pos = match.end()
        if match.lastgroup == "num":
            tokens.append(("num", match.group("num")))
        elif match.lastgroup == "str":
            tokens.append(("str", match.group("str")[1:-1]))
        elif match.lastgroup == "name":
            word = match.group("name")
            if word in ("and", "or", "not", "in", "true", "false"):
                tokens.append((word, word))
            else:
                tokens.append(("name", word))
        else:
            tokens.append((match.group("op"), match.group("op")))
    if text[pos:].strip():
        raise TemplateParseError(
            f"bad expression character {text[pos:].strip()[0]!r}", line, col, name
        )
    return tokens


Env = Mapping[str, Any]
ExprFn = Callable[[Env], Any]


class _ExprParser:
    """Recursive-descent parser producing evaluation closures."""

    def __init__(self, tokens: list[tuple[str, str]], line: int, col: int, name: str):
        self.tokens = tokens
        self.pos = 0
        self.line = line
        self.col = col
        self.name = name

    def fail(self, message: str) -> TemplateParseError:
        return TemplateParseError(message, self.line, self.col, self.name)

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def take(self, kind: Optional[str] = None) -> tuple[str, str]:
        if self.pos >= len(self.tokens):
            raise self.fail("unexpected end of expression")
        token = self.tokens[self.pos]
        if kind is not None and token[0] != kind:
            raise self.fail(f"expected {kind!r}, got {token[1]!r}")
        self.pos += 1
        return token

    def parse(self) -> ExprFn:
        fn = self.parse_or()
        if self.pos != len(self.tokens):
            raise self.fail(f"unexpected token {self.tokens[self.pos][1]!r}")
        return fn

    def parse_or(self) -> ExprFn:
        left = self.parse_and()
        while self.peek() == "or":
            self.take()
            right = self.parse_and()
            left = (lambda lf, rf: lambda env: bool(lf(env)) or bool(rf(env)))(left, right)
        return left

    def parse_and(self) -> ExprFn:
        left = self.parse_not()
        while self.peek() == "and":
            self.take()
            right = self.parse_not()
            left = (lambda lf, rf: lambda env: bool(lf(env)) and bool(rf(env)))(left, right)
        return left

    def parse_not(self) -> ExprFn:
        if self.peek() == "not":
            self.take()
            inner = self.parse_not()
            return lambda env: not inner(env)
        return self.parse_comparison()

    def parse_comparison(self) -> ExprFn:
        left = self.parse_arith()
        op = self.peek()
        if op in ("==", "!=", "<", "<=", ">", ">="):
            self.take()
            right = self.parse_arith()
            ops: dict[str, Callable[[Any, Any], bool]] = {
                "==": lambda a, b: a == b,
                "!=": lambda a, b: a != b,
                "<": lambda a, b: a < b,
                "<=": lambda a, b: a <= b,
                ">": lambda a, b: a > b,
                ">=": lambda a, b: a >= b,
            }
            fn = ops[op]
            return (lambda lf, rf, f: lambda env: f(lf(env), rf(env)))(left, right, fn)
        return left

    def parse_arith(self) -> ExprFn:
        left = self.parse_term()
        while self.peek() in ("+", "-"):
            op = self.take()[0]
            right = self.parse_term()

            def combine(lf: ExprFn, rf: ExprFn, plus: bool) -> ExprFn:
                def run(env: Env) -> Any:
                    a, b = lf(env), rf(env)
                    if plus and isinstance(a, str) and isinstance(b, str):
                        return a + b
                    if isinstance(a, bool) or isinstance(b, bool):
                        raise TemplateRenderError("arithmetic on booleans")
                    if not isinstance(a, int) or not isinstance(b, int):
                        raise TemplateRenderError(
                            f"arithmetic needs integers or two strings, got {a!r} and {b!r}"
                        )
                    return a + b if plus else a - b

                return run

            left = combine(left, right, op == "+")
        return left

    def parse_term(self) -> ExprFn:
        left = self.parse_unary()
        while self.peek() in ("*", "//", "%"):
            op = self.take()[0]
            right = self.parse_unary()

            def combine(lf: ExprFn, rf: ExprFn, kind: str) -> ExprFn:
                def run(env: Env) -> Any:
                    a, b = lf(env), rf(env)
                    if not isinstance(a, int) or not isinstance(b, int):
                        raise TemplateRenderError("arithmetic needs integers")
                    if kind == "*":
                        return a * b
                    if b == 0:
                        raise TemplateRenderError("division by zero")
                    return a // b if kind == "//" else a % b

                return run

            left = combine(left, right, op)
        return left

    def parse_unary(self) -> ExprFn:
        if self.peek() == "-":
            self.take()
            inner = self.parse_unary()

            def run(env: Env) -> Any:
                value = inner(env)
                if not isinstance(value, int) or isinstance(value, bool):
                    raise TemplateRenderError("unary minus needs an integer")
                return -value

            return run
        return self.parse_primary()

    def parse_primary(self) -> ExprFn:
        kind, text = self.take()
        if kind == "num":
            value = int(text)
            return lambda env: value
        if kind == "str":
            return lambda env: text
        if kind == "true":
            return lambda env: True
        if kind == "false":
            return lambda env: False
        if kind == "(":
            inner = self.parse_or()
            self.take(")")
            return inner
        if kind == "name":
            parts = [text]
            while self.peek() == ".":
                self.take()
                parts.append(self.take("name")[1])

            def run(env: Env) -> Any:
                if parts[0] not in env:
                    raise UnknownModelField(parts[0])
                value = env[parts[0]]
                for depth, attr in enumerate(parts[1:], start=1):
                    if attr.startswith("_") or not hasattr(value, attr):
                        raise UnknownModelField(".".join(parts[: depth + 1]))
                    value = getattr(value, attr)
                return value

            return run
        raise self.fail(f"unexpected token {text!r}")


def compile_expression(text: str, line: int = 1, col: int = 1, name: str = "<expr>") -> ExprFn:
    tokens = _tokenize_expr(text, line, col, name)
    if not tokens:
        raise TemplateParseError("empty expression", line, col, name)
    return _ExprParser(tokens, line, col, name).parse()


# ---------------------------------------------------------------------------
# Template parsing

_TAG_OPEN = re.compile(r"\{\{|\{%")


@dataclass
class _Token:
    kind: str  # text | expr | tag
    body: str
    line: int
    col: int
    ltrim: bool = False
    rtrim: bool = False


def _lex(source: str, name: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    line = 1
    col = 1

    def advance(text: str) -> None:
        nonlocal line, col
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)

    while pos < len(source):
        match = _TAG_OPEN.search(source, pos)
        if match is None:
            tokens.append(_Token("text", source[pos:], line, col))
            break
        if match.start() > pos:
            text = source[pos : match.start()]
            tokens.append(_Token("text", text, line, col))
            advance(text)
        opener = match.group(0)
        closer = "}}" if opener == "{{" else "%}"
        tag_line, tag_col = line, col
        end = source.find(closer, match.end())
        if end < 0:
            raise TemplateParseError(f"unterminated {opener!r} tag", tag_line, tag_col, name)
        body = source[match.end() : end]
        ltrim = body.startswith("-")
        rtrim = body.endswith("-") and len(body.lstrip("-")) > 0
        body = body[1:] if ltrim else body
        body = body[:-1] if rtrim else body
        tokens.append(
            _Token(
                "expr" if opener == "{{" else "tag",
                body.strip(),
                tag_line,
                tag_col,
                ltrim=ltrim,
                rtrim=rtrim,
            )
        )
        advance(source[match.start() : end + len(closer)])
        pos = end + len(closer)
    # apply trim markers to neighbouring text tokens
    for i, token in enumerate(tokens):
        if token.kind == "text":
            continue
        if token.ltrim and i > 0 and tokens[i - 1].kind == "text":
            tokens[i - 1].body = tokens[i - 1].body.rstrip()
        if token.rtrim and i + 1 < len(tokens) and tokens[i + 1].kind == "text":
            tokens[i + 1].body = tokens[i + 1].body.lstrip()
    return [t for t in tokens if not (t.kind == "text" and t.body == "")]


class _Node:
    pass


@dataclass
class _Text(_Node):
    text: str


@dataclass
class _Output(_Node):
    expr: ExprFn
    source: str
    line: int
    col: int


@dataclass
class _For(_Node):
    var: str
    expr: ExprFn
    source: str
    body: list[_Node]


@dataclass
class _If(_Node):
    expr: ExprFn
    body: list[_Node]


@dataclass
class _Trace(_Node):
    expr: ExprFn
    source: str
    body: list[_Node]


_FOR_RE = re.compile(r"^for\s+([A-Za-z_][A-Za-z0-9_]*)\s+in\s+(.+)$", re.S)


class Template:
    """A parsed template; rendering is a pure function of the bindings."""

    def __init__(self, nodes: list[_Node], name: str):
        self._nodes = nodes
        self.name = name

    @classmethod
    def parse(cls, source: str, name: str = "<template>") -> "Template":
        tokens = _lex(source, name)
        pos = 0

        def block(terminators: tuple[str, ...]) -> tuple[list[_Node], Optional[_Token]]:
            nonlocal pos
            nodes: list[_Node] = []
            while pos < len(tokens):
                token = tokens[pos]
                pos += 1
                if token.kind == "text":
                    nodes.append(_Text(token.body))
                    continue
                if token.kind == "expr":
                    fn = compile_expression(token.body, token.line, token.col, name)
                    nodes.append(_Output(fn, token.body, token.line, token.col))
                    continue
                word = token.body.split(None, 1)[0] if token.body else ""
                if word in terminators:
                    return nodes, token
                if word == "for":
                    match = _FOR_RE.match(token.body)
                    if match is None:
                        raise TemplateParseError(
                            "malformed for tag", token.line, token.col, name
                        )
                    expr = compile_expression(match.group(2), token.line, token.col, name)
                    body, end = block(("endfor",))
                    if end is None:
                        raise TemplateParseError(
                            "missing {% endfor %}", token.line, token.col, name
                        )
                    nodes.append(_For(match.group(1), expr, match.group(2), body))
                elif word == "if":
                    expr = compile_expression(token.body[2:], token.line, token.col, name)
                    body, end = block(("endif",))
                    if end is None:
                        raise TemplateParseError(
                            "missing {% endif %}", token.line, token.col, name
                        )
                    nodes.append(_If(expr, body))
                elif word == "trace":
                    expr = compile_expression(token.body[5:], token.line, token.col, name)
                    body, end = block(("endtrace",))
                    if end is None:
                        raise TemplateParseError(
                            "missing {% endtrace %}", token.line, token.col, name
                        )
                    nodes.append(_Trace(expr, token.body[5:].strip(), body))
                else:
                    raise TemplateParseError(
                        f"unknown tag {token.body!r}", token.line, token.col, name
                    )
            return nodes, None

        nodes, stray = block(())
        if stray is not None:
            raise TemplateParseError(
                f"stray {stray.body!r} tag", stray.line, stray.col, name
            )
        return cls(nodes, name)

    def render(self, bindings: Mapping[str, Any]) -> tuple[str, list[TraceRange]]:
        chunks: list[str] = []
        traces: list[TraceRange] = []
        offset = 0

        def emit(text: str) -> None:
            nonlocal offset
            if text:
                chunks.append(text)
                offset += len(text.encode("utf-8"))

        def run(nodes: list[_Node], env: dict[str, Any]) -> None:
            for node in nodes:
                if isinstance(node, _Text):
                    emit(node.text)
                elif isinstance(node, _Output):
                    value = node.expr(env)
                    if isinstance(value, bool):
                        emit("true" if value else "false")
                    elif isinstance(value, (int, str)):
                        emit(str(value))
                    else:
                        raise TemplateRenderError(
                            f"{self.name}:{node.line}:{node.col}: expression "
                            f"{node.source!r} produced non-printable {type(value).__name__}"
                        )
                elif isinstance(node, _For):
                    items = node.expr(env)
                    if not isinstance(items, (list, tuple)):
                        raise TemplateRenderError(
                            f"for target {node.source!r} is not a list"
                        )
                    for item in items:
                        child = dict(env)
                        child[node.var] = item
                        run(node.body, child)
                elif isinstance(node, _If):
                    if node.expr(env):
                        run(node.body, env)
                elif isinstance(node, _Trace):
                    path = node.expr(env)
                    if not isinstance(path, str) or not path:
                        raise TemplateRenderError(
                            f"trace path {node.source!r} must evaluate to a non-empty string"
                        )
                    start = offset
                    run(node.body, env)
                    if offset > start:
                        traces.append(TraceRange(path=path, start=start, end=offset))
        run(self._nodes, dict(bindings))
        return "".join(chunks), traces
