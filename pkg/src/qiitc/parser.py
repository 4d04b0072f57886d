"""Concrete syntax for signature files (``.qiit``): parser and pretty-printer.

Declarations are keyword-led and end with ``;``.  Telescopes use arrow
notation, line comments start with ``--``::

    external A = {a0, a1};
    sort T;
    point leaf : T;
    point node : (f : A -> T) -> T;
    path mix : (e : Perm(A)) -> (f : A -> T) -> node(f) = node(f . e);

``f . e`` precomposes a function-typed variable with a bijection-typed one and
expands to the table literal ``{a0 => f(e(a0)), ...}`` at parse time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import Diagnostic, Span, error
from .signature import (
    Apply,
    Atom,
    Decl,
    Expr,
    ExternalParam,
    ExternalSet,
    FnApp,
    FnLit,
    FunParam,
    ParamType,
    PathDecl,
    PermParam,
    PointDecl,
    Signature,
    SortDecl,
    SortParam,
    Var,
    infer_point_term,
    subst,
)

KEYWORDS = {"external", "sort", "point", "path", "Set", "Perm"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>--[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>->|=>|[(){},;:=.])
""",
    re.VERBOSE,
)


@dataclass(frozen=True)
class SourceFile:
    path: str
    text: str


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "punct" | "eof"
    text: str
    span: Span


class ParseError(Exception):
    def __init__(self, diag: Diagnostic):
        super().__init__(str(diag))
        self.diag = diag


def _lex(text: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = Span(pos, pos + 1, line, pos - line_start + 1)
            diags.append(error(f"unexpected character {text[pos]!r}", span))
            pos += 1
            continue
        start = pos
        pos = m.end()
        chunk = m.group(0)
        if m.lastgroup in ("ws", "comment"):
            pass
        else:
            span = Span(start, pos, line, start - line_start + 1)
            tokens.append(Token(m.lastgroup, chunk, span))  # type: ignore[arg-type]
        for i, ch in enumerate(chunk):
            if ch == "\n":
                line += 1
                line_start = start + i + 1
    eof_span = Span(len(text), len(text), line, len(text) - line_start + 1)
    tokens.append(Token("eof", "", eof_span))
    return tokens, diags


class _Parser:
    def __init__(self, text: str):
        self.tokens, self.diags = _lex(text)
        self.pos = 0
        self.externals: list[ExternalSet] = []
        self.decls: list[Decl] = []
        # progressive symbol tables for name resolution
        self.sorts: dict[str, SortDecl] = {}
        self.points: dict[str, PointDecl] = {}
        self.atom_sets: dict[str, str] = {}

    # -- token plumbing ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind == "eof":
            raise ParseError(error(f"expected '{text}', found '{tok.text or 'end of file'}'", tok.span))
        return self.next()

    def expect_ident(self, what: str = "an identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            raise ParseError(error(f"expected {what}, found '{tok.text or 'end of file'}'", tok.span))
        return self.next()

    # -- declarations --------------------------------------------------------

    def parse(self) -> tuple[Signature | None, list[Diagnostic]]:
        while self.peek().kind != "eof":
            try:
                self.parse_decl()
            except ParseError as exc:
                self.diags.append(exc.diag)
                self.recover()
        sig = Signature(tuple(self.externals), tuple(self.decls))
        if any(d.severity == "error" for d in self.diags):
            return None, self.diags
        return sig, self.diags

    def recover(self) -> None:
        while self.peek().kind != "eof" and self.peek().text != ";":
            self.next()
        if self.peek().text == ";":
            self.next()

    def parse_decl(self) -> None:
        tok = self.peek()
        if tok.text == "external":
            self.parse_external()
        elif tok.text == "sort":
            self.parse_sort()
        elif tok.text == "point":
            self.parse_point()
        elif tok.text == "path":
            self.parse_path()
        else:
            raise ParseError(
                error(
                    f"expected 'external', 'sort', 'point' or 'path', found '{tok.text}'",
                    tok.span,
                )
            )

    def parse_external(self) -> None:
        self.expect("external")
        name = self.expect_ident("an external set name")
        self.expect("=")
        self.expect("{")
        elements: list[str] = []
        if self.peek().text != "}":
            elements.append(self.expect_ident("an element label").text)
            while self.peek().text == ",":
                self.next()
                elements.append(self.expect_ident("an element label").text)
        self.expect("}")
        self.expect(";")
        ext = ExternalSet(name.text, tuple(elements), span=name.span)
        self.externals.append(ext)
        for label in elements:
            self.atom_sets.setdefault(label, name.text)

    def parse_sort(self) -> None:
        self.expect("sort")
        name = self.expect_ident("a sort name")
        tele: list[tuple[str, ParamType]] = []
        if self.peek().text == ":":
            self.next()
            env: dict[str, ParamType] = {}
            while self.peek().text == "(":
                v, ptype = self.parse_binder(env)
                tele.append((v, ptype))
                env[v] = ptype
                self.expect("->")
            self.expect("Set")
        self.expect(";")
        decl = SortDecl(name.text, tuple(tele), span=name.span)
        self.decls.append(decl)
        self.sorts[name.text] = decl

    def parse_point(self) -> None:
        self.expect("point")
        name = self.expect_ident("a point constructor name")
        self.expect(":")
        env: dict[str, ParamType] = {}
        tele: list[tuple[str, ParamType]] = []
        while self.peek().text == "(" and self.is_binder_start():
            v, ptype = self.parse_binder(env)
            tele.append((v, ptype))
            env[v] = ptype
            self.expect("->")
        target = self.parse_sort_ref(env)
        self.expect(";")
        decl = PointDecl(name.text, tuple(tele), target.sort, target.indices, span=name.span)
        self.decls.append(decl)
        self.points[name.text] = decl

    def parse_path(self) -> None:
        self.expect("path")
        name = self.expect_ident("a path constructor name")
        self.expect(":")
        env: dict[str, ParamType] = {}
        tele: list[tuple[str, ParamType]] = []
        while self.peek().text == "(" and self.is_binder_start():
            v, ptype = self.parse_binder(env)
            tele.append((v, ptype))
            env[v] = ptype
            self.expect("->")
        lhs_tok = self.peek()
        lhs = self.parse_expr(env)
        self.expect("=")
        rhs = self.parse_expr(env)
        self.expect(";")
        prefix = Signature(tuple(self.externals), tuple(self.decls))
        try:
            target = infer_point_term(prefix, env, lhs)
        except ValueError as exc:
            raise ParseError(
                error(f"cannot type left endpoint of '{name.text}': {exc}", lhs_tok.span)
            ) from None
        decl = PathDecl(
            name.text, tuple(tele), target.sort, target.indices, lhs, rhs, span=name.span
        )
        self.decls.append(decl)

    def is_binder_start(self) -> bool:
        # "(" IDENT ":" opens a telescope binder
        return self.peek(1).kind == "ident" and self.peek(2).text == ":"

    # -- types ----------------------------------------------------------------

    def parse_binder(self, env: dict[str, ParamType]) -> tuple[str, ParamType]:
        self.expect("(")
        v = self.expect_ident("a variable name")
        self.expect(":")
        ptype = self.parse_param_type(env)
        self.expect(")")
        return v.text, ptype

    def parse_param_type(self, env: dict[str, ParamType]) -> ParamType:
        tok = self.peek()
        if tok.text == "(":
            # dependent function binder: (a : A) -> S(...a...)
            self.next()
            binder = self.expect_ident("a domain variable")
            self.expect(":")
            domain = self.expect_ident("an external set name")
            self.expect(")")
            self.expect("->")
            ext = self.require_external(domain)
            cod_env = dict(env)
            cod_env[binder.text] = ExternalParam(domain.text)
            cod = self.parse_sort_ref(cod_env)
            family = tuple(
                (a, self.substitute_atom(cod, binder.text, domain.text, a))
                for a in ext.elements
            )
            return FunParam(domain.text, family)
        if tok.text == "Perm":
            self.next()
            self.expect("(")
            base = self.expect_ident("an external set name")
            self.expect(")")
            self.require_external(base)
            return PermParam(base.text)
        head = self.expect_ident("a type")
        if any(e.name == head.text for e in self.externals):
            if self.peek().text == "->":
                self.next()
                return self.parse_fun_codomain(head, env)
            return ExternalParam(head.text)
        if head.text in self.sorts:
            indices: tuple[Expr, ...] = ()
            if self.peek().text == "(":
                indices = self.parse_expr_args(env)
            return SortParam(head.text, indices)
        raise ParseError(error(f"unknown sort or external set '{head.text}'", head.span))

    def parse_fun_codomain(self, domain: Token, env: dict[str, ParamType]) -> FunParam:
        ext = self.require_external(domain)
        if self.peek().text == "{":
            self.next()
            entries: list[tuple[str, SortParam]] = []
            if self.peek().text != "}":
                entries.append(self.parse_family_entry(env))
                while self.peek().text == ",":
                    self.next()
                    entries.append(self.parse_family_entry(env))
            self.expect("}")
            return FunParam(domain.text, tuple(entries))
        cod = self.parse_sort_ref(env)
        return FunParam(domain.text, tuple((a, cod) for a in ext.elements))

    def parse_family_entry(self, env: dict[str, ParamType]) -> tuple[str, SortParam]:
        label = self.expect_ident("an element label")
        self.expect("=>")
        return label.text, self.parse_sort_ref(env)

    def parse_sort_ref(self, env: dict[str, ParamType]) -> SortParam:
        head = self.expect_ident("a sort name")
        if head.text not in self.sorts:
            raise ParseError(error(f"unknown sort '{head.text}'", head.span))
        indices: tuple[Expr, ...] = ()
        if self.peek().text == "(":
            indices = self.parse_expr_args(env)
        return SortParam(head.text, indices)

    def require_external(self, tok: Token) -> ExternalSet:
        for e in self.externals:
            if e.name == tok.text:
                return e
        raise ParseError(error(f"unknown external set '{tok.text}'", tok.span))

    @staticmethod
    def substitute_atom(p: SortParam, var: str, set_name: str, label: str) -> SortParam:
        mapping = {var: Atom(set_name, label)}
        return SortParam(p.sort, tuple(subst(mapping, i) for i in p.indices))

    # -- expressions ----------------------------------------------------------

    def parse_expr_args(self, env: dict[str, ParamType]) -> tuple[Expr, ...]:
        self.expect("(")
        args = [self.parse_expr(env)]
        while self.peek().text == ",":
            self.next()
            args.append(self.parse_expr(env))
        self.expect(")")
        return tuple(args)

    def parse_expr(self, env: dict[str, ParamType]) -> Expr:
        tok = self.peek()
        if tok.text == "{":
            return self.parse_table(env)
        head = self.expect_ident("an expression")
        if self.peek().text == ".":
            self.next()
            other = self.expect_ident("a bijection variable")
            return self.expand_composition(head, other, env)
        if head.text in env:
            e: Expr = Var(head.text)
            while self.peek().text == "(":
                args = self.parse_expr_args(env)
                if len(args) != 1:
                    raise ParseError(
                        error("function variables take exactly one argument", head.span)
                    )
                e = FnApp(e, args[0])
            return e
        if head.text in self.points:
            args: tuple[Expr, ...] = ()
            if self.peek().text == "(":
                args = self.parse_expr_args(env)
            return Apply(head.text, args)
        if head.text in self.atom_sets:
            return Atom(self.atom_sets[head.text], head.text)
        raise ParseError(error(f"unknown name '{head.text}'", head.span))

    def parse_table(self, env: dict[str, ParamType]) -> FnLit:
        self.expect("{")
        entries: list[tuple[str, Expr]] = []
        if self.peek().text != "}":
            entries.append(self.parse_table_entry(env))
            while self.peek().text == ",":
                self.next()
                entries.append(self.parse_table_entry(env))
        self.expect("}")
        return FnLit(tuple(entries))

    def parse_table_entry(self, env: dict[str, ParamType]) -> tuple[str, Expr]:
        label = self.expect_ident("an element label")
        self.expect("=>")
        return label.text, self.parse_expr(env)

    def expand_composition(self, f: Token, e: Token, env: dict[str, ParamType]) -> FnLit:
        ftype = env.get(f.text)
        etype = env.get(e.text)
        if not isinstance(ftype, FunParam):
            raise ParseError(
                error(f"'{f.text}' must be a function-typed variable left of '.'", f.span)
            )
        if not isinstance(etype, PermParam) or etype.base != ftype.domain:
            raise ParseError(
                error(
                    f"'{e.text}' must be a bijection of '{ftype.domain}' right of '.'",
                    e.span,
                )
            )
        ext = next(x for x in self.externals if x.name == ftype.domain)
        return FnLit(
            tuple(
                (a, FnApp(Var(f.text), FnApp(Var(e.text), Atom(ftype.domain, a))))
                for a in ext.elements
            )
        )


# ---------------------------------------------------------------------------
# Public API


def parse_signature(src: SourceFile | str) -> Signature | list[Diagnostic]:
    """Parse a signature file; a Signature on success, else error diagnostics."""
    text = src.text if isinstance(src, SourceFile) else src
    sig, diags = _Parser(text).parse()
    if sig is None:
        return diags
    return sig


def parse_closed_term(sig: Signature, text: str) -> Expr:
    """Parse a closed point term (used for class representatives in documents)."""
    p = _Parser("")
    p.externals = list(sig.externals)
    p.atom_sets = {a: e.name for e in sig.externals for a in e.elements}
    p.sorts = {d.name: d for d in sig.sort_decls()}
    p.points = {d.name: d for d in sig.point_decls()}
    p.tokens, lex_diags = _lex(text)
    p.pos = 0
    if lex_diags:
        raise ValueError(f"cannot lex term {text!r}: {lex_diags[0].message}")
    try:
        e = p.parse_expr({})
    except ParseError as exc:
        raise ValueError(f"cannot parse term {text!r}: {exc.diag.message}") from None
    if p.peek().kind != "eof":
        raise ValueError(f"trailing input after term {text!r}")
    return e


# ---------------------------------------------------------------------------
# Printing


def print_param_type(p: ParamType) -> str:
    match p:
        case ExternalParam(set_name):
            return set_name
        case PermParam(base):
            return f"Perm({base})"
        case SortParam():
            return str(p)
        case FunParam(domain, family):
            codomains = {cod for _, cod in family}
            if len(codomains) == 1:
                return f"{domain} -> {next(iter(codomains))}"
            body = ", ".join(f"{a} => {cod}" for a, cod in family)
            return f"{domain} -> {{{body}}}"
    raise TypeError(f"not a parameter type: {p!r}")


def print_telescope(tele) -> str:
    return "".join(f"({v} : {print_param_type(t)}) -> " for v, t in tele)


def print_expr(e: Expr) -> str:
    match e:
        case Var(name):
            return name
        case Atom(_, label):
            return label
        case Apply(ctor, args):
            if not args:
                return ctor
            return f"{ctor}({', '.join(print_expr(a) for a in args)})"
        case FnLit(entries):
            return "{" + ", ".join(f"{a} => {print_expr(v)}" for a, v in entries) + "}"
        case FnApp(fn, arg):
            return f"{print_expr(fn)}({print_expr(arg)})"
    raise TypeError(f"not an expression: {e!r}")


def print_signature(sig: Signature) -> str:
    lines: list[str] = []
    for ext in sig.externals:
        lines.append(f"external {ext.name} = {{{', '.join(ext.elements)}}};")
    for d in sig.decls:
        match d:
            case SortDecl(name, indices):
                if indices:
                    lines.append(f"sort {name} : {print_telescope(indices)}Set;")
                else:
                    lines.append(f"sort {name};")
            case PointDecl(name, params, sort, indices):
                target = str(SortParam(sort, indices))
                lines.append(f"point {name} : {print_telescope(params)}{target};")
            case PathDecl(name, params, _, _, lhs, rhs):
                lines.append(
                    f"path {name} : {print_telescope(params)}"
                    f"{print_expr(lhs)} = {print_expr(rhs)};"
                )
    return "\n".join(lines) + ("\n" if lines else "")
