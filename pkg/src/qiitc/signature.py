"""Abstract syntax and well-formedness checking for quotient inductive-inductive
signatures.

A signature lists finite external sets followed by an ordered interleaving of
sort declarations, point constructors and path constructors.  Every name must
be declared before use, so sorts can only be indexed over earlier sorts and
path endpoints only mention earlier point constructors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import Diagnostic, Span, error
from .values import is_perm_set_name, perm_set_name

# ---------------------------------------------------------------------------
# Index expressions


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Atom:
    """A literal element of a declared external set."""

    set_name: str
    label: str

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class Apply:
    """A fully applied point constructor."""

    ctor: str
    args: tuple["Expr", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.ctor
        return f"{self.ctor}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class FnLit:
    """A total table over an external set, entries in domain order."""

    entries: tuple[tuple[str, "Expr"], ...]

    def __str__(self) -> str:
        return "{" + ", ".join(f"{a} => {e}" for a, e in self.entries) + "}"


@dataclass(frozen=True)
class FnApp:
    """Application of a function- or bijection-typed telescope variable."""

    fn: "Expr"
    arg: "Expr"

    def __str__(self) -> str:
        return f"{self.fn}({self.arg})"


Expr = Var | Atom | Apply | FnLit | FnApp


# ---------------------------------------------------------------------------
# Parameter types and telescopes


@dataclass(frozen=True)
class ExternalParam:
    set_name: str

    def __str__(self) -> str:
        return self.set_name


@dataclass(frozen=True)
class PermParam:
    """The derived external set of bijections of a declared external set."""

    base: str

    def __str__(self) -> str:
        return perm_set_name(self.base)


@dataclass(frozen=True)
class SortParam:
    sort: str
    indices: tuple[Expr, ...] = ()

    def __str__(self) -> str:
        if not self.indices:
            return self.sort
        return f"{self.sort}({', '.join(map(str, self.indices))})"


@dataclass(frozen=True)
class FunParam:
    """A total function from a finite external set into sorts, given per atom."""

    domain: str
    family: tuple[tuple[str, SortParam], ...]

    def __str__(self) -> str:
        codomains = {cod for _, cod in self.family}
        if len(codomains) == 1:
            return f"{self.domain} -> {next(iter(codomains))}"
        body = ", ".join(f"{a} => {cod}" for a, cod in self.family)
        return f"{self.domain} -> {{{body}}}"


ParamType = ExternalParam | PermParam | SortParam | FunParam

Telescope = tuple[tuple[str, ParamType], ...]


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class ExternalSet:
    name: str
    elements: tuple[str, ...]
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SortDecl:
    name: str
    indices: Telescope = ()
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class PointDecl:
    name: str
    params: Telescope
    sort: str
    indices: tuple[Expr, ...] = ()
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class PathDecl:
    name: str
    params: Telescope
    sort: str
    indices: tuple[Expr, ...]
    lhs: Expr
    rhs: Expr
    span: Span | None = field(default=None, compare=False)


Decl = SortDecl | PointDecl | PathDecl


@dataclass(frozen=True)
class Signature:
    externals: tuple[ExternalSet, ...] = ()
    decls: tuple[Decl, ...] = ()

    def sort_decls(self) -> tuple[SortDecl, ...]:
        return tuple(d for d in self.decls if isinstance(d, SortDecl))

    def point_decls(self) -> tuple[PointDecl, ...]:
        return tuple(d for d in self.decls if isinstance(d, PointDecl))

    def path_decls(self) -> tuple[PathDecl, ...]:
        return tuple(d for d in self.decls if isinstance(d, PathDecl))

    def external(self, name: str) -> ExternalSet | None:
        for ext in self.externals:
            if ext.name == name:
                return ext
        return None


# ---------------------------------------------------------------------------
# Substitution


def subst(mapping: dict[str, Expr], e: Expr) -> Expr:
    match e:
        case Var(name):
            return mapping.get(name, e)
        case Atom():
            return e
        case Apply(ctor, args):
            return Apply(ctor, tuple(subst(mapping, a) for a in args))
        case FnLit(entries):
            return FnLit(tuple((a, subst(mapping, v)) for a, v in entries))
        case FnApp(fn, arg):
            return FnApp(subst(mapping, fn), subst(mapping, arg))
    raise TypeError(f"not an expression: {e!r}")


def subst_param(mapping: dict[str, Expr], p: ParamType) -> ParamType:
    match p:
        case SortParam(sort, indices):
            return SortParam(sort, tuple(subst(mapping, i) for i in indices))
        case FunParam(domain, family):
            return FunParam(
                domain,
                tuple((a, subst_param(mapping, cod)) for a, cod in family),  # type: ignore[misc]
            )
        case _:
            return p


# ---------------------------------------------------------------------------
# Static checking

Env = dict[str, ParamType]


class _Checker:
    """Walks a signature in declaration order, accumulating diagnostics."""

    def __init__(self, sig: Signature):
        self.sig = sig
        self.diags: list[Diagnostic] = []
        self.sorts: dict[str, SortDecl] = {}
        self.points: dict[str, PointDecl] = {}
        self.paths: dict[str, PathDecl] = {}
        self.atom_sets: dict[str, str] = {}  # atom label -> external set name
        self.names: set[str] = set()

    def fail(self, msg: str, decl_name: str, span: Span | None = None) -> None:
        self.diags.append(error(msg, span=span, site=decl_name))

    # -- externals ----------------------------------------------------------

    def check_externals(self) -> None:
        for ext in self.sig.externals:
            if ext.name in self.names:
                self.fail(f"duplicate name '{ext.name}'", ext.name, ext.span)
            self.names.add(ext.name)
            if is_perm_set_name(ext.name):
                self.fail(
                    f"external set name '{ext.name}' collides with a derived bijection set",
                    ext.name,
                    ext.span,
                )
            seen: set[str] = set()
            for label in ext.elements:
                if label in seen:
                    self.fail(
                        f"external set '{ext.name}' repeats element '{label}'",
                        ext.name,
                        ext.span,
                    )
                seen.add(label)
                if label in self.atom_sets:
                    self.fail(
                        f"element '{label}' already belongs to external set "
                        f"'{self.atom_sets[label]}'",
                        ext.name,
                        ext.span,
                    )
                self.atom_sets[label] = ext.name

    # -- expressions --------------------------------------------------------

    def check_expr(self, e: Expr, expected: ParamType, env: Env, site: str, span) -> None:
        """Check ``e`` against ``expected``; index mismatches are syntactic."""
        inferred = self.infer_expr(e, env, site, span, expected=expected)
        if inferred is None:
            return  # diagnostics already emitted
        if inferred != expected:
            self.fail(
                f"expected '{expected}' but found '{inferred}' in '{e}'", site, span
            )

    def infer_expr(
        self, e: Expr, env: Env, site: str, span, expected: ParamType | None = None
    ) -> ParamType | None:
        match e:
            case Var(name):
                if name not in env:
                    self.fail(f"unbound variable '{name}'", site, span)
                    return None
                return env[name]
            case Atom(set_name, label):
                ext = self.sig.external(set_name)
                if ext is None or label not in ext.elements:
                    self.fail(f"unknown element '{label}' of '{set_name}'", site, span)
                    return None
                return ExternalParam(set_name)
            case Apply(ctor, args):
                decl = self.points.get(ctor)
                if decl is None:
                    self.fail(f"unknown point constructor '{ctor}'", site, span)
                    return None
                if len(args) != len(decl.params):
                    self.fail(
                        f"'{ctor}' expects {len(decl.params)} arguments, got {len(args)}",
                        site,
                        span,
                    )
                    return None
                mapping: dict[str, Expr] = {}
                for (v, ptype), arg in zip(decl.params, args):
                    self.check_expr(arg, subst_param(mapping, ptype), env, site, span)
                    mapping[v] = arg
                return SortParam(
                    decl.sort, tuple(subst(mapping, i) for i in decl.indices)
                )
            case FnLit(entries):
                return self._infer_fnlit(e, entries, env, site, span, expected)
            case FnApp(fn, arg):
                return self._infer_fnapp(fn, arg, env, site, span)
        self.fail(f"not an index expression: {e!r}", site, span)
        return None

    def _infer_fnlit(self, e, entries, env, site, span, expected):
        if isinstance(expected, PermParam):
            base = self.sig.external(expected.base)
            if base is None:
                return None
            labels = tuple(a for a, _ in entries)
            if labels != base.elements:
                self.fail(
                    f"bijection table must cover '{expected.base}' exactly once per "
                    f"element, in declaration order",
                    site,
                    span,
                )
                return None
            images = []
            for _, v in entries:
                if not (isinstance(v, Atom) and v.set_name == expected.base):
                    self.fail(
                        f"bijection table entries must be literal elements of "
                        f"'{expected.base}'",
                        site,
                        span,
                    )
                    return None
                images.append(v.label)
            if len(set(images)) != len(images):
                self.fail("table is not a bijection", site, span)
                return None
            return expected
        if isinstance(expected, FunParam):
            dom = self.sig.external(expected.domain)
            if dom is None:
                return None
            labels = tuple(a for a, _ in entries)
            if labels != dom.elements:
                self.fail(
                    f"table must cover '{expected.domain}' exactly once per element, "
                    f"in declaration order",
                    site,
                    span,
                )
                return None
            for (a, v), (_, cod) in zip(entries, expected.family):
                self.check_expr(v, cod, env, site, span)
            return expected
        self.fail(f"table literal '{e}' used where no table is expected", site, span)
        return None

    def _infer_fnapp(self, fn, arg, env, site, span):
        ftype = self.infer_expr(fn, env, site, span)
        if ftype is None:
            return None
        if isinstance(ftype, PermParam):
            self.check_expr(arg, ExternalParam(ftype.base), env, site, span)
            return ExternalParam(ftype.base)
        if isinstance(ftype, FunParam):
            self.check_expr(arg, ExternalParam(ftype.domain), env, site, span)
            if isinstance(arg, Atom):
                for a, cod in ftype.family:
                    if a == arg.label:
                        return cod
                return None
            codomains = {cod for _, cod in ftype.family}
            if len(codomains) == 1:
                return next(iter(codomains))
            self.fail(
                f"'{fn}' has an element-dependent codomain, so it can only be "
                f"applied to literal elements",
                site,
                span,
            )
            return None
        self.fail(f"'{fn}' is not a function and cannot be applied", site, span)
        return None

    # -- telescopes ---------------------------------------------------------

    def check_param_type(
        self, p: ParamType, env: Env, site: str, span, allow_apply: bool
    ) -> None:
        match p:
            case ExternalParam(set_name):
                if self.sig.external(set_name) is None:
                    self.fail(f"unknown external set '{set_name}'", site, span)
            case PermParam(base):
                if self.sig.external(base) is None:
                    self.fail(f"unknown external set '{base}'", site, span)
            case SortParam(sort, indices):
                self._check_sort_at(sort, indices, env, site, span, allow_apply)
            case FunParam(domain, family):
                dom = self.sig.external(domain)
                if dom is None:
                    self.fail(f"unknown external set '{domain}'", site, span)
                    return
                labels = tuple(a for a, _ in family)
                if labels != dom.elements:
                    self.fail(
                        f"function type must give one codomain per element of "
                        f"'{domain}', in declaration order",
                        site,
                        span,
                    )
                    return
                for a, cod in family:
                    inner = dict(env)
                    # the codomain may mention the domain element as a literal
                    self._check_sort_at(
                        cod.sort, cod.indices, inner, site, span, allow_apply
                    )

    def _check_sort_at(self, sort, indices, env, site, span, allow_apply) -> None:
        decl = self.sorts.get(sort)
        if decl is None:
            self.fail(f"unknown sort '{sort}'", site, span)
            return
        if len(indices) != len(decl.indices):
            self.fail(
                f"sort '{sort}' expects {len(decl.indices)} indices, got {len(indices)}",
                site,
                span,
            )
            return
        if not allow_apply:
            for i in indices:
                if _contains_apply(i):
                    self.fail(
                        f"constructor application '{i}' is not allowed in a sort "
                        f"index telescope",
                        site,
                        span,
                    )
        mapping: dict[str, Expr] = {}
        for (v, ptype), i in zip(decl.indices, indices):
            self.check_expr(i, subst_param(mapping, ptype), env, site, span)
            mapping[v] = i

    def check_telescope(
        self, tele: Telescope, site: str, span, allow_apply: bool
    ) -> Env:
        env: Env = {}
        for v, ptype in tele:
            if v in env:
                self.fail(f"duplicate telescope variable '{v}'", site, span)
            if v in self.points or v in self.paths or v in self.atom_sets:
                self.fail(
                    f"telescope variable '{v}' shadows a constructor or element name",
                    site,
                    span,
                )
            self.check_param_type(ptype, env, site, span, allow_apply)
            env[v] = ptype
        return env

    # -- declarations -------------------------------------------------------

    def fresh(self, name: str, span) -> None:
        if name in self.names:
            self.fail(f"duplicate name '{name}'", name, span)
        self.names.add(name)

    def check_decl(self, d: Decl) -> None:
        match d:
            case SortDecl(name, indices, span):
                self.fresh(name, span)
                self.check_telescope(indices, name, span, allow_apply=False)
                self.sorts[name] = d
            case PointDecl(name, params, sort, indices, span):
                self.fresh(name, span)
                env = self.check_telescope(params, name, span, allow_apply=True)
                self._check_sort_at(sort, indices, env, name, span, allow_apply=True)
                self.points[name] = d
            case PathDecl(name, params, sort, indices, lhs, rhs, span):
                self.fresh(name, span)
                env = self.check_telescope(params, name, span, allow_apply=True)
                self._check_path_target(d, env)
                self.paths[name] = d

    def _check_path_target(self, d: PathDecl, env: Env) -> None:
        sides = []
        for label, e in (("left", d.lhs), ("right", d.rhs)):
            if not isinstance(e, Apply):
                self.fail(
                    f"{label} endpoint of '{d.name}' must be a point-constructor term",
                    d.name,
                    d.span,
                )
                return
            t = self.infer_expr(e, env, d.name, d.span)
            if t is None:
                return
            if not isinstance(t, SortParam):
                self.fail(
                    f"{label} endpoint of '{d.name}' is not a sort element", d.name, d.span
                )
                return
            sides.append(t)
        left, right = sides
        if left.sort != right.sort:
            self.fail(
                f"path '{d.name}' equates elements of different sorts "
                f"'{left.sort}' and '{right.sort}'",
                d.name,
                d.span,
            )
            return
        if left.indices != right.indices:
            self.fail(
                f"path '{d.name}' endpoints sit at different indices "
                f"({SortParam(left.sort, left.indices)} vs "
                f"{SortParam(right.sort, right.indices)}); endpoints must have "
                f"syntactically identical index expressions",
                d.name,
                d.span,
            )
            return
        if d.sort != left.sort or d.indices != left.indices:
            self.fail(
                f"path '{d.name}' declares target "
                f"'{SortParam(d.sort, d.indices)}' but endpoints have type "
                f"'{SortParam(left.sort, left.indices)}'",
                d.name,
                d.span,
            )


def _contains_apply(e: Expr) -> bool:
    match e:
        case Apply():
            return True
        case FnLit(entries):
            return any(_contains_apply(v) for _, v in entries)
        case FnApp(fn, arg):
            return _contains_apply(fn) or _contains_apply(arg)
        case _:
            return False


# ---------------------------------------------------------------------------
# Public operations


def validate(sig: Signature) -> list[Diagnostic]:
    """All well-formedness violations, in declaration order; empty iff accepted."""
    checker = _Checker(sig)
    checker.check_externals()
    for d in sig.decls:
        checker.check_decl(d)
    return checker.diags


def scope_of(sig: Signature, n: int) -> Signature:
    """The prefix signature with the first ``n`` declarations."""
    if not 0 <= n <= len(sig.decls):
        raise IndexError(f"declaration index {n} out of range 0..{len(sig.decls)}")
    return Signature(sig.externals, sig.decls[:n])


def infer_point_term(sig: Signature, env: Env, e: Expr) -> SortParam:
    """Infer the sort and index expressions of a well-typed point term."""
    checker = _Checker(sig)
    checker.check_externals()
    for d in sig.decls:
        checker.check_decl(d)
    checker.diags.clear()
    t = checker.infer_expr(e, env, "<term>", None)
    if checker.diags or not isinstance(t, SortParam):
        msgs = "; ".join(d.message for d in checker.diags) or f"'{e}' is not a sort element"
        raise ValueError(msgs)
    return t
