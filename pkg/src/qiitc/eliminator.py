"""Derivation of elimination principles from accepted signatures.

For every sort a motive family, for every constructor a method, and for the
whole signature a section statement with one computation rule per point
constructor.  Methods quantify over the constructor's telescope with one
inductive hypothesis inserted directly after each sort-valued argument
(pointwise for function-typed arguments); path methods are dependent
equalities over the motive transported along the path.

Naming scheme (fixed, so rendered output is reproducible): motives are named
``Q``, ``R``, then ``M3``, ``M4``, ...; the method for constructor ``c`` is
``m_c``; the section function for sort ``S`` is ``h_S``; the inductive
hypothesis for a variable ``v`` is ``v'``; the element argument of motives and
sections is ``self``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .encoding import FORMAT_VERSION, expr_from_doc, expr_to_doc, param_from_doc, param_to_doc
from .signature import (
    Apply,
    Atom,
    Expr,
    FnApp,
    FnLit,
    FunParam,
    ParamType,
    PathDecl,
    PointDecl,
    Signature,
    SortParam,
    Telescope,
    Var,
)
from .parser import print_expr, print_param_type

# ---------------------------------------------------------------------------
# Type forms appearing in derived statements


@dataclass(frozen=True)
class SetForm:
    pass


@dataclass(frozen=True)
class ParamForm:
    param: ParamType


@dataclass(frozen=True)
class MotiveApp:
    motive: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class DepFun:
    """Pointwise hypothesis over a function argument: (a : A) -> cod."""

    binder: str
    domain: str
    cod: "TypeForm"


@dataclass(frozen=True)
class PathOver:
    lhs: Expr
    motive: str
    motive_indices: tuple[Expr, ...]
    path: Expr
    rhs: Expr


TypeForm = SetForm | ParamForm | MotiveApp | DepFun | PathOver

Binder = tuple[str, TypeForm]


@dataclass(frozen=True)
class Motive:
    sort: str
    name: str
    binders: tuple[Binder, ...]


@dataclass(frozen=True)
class Method:
    ctor: str
    name: str
    kind: str  # "point" | "path"
    binders: tuple[Binder, ...]
    result: TypeForm


@dataclass(frozen=True)
class SectionFun:
    sort: str
    name: str
    binders: tuple[Binder, ...]
    result: MotiveApp


@dataclass(frozen=True)
class ComputationRule:
    ctor: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class EliminatorSpec:
    motives: tuple[Motive, ...]
    methods: tuple[Method, ...]
    sections: tuple[SectionFun, ...]
    rules: tuple[ComputationRule, ...]


def ih_name(var: str) -> str:
    return var + "'"


def method_name(ctor: str) -> str:
    return "m_" + ctor


def section_name(sort: str) -> str:
    return "h_" + sort


def _motive_names(sorts: list[str]) -> dict[str, str]:
    names = {}
    for i, s in enumerate(sorts):
        names[s] = ("Q", "R")[i] if i < 2 else f"M{i + 1}"
    return names


class _Deriver:
    def __init__(self, sig: Signature):
        self.sig = sig
        self.sorts = {d.name: d for d in sig.sort_decls()}
        self.points = {d.name: d for d in sig.point_decls()}
        self.motive_name = _motive_names([d.name for d in sig.sort_decls()])
        self.externals = {e.name: e for e in sig.externals}

    # -- hypothesis machinery -------------------------------------------------

    def _fresh_binder(self, domain: str, taken: set[str]) -> str:
        base = domain[:1].lower() or "x"
        name = base
        k = 0
        while name in taken:
            name = f"{base}{k}"
            k += 1
        return name

    def motive_args(self, sort: str, indices: tuple[Expr, ...], element: Expr,
                    lift) -> tuple[Expr, ...]:
        """Arguments for applying sort's motive: indices, element, index lifts."""
        decl = self.sorts[sort]
        args = list(indices) + [element]
        for (v, t), i in zip(decl.indices, indices):
            if isinstance(t, (SortParam, FunParam)):
                args.append(lift(i, t))
        return tuple(args)

    def hypothesis_type(self, t: ParamType, element: Expr, lift,
                        taken: set[str]) -> TypeForm | None:
        """The inductive-hypothesis type for an argument of type ``t``."""
        if isinstance(t, SortParam):
            m = self.motive_name[t.sort]
            return MotiveApp(m, self.motive_args(t.sort, t.indices, element, lift))
        if isinstance(t, FunParam):
            binder = self._fresh_binder(t.domain, taken)
            # pointwise over the domain; a constant codomain is the common case
            cods = {cod for _, cod in t.family}
            cod = next(iter(cods))
            point = FnApp(element, Var(binder))
            m = self.motive_name[cod.sort]
            inner = MotiveApp(m, self.motive_args(cod.sort, cod.indices, point, lift))
            return DepFun(binder, t.domain, inner)
        return None

    def method_lift(self, e: Expr, t: ParamType | None = None) -> Expr:
        """Rewrite a point term into its method-level companion."""
        match e:
            case Var(name):
                return Var(ih_name(name))
            case Apply(ctor, args):
                decl = self.points[ctor]
                out: list[Expr] = []
                for (v, pt), a in zip(decl.params, args):
                    out.append(a)
                    if isinstance(pt, (SortParam, FunParam)):
                        out.append(self.method_lift(a, pt))
                return Apply(method_name(ctor), tuple(out))
            case FnLit(entries):
                return FnLit(tuple((a, self.method_lift(v)) for a, v in entries))
            case FnApp(fn, arg):
                return FnApp(self.method_lift(fn), arg)
        raise ValueError(f"no inductive hypothesis for '{print_expr(e)}'")

    def section_lift(self, e: Expr, t: ParamType) -> Expr:
        """The recursive call standing for the hypothesis of ``e`` in rules."""
        if isinstance(t, SortParam):
            return Apply(section_name(t.sort), tuple(t.indices) + (e,))
        if isinstance(t, FunParam):
            entries = []
            for a, cod in t.family:
                call = Apply(
                    section_name(cod.sort),
                    tuple(cod.indices) + (FnApp(e, Atom(t.domain, a)),),
                )
                entries.append((a, call))
            return FnLit(tuple(entries))
        raise ValueError(f"no recursive call for parameter type {t}")

    # -- pieces ----------------------------------------------------------------

    def motive(self, sort: str) -> Motive:
        decl = self.sorts[sort]
        binders: list[Binder] = [(v, ParamForm(t)) for v, t in decl.indices]
        self_ty = SortParam(sort, tuple(Var(v) for v, _ in decl.indices))
        binders.append(("self", ParamForm(self_ty)))
        taken = {v for v, _ in decl.indices} | {"self"}
        for v, t in decl.indices:
            hyp = self.hypothesis_type(t, Var(v), self._index_lift, taken | {ih_name(v)})
            if hyp is not None:
                binders.append((ih_name(v), hyp))
        return Motive(sort, self.motive_name[sort], tuple(binders))

    def _index_lift(self, e: Expr, t: ParamType) -> Expr:
        # sort index telescopes contain no constructor applications, so the
        # lift of an index expression is the primed variable (or table thereof)
        return self.method_lift(e, t)

    def point_binders(self, params: Telescope) -> tuple[Binder, ...]:
        binders: list[Binder] = []
        taken = {v for v, _ in params} | {ih_name(v) for v, _ in params}
        for v, t in params:
            binders.append((v, ParamForm(t)))
            hyp = self.hypothesis_type(t, Var(v), self.method_lift, taken)
            if hyp is not None:
                binders.append((ih_name(v), hyp))
        return tuple(binders)

    def point_method(self, d: PointDecl) -> Method:
        binders = self.point_binders(d.params)
        element = Apply(d.name, tuple(Var(v) for v, _ in d.params))
        result = MotiveApp(
            self.motive_name[d.sort],
            self.motive_args(d.sort, d.indices, element, self.method_lift),
        )
        return Method(d.name, method_name(d.name), "point", binders, result)

    def path_method(self, d: PathDecl) -> Method:
        binders = self.point_binders(d.params)
        result = PathOver(
            lhs=self.method_lift(d.lhs),
            motive=self.motive_name[d.sort],
            motive_indices=d.indices,
            path=Apply(d.name, tuple(Var(v) for v, _ in d.params)),
            rhs=self.method_lift(d.rhs),
        )
        return Method(d.name, method_name(d.name), "path", binders, result)

    def section(self, sort: str) -> SectionFun:
        decl = self.sorts[sort]
        binders: list[Binder] = [(v, ParamForm(t)) for v, t in decl.indices]
        self_ty = SortParam(sort, tuple(Var(v) for v, _ in decl.indices))
        binders.append(("self", ParamForm(self_ty)))
        result = MotiveApp(
            self.motive_name[sort],
            self.motive_args(
                sort,
                tuple(Var(v) for v, _ in decl.indices),
                Var("self"),
                self.section_lift,
            ),
        )
        return SectionFun(sort, section_name(sort), tuple(binders), result)

    def rule(self, d: PointDecl) -> ComputationRule:
        term = Apply(d.name, tuple(Var(v) for v, _ in d.params))
        lhs = Apply(section_name(d.sort), tuple(d.indices) + (term,))
        out: list[Expr] = []
        for v, t in d.params:
            out.append(Var(v))
            if isinstance(t, (SortParam, FunParam)):
                out.append(self.section_lift(Var(v), t))
        rhs = Apply(method_name(d.name), tuple(out))
        return ComputationRule(d.name, lhs, rhs)


def derive_eliminator(sig: Signature) -> EliminatorSpec:
    """Motives, methods, section statement and computation rules for ``sig``."""
    dv = _Deriver(sig)
    motives = tuple(dv.motive(d.name) for d in sig.sort_decls())
    methods: list[Method] = []
    rules: list[ComputationRule] = []
    for d in sig.decls:
        if isinstance(d, PointDecl):
            methods.append(dv.point_method(d))
            rules.append(dv.rule(d))
        elif isinstance(d, PathDecl):
            methods.append(dv.path_method(d))
    sections = tuple(dv.section(d.name) for d in sig.sort_decls())
    return EliminatorSpec(motives, tuple(methods), sections, tuple(rules))


# ---------------------------------------------------------------------------
# Rendering


def _render_type(t: TypeForm) -> str:
    match t:
        case SetForm():
            return "Set"
        case ParamForm(param):
            return print_param_type(param)
        case MotiveApp(motive, args):
            if not args:
                return motive
            return f"{motive}({', '.join(print_expr(a) for a in args)})"
        case DepFun(binder, domain, cod):
            return f"({binder} : {domain}) -> {_render_type(cod)}"
        case PathOver(lhs, motive, motive_indices, path, rhs):
            fam = motive
            if motive_indices:
                fam = f"{motive}({', '.join(print_expr(i) for i in motive_indices)})"
            return f"{print_expr(lhs)} =[ap {fam} {print_expr(path)}] {print_expr(rhs)}"
    raise TypeError(f"not a type form: {t!r}")


def _render_signature_line(binders: tuple[Binder, ...], result: str) -> str:
    prefix = "".join(f"({v} : {_render_type(t)}) -> " for v, t in binders)
    return prefix + result


def render_text(spec: EliminatorSpec) -> str:
    lines = []
    for m in spec.motives:
        lines.append(f"motive {m.name} : {_render_signature_line(m.binders, 'Set')}")
    for m in spec.methods:
        lines.append(
            f"method {m.name} : {_render_signature_line(m.binders, _render_type(m.result))}"
        )
    for s in spec.sections:
        lines.append(
            f"section {s.name} : {_render_signature_line(s.binders, _render_type(s.result))}"
        )
    for r in spec.rules:
        lines.append(f"rule {print_expr(r.lhs)} = {print_expr(r.rhs)}")
    return "\n".join(lines) + ("\n" if lines else "")


def _type_to_doc(t: TypeForm) -> Any:
    match t:
        case SetForm():
            return ["Set"]
        case ParamForm(param):
            return ["param", param_to_doc(param)]
        case MotiveApp(motive, args):
            return ["motive", motive, [expr_to_doc(a) for a in args]]
        case DepFun(binder, domain, cod):
            return ["depfun", binder, domain, _type_to_doc(cod)]
        case PathOver(lhs, motive, motive_indices, path, rhs):
            return [
                "pathover",
                expr_to_doc(lhs),
                motive,
                [expr_to_doc(i) for i in motive_indices],
                expr_to_doc(path),
                expr_to_doc(rhs),
            ]
    raise TypeError(f"not a type form: {t!r}")


def _type_from_doc(doc: Any) -> TypeForm:
    match doc[0]:
        case "Set":
            return SetForm()
        case "param":
            return ParamForm(param_from_doc(doc[1]))
        case "motive":
            return MotiveApp(doc[1], tuple(expr_from_doc(a) for a in doc[2]))
        case "depfun":
            return DepFun(doc[1], doc[2], _type_from_doc(doc[3]))
        case "pathover":
            return PathOver(
                expr_from_doc(doc[1]),
                doc[2],
                tuple(expr_from_doc(i) for i in doc[3]),
                expr_from_doc(doc[4]),
                expr_from_doc(doc[5]),
            )
    raise ValueError(f"bad type form document: {doc!r}")


def _binders_to_doc(binders: tuple[Binder, ...]) -> Any:
    return [[v, _type_to_doc(t)] for v, t in binders]


def _binders_from_doc(doc: Any) -> tuple[Binder, ...]:
    return tuple((v, _type_from_doc(t)) for v, t in doc)


def eliminator_to_doc(spec: EliminatorSpec) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "motives": [
            {"sort": m.sort, "name": m.name, "binders": _binders_to_doc(m.binders)}
            for m in spec.motives
        ],
        "methods": [
            {
                "ctor": m.ctor,
                "name": m.name,
                "kind": m.kind,
                "binders": _binders_to_doc(m.binders),
                "result": _type_to_doc(m.result),
            }
            for m in spec.methods
        ],
        "sections": [
            {
                "sort": s.sort,
                "name": s.name,
                "binders": _binders_to_doc(s.binders),
                "result": _type_to_doc(s.result),
            }
            for s in spec.sections
        ],
        "rules": [
            {"ctor": r.ctor, "lhs": expr_to_doc(r.lhs), "rhs": expr_to_doc(r.rhs)}
            for r in spec.rules
        ],
    }


def eliminator_from_doc(doc: dict[str, Any]) -> EliminatorSpec:
    motives = tuple(
        Motive(m["sort"], m["name"], _binders_from_doc(m["binders"]))
        for m in doc["motives"]
    )
    methods = tuple(
        Method(
            m["ctor"],
            m["name"],
            m["kind"],
            _binders_from_doc(m["binders"]),
            _type_from_doc(m["result"]),
        )
        for m in doc["methods"]
    )
    sections = tuple(
        SectionFun(
            s["sort"],
            s["name"],
            _binders_from_doc(s["binders"]),
            _type_from_doc(s["result"]),  # type: ignore[arg-type]
        )
        for s in doc["sections"]
    )
    rules = tuple(
        ComputationRule(r["ctor"], expr_from_doc(r["lhs"]), expr_from_doc(r["rhs"]))
        for r in doc["rules"]
    )
    return EliminatorSpec(motives, methods, sections, rules)


def render_eliminator(spec: EliminatorSpec, format: str = "text"):
    """Render as display text or as a loss-free structured document."""
    if format == "text":
        return render_text(spec)
    if format == "structured":
        return eliminator_to_doc(spec)
    raise ValueError(f"unknown format {format!r}")
