"""Finite algebras of a signature and the categorical toolkit over them:
satisfaction checking, homomorphisms, folds from term models, uniqueness
search, and the binary product / equaliser constructions.

A finite algebra gives every sort a finite carrier per evaluated index tuple
and every point constructor a total operation table.  Element labels must be
unique within a sort so that values can name elements without their fibre.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Any, Iterator

from .encoding import FORMAT_VERSION
from .model import TermModel
from .parser import print_expr
from .signature import (
    Apply,
    Atom,
    Expr,
    ExternalParam,
    FnApp,
    FnLit,
    FunParam,
    PermParam,
    Signature,
    SortParam,
    Telescope,
    Var,
)
from .values import Value, decode_perm, encode_value, decode_value, perm_labels

Index = tuple[Value, ...]


class AlgebraError(Exception):
    pass


class SearchBudgetError(AlgebraError):
    """A combinatorial enumeration exceeded its node budget."""


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    constructor: str | None = None
    filling: tuple[tuple[str, str], ...] = ()

    def __str__(self) -> str:
        parts = [self.kind]
        if self.constructor:
            parts.append(f"at '{self.constructor}'")
        if self.filling:
            parts.append("with " + ", ".join(f"{v} = {t}" for v, t in self.filling))
        return f"{' '.join(parts)}: {self.message}"


def show_value(v: Value) -> str:
    if v[0] == "atom":
        return v[1]
    if v[0] == "ref":
        return str(v[1])
    return "{" + ", ".join(f"{a} => {show_value(w)}" for a, w in v[1]) + "}"


def _show_filling(env: dict[str, Value], params: Telescope) -> tuple[tuple[str, str], ...]:
    return tuple((v, show_value(env[v])) for v, _ in params)


@dataclass
class FiniteAlgebra:
    sig: Signature
    carriers: dict[str, dict[Index, tuple[str, ...]]]
    operations: dict[str, dict[tuple[Value, ...], str]]
    name: str = ""
    # total algebras over a depth-bounded model are undefined at the boundary
    partial: bool = False

    # -- carrier access -------------------------------------------------------

    def elements(self, sort: str, index: Index) -> tuple[str, ...]:
        return self.carriers.get(sort, {}).get(index, ())

    def all_elements(self, sort: str) -> list[tuple[Index, str]]:
        out = []
        for index, elems in self.carriers.get(sort, {}).items():
            out.extend((index, e) for e in elems)
        return out

    def element_index(self, sort: str, label: str) -> Index:
        for index, elems in self.carriers.get(sort, {}).items():
            if label in elems:
                return index
        raise AlgebraError(f"no element '{label}' in sort '{sort}'")

    def size(self, sort: str) -> int:
        return sum(len(es) for es in self.carriers.get(sort, {}).values())

    # -- evaluation -----------------------------------------------------------

    def eval(self, e: Expr, env: dict[str, Value]) -> Value:
        match e:
            case Var(name):
                return env[name]
            case Atom(_, label):
                return ("atom", label)
            case Apply(ctor, args):
                vals = tuple(self.eval(a, env) for a in args)
                table = self.operations.get(ctor, {})
                if vals not in table:
                    raise AlgebraError(
                        f"operation '{ctor}' has no entry for "
                        f"({', '.join(show_value(v) for v in vals)})"
                    )
                return ("ref", table[vals])
            case FnLit(entries):
                vals = tuple((a, self.eval(w, env)) for a, w in entries)
                if vals and all(v[0] == "atom" for _, v in vals):
                    return ("atom", "{" + ",".join(f"{a}=>{v[1]}" for a, v in vals) + "}")
                return ("fn", vals)
            case FnApp(fn, arg):
                vf = self.eval(fn, env)
                vx = self.eval(arg, env)
                if vf[0] == "fn":
                    for a, w in vf[1]:
                        if a == vx[1]:
                            return w
                    raise AlgebraError(f"table misses entry for '{vx[1]}'")
                return ("atom", decode_perm(vf[1])[vx[1]])
        raise TypeError(f"not an expression: {e!r}")

    # -- filling enumeration ----------------------------------------------------

    def candidates(self, ptype, env: dict[str, Value]) -> list[Value]:
        match ptype:
            case ExternalParam(set_name):
                ext = self.sig.external(set_name)
                return [("atom", a) for a in (ext.elements if ext else ())]
            case PermParam(base):
                ext = self.sig.external(base)
                return [("atom", p) for p in perm_labels(ext.elements)] if ext else []
            case SortParam(sort, indices):
                try:
                    expected = tuple(self.eval(i, env) for i in indices)
                except AlgebraError:
                    return []
                return [("ref", e) for e in self.elements(sort, expected)]
            case FunParam(_, family):
                per_atom = []
                for a, cod in family:
                    choices = self.candidates(cod, env)
                    if not choices:
                        return []
                    per_atom.append([(a, c) for c in choices])
                tables: list[Value] = [("fn", ())]
                for options in per_atom:
                    tables = [("fn", t[1] + (o,)) for t in tables for o in options]
                return tables
        raise TypeError(f"not a parameter type: {ptype!r}")

    def fillings(
        self, params: Telescope, env: dict[str, Value] | None = None
    ) -> Iterator[dict[str, Value]]:
        def go(i: int, env: dict[str, Value]) -> Iterator[dict[str, Value]]:
            if i == len(params):
                yield dict(env)
                return
            v, ptype = params[i]
            for val in self.candidates(ptype, env):
                env[v] = val
                yield from go(i + 1, env)
            env.pop(v, None)

        yield from go(0, dict(env or {}))


# ---------------------------------------------------------------------------
# Verification


def verify_algebra(a: FiniteAlgebra) -> list[Violation]:
    """Check totality of operations, target fibres, and all path equations."""
    out: list[Violation] = []
    seen_labels: dict[str, set[str]] = {}
    for sort, fibres in a.carriers.items():
        labels = seen_labels.setdefault(sort, set())
        for index, elems in fibres.items():
            for e in elems:
                if e in labels:
                    out.append(
                        Violation(
                            "duplicate-element",
                            f"label '{e}' reused within sort '{sort}'",
                        )
                    )
                labels.add(e)
    for decl in a.sig.point_decls():
        table = a.operations.get(decl.name, {})
        seen_keys: set[tuple[Value, ...]] = set()
        for env in a.fillings(decl.params):
            args = tuple(env[v] for v, _ in decl.params)
            seen_keys.add(args)
            if args not in table:
                if not a.partial:
                    out.append(
                        Violation(
                            "missing-operation",
                            "no table entry for this argument tuple",
                            decl.name,
                            _show_filling(env, decl.params),
                        )
                    )
                continue
            result = table[args]
            try:
                target_index = tuple(a.eval(i, env) for i in decl.indices)
            except AlgebraError as exc:
                out.append(
                    Violation("bad-index", str(exc), decl.name, _show_filling(env, decl.params))
                )
                continue
            if result not in a.elements(decl.sort, target_index):
                out.append(
                    Violation(
                        "off-target",
                        f"result '{result}' is not in carrier "
                        f"{decl.sort}({', '.join(show_value(v) for v in target_index)})",
                        decl.name,
                        _show_filling(env, decl.params),
                    )
                )
        for key in table:
            if key not in seen_keys:
                out.append(
                    Violation(
                        "junk-operation",
                        f"table entry for ill-typed arguments "
                        f"({', '.join(show_value(v) for v in key)})",
                        decl.name,
                    )
                )
    for decl in a.sig.path_decls():
        for env in a.fillings(decl.params):
            try:
                lv = a.eval(decl.lhs, env)
                rv = a.eval(decl.rhs, env)
            except AlgebraError as exc:
                out.append(
                    Violation("bad-endpoint", str(exc), decl.name, _show_filling(env, decl.params))
                )
                continue
            if lv != rv:
                out.append(
                    Violation(
                        "path-violated",
                        f"{print_expr(decl.lhs)} = {show_value(lv)} but "
                        f"{print_expr(decl.rhs)} = {show_value(rv)}",
                        decl.name,
                        _show_filling(env, decl.params),
                    )
                )
    return out


# ---------------------------------------------------------------------------
# Homomorphisms


@dataclass
class Homomorphism:
    source: TermModel | FiniteAlgebra
    target: TermModel | FiniteAlgebra
    maps: dict[str, dict[Any, Any]]  # sort -> (class root | label) -> (label | root)
    name: str = ""

    def apply(self, sort: str, x: Any) -> Any:
        return self.maps[sort][x]

    def map_value(self, v: Value, ptype) -> Value:
        """Map a value through the sort maps, guided by its parameter type."""
        match ptype:
            case ExternalParam() | PermParam():
                return v
            case SortParam(sort, _):
                key = v[1]
                if isinstance(self.source, TermModel):
                    key = self.source.find(key)
                return ("ref", self.maps[sort][key])
            case FunParam(_, family):
                fam = dict(family)
                return (
                    "fn",
                    tuple((a, self.map_value(w, fam[a])) for a, w in v[1]),
                )
        raise TypeError(f"not a parameter type: {ptype!r}")

    def map_index(self, sort: str, index: Index) -> Index:
        tele = next(d for d in self.source_sig().sort_decls() if d.name == sort).indices
        return tuple(self.map_value(v, t) for v, (_, t) in zip(index, tele))

    def source_sig(self) -> Signature:
        return self.source.sig


def _target_apply(target, ctor: str, args: tuple[Value, ...]):
    """Apply a constructor in the target; None when undefined there."""
    if isinstance(target, TermModel):
        v = target._apply_ctor(ctor, args, intern=False, phase="query")
        return None if v is None else v[1]
    table = target.operations.get(ctor, {})
    return table.get(args)


def check_homomorphism(h: Homomorphism) -> list[Violation]:
    """Def: mapping then operating equals operating then mapping, everywhere
    the source is defined; sort maps must also respect evaluated indices."""
    out: list[Violation] = []
    sig = h.source_sig()
    points = {d.name: d for d in sig.point_decls()}
    if isinstance(h.source, TermModel):
        m = h.source
        for tid, rec in m.iter_terms():
            decl = points[rec.head]
            mapped_args = tuple(
                h.map_value(m._normalize(v), t) for v, (_, t) in zip(rec.args, decl.params)
            )
            expect = _target_apply(h.target, rec.head, mapped_args)
            got = h.maps[rec.sort].get(m.find(tid))
            if expect is None or got is None or expect != got:
                out.append(
                    Violation(
                        "not-commuting",
                        f"term {print_expr(m.canonical_expr(m.find(tid)))} maps to "
                        f"{got!r} but operating on mapped arguments gives {expect!r}",
                        rec.head,
                    )
                )
        for sort in m.sorts:
            for info in m.classes(sort, include_overflow=True):
                got = h.maps[sort].get(info.root)
                if got is None:
                    out.append(
                        Violation("partial-map", f"class {print_expr(info.canonical)} unmapped", None)
                    )
                    continue
                if isinstance(h.target, FiniteAlgebra):
                    want_index = h.map_index(sort, info.index)
                    if got not in h.target.elements(sort, want_index):
                        out.append(
                            Violation(
                                "index-broken",
                                f"class {print_expr(info.canonical)} maps to '{got}' "
                                f"outside its mapped index fibre",
                                None,
                            )
                        )
    else:
        a = h.source
        for decl in sig.point_decls():
            for env in a.fillings(decl.params):
                args = tuple(env[v] for v, _ in decl.params)
                src_res = a.operations.get(decl.name, {}).get(args)
                if src_res is None:
                    continue  # source operation undefined here (partial algebra)
                mapped_args = tuple(
                    h.map_value(v, t) for v, (_, t) in zip(args, decl.params)
                )
                expect = _target_apply(h.target, decl.name, mapped_args)
                got = h.maps[decl.sort].get(src_res)
                if expect is None or got is None or expect != got:
                    out.append(
                        Violation(
                            "not-commuting",
                            f"'{src_res}' maps to {got!r} but operating on mapped "
                            f"arguments gives {expect!r}",
                            decl.name,
                            _show_filling(env, decl.params),
                        )
                    )
        if isinstance(h.target, FiniteAlgebra):
            for sort, fibres in a.carriers.items():
                for index, elems in fibres.items():
                    want_index = h.map_index(sort, index)
                    for e in elems:
                        got = h.maps[sort].get(e)
                        if got is None or got not in h.target.elements(sort, want_index):
                            out.append(
                                Violation(
                                    "index-broken",
                                    f"element '{e}' of {sort} maps to {got!r} outside "
                                    f"its mapped index fibre",
                                    None,
                                )
                            )
    return out


class FoldError(AlgebraError):
    """The algebra breaks a path equation, so the fold is ill-defined."""


def fold(m: TermModel, a: FiniteAlgebra) -> Homomorphism:
    """The homomorphism defined by structural recursion on representatives.

    Well-definedness on classes is checked term by term: every member of a
    class must evaluate to the same element.
    """
    points = {d.name: d for d in m.sig.point_decls()}
    class_value: dict[int, str] = {}
    term_value: dict[int, str] = {}
    for tid, rec in m.iter_terms():
        decl = points[rec.head]
        args = []
        for v, (_, t) in zip(rec.args, decl.params):
            args.append(_fold_value(m, v, t, term_value))
        table = a.operations.get(rec.head, {})
        key = tuple(args)
        if key not in table:
            raise FoldError(
                f"operation '{rec.head}' undefined on "
                f"({', '.join(show_value(v) for v in key)})"
            )
        val = table[key]
        term_value[tid] = val
        root = m.find(tid)
        prior = class_value.get(root)
        if prior is None:
            class_value[root] = val
        elif prior != val:
            raise FoldError(
                f"fold is ill-defined: class {print_expr(m.canonical_expr(root))} "
                f"evaluates to both '{prior}' and '{val}' "
                f"(the algebra violates a path equation)"
            )
    maps: dict[str, dict[Any, Any]] = {s: {} for s in m.sorts}
    for root, val in class_value.items():
        maps[m._recs[m._rep[root]].sort][root] = val
    return Homomorphism(m, a, maps, name="fold")


def _fold_value(m: TermModel, v: Value, ptype, term_value) -> Value:
    match ptype:
        case ExternalParam() | PermParam():
            return v
        case SortParam():
            return ("ref", term_value[v[1]])
        case FunParam(_, family):
            fam = dict(family)
            return ("fn", tuple((a, _fold_value(m, w, fam[a], term_value)) for a, w in v[1]))
    raise TypeError(f"not a parameter type: {ptype!r}")


# ---------------------------------------------------------------------------
# Uniqueness of the fold


@dataclass
class UniquenessReport:
    count: int
    homs: list[Homomorphism]
    equaliser_whole: bool | None
    nodes: int


def uniqueness_check(
    m: TermModel, a: FiniteAlgebra, node_budget: int = 100_000
) -> UniquenessReport:
    """Enumerate all homomorphisms from the model by propagation + backtracking.

    For every pair found, the agreement classes are computed and compared with
    the whole model (the equaliser argument for uniqueness at finite depth).
    """
    points = {d.name: d for d in m.sig.point_decls()}
    terms = list(m.iter_terms())
    roots = sorted(
        {m.find(tid) for tid, _ in terms},
        key=lambda r: (m.head_rank[m._recs[m._rep[r]].sort], m._recs[m._rep[r]].key),
    )
    solutions: list[dict[int, str]] = []
    nodes = 0

    def propagate(assign: dict[int, str]) -> bool:
        changed = True
        while changed:
            changed = False
            for tid, rec in terms:
                root = m.find(tid)
                decl = points[rec.head]
                vals = []
                ready = True
                for v, (_, t) in zip(rec.args, decl.params):
                    w = _assign_value(m, v, t, assign)
                    if w is None:
                        ready = False
                        break
                    vals.append(w)
                if not ready:
                    continue
                res = a.operations.get(rec.head, {}).get(tuple(vals))
                if res is None:
                    return False
                prior = assign.get(root)
                if prior is None:
                    assign[root] = res
                    changed = True
                elif prior != res:
                    return False
        return True

    def search(assign: dict[int, str]) -> None:
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise SearchBudgetError(
                f"uniqueness search exceeded {node_budget} nodes"
            )
        assign = dict(assign)
        if not propagate(assign):
            return
        for r in roots:
            if r not in assign:
                rec = m._recs[m._rep[r]]
                index = tuple(m._normalize(v) for v in rec.index)
                # try every element of the mapped index fibre
                mapped = _mapped_index(m, a, rec.sort, index, assign)
                if mapped is None:
                    return
                for e in a.elements(rec.sort, mapped):
                    trial = dict(assign)
                    trial[r] = e
                    search(trial)
                return
        solutions.append(assign)

    search({})
    homs = []
    for sol in solutions:
        maps: dict[str, dict[Any, Any]] = {s: {} for s in m.sorts}
        for root, val in sol.items():
            maps[m._recs[m._rep[root]].sort][root] = val
        homs.append(Homomorphism(m, a, maps, name="enumerated"))
    whole: bool | None = None
    if homs:
        whole = True
        observable = {
            s: [c.root for c in m.classes(s)] for s in m.sorts
        }
        for h1 in homs:
            for h2 in homs:
                agree = model_agreement(h1, h2)
                if any(set(agree[s]) != set(observable[s]) for s in m.sorts):
                    whole = False
    return UniquenessReport(len(homs), homs, whole, nodes)


def _assign_value(m: TermModel, v: Value, ptype, assign) -> Value | None:
    match ptype:
        case ExternalParam() | PermParam():
            return v
        case SortParam():
            val = assign.get(m.find(v[1]))
            return None if val is None else ("ref", val)
        case FunParam(_, family):
            fam = dict(family)
            out = []
            for a, w in v[1]:
                mv = _assign_value(m, w, fam[a], assign)
                if mv is None:
                    return None
                out.append((a, mv))
            return ("fn", tuple(out))
    raise TypeError(f"not a parameter type: {ptype!r}")


def _mapped_index(m, a, sort, index, assign):
    tele = m.sorts[sort].indices
    out = []
    for v, (_, t) in zip(index, tele):
        w = _assign_value(m, v, t, assign)
        if w is None:
            return None
        out.append(w)
    return tuple(out)


def model_agreement(f: Homomorphism, g: Homomorphism) -> dict[str, list[int]]:
    """Observable classes on which two homomorphisms out of a model agree."""
    m = f.source
    assert isinstance(m, TermModel) and g.source is m
    out: dict[str, list[int]] = {}
    for sort in m.sorts:
        out[sort] = [
            c.root
            for c in m.classes(sort)
            if f.maps[sort].get(c.root) == g.maps[sort].get(c.root)
        ]
    return out


def equaliser_is_whole_model(f: Homomorphism, g: Homomorphism) -> bool:
    m = f.source
    agree = model_agreement(f, g)
    return all(
        set(agree[s]) == {c.root for c in m.classes(s)} for s in m.sorts
    )


# ---------------------------------------------------------------------------
# Homomorphism enumeration between finite algebras


def enumerate_homs(
    a: FiniteAlgebra, b: FiniteAlgebra, node_budget: int = 1_000_000
) -> list[Homomorphism]:
    """All homomorphisms a -> b, by fibrewise brute force plus filtering."""
    sorts = [d.name for d in a.sig.sort_decls()]
    partial: list[dict[str, dict[str, str]]] = [{s: {} for s in sorts}]
    nodes = 0
    for sort in sorts:
        tele = next(d for d in a.sig.sort_decls() if d.name == sort).indices
        new_partial = []
        for maps in partial:
            h = Homomorphism(a, b, maps)
            assignments: list[list[tuple[str, str]]] = [[]]
            ok = True
            for index, elems in a.carriers.get(sort, {}).items():
                try:
                    mapped = tuple(
                        h.map_value(v, t) for v, (_, t) in zip(index, tele)
                    )
                except KeyError:
                    ok = False
                    break
                targets = b.elements(sort, mapped)
                if elems and not targets:
                    ok = False
                    break
                assignments = [
                    asg + list(zip(elems, choice))
                    for asg in assignments
                    for choice in iproduct(targets, repeat=len(elems))
                ]
                nodes += len(assignments)
                if nodes > node_budget:
                    raise SearchBudgetError(
                        f"homomorphism enumeration exceeded {node_budget} nodes"
                    )
            if not ok:
                continue
            for asg in assignments:
                m2 = {s: dict(maps[s]) for s in sorts}
                m2[sort].update(dict(asg))
                new_partial.append(m2)
        partial = new_partial
    out = []
    for maps in partial:
        h = Homomorphism(a, b, maps)
        if not check_homomorphism(h):
            out.append(h)
    return out


# ---------------------------------------------------------------------------
# Product and equaliser


def _pair_label(x: str, y: str) -> str:
    return f"({x}|{y})"


def _pair_value(va: Value, vb: Value) -> Value | None:
    """Componentwise pairing; atom components must agree."""
    if va[0] == "atom" and vb[0] == "atom":
        return va if va == vb else None
    if va[0] == "ref" and vb[0] == "ref":
        return ("ref", _pair_label(va[1], vb[1]))
    if va[0] == "fn" and vb[0] == "fn":
        out = []
        for (xa, wa), (xb, wb) in zip(va[1], vb[1]):
            if xa != xb:
                return None
            w = _pair_value(wa, wb)
            if w is None:
                return None
            out.append((xa, w))
        return ("fn", tuple(out))
    return None


def product(
    a: FiniteAlgebra, b: FiniteAlgebra
) -> tuple[FiniteAlgebra, Homomorphism, Homomorphism]:
    """Binary product: carriers are fibrewise products, operations componentwise."""
    sig = a.sig
    carriers: dict[str, dict[Index, tuple[str, ...]]] = {}
    pa: dict[str, dict[str, str]] = {}
    pb: dict[str, dict[str, str]] = {}
    for decl in sig.sort_decls():
        sort = decl.name
        carriers[sort] = {}
        pa[sort] = {}
        pb[sort] = {}
        for ia, elems_a in a.carriers.get(sort, {}).items():
            for ib, elems_b in b.carriers.get(sort, {}).items():
                index = tuple(
                    _pair_value(va, vb) for va, vb in zip(ia, ib)
                ) if len(ia) == len(ib) else None
                if index is None or any(v is None for v in index):
                    continue
                labels = tuple(
                    _pair_label(x, y) for x in elems_a for y in elems_b
                )
                if labels or (not elems_a and not elems_b):
                    carriers[sort][tuple(index)] = labels  # type: ignore[arg-type]
                for x in elems_a:
                    for y in elems_b:
                        pa[sort][_pair_label(x, y)] = x
                        pb[sort][_pair_label(x, y)] = y
    prod = FiniteAlgebra(sig, carriers, {}, name=f"({a.name}x{b.name})")
    proj_a = Homomorphism(prod, a, pa, name="fst")
    proj_b = Homomorphism(prod, b, pb, name="snd")
    operations: dict[str, dict[tuple[Value, ...], str]] = {}
    for decl in sig.point_decls():
        table: dict[tuple[Value, ...], str] = {}
        for env in prod.fillings(decl.params):
            args = tuple(env[v] for v, _ in decl.params)
            args_a = tuple(
                proj_a.map_value(v, t) for v, (_, t) in zip(args, decl.params)
            )
            args_b = tuple(
                proj_b.map_value(v, t) for v, (_, t) in zip(args, decl.params)
            )
            ra = a.operations[decl.name][args_a]
            rb = b.operations[decl.name][args_b]
            table[args] = _pair_label(ra, rb)
        operations[decl.name] = table
        prod.operations[decl.name] = table
    return prod, proj_a, proj_b


def pairing(
    t: FiniteAlgebra, f: Homomorphism, g: Homomorphism, prod: FiniteAlgebra
) -> Homomorphism:
    """The mediating map <f, g> : t -> a x b."""
    maps: dict[str, dict[Any, Any]] = {}
    for sort in (d.name for d in t.sig.sort_decls()):
        maps[sort] = {
            e: _pair_label(f.maps[sort][e], g.maps[sort][e])
            for _, e in t.all_elements(sort)
        }
    return Homomorphism(t, prod, maps, name="pairing")


def equaliser(
    f: Homomorphism, g: Homomorphism
) -> tuple[FiniteAlgebra, Homomorphism]:
    """The subalgebra on which two parallel homomorphisms agree."""
    a = f.source
    assert isinstance(a, FiniteAlgebra) and g.source is a
    sig = a.sig
    keep: dict[str, set[str]] = {}
    for decl in sig.sort_decls():
        sort = decl.name
        keep[sort] = {
            e
            for _, e in a.all_elements(sort)
            if f.maps[sort].get(e) == g.maps[sort].get(e)
        }
    carriers: dict[str, dict[Index, tuple[str, ...]]] = {}
    for decl in sig.sort_decls():
        sort = decl.name
        carriers[sort] = {}
        for index, elems in a.carriers.get(sort, {}).items():
            if not _index_survives(index, decl.indices, keep):
                continue
            carriers[sort][index] = tuple(e for e in elems if e in keep[sort])
    sub = FiniteAlgebra(sig, carriers, {}, name=f"eq({f.name},{g.name})")
    for decl in sig.point_decls():
        table: dict[tuple[Value, ...], str] = {}
        for env in sub.fillings(decl.params):
            args = tuple(env[v] for v, _ in decl.params)
            res = a.operations[decl.name][args]
            if res not in keep[decl.sort]:
                raise AlgebraError(
                    f"agreement subset not closed under '{decl.name}' "
                    f"(this contradicts the homomorphism property)"
                )
            table[args] = res
        sub.operations[decl.name] = table
    inclusion = Homomorphism(
        sub, a, {s: {e: e for e in keep[s]} for s in keep}, name="incl"
    )
    return sub, inclusion


def _index_survives(index: Index, tele: Telescope, keep: dict[str, set[str]]) -> bool:
    for v, (_, t) in zip(index, tele):
        if isinstance(t, SortParam) and v[1] not in keep[t.sort]:
            return False
        if isinstance(t, FunParam):
            fam = dict(t.family)
            for a_, w in v[1]:
                if w[1] not in keep[fam[a_].sort]:
                    return False
    return True


# ---------------------------------------------------------------------------
# Serialization (.qalg)


def algebra_to_doc(a: FiniteAlgebra) -> dict[str, Any]:
    show = lambda v: v
    return {
        "format_version": FORMAT_VERSION,
        "name": a.name,
        "carriers": {
            sort: [
                {
                    "index": [encode_value(v, show) for v in index],
                    "elements": list(elems),
                }
                for index, elems in fibres.items()
            ]
            for sort, fibres in a.carriers.items()
        },
        "operations": {
            ctor: [
                {"args": [encode_value(v, show) for v in args], "value": res}
                for args, res in table.items()
            ]
            for ctor, table in a.operations.items()
        },
    }


def algebra_from_doc(sig: Signature, doc: dict[str, Any]) -> FiniteAlgebra:
    carriers: dict[str, dict[Index, tuple[str, ...]]] = {}
    for sort, fibres in doc.get("carriers", {}).items():
        carriers[sort] = {}
        for entry in fibres:
            index = tuple(decode_value(v) for v in entry["index"])
            carriers[sort][index] = tuple(entry["elements"])
    operations: dict[str, dict[tuple[Value, ...], str]] = {}
    for ctor, entries in doc.get("operations", {}).items():
        operations[ctor] = {}
        for entry in entries:
            args = tuple(decode_value(v) for v in entry["args"])
            operations[ctor][args] = entry["value"]
    return FiniteAlgebra(sig, carriers, operations, name=doc.get("name", ""))
