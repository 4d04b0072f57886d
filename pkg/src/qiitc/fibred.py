"""Fibred algebras over a term model, their total algebras, and sections.

A fibred algebra assigns every congruence class a finite motive fibre (keyed
additionally by the motive values of the class's indices) and every point
constructor a method table over argument fillings plus inductive hypotheses.
Path constructors impose coherence: the two method composites of each path
instance must agree.  A section assigns every within-depth class an element of
its motive and commutes with all methods.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Any

from .algebra import FiniteAlgebra, Homomorphism, Violation, show_value
from .encoding import FORMAT_VERSION
from .model import TermModel
from .parser import parse_closed_term, print_expr
from .signature import Expr, ExternalParam, FunParam, PermParam, SortParam, Telescope
from .values import Value, decode_value, encode_value

IhValue = Any  # str for sort args, tuple[tuple[atom, str], ...] for function args


class FibredError(Exception):
    pass


class IncoherentFibredError(FibredError):
    """Method data breaks a path coherence, so no section can exist."""


@dataclass
class FibredAlgebra:
    model: TermModel
    # sort -> (class root, index-hypothesis values) -> fibre elements;
    # a sort may instead declare one constant fibre for every class
    motive_tables: dict[str, dict[tuple[int, tuple[IhValue, ...]], tuple[str, ...]]]
    motive_defaults: dict[str, tuple[str, ...]]
    # ctor -> interleaved (argument value, hypothesis value) tuple -> element
    method_tables: dict[str, dict[tuple, str]]
    method_defaults: dict[str, str] = field(default_factory=dict)
    name: str = ""

    def fibre(self, sort: str, root: int, ihs: tuple[IhValue, ...]) -> tuple[str, ...] | None:
        root = self.model.find(root)
        table = self.motive_tables.get(sort, {})
        if (root, ihs) in table:
            return table[(root, ihs)]
        return self.motive_defaults.get(sort)

    def method(self, ctor: str, key: tuple) -> str | None:
        table = self.method_tables.get(ctor, {})
        if key in table:
            return table[key]
        return self.method_defaults.get(ctor)


# ---------------------------------------------------------------------------
# Dependent evaluation: values paired with their hypotheses


def _method_key(m: TermModel, params: Telescope, env, ihenv) -> tuple:
    key: list = []
    for v, t in params:
        key.append(m._normalize(env[v]))
        if isinstance(t, (SortParam, FunParam)):
            key.append(_freeze_ih(ihenv[v]))
    return tuple(key)


def _freeze_ih(ih: IhValue) -> IhValue:
    if isinstance(ih, dict):
        return tuple(sorted(ih.items()))
    return ih


def ih_lift(f: FibredAlgebra, e: Expr, env: dict[str, Value], ihenv: dict[str, IhValue]):
    """The hypothesis value of a point term, mirroring the method derivation."""
    from .signature import Apply, Atom, FnApp, FnLit, Var

    m = f.model
    match e:
        case Var(name):
            return ihenv[name]
        case Apply(ctor, args):
            decl = m.points[ctor]
            sub_env: dict[str, Value] = {}
            sub_ih: dict[str, IhValue] = {}
            for (v, t), a in zip(decl.params, args):
                val = m.eval(a, env, intern=False)
                if val is None:
                    raise FibredError(
                        f"term '{print_expr(a)}' is not stored in the model"
                    )
                sub_env[v] = val
                if isinstance(t, (SortParam, FunParam)):
                    sub_ih[v] = ih_lift(f, a, env, ihenv)
            key = _method_key(m, decl.params, sub_env, sub_ih)
            val = f.method(ctor, key)
            if val is None:
                raise FibredError(f"method for '{ctor}' undefined at {key!r}")
            return val
        case FnLit(entries):
            return tuple((a, ih_lift(f, w, env, ihenv)) for a, w in entries)
        case FnApp(fn, arg):
            table = ih_lift(f, fn, env, ihenv)
            x = m.eval(arg, env, intern=False)
            assert x is not None and x[0] == "atom"
            for a, w in dict(table).items() if isinstance(table, dict) else table:
                if a == x[1]:
                    return w
            raise FibredError(f"hypothesis table misses '{x[1]}'")
        case Atom():
            raise FibredError("external atoms carry no hypothesis")
    raise TypeError(f"not an expression: {e!r}")


def _index_ihs(
    f: FibredAlgebra, sort: str, indices: tuple[Expr, ...], env, ihenv
) -> tuple[IhValue, ...]:
    """Hypothesis values for the sort-valued indices of a target or argument."""
    m = f.model
    decl = m.sorts[sort]
    out = []
    for (v, t), i in zip(decl.indices, indices):
        if isinstance(t, (SortParam, FunParam)):
            out.append(_freeze_ih(ih_lift(f, i, env, ihenv)))
    return tuple(out)


def _ih_choices(
    f: FibredAlgebra, t, value: Value, env, ihenv
) -> list[IhValue] | None:
    """All hypothesis values an argument of type ``t`` with ``value`` may take."""
    m = f.model
    if isinstance(t, SortParam):
        ihs = _index_ihs(f, t.sort, t.indices, env, ihenv)
        fib = f.fibre(t.sort, value[1], ihs)
        return None if fib is None else list(fib)
    if isinstance(t, FunParam):
        per_atom: list[list[tuple[str, IhValue]]] = []
        for a, cod in t.family:
            sub = dict(value[1])[a]
            ihs = _index_ihs(f, cod.sort, cod.indices, env, ihenv)
            fib = f.fibre(cod.sort, sub[1], ihs)
            if fib is None:
                return None
            per_atom.append([(a, e) for e in fib])
        return [tuple(combo) for combo in iproduct(*per_atom)]
    return []


def _dependent_fillings(f: FibredAlgebra, params: Telescope):
    """All (env, ihenv) pairs over observable classes with hypothesis choices."""
    m = f.model

    def go(i: int, env: dict[str, Value], ihenv: dict[str, IhValue]):
        if i == len(params):
            yield dict(env), dict(ihenv)
            return
        v, t = params[i]
        for val in m._candidates(t, env):
            env[v] = val
            if isinstance(t, (SortParam, FunParam)):
                choices = _ih_choices(f, t, val, env, ihenv)
                if choices is None:
                    env.pop(v, None)
                    continue
                for ih in choices:
                    ihenv[v] = _freeze_ih(ih)
                    yield from go(i + 1, env, ihenv)
                ihenv.pop(v, None)
            else:
                yield from go(i + 1, env, ihenv)
        env.pop(v, None)

    yield from go(0, {}, {})


# ---------------------------------------------------------------------------
# Verification


def verify_fibred(f: FibredAlgebra) -> list[Violation]:
    """Totality of methods over dependent fillings, target fibres, coherence."""
    m = f.model
    out: list[Violation] = []
    for decl in m.sig.point_decls():
        for env, ihenv in _dependent_fillings(f, decl.params):
            result = m.eval(
                _apply_expr(decl), {v: env[v] for v, _ in decl.params}, intern=False
            )
            if result is None:
                continue  # the model has no term here (depth bound)
            key = _method_key(m, decl.params, env, ihenv)
            val = f.method(decl.name, key)
            show = tuple((v, show_value(env[v])) for v, _ in decl.params)
            if val is None:
                out.append(
                    Violation("missing-method", f"no entry for {key!r}", decl.name, show)
                )
                continue
            ihs = _index_ihs(f, decl.sort, decl.indices, env, ihenv)
            fib = f.fibre(decl.sort, result[1], ihs)
            if fib is None or val not in fib:
                out.append(
                    Violation(
                        "off-motive",
                        f"method value '{val}' is not in the motive fibre of "
                        f"{print_expr(m.canonical_expr(result[1]))}",
                        decl.name,
                        show,
                    )
                )
    for decl in m.sig.path_decls():
        for env, ihenv in _dependent_fillings(f, decl.params):
            try:
                lv = ih_lift(f, decl.lhs, env, ihenv)
                rv = ih_lift(f, decl.rhs, env, ihenv)
            except FibredError:
                continue  # endpoints run through classes the data does not cover
            if _freeze_ih(lv) != _freeze_ih(rv):
                out.append(
                    Violation(
                        "incoherent-path-method",
                        f"method composites disagree: "
                        f"'{lv}' along the left, '{rv}' along the right",
                        decl.name,
                        tuple((v, show_value(env[v])) for v, _ in decl.params),
                    )
                )
    return out


def _apply_expr(decl):
    from .signature import Apply, Var

    return Apply(decl.name, tuple(Var(v) for v, _ in decl.params))


# ---------------------------------------------------------------------------
# Sections


@dataclass
class Section:
    fibred: FibredAlgebra
    assignment: dict[str, dict[int, str]]  # sort -> class root -> motive element

    def value(self, sort: str, root: int) -> str:
        return self.assignment[sort][self.fibred.model.find(root)]


def find_section(f: FibredAlgebra, check_coherence: bool = True) -> Section:
    """Compute the section by structural recursion on within-depth terms."""
    if check_coherence:
        bad = verify_fibred(f)
        if bad:
            raise IncoherentFibredError(
                "fibred algebra is incoherent: " + "; ".join(str(v) for v in bad[:3])
            )
    m = f.model
    term_val: dict[int, str] = {}
    assignment: dict[str, dict[int, str]] = {s: {} for s in m.sorts}
    for tid, rec in m.iter_terms():
        if not rec.generated:
            continue
        decl = m.points[rec.head]
        env: dict[str, Value] = {}
        ihenv: dict[str, IhValue] = {}
        ok = True
        for (v, t), a in zip(decl.params, rec.args):
            env[v] = m._normalize(a)
            if isinstance(t, (SortParam, FunParam)):
                ih = _value_ih(m, a, t, term_val)
                if ih is None:
                    ok = False
                    break
                ihenv[v] = ih
        if not ok:
            raise FibredError(
                f"section recursion hit an argument outside the generated part "
                f"at {print_expr(m.canonical_expr(m.find(tid)))}"
            )
        key = _method_key(m, decl.params, env, ihenv)
        val = f.method(rec.head, key)
        if val is None:
            raise FibredError(f"method for '{rec.head}' undefined at {key!r}")
        term_val[tid] = val
        root = m.find(tid)
        prior = assignment[rec.sort].get(root)
        if prior is None:
            assignment[rec.sort][root] = val
        elif prior != val:
            raise IncoherentFibredError(
                f"section is ill-defined on class "
                f"{print_expr(m.canonical_expr(root))}: '{prior}' vs '{val}'"
            )
    return Section(f, assignment)


def _value_ih(m: TermModel, v: Value, t, term_val) -> IhValue | None:
    if isinstance(t, SortParam):
        # every member of the class was interned after its arguments, but the
        # value must come from a generated member already visited
        root = m.find(v[1])
        for member in m._members[root]:
            if member in term_val:
                return term_val[member]
        return None
    if isinstance(t, FunParam):
        out = []
        fam = dict(t.family)
        for a, w in v[1]:
            ih = _value_ih(m, w, fam[a], term_val)
            if ih is None:
                return None
            out.append((a, ih))
        return tuple(out)
    return None


def check_computation_rules(s: Section) -> list[Violation]:
    """Re-check every stored within-depth application against its method."""
    f = s.fibred
    m = f.model
    out: list[Violation] = []
    for tid, rec in m.iter_terms():
        if not rec.generated:
            continue
        decl = m.points[rec.head]
        env: dict[str, Value] = {}
        ihenv: dict[str, IhValue] = {}
        for (v, t), a in zip(decl.params, rec.args):
            env[v] = m._normalize(a)
            if isinstance(t, (SortParam, FunParam)):
                ihenv[v] = _section_ih(s, a, t)
        key = _method_key(m, decl.params, env, ihenv)
        want = f.method(rec.head, key)
        got = s.value(rec.sort, m.find(tid))
        if want != got:
            out.append(
                Violation(
                    "computation-rule",
                    f"section({print_expr(m.canonical_expr(m.find(tid)))}) = '{got}' "
                    f"but the method gives '{want}'",
                    rec.head,
                )
            )
    return out


def _section_ih(s: Section, v: Value, t) -> IhValue:
    m = s.fibred.model
    if isinstance(t, SortParam):
        return s.value(t.sort, v[1])
    fam = dict(t.family)
    return tuple((a, _section_ih(s, w, fam[a])) for a, w in v[1])


# ---------------------------------------------------------------------------
# Total algebras


def _total_label(m: TermModel, root: int, q: str) -> str:
    return f"({print_expr(m.canonical_expr(root))}|{q})"


def total_algebra(f: FibredAlgebra) -> tuple[FiniteAlgebra, Homomorphism]:
    """Dependent pairs (class, motive element) with method-induced operations."""
    m = f.model
    carriers: dict[str, dict[tuple[Value, ...], tuple[str, ...]]] = {}
    proj: dict[str, dict[str, int]] = {}
    # second components of each total element, for operations below
    second: dict[str, dict[str, str]] = {}
    for sort in m.sorts:
        decl = m.sorts[sort]
        carriers[sort] = {}
        proj[sort] = {}
        second[sort] = {}
        for info in m.classes(sort):
            for total_index, ihs in _total_indices(f, m, decl.indices, info.index, proj):
                fib = f.fibre(sort, info.root, ihs)
                if fib is None:
                    raise FibredError(
                        f"no motive fibre for class {print_expr(info.canonical)}"
                    )
                labels = tuple(_total_label(m, info.root, q) for q in fib)
                carriers[sort].setdefault(total_index, ())
                carriers[sort][total_index] = carriers[sort][total_index] + labels
                for q, lab in zip(fib, labels):
                    proj[sort][lab] = info.root
                    second[sort][lab] = q
    total = FiniteAlgebra(m.sig, carriers, {}, name=f"total({f.name})", partial=True)
    for decl in m.sig.point_decls():
        table: dict[tuple[Value, ...], str] = {}
        for env in total.fillings(decl.params):
            base_env: dict[str, Value] = {}
            ihenv: dict[str, IhValue] = {}
            for v, t in decl.params:
                base_env[v] = _untotal_value(env[v], t, proj)
                if isinstance(t, (SortParam, FunParam)):
                    ihenv[v] = _untotal_ih(env[v], t, second)
            result = m.eval(_apply_expr(decl), base_env, intern=False)
            if result is None or not m.is_observable(result[1]):
                continue  # base application exceeds the model depth
            key = _method_key(m, decl.params, base_env, ihenv)
            val = f.method(decl.name, key)
            if val is None:
                raise FibredError(f"method for '{decl.name}' undefined at {key!r}")
            table[tuple(env[v] for v, _ in decl.params)] = _total_label(
                m, result[1], val
            )
        total.operations[decl.name] = table
    projection = Homomorphism(total, m, proj, name="projection")
    return total, projection


def _total_indices(f: FibredAlgebra, m: TermModel, tele: Telescope, index, proj):
    """Total-algebra index tuples over a base index, with their hypothesis keys."""
    slots: list[list[tuple[Value, IhValue | None]]] = []
    for (v, t), val in zip(tele, index):
        if isinstance(t, SortParam):
            ihs_for = []
            fib = _class_fibre_union(f, t.sort, val[1])
            for q in fib:
                ihs_for.append((("ref", _total_label(m, m.find(val[1]), q)), q))
            slots.append(ihs_for)
        elif isinstance(t, FunParam):
            fam = dict(t.family)
            per_atom = []
            for a, w in val[1]:
                fib = _class_fibre_union(f, fam[a].sort, w[1])
                per_atom.append(
                    [((a, ("ref", _total_label(m, m.find(w[1]), q))), (a, q)) for q in fib]
                )
            combos = []
            for combo in iproduct(*per_atom):
                table = ("fn", tuple(c[0] for c in combo))
                ih = tuple(c[1] for c in combo)
                combos.append((table, ih))
            slots.append(combos)
        else:
            slots.append([(val, None)])
    for combo in iproduct(*slots):
        total_index = tuple(c[0] for c in combo)
        ihs = tuple(c[1] for c in combo if c[1] is not None)
        yield total_index, ihs


def _class_fibre_union(f: FibredAlgebra, sort: str, root: int) -> tuple[str, ...]:
    """Fibre of a class ignoring hypothesis keys (used to span total indices)."""
    m = f.model
    root = m.find(root)
    table = f.motive_tables.get(sort, {})
    out: list[str] = []
    for (r, _), fib in table.items():
        if m.find(r) == root:
            for q in fib:
                if q not in out:
                    out.append(q)
    if not out and sort in f.motive_defaults:
        out = list(f.motive_defaults[sort])
    return tuple(out)


def _untotal_value(v: Value, t, proj) -> Value:
    if isinstance(t, SortParam):
        return ("ref", proj[t.sort][v[1]])
    if isinstance(t, FunParam):
        fam = dict(t.family)
        return ("fn", tuple((a, _untotal_value(w, fam[a], proj)) for a, w in v[1]))
    return v


def _untotal_ih(v: Value, t, second) -> IhValue:
    if isinstance(t, SortParam):
        return second[t.sort][v[1]]
    fam = dict(t.family)
    return tuple((a, _untotal_ih(w, fam[a], second)) for a, w in v[1])


def section_against_projection(s: Section, total: FiniteAlgebra, projection: Homomorphism) -> bool:
    """p . s = id: the section's induced map into the total algebra splits p."""
    m = s.fibred.model
    for sort in m.sorts:
        for info in m.classes(sort):
            label = _total_label(m, info.root, s.value(sort, info.root))
            if projection.maps[sort].get(label) != info.root:
                return False
    return True


# ---------------------------------------------------------------------------
# Derived constructions


def constant_unit_fibred(m: TermModel, element: str = "u") -> FibredAlgebra:
    """The terminal motive: one element over every class."""
    return FibredAlgebra(
        model=m,
        motive_tables={s: {} for s in m.sorts},
        motive_defaults={s: (element,) for s in m.sorts},
        method_tables={d.name: {} for d in m.sig.point_decls()},
        method_defaults={d.name: element for d in m.sig.point_decls()},
        name="constant-unit",
    )


def fibred_from_hom(h: Homomorphism) -> FibredAlgebra:
    """Motives as fibres of a homomorphism into the model, methods from its ops."""
    a = h.source
    m = h.target
    assert isinstance(a, FiniteAlgebra) and isinstance(m, TermModel)
    motive_tables: dict[str, dict] = {s: {} for s in m.sorts}
    for sort in m.sorts:
        decl = m.sorts[sort]
        for index, elems in a.carriers.get(sort, {}).items():
            for e in elems:
                root = m.find(h.maps[sort][e])
                ihs = tuple(
                    _hom_fibre_ih(v, t)
                    for v, (_, t) in zip(index, decl.indices)
                    if isinstance(t, (SortParam, FunParam))
                )
                key = (root, ihs)
                motive_tables[sort].setdefault(key, ())
                motive_tables[sort][key] = motive_tables[sort][key] + (e,)
    method_tables: dict[str, dict] = {}
    for decl in m.sig.point_decls():
        table: dict[tuple, str] = {}
        for env in a.fillings(decl.params):
            base_env: dict[str, Value] = {}
            ihenv: dict[str, IhValue] = {}
            for v, t in decl.params:
                base_env[v] = h.map_value(env[v], t)
                if isinstance(t, (SortParam, FunParam)):
                    ihenv[v] = _hom_fibre_ih(env[v], t)
            res = a.operations.get(decl.name, {}).get(
                tuple(env[v] for v, _ in decl.params)
            )
            if res is None:
                continue  # source operation undefined here (partial algebra)
            key = _method_key(m, decl.params, base_env, ihenv)
            table[key] = res
        method_tables[decl.name] = table
    return FibredAlgebra(
        model=m,
        motive_tables=motive_tables,
        motive_defaults={},
        method_tables=method_tables,
        name=f"fibres({h.name})",
    )


def _hom_fibre_ih(v: Value, t) -> IhValue:
    if isinstance(t, SortParam):
        return v[1]
    fam = dict(t.family)
    return tuple((a, _hom_fibre_ih(w, fam[a])) for a, w in v[1])


# ---------------------------------------------------------------------------
# Serialization (.qfib)


def fibred_to_doc(f: FibredAlgebra) -> dict[str, Any]:
    m = f.model
    canon = lambda root: print_expr(m.canonical_expr(root))
    motives: dict[str, Any] = {}
    for sort in m.sorts:
        entry: dict[str, Any] = {}
        if sort in f.motive_defaults:
            entry["default"] = list(f.motive_defaults[sort])
        classes = []
        for (root, ihs), fib in sorted(
            f.motive_tables.get(sort, {}).items(), key=lambda kv: canon(kv[0][0])
        ):
            classes.append(
                {"class": canon(root), "ihs": list(ihs), "elements": list(fib)}
            )
        if classes:
            entry["classes"] = classes
        motives[sort] = entry
    methods: dict[str, Any] = {}
    for ctor in {d.name for d in m.sig.point_decls()}:
        entry = {}
        if ctor in f.method_defaults:
            entry["default"] = f.method_defaults[ctor]
        rows = []
        for key, val in f.method_tables.get(ctor, {}).items():
            rows.append({"key": [_ih_key_to_doc(m, k) for k in key], "value": val})
        if rows:
            entry["entries"] = rows
        methods[ctor] = entry
    return {
        "format_version": FORMAT_VERSION,
        "name": f.name,
        "motives": motives,
        "methods": methods,
    }


def _ih_key_to_doc(m: TermModel, k):
    if isinstance(k, tuple) and k and k[0] in ("atom", "ref", "fn"):
        return {
            "value": encode_value(
                k, lambda r: print_expr(m.canonical_expr(r))
            )
        }
    return {"ih": list(k) if isinstance(k, tuple) else k}


def _ih_key_from_doc(m: TermModel, doc):
    if "value" in doc:
        v = decode_value(doc["value"])
        if v[0] == "ref":
            return ("ref", m.class_of(parse_closed_term(m.sig, v[1])))
        if v[0] == "fn":
            return (
                "fn",
                tuple(
                    (a, ("ref", m.class_of(parse_closed_term(m.sig, w[1]))))
                    for a, w in v[1]
                ),
            )
        return v
    ih = doc["ih"]
    return tuple(tuple(x) for x in ih) if isinstance(ih, list) else ih


def fibred_from_doc(m: TermModel, doc: dict[str, Any], name: str = "") -> FibredAlgebra:
    motive_tables: dict[str, dict] = {s: {} for s in m.sorts}
    motive_defaults: dict[str, tuple[str, ...]] = {}
    for sort, entry in doc.get("motives", {}).items():
        if "default" in entry:
            motive_defaults[sort] = tuple(entry["default"])
        for row in entry.get("classes", []):
            root = m.class_of(parse_closed_term(m.sig, row["class"]))
            ihs = tuple(
                tuple(tuple(x) for x in ih) if isinstance(ih, list) else ih
                for ih in row.get("ihs", [])
            )
            motive_tables[sort][(root, ihs)] = tuple(row["elements"])
    method_tables: dict[str, dict] = {}
    method_defaults: dict[str, str] = {}
    for ctor, entry in doc.get("methods", {}).items():
        if "default" in entry:
            method_defaults[ctor] = entry["default"]
        table = {}
        for row in entry.get("entries", []):
            key = tuple(_ih_key_from_doc(m, k) for k in row["key"])
            table[key] = row["value"]
        method_tables[ctor] = table
    return FibredAlgebra(
        model=m,
        motive_tables=motive_tables,
        motive_defaults=motive_defaults,
        method_tables=method_tables,
        method_defaults=method_defaults,
        name=doc.get("name", name),
    )
