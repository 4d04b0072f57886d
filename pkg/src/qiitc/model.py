"""Depth-bounded initial-algebra construction by term enumeration and
congruence closure.

The engine alternates two sweeps until neither changes anything:

* generation interns every well-typed constructor application whose depth
  (1 + the least member depth of each argument class, atoms and tables free)
  stays within the bound, drawing arguments from current congruence classes;
* quotienting instantiates every path constructor at every well-typed filling
  drawn from current classes, interns both endpoint terms, merges them, and
  closes under constructor congruence (pointwise for tables).

Endpoint terms may exceed the depth bound; they are kept in an overflow
stratum: stored, mergeable and queryable, but never used as filling material
and not counted as classes of the bounded model.  Class counts therefore refer
to classes containing at least one within-bound ("generated") term.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from random import Random
from typing import Any, Iterator

from .elaborate import derived_externals
from .encoding import FORMAT_VERSION
from .parser import print_expr, print_signature
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
from .values import Value, decode_perm, map_refs, perm_labels

DEFAULT_BUDGET = 100_000


class ModelError(Exception):
    pass


class BudgetExceededError(ModelError):
    """Raised when the interned-term cap is hit; carries partial statistics."""

    def __init__(self, stats: dict[str, Any]):
        super().__init__(
            f"term budget exceeded: {stats.get('terms')} terms interned "
            f"(budget {stats.get('budget')})"
        )
        self.stats = stats


class TermNotFoundError(ModelError):
    """The queried term is ill-typed, over depth, or otherwise not stored."""


@dataclass
class _TermRec:
    head: str
    args: tuple[Value, ...]  # refs are term ids of the argument representatives
    sort: str
    index: tuple[Value, ...]
    depth: int
    generated: bool
    phase: str  # e.g. "gen:1", "quot:2"
    key: tuple  # frozen structural sort key


@dataclass(frozen=True)
class PathInstance:
    path: str
    filling: tuple[tuple[str, Value], ...]
    lhs: int
    rhs: int


@dataclass(frozen=True)
class ClassInfo:
    root: int
    sort: str
    index: tuple[Value, ...]
    size: int
    generated_size: int
    rep: int
    canonical: Expr

    @property
    def observable(self) -> bool:
        return self.generated_size > 0


class TermModel:
    """Immutable result of :func:`build_model`."""

    def __init__(self, sig: Signature, depth: int, budget: int):
        self.sig = sig
        self.depth = depth
        self.budget = budget
        self.saturated = False
        self.rounds = 0
        self.merge_count = 0
        self.sorts = {d.name: d for d in sig.sort_decls()}
        self.points = {d.name: d for d in sig.point_decls()}
        self.paths = sig.path_decls()
        self.head_rank = {d.name: i for i, d in enumerate(sig.decls)}
        self.atom_rank: dict[str, tuple[int, int]] = {}
        for si, ext in enumerate(list(sig.externals) + derived_externals(sig)):
            for ai, label in enumerate(ext.elements):
                self.atom_rank[label] = (si, ai)
        self.perm_atoms = {
            e.name: e.elements for e in derived_externals(sig)
        }
        # term store
        self._recs: list[_TermRec] = []
        self._parent: list[int] = []
        self._rank: list[int] = []
        self._sig_table: dict[tuple, int] = {}
        self._users: dict[int, list[int]] = {}
        self._members: dict[int, list[int]] = {}
        self._class_depth: dict[int, int] = {}
        self._gen_count: dict[int, int] = {}
        self._rep: dict[int, int] = {}
        self._pending: deque[tuple[int, int]] = deque()
        self._merge_log: list[tuple[str, Any]] = []
        self.path_instances: list[PathInstance] = []
        self._canon_cache: dict[int, Expr] = {}

    # -- union-find -----------------------------------------------------------

    def find(self, x: int) -> int:
        p = self._parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def same_class(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def _normalize(self, v: Value) -> Value:
        return map_refs(v, self.find)

    def _signature_of(self, head: str, args: tuple[Value, ...]) -> tuple:
        return (head, tuple(self._normalize(a) for a in args))

    # -- interning -------------------------------------------------------------

    def _value_key(self, v: Value) -> tuple:
        if v[0] == "atom":
            return (0,) + self.atom_rank.get(v[1], (len(self.atom_rank), 0))
        if v[0] == "ref":
            return (1, self._recs[v[1]].key)
        return (2, tuple((self.atom_rank.get(a, (0, 0)), self._value_key(w)) for a, w in v[1]))

    def _value_depth(self, v: Value) -> int:
        depths = [self._class_depth[self.find(t)] for t in _iter_ref_ids(v)]
        return max(depths, default=-1)

    def intern(
        self, head: str, args: tuple[Value, ...], index: tuple[Value, ...], phase: str
    ) -> tuple[int, bool]:
        """Intern a term by congruence signature; returns (term id, created)."""
        sig_key = self._signature_of(head, args)
        existing = self._sig_table.get(sig_key)
        if existing is not None:
            return existing, False
        if len(self._recs) >= self.budget:
            raise BudgetExceededError(self.stats())
        tid = len(self._recs)
        rep_args = tuple(map_refs(a, lambda r: self._rep[self.find(r)]) for a in args)
        depth = 1 + max(
            (self._value_depth(a) for a in rep_args), default=-1
        )
        decl = self.points[head]
        key = (self.head_rank[head],) + tuple(self._value_key(a) for a in rep_args)
        rec = _TermRec(
            head=head,
            args=rep_args,
            sort=decl.sort,
            index=index,
            depth=depth,
            generated=depth <= self.depth,
            phase=phase,
            key=key,
        )
        self._recs.append(rec)
        self._parent.append(tid)
        self._rank.append(0)
        self._sig_table[sig_key] = tid
        self._members[tid] = [tid]
        self._class_depth[tid] = depth
        self._gen_count[tid] = 1 if rec.generated else 0
        self._rep[tid] = tid
        for r in _iter_ref_ids_many(rep_args):
            self._users.setdefault(self.find(r), []).append(tid)
        return tid, True

    def union(self, a: int, b: int, reason: tuple[str, Any]) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self._rank[ra] < self._rank[rb] or (
            self._rank[ra] == self._rank[rb] and ra > rb
        ):
            ra, rb = rb, ra
        # rb is absorbed into ra
        self._parent[rb] = ra
        if self._rank[ra] == self._rank[rb]:
            self._rank[ra] += 1
        self._members[ra].extend(self._members.pop(rb))
        self._class_depth[ra] = min(self._class_depth[ra], self._class_depth.pop(rb))
        self._gen_count[ra] += self._gen_count.pop(rb)
        old_rep, new_rep = self._rep[ra], self._rep.pop(rb)
        if self._recs[new_rep].key < self._recs[old_rep].key:
            self._rep[ra] = new_rep
        self.merge_count += 1
        self._merge_log.append(reason)
        moved = self._users.pop(rb, [])
        self._users.setdefault(ra, []).extend(moved)
        for t in moved:
            sig_key = self._signature_of(self._recs[t].head, self._recs[t].args)
            other = self._sig_table.get(sig_key)
            if other is None:
                self._sig_table[sig_key] = t
            elif not self.same_class(other, t):
                self._pending.append((other, t))
        return True

    def _process_pending(self) -> None:
        while self._pending:
            a, b = self._pending.popleft()
            self.union(a, b, ("congruence", (a, b)))

    # -- evaluation ------------------------------------------------------------

    def eval(
        self, e: Expr, env: dict[str, Value], intern: bool, phase: str = "query"
    ) -> Value | None:
        """Evaluate an index expression to a value; refs are class roots.

        With ``intern=False`` a missing constructor application yields None.
        """
        match e:
            case Var(name):
                return self._normalize(env[name])
            case Atom(_, label):
                return ("atom", label)
            case Apply(ctor, args):
                vals = []
                for a in args:
                    v = self.eval(a, env, intern, phase)
                    if v is None:
                        return None
                    vals.append(v)
                return self._apply_ctor(ctor, tuple(vals), intern, phase)
            case FnLit(entries):
                vals = []
                for a, w in entries:
                    v = self.eval(w, env, intern, phase)
                    if v is None:
                        return None
                    vals.append((a, v))
                if vals and all(v[0] == "atom" for _, v in vals):
                    # a table of atoms is a bijection literal
                    label = "{" + ",".join(f"{a}=>{v[1]}" for a, v in vals) + "}"
                    return ("atom", label)
                return ("fn", tuple(vals))
            case FnApp(fn, arg):
                vf = self.eval(fn, env, intern, phase)
                vx = self.eval(arg, env, intern, phase)
                if vf is None or vx is None:
                    return None
                if vf[0] == "fn":
                    for a, w in vf[1]:
                        if a == vx[1]:
                            return self._normalize(w)
                    return None
                return ("atom", decode_perm(vf[1])[vx[1]])
        raise TypeError(f"not an expression: {e!r}")

    def _apply_ctor(
        self, ctor: str, vals: tuple[Value, ...], intern: bool, phase: str
    ) -> Value | None:
        sig_key = self._signature_of(ctor, vals)
        tid = self._sig_table.get(sig_key)
        if tid is not None:
            return ("ref", self.find(tid))
        if not intern:
            return None
        decl = self.points[ctor]
        env = {v: val for (v, _), val in zip(decl.params, vals)}
        index = []
        for i in decl.indices:
            iv = self.eval(i, env, True, phase)
            assert iv is not None
            index.append(iv)
        tid, _ = self.intern(ctor, vals, tuple(index), phase)
        return ("ref", self.find(tid))

    # -- filling enumeration -----------------------------------------------------

    def _observable_roots(self, sort: str) -> list[int]:
        roots = [
            r
            for r in self._members
            if self._recs[self._rep[r]].sort == sort and self._gen_count[r] > 0
        ]
        roots.sort(key=lambda r: self._recs[self._rep[r]].key)
        return roots

    def enumerate_fillings(
        self, params: Telescope, env: dict[str, Value] | None = None
    ) -> Iterator[dict[str, Value]]:
        yield from self._enum(params, 0, dict(env or {}))

    def _enum(self, params, i, env) -> Iterator[dict[str, Value]]:
        if i == len(params):
            yield dict(env)
            return
        v, ptype = params[i]
        for val in self._candidates(ptype, env):
            env[v] = val
            yield from self._enum(params, i + 1, env)
        env.pop(v, None)

    def _candidates(self, ptype, env) -> list[Value]:
        match ptype:
            case ExternalParam(set_name):
                ext = self.sig.external(set_name)
                return [("atom", a) for a in (ext.elements if ext else ())]
            case PermParam(base):
                ext = self.sig.external(base)
                return [("atom", p) for p in perm_labels(ext.elements)] if ext else []
            case SortParam(sort, indices):
                expected = []
                for idx in indices:
                    val = self.eval(idx, env, intern=False)
                    if val is None:
                        return []
                    expected.append(self._normalize(val))
                out = []
                for r in self._observable_roots(sort):
                    have = tuple(self._normalize(v) for v in self._recs[self._rep[r]].index)
                    if list(have) == expected:
                        out.append(("ref", r))
                return out
            case FunParam(domain, family):
                per_atom: list[list[tuple[str, Value]]] = []
                for a, cod in family:
                    choices = self._candidates(cod, env)
                    if not choices:
                        return []
                    per_atom.append([(a, c) for c in choices])
                tables: list[Value] = [("fn", ())]
                for options in per_atom:
                    tables = [
                        ("fn", t[1] + (o,)) for t in tables for o in options
                    ]
                return tables
        raise TypeError(f"not a parameter type: {ptype!r}")

    # -- public views ------------------------------------------------------------

    def is_observable(self, x: int) -> bool:
        """True when the class of ``x`` holds at least one within-depth term."""
        return self._gen_count[self.find(x)] > 0

    def members(self, root: int) -> list[int]:
        return self._members[self.find(root)]

    def sort_of(self, root: int) -> str:
        return self._recs[self._rep[self.find(root)]].sort

    def class_index(self, root: int) -> tuple[Value, ...]:
        return tuple(
            self._normalize(v) for v in self._recs[self._rep[self.find(root)]].index
        )

    def class_of(self, e: Expr) -> int:
        """The congruence class of a closed point term stored in the model."""
        v = self.eval(e, {}, intern=False)
        if v is None or v[0] != "ref":
            raise TermNotFoundError(
                f"term '{print_expr(e)}' is not present in the model "
                f"(ill-typed, over depth {self.depth}, or never constructed)"
            )
        return self.find(v[1])

    def classes(self, sort: str, include_overflow: bool = False) -> list[ClassInfo]:
        infos = []
        for r in sorted(self._members, key=lambda r: self._recs[self._rep[r]].key):
            rep = self._rep[r]
            if self._recs[rep].sort != sort:
                continue
            info = ClassInfo(
                root=r,
                sort=sort,
                index=tuple(self._normalize(v) for v in self._recs[rep].index),
                size=len(self._members[r]),
                generated_size=self._gen_count[r],
                rep=rep,
                canonical=self.canonical_expr(r),
            )
            if info.observable or include_overflow:
                infos.append(info)
        infos.sort(key=lambda c: (self._index_key(c.index), self._expr_key(c.canonical)))
        return infos

    def canonical_expr(self, root: int, _visiting: frozenset[int] = frozenset()) -> Expr:
        """Least term of the class, computed through subclass representatives."""
        root = self.find(root)
        cached = self._canon_cache.get(root)
        if cached is not None:
            return cached
        if root in _visiting:
            return self._frozen_expr(self._rep[root])
        inner = _visiting | {root}
        best: Expr | None = None
        best_key = None
        for m in self._members[root]:
            e = self._member_expr(m, inner)
            k = self._expr_key(e)
            if best_key is None or k < best_key:
                best, best_key = e, k
        assert best is not None
        self._canon_cache[root] = best
        return best

    def _member_expr(self, tid: int, visiting: frozenset[int]) -> Expr:
        rec = self._recs[tid]
        return Apply(
            rec.head, tuple(self._value_expr(v, visiting) for v in rec.args)
        )

    def _value_expr(self, v: Value, visiting: frozenset[int] = frozenset()) -> Expr:
        if v[0] == "atom":
            return Atom(self._atom_set(v[1]), v[1])
        if v[0] == "ref":
            return self.canonical_expr(self.find(v[1]), visiting)
        return FnLit(tuple((a, self._value_expr(w, visiting)) for a, w in v[1]))

    def _frozen_expr(self, tid: int) -> Expr:
        rec = self._recs[tid]
        return Apply(
            rec.head,
            tuple(
                self._frozen_expr(v[1]) if v[0] == "ref" else self._value_expr(v)
                for v in rec.args
            ),
        )

    def _atom_set(self, label: str) -> str:
        for ext in self.sig.externals:
            if label in ext.elements:
                return ext.name
        for name, elements in self.perm_atoms.items():
            if label in elements:
                return name
        return "?"

    def _expr_key(self, e: Expr) -> tuple:
        match e:
            case Apply(ctor, args):
                return (0, self.head_rank.get(ctor, -1)) + tuple(
                    self._expr_key(a) for a in args
                )
            case Atom(_, label):
                return (1,) + self.atom_rank.get(label, (len(self.atom_rank), 0))
            case FnLit(entries):
                return (2,) + tuple(self._expr_key(v) for _, v in entries)
        raise TypeError(f"unexpected canonical expression: {e!r}")

    def _index_key(self, index: tuple[Value, ...]) -> tuple:
        return tuple(
            self._expr_key(self._value_expr(self._normalize(v))) for v in index
        )

    def value_text(self, v: Value) -> str:
        return print_expr(self._value_expr(self._normalize(v)))

    def iter_terms(self):
        """(tid, record) pairs, in interning order; argument refs are raw tids."""
        return enumerate(self._recs)

    def term_count(self) -> int:
        return len(self._recs)

    def generated_count(self) -> int:
        return sum(1 for r in self._recs if r.generated)

    # -- reporting ----------------------------------------------------------------

    def stats(self) -> dict[str, Any]:
        per_sort: dict[str, Any] = {}
        for sort in self.sorts:
            groups: dict[tuple, int] = {}
            display: dict[tuple, list[str]] = {}
            for info in self.classes(sort):
                k = self._index_key(info.index)
                groups[k] = groups.get(k, 0) + 1
                display[k] = [self.value_text(v) for v in info.index]
            per_sort[sort] = {
                "classes": sum(groups.values()),
                "groups": [
                    {"index": display[k], "classes": n}
                    for k, n in sorted(groups.items())
                ],
            }
        return {
            "sorts": per_sort,
            "terms": self.term_count(),
            "generated_terms": self.generated_count(),
            "merges": self.merge_count,
            "rounds": self.rounds,
            "saturated": self.saturated,
            "depth": self.depth,
            "budget": self.budget,
        }

    def dump(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "format_version": FORMAT_VERSION,
            "signature": print_signature(self.sig),
            "depth": self.depth,
            "sorts": [],
            "stats": self.stats(),
        }
        for sort in self.sorts:
            entries = []
            for info in self.classes(sort, include_overflow=True):
                entries.append(
                    {
                        "index": [self.value_text(v) for v in info.index],
                        "class": print_expr(info.canonical),
                        "terms": info.size,
                        "within_depth": info.observable,
                    }
                )
            doc["sorts"].append({"sort": sort, "classes": entries})
        instances = {}
        for inst in self.path_instances:
            filling = [
                [v, self.value_text(val)] for v, val in inst.filling
            ]
            key = (inst.path, tuple(map(tuple, filling)))
            instances[key] = {
                "path": inst.path,
                "filling": filling,
                "lhs": print_expr(self.canonical_expr(inst.lhs)),
                "rhs": print_expr(self.canonical_expr(inst.rhs)),
            }
        doc["path_instances"] = [instances[k] for k in sorted(instances)]
        return doc


def _iter_ref_ids(v: Value):
    if v[0] == "ref":
        yield v[1]
    elif v[0] == "fn":
        for _, w in v[1]:
            yield from _iter_ref_ids(w)


def _iter_ref_ids_many(vals):
    for v in vals:
        yield from _iter_ref_ids(v)


# ---------------------------------------------------------------------------
# Construction


def build_model(
    sig: Signature,
    depth: int,
    budget: int = DEFAULT_BUDGET,
    seed: int | None = None,
    workers: int = 1,
) -> TermModel:
    """Build the depth-bounded term model of an accepted signature.

    ``seed`` shuffles sweep work orders (a stress mode: results never depend on
    it); ``workers`` fans the pure expansion of path endpoints out to a thread
    pool, with all merges applied serially in a fixed order.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    m = TermModel(sig, depth, budget)
    rng = Random(seed) if seed is not None else None
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while True:
            m.rounds += 1
            changed = _generation_sweep(m, rng)
            changed |= _quotient_sweep(m, rng, pool)
            if not changed:
                break
        m.saturated = True
    finally:
        if pool is not None:
            pool.shutdown()
    return m


def _generation_sweep(m: TermModel, rng: Random | None) -> bool:
    changed = False
    phase = f"gen:{m.rounds}"
    for decl in m.sig.point_decls():
        fillings = list(m.enumerate_fillings(decl.params))
        if rng is not None:
            rng.shuffle(fillings)
        for env in fillings:
            args = tuple(env[v] for v, _ in decl.params)
            new_depth = 1 + max(
                (m._value_depth(a) for a in args), default=-1
            )
            if new_depth > m.depth:
                continue
            index = []
            ok = True
            for i in decl.indices:
                iv = m.eval(i, env, intern=True, phase=phase)
                if iv is None:
                    ok = False
                    break
                index.append(iv)
            if not ok:
                continue
            _, created = m.intern(decl.name, args, tuple(index), phase)
            changed |= created
    return changed


def _quotient_sweep(m: TermModel, rng: Random | None, pool) -> bool:
    """Instantiate every path constructor over current classes.

    Runs in two phases per constructor so that results cannot depend on work
    order: first every endpoint is expanded to a structural tree (a pure step,
    fanned out to the worker pool when one is given) and interned with no
    merging; only then are all merges applied through one serialized queue.
    """
    changed = False
    phase = f"quot:{m.rounds}"
    for decl in m.paths:
        fillings = list(m.enumerate_fillings(decl.params))
        if rng is not None:
            rng.shuffle(fillings)
        build = lambda env: (
            _build_tree(m, decl.lhs, env),
            _build_tree(m, decl.rhs, env),
        )
        if pool is not None:
            trees = list(pool.map(build, fillings))
        else:
            trees = [build(env) for env in fillings]
        before = m.term_count()
        pairs = []
        for env, (ltree, rtree) in zip(fillings, trees):
            lv = _intern_tree(m, ltree, phase)
            rv = _intern_tree(m, rtree, phase)
            pairs.append((env, lv, rv))
        changed |= m.term_count() > before
        for env, lv, rv in pairs:
            m.path_instances.append(
                PathInstance(
                    path=decl.name,
                    filling=tuple((v, env[v]) for v, _ in decl.params),
                    lhs=lv[1],
                    rhs=rv[1],
                )
            )
            if m.union(lv[1], rv[1], ("path", (decl.name, env))):
                changed = True
            m._process_pending()
    return changed


def _build_tree(m: TermModel, e: Expr, env: dict[str, Value]):
    """Pure structural expansion of an endpoint; no store mutation."""
    match e:
        case Var(name):
            return ("val", env[name])
        case Atom(_, label):
            return ("val", ("atom", label))
        case Apply(ctor, args):
            return ("apply", ctor, tuple(_build_tree(m, a, env) for a in args))
        case FnLit(entries):
            return ("table", tuple((a, _build_tree(m, w, env)) for a, w in entries))
        case FnApp(fn, arg):
            vf = _tree_value(_build_tree(m, fn, env))
            vx = _tree_value(_build_tree(m, arg, env))
            if vf[0] == "fn":
                for a, w in vf[1]:
                    if a == vx[1]:
                        return ("val", w)
                raise ModelError(f"table misses entry for '{vx[1]}'")
            return ("val", ("atom", decode_perm(vf[1])[vx[1]]))
    raise TypeError(f"not an expression: {e!r}")


def _tree_value(tree) -> Value:
    if tree[0] != "val":
        raise ModelError("function position must already be a value")
    return tree[1]


def _intern_tree(m: TermModel, tree, phase: str) -> Value:
    kind = tree[0]
    if kind == "val":
        return m._normalize(tree[1])
    if kind == "table":
        vals = tuple((a, _intern_tree(m, w, phase)) for a, w in tree[1])
        if vals and all(v[0] == "atom" for _, v in vals):
            label = "{" + ",".join(f"{a}=>{v[1]}" for a, v in vals) + "}"
            return ("atom", label)
        return ("fn", vals)
    _, ctor, children = tree
    vals = tuple(_intern_tree(m, c, phase) for c in children)
    out = m._apply_ctor(ctor, vals, intern=True, phase=phase)
    assert out is not None
    return out


def model_stats(m: TermModel) -> dict[str, Any]:
    return m.stats()
