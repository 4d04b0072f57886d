"""Independent oracles for the [DERIVED] expected values.

Nothing here reuses the engine's machinery: terms are plain nested tuples,
equivalence closure is naive quadratic relabelling (no union-find, no
signature tables), and enumeration is raw-term based (no classes).
"""

from __future__ import annotations

from itertools import permutations, product

# ---------------------------------------------------------------------------
# Permutable trees over a finite branching set: canonical-form oracle

LEAF = ("leaf",)


def all_trees(depth: int, arity: int = 2) -> set[tuple]:
    """All trees with node nesting depth <= depth (leaf has depth 0)."""
    layers = {LEAF}
    for _ in range(depth):
        layers = layers | {
            ("node",) + combo for combo in product(sorted(layers), repeat=arity)
        }
    return layers


def canonical_tree(t: tuple) -> tuple:
    """Canonicalize children orbits under all bijections, recursively."""
    if t == LEAF:
        return t
    children = tuple(canonical_tree(c) for c in t[1:])
    best = min(
        tuple(children[i] for i in perm)
        for perm in permutations(range(len(children)))
    )
    return ("node",) + best


def tree_orbit_count(depth: int, arity: int = 2) -> int:
    return len({canonical_tree(t) for t in all_trees(depth, arity)})


# ---------------------------------------------------------------------------
# Naive-closure oracles: raw enumeration plus quadratic congruence closure


def _close(pool: list[tuple], pairs: list[tuple[tuple, tuple]]) -> dict[tuple, int]:
    """Equivalence classes over pool generated by pairs + constructor congruence,
    computed by naive iteration (relabelling passes, no union-find)."""
    cls = {t: i for i, t in enumerate(pool)}

    def merge(a: tuple, b: tuple) -> bool:
        ca, cb = cls[a], cls[b]
        if ca == cb:
            return False
        for t, c in cls.items():
            if c == cb:
                cls[t] = ca
        return True

    changed = True
    while changed:
        changed = False
        for a, b in pairs:
            if merge(a, b):
                changed = True
        for i, s in enumerate(pool):
            for t in pool[i + 1 :]:
                if s[0] != t[0] or len(s) != len(t):
                    continue
                if all(_arg_eq(x, y, cls) for x, y in zip(s[1:], t[1:])):
                    if merge(s, t):
                        changed = True
    return cls


def _arg_eq(x, y, cls) -> bool:
    # arguments are terms or tuples of terms (function tables)
    if isinstance(x, tuple) and x and isinstance(x[0], tuple):
        return len(x) == len(y) and all(cls[a] == cls[b] for a, b in zip(x, y))
    return cls[x] == cls[y]


def interval_oracle(depth: int) -> int:
    pool = [("l",), ("r",)]
    cls = _close(pool, [(("l",), ("r",))])
    return len(set(cls.values()))


def nat_oracle(depth: int) -> int:
    pool = [("zero",)]
    for _ in range(depth):
        pool.append(("suc", pool[-1]))
    cls = _close(pool, [])
    return len(set(cls.values()))


def trees_naive_oracle(depth: int, arity: int = 2) -> int:
    """Class count for the mix quotient by raw enumeration + naive closure."""
    generated = sorted(all_trees(depth, arity))
    pool = list(generated)
    seen = set(pool)
    pairs = []
    for f in product(generated, repeat=arity):
        lhs = ("node",) + f
        for perm in permutations(range(arity)):
            rhs = ("node",) + tuple(f[i] for i in perm)
            for t in (lhs, rhs):
                if t not in seen:
                    seen.add(t)
                    pool.append(t)
            pairs.append((lhs, rhs))
    cls = _close(pool, pairs)
    observable = {cls[t] for t in generated}
    return len(observable)


# ---------------------------------------------------------------------------
# Contexts-and-types: two dependent sorts with one path constructor

EPS = ("eps",)


def _ct_depth(t: tuple) -> int:
    if t == EPS:
        return 0
    return 1 + max(_ct_depth(a) for a in t[1:])


def _ct_sort(t: tuple) -> str:
    return "Con" if t[0] in ("eps", "ext") else "Ty"


def _ct_index(t: tuple) -> tuple:
    # iota(g) and sigma(g, a, b) are types in context g
    return t[1]


def con_ty_oracle(depth: int) -> dict[str, object]:
    """Observable class counts by raw enumeration + naive closure."""
    pool: list[tuple] = [EPS]
    generated: set[tuple] = {EPS}
    extra: set[tuple] = set()
    pairs: list[tuple[tuple, tuple]] = []
    cls = _close(pool, pairs)

    def lookup_ext(g: tuple, a: tuple):
        """Class of ext(g, a) modulo the current equivalence, if represented."""
        for t in pool:
            if t not in cls:
                continue  # added after the last closure pass; visible next sweep
            if t[0] == "ext" and cls[t[1]] == cls[g] and cls[t[2]] == cls[a]:
                return cls[t]
        return None

    def add(t: tuple, stratum: set[tuple]) -> bool:
        if t in generated or t in extra:
            return False
        stratum.add(t)
        pool.append(t)
        return True

    changed = True
    while changed:
        changed = False
        cls = _close(pool, pairs)
        cons = [t for t in pool if t in generated and _ct_sort(t) == "Con"]
        tys = [t for t in pool if t in generated and _ct_sort(t) == "Ty"]
        # generation sweep at bounded depth, typed modulo the closure
        for g in list(cons):
            if 1 + _ct_depth(g) <= depth and add(("iota", g), generated):
                changed = True
        for g in list(cons):
            for a in list(tys):
                if cls[_ct_index(a)] != cls[g]:
                    continue
                t = ("ext", g, a)
                if _ct_depth(t) <= depth and add(t, generated):
                    changed = True
        cls = _close(pool, pairs)
        for g in list(cons):
            for a in list(tys):
                if cls[_ct_index(a)] != cls[g]:
                    continue
                target = lookup_ext(g, a)
                if target is None:
                    continue
                for b in list(tys):
                    if cls[_ct_index(b)] != target:
                        continue
                    t = ("sigma", g, a, b)
                    if _ct_depth(t) <= depth and add(t, generated):
                        changed = True
        cls = _close(pool, pairs)
        # path instances over all well-typed fillings from the pool
        for g in list(cons):
            for a in list(tys):
                if cls[_ct_index(a)] != cls[g]:
                    continue
                target = lookup_ext(g, a)
                if target is None:
                    continue
                for b in list(tys):
                    if cls[_ct_index(b)] != target:
                        continue
                    lhs = ("ext", ("ext", g, a), b)
                    rhs = ("ext", g, ("sigma", g, a, b))
                    for t in (lhs, rhs, ("ext", g, a), ("sigma", g, a, b)):
                        if add(t, extra):
                            changed = True
                    if (lhs, rhs) not in pairs:
                        pairs.append((lhs, rhs))
                        changed = True
        cls = _close(pool, pairs)
    counts: dict[str, object] = {}
    for sort in ("Con", "Ty"):
        observable = {cls[t] for t in generated if _ct_sort(t) == sort}
        counts[sort] = len(observable)
    counts["merged"] = any(
        cls[l] == cls[r] and l != r for l, r in pairs
    )
    counts["pool"] = len(pool)
    counts["extra"] = len(extra)
    return counts


# ---------------------------------------------------------------------------
# Bijections of a finite set, by filtering all tables


def bijection_tables(elements: tuple[str, ...]) -> list[dict[str, str]]:
    out = []
    for image in product(elements, repeat=len(elements)):
        table = dict(zip(elements, image))
        if len(set(image)) == len(elements):
            out.append(table)
    return out
