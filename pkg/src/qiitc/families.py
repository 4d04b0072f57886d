"""Finite limits of indexed families of sets.

An indexed family is a finite base with a finite fibre over each base element;
maps are a base map plus fibrewise maps.  The limit of a finite diagram is
computed the way the completeness proof for base categories builds it: the
limit of the bases, the limit of the total spaces, and the pullback of the
latter over the former giving the fibres.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from typing import Iterable


@dataclass(frozen=True)
class IndexedFamily:
    base: tuple[str, ...]
    fibres: dict[str, tuple[str, ...]]

    def total(self) -> list[tuple[str, str]]:
        return [(b, y) for b in self.base for y in self.fibres.get(b, ())]


@dataclass(frozen=True)
class FamilyMap:
    base_map: dict[str, str]
    fibre_maps: dict[str, dict[str, str]]

    def apply_base(self, b: str) -> str:
        return self.base_map[b]

    def apply_fibre(self, b: str, y: str) -> str:
        return self.fibre_maps[b][y]


@dataclass(frozen=True)
class FamilyDiagram:
    objects: dict[str, IndexedFamily]
    arrows: tuple[tuple[str, str, str, FamilyMap], ...]  # (name, src, dst, map)


def check_family_map(src: IndexedFamily, dst: IndexedFamily, f: FamilyMap) -> list[str]:
    problems = []
    for b in src.base:
        if f.base_map.get(b) not in dst.base:
            problems.append(f"base element '{b}' unmapped or mapped outside the base")
            continue
        image = f.base_map[b]
        for y in src.fibres.get(b, ()):
            if f.fibre_maps.get(b, {}).get(y) not in dst.fibres.get(image, ()):
                problems.append(f"fibre element '{y}' over '{b}' maps outside its fibre")
    return problems


def _tuple_label(parts: Iterable[str]) -> str:
    return "(" + ",".join(parts) + ")"


def family_limit(
    diagram: FamilyDiagram,
) -> tuple[IndexedFamily, dict[str, FamilyMap]]:
    """Limit family and its projections, via base limit + total-space pullback."""
    names = sorted(diagram.objects)
    # limit of bases: compatible tuples
    base_tuples = [
        combo
        for combo in iproduct(*(diagram.objects[n].base for n in names))
        if _commutes(diagram, names, dict(zip(names, combo)), lambda fm, n, x: fm.apply_base(x))
    ]
    # limit of total spaces: compatible tuples of (base, fibre) points
    total_tuples = [
        combo
        for combo in iproduct(*(diagram.objects[n].total() for n in names))
        if _commutes(
            diagram,
            names,
            dict(zip(names, combo)),
            lambda fm, n, p: (fm.apply_base(p[0]), fm.apply_fibre(p[0], p[1])),
        )
    ]
    # pullback: the fibre over a base tuple collects the total tuples above it
    base_labels = [_tuple_label(c) for c in base_tuples]
    fibres: dict[str, tuple[str, ...]] = {}
    fibre_points: dict[str, list[tuple]] = {}
    for combo in base_tuples:
        label = _tuple_label(combo)
        points = [t for t in total_tuples if tuple(p[0] for p in t) == combo]
        fibre_points[label] = points
        fibres[label] = tuple(_tuple_label(p[1] for p in t) for t in points)
    limit = IndexedFamily(tuple(base_labels), fibres)
    projections: dict[str, FamilyMap] = {}
    for i, n in enumerate(names):
        base_map = {_tuple_label(c): c[i] for c in base_tuples}
        fibre_maps: dict[str, dict[str, str]] = {}
        for combo in base_tuples:
            label = _tuple_label(combo)
            fibre_maps[label] = {
                _tuple_label(p[1] for p in t): t[i][1] for t in fibre_points[label]
            }
        projections[n] = FamilyMap(base_map, fibre_maps)
    return limit, projections


def _commutes(diagram, names, point: dict[str, object], step) -> bool:
    for _, src, dst, fm in diagram.arrows:
        if step(fm, src, point[src]) != point[dst]:
            return False
    return True


def enumerate_family_maps(src: IndexedFamily, dst: IndexedFamily) -> list[FamilyMap]:
    """All family maps src -> dst (brute force; for universal-property checks)."""
    out: list[FamilyMap] = []
    base_choices = list(iproduct(dst.base, repeat=len(src.base)))
    for bchoice in base_choices:
        base_map = dict(zip(src.base, bchoice))
        per_base_options: list[list[tuple[str, dict[str, str]]]] = []
        feasible = True
        for b in src.base:
            ys = src.fibres.get(b, ())
            targets = dst.fibres.get(base_map[b], ())
            if ys and not targets:
                feasible = False
                break
            options = [
                (b, dict(zip(ys, choice))) for choice in iproduct(targets, repeat=len(ys))
            ]
            per_base_options.append(options)
        if not feasible:
            continue
        for combo in iproduct(*per_base_options):
            out.append(FamilyMap(base_map, {b: fm for b, fm in combo}))
    return out


def compose_family_maps(f: FamilyMap, g: FamilyMap, src: IndexedFamily) -> FamilyMap:
    """g after f, with domain data taken from src."""
    base_map = {b: g.apply_base(f.apply_base(b)) for b in src.base}
    fibre_maps = {
        b: {
            y: g.apply_fibre(f.apply_base(b), f.apply_fibre(b, y))
            for y in src.fibres.get(b, ())
        }
        for b in src.base
    }
    return FamilyMap(base_map, fibre_maps)


def check_limit_universal_property(
    diagram: FamilyDiagram,
    limit: IndexedFamily,
    projections: dict[str, FamilyMap],
    cone_tip: IndexedFamily,
    cone_maps: dict[str, FamilyMap],
) -> bool:
    """Exactly one map from the cone tip factors the cone through the limit."""
    count = 0
    for cand in enumerate_family_maps(cone_tip, limit):
        if all(
            compose_family_maps(cand, projections[n], cone_tip) == cone_maps[n]
            for n in diagram.objects
        ):
            count += 1
    return count == 1
