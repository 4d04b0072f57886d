"""Semantic staging of an accepted signature.

The elaborator reads off, per sort, which stage of the iterated base category
it inhabits (the sort ladder), and per constructor a functorial description:
the argument telescope, the target, and a certificate naming the closure rule
that guarantees the target is a legitimate constructor target.  Certificates
are assigned purely syntactically; nothing semantic is ever decided.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .encoding import FORMAT_VERSION, expr_to_doc, telescope_to_doc
from .signature import (
    Expr,
    ExternalSet,
    FunParam,
    ParamType,
    PathDecl,
    PermParam,
    PointDecl,
    Signature,
    SortDecl,
    Telescope,
)
from .values import perm_labels, perm_set_name

# Closure rules for target functors.  Projection targets pick out one sort's
# carrier; reindexed projections first rebuild the index point from the
# argument data; equality targets compare two point terms of a certified
# projection target.
SORT_PROJECTION = "sort-projection"
SORT_PROJECTION_REINDEXED = "sort-projection-reindexed"
POINT_EQUALITY = "point-equality"


@dataclass(frozen=True)
class Certificate:
    rule: str
    via: str | None = None  # for equality targets: the inner projection rule


@dataclass(frozen=True)
class SortStage:
    sort: str
    indices: Telescope
    concrete: str  # concrete presentation of the stage's objects


@dataclass(frozen=True)
class SortLadder:
    stages: tuple[SortStage, ...]

    def stage_of(self, sort: str) -> int:
        for i, s in enumerate(self.stages):
            if s.sort == sort:
                return i
        raise KeyError(sort)


@dataclass(frozen=True)
class TargetDesc:
    sort: str
    indices: tuple[Expr, ...]


@dataclass(frozen=True)
class ConstructorSemantics:
    name: str
    kind: str  # "point" | "path"
    arguments: Telescope
    target: TargetDesc
    certificate: Certificate
    lhs: Expr | None = None
    rhs: Expr | None = None


def _concrete_presentation(decl: SortDecl) -> str:
    if not decl.indices:
        return "sets"
    binders = ", ".join(f"{v} : {t}" for v, t in decl.indices)
    return f"families of sets indexed by ({binders})"


def _projection_certificate(indices: tuple[Expr, ...]) -> Certificate:
    if indices:
        return Certificate(SORT_PROJECTION_REINDEXED)
    return Certificate(SORT_PROJECTION)


def elaborate(sig: Signature) -> tuple[SortLadder, list[ConstructorSemantics]]:
    """Stage an accepted signature; deterministic and prefix-stable."""
    stages = tuple(
        SortStage(d.name, d.indices, _concrete_presentation(d))
        for d in sig.sort_decls()
    )
    ladder = SortLadder(stages)
    semantics: list[ConstructorSemantics] = []
    for d in sig.decls:
        if isinstance(d, PointDecl):
            semantics.append(
                ConstructorSemantics(
                    name=d.name,
                    kind="point",
                    arguments=d.params,
                    target=TargetDesc(d.sort, d.indices),
                    certificate=_projection_certificate(d.indices),
                )
            )
        elif isinstance(d, PathDecl):
            inner = _projection_certificate(d.indices)
            semantics.append(
                ConstructorSemantics(
                    name=d.name,
                    kind="path",
                    arguments=d.params,
                    target=TargetDesc(d.sort, d.indices),
                    certificate=Certificate(POINT_EQUALITY, via=inner.rule),
                    lhs=d.lhs,
                    rhs=d.rhs,
                )
            )
    return ladder, semantics


def _perm_bases(sig: Signature) -> list[str]:
    bases: list[str] = []

    def scan_telescope(tele: Telescope) -> None:
        for _, t in tele:
            scan_param(t)

    def scan_param(t: ParamType) -> None:
        if isinstance(t, PermParam) and t.base not in bases:
            bases.append(t.base)
        if isinstance(t, FunParam):
            pass  # codomains are sorts; no bijection sets hide there

    for d in sig.decls:
        if isinstance(d, SortDecl):
            scan_telescope(d.indices)
        else:
            scan_telescope(d.params)
    return bases


def derived_externals(sig: Signature) -> list[ExternalSet]:
    """Bijection sets materialized for each permutation-constrained argument."""
    out: list[ExternalSet] = []
    for base in _perm_bases(sig):
        ext = sig.external(base)
        assert ext is not None
        out.append(ExternalSet(perm_set_name(base), perm_labels(ext.elements)))
    return out


def elaboration_to_doc(
    ladder: SortLadder, semantics: list[ConstructorSemantics]
) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "ladder": [
            {
                "sort": s.sort,
                "indices": telescope_to_doc(s.indices),
                "concrete": s.concrete,
            }
            for s in ladder.stages
        ],
        "constructors": [
            {
                "name": c.name,
                "kind": c.kind,
                "arguments": telescope_to_doc(c.arguments),
                "target": {
                    "sort": c.target.sort,
                    "indices": [expr_to_doc(i) for i in c.target.indices],
                },
                "certificate": {"rule": c.certificate.rule, "via": c.certificate.via},
                **(
                    {"lhs": expr_to_doc(c.lhs), "rhs": expr_to_doc(c.rhs)}
                    if c.kind == "path"
                    else {}
                ),
            }
            for c in semantics
        ],
    }
