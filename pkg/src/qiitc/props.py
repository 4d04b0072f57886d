"""Built-in property suites: the executable invariants of the term-model and
algebra toolkits, run against one signature at one depth.

Every check returns a pass/fail record; the suite is deterministic and is also
what the acceptance tests drive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Callable

from . import bundled
from .algebra import (
    FiniteAlgebra,
    check_homomorphism,
    fold,
    uniqueness_check,
    verify_algebra,
)
from .elaborate import elaborate
from .eliminator import derive_eliminator
from .fibred import (
    check_computation_rules,
    constant_unit_fibred,
    find_section,
    section_against_projection,
    total_algebra,
    verify_fibred,
)
from .model import TermModel, build_model
from .parser import parse_signature, print_signature
from .signature import Signature, scope_of, validate


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def to_doc(self) -> dict[str, Any]:
        return {"name": self.name, "status": "pass" if self.passed else "fail", "detail": self.detail}


def _bundled_attachments(sig: Signature) -> tuple[list[str], bool]:
    """Names of bundled algebras whose signature matches, plus interval flag."""
    for name, algebras in {
        "nat": ["nat_mod2", "nat_mod3", "nat_mod4"],
        "trees2": ["trees_max"],
        "interval": ["interval_two"],
    }.items():
        if bundled.signature(name) == sig:
            return algebras, name == "interval"
    return [], False


def run_props(sig: Signature, depth: int, budget: int) -> list[CheckResult]:
    out: list[CheckResult] = []

    def check(name: str, fn: Callable[[], tuple[bool, str]]) -> None:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, ok, detail))

    check("signature-validates", lambda: (not validate(sig), ""))

    def round_trip():
        printed = print_signature(sig)
        again = parse_signature(printed)
        return (again == sig, "parse(print(sig)) == sig")
    check("print-parse-round-trip", round_trip)

    def prefix_validity():
        for k in range(len(sig.decls) + 1):
            if validate(scope_of(sig, k)):
                return False, f"prefix {k} does not validate"
        return True, f"all {len(sig.decls) + 1} prefixes validate"
    check("prefix-validity", prefix_validity)

    def prefix_elaboration():
        ladder, sems = elaborate(sig)
        for k in range(len(sig.decls) + 1):
            pl, ps = elaborate(scope_of(sig, k))
            if tuple(pl.stages) != ladder.stages[: len(pl.stages)]:
                return False, f"sort ladder not prefix-stable at {k}"
            if ps != sems[: len(ps)]:
                return False, f"constructor semantics not prefix-stable at {k}"
        return True, "elaboration is prefix-stable"
    check("prefix-elaboration", prefix_elaboration)

    def eliminator_prefix():
        spec = derive_eliminator(sig)
        for k in range(len(sig.decls) + 1):
            sub = derive_eliminator(scope_of(sig, k))
            if tuple(sub.methods) != spec.methods[: len(sub.methods)]:
                return False, f"methods not a truncation at prefix {k}"
            if tuple(sub.rules) != spec.rules[: len(sub.rules)]:
                return False, f"rules not a truncation at prefix {k}"
        return True, "eliminator derivation is prefix-stable"
    check("prefix-eliminator", eliminator_prefix)

    model = build_model(sig, depth, budget=budget)

    def determinism():
        alt = build_model(sig, depth, budget=budget, seed=20260115, workers=2)
        same = json.dumps(model.dump(), sort_keys=True) == json.dumps(alt.dump(), sort_keys=True)
        return same, "dump identical under shuffled order and 2 workers"
    check("model-determinism", determinism)

    def monotonicity():
        if depth == 0:
            return True, "vacuous at depth 0"
        small = build_model(sig, depth - 1, budget=budget)
        for sort in small.sorts:
            for info in small.classes(sort, include_overflow=True):
                roots = {
                    model.class_of(small._frozen_expr(t)) for t in small.members(info.root)
                }
                if len(roots) > 1:
                    return False, f"class {info.canonical} splits at depth {depth}"
        return True, f"classes at depth {depth - 1} embed into depth {depth}"
    check("model-monotonicity", monotonicity)

    def index_coherence():
        for sort in model.sorts:
            for info in model.classes(sort, include_overflow=True):
                keys = {
                    tuple(model._normalize(v) for v in model._recs[t].index)
                    for t in model.members(info.root)
                }
                if len(keys) > 1:
                    return False, f"class {info.canonical} has incoherent indices"
        return True, "all members of every class share one index class"
    check("model-index-coherence", index_coherence)

    def merge_accounting():
        classes = sum(
            len(model.classes(s, include_overflow=True)) for s in model.sorts
        )
        ok = model.merge_count == model.term_count() - classes
        return ok, f"{model.merge_count} merges == {model.term_count()} terms - {classes} classes"
    check("model-merge-accounting", merge_accounting)

    def saturation():
        return model.saturated, "generation/quotient alternation reached a fixpoint"
    check("model-saturated", saturation)

    algebra_names, is_interval = _bundled_attachments(sig)
    for name in algebra_names:
        alg = bundled.algebra(name, sig)

        def with_algebra(alg: FiniteAlgebra = alg, name: str = name):
            bad = verify_algebra(alg)
            if bad:
                return False, f"{name} fails verification: {bad[0]}"
            h = fold(model, alg)
            hv = check_homomorphism(h)
            if hv:
                return False, f"fold into {name} is not a homomorphism: {hv[0]}"
            rep = uniqueness_check(model, alg)
            if rep.count != 1:
                return False, f"{rep.count} homomorphisms into {name}, expected 1"
            if rep.equaliser_whole is not True:
                return False, "equaliser of enumerated homomorphisms is not the whole model"
            return True, f"fold exists, is unique, equaliser is the whole model"
        check(f"initiality-{name}", with_algebra)

    if is_interval:
        def fold_forces():
            alg = bundled.algebra("interval_two", sig)
            h = fold(model, alg)
            merged = alg.operations["l"][()] == alg.operations["r"][()]
            return merged and not check_homomorphism(h), "fold forces l = r in the target"
        check("interval-fold-forces-endpoints-equal", fold_forces)

    def unit_fibred():
        cu = constant_unit_fibred(model)
        bad = verify_fibred(cu)
        if bad:
            return False, f"constant-unit fibred incoherent: {bad[0]}"
        s = find_section(cu)
        if check_computation_rules(s):
            return False, "section violates a computation rule"
        tot, proj = total_algebra(cu)
        if check_homomorphism(proj):
            return False, "total-algebra projection is not a homomorphism"
        if not section_against_projection(s, tot, proj):
            return False, "projection . section != identity"
        return True, "section induction holds for the terminal motive"
    check("section-induction-terminal-motive", unit_fibred)

    return out


def props_report(sig: Signature, depth: int, budget: int) -> dict[str, Any]:
    results = run_props(sig, depth, budget)
    return {
        "format_version": 1,
        "depth": depth,
        "checks": [r.to_doc() for r in results],
        "passed": all(r.passed for r in results),
    }
