"""Command-line front end.

Subcommands: ``check`` (validate, optionally emit the elaboration),
``elim`` (derive and render eliminators), ``model`` (build the depth-bounded
term model and dump it), ``fold`` (fold a model dump into an algebra file,
optionally with the uniqueness search), and ``props`` (run the built-in
property suites).

Exit codes: 0 success, 1 validation or property failure, 2 resource budget
exceeded, 3 I/O failure.  ``--seed`` shuffles internal work orders only; all
outputs are independent of it.  The term budget can also be set with the
``QIITC_TERM_BUDGET`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any

from .algebra import (
    SearchBudgetError,
    algebra_from_doc,
    check_homomorphism,
    fold,
    uniqueness_check,
    verify_algebra,
)
from .bundled import resolve_path
from .elaborate import elaborate, elaboration_to_doc
from .eliminator import derive_eliminator, render_eliminator
from .model import DEFAULT_BUDGET, BudgetExceededError, build_model
from .parser import parse_signature, SourceFile
from .props import props_report
from .signature import Signature, validate

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_BUDGET = 2
EXIT_IO = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    path = resolve_path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None


def _load_signature(path: str) -> Signature:
    text = _read(path)
    result = parse_signature(SourceFile(path, text))
    if not isinstance(result, Signature):
        for d in result:
            print(f"{path}:{d}", file=sys.stderr)
        raise CliError(f"{path}: parse failed", EXIT_FAIL)
    diags = validate(result)
    if diags:
        for d in diags:
            print(f"{path}:{d}", file=sys.stderr)
        raise CliError(f"{path}: validation failed", EXIT_FAIL)
    return result


def _budget(args) -> int:
    if args.budget is not None:
        return args.budget
    env = os.environ.get("QIITC_TERM_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


def _emit(doc: Any, args) -> None:
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_check(args) -> int:
    status = EXIT_OK
    for path in args.paths:
        text = _read(path)
        result = parse_signature(SourceFile(path, text))
        diags = result if isinstance(result, list) else validate(result)
        for d in diags:
            print(f"{path}:{d}", file=sys.stderr)
        if diags:
            status = EXIT_FAIL
            continue
        print(f"{path}: ok ({len(result.decls)} declarations)")
        if args.emit_elaboration:
            ladder, sems = elaborate(result)
            _emit(elaboration_to_doc(ladder, sems), args)
    return status


def cmd_elim(args) -> int:
    sig = _load_signature(args.path)
    spec = derive_eliminator(sig)
    if args.format == "structured":
        _emit(render_eliminator(spec, "structured"), args)
    else:
        sys.stdout.write(render_eliminator(spec, "text"))
    return EXIT_OK


def cmd_model(args) -> int:
    sig = _load_signature(args.path)
    try:
        m = build_model(
            sig, args.depth, budget=_budget(args), seed=args.seed, workers=args.workers
        )
    except BudgetExceededError as exc:
        print(f"budget exceeded: {json.dumps(exc.stats, sort_keys=True)}", file=sys.stderr)
        return EXIT_BUDGET
    dump = m.dump()
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                json.dump(dump, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise CliError(f"cannot write {args.output}: {exc}", EXIT_IO) from None
    if args.format == "structured":
        _emit(dump, args)
    else:
        stats = dump["stats"]
        for sort, entry in stats["sorts"].items():
            print(f"{sort}: {entry['classes']} classes")
        print(
            f"terms: {stats['terms']} (within depth: {stats['generated_terms']}), "
            f"merges: {stats['merges']}, rounds: {stats['rounds']}"
        )
    return EXIT_OK


def cmd_fold(args) -> int:
    dump = json.loads(_read(args.model))
    sig = parse_signature(dump["signature"])
    if not isinstance(sig, Signature):
        raise CliError(f"{args.model}: embedded signature does not parse", EXIT_FAIL)
    try:
        m = build_model(sig, dump["depth"], budget=_budget(args))
    except BudgetExceededError:
        return EXIT_BUDGET
    alg = algebra_from_doc(sig, json.loads(_read(args.algebra)))
    bad = verify_algebra(alg)
    if bad:
        for v in bad:
            print(str(v), file=sys.stderr)
        print(f"{args.algebra}: algebra fails verification", file=sys.stderr)
        return EXIT_FAIL
    h = fold(m, alg)
    violations = check_homomorphism(h)
    table: dict[str, Any] = {}
    for sort, mapping in h.maps.items():
        table[sort] = {
            m.value_text(("ref", root)): val for root, val in mapping.items()
        }
    doc: dict[str, Any] = {"format_version": 1, "map": table, "homomorphism": not violations}
    if args.uniqueness:
        try:
            rep = uniqueness_check(m, alg)
        except SearchBudgetError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_BUDGET
        doc["homomorphism_count"] = rep.count
        doc["equaliser_is_whole_model"] = rep.equaliser_whole
    if args.format == "structured":
        _emit(doc, args)
    else:
        for sort, mapping in sorted(table.items()):
            for rep_text, val in sorted(mapping.items()):
                print(f"{sort}: {rep_text} -> {val}")
        if args.uniqueness:
            print(f"homomorphisms: {doc['homomorphism_count']}")
    for v in violations:
        print(str(v), file=sys.stderr)
    return EXIT_OK if not violations else EXIT_FAIL


def cmd_props(args) -> int:
    sig = _load_signature(args.path)
    try:
        report = props_report(sig, args.depth, _budget(args))
    except BudgetExceededError:
        return EXIT_BUDGET
    if args.format == "structured":
        _emit(report, args)
    else:
        for c in report["checks"]:
            line = f"[{c['status']:4}] {c['name']}"
            if c["detail"]:
                line += f" - {c['detail']}"
            print(line)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qiitc",
        description="Validate quotient inductive-inductive signatures, derive "
        "their eliminators, and check their finite semantics.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="validate signature files")
    c.add_argument("paths", nargs="+")
    c.add_argument("--emit-elaboration", action="store_true",
                   help="print the staged elaboration as JSON")
    c.set_defaults(fn=cmd_check)

    e = sub.add_parser("elim", help="derive and render the elimination principle")
    e.add_argument("path")
    e.add_argument("--format", choices=["text", "structured"], default="text")
    e.set_defaults(fn=cmd_elim)

    m = sub.add_parser("model", help="build the depth-bounded term model")
    m.add_argument("path")
    m.add_argument("--depth", type=int, default=3)
    m.add_argument("--budget", type=int, default=None)
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--format", choices=["text", "structured"], default="text")
    m.add_argument("--output", help="also write the dump to this file")
    m.set_defaults(fn=cmd_model)

    f = sub.add_parser("fold", help="fold a model dump into a finite algebra")
    f.add_argument("model", help="a .qmodel dump produced by 'model --output'")
    f.add_argument("algebra", help="a .qalg algebra file")
    f.add_argument("--budget", type=int, default=None)
    f.add_argument("--uniqueness", action="store_true",
                   help="also enumerate all homomorphisms and check the equaliser")
    f.add_argument("--format", choices=["text", "structured"], default="text")
    f.set_defaults(fn=cmd_fold)

    pr = sub.add_parser("props", help="run the built-in property suites")
    pr.add_argument("path")
    pr.add_argument("--depth", type=int, default=3)
    pr.add_argument("--budget", type=int, default=None)
    pr.add_argument("--seed", type=int, default=None)
    pr.add_argument("--workers", type=int, default=1)
    pr.add_argument("--format", choices=["text", "structured"], default="text")
    pr.set_defaults(fn=cmd_props)

    return p


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except BudgetExceededError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
