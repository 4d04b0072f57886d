"""Structured-document codecs for AST pieces, shared by every emitter.

All machine-readable outputs are JSON with a top-level ``format_version``;
expressions and telescope entries are encoded as tagged lists so documents can
be decoded back without loss.
"""

from __future__ import annotations

from typing import Any

from .signature import (
    Apply,
    Atom,
    Expr,
    ExternalParam,
    FnApp,
    FnLit,
    FunParam,
    ParamType,
    PermParam,
    SortParam,
    Telescope,
    Var,
)

FORMAT_VERSION = 1


def expr_to_doc(e: Expr) -> Any:
    match e:
        case Var(name):
            return ["var", name]
        case Atom(set_name, label):
            return ["atom", set_name, label]
        case Apply(ctor, args):
            return ["apply", ctor, [expr_to_doc(a) for a in args]]
        case FnLit(entries):
            return ["fn", [[a, expr_to_doc(v)] for a, v in entries]]
        case FnApp(fn, arg):
            return ["app", expr_to_doc(fn), expr_to_doc(arg)]
    raise TypeError(f"not an expression: {e!r}")


def expr_from_doc(doc: Any) -> Expr:
    match doc[0]:
        case "var":
            return Var(doc[1])
        case "atom":
            return Atom(doc[1], doc[2])
        case "apply":
            return Apply(doc[1], tuple(expr_from_doc(a) for a in doc[2]))
        case "fn":
            return FnLit(tuple((a, expr_from_doc(v)) for a, v in doc[1]))
        case "app":
            return FnApp(expr_from_doc(doc[1]), expr_from_doc(doc[2]))
    raise ValueError(f"bad expression document: {doc!r}")


def param_to_doc(p: ParamType) -> Any:
    match p:
        case ExternalParam(set_name):
            return ["external", set_name]
        case PermParam(base):
            return ["perm", base]
        case SortParam(sort, indices):
            return ["sort", sort, [expr_to_doc(i) for i in indices]]
        case FunParam(domain, family):
            return ["fun", domain, [[a, param_to_doc(c)] for a, c in family]]
    raise TypeError(f"not a parameter type: {p!r}")


def param_from_doc(doc: Any) -> ParamType:
    match doc[0]:
        case "external":
            return ExternalParam(doc[1])
        case "perm":
            return PermParam(doc[1])
        case "sort":
            return SortParam(doc[1], tuple(expr_from_doc(i) for i in doc[2]))
        case "fun":
            return FunParam(doc[1], tuple((a, param_from_doc(c)) for a, c in doc[2]))
    raise ValueError(f"bad parameter document: {doc!r}")


def telescope_to_doc(tele: Telescope) -> Any:
    return [[v, param_to_doc(t)] for v, t in tele]


def telescope_from_doc(doc: Any) -> Telescope:
    return tuple((v, param_from_doc(t)) for v, t in doc)
