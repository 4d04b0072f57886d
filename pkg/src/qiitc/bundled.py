"""Access to the signatures, algebras and fibred algebras shipped with the
package.  CLI paths of the form ``bundled:NAME`` resolve into this data.
"""

from __future__ import annotations

import json
from importlib import resources

from .algebra import FiniteAlgebra, algebra_from_doc
from .fibred import FibredAlgebra, fibred_from_doc
from .model import TermModel
from .parser import parse_signature
from .signature import Signature

SIGNATURES = ("interval", "nat", "trees2", "con_ty", "onesort", "empty")


def data_text(filename: str) -> str:
    return (resources.files("qiitc") / "data" / filename).read_text(encoding="utf-8")


def data_path(filename: str) -> str:
    return str(resources.files("qiitc") / "data" / filename)


def resolve_path(path: str) -> str:
    """Map ``bundled:NAME`` (or ``bundled:NAME.ext``) to the shipped file."""
    if not path.startswith("bundled:"):
        return path
    name = path.split(":", 1)[1]
    if "." not in name:
        name += ".qiit"
    return data_path(name)


def signature(name: str) -> Signature:
    sig = parse_signature(data_text(f"{name}.qiit"))
    if not isinstance(sig, Signature):
        raise RuntimeError(f"bundled signature {name} failed to parse")
    return sig


def algebra(name: str, sig: Signature) -> FiniteAlgebra:
    return algebra_from_doc(sig, json.loads(data_text(f"{name}.qalg")))


def fibred(name: str, model: TermModel) -> FibredAlgebra:
    return fibred_from_doc(model, json.loads(data_text(f"{name}.qfib")))
