"""Runtime values shared by the term-model and finite-algebra engines.

A value is a plain tagged tuple so that it is hashable and cheap to compare:

    ("atom", label)              an element of an external set
    ("ref", x)                   a congruence class (int) or carrier element (str)
    ("fn", ((atom, value), ...)) a total table over an external set, in domain order

Bijections of a finite external set are encoded as atoms whose label spells
out the table, e.g. ``{a0=>a1,a1=>a0}``.
"""

from __future__ import annotations

from itertools import permutations
from typing import Any, Callable, Iterable

Value = tuple  # ("atom", str) | ("ref", Any) | ("fn", tuple[tuple[str, "Value"], ...])


def atom(label: str) -> Value:
    return ("atom", label)


def ref(x: Any) -> Value:
    return ("ref", x)


def fn(entries: Iterable[tuple[str, Value]]) -> Value:
    return ("fn", tuple(entries))


def map_refs(v: Value, f: Callable[[Any], Any]) -> Value:
    """Rewrite every ("ref", x) leaf through ``f``; atoms pass unchanged."""
    tag = v[0]
    if tag == "ref":
        return ("ref", f(v[1]))
    if tag == "fn":
        return ("fn", tuple((a, map_refs(w, f)) for a, w in v[1]))
    return v


def iter_refs(v: Value):
    tag = v[0]
    if tag == "ref":
        yield v[1]
    elif tag == "fn":
        for _, w in v[1]:
            yield from iter_refs(w)


def perm_label(images: Iterable[tuple[str, str]]) -> str:
    return "{" + ",".join(f"{a}=>{b}" for a, b in images) + "}"


def perm_labels(elements: tuple[str, ...]) -> tuple[str, ...]:
    """All bijection labels of a finite set, in a fixed lexicographic order."""
    return tuple(
        perm_label(zip(elements, image)) for image in permutations(elements)
    )


def decode_perm(label: str) -> dict[str, str]:
    """Recover the table from a bijection label produced by perm_label."""
    body = label.strip("{}")
    table: dict[str, str] = {}
    if body:
        for entry in body.split(","):
            a, _, b = entry.partition("=>")
            table[a] = b
    return table


def perm_set_name(base: str) -> str:
    return f"Perm({base})"


def is_perm_set_name(name: str) -> bool:
    return name.startswith("Perm(") and name.endswith(")")


def encode_value(v: Value, show_ref: Callable[[Any], Any]) -> Any:
    """JSON-friendly encoding; ``show_ref`` renders class ids / element labels."""
    tag = v[0]
    if tag == "atom":
        return ["atom", v[1]]
    if tag == "ref":
        return ["ref", show_ref(v[1])]
    return ["fn", [[a, encode_value(w, show_ref)] for a, w in v[1]]]


def decode_value(doc: Any) -> Value:
    tag = doc[0]
    if tag == "atom":
        return ("atom", doc[1])
    if tag == "ref":
        return ("ref", doc[1])
    return ("fn", tuple((a, decode_value(w)) for a, w in doc[1]))
