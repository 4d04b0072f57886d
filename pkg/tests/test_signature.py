"""Well-formedness checking and prefix views of signatures."""

from __future__ import annotations

import pytest

from qiitc.signature import (
    Apply,
    Atom,
    ExternalSet,
    FnLit,
    PathDecl,
    PermParam,
    PointDecl,
    Signature,
    SortDecl,
    SortParam,
    Var,
    scope_of,
    validate,
)


def test_bundled_signatures_validate(sigs):
    for name, sig in sigs.items():
        assert validate(sig) == [], name


def test_empty_signature_validates():
    assert validate(Signature()) == []


def test_forward_sort_reference_rejected():
    sig = Signature(
        decls=(
            SortDecl("B", (("x", SortParam("A")),)),
            SortDecl("A", (("y", SortParam("B")),)),
        )
    )
    diags = validate(sig)
    assert diags
    assert any("unknown sort 'A'" in d.message for d in diags)


def test_duplicate_names_rejected():
    sig = Signature(decls=(SortDecl("S"), SortDecl("S")))
    assert any("duplicate name" in d.message for d in validate(sig))


def test_duplicate_external_elements_rejected():
    sig = Signature(externals=(ExternalSet("A", ("a", "a")),))
    assert any("repeats element" in d.message for d in validate(sig))


def test_atoms_unique_across_external_sets():
    sig = Signature(
        externals=(ExternalSet("A", ("a",)), ExternalSet("B", ("a",)))
    )
    assert any("already belongs" in d.message for d in validate(sig))


def test_constructor_application_banned_in_sort_indices(sigs):
    nat = sigs["nat"]
    bad = Signature(
        externals=nat.externals,
        decls=nat.decls
        + (SortDecl("Vec", (("n", SortParam("N", (Apply("zero"),))),)),),
    )
    # the index telescope itself may not apply constructors
    bad2 = Signature(
        externals=nat.externals,
        decls=nat.decls + (SortDecl("Vec", (("n", SortParam("N")),)),),
    )
    assert validate(bad2) == []
    diags = validate(
        Signature(
            decls=(
                SortDecl("N"),
                PointDecl("zero", (), "N"),
                SortDecl("Vec", (("n", SortParam("N", ())),)),
            )
        )
    )
    assert diags == []  # plain reference to an earlier sort is fine


def test_sort_index_apply_diagnostic():
    sig = Signature(
        decls=(
            SortDecl("N"),
            PointDecl("zero", (), "N"),
            SortDecl("P", (("n", SortParam("N")),)),
            SortDecl("Q", (("p", SortParam("P", (Apply("zero"),))),)),
        )
    )
    assert any("not allowed in a sort index" in d.message for d in validate(sig))


def test_path_endpoints_must_share_sort(sigs):
    conty = sigs["con_ty"]
    bad = Signature(
        conty.externals,
        conty.decls[:5]
        + (
            PathDecl(
                "weird",
                (("G", SortParam("Con")),),
                "Con",
                (),
                Apply("eps"),
                Apply("iota", (Var("G"),)),
            ),
        ),
    )
    diags = validate(bad)
    assert any("different sorts" in d.message for d in diags)


def test_path_endpoints_identical_indices_required(sigs):
    conty = sigs["con_ty"]
    # iota(G) : Ty(G) vs iota(ext(G, A)) : Ty(ext(G, A)) sit at different indices
    bad = Signature(
        conty.externals,
        conty.decls[:5]
        + (
            PathDecl(
                "skew",
                (("G", SortParam("Con")), ("A", SortParam("Ty", (Var("G"),)))),
                "Ty",
                (Var("G"),),
                Apply("iota", (Var("G"),)),
                Apply("iota", (Apply("ext", (Var("G"), Var("A"))),)),
            ),
        ),
    )
    diags = validate(bad)
    assert any("syntactically identical index expressions" in d.message for d in diags)


def test_accepted_paths_have_identical_endpoint_indices(sigs):
    for sig in sigs.values():
        if validate(sig):
            continue
        for d in sig.path_decls():
            from qiitc.signature import infer_point_term

            env = {v: t for v, t in d.params}
            left = infer_point_term(sig, env, d.lhs)
            right = infer_point_term(sig, env, d.rhs)
            assert left.sort == right.sort == d.sort
            assert left.indices == right.indices == d.indices


def test_validate_is_deterministic(sigs):
    sig = Signature(
        decls=(
            SortDecl("B", (("x", SortParam("A")),)),
            SortDecl("A", (("y", SortParam("B")),)),
            SortDecl("B"),
        )
    )
    first = [str(d) for d in validate(sig)]
    for _ in range(3):
        assert [str(d) for d in validate(sig)] == first


@pytest.mark.parametrize("name", ["interval", "nat", "trees2", "con_ty"])
def test_scope_of_prefixes_validate(sigs, name):
    sig = sigs[name]
    for k in range(len(sig.decls) + 1):
        prefix = scope_of(sig, k)
        assert len(prefix.decls) == k
        assert validate(prefix) == []


def test_scope_of_con_ty_example(sigs):
    # the first four declarations: both sorts, eps and ext, but not sigma_eq
    prefix = scope_of(sigs["con_ty"], 4)
    names = [d.name for d in prefix.decls]
    assert names == ["Con", "Ty", "eps", "ext"]
    assert not prefix.path_decls()


def test_scope_of_out_of_range(sigs):
    with pytest.raises(IndexError):
        scope_of(sigs["nat"], 99)
    with pytest.raises(IndexError):
        scope_of(sigs["nat"], -1)


def test_scope_of_zero_is_empty(sigs):
    assert scope_of(sigs["con_ty"], 0) == Signature(sigs["con_ty"].externals, ())


def test_bijection_literal_typing():
    sig = Signature(
        externals=(ExternalSet("A", ("a0", "a1")),),
        decls=(
            SortDecl("S"),
            PointDecl("base", (), "S"),
            PointDecl("tag", (("e", PermParam("A")),), "S"),
            PathDecl(
                "collapse",
                (),
                "S",
                (),
                Apply("tag", (FnLit((("a0", Atom("A", "a0")), ("a1", Atom("A", "a1")))),)),
                Apply("tag", (FnLit((("a0", Atom("A", "a1")), ("a1", Atom("A", "a0")))),)),
            ),
        ),
    )
    assert validate(sig) == []


def test_non_bijective_literal_rejected():
    sig = Signature(
        externals=(ExternalSet("A", ("a0", "a1")),),
        decls=(
            SortDecl("S"),
            PointDecl("base", (), "S"),
            PointDecl("tag", (("e", PermParam("A")),), "S"),
            PathDecl(
                "bad",
                (),
                "S",
                (),
                Apply("tag", (FnLit((("a0", Atom("A", "a0")), ("a1", Atom("A", "a0")))),)),
                Apply("base"),
            ),
        ),
    )
    assert any("not a bijection" in d.message for d in validate(sig))
