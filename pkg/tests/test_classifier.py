import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modkcsp.classifier import (Outcome, affine_closure, affine_witness, classify,
                                decide, is_0_valid, is_1_valid, is_affine, is_c_closed,
                                parity_fast_path, property_report)
from modkcsp.core import (EVEN3, F, NAE3, OR0, OR1, OR2, ONE_IN_THREE, T, XOR, Relation,
                          brute_force_count, count_mod)
from modkcsp.errors import InputError

from _gen import make_rng, random_formula, random_relation

FULL2 = Relation.from_tuples("FULL2", 2, ["00", "01", "10", "11"])


def all_relations(arity):
    tuples = list(itertools.product((0, 1), repeat=arity))
    for mask in range(1 << len(tuples)):
        yield Relation(f"R{mask}", arity, frozenset(t for i, t in enumerate(tuples) if mask >> i & 1))


def test_validity_examples():
    assert is_0_valid(OR1) and is_1_valid(OR1)
    assert not is_0_valid(OR0) and is_1_valid(OR0)
    assert is_0_valid(F) and not is_1_valid(F)


def test_c_closed_examples():
    assert is_c_closed(XOR)
    assert not is_c_closed(OR0)
    assert is_c_closed(NAE3)


def test_affine_examples():
    assert is_affine(XOR)
    assert not is_affine(OR0)
    assert is_affine(FULL2)
    assert is_affine(Relation("EMPTY", 2, frozenset()))


def test_affine_witness_for_or0():
    a, b, c = affine_witness(OR0)
    x = tuple(p ^ q ^ r for p, q, r in zip(a, b, c))
    assert {a, b, c} <= OR0.satisfying and x not in OR0.satisfying
    assert affine_witness(XOR) is None


def test_affine_closure_examples():
    assert affine_closure({(0, 1), (1, 0)}) == {(0, 1), (1, 0)}
    assert affine_closure({(0, 1), (1, 0), (1, 1)}) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert affine_closure({(0, 0, 0)}) == {(0, 0, 0)}
    with pytest.raises(InputError):
        affine_closure(set())


@pytest.mark.parametrize("arity", [1, 2, 3])
def test_is_affine_matches_closure_exhaustively(arity):
    for r in all_relations(arity):
        if not r.satisfying:
            continue
        assert is_affine(r) == (affine_closure(r.satisfying) == set(r.satisfying)), r


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_is_affine_matches_closure_arity4(seed):
    r = random_relation(make_rng(seed), 4, density=make_rng(seed).random())
    if r.satisfying:
        assert is_affine(r) == (affine_closure(r.satisfying) == set(r.satisfying))


def test_property_report_set_flags_are_conjunctions():
    rep = property_report([OR1, XOR])
    assert rep.zero_valid is False       # XOR is not 0-valid
    assert rep.c_closed is False         # OR1 is not C-closed
    assert rep.affine is False
    assert rep.witness()[0] == "OR1"
    js = rep.to_json()
    assert js["relations"]["XOR"]["affine"] is True
    assert js["set"]["affine"] is False


def test_classify_examples():
    assert classify([XOR], 7).outcome is Outcome.FP_AFFINE
    assert classify([NAE3], 2).outcome is Outcome.FP_PARITY_CCLOSED
    v = classify([OR0], 5)
    assert v.outcome is Outcome.HARD
    assert v.certificate is not None


def test_classify_empty_set():
    with pytest.raises(InputError):
        classify([], 3)


def test_verdict_certificate_only_when_hard():
    assert classify([EVEN3], 3).certificate is None
    assert classify([NAE3], 2).certificate is None
    assert classify([NAE3], 3).certificate is not None


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(2, 8), st.permutations([0, 1, 2]))
def test_classify_invariant_under_permutation_and_renaming(seed, k, perm):
    rng = make_rng(seed)
    rels = [random_relation(rng, 3, name=f"R{i}") for i in range(2)]
    base = decide(rels, k)
    moved = [r.permuted(perm).renamed(f"S{i}") for i, r in enumerate(rels)]
    assert decide(moved, k) is base


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_parity_branch_matches_oracle(seed):
    rng = make_rng(seed)
    rels = [NAE3, XOR]
    f = random_formula(rng, rels, rng.randint(1, 8), rng.randint(0, 6))
    assert decide(rels, 2) is Outcome.FP_PARITY_CCLOSED
    assert count_mod(f, 2) == parity_fast_path(rels) == 0


def test_parity_fast_path_refuses_non_c_closed():
    with pytest.raises(InputError):
        parity_fast_path([OR0])


def test_verdict_json_shape():
    js = classify([NAE3], 3).to_json()
    assert js["outcome"] == "Hard"
    assert js["properties"]["relations"]["NAE3"]["c_closed"] is True
    assert js["certificate"]["case"] == "g neither 0-valid nor 1-valid"


@pytest.mark.parametrize("S", [[ONE_IN_THREE], [OR0], [OR1], [OR2], [T, OR2]])
def test_hard_for_all_small_k(S):
    for k in range(2, 8):
        assert decide(S, k) is Outcome.HARD
