import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modkcsp.affine import (LinearSystemGF2, count_affine, count_affine_mod, eliminate,
                            formula_to_system, relation_to_system)
from modkcsp.core import EVEN3, F, OR0, T, XOR, Formula, Relation, brute_force_count, formula
from modkcsp.errors import ContractError

from _gen import make_rng, random_affine_relation, random_formula
from test_classifier import all_relations


def solution_tuples(system):
    return {tuple((x >> j) & 1 for j in range(system.num_vars)) for x in system.solutions()}


def test_relation_to_system_examples():
    assert relation_to_system(XOR).rows == ((0b11, 1),)
    assert relation_to_system(T).rows == ((0b1, 1),)
    even = relation_to_system(EVEN3)
    assert even.rows == ((0b111, 0),)
    assert solution_tuples(even) == set(EVEN3.satisfying)


def test_relation_to_system_rejects_non_affine():
    with pytest.raises(ContractError):
        relation_to_system(OR0)


def test_empty_relation_is_inconsistent():
    sys_ = relation_to_system(Relation("NONE", 2, frozenset()))
    assert sys_.rows == ((0, 1),)
    assert not eliminate(sys_).consistent


@pytest.mark.parametrize("arity", [1, 2, 3, 4])
def test_relation_to_system_reproduces_all_affine_relations(arity):
    if arity < 4:
        rels = list(all_relations(arity))
    else:
        rng = make_rng(4)
        rels = [random_affine_relation(rng, 4) for _ in range(300)]
    from modkcsp.classifier import is_affine
    for r in rels:
        if is_affine(r):
            assert solution_tuples(relation_to_system(r)) == set(r.satisfying), r


def test_formula_to_system_examples():
    f = formula(["x1", "x2", "x3"], (XOR, "x1", "x2"), (XOR, "x2", "x3"))
    assert formula_to_system(f).rows == ((0b011, 1), (0b110, 1))
    g = formula(["x1"], (XOR, "x1", "x1"))
    assert formula_to_system(g).rows == ((0, 1),)
    assert not eliminate(formula_to_system(g)).consistent
    h = formula(["x1", "x2"], (T, "x1"))
    res = eliminate(formula_to_system(h))
    assert res.consistent and res.free_vars == 1


def test_count_affine_examples():
    f = formula(["x1", "x2"], (XOR, "x1", "x2"))
    assert count_affine(f) == 2 and count_affine_mod(f, 3) == 2
    g = formula(["y"], (T, "y"), (F, "y"))
    assert count_affine(g) == 0
    assert all(count_affine_mod(g, k) == 0 for k in range(2, 10))
    wide = formula([f"x{i}" for i in range(1, 11)], (XOR, "x1", "x2"))
    assert count_affine(wide) == 512 == brute_force_count(wide)
    assert count_affine_mod(wide, 7) == 1


def test_count_affine_rejects_non_affine():
    with pytest.raises(ContractError):
        count_affine(formula(["a", "b"], (OR0, "a", "b")))


def test_no_enumeration_cap():
    vs = [f"v{i}" for i in range(200)]
    f = Formula(tuple(vs), tuple(
        formula(vs, (XOR, vs[i], vs[i + 1])).constraints[0] for i in range(0, 199, 2)))
    assert count_affine(f) == 2 ** 100


def test_elimination_rank_bounds():
    s = LinearSystemGF2(3, ((0b011, 1), (0b110, 1), (0b101, 0)))
    res = eliminate(s)
    assert res.consistent and res.rank == 2 and res.free_vars == 1
    bad = LinearSystemGF2(3, ((0b011, 1), (0b110, 1), (0b101, 1)))
    assert not eliminate(bad).consistent


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32), st.randoms())
def test_count_affine_matches_brute_force(seed, shuffler):
    rng = make_rng(seed)
    rels = [random_affine_relation(rng, a, name=f"A{i}")
            for i, a in enumerate(rng.choices([1, 2, 3, 4], k=3))]
    f = random_formula(rng, rels, rng.randint(1, 14), rng.randint(0, 8))
    n = brute_force_count(f)
    assert count_affine(f) == n
    for k in (2, 3, 5, 6):
        assert count_affine_mod(f, k) == n % k
    cons = list(f.constraints)
    shuffler.shuffle(cons)
    order = list(f.variables)
    shuffler.shuffle(order)
    assert count_affine(Formula(tuple(order), tuple(cons))) == n
