import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modkcsp.core import F, OR1, OR2, T, XOR, Formula, brute_force_count, clause_relation, formula
from modkcsp.errors import ContractError, InputError, ResourceError
from modkcsp.graphs import (GadgetCopy, GadgetDecomposition, Graph, bipartite_to_or1_formula,
                            complete_bipartite, count_is, count_is_mod, count_is_naive,
                            graph_to_or2_formula, decomposition_count_mod, make_H, parity_gadget,
                            prime_gadget, recover_sat_count_mod_p)

from _gen import make_rng, random_bipartite, random_cnf, random_decomposition, random_graph

X1_OR_NOT_X2 = formula(["x1", "x2"], (clause_relation([True, False]), "x1", "x2"))


def cycle(n):
    vs = [f"c{i}" for i in range(n)]
    return Graph.from_edges(vs, [(vs[i], vs[(i + 1) % n]) for i in range(n)])


def test_graph_invariants():
    with pytest.raises(InputError):
        Graph.from_edges(["a"], [("a", "a")])
    with pytest.raises(InputError):
        Graph.from_edges(["a", "b"], [("a", "b"), ("b", "a")])
    with pytest.raises(InputError):
        Graph.from_edges(["a", "a"], [])


def test_count_is_examples():
    k3 = Graph.from_edges("abc", [("a", "b"), ("b", "c"), ("a", "c")])
    assert count_is(k3) == 4
    assert count_is(complete_bipartite(3, 3)) == 15
    assert count_is(cycle(5)) == 11
    for n in range(1, 7):
        assert count_is(complete_bipartite(n, n)) == 2 ** (n + 1) - 1
    assert count_is(Graph(())) == 1


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(0, 14), st.floats(0, 1))
def test_count_is_matches_naive(seed, n, p):
    g = random_graph(make_rng(seed), n, p)
    exact = count_is_naive(g)
    assert count_is(g) == exact
    for k in (2, 3, 7):
        assert count_is_mod(g, k) == exact % k


def test_count_is_cap(monkeypatch):
    g = Graph(tuple(f"v{i}" for i in range(100)))
    with pytest.raises(ResourceError):
        count_is(g)
    assert count_is(g, cap=100) == 2 ** 100
    monkeypatch.setenv("MODKCSP_IS_CAP", "10")
    with pytest.raises(ResourceError):
        count_is(cycle(11))
    with pytest.raises(ResourceError):
        count_is_naive(Graph(tuple(f"v{i}" for i in range(30))))


def test_make_H_examples():
    h2 = make_H(2)
    assert h2.graph.vertices == ("L0",) and (h2.total, h2.without_h) == (2, 1)
    h3 = make_H(3)
    assert len(h3.graph.vertices) == 2 and (h3.total, h3.without_h) == (3, 2)
    h5 = make_H(5)
    assert (h5.total, h5.without_h) == (15, 11)
    assert h5.total % 5 == 0 and h5.without_h % 5 == 1


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11])
def test_make_H_counts_match_graph(p):
    h = make_H(p)
    assert count_is(h.graph) == h.total
    assert count_is(h.graph.without([h.h])) == h.without_h
    assert h.graph.is_bipartite()


@pytest.mark.parametrize("p", [0, 1, 4, 9, 15])
def test_make_H_rejects_non_primes(p):
    with pytest.raises(InputError):
        make_H(p)


def test_decomposition_examples():
    g = Graph.from_edges(["x", "h"], [("x", "h")])
    dec = GadgetDecomposition(frozenset({"x"}), (GadgetCopy({"h"}, "h"),))
    assert decomposition_count_mod(g, dec, 2) == 1 == count_is(g) % 2
    lone = Graph(("h",))
    assert decomposition_count_mod(lone, GadgetDecomposition(frozenset(), (GadgetCopy({"h"}, "h"),)), 2) == 0
    small, dec1 = parity_gadget(X1_OR_NOT_X2)
    assert decomposition_count_mod(small, dec1, 2) == 1 == brute_force_count(X1_OR_NOT_X2) % 2


def test_decomposition_rejects_bad_decompositions():
    g = Graph.from_edges(["x", "a", "h"], [("x", "a"), ("a", "h")])
    # a (non-distinguished) touches X
    dec = GadgetDecomposition(frozenset({"x"}), (GadgetCopy({"a", "h"}, "h"),))
    with pytest.raises(ContractError, match="x, a"):
        decomposition_count_mod(g, dec, 3)
    # copy count not 0 mod k
    g2 = Graph.from_edges(["x", "h"], [("x", "h")])
    dec2 = GadgetDecomposition(frozenset({"x"}), (GadgetCopy({"h"}, "h"),))
    with pytest.raises(ContractError, match="copy 0"):
        decomposition_count_mod(g2, dec2, 3)
    # uncovered vertex
    with pytest.raises(ContractError, match="not covered"):
        decomposition_count_mod(g2, GadgetDecomposition(frozenset({"x"}), ()), 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from([2, 3, 4, 5, 6]))
def test_decomposition_matches_count(seed, k):
    g, dec = random_decomposition(make_rng(seed), k, max_vertices=20)
    assert decomposition_count_mod(g, dec, k) == count_is_naive(g) % k


def test_graph_to_or2_examples():
    k2 = Graph.from_edges(["a", "b"], [("a", "b")])
    f = graph_to_or2_formula(k2)
    assert [c.relation for c in f.constraints] == [OR2]
    assert brute_force_count(f) == 3
    tri = Graph.from_edges("abc", [("a", "b"), ("b", "c"), ("a", "c")])
    assert len(graph_to_or2_formula(tri).constraints) == 3
    assert brute_force_count(graph_to_or2_formula(tri)) == 4
    assert brute_force_count(graph_to_or2_formula(Graph(("a", "b", "c")))) == 8


def test_bipartite_to_or1_examples():
    k2 = Graph.from_edges(["u", "v"], [("u", "v")])
    f = bipartite_to_or1_formula(k2, (["u"], ["v"]))
    assert [(c.relation, c.args) for c in f.constraints] == [(OR1, ("u", "v"))]
    assert brute_force_count(f) == 3
    path = Graph.from_edges(["u", "v", "w"], [("u", "v"), ("v", "w")])
    f = bipartite_to_or1_formula(path, (["u", "w"], ["v"]))
    assert len(f.constraints) == 2 and brute_force_count(f) == 5
    empty = Graph(("a", "b", "c", "d"))
    assert brute_force_count(bipartite_to_or1_formula(empty, (["a", "b"], ["c", "d"]))) == 16


def test_bipartite_to_or1_rejects():
    with pytest.raises(InputError):
        bipartite_to_or1_formula(cycle(3))
    path = Graph.from_edges(["u", "v", "w"], [("u", "v"), ("v", "w")])
    with pytest.raises(InputError):
        bipartite_to_or1_formula(path, (["u", "v"], ["w"]))


def test_or1_bijection_explicit():
    rng = make_rng(11)
    g, (ls, rs) = random_bipartite(rng, 4, 4)
    f = bipartite_to_or1_formula(g, (ls, rs))
    from modkcsp.core import satisfying_assignments
    images = set()
    for a in satisfying_assignments(f):
        s = frozenset([u for u in ls if a[u]] + [v for v in rs if not a[v]])
        assert g.is_independent(s)
        images.add(s)
    assert len(images) == count_is(g)


def test_parity_gadget_x1_or_not_x2():
    g, dec = parity_gadget(X1_OR_NOT_X2)
    assert g.vertices == ("v1", "nv1", "p1", "v2", "nv2", "p2", "c1")
    assert len(g.edges) == 8
    assert {frozenset(("c1", "v1")), frozenset(("c1", "nv2"))} <= g.edges
    assert count_is(g) % 2 == 1 and brute_force_count(X1_OR_NOT_X2) == 3
    assert dec.x_set == {"v1", "nv1", "v2", "nv2"}


def test_parity_gadget_contradiction():
    f = formula(["x1"], (T, "x1"), (F, "x1"))
    g, _ = parity_gadget(f)
    assert count_is_mod(g, 2) == 0 == brute_force_count(f)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_parity_gadget_shape_and_parity(seed):
    f = random_cnf(make_rng(seed), max_vars=6, max_clauses=4)
    g, _ = parity_gadget(f)
    n, m = len(f.variables), len(f.constraints)
    assert len(g.vertices) == 3 * n + m
    assert len(g.edges) == 3 * n + sum(len(c.args) for c in f.constraints)
    assert count_is_mod(g, 2) == brute_force_count(f) % 2


def test_parity_gadget_rejects_non_cnf():
    with pytest.raises(InputError):
        parity_gadget(formula(["a", "b"], (XOR, "a", "b")))


def test_prime_gadget_single_clause_p3():
    f = formula(["x1"], (T, "x1"))
    out = prime_gadget(f, 3)
    assert len(out.graph.vertices) == 10
    assert (out.d, out.copy_count) == (2, 3)
    r = count_is_mod(out.graph, 3)
    assert r == 2 == count_is_naive(out.graph) % 3
    assert recover_sat_count_mod_p(out, r) == 1


def test_prime_gadget_p2():
    out = prime_gadget(X1_OR_NOT_X2, 2)
    assert all(len(c.vertices) == 1 for c in out.decomposition.copies)
    assert count_is_mod(out.graph, 2) == 1
    assert recover_sat_count_mod_p(out, 1) == 1


@pytest.mark.parametrize("p", [3, 5, 7])
def test_prime_gadget_shape(p):
    f = random_cnf(make_rng(p), max_vars=3, max_clauses=3, min_vars=3)
    out = prime_gadget(f, p)
    n, m = len(f.variables), len(f.constraints)
    assert len(out.graph.vertices) == 4 * n + (2 * n + m) * (2 * p - 4)
    assert out.graph.is_bipartite()
    assert out.variable_map["x1"] == ("v1", "nv1")


def test_prime_gadget_edges():
    out = prime_gadget(formula(["x1"], (T, "x1")), 5)
    e = out.graph.edges
    for pair in [("v1", "p1"), ("nv1", "np1"), ("p1", "h1"), ("np1", "h1"),
                 ("v1", "h1s"), ("nv1", "h1s"), ("c1", "v1")]:
        assert frozenset(pair) in e
    assert frozenset(("nv1", "h1")) not in e


def test_recover_examples():
    out = prime_gadget(formula(["x1"], (T, "x1")), 3)
    assert recover_sat_count_mod_p(out, 2) == 1
    out2 = prime_gadget(X1_OR_NOT_X2, 2)
    assert recover_sat_count_mod_p(out2, 0) == 0 and recover_sat_count_mod_p(out2, 1) == 1
    out5 = prime_gadget(X1_OR_NOT_X2, 5)
    assert out5.d == 1
    for r in range(5):
        assert recover_sat_count_mod_p(out5, r) == r


def test_recover_rejects_zero_d():
    out = prime_gadget(X1_OR_NOT_X2, 3)
    from dataclasses import replace
    with pytest.raises(ContractError):
        recover_sat_count_mod_p(replace(out, d=0), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from([2, 3, 5, 7]))
def test_prime_gadget_recovers_sat_count(seed, p):
    f = random_cnf(make_rng(seed), max_vars=4, max_clauses=3)
    out = prime_gadget(f, p)
    assert out.graph.is_bipartite()
    r = count_is_mod(out.graph, p, cap=200)
    assert decomposition_count_mod(out.graph, out.decomposition, p) == r
    assert recover_sat_count_mod_p(out, r) == brute_force_count(f) % p


def test_parsimony_all_graphs_up_to_5_vertices():
    vs = ["a", "b", "c", "d", "e"]
    pairs = list(itertools.combinations(vs, 2))
    for mask in range(1 << len(pairs)):
        g = Graph.from_edges(vs, [pairs[i] for i in range(len(pairs)) if mask >> i & 1])
        assert brute_force_count(graph_to_or2_formula(g)) == count_is(g)
        parts = g.bipartition()
        if parts is not None:
            assert brute_force_count(bipartite_to_or1_formula(g, parts)) == count_is(g)
