"""Graphs, independent-set counting and the SAT -> independent-set gadgets."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from sympy import isprime

from .core import (OR1, OR2, ConstraintApplication, Formula, check_modulus,
                   clause_signs)
from .errors import ContractError, InputError, ResourceError

DEFAULT_IS_CAP = 96
NAIVE_IS_CAP = 26
IS_CAP_ENV = "MODKCSP_IS_CAP"


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with ordered, labelled vertices."""

    vertices: tuple
    edges: frozenset = frozenset()

    def __post_init__(self):
        verts = tuple(self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(set(verts)) != len(verts):
            raise InputError("duplicate vertex label")
        known = set(verts)
        norm = set()
        for e in self.edges:
            ends = tuple(e)
            if len(ends) != 2 or ends[0] == ends[1]:
                raise InputError(f"self-loop at {ends[0]!r}")
            u, v = ends
            if u not in known or v not in known:
                raise InputError(f"edge ({u!r}, {v!r}) uses an unknown vertex")
            norm.add(frozenset((u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, vertices: Iterable, edges: Iterable) -> "Graph":
        edges = list(edges)
        seen = set()
        for u, v in edges:
            if u == v:
                raise InputError(f"self-loop at {u!r}")
            key = frozenset((u, v))
            if key in seen:
                raise InputError(f"duplicate edge ({u!r}, {v!r})")
            seen.add(key)
        return cls(tuple(vertices), frozenset(seen))

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def adjacency(self) -> dict:
        adj = {v: set() for v in self.vertices}
        for e in self.edges:
            u, v = tuple(e)
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def neighbors(self, v) -> set:
        return self.adjacency[v]

    def neighborhood(self, vs: Iterable) -> set:
        """Open neighbourhood of a vertex set."""
        vs = set(vs)
        out = set()
        for v in vs:
            out |= self.adjacency[v]
        return out - vs

    def sorted_edges(self) -> list:
        """Edges as (u, v) with u before v in vertex order, sorted by that order."""
        idx = self.index
        pairs = []
        for e in self.edges:
            u, v = sorted(e, key=idx.__getitem__)
            pairs.append((u, v))
        return sorted(pairs, key=lambda p: (idx[p[0]], idx[p[1]]))

    def induced(self, vs: Iterable) -> "Graph":
        keep = set(vs)
        return Graph(tuple(v for v in self.vertices if v in keep),
                     frozenset(e for e in self.edges if e <= keep))

    def without(self, vs: Iterable) -> "Graph":
        drop = set(vs)
        return self.induced(v for v in self.vertices if v not in drop)

    def is_independent(self, s: Iterable) -> bool:
        s = set(s)
        return not any(self.adjacency[v] & s for v in s)

    def bipartition(self):
        """(L, R) with every edge across, or None if the graph has an odd cycle."""
        side: dict = {}
        for start in self.vertices:
            if start in side:
                continue
            side[start] = 0
            stack = [start]
            while stack:
                u = stack.pop()
                for w in sorted(self.adjacency[u], key=self.index.__getitem__):
                    if w not in side:
                        side[w] = 1 - side[u]
                        stack.append(w)
                    elif side[w] == side[u]:
                        return None
        left = tuple(v for v in self.vertices if side[v] == 0)
        right = tuple(v for v in self.vertices if side[v] == 1)
        return left, right

    def is_bipartite(self) -> bool:
        return self.bipartition() is not None


def complete_bipartite(n: int, m: int, left="L", right="R") -> Graph:
    ls = [f"{left}{i}" for i in range(n)]
    rs = [f"{right}{i}" for i in range(m)]
    return Graph.from_edges(ls + rs, [(a, b) for a in ls for b in rs])


# --- independent-set counting ---------------------------------------------

def is_cap(cap: int | None = None) -> int:
    if cap is not None:
        return cap
    raw = os.environ.get(IS_CAP_ENV)
    return int(raw) if raw else DEFAULT_IS_CAP


def count_is_naive(g: Graph, cap: int = NAIVE_IS_CAP) -> int:
    """Enumerate all 2^n vertex subsets. Oracle only."""
    n = len(g.vertices)
    if n > cap:
        raise ResourceError(f"{n} vertices exceed the naive cap of {cap}", cap=cap)
    nbr = [0] * n
    for u, v in g.sorted_edges():
        i, j = g.index[u], g.index[v]
        nbr[i] |= 1 << j
        nbr[j] |= 1 << i
    total = 0
    for s in range(1 << n):
        ok = True
        t = s
        while t:
            low = t & -t
            if nbr[low.bit_length() - 1] & s:
                ok = False
                break
            t ^= low
        total += ok
    return total


def _components(mask: int, nbr: list) -> list:
    comps = []
    rest = mask
    while rest:
        seed = rest & -rest
        comp = seed
        frontier = seed
        while frontier:
            low = frontier & -frontier
            frontier ^= low
            new = nbr[low.bit_length() - 1] & mask & ~comp
            comp |= new
            frontier |= new
        comps.append(comp)
        rest &= ~comp
    return comps


class _ISCounter:
    """Branch on a maximum-degree vertex, factorising over connected components."""

    def __init__(self, nbr: list, modulus: int | None):
        self.nbr = nbr
        self.k = modulus
        self.memo: dict = {}

    def _reduce(self, x):
        return x % self.k if self.k else x

    def count(self, mask: int):
        if not mask:
            return 1
        hit = self.memo.get(mask)
        if hit is not None:
            return hit
        comps = _components(mask, self.nbr)
        if len(comps) > 1:
            out = 1
            for c in comps:
                out = self._reduce(out * self.count(c))
        else:
            out = self._count_connected(mask)
        self.memo[mask] = out
        return out

    def _count_connected(self, mask: int):
        best, best_deg = -1, -1
        t = mask
        while t:
            low = t & -t
            t ^= low
            i = low.bit_length() - 1
            d = bin(self.nbr[i] & mask).count("1")
            if d > best_deg:
                best, best_deg = i, d
        if best_deg == 0:
            return self._reduce(1 << bin(mask).count("1"))
        bit = 1 << best
        without = self.count(mask & ~bit)
        with_v = self.count(mask & ~bit & ~self.nbr[best])
        return self._reduce(without + with_v)


def _count(g: Graph, modulus, cap):
    cap = is_cap(cap)
    n = len(g.vertices)
    if n > cap:
        raise ResourceError(f"{n} vertices exceed the independent-set cap of {cap} "
                            f"(set {IS_CAP_ENV} to raise it)", cap=cap)
    # bit positions follow label order, so max-degree ties go to the smallest label
    pos = {v: i for i, v in enumerate(sorted(g.vertices))}
    nbr = [0] * n
    for e in g.edges:
        u, v = tuple(e)
        i, j = pos[u], pos[v]
        nbr[i] |= 1 << j
        nbr[j] |= 1 << i
    limit = sys.getrecursionlimit()
    if limit < 4 * n + 100:
        sys.setrecursionlimit(4 * n + 100)
    return _ISCounter(nbr, modulus).count((1 << n) - 1)


def count_is(g: Graph, cap: int | None = None) -> int:
    """Exact number of independent sets, the empty set included."""
    return _count(g, None, cap)


def count_is_mod(g: Graph, k: int, cap: int | None = None) -> int:
    k = check_modulus(k)
    return _count(g, k, cap)


def independent_sets(g: Graph, within: Sequence | None = None):
    """Yield independent subsets of `within` (default: all vertices) as frozensets."""
    order = list(within) if within is not None else list(g.vertices)

    def rec(i, chosen, blocked):
        if i == len(order):
            yield frozenset(chosen)
            return
        v = order[i]
        yield from rec(i + 1, chosen, blocked)
        if v not in blocked:
            chosen.append(v)
            yield from rec(i + 1, chosen, blocked | g.adjacency[v])
            chosen.pop()

    yield from rec(0, [], frozenset())


# --- Fermat gadget ----------------------------------------------------------

@dataclass(frozen=True)
class HGadget:
    graph: Graph
    h: str
    total: int          # |I(H)|
    without_h: int      # |I(H - h)|


def make_H(p: int) -> HGadget:
    """Bipartite H with |I(H)| = 0 and |I(H - h)| != 0 mod p.

    K_1 for p = 2, K_{p-2,p-2} otherwise.
    """
    if isinstance(p, bool) or not isinstance(p, int) or p < 2 or not isprime(p):
        raise InputError(f"make_H needs a prime, got {p!r}")
    if p == 2:
        g = Graph(("L0",))
        total, without = 2, 1
    else:
        n = p - 2
        g = complete_bipartite(n, n)
        total = 2 ** (p - 1) - 1
        without = 2 ** (p - 2) + 2 ** (p - 3) - 1
    if total % p != 0 or without % p == 0:
        raise ContractError(f"Fermat gadget for p={p} has counts {total}, {without}")
    return HGadget(g, "L0", total, without)


# --- gadget decompositions --------------------------------------------------

@dataclass(frozen=True)
class GadgetCopy:
    vertices: frozenset
    h: str

    def __post_init__(self):
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        if self.h not in self.vertices:
            raise InputError(f"distinguished vertex {self.h!r} is not in its copy")


@dataclass(frozen=True)
class GadgetDecomposition:
    x_set: frozenset
    copies: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "x_set", frozenset(self.x_set))
        object.__setattr__(self, "copies", tuple(self.copies))


def check_decomposition(g: Graph, dec: GadgetDecomposition, k: int) -> None:
    """Raise ContractError naming the first violated structural condition."""
    owner: dict = {}
    for v in dec.x_set:
        owner[v] = "X"
    for i, c in enumerate(dec.copies):
        for v in c.vertices:
            if v in owner:
                raise ContractError(f"vertex {v!r} lies in both {owner[v]} and copy {i}")
            owner[v] = i
    missing = set(g.vertices) - set(owner)
    if missing:
        raise ContractError(f"vertices not covered by the decomposition: {sorted(missing)}")
    extra = set(owner) - set(g.vertices)
    if extra:
        raise ContractError(f"decomposition names unknown vertices: {sorted(extra)}")
    for u, v in g.sorted_edges():
        a, b = owner[u], owner[v]
        if a == b:
            continue
        if a == "X" and b != "X" and v == dec.copies[b].h:
            continue
        if b == "X" and a != "X" and u == dec.copies[a].h:
            continue
        raise ContractError(f"edge ({u}, {v}) crosses between parts illegally")
    for i, c in enumerate(dec.copies):
        n_is = count_is_mod(g.induced(c.vertices), k)
        if n_is != 0:
            raise ContractError(f"copy {i} (h={c.h}) has {n_is} mod {k} independent sets, not 0")


def decomposition_count_mod(g: Graph, dec: GadgetDecomposition, k: int,
                            cap: int | None = None) -> int:
    """Independent-set count mod k via the sum over independent subsets of X.

    Only subsets of X that touch the neighbourhood of every copy contribute;
    each contributes the product of |I(H_i - h_i)|.
    """
    k = check_modulus(k)
    check_decomposition(g, dec, k)
    cap = is_cap(cap)
    if len(dec.x_set) > cap:
        raise ResourceError(f"|X| = {len(dec.x_set)} exceeds cap {cap}", cap=cap)
    x_order = [v for v in g.vertices if v in dec.x_set]
    attach = [g.neighbors(c.h) & dec.x_set for c in dec.copies]
    inner = [count_is_mod(g.induced(c.vertices - {c.h}), k) for c in dec.copies]
    total = 0
    for i0 in independent_sets(g, x_order):
        term = 1
        for att, cnt in zip(attach, inner):
            if not (att & i0):
                term = 0
                break
            term = term * cnt % k
        total = (total + term) % k
    return total


lemma4_evaluate = decomposition_count_mod  # name used by the public contract


# --- graph -> formula -------------------------------------------------------

def graph_to_or2_formula(g: Graph) -> Formula:
    """One variable per vertex, one clause (not x_u or not x_v) per edge."""
    apps = [ConstraintApplication(OR2, (u, v)) for u, v in g.sorted_edges()]
    return Formula(g.vertices, tuple(apps))


def bipartite_to_or1_formula(g: Graph, parts=None) -> Formula:
    """One variable per vertex, clause (not x_u or x_v) per edge u in L, v in R.

    Independent sets correspond to assignments via
    I = {u in L : x_u = 1} | {v in R : x_v = 0}.
    """
    if parts is None:
        parts = g.bipartition()
        if parts is None:
            raise InputError("graph is not bipartite")
    left, right = (set(p) for p in parts)
    if left & right or (left | right) != set(g.vertices):
        raise InputError("parts do not partition the vertex set")
    apps = []
    for u, v in g.sorted_edges():
        if u in left and v in right:
            apps.append(ConstraintApplication(OR1, (u, v)))
        elif v in left and u in right:
            apps.append(ConstraintApplication(OR1, (v, u)))
        else:
            raise InputError(f"edge ({u}, {v}) lies inside one part")
    return Formula(g.vertices, tuple(apps))


# --- SAT -> independent-set gadgets ----------------------------------------

def cnf_clauses(cnf: Formula) -> list:
    """Clauses as lists of (variable, positive?) literals."""
    out = []
    for c in cnf.constraints:
        signs = clause_signs(c.relation)
        if signs is None:
            raise InputError(f"{c.relation.name} is not a clause relation")
        out.append(list(zip(c.args, signs)))
    return out


def _literal_vertex(var_idx: dict, var, positive: bool) -> str:
    i = var_idx[var]
    return f"v{i}" if positive else f"nv{i}"


def parity_gadget(cnf: Formula):
    """Graph whose independent-set count is #SAT(cnf) mod 2.

    Returns (graph, decomposition); the decomposition uses K_1 copies p_i, c_j.
    """
    clauses = cnf_clauses(cnf)
    var_idx = {v: i + 1 for i, v in enumerate(cnf.variables)}
    verts, edges = [], []
    x_set, copies = [], []
    for v, i in var_idx.items():
        vi, nvi, pi = f"v{i}", f"nv{i}", f"p{i}"
        verts += [vi, nvi, pi]
        edges += [(vi, nvi), (pi, vi), (pi, nvi)]
        x_set += [vi, nvi]
        copies.append(GadgetCopy({pi}, pi))
    for j, clause in enumerate(clauses, 1):
        cj = f"c{j}"
        verts.append(cj)
        copies.append(GadgetCopy({cj}, cj))
        for lit in dict.fromkeys(_literal_vertex(var_idx, v, s) for v, s in clause):
            edges.append((cj, lit))
    g = Graph.from_edges(verts, edges)
    return g, GadgetDecomposition(frozenset(x_set), tuple(copies))


@dataclass(frozen=True)
class PrimeGadgetOutput:
    graph: Graph
    decomposition: GadgetDecomposition
    p: int
    d: int
    copy_count: int
    variable_map: dict = field(default_factory=dict)


def _add_copy(H: HGadget, prefix: str, verts: list, edges: list) -> GadgetCopy:
    def rename(x):
        return prefix if x == H.h else f"{prefix}_{x}"
    order = [H.h] + [x for x in H.graph.vertices if x != H.h]
    names = [rename(x) for x in order]
    verts += names
    edges += [(rename(a), rename(b)) for a, b in H.graph.sorted_edges()]
    return GadgetCopy(frozenset(names), prefix)


def prime_gadget(cnf: Formula, p: int) -> PrimeGadgetOutput:
    """Bipartite graph with |I(G)| = #SAT(cnf) * d^(2n+m) mod p."""
    H = make_H(p)
    clauses = cnf_clauses(cnf)
    var_idx = {v: i + 1 for i, v in enumerate(cnf.variables)}
    verts, edges, x_set, copies = [], [], [], []
    vmap = {}
    for v, i in var_idx.items():
        vi, nvi, pi, npi = f"v{i}", f"nv{i}", f"p{i}", f"np{i}"
        hi, hsi = f"h{i}", f"h{i}s"
        verts += [vi, nvi, pi, npi]
        x_set += [vi, nvi, pi, npi]
        copies.append(_add_copy(H, hi, verts, edges))
        copies.append(_add_copy(H, hsi, verts, edges))
        edges += [(vi, pi), (nvi, npi), (pi, hi), (npi, hi), (vi, hsi), (nvi, hsi)]
        vmap[v] = (vi, nvi)
    for j, clause in enumerate(clauses, 1):
        cj = f"c{j}"
        copies.append(_add_copy(H, cj, verts, edges))
        for lit in dict.fromkeys(_literal_vertex(var_idx, v, s) for v, s in clause):
            edges.append((cj, lit))
    g = Graph.from_edges(verts, edges)
    if not g.is_bipartite():
        raise ContractError("prime gadget output is not bipartite")
    dec = GadgetDecomposition(frozenset(x_set), tuple(copies))
    return PrimeGadgetOutput(g, dec, p, H.without_h % p,
                             2 * len(var_idx) + len(clauses), vmap)


def recover_sat_count_mod_p(out: PrimeGadgetOutput, is_count_mod_p: int) -> int:
    """Divide out the d^(2n+m) factor to get #SAT mod p."""
    p = out.p
    if out.d % p == 0:
        raise ContractError("gadget factor d is 0 mod p; cannot divide")
    scale = pow(out.d, out.copy_count, p)
    return is_count_mod_p % p * pow(scale, -1, p) % p
