"""Counting solutions of affine formulas by Gaussian elimination over GF(2).

Rows are packed into Python ints: bit j of a coefficient mask is the
coefficient of variable j.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .classifier import affine_witness, difference_basis, is_affine
from .core import Formula, Relation, check_modulus
from .errors import ContractError


@dataclass(frozen=True)
class LinearSystemGF2:
    num_vars: int
    rows: tuple  # of (mask, rhs)

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple((int(m), int(b) & 1) for m, b in self.rows))
        limit = 1 << self.num_vars
        for m, _ in self.rows:
            if m < 0 or m >= limit:
                raise ContractError(f"coefficient mask {m:b} wider than {self.num_vars} variables")

    def satisfied_by(self, x: int) -> bool:
        """x packs a full assignment, bit j = value of variable j."""
        return all(bin(m & x).count("1") & 1 == b for m, b in self.rows)

    def solutions(self):
        return [x for x in range(1 << self.num_vars) if self.satisfied_by(x)]

    def describe(self, names=None) -> list:
        names = names or [f"x{j + 1}" for j in range(self.num_vars)]
        out = []
        for m, b in self.rows:
            lhs = " + ".join(names[j] for j in range(self.num_vars) if m >> j & 1) or "0"
            out.append(f"{lhs} = {b}")
        return out


@dataclass(frozen=True)
class EliminationResult:
    consistent: bool
    rank: int
    free_vars: int


def eliminate(system: LinearSystemGF2) -> EliminationResult:
    """Row-reduce, pivoting on the lowest-index nonzero column."""
    pivots: dict = {}  # pivot bit -> (mask, rhs)
    consistent = True
    for mask, rhs in system.rows:
        while mask:
            low = mask & -mask
            hit = pivots.get(low)
            if hit is None:
                pivots[low] = (mask, rhs)
                break
            mask ^= hit[0]
            rhs ^= hit[1]
        else:
            if rhs:
                consistent = False
    rank = len(pivots)
    return EliminationResult(consistent, rank, system.num_vars - rank)


def _null_space(basis: list, n: int) -> list:
    """Basis of {c : c.b = 0 for all b in basis} over GF(2), as packed ints."""
    # reduced row echelon form of the basis
    rows = []
    for v in basis:
        for r in rows:
            if v & (r & -r):
                v ^= r
        if v:
            low = v & -v
            rows = [r ^ v if r & low else r for r in rows]
            rows.append(v)
    pivot_of = {(r & -r).bit_length() - 1: r for r in rows}
    out = []
    for free in range(n):
        if free in pivot_of:
            continue
        c = 1 << free
        for p, r in pivot_of.items():
            if r >> free & 1:
                c |= 1 << p
        out.append(c)
    return out


@lru_cache(maxsize=None)
def relation_to_system(r: Relation) -> LinearSystemGF2:
    """Linear equations whose solution set is exactly r.satisfying.

    The equations are the orthogonal complement of the span of differences
    t - t0, each with right-hand side c.t0.
    """
    if not r.satisfying:
        return LinearSystemGF2(r.arity, ((0, 1),))
    if not is_affine(r):
        raise ContractError(f"relation {r.name} is not affine "
                            f"(witness {affine_witness(r)})")
    t0, basis = difference_basis(r)
    rows = tuple((c, bin(c & t0).count("1") & 1) for c in _null_space(basis, r.arity))
    return LinearSystemGF2(r.arity, rows)


def formula_to_system(f: Formula) -> LinearSystemGF2:
    index = {v: i for i, v in enumerate(f.variables)}
    rows = []
    for c in f.constraints:
        local = relation_to_system(c.relation)
        cols = [index[v] for v in c.args]
        for mask, rhs in local.rows:
            m = 0
            for j, col in enumerate(cols):
                if mask >> j & 1:
                    m ^= 1 << col
            rows.append((m, rhs))
    return LinearSystemGF2(len(f.variables), tuple(rows))


def count_affine(f: Formula) -> int:
    res = eliminate(formula_to_system(f))
    return 1 << res.free_vars if res.consistent else 0


def count_affine_mod(f: Formula, k: int) -> int:
    k = check_modulus(k)
    res = eliminate(formula_to_system(f))
    return pow(2, res.free_vars, k) if res.consistent else 0
