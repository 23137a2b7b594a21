"""Structural properties of relations and the mod-k counting dichotomy."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

from .core import Relation, bits_to_int, bits_to_str, check_modulus, int_to_bits
from .errors import InputError


def is_0_valid(r: Relation) -> bool:
    return (0,) * r.arity in r.satisfying


def is_1_valid(r: Relation) -> bool:
    return (1,) * r.arity in r.satisfying


def is_c_closed(r: Relation) -> bool:
    return all(tuple(1 - b for b in t) in r.satisfying for t in r.satisfying)


def affine_closure(tuples: Iterable) -> set:
    """Smallest superset closed under coordinatewise a^b^c, by fixed-point iteration."""
    current = {tuple(t) for t in tuples}
    if not current:
        raise InputError("affine closure of an empty set is undefined")
    while True:
        items = sorted(current)
        new = set(current)
        for a in items:
            for b in items:
                for c in items:
                    new.add(tuple(x ^ y ^ z for x, y, z in zip(a, b, c)))
        if new == current:
            return current
        current = new


def _echelon_insert(basis: dict, v: int) -> bool:
    """Reduce v against basis (pivot bit -> row); insert if independent."""
    while v:
        pivot = v & -v
        row = basis.get(pivot)
        if row is None:
            basis[pivot] = v
            return True
        v ^= row
    return False


def difference_basis(r: Relation) -> tuple:
    """(offset, basis rows) spanning the affine hull of r's tuples, as packed ints."""
    packed = sorted(bits_to_int(t) for t in r.satisfying)
    t0 = packed[0]
    basis: dict = {}
    for v in packed[1:]:
        _echelon_insert(basis, v ^ t0)
    return t0, [basis[p] for p in sorted(basis)]


def affine_witness(r: Relation):
    """A triple (a, b, c) of satisfying tuples with a^b^c outside r, or None if r is affine."""
    if not r.satisfying:
        return None
    t0, basis = difference_basis(r)
    if len(r.satisfying) == 1 << len(basis):
        return None
    # closure under x^y^t0 for a fixed t0 already makes the set a coset
    members = {bits_to_int(t) for t in r.satisfying}
    ordered = sorted(members)
    for a in ordered:
        for b in ordered:
            if a ^ b ^ t0 not in members:
                n = r.arity
                return int_to_bits(t0, n), int_to_bits(a, n), int_to_bits(b, n)
    raise AssertionError("non-affine relation without a witness triple")


def is_affine(r: Relation) -> bool:
    """True iff the satisfying set is a coset of a GF(2) subspace.

    The empty relation counts as affine (it is the solution set of 0 = 1).
    """
    if not r.satisfying:
        return True
    _, basis = difference_basis(r)
    return len(r.satisfying) == 1 << len(basis)


PROPERTY_NAMES = ("zero_valid", "one_valid", "c_closed", "affine")


@dataclass(frozen=True)
class RelationProperties:
    name: str
    zero_valid: bool
    one_valid: bool
    c_closed: bool
    affine: bool
    empty: bool
    affine_witness: tuple | None = None

    def to_json(self) -> dict:
        out = {p: getattr(self, p) for p in PROPERTY_NAMES}
        out["empty"] = self.empty
        if self.affine_witness is not None:
            out["affine_witness"] = [bits_to_str(t) for t in self.affine_witness]
        return out


def relation_properties(r: Relation) -> RelationProperties:
    return RelationProperties(
        name=r.name,
        zero_valid=is_0_valid(r),
        one_valid=is_1_valid(r),
        c_closed=is_c_closed(r),
        affine=is_affine(r),
        empty=not r.satisfying,
        affine_witness=affine_witness(r),
    )


@dataclass(frozen=True)
class PropertyReport:
    relations: tuple  # of RelationProperties, sorted by name

    def flag(self, prop: str) -> bool:
        return all(getattr(p, prop) for p in self.relations)

    @property
    def zero_valid(self):
        return self.flag("zero_valid")

    @property
    def one_valid(self):
        return self.flag("one_valid")

    @property
    def c_closed(self):
        return self.flag("c_closed")

    @property
    def affine(self):
        return self.flag("affine")

    def witness(self):
        """(relation name, triple) for the first non-affine relation, if any."""
        for p in self.relations:
            if p.affine_witness is not None:
                return p.name, p.affine_witness
        return None

    def to_json(self) -> dict:
        out = {
            "set": {p: self.flag(p) for p in PROPERTY_NAMES},
            "relations": {p.name: p.to_json() for p in self.relations},
        }
        w = self.witness()
        if w is not None:
            out["set"]["affine_witness"] = {"relation": w[0],
                                           "tuples": [bits_to_str(t) for t in w[1]]}
        return out


def normalize_set(S: Iterable[Relation]) -> tuple:
    rels = sorted(set(S), key=lambda r: (r.name, r.arity, sorted(r.satisfying)))
    if not rels:
        raise InputError("constraint set is empty")
    names = [r.name for r in rels]
    if len(set(names)) != len(names):
        raise InputError("constraint set has two different relations with the same name")
    return tuple(rels)


def property_report(S: Iterable[Relation]) -> PropertyReport:
    return PropertyReport(tuple(relation_properties(r) for r in normalize_set(S)))


class Outcome(str, enum.Enum):
    FP_AFFINE = "FP_affine"
    FP_PARITY_CCLOSED = "FP_parity_cclosed"
    HARD = "Hard"


@dataclass(frozen=True)
class DichotomyVerdict:
    outcome: Outcome
    k: int
    properties: PropertyReport
    certificate: object = None  # ReductionCertificate when outcome is HARD

    @property
    def in_fp(self) -> bool:
        return self.outcome is not Outcome.HARD

    def to_json(self) -> dict:
        out = {"outcome": self.outcome.value, "k": self.k,
               "properties": self.properties.to_json()}
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        return out


def decide(S: Iterable[Relation], k: int) -> Outcome:
    """The verdict alone, without building a certificate."""
    k = check_modulus(k)
    report = property_report(S)
    return _outcome(report, k)


def _outcome(report: PropertyReport, k: int) -> Outcome:
    if report.affine:
        return Outcome.FP_AFFINE
    if k == 2 and report.c_closed:
        return Outcome.FP_PARITY_CCLOSED
    return Outcome.HARD


def classify(S: Iterable[Relation], k: int, *, certificate: bool = True,
             bounds=None) -> DichotomyVerdict:
    """Classify #_k SAT(S) as polynomial-time or #_kP-complete.

    The outcome depends only on the property flags; for hard sets a
    reduction certificate is assembled by bounded implementation search and
    may be marked incomplete if the search runs out of room.
    """
    k = check_modulus(k)
    rels = normalize_set(S)
    report = PropertyReport(tuple(relation_properties(r) for r in rels))
    outcome = _outcome(report, k)
    cert = None
    if outcome is Outcome.HARD and certificate:
        from .implementations import build_reduction_certificate
        cert = build_reduction_certificate(rels, k, bounds=bounds)
    return DichotomyVerdict(outcome, k, report, cert)


def parity_fast_path(S: Iterable[Relation]) -> int:
    """Count mod 2 for a C-closed set: always 0, since s -> 1-s pairs up solutions."""
    if not property_report(S).c_closed:
        raise InputError("parity fast path needs a C-closed constraint set")
    return 0
