"""Faithful implementations: verification, bounded search, and the
count-doubling transforms used for complement-closed constraint sets."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from sympy import factorint

from .classifier import (Outcome, decide, is_0_valid, is_1_valid, is_affine,
                         is_c_closed, normalize_set)
from .core import (OR0, OR1, OR2, XOR, ConstraintApplication, F, Formula,
                   Relation, T, brute_force_count, check_modulus,
                   count_extensions, enum_cap)
from .errors import ContractError, InputError, ResourceError


@dataclass(frozen=True)
class ImplementationWitness:
    function_vars: tuple
    aux_vars: tuple
    constraints: tuple
    target: Relation | None = None

    def __post_init__(self):
        object.__setattr__(self, "function_vars", tuple(self.function_vars))
        object.__setattr__(self, "aux_vars", tuple(self.aux_vars))
        object.__setattr__(self, "constraints", tuple(self.constraints))

    def as_formula(self) -> Formula:
        return Formula(self.function_vars + self.aux_vars, self.constraints)

    @property
    def relations(self) -> list:
        return sorted({c.relation.name for c in self.constraints})

    def to_json(self) -> dict:
        return {
            "target": self.target.name if self.target else None,
            "function_vars": list(self.function_vars),
            "aux_vars": list(self.aux_vars),
            "constraints": [str(c) for c in self.constraints],
        }


def identity_witness(r: Relation) -> ImplementationWitness:
    xs = tuple(f"x{i + 1}" for i in range(r.arity))
    return ImplementationWitness(xs, (), (ConstraintApplication(r, xs),), r)


@dataclass(frozen=True)
class FaithfulnessCheck:
    ok: bool
    counterexample: dict | None = None
    extensions: int | None = None
    expected: str | None = None

    def __bool__(self):
        return self.ok


def _extension_counts(w: ImplementationWitness, f: Relation, cap):
    if len(w.function_vars) != f.arity:
        raise InputError(f"witness has {len(w.function_vars)} function variables, "
                         f"target {f.name} has arity {f.arity}")
    n = len(w.function_vars) + len(w.aux_vars)
    cap = enum_cap(cap)
    if n > cap:
        raise ResourceError(f"witness has {n} variables, cap is {cap}", cap=cap)
    for bits in itertools.product((0, 1), repeat=f.arity):
        a = dict(zip(w.function_vars, bits))
        yield a, bits in f.satisfying, count_extensions(w.constraints, a, w.aux_vars)


def verify_faithful(w: ImplementationWitness, f: Relation,
                    cap: int | None = None) -> FaithfulnessCheck:
    """Exactly one extension where f holds, none where it fails."""
    for a, truth, n in _extension_counts(w, f, cap):
        if n != (1 if truth else 0):
            return FaithfulnessCheck(False, a, n, "1" if truth else "0")
    return FaithfulnessCheck(True)


def verify_faithful_mod(w: ImplementationWitness, f: Relation, k: int,
                        cap: int | None = None) -> FaithfulnessCheck:
    """Weaker variant: extension counts only need to be 1 / 0 modulo k."""
    k = check_modulus(k)
    for a, truth, n in _extension_counts(w, f, cap):
        if n % k != (1 if truth else 0) % k:
            return FaithfulnessCheck(False, a, n, f"{1 if truth else 0} mod {k}")
    return FaithfulnessCheck(True)


# --- bounded search ---------------------------------------------------------

@dataclass(frozen=True)
class SearchBounds:
    max_aux: int = 3
    max_constraints: int = 5
    repeated_args: bool = False
    max_nodes: int = 2_000_000

    def __post_init__(self):
        if self.max_aux < 0 or self.max_constraints < 0:
            raise InputError("search bounds must be non-negative")


@dataclass
class SearchResult:
    witness: ImplementationWitness | None
    exhausted: bool  # True when the whole bounded space was searched
    nodes: int = 0

    @property
    def found(self) -> bool:
        return self.witness is not None


def _candidates(S: Sequence[Relation], names: Sequence[str], repeated: bool):
    n = len(names)
    out = []
    for r in S:
        it = (itertools.product(range(n), repeat=r.arity) if repeated
              else itertools.permutations(range(n), r.arity))
        for args in sorted(it):
            out.append((r, args))
    return out


def _app_mask(r: Relation, args: Sequence[int], n: int) -> int:
    m = 0
    for s in range(1 << n):
        if tuple((s >> i) & 1 for i in args) in r.satisfying:
            m |= 1 << s
    return m


def _search_level(S, f: Relation, a: int, bounds: SearchBounds, budget: list):
    r = f.arity
    names = [f"x{i + 1}" for i in range(r)] + [f"y{i + 1}" for i in range(a)]
    n = r + a
    full = (1 << (1 << n)) - 1
    blocks = []
    for ax in range(1 << r):
        bm = 0
        for ay in range(1 << a):
            bm |= 1 << (ax | (ay << r))
        truth = tuple((ax >> i) & 1 for i in range(r)) in f.satisfying
        blocks.append((bm, truth))
    must_live = [bm for bm, truth in blocks if truth]

    # semantically equal candidates collapse onto the first in enumeration order
    cands, seen = [], set()
    for rel, args in _candidates(S, names, bounds.repeated_args):
        m = _app_mask(rel, args, n)
        if m == full or m in seen:
            continue
        seen.add(m)
        cands.append((rel, args, m))

    def faithful(mask):
        for bm, truth in blocks:
            c = bin(mask & bm).count("1")
            if c != (1 if truth else 0):
                return False
        return True

    def dfs(start, depth, mask, chosen):
        budget[0] -= 1
        if budget[0] < 0:
            raise _BudgetOut
        if depth == 0:
            return list(chosen) if faithful(mask) else None
        for i in range(start, len(cands)):
            rel, args, m = cands[i]
            new = mask & m
            if new == mask:
                continue
            if any(not (new & bm) for bm in must_live):
                continue
            chosen.append(i)
            hit = dfs(i + 1, depth - 1, new, chosen)
            chosen.pop()
            if hit is not None:
                return hit
        return None

    for c in range(bounds.max_constraints + 1):
        hit = dfs(0, c, full, [])
        if hit is not None:
            apps = tuple(ConstraintApplication(cands[i][0], tuple(names[j] for j in cands[i][1]))
                         for i in hit)
            return ImplementationWitness(tuple(names[:r]), tuple(names[r:]), apps, f)
    return None


class _BudgetOut(Exception):
    pass


def search_implementation(S: Iterable[Relation], f: Relation,
                          bounds: SearchBounds | None = None) -> SearchResult:
    """First faithful implementation of f over S within the bounds.

    Candidates are ordered by number of auxiliary variables, then number of
    constraints, then (relation name, argument tuple). A miss never proves
    that no implementation exists.
    """
    bounds = bounds or SearchBounds()
    rels = normalize_set(S)
    budget = [bounds.max_nodes]
    try:
        for a in range(bounds.max_aux + 1):
            w = _search_level(rels, f, a, bounds, budget)
            if w is not None:
                check = verify_faithful(w, f)
                if not check:
                    raise ContractError(f"search produced an unfaithful witness: {check}")
                return SearchResult(w, False, bounds.max_nodes - budget[0])
    except _BudgetOut:
        return SearchResult(None, False, bounds.max_nodes)
    return SearchResult(None, True, bounds.max_nodes - budget[0])


# --- applying implementations -----------------------------------------------

def aux_name(constraint_index: int, var_index: int) -> str:
    return f"aux_{constraint_index}_{var_index}"


def apply_implementations(f: Formula, mapping: Mapping[str, ImplementationWitness],
                          verify: bool = True) -> Formula:
    """Replace each constraint by the witness implementing its relation.

    Auxiliary variables are fresh per constraint occurrence, so the exact
    number of satisfying assignments is unchanged.
    """
    used = set(f.relations)
    missing = used - set(mapping)
    if missing:
        raise InputError(f"no implementation given for {sorted(missing)}")
    if verify:
        for name in sorted(used):
            check = verify_faithful(mapping[name], f.relations[name])
            if not check:
                raise ContractError(f"witness for {name} is not faithful "
                                    f"(at {check.counterexample}: {check.extensions} extensions)")
    taken = set(f.variables)
    new_vars = list(f.variables)
    apps = []
    for ci, c in enumerate(f.constraints):
        w = mapping[c.relation.name]
        sub = dict(zip(w.function_vars, c.args))
        for ai, y in enumerate(w.aux_vars):
            name = aux_name(ci, ai)
            if name in taken:
                raise InputError(f"variable name {name} already in use")
            taken.add(name)
            sub[y] = name
            new_vars.append(name)
        for wc in w.constraints:
            apps.append(ConstraintApplication(wc.relation, tuple(sub[v] for v in wc.args)))
    return Formula(tuple(new_vars), tuple(apps))


def compose_witness(w: ImplementationWitness,
                    mapping: Mapping[str, ImplementationWitness]) -> ImplementationWitness:
    """Rewrite w's constraints through further implementations."""
    full = {name: mapping.get(name) for name in {c.relation.name for c in w.constraints}}
    for c in w.constraints:
        if full[c.relation.name] is None:
            full[c.relation.name] = identity_witness(c.relation)
    g = apply_implementations(w.as_formula(), full, verify=False)
    aux = tuple(v for v in g.variables if v not in w.function_vars)
    return ImplementationWitness(w.function_vars, aux, g.constraints, w.target)


# --- doubling transforms ------------------------------------------------------

def _is_T(r: Relation) -> bool:
    return r.arity == 1 and r.satisfying == T.satisfying


def _is_F(r: Relation) -> bool:
    return r.arity == 1 and r.satisfying == F.satisfying


def _fresh(base: str, taken) -> str:
    name = base
    while name in taken:
        name += "_"
    return name


def _require_c_closed(rels: Iterable[Relation], what: str):
    bad = sorted(r.name for r in rels if not is_c_closed(r))
    if bad:
        raise ContractError(f"{what} needs C-closed relations; not C-closed: {bad}")


def xor_doubling_transform(f: Formula) -> Formula:
    """Replace T/F constants by a fresh complementary pair (y0, y1).

    For a C-closed remainder the output has exactly twice as many
    satisfying assignments: every solution appears once as-is and once
    complemented.
    """
    rest = [c for c in f.constraints if not (_is_T(c.relation) or _is_F(c.relation))]
    _require_c_closed({c.relation for c in rest}, "xor_doubling_transform")
    true_vars = {c.args[0] for c in f.constraints if _is_T(c.relation)}
    false_vars = {c.args[0] for c in f.constraints if _is_F(c.relation)}
    y0 = _fresh("y0", f.variables)
    y1 = _fresh("y1", set(f.variables) | {y0})
    sub = {v: y1 for v in true_vars}
    sub.update({v: y0 for v in false_vars})
    apps = [ConstraintApplication(c.relation, tuple(sub.get(v, v) for v in c.args)) for c in rest]
    for _ in sorted(true_vars & false_vars):
        # a variable forced both ways: keep the contradiction
        apps.append(ConstraintApplication(XOR, (y0, y0)))
    apps.append(ConstraintApplication(XOR, (y0, y1)))
    variables = tuple(v for v in f.variables if v not in sub) + (y0, y1)
    return Formula(variables, tuple(apps))


def false_var_merge_transform(f: Formula) -> Formula:
    """Merge every variable constrained false into one fresh variable x0."""
    rest = [c for c in f.constraints if not _is_F(c.relation)]
    _require_c_closed({c.relation for c in rest}, "false_var_merge_transform")
    false_vars = {c.args[0] for c in f.constraints if _is_F(c.relation)}
    x0 = _fresh("x0", f.variables)
    apps = [ConstraintApplication(c.relation, tuple(x0 if v in false_vars else v for v in c.args))
            for c in rest]
    variables = tuple(v for v in f.variables if v not in false_vars) + (x0,)
    return Formula(variables, tuple(apps))


TRANSFORMS = {
    "xor_doubling": xor_doubling_transform,
    "false_var_merge": false_var_merge_transform,
}


# --- reduction certificates ---------------------------------------------------

CASE_NEITHER = "g neither 0-valid nor 1-valid"
CASE_ONE = "g 0-valid xor 1-valid"
CASE_BOTH = "g 0-valid and 1-valid"


@dataclass
class WitnessRecord:
    purpose: str
    source: list
    target: str
    witness: ImplementationWitness | None
    verified: bool

    def to_json(self) -> dict:
        return {"purpose": self.purpose, "source": self.source, "target": self.target,
                "verified": self.verified,
                "witness": self.witness.to_json() if self.witness else None}


@dataclass
class ReductionCertificate:
    relation: str
    case_tag: str
    k: int
    target: str | None = None
    witnesses: list = field(default_factory=list)
    transforms: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    complete: bool = True

    def to_json(self) -> dict:
        return {
            "relation": self.relation,
            "case": self.case_tag,
            "k": self.k,
            "target": self.target,
            "complete": self.complete,
            "witnesses": [w.to_json() for w in self.witnesses],
            "transforms": list(self.transforms),
            "notes": list(self.notes),
        }


def _find(source: Sequence[Relation], target: Relation, bounds: SearchBounds):
    """Search with distinct arguments first, then allow repeated arguments."""
    res = search_implementation(source, target, bounds)
    if not res.found and not bounds.repeated_args:
        res = search_implementation(source, target, replace(bounds, repeated_args=True))
    return res.witness


def _factor_plan(k: int, transform: str) -> list:
    out = []
    fac = factorint(k)
    for p in sorted(fac):
        if p == 2:
            if fac[2] >= 2:
                out.append({"transform": transform, "factor": 2 ** fac[2],
                            "kind": "power of two"})
        else:
            out.append({"transform": transform, "factor": p, "kind": "odd prime"})
    return out


def _spot_check_doubling(S: Sequence[Relation], transform: str, seed: int = 0) -> bool:
    """Doubling property on a handful of small random formulas over S plus constants."""
    rng = random.Random(seed)
    consts = [F] if transform == "false_var_merge" else [T, F]
    pool = list(S) + consts
    fn = TRANSFORMS[transform]
    for trial in range(6):
        vs = [f"v{i}" for i in range(4)]
        apps = []
        for _ in range(rng.randint(1, 4)):
            r = rng.choice(pool)
            apps.append(ConstraintApplication(r, tuple(rng.choice(vs) for _ in range(r.arity))))
        f = Formula(tuple(vs), tuple(apps))
        if brute_force_count(fn(f)) != 2 * brute_force_count(f):
            return False
    return True


def _or_targets(allowed: Sequence[Relation], source, bounds, cert, purpose):
    for tgt in allowed:
        w = _find(source, tgt, bounds)
        if w is not None:
            cert.witnesses.append(WitnessRecord(purpose, [r.name for r in source],
                                                tgt.name, w, True))
            return tgt, w
    cert.witnesses.append(WitnessRecord(purpose, [r.name for r in source],
                                        "/".join(t.name for t in allowed), None, False))
    cert.complete = False
    return None, None


def _record(cert, purpose, source, target, w):
    cert.witnesses.append(WitnessRecord(purpose, [r.name for r in source], target.name,
                                        w, w is not None))
    if w is None:
        cert.complete = False


def _check_composition(cert, w_or, mapping, source_names):
    """Compose constant/XOR witnesses into the OR witness and re-verify it."""
    if w_or is None or any(v is None for v in mapping.values()):
        return
    composed = compose_witness(w_or, mapping)
    ok = bool(verify_faithful(composed, w_or.target))
    cert.witnesses.append(WitnessRecord("composed implementation", source_names,
                                        w_or.target.name, composed, ok))
    if not ok:
        cert.complete = False


def _certify_mixed(cert, S, g, bounds):
    names = [r.name for r in S]
    h = next((r for r in S if not is_c_closed(r) and is_0_valid(r) and is_1_valid(r)), None)
    if h is not None:
        cert.notes.append(f"{h.name} is 0-valid, 1-valid and not C-closed")
        w = _find([h], OR1, bounds)
        _record(cert, f"{h.name} implements OR1", [h], OR1, w)
        cert.target = "OR1"
        return
    const, allowed = (F, [OR1, OR2]) if not all(is_1_valid(r) for r in S) else (T, [OR0, OR1])
    cert.notes.append(f"S is not C-closed; {const.name} implemented from S")
    w_c = _find(S, const, bounds)
    _record(cert, f"S implements {const.name}", S, const, w_c)
    tgt, w_or = _or_targets(allowed, [g, const], bounds, cert,
                            f"g with {const.name} implements an OR")
    cert.target = tgt.name if tgt else None
    _check_composition(cert, w_or, {const.name: w_c}, names)


def build_reduction_certificate(S: Iterable[Relation], k: int,
                                bounds: SearchBounds | None = None) -> ReductionCertificate:
    """Evidence that #_k SAT(S) is hard: a reduction chain from OR0/OR1/OR2.

    A non-affine relation g is chosen and the case split on g's 0/1-validity
    and complement-closure determines which implementations are searched
    for and which doubling transforms are needed.
    """
    k = check_modulus(k)
    S = normalize_set(S)
    if decide(S, k) is not Outcome.HARD:
        raise ContractError("reduction certificate requested for a polynomial-time case")
    bounds = bounds or SearchBounds()
    g = next(r for r in S if not is_affine(r))
    names = [r.name for r in S]
    set_c_closed = all(is_c_closed(r) for r in S)
    z, o = is_0_valid(g), is_1_valid(g)

    if not z and not o:
        cert = ReductionCertificate(g.name, CASE_NEITHER, k)
        tgt, w_or = _or_targets([OR0, OR1, OR2], [g, F, T], bounds, cert,
                                "g with constants implements an OR")
        cert.target = tgt.name if tgt else None
        if not set_c_closed:
            w_t = _find(S, T, bounds)
            w_f = _find(S, F, bounds)
            _record(cert, "S implements T", S, T, w_t)
            _record(cert, "S implements F", S, F, w_f)
            _check_composition(cert, w_or, {"T": w_t, "F": w_f}, names)
        else:
            w_x = _find(S, XOR, bounds)
            _record(cert, "S implements XOR", S, XOR, w_x)
            plan = _factor_plan(k, "xor_doubling")
            if not _spot_check_doubling(S, "xor_doubling"):
                cert.complete = False
                cert.notes.append("xor_doubling spot check failed")
            cert.transforms += plan
    elif z != o:
        cert = ReductionCertificate(g.name, CASE_ONE, k)
        const, allowed = (F, [OR1, OR2]) if z else (T, [OR0, OR1])
        w_c = _find([g], const, bounds)
        _record(cert, f"g implements {const.name}", [g], const, w_c)
        tgt, w_or = _or_targets(allowed, [g, const], bounds, cert,
                                f"g with {const.name} implements an OR")
        cert.target = tgt.name if tgt else None
        _check_composition(cert, w_or, {const.name: w_c}, [g.name])
    else:
        cert = ReductionCertificate(g.name, CASE_BOTH, k)
        if not is_c_closed(g):
            w = _find([g], OR1, bounds)
            _record(cert, "g implements OR1", [g], OR1, w)
            cert.target = "OR1"
        elif set_c_closed:
            tgt, w_or = _or_targets([OR1, OR2], [g, F], bounds, cert,
                                    "g with F implements an OR")
            cert.target = tgt.name if tgt else None
            plan = _factor_plan(k, "false_var_merge")
            if not _spot_check_doubling(S, "false_var_merge"):
                cert.complete = False
                cert.notes.append("false_var_merge spot check failed")
            cert.transforms += plan
        else:
            # g is C-closed but another member of S is not
            _certify_mixed(cert, S, g, bounds)
    return cert
