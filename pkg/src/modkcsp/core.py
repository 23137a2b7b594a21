"""Boolean relations, constraint formulas and the brute-force counting oracle.

Everything here is deliberately naive: these routines are the ground truth
that the affine engine, the graph gadgets and the implementation search are
checked against.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import InputError, ResourceError

Bits = tuple  # tuple[int, ...] of 0/1

DEFAULT_ENUM_CAP = 26
ENUM_CAP_ENV = "MODKCSP_ENUM_CAP"


def enum_cap(cap: int | None = None) -> int:
    if cap is not None:
        return cap
    raw = os.environ.get(ENUM_CAP_ENV)
    if raw is None:
        return DEFAULT_ENUM_CAP
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{ENUM_CAP_ENV} must be an integer, got {raw!r}") from None


def check_modulus(k) -> int:
    """Validate a counting modulus; k must be an integer >= 2."""
    if isinstance(k, bool) or not isinstance(k, int):
        raise InputError(f"modulus must be an integer, got {k!r}")
    if k < 2:
        raise InputError(f"modulus must be >= 2, got {k}")
    return k


def _as_bits(t, arity: int | None = None) -> Bits:
    if isinstance(t, str):
        if any(c not in "01" for c in t):
            raise InputError(f"tuple {t!r} is not a bitstring")
        out = tuple(int(c) for c in t)
    else:
        out = tuple(int(v) for v in t)
        if any(v not in (0, 1) for v in out):
            raise InputError(f"tuple {t!r} has non-Boolean entries")
    if arity is not None and len(out) != arity:
        raise InputError(f"tuple {t!r} has length {len(out)}, expected arity {arity}")
    return out


def bits_to_str(t: Bits) -> str:
    return "".join(str(b) for b in t)


def bits_to_int(t: Bits) -> int:
    """Pack a tuple into an int; coordinate j becomes bit j."""
    v = 0
    for j, b in enumerate(t):
        if b:
            v |= 1 << j
    return v


def int_to_bits(v: int, arity: int) -> Bits:
    return tuple((v >> j) & 1 for j in range(arity))


@dataclass(frozen=True)
class Relation:
    """An r-ary Boolean relation given by its satisfying tuples."""

    name: str
    arity: int
    satisfying: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not isinstance(self.arity, int) or self.arity < 1:
            raise InputError(f"relation {self.name}: arity must be >= 1, got {self.arity!r}")
        tuples = [_as_bits(t, self.arity) for t in self.satisfying]
        object.__setattr__(self, "satisfying", frozenset(tuples))

    @classmethod
    def from_tuples(cls, name: str, arity: int, tuples: Iterable) -> "Relation":
        seen = []
        for t in tuples:
            b = _as_bits(t, arity)
            if b in seen:
                raise InputError(f"relation {name}: duplicate tuple {bits_to_str(b)}")
            seen.append(b)
        return cls(name, arity, frozenset(seen))

    def __contains__(self, t) -> bool:
        return tuple(t) in self.satisfying

    def sorted_tuples(self) -> list:
        return sorted(self.satisfying)

    def renamed(self, name: str) -> "Relation":
        return Relation(name, self.arity, self.satisfying)

    def permuted(self, perm: Sequence[int]) -> "Relation":
        """Relation whose coordinate j is coordinate perm[j] of this one."""
        return Relation(self.name, self.arity,
                        frozenset(tuple(t[p] for p in perm) for t in self.satisfying))

    def __repr__(self):
        body = ",".join(bits_to_str(t) for t in self.sorted_tuples())
        return f"Relation({self.name}, {self.arity}, {{{body}}})"


def clause_relation(signs: Sequence[bool]) -> Relation:
    """The w-ary clause relation; signs[j] is True for a positive literal.

    The only excluded tuple is the one falsifying every literal.
    """
    w = len(signs)
    if w == 0:
        raise InputError("empty clause")
    name = "CL_" + "".join("p" if s else "n" for s in signs)
    falsifier = tuple(0 if s else 1 for s in signs)
    sat = frozenset(t for t in itertools.product((0, 1), repeat=w) if t != falsifier)
    return Relation(name, w, sat)


def clause_signs(r: Relation):
    """Literal polarities if r is a clause relation (exactly one excluded tuple), else None."""
    if len(r.satisfying) != 2 ** r.arity - 1:
        return None
    (missing,) = set(itertools.product((0, 1), repeat=r.arity)) - r.satisfying
    return tuple(b == 0 for b in missing)


def _rel(name, arity, *tuples):
    return Relation.from_tuples(name, arity, tuples)


OR0 = _rel("OR0", 2, "01", "10", "11")
OR1 = _rel("OR1", 2, "00", "01", "11")
OR2 = _rel("OR2", 2, "00", "01", "10")
T = _rel("T", 1, "1")
F = _rel("F", 1, "0")
XOR = _rel("XOR", 2, "01", "10")
NAE3 = _rel("NAE3", 3, "001", "010", "100", "110", "101", "011")
EVEN3 = _rel("EVEN3", 3, "000", "011", "101", "110")
ONE_IN_THREE = _rel("ONEINTHREE", 3, "100", "010", "001")

BUILTINS: dict = {r.name: r for r in (OR0, OR1, OR2, T, F, XOR, NAE3)}
# not preloaded by name in files, but handy in code and tests
EXTRAS: dict = {r.name: r for r in (EVEN3, ONE_IN_THREE)}


@dataclass(frozen=True)
class ConstraintApplication:
    relation: Relation
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) != self.relation.arity:
            raise InputError(
                f"{self.relation.name} has arity {self.relation.arity} "
                f"but was applied to {len(self.args)} argument(s)")

    def holds(self, a: Mapping) -> bool:
        return tuple(a[v] for v in self.args) in self.relation.satisfying

    def __str__(self):
        return f"{self.relation.name}({','.join(self.args)})"


@dataclass(frozen=True)
class Formula:
    """A conjunction of constraint applications over declared variables."""

    variables: tuple
    constraints: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(set(self.variables)) != len(self.variables):
            raise InputError("duplicate variable in declaration")
        declared = set(self.variables)
        names: dict = {}
        for c in self.constraints:
            for v in c.args:
                if v not in declared:
                    raise InputError(f"variable {v!r} in {c} is not declared")
            prev = names.setdefault(c.relation.name, c.relation)
            if prev != c.relation:
                raise InputError(f"two different relations named {c.relation.name}")

    @property
    def relations(self) -> dict:
        out: dict = {}
        for c in self.constraints:
            out.setdefault(c.relation.name, c.relation)
        return out

    @property
    def constrained_variables(self) -> set:
        return {v for c in self.constraints for v in c.args}

    def __str__(self):
        return " & ".join(str(c) for c in self.constraints) or "TRUE"


def formula(variables: Iterable, *constraints) -> Formula:
    """Shorthand: formula(["x","y"], (XOR, "x", "y"), ...)."""
    apps = []
    for c in constraints:
        if isinstance(c, ConstraintApplication):
            apps.append(c)
        else:
            rel, *args = c
            apps.append(ConstraintApplication(rel, tuple(args)))
    return Formula(tuple(variables), tuple(apps))


def eval_formula(f: Formula, a: Mapping) -> bool:
    for c in f.constraints:
        for v in c.args:
            if v not in a:
                raise InputError(f"variable {v!r} is unbound")
    return all(c.holds(a) for c in f.constraints)


def _plan(variables: Sequence, constraints: Sequence):
    """Group constraints by the depth at which their last argument is bound."""
    pos = {v: i for i, v in enumerate(variables)}
    checks = [[] for _ in variables]
    ground = []
    for c in constraints:
        idx = [pos[v] for v in c.args if v in pos]
        if idx:
            checks[max(idx)].append(c)
        else:
            ground.append(c)
    return checks, ground


def _check_cap(n: int, cap: int | None):
    cap = enum_cap(cap)
    if n > cap:
        raise ResourceError(f"{n} variables exceed the enumeration cap of {cap} "
                            f"(set {ENUM_CAP_ENV} to raise it)", cap=cap)


def satisfying_assignments(f: Formula, cap: int | None = None) -> Iterator[dict]:
    """Yield satisfying assignments in lexicographic order of the declared variables."""
    _check_cap(len(f.variables), cap)
    variables = f.variables
    checks, _ = _plan(variables, f.constraints)
    a: dict = {}

    def rec(i):
        if i == len(variables):
            yield dict(a)
            return
        for b in (0, 1):
            a[variables[i]] = b
            if all(c.holds(a) for c in checks[i]):
                yield from rec(i + 1)
        del a[variables[i]]

    yield from rec(0)


def _count_dfs(variables: Sequence, constraints: Sequence, fixed: Mapping) -> int:
    checks, _ = _plan(variables, constraints)
    a = dict(fixed)
    n = len(variables)

    def rec(i):
        if i == n:
            return 1
        total = 0
        v = variables[i]
        for b in (0, 1):
            a[v] = b
            if all(c.holds(a) for c in checks[i]):
                total += rec(i + 1)
        del a[v]
        return total

    return rec(0)


def brute_force_count(f: Formula, cap: int | None = None) -> int:
    """Exact number of satisfying assignments by exhaustive search.

    Variables that occur in no constraint are not enumerated; each one
    contributes a factor of two.
    """
    _check_cap(len(f.variables), cap)
    used = f.constrained_variables
    order = [v for v in f.variables if v in used]
    free = len(f.variables) - len(order)
    return _count_dfs(order, f.constraints, {}) << free


def count_extensions(constraints: Sequence, fixed: Mapping, free_vars: Sequence) -> int:
    """Number of assignments to free_vars that, together with fixed, satisfy all constraints."""
    missing = {v for c in constraints for v in c.args} - set(fixed) - set(free_vars)
    if missing:
        raise InputError(f"unbound variable(s): {sorted(missing)}")
    active = [v for v in free_vars if any(v in c.args for c in constraints)]
    unused = len(free_vars) - len(active)
    # constraints over fixed variables only are checked up front
    ground = [c for c in constraints if all(v in fixed for v in c.args)]
    if not all(c.holds(fixed) for c in ground):
        return 0
    rest = [c for c in constraints if c not in ground]
    if not active:
        return 1 << unused
    return _count_dfs(active, rest, fixed) << unused


def count_mod(f: Formula, k: int, cap: int | None = None) -> int:
    k = check_modulus(k)
    return brute_force_count(f, cap) % k
