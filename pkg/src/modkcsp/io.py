"""Plain-text instance formats: relation files, formula files, DIMACS CNF,
graph edge lists and DOT output."""

from __future__ import annotations

import re
from typing import Iterable, Mapping, Sequence

from .core import (BUILTINS, ConstraintApplication, Formula, Relation,
                   bits_to_str, clause_relation, clause_signs)
from .errors import InputError
from .graphs import Graph

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
APPLICATION = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*\Z")


class ParseError(InputError):
    def __init__(self, msg: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {msg}")
        self.line = line
        self.column = column


def _lines(text: str):
    """(line number, column of first non-blank char, stripped content) for non-blank lines."""
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        stripped = body.strip()
        if stripped:
            yield no, len(body) - len(body.lstrip()) + 1, stripped


# --- relations --------------------------------------------------------------

def _read_relation_block(header, it):
    no, col, line = header
    parts = line.split()
    if len(parts) != 3 or parts[0] != "relation":
        raise ParseError("expected 'relation NAME ARITY'", no, col)
    name, arity_s = parts[1], parts[2]
    if not IDENT.match(name):
        raise ParseError(f"bad relation name {name!r}", no, col + line.index(name))
    try:
        arity = int(arity_s)
    except ValueError:
        raise ParseError(f"arity {arity_s!r} is not an integer", no,
                         col + line.rindex(arity_s)) from None
    if arity < 1:
        raise ParseError("arity must be >= 1", no, col + line.rindex(arity_s))
    tuples = []
    for no, col, line in it:
        if line == "end":
            return Relation(name, arity, frozenset(tuples))
        if any(c not in "01" for c in line):
            raise ParseError(f"tuple {line!r} is not a bitstring", no, col)
        if len(line) != arity:
            raise ParseError(f"arity mismatch: tuple {line!r} has length {len(line)}, "
                             f"relation {name} has arity {arity}", no, col)
        t = tuple(int(c) for c in line)
        if t in tuples:
            raise ParseError(f"duplicate tuple {line} in relation {name}", no, col)
        tuples.append(t)
    raise ParseError(f"relation {name} is missing 'end'", header[0], header[1])


def parse_relation_file(text: str) -> list:
    rels = []
    names = set()
    it = iter(_lines(text))
    for entry in it:
        rel = _read_relation_block(entry, it)
        if rel.name in names:
            raise ParseError(f"relation {rel.name} defined twice", entry[0], entry[1])
        names.add(rel.name)
        rels.append(rel)
    return rels


def serialize_relation(r: Relation) -> str:
    body = "".join(bits_to_str(t) + "\n" for t in r.sorted_tuples())
    return f"relation {r.name} {r.arity}\n{body}end\n"


def serialize_relations(rels: Iterable[Relation]) -> str:
    return "".join(serialize_relation(r) for r in rels)


# --- formulas and witnesses -------------------------------------------------

def _parse_instance(text: str, relations: Mapping[str, Relation] | None):
    env = dict(BUILTINS)
    env.update(relations or {})
    local: dict = {}
    variables = None
    function_vars = None
    apps = []
    it = iter(_lines(text))
    for no, col, line in it:
        head = line.split(None, 1)[0]
        if head == "relation":
            rel = _read_relation_block((no, col, line), it)
            if rel.name in local:
                raise ParseError(f"relation {rel.name} defined twice", no, col)
            local[rel.name] = rel
            continue
        if head in ("vars", "function"):
            names = line.split()[1:]
            for v in names:
                if not IDENT.match(v):
                    raise ParseError(f"bad variable name {v!r}", no, col + line.index(v))
            if head == "vars":
                if variables is not None:
                    raise ParseError("second 'vars' line", no, col)
                variables = names
            else:
                function_vars = names
            continue
        m = APPLICATION.match(line)
        if not m:
            raise ParseError(f"cannot parse {line!r}", no, col)
        name = m.group(1)
        rel = local.get(name) or env.get(name)
        if rel is None:
            raise ParseError(f"unknown relation {name}", no, col)
        args = tuple(a.strip() for a in m.group(2).split(",")) if m.group(2).strip() else ()
        if variables is None:
            raise ParseError("constraint before 'vars' line", no, col)
        for a in args:
            if a not in variables:
                raise ParseError(f"undeclared variable {a!r}", no, col + line.index("("))
        if len(args) != rel.arity:
            raise ParseError(f"{name} has arity {rel.arity}, got {len(args)} argument(s)",
                             no, col)
        apps.append(ConstraintApplication(rel, args))
    if variables is None:
        raise ParseError("missing 'vars' line", 1, 1)
    return Formula(tuple(variables), tuple(apps)), function_vars, local


def parse_formula_file(text: str, relations: Mapping[str, Relation] | None = None) -> Formula:
    """Parse `vars ...` plus one `NAME(args)` per line.

    Relations resolve against inline `relation` blocks, then `relations`,
    then the built-ins.
    """
    return _parse_instance(text, relations)[0]


def serialize_formula(f: Formula) -> str:
    out = []
    for name, rel in f.relations.items():
        if BUILTINS.get(name) != rel:
            out.append(serialize_relation(rel))
    out.append("vars " + " ".join(f.variables) + "\n" if f.variables else "vars\n")
    out += [f"{c}\n" for c in f.constraints]
    return "".join(out)


def parse_witness(text: str, relations: Mapping[str, Relation] | None = None):
    from .implementations import ImplementationWitness
    f, function_vars, _ = _parse_instance(text, relations)
    if function_vars is None:
        raise ParseError("witness needs a 'function' line", 1, 1)
    unknown = [v for v in function_vars if v not in f.variables]
    if unknown:
        raise InputError(f"function variables not declared: {unknown}")
    aux = tuple(v for v in f.variables if v not in function_vars)
    return ImplementationWitness(tuple(function_vars), aux, f.constraints)


def serialize_witness(w) -> str:
    head = f"# implements {w.target.name}\n" if w.target is not None else ""
    f = w.as_formula()
    return head + "function " + " ".join(w.function_vars) + "\n" + serialize_formula(f)


# --- DIMACS -----------------------------------------------------------------

def parse_dimacs(text: str) -> Formula:
    """DIMACS CNF; each clause must sit on one line terminated by 0."""
    n = m = None
    clauses = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if n is not None:
                raise ParseError("second problem line", no)
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError("malformed header, expected 'p cnf VARS CLAUSES'", no)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError("header counts must be integers", no) from None
            if n < 0 or m < 0:
                raise ParseError("header counts must be non-negative", no)
            continue
        if n is None:
            raise ParseError("clause before 'p cnf' header", no)
        try:
            lits = [int(tok) for tok in line.split()]
        except ValueError:
            raise ParseError(f"non-integer literal in {line!r}", no) from None
        if lits[-1] != 0:
            raise ParseError("clause line must end with 0", no, len(raw.rstrip()))
        if 0 in lits[:-1]:
            raise ParseError("0 inside a clause; one clause per line", no)
        body = lits[:-1]
        if not body:
            raise ParseError("empty clause", no)
        for lit in body:
            if abs(lit) > n:
                raise ParseError(f"literal {lit} exceeds declared {n} variables", no)
        clauses.append(body)
    if n is None:
        raise ParseError("missing 'p cnf' header", 1)
    if len(clauses) != m:
        raise InputError(f"header declares {m} clauses, found {len(clauses)}")
    variables = tuple(f"x{i}" for i in range(1, n + 1))
    apps = [ConstraintApplication(clause_relation([lit > 0 for lit in body]),
                                  tuple(f"x{abs(lit)}" for lit in body))
            for body in clauses]
    return Formula(variables, tuple(apps))


def serialize_dimacs(f: Formula) -> str:
    idx = {v: i for i, v in enumerate(f.variables, 1)}
    lines = [f"p cnf {len(f.variables)} {len(f.constraints)}"]
    for c in f.constraints:
        signs = clause_signs(c.relation)
        if signs is None:
            raise InputError(f"{c.relation.name} is not a clause; cannot write DIMACS")
        lits = [str(idx[v] if s else -idx[v]) for v, s in zip(c.args, signs)]
        lines.append(" ".join(lits + ["0"]))
    return "\n".join(lines) + "\n"


def looks_like_dimacs(text: str) -> bool:
    for line in text.splitlines():
        s = line.strip()
        if not s or s.startswith("c"):
            continue
        return s.startswith("p ")
    return False


def parse_instance_text(text: str, relations=None) -> Formula:
    return parse_dimacs(text) if looks_like_dimacs(text) else parse_formula_file(text, relations)


# --- graphs -----------------------------------------------------------------

def serialize_graph(g: Graph) -> str:
    lines = ["vertices " + " ".join(g.vertices) if g.vertices else "vertices"]
    lines += [f"{u} {v}" for u, v in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    vertices = None
    edges = []
    for no, col, line in _lines(text):
        parts = line.split()
        if parts[0] == "vertices":
            if vertices is not None:
                raise ParseError("second 'vertices' line", no, col)
            vertices = parts[1:]
            continue
        if vertices is None:
            raise ParseError("edge before 'vertices' line", no, col)
        if len(parts) != 2:
            raise ParseError("an edge line holds exactly two vertices", no, col)
        edges.append((parts[0], parts[1]))
    if vertices is None:
        raise ParseError("missing 'vertices' line", 1, 1)
    return Graph.from_edges(vertices, edges)


def _dot_id(v: str) -> str:
    return v if IDENT.match(v) else '"' + v.replace('"', '\\"') + '"'


def emit_dot(g: Graph, labels: Mapping[str, str] | None = None, name: str = "G") -> str:
    """Undirected DOT text; output depends only on vertex order and edges."""
    lines = [f"graph {name} {{"]
    for v in g.vertices:
        if labels and v in labels:
            lab = labels[v].replace('"', '\\"')
            lines.append(f'  {_dot_id(v)} [label="{lab}"];')
        else:
            lines.append(f"  {_dot_id(v)};")
    for u, v in g.sorted_edges():
        lines.append(f"  {_dot_id(u)} -- {_dot_id(v)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
