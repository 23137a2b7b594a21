"""Command-line entry point.

Every subcommand prints a JSON report to stdout. Exit codes: 0 success,
1 implementation not found, 2 input error, 3 resource cap, 4 contract
violation (including a failed `verify`).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from sympy import factorint

from . import io
from .affine import count_affine, count_affine_mod
from .classifier import Outcome, classify, decide, is_affine, is_c_closed
from .core import brute_force_count, check_modulus, clause_signs
from .errors import ContractError, InputError, ModkError
from .graphs import (bipartite_to_or1_formula, count_is, count_is_mod,
                     graph_to_or2_formula, decomposition_count_mod, parity_gadget,
                     prime_gadget, recover_sat_count_mod_p)
from .implementations import (SearchBounds, build_reduction_certificate,
                              false_var_merge_transform, search_implementation,
                              xor_doubling_transform)

log = logging.getLogger("modkcsp")

NOT_FOUND = 1
MAX_VERIFY_PRIME = 13


class _Context:
    def __init__(self):
        self.inputs: dict = {}

    def read(self, path: str) -> str:
        try:
            data = Path(path).read_bytes()
        except OSError as e:
            raise InputError(f"cannot read {path}: {e.strerror}") from None
        self.inputs[path] = hashlib.sha256(data).hexdigest()
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError:
            raise InputError(f"{path} is not UTF-8") from None


def _relations(ctx, paths) -> dict:
    out = {}
    for p in paths or []:
        for r in io.parse_relation_file(ctx.read(p)):
            out[r.name] = r
    return out


def _load_formula(ctx, path, rel_paths, dimacs=False):
    text = ctx.read(path)
    if dimacs or io.looks_like_dimacs(text):
        return io.parse_dimacs(text)
    return io.parse_formula_file(text, _relations(ctx, rel_paths))


def _write(path, text):
    Path(path).write_text(text, encoding="utf-8")


def _bounds(args) -> SearchBounds:
    return SearchBounds(max_aux=args.max_aux, max_constraints=args.max_constraints,
                        repeated_args=getattr(args, "repeated_args", False))


# --- subcommands ------------------------------------------------------------

def cmd_classify(args, ctx):
    rels = io.parse_relation_file(ctx.read(args.relations))
    verdict = classify(rels, args.mod, certificate=not args.no_certificate,
                       bounds=_bounds(args))
    return verdict.to_json(), 0


def cmd_certify(args, ctx):
    rels = io.parse_relation_file(ctx.read(args.relations))
    cert = build_reduction_certificate(rels, args.mod, bounds=_bounds(args))
    return cert.to_json(), 0


def cmd_count(args, ctx):
    f = _load_formula(ctx, args.instance, args.relations, args.dimacs)
    engine = args.engine
    if engine == "auto":
        rels = list(f.relations.values())
        affine = not rels or decide(rels, args.mod or 2) is Outcome.FP_AFFINE
        engine = "affine" if affine else "brute"
    if engine == "affine":
        bad = [r.name for r in f.relations.values() if not is_affine(r)]
        if bad:
            raise InputError(f"affine engine refuses non-affine relation(s): {', '.join(bad)}")
        n = count_affine(f)
        residue = count_affine_mod(f, args.mod) if args.mod else None
    else:
        n = brute_force_count(f)
        residue = n % args.mod if args.mod else None
    out = {"engine": engine, "variables": len(f.variables),
           "constraints": len(f.constraints), "count": n}
    if args.mod:
        out["k"] = args.mod
        out["residue"] = residue
    return out, 0


def cmd_gadget(args, ctx):
    f = _load_formula(ctx, args.instance, None, dimacs=True)
    out = {"mode": args.mode}
    if args.mode == "parity":
        g, dec = parity_gadget(f)
        out["k"] = 2
    else:
        if args.p is None:
            raise InputError("--mode prime needs --p")
        res = prime_gadget(f, args.p)
        g, dec = res.graph, res.decomposition
        out.update(p=args.p, d=res.d, copy_count=res.copy_count,
                   bipartite=g.is_bipartite())
    out.update(vertices=len(g.vertices), edges=len(g.edges),
               x_set=sorted(dec.x_set, key=g.index.__getitem__),
               copies=[c.h for c in dec.copies])
    text = io.serialize_graph(g)
    if args.out:
        _write(args.out, text)
        out["edge_list_file"] = args.out
    else:
        out["edge_list"] = text
    if args.dot:
        _write(args.dot, io.emit_dot(g))
        out["dot_file"] = args.dot
    return out, 0


def cmd_reduce(args, ctx):
    kind = args.kind
    if kind in ("graph-or2", "bip-or1"):
        g = io.parse_graph(ctx.read(args.input))
        f = graph_to_or2_formula(g) if kind == "graph-or2" else bipartite_to_or1_formula(g)
    else:
        src = _load_formula(ctx, args.input, args.relations)
        f = xor_doubling_transform(src) if kind == "xor-doubling" else false_var_merge_transform(src)
    text = io.serialize_formula(f)
    out = {"kind": kind, "variables": len(f.variables), "constraints": len(f.constraints)}
    if args.out:
        _write(args.out, text)
        out["formula_file"] = args.out
    else:
        out["formula"] = text
    return out, 0


def cmd_implement(args, ctx):
    rels = io.parse_relation_file(ctx.read(args.relations))
    targets = io.parse_relation_file(ctx.read(args.target))
    if len(targets) != 1:
        raise InputError("target file must define exactly one relation")
    res = search_implementation(rels, targets[0], _bounds(args))
    out = {"target": targets[0].name, "found": res.found,
           "search_exhausted": res.exhausted, "nodes": res.nodes}
    if not res.found:
        out["result"] = "NOT_FOUND"
        return out, NOT_FOUND
    text = io.serialize_witness(res.witness)
    out["witness"] = res.witness.to_json()
    if args.out:
        _write(args.out, text)
        out["witness_file"] = args.out
    return out, 0


# --- verify -----------------------------------------------------------------

def _is_cnf(f) -> bool:
    return all(clause_signs(c.relation) is not None for c in f.constraints)


def cross_checks(f, k: int) -> list:
    """(name, expected, observed) for every congruence check applicable to f."""
    checks = []
    exact = brute_force_count(f)
    rels = list(f.relations.values())
    if all(is_affine(r) for r in rels):
        checks.append(("affine_engine", exact, count_affine(f)))
        checks.append(("affine_engine_mod", exact % k, count_affine_mod(f, k)))
    if rels and all(is_c_closed(r) for r in rels):
        checks.append(("c_closed_parity", 0, exact % 2))
    if _is_cnf(f):
        g, dec = parity_gadget(f)
        checks.append(("parity_gadget", exact % 2, count_is_mod(g, 2)))
        checks.append(("decomposition_parity", count_is_mod(g, 2), decomposition_count_mod(g, dec, 2)))
        if len(g.vertices) <= 20:
            checks.append(("graph_to_or2", count_is(g), brute_force_count(graph_to_or2_formula(g))))
        for p in sorted(factorint(k)):
            if p > MAX_VERIFY_PRIME:
                continue
            out = prime_gadget(f, p)
            residue = count_is_mod(out.graph, p)
            checks.append((f"prime_gadget_{p}", exact % p,
                           recover_sat_count_mod_p(out, residue)))
    return checks


def _failing(f, k):
    return [c for c in cross_checks(f, k) if c[1] != c[2]]


def minimize_counterexample(f, k):
    """Greedily drop constraints, then unused variables, while some check still fails."""
    from .core import Formula
    current = f
    changed = True
    while changed:
        changed = False
        for i in range(len(current.constraints)):
            cand = Formula(current.variables,
                           current.constraints[:i] + current.constraints[i + 1:])
            if _failing(cand, k):
                current = cand
                changed = True
                break
    used = current.constrained_variables
    for v in current.variables:
        if v in used:
            continue
        cand = Formula(tuple(x for x in current.variables if x != v), current.constraints)
        if _failing(cand, k):
            current = cand
    return current


def cmd_verify(args, ctx):
    f = _load_formula(ctx, args.instance, args.relations)
    k = args.mod
    checks = cross_checks(f, k)
    results = [{"check": n, "expected": e, "observed": o, "ok": e == o} for n, e, o in checks]
    out = {"k": k, "checks": results, "ok": all(r["ok"] for r in results)}
    if out["ok"]:
        return out, 0
    small = minimize_counterexample(f, k)
    text = io.serialize_dimacs(small) if _is_cnf(small) else io.serialize_formula(small)
    target = Path(args.counterexample_dir or ".")
    target.mkdir(parents=True, exist_ok=True)
    digest = hashlib.sha256(text.encode()).hexdigest()[:12]
    path = target / f"counterexample_{digest}.{'cnf' if _is_cnf(small) else 'txt'}"
    path.write_text(text, encoding="utf-8")
    out["counterexample_file"] = str(path)
    return out, ContractError.exit_code


# --- parser -----------------------------------------------------------------

def _modulus(s: str) -> int:
    try:
        k = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"modulus must be an integer, got {s!r}") from None
    try:
        return check_modulus(k)
    except InputError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _search_flags(p):
    p.add_argument("--max-aux", type=int, default=3)
    p.add_argument("--max-constraints", type=int, default=5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modkcsp",
                                     description="Counting Boolean CSP solutions modulo k.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="dichotomy verdict for a relation set")
    p.add_argument("relations")
    p.add_argument("--mod", type=_modulus, required=True)
    p.add_argument("--no-certificate", action="store_true")
    _search_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("count", help="count satisfying assignments")
    p.add_argument("instance")
    p.add_argument("--relations", action="append")
    p.add_argument("--dimacs", action="store_true")
    p.add_argument("--mod", type=_modulus)
    p.add_argument("--engine", choices=("brute", "affine", "auto"), default="auto")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("gadget", help="CNF -> independent-set gadget graph")
    p.add_argument("instance")
    p.add_argument("--mode", choices=("parity", "prime"), default="parity")
    p.add_argument("--p", type=int)
    p.add_argument("--out")
    p.add_argument("--dot")
    p.set_defaults(func=cmd_gadget)

    p = sub.add_parser("reduce", help="graph->formula and doubling transforms")
    p.add_argument("input")
    p.add_argument("--kind", required=True,
                   choices=("graph-or2", "bip-or1", "xor-doubling", "false-merge"))
    p.add_argument("--relations", action="append")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("implement", help="search for a faithful implementation")
    p.add_argument("relations")
    p.add_argument("target")
    _search_flags(p)
    p.add_argument("--repeated-args", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_implement)

    p = sub.add_parser("certify", help="reduction certificate for a hard relation set")
    p.add_argument("relations")
    p.add_argument("--mod", type=_modulus, required=True)
    _search_flags(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify", help="cross-check all applicable counting routes")
    p.add_argument("instance")
    p.add_argument("--mod", type=_modulus, required=True)
    p.add_argument("--relations", action="append")
    p.add_argument("--counterexample-dir")
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv=None):
    """Execute a command; returns (report dict, exit code)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return {"command": argv, "error": "usage"}, (InputError.exit_code if e.code else 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    ctx = _Context()
    start = time.perf_counter()
    report = {"command": argv}
    try:
        outputs, code = args.func(args, ctx)
        report["outputs"] = outputs
    except ModkError as e:
        report["error"] = {"type": type(e).__name__, "message": str(e)}
        code = e.exit_code
    except RecursionError:
        report["error"] = {"type": "ResourceError", "message": "recursion limit reached"}
        code = 3
    report["inputs"] = ctx.inputs
    report["timing_seconds"] = round(time.perf_counter() - start, 6)
    return report, code


def main(argv=None) -> int:
    report, code = run(argv)
    if "error" in report and isinstance(report["error"], dict):
        print(f"error: {report['error']['message']}", file=sys.stderr)
    if report.get("error") != "usage":
        print(json.dumps(report, indent=2, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
