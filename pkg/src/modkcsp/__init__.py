"""Counting solutions of Boolean constraint satisfaction problems modulo k."""

from .affine import count_affine, count_affine_mod
from .classifier import Outcome, affine_closure, classify, is_affine, is_c_closed
from .core import (BUILTINS, ConstraintApplication, Formula, Relation,
                   brute_force_count, count_mod, eval_formula)
from .graphs import Graph, count_is, count_is_mod, make_H, parity_gadget, prime_gadget
from .implementations import search_implementation, verify_faithful

__version__ = "0.1.0"
