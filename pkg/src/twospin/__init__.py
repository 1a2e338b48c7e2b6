"""Exact and certified computations for antiferromagnetic 2-spin systems.

Gadget recursions, a brute-force Gibbs oracle, tree fixpoints, gadget-pair
construction and the Max-Cut reduction composite.
"""
from .core import (BudgetExceeded, ConvergenceError, Graph, InfeasibleError,
                   ParseError, SpinParams, TwoSpinError, complete_graph,
                   cycle_graph, format_scalar, parse_scalar, path_graph)
from .fixpoints import (Verdict, hardcore_lambda_c, in_nonuniqueness,
                        ising_beta_c, ode_fixpoint, two_cycle_fixpoints,
                        uniqueness_fixpoint)
from .gadgets import (DEGENERATE, TRIANGLE, GadgetEval, GadgetExpr, Merge,
                      eval_gadget, eval_gadget_oracle, eval_R_of_lambda,
                      example_pair, omega)
from .oracle import (conditional_expectation, magnetization, marginals,
                     partition_function)

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "ConvergenceError", "DEGENERATE", "GadgetEval", "GadgetExpr",
    "Graph", "InfeasibleError", "Merge", "ParseError", "SpinParams", "TRIANGLE",
    "TwoSpinError", "Verdict", "complete_graph", "conditional_expectation",
    "cycle_graph", "eval_R_of_lambda", "eval_gadget", "eval_gadget_oracle",
    "example_pair", "format_scalar", "hardcore_lambda_c", "in_nonuniqueness",
    "ising_beta_c", "magnetization", "marginals", "ode_fixpoint", "omega",
    "parse_scalar", "partition_function", "path_graph", "two_cycle_fixpoints",
    "uniqueness_fixpoint",
]
