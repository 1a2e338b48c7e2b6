"""Command-line interface: ``twospin <subcommand> [flags]``, JSON on stdout.

Exit codes: 0 ok, 1 verification failed, 2 parse error, 3 infeasible input,
4 non-convergence, 5 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys

from mpmath import mpf

from .core import (ConvergenceError, Graph, InfeasibleError, ParseError,
                   SpinParams, complete_graph, cycle_graph, format_scalar,
                   parse_scalar, path_graph, to_float)
from .gadgets import Evaluator, eval_R_of_lambda, example_pair, expr_from_json, expr_to_json

EXIT_OK, EXIT_VERIFY, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_CONVERGENCE, EXIT_INTERNAL = 0, 1, 2, 3, 4, 5


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _read_json(src: str):
    """A file path, "-" for stdin, or inline JSON."""
    try:
        if src == "-":
            text = sys.stdin.read()
        elif src.lstrip().startswith(("{", "[")):
            text = src
        else:
            with open(src, encoding="utf-8") as fh:
                text = fh.read()
        return json.loads(text)
    except OSError as exc:
        raise ParseError(f"cannot read {src!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {src!r}: {exc}") from exc


def _scalar(text):
    return parse_scalar(str(text))


def _params(args, need_delta=False) -> SpinParams:
    if need_delta and args.delta is None:
        raise ParseError("this subcommand needs --delta")
    return SpinParams(_scalar(args.beta), _scalar(args.gamma), _scalar(args.lam),
                      args.delta, args.precision)


def _gadget(args):
    if getattr(args, "example", None):
        return example_pair()[0 if args.example == "t1" else 1]
    if not args.gadget:
        raise ParseError("give --gadget SRC or --example t1|t2")
    return expr_from_json(_read_json(args.gadget))


def _builtin_graph(name: str) -> Graph:
    kind, _, arg = name.partition(":")
    kind = kind.lower()
    if kind.startswith("k") and kind[1:].isdigit():
        return complete_graph(int(kind[1:]))
    builders = {"complete": complete_graph, "path": path_graph, "cycle": cycle_graph}
    if kind not in builders or not arg.isdigit():
        raise ParseError(f"unknown builtin graph {name!r} (try K4, complete:N, path:N, cycle:N)")
    return builders[kind](int(arg))


def _graph(args, src_attr="graph", builtin_attr="builtin") -> Graph:
    src, builtin = getattr(args, src_attr, None), getattr(args, builtin_attr, None)
    if builtin:
        return _builtin_graph(builtin)
    if not src:
        raise ParseError(f"give --{src_attr} SRC or --{builtin_attr} NAME")
    data = _read_json(src)
    if "graph" in data and "n" not in data:
        data = data["graph"]
    return Graph.from_json(data)


def _pins(items):
    pins = {}
    for item in items or ():
        v, sep, s = item.partition("=")
        if not sep or not v.strip().isdigit() or s.strip() not in ("0", "1"):
            raise ParseError(f"pin must look like v=0 or v=1, got {item!r}")
        pins[int(v)] = int(s)
    return pins


# ------------------------------------------------------------------ subcommands

def cmd_eval(args):
    params = _params(args)
    expr = _gadget(args)
    if args.oracle:
        from .gadgets import eval_gadget_oracle
        ev = eval_gadget_oracle(expr, params, limit=args.budget)
    else:
        ev = Evaluator(params)(expr)
    out = {"R": format_scalar(ev.R), "M": format_scalar(ev.M)}
    if args.full:
        out.update({"Zin": format_scalar(ev.Zin), "Zout": format_scalar(ev.Zout),
                    "e_in": format_scalar(ev.e_in), "e_out": format_scalar(ev.e_out),
                    "size": ev.size, "max_degree": expr.max_degree})
    return out


def cmd_oracle(args):
    from . import oracle
    params = _params(args)
    g = _graph(args)
    pins = _pins(args.pin)
    limit = args.budget
    if args.stat == "Z":
        val = oracle.partition_function(g, params, pins=pins or None, jobs=args.jobs, limit=limit)
        return {"Z": format_scalar(val)}
    if args.stat == "magnetization":
        if pins:
            val = oracle.conditional_expectation(g, params, pins, "size", args.jobs, limit)
        else:
            val = oracle.magnetization(g, params, jobs=args.jobs, limit=limit)
        return {"magnetization": format_scalar(val)}
    if args.stat == "marginals":
        vals = oracle.marginals(g, params, pins=pins or None, jobs=args.jobs, limit=limit)
        return {"marginals": [format_scalar(v) for v in vals]}
    # conditional
    stat = "size" if args.indicator is None else ("indicator", args.indicator)
    val = oracle.conditional_expectation(g, params, pins, stat, args.jobs, limit)
    return {"conditional": format_scalar(val), "pins": {str(k): v for k, v in sorted(pins.items())}}


def cmd_fixpoint(args):
    from .fixpoints import (Verdict, in_nonuniqueness, in_star_region,
                            ode_fixpoint, two_cycle_fixpoints,
                            uniqueness_fixpoint)
    params = _params(args, need_delta=True)
    with params.context():
        fx = uniqueness_fixpoint(params)
        verdict = in_nonuniqueness(params)
        x_hat, w = ode_fixpoint(params)
        out = {"x_star": format_scalar(fx.x_star), "derivative_abs": format_scalar(fx.derivative_abs),
               "verdict": verdict.value, "merge_fixpoint": format_scalar(x_hat),
               "omega_star": format_scalar(w), "star_region": in_star_region(params)}
        if verdict is Verdict.YES:
            cyc = two_cycle_fixpoints(params)
            out.update({"two_cycle": [format_scalar(cyc.x), format_scalar(cyc.y)],
                        "q_minus": format_scalar(cyc.q_minus), "q_plus": format_scalar(cyc.q_plus)})
        return out


def cmd_critical(args):
    from .fixpoints import hardcore_lambda_c, ising_beta_c
    if args.delta is None:
        raise ParseError("critical needs --delta")
    if args.delta < 3:
        raise InfeasibleError("degree bound must be at least 3")
    return {"lambda_c": format_scalar(hardcore_lambda_c(args.delta)),
            "beta_c": format_scalar(ising_beta_c(args.delta))}


def _family(params):
    from .construct import contraction_data, dense_family
    fam = dense_family(params)
    return fam, contraction_data(params, fam)


def cmd_build(args):
    from .construct import build_gadget
    from .fixpoints import ode_fixpoint
    params = _params(args)
    fam, cd = _family(params)
    with fam.params.context():
        x = to_float(_scalar(args.x)) if args.x is not None else to_float(ode_fixpoint(params)[0])
        res = build_gadget(x, args.t, fam, cd)
        R = fam.evaluator.field(res.expr)
        return {"target": format_scalar(x), "R": format_scalar(R), "error": format_scalar(abs(R - x)),
                "choices": list(res.choices), "size": res.expr.size,
                "interval": cd.I.to_json(), "gadget": expr_to_json(res.expr)}


def cmd_find_pair(args):
    from .construct import find_pair
    params = _params(args)
    if args.shortcut:
        pairs = find_pair(params, _scalar(args.r), args.k, shortcut=True)
    else:
        fam, cd = _family(params)
        with fam.params.context():
            pairs = find_pair(params, to_float(_scalar(args.r)), args.k, family=fam, cdata=cd,
                              t_max=args.t_max)
    with params.context():
        return {"r": format_scalar(_scalar(args.r)),
                "pairs": [p.to_json(with_exprs=not args.no_exprs) for p in pairs]}


def cmd_crossing(args):
    from .construct import find_crossing_lambda
    if args.example:
        e1, e2 = example_pair()
    elif args.pair:
        data = _read_json(args.pair)
        if "pairs" in data:
            data = data["pairs"][args.index]
        try:
            e1, e2 = expr_from_json(data["expr1"]), expr_from_json(data["expr2"])
        except KeyError as exc:
            raise ParseError("pair JSON needs expr1 and expr2") from exc
    else:
        raise ParseError("give --pair SRC or --example")
    beta, gamma = _scalar(args.beta), _scalar(args.gamma)
    lam0 = _scalar(args.lambda0 if args.lambda0 is not None else args.lam)
    lam = find_crossing_lambda(e1, e2, beta, gamma, lam0, _scalar(args.eps),
                               precision=args.precision, delta=args.delta)
    r1, d1 = eval_R_of_lambda(e1, beta, gamma, lam, args.delta, args.precision)
    r2, d2 = eval_R_of_lambda(e2, beta, gamma, lam, args.delta, args.precision)
    params = SpinParams(beta, gamma, lam, args.delta, args.precision)
    with params.context():
        return {"lambda_hat": format_scalar(lam), "R1": format_scalar(r1), "R2": format_scalar(r2),
                "residual": format_scalar(abs(r1 - r2)),
                "dR1": format_scalar(d1), "dR2": format_scalar(d2)}


def cmd_reduce(args):
    from .reduction import (PhaseGadgetSpec, build_reduction,
                            complete_bipartite_gadget, reduction_problems)
    H = _graph(args, "H", "H_builtin") if args.H is None or args.H.lstrip()[:1] in "{[-" or \
        args.H.endswith(".json") else _builtin_graph(args.H)
    if args.complete_bipartite:
        n, ell = args.complete_bipartite
        G = complete_bipartite_gadget(n, ell)
    elif args.gadget_spec:
        G = PhaseGadgetSpec.from_json(_read_json(args.gadget_spec))
    else:
        raise ParseError("give --gadget-spec SRC or --complete-bipartite N ELL")
    if args.tree in ("t1", "t2"):
        T = example_pair()[0 if args.tree == "t1" else 1]
    else:
        T = expr_from_json(_read_json(args.tree))
    rg = build_reduction(H, G, T, args.k, degree=args.degree)
    delta = args.delta if args.delta is not None else G.delta
    problems = reduction_problems(rg, delta)
    if args.format == "edgelist":
        return rg.edge_list()
    out = rg.to_json()
    out["problems"] = problems
    out["max_degree"] = rg.graph.max_degree()
    return out


def cmd_verify(args):
    from . import acceptance
    try:
        names = acceptance.resolve(args.names)
    except KeyError as exc:
        raise ParseError(f"unknown criterion {exc.args[0]!r}") from exc
    results = acceptance.run(names, seed=args.seed)
    for r in results:
        print(r.line(), file=sys.stderr)
    return [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
            for r in results], all(r.passed for r in results)


# ------------------------------------------------------------------ parser

_DEFAULTS = {"beta": "1", "gamma": "0", "lam": "1", "delta": None, "precision": 256,
             "budget": 25, "jobs": 1, "seed": None}


def _common_flags() -> argparse.ArgumentParser:
    # defaults live on the top-level parser so flags work before or after the subcommand
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--beta", help="0-0 edge activity, p/q (default 1)")
    p.add_argument("--gamma", help="1-1 edge activity, p/q (default 0)")
    p.add_argument("--lambda", dest="lam", help="vertex field, p/q (default 1)")
    p.add_argument("--delta", type=int, help="degree bound")
    p.add_argument("--precision", type=int, help="bits for floating work (default 256)")
    p.add_argument("--budget", type=int, help="max vertices the brute-force oracle enumerates (default 25)")
    p.add_argument("--jobs", type=int, help="worker processes; output does not depend on it")
    p.add_argument("--seed", type=int, help="seed for randomized sweeps")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    # a separate copy: set_defaults would otherwise leak into the shared actions
    parser = argparse.ArgumentParser(prog="twospin", description=__doc__.splitlines()[0],
                                     parents=[_common_flags()])
    parser.set_defaults(**_DEFAULTS)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("eval", cmd_eval, "effective field R and magnetization gap M of a gadget")
    sp.add_argument("--gadget", default=None, help="gadget JSON: path, - for stdin, or inline")
    sp.add_argument("--example", choices=("t1", "t2"), default=None)
    sp.add_argument("--oracle", action="store_true", default=False, help="evaluate by enumeration")
    sp.add_argument("--full", action="store_true", default=False, help="also print weights and sizes")

    sp = add("oracle", cmd_oracle, "exact Gibbs statistics by enumeration")
    sp.add_argument("--graph", default=None, help="graph JSON: path, - or inline")
    sp.add_argument("--builtin", default=None, help="K4, complete:N, path:N or cycle:N")
    sp.add_argument("--stat", choices=("Z", "magnetization", "marginals", "conditional"), default="Z")
    sp.add_argument("--pin", action="append", default=None, help="v=s, repeatable")
    sp.add_argument("--indicator", type=int, default=None, help="conditional P(s(v)=1) instead of size")

    add("fixpoint", cmd_fixpoint, "tree fixpoint, merge fixpoint, uniqueness verdict, q+/q-")
    add("critical", cmd_critical, "hard-core lambda_c and Ising beta_c for --delta")

    sp = add("build", cmd_build, "steer a gadget's field toward x in t levels")
    sp.add_argument("--x", default=None, help="target field (default: the merge fixpoint)")
    sp.add_argument("--t", type=int, default=10)

    sp = add("find-pair", cmd_find_pair, "equal-field gadget pairs with distinct M")
    sp.add_argument("--r", default="1/10000")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--t-max", type=int, default=40)
    sp.add_argument("--shortcut", action="store_true", default=False,
                    help="use the known exact pair (hard-core, lambda = 1)")
    sp.add_argument("--no-exprs", action="store_true", default=False)

    sp = add("crossing", cmd_crossing, "lambda near lambda0 where a pair's fields agree")
    sp.add_argument("--pair", default=None, help="JSON with expr1/expr2 (or find-pair output)")
    sp.add_argument("--index", type=int, default=0, help="which pair of a find-pair output")
    sp.add_argument("--example", action="store_true", default=False)
    sp.add_argument("--lambda0", default=None, help="default: --lambda")
    sp.add_argument("--eps", default="1/100")

    sp = add("reduce", cmd_reduce, "composite graph for a Max-Cut instance")
    sp.add_argument("--H", default=None, help="K4, builtin name, or graph JSON")
    sp.add_argument("--H-builtin", dest="H_builtin", default=None, help=argparse.SUPPRESS)
    sp.add_argument("--gadget-spec", default=None, help="phase gadget JSON")
    sp.add_argument("--complete-bipartite", type=int, nargs=2, metavar=("N", "ELL"), default=None)
    sp.add_argument("--tree", default="t1", help="t1, t2 or gadget JSON")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--degree", type=int, default=3, help="required degree of H")
    sp.add_argument("--format", choices=("json", "edgelist"), default="json")

    sp = add("verify", cmd_verify, "run acceptance criteria by number or name")
    sp.add_argument("names", nargs="*")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_PARSE
    try:
        result = args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except Exception as exc:  # noqa: BLE001 - reported as an internal error
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    code = EXIT_OK
    if isinstance(result, tuple):
        result, ok = result
        code = EXIT_OK if ok else EXIT_VERIFY
    if isinstance(result, str):
        sys.stdout.write(result)
    else:
        print(_dump(result))
    return code


if __name__ == "__main__":
    sys.exit(main())
