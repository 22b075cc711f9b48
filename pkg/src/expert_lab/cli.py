"""Command-line interface: ``expert-lab <verb> [options]``.

Output is JSON on stdout (``--format csv`` for tables). Exit codes: 0 on
success, 1 when ``verify`` finds a failing check, 2 on invalid input, 3 on
numeric or budget failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import discrete_game as dg
from . import pde_check as pc
from . import simulator as sim
from . import verification
from .core import ExpertSubset
from .errors import BudgetError, DomainError, NumericError
from .value3 import gradient3, value3
from .value4 import QuadratureConfig, dt_value4, gradient4, hessian4, value4

VERBS = ("eval", "grad", "hess", "residual", "terminal", "laplace", "ratio", "dp",
         "sandwich", "simulate", "sde", "verify")
TERMINAL_KAPPAS = (1e-1, 1e-2, 1e-3, 1e-5)
LAPLACE_LAMBDAS = (0.5, 1.0, 2.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _float(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        if "0x" in s.lower():
            try:
                return float.fromhex(s)
            except ValueError:
                pass
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None


def _floats(s: str) -> list:
    return [_float(v) for v in s.split(",") if v.strip()]


def _ints(s: str) -> list:
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--n", type=int, choices=(2, 3, 4), default=4, help="number of experts")
    shared.add_argument("--t", type=_float, default=0.0, help="current time")
    shared.add_argument("--T", type=_float, default=1.0, help="horizon")
    shared.add_argument("--x", type=_floats, default=None, help="state, comma separated")
    shared.add_argument("--tol", type=_float, default=1e-7, help="argmax tolerance for residuals")
    shared.add_argument("--seed", type=int, default=0)
    shared.add_argument("--paths", type=int, default=None)
    shared.add_argument("--steps", type=int, default=None)
    shared.add_argument("--M", type=int, default=None, help="number of rounds")
    shared.add_argument("--Ms", type=_ints, default=None, help="list of round counts")
    shared.add_argument("--player", default="probability-matching",
                        help=f"one of {sim.PLAYERS}; multiplicative-weights:ETA sets eta")
    shared.add_argument("--adversary", default="balanced-comb",
                        help=f"one of {sim.ADVERSARIES}; fixed-subset:i,j lists 0-based experts")
    shared.add_argument("--format", choices=("json", "csv"), default="json")
    shared.add_argument("--precision", choices=("short", "full"), default="short",
                        help="full prints hex floats")
    shared.add_argument("--quad-nodes", type=int, default=None, help="Gauss-Legendre nodes per panel")
    shared.add_argument("--quad-rtol", type=_float, default=None, help="series truncation tolerance")
    shared.add_argument("--threads", type=int, default=None,
                        help="worker cap (default from EXPERT_LAB_THREADS)")
    p = _Parser(prog="expert-lab", description="Explicit solutions of the expert-prediction game.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    helps = {
        "eval": "finite-horizon value", "grad": "gradient in x", "hess": "Hessian in x (N=4)",
        "residual": "PDE residuals over all subsets (N=4)",
        "terminal": "gap to the payoff as t approaches T (N=4)",
        "laplace": "Laplace transform in T against the geometric value (N=4)",
        "ratio": "finite over geometric value at the origin",
        "dp": "exact minimax value of the discrete game",
        "sandwich": "lower/exact/upper discrete values", "simulate": "Monte Carlo game",
        "sde": "Euler-Maruyama Feynman-Kac estimate", "verify": "run the acceptance checks",
    }
    for verb in VERBS:
        sp = sub.add_parser(verb, parents=[shared], help=helps[verb])
        if verb == "verify":
            sp.add_argument("--quick", action="store_true", help="reduced sample sizes")
    return p


def _num(v, full: bool):
    if v is None:
        return None
    v = float(v)
    if full:
        return v.hex()
    return float(f"{v:.10g}")


def _conv(obj, full: bool):
    if isinstance(obj, dict):
        return {k: _conv(v, full) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_conv(v, full) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj, full)
    return obj


def _quad(args) -> QuadratureConfig:
    kw = {}
    if args.quad_nodes is not None:
        kw["nodes_per_panel"] = args.quad_nodes
    if args.quad_rtol is not None:
        kw["rel_tol"] = args.quad_rtol
    return QuadratureConfig(**kw)


def _state(args, default_zero: bool = False) -> np.ndarray:
    if args.x is None:
        if default_zero:
            return np.zeros(args.n)
        raise DomainError("--x is required")
    if len(args.x) != args.n:
        raise DomainError(f"--x has {len(args.x)} entries but --n is {args.n}")
    return np.asarray(args.x, dtype=float)


def _need4(args, verb):
    if args.n != 4:
        raise DomainError(f"{verb} is available for --n 4 only")


def _player(text: str) -> sim.PlayerStrategy:
    kind, _, arg = text.partition(":")
    eta = None
    if arg:
        if kind != "multiplicative-weights":
            raise DomainError(f"player {kind!r} takes no parameter")
        eta = _float(arg)
    return sim.PlayerStrategy(kind, eta)


def _adversary(text: str) -> sim.AdversaryStrategy:
    kind, _, arg = text.partition(":")
    subset = tuple(_ints(arg)) if arg else ()
    if subset and kind != "fixed-subset":
        raise DomainError(f"adversary {kind!r} takes no parameter")
    return sim.AdversaryStrategy(kind, subset)


def _echo(args, *keys) -> dict:
    return {k: getattr(args, k) for k in keys}


def cmd_eval(args):
    x = _state(args)
    if args.n == 4:
        v = value4(args.t, args.T, x, cfg=_quad(args))
    elif args.n == 3:
        v = value3(args.t, args.T, x)
    else:
        raise DomainError("eval is available for --n 3 or 4")
    return {"value": v} | _echo(args, "n", "t", "T", "x")


def cmd_grad(args):
    x = _state(args)
    if args.n == 4:
        g = gradient4(args.t, args.T, x, cfg=_quad(args))
    elif args.n == 3:
        g = gradient3(args.t, args.T, x)
    else:
        raise DomainError("grad is available for --n 3 or 4")
    return {"gradient": g} | _echo(args, "n", "t", "T", "x")


def cmd_hess(args):
    _need4(args, "hess")
    x = _state(args)
    cfg = _quad(args)
    return {"hessian": hessian4(args.t, args.T, x, cfg=cfg), "dt": dt_value4(args.t, args.T, x, cfg=cfg)} \
        | _echo(args, "n", "t", "T", "x")


def cmd_residual(args):
    _need4(args, "residual")
    rp = pc.residual_profile(args.t, args.T, _state(args), tol=args.tol, cfg=_quad(args))
    rows = [[m, " ".join(map(str, ExpertSubset(m, 4).indices)), rp.q[m], rp.scaled[m]]
            for m in range(16)]
    return {"columns": ["mask", "subset", "q", "q_scaled"], "rows": rows,
            "comb": list(rp.comb.indices), "argmax": rp.argmax, "crossing": rp.crossing,
            "max_scaled": rp.scaled.max()}


def cmd_terminal(args):
    _need4(args, "terminal")
    rows = [list(r) for r in pc.terminal_probe(_state(args), TERMINAL_KAPPAS, T=args.T, cfg=_quad(args))]
    return {"columns": ["kappa", "gap"], "rows": rows}


def cmd_laplace(args):
    _need4(args, "laplace")
    x = _state(args, default_zero=True)
    rows = []
    for lam in LAPLACE_LAMBDAS:
        r = pc.laplace_bridge(x, lam, cfg=_quad(args))
        rows.append([lam, r.lhs, r.rhs, r.gap, r.tail_bound])
    return {"columns": ["lambda", "transform", "geometric", "gap", "tail_bound"], "rows": rows}


def cmd_ratio(args):
    return pc.ratio_check()


def cmd_dp(args):
    if args.Ms:
        rows = []
        for M in args.Ms:
            v = dg.solve_exact(M, args.n).root
            rows.append([M, v, v / np.sqrt(M)])
        return {"columns": ["M", "V", "V_scaled"], "rows": rows}
    if args.M is None:
        raise DomainError("dp needs --M or --Ms")
    return {"value": dg.solve_exact(args.M, args.n).root, "M": args.M, "n": args.n}


def cmd_sandwich(args):
    Ms = args.Ms or ([args.M] if args.M else list(range(1, 9)))
    rows = []
    for M, v, lo, hi in dg.convergence_table(Ms, args.n):
        r = np.sqrt(M)
        rows.append([M, v * r, None if lo is None else lo * r, None if hi is None else hi * r,
                     v, lo, hi])
    return {"columns": ["M", "V", "V_lower", "V_upper", "V_scaled", "V_lower_scaled",
                        "V_upper_scaled"], "rows": rows}


def cmd_simulate(args):
    paths = args.paths or 10_000
    cfg = dict(N=args.n, paths=paths, seed=args.seed, T=args.T,
               player=_player(args.player), adversary=_adversary(args.adversary))
    echo = {"n": args.n, "paths": paths, "seed": args.seed, "T": args.T,
            "player": args.player, "adversary": args.adversary}
    if args.Ms:
        rows = sim.regret_curve(sim.SimConfig(M=args.Ms[0], **cfg), args.Ms)
        return {"columns": ["M", "mean_scaled", "stderr_scaled"], "rows": [list(r) for r in rows]} | echo
    if args.M is None:
        raise DomainError("simulate needs --M or --Ms")
    res = sim.estimate_regret(sim.SimConfig(M=args.M, **cfg))
    return res.to_dict() | {"mean_scaled": res.mean / np.sqrt(args.M), "M": args.M} | echo


def cmd_sde(args):
    x = _state(args, default_zero=True)
    cfg = sim.SdeConfig(x=tuple(x), t=args.t, T=args.T, steps=args.steps or 1000,
                        paths=args.paths or 10_000, seed=args.seed)
    res = sim.sde_feynman_kac(cfg, threads=args.threads)
    return res.to_dict() | {"x": list(x), "t": args.t, "T": args.T, "steps": cfg.steps,
                            "seed": args.seed}


def cmd_verify(args):
    checks = verification.run_all(quick=args.quick, seed=args.seed, threads=args.threads)
    for c in checks:
        print(c.line(), file=sys.stderr)
    return {"passed": all(c.passed for c in checks), "checks": [c.to_dict() for c in checks]}


COMMANDS = {v: globals()["cmd_" + v] for v in VERBS}


def _emit(out: dict, fmt: str, full: bool, stream):
    out = _conv(out, full)
    if fmt == "csv":
        w = csv.writer(stream, lineterminator="\n")
        if "rows" in out:
            w.writerow(out["columns"])
            w.writerows(out["rows"])
        else:
            w.writerow(["key", "value"])
            for k, v in out.items():
                w.writerow([k, json.dumps(v) if isinstance(v, (list, dict)) else v])
    else:
        json.dump(out, stream)
        stream.write("\n")


def main(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"expert-lab: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:                       # --help
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 1:
        print("expert-lab: error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        out = COMMANDS[args.verb](args)
    except (DomainError, argparse.ArgumentTypeError) as exc:
        print(f"expert-lab: error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, BudgetError, FloatingPointError) as exc:
        print(f"expert-lab: numeric failure: {exc}", file=sys.stderr)
        return 3
    buf = io.StringIO()
    _emit(out, args.format, args.precision == "full", buf)
    stdout.write(buf.getvalue())
    if args.verb == "verify" and not out["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
