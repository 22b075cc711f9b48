"""Acceptance checks, one function per criterion.

Each check returns a :class:`Check` holding the measured quantities and the
tolerances they were compared against. Problem sizes are parameters so the
command-line ``verify`` verb can run a reduced version.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import THETA
from .discrete_game import solve_exact, solve_fixed_adversary, solve_fixed_player
from .pde_check import fd_validate, laplace_bridge, random_states, ratio_check, residual_profile, terminal_probe, theta_inequality_check
from .simulator import SdeConfig, SimConfig, estimate_regret, sde_feynman_kac
from .value3 import geometric_value3, value3
from .value4 import (geometric_value4, hessian4_from_sl, hessian4_integral, s_integral, sl_profile,
                     value4)

U1 = 0.5 * np.sqrt(np.pi / 2.0)


@dataclass
class Check:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    seconds: float = 0.0
    notes: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.values.items())
        return f"[{status}] {self.name} ({self.seconds:.1f}s): {vals}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["values"] = {k: _jsonable(v) for k, v in self.values.items()}
        return d


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(u) for u in v) + "]"
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, np.bool_):
        return bool(v)
    return v


class _Timer:
    def __enter__(self):
        self.t = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t


def constants(time_limit: float = 1.0) -> Check:
    """Closed-form constants and the finite/geometric ratios."""
    with _Timer() as tm:
        v4 = value4(0.0, 1.0, np.zeros(4))
        g4 = geometric_value4(np.zeros(4))
        v3 = value3(0.0, 1.0, np.zeros(3))
        g3 = geometric_value3(np.zeros(3))
        r = ratio_check()
    ratio = 2.0 / np.sqrt(np.pi)
    ok = (abs(v4 - 0.6266570687) < 1e-6 and abs(g4 - 0.5553603673) < 1e-9
          and abs(v3 - 0.5319230406) < 1e-9 and abs(g3 - 0.4714045208) < 1e-9
          and abs(r["n4"] - ratio) < 1e-6 and abs(r["n3"] - ratio) < 1e-6
          and tm.seconds < time_limit)
    return Check("1 constants", ok, {"value4": v4, "geo4": g4, "value3": v3, "geo3": g3,
                                     "ratio4": r["n4"], "ratio3": r["n3"]},
                 {"value4": 1e-6, "closed_forms": 1e-9, "ratios": 1e-6, "seconds": time_limit},
                 tm.seconds)


def derivative_states(seed: int = 2024, count: int = 200):
    rng = np.random.default_rng(seed)
    X = random_states(rng, count, min_gap=0.1)
    t = rng.uniform(0.0, 0.9, count)
    return t, X


def derivatives(seed: int = 2024, count: int = 200, time_limit: float = 120.0) -> Check:
    """Analytic derivatives against central finite differences."""
    t, X = derivative_states(seed, count)
    worst = dict(grad=0.0, hess=0.0, dt=0.0, grad_sum=0.0, hess_rows=0.0)
    with _Timer() as tm:
        for ti, x in zip(t, X):
            r = fd_validate(ti, 1.0, x)
            for k, v in zip(worst, (r.grad_err, r.hess_err, r.dt_err, r.grad_sum_err, r.hess_row_sum)):
                worst[k] = max(worst[k], float(v))
    tol = dict(grad=1e-5, hess=1e-4, dt=1e-5, grad_sum=1e-9, hess_rows=1e-8)
    ok = all(worst[k] < tol[k] for k in tol) and tm.seconds < time_limit
    return Check("2 derivatives vs finite differences", ok, worst, tol | {"seconds": time_limit},
                 tm.seconds)


def representations(seed: int = 2024, count: int = 200, time_limit: float = 120.0) -> Check:
    """Dual-series Hessian and S profile against the integral forms."""
    t, X = derivative_states(seed, count)
    dh = ds = 0.0
    with _Timer() as tm:
        for ti, x in zip(t, X):
            dh = max(dh, float(np.abs(hessian4_from_sl(ti, 1.0, x) - hessian4_integral(ti, 1.0, x)).max()))
            ds = max(ds, float(np.abs(sl_profile(ti, 1.0, x).S - s_integral(ti, 1.0, x)).max()))
    ok = dh < 1e-7 and ds < 1e-9 and tm.seconds < time_limit
    return Check("3 representation cross-checks", ok, {"hessian_diff": dh, "S_diff": ds},
                 {"hessian_diff": 1e-7, "S_diff": 1e-9, "seconds": time_limit}, tm.seconds)


def residual_states(seed: int = 7, count: int = 1000):
    """States with coordinate spread in [0, 5] and time to maturity in [0.01, 10]."""
    rng = np.random.default_rng(seed)
    spread = rng.uniform(0.0, 5.0, count)
    X = rng.uniform(0.0, 1.0, (count, 4)) * spread[:, None] + rng.uniform(-2, 2, count)[:, None]
    tau = 10.0 ** rng.uniform(-2.0, 1.0, count)
    return tau, X


def pde_optimality(seed: int = 7, count: int = 1000, time_limit: float = 300.0) -> Check:
    """Comb optimality: residual signs, symmetries, theta and S inequalities."""
    tau, X = residual_states(seed, count)
    w = dict(max_scaled=-np.inf, crossing=0.0, complement=0.0, theta=-np.inf, s_order=-np.inf)
    comp = np.arange(16)[::-1]
    with _Timer() as tm:
        for ta, x in zip(tau, X):
            rp = residual_profile(0.0, ta, x)
            s = rp.scaled
            w["max_scaled"] = max(w["max_scaled"], float(s.max()))
            w["crossing"] = max(w["crossing"], float(np.abs(s[rp.crossing]).max()))
            w["complement"] = max(w["complement"], float(np.abs(rp.q - rp.q[comp]).max()))
            if THETA @ np.sort(x) < -1e-9:
                lhs, rhs, _ = theta_inequality_check(0.0, ta, x)
                w["theta"] = max(w["theta"], lhs - rhs)
                S = sl_profile(0.0, ta, x).S
                w["s_order"] = max(w["s_order"], S[0] - S[1], S[1] - S[3], S[2] - S[3])
    tol = dict(max_scaled=1e-6, crossing=1e-6, complement=1e-8, theta=1e-12, s_order=1e-10)
    ok = all(w[k] <= tol[k] for k in tol) and tm.seconds < time_limit
    return Check("4 PDE optimality of the comb", ok, w, tol | {"seconds": time_limit}, tm.seconds)


def terminal(seed: int = 11, count: int = 50) -> Check:
    """Terminal limit on random states and the exact diagonal rate."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2.5, 2.5, (count, 4))
    g3 = g5 = diag = 0.0
    with _Timer() as tm:
        for x in X:
            (_, a), (_, b) = terminal_probe(x, [1e-3, 1e-5])
            g3, g5 = max(g3, a), max(g5, b)
        for k in (1e-1, 1e-2, 1e-3, 1e-5):
            gap = terminal_probe(np.full(4, 0.3), [k])[0][1]
            diag = max(diag, abs(gap - 0.5 * np.sqrt(k * np.pi / 2.0)))
    ok = g3 < 0.05 and g5 < 0.005 and diag < 1e-10
    return Check("5 terminal condition", ok, {"gap_1e-3": g3, "gap_1e-5": g5, "diagonal_err": diag},
                 {"gap_1e-3": 0.05, "gap_1e-5": 0.005, "diagonal_err": 1e-10}, tm.seconds)


def laplace(time_limit: float = 120.0) -> Check:
    """Laplace transform in the horizon against the geometric value."""
    worst = 0.0
    with _Timer() as tm:
        for lam in (0.5, 1.0, 2.0):
            for x in (np.zeros(4), np.array([0, 0, 0, 1.0]), np.array([0, 1, 2, 3.0])):
                worst = max(worst, laplace_bridge(x, lam).gap)
    ok = worst < 1e-4 and tm.seconds < time_limit
    return Check("6 Laplace bridge", ok, {"max_gap": worst}, {"max_gap": 1e-4, "seconds": time_limit},
                 tm.seconds)


def dp_sandwich(small=tuple(range(1, 9)), Ms=(4, 9, 16, 25, 36),
                time_limit: float = 600.0) -> Check:
    """Exact values, the lower/exact/upper sandwich and the sqrt(M) trends."""
    with _Timer() as tm:
        v4, v3 = solve_exact(1, 4).root, solve_exact(1, 3).root
        sandwich = 0.0
        for M in small:
            lo, ex, hi = (solve_fixed_adversary(M, 4).root, solve_exact(M, 4).root,
                          solve_fixed_player(M, 4).root)
            sandwich = max(sandwich, lo - ex, ex - hi)
        lower = [solve_fixed_adversary(M, 4).root / np.sqrt(M) for M in Ms]
        upper = [solve_fixed_player(M, 4).root / np.sqrt(M) for M in Ms]
    parts = {
        "exact_values": abs(v4 - 0.75) < 1e-9 and abs(v3 - 2.0 / 3.0) < 1e-9,
        "sandwich": sandwich <= 1e-9,
        "lower_increasing": bool(np.all(np.diff(lower) > 0)),
        "upper_decreasing": bool(np.all(np.diff(upper) < 0)),
        "bracket": bool(min(lower + upper) >= 0.50 and max(lower + upper) <= 0.72),
        "runtime": tm.seconds < time_limit,
    }
    vals = {"V1_n4": v4, "V1_n3": v3, "sandwich_violation": sandwich,
            "lower_scaled": lower, "upper_scaled": upper} | parts
    return Check("7 exact DP sandwich", all(parts.values()), vals,
                 {"lp": 1e-9, "bracket": [0.50, 0.72], "seconds": time_limit}, tm.seconds)


def monte_carlo_game(M: int = 400, paths: int = 200_000, seed: int = 12345,
                     time_limit: float = 600.0) -> Check:
    """Probability matching against the balanced comb, with a determinism re-run."""
    cfg = SimConfig(M=M, N=4, paths=paths, seed=seed)
    with _Timer() as tm:
        a = estimate_regret(cfg)
    b = estimate_regret(cfg)
    scaled = a.mean / np.sqrt(M)
    same = a.mean == b.mean and a.stderr == b.stderr
    ok = abs(scaled - 0.627) <= 0.03 and same and tm.seconds < time_limit
    return Check("8 Monte Carlo game", ok, {"scaled_mean": scaled, "scaled_stderr": a.stderr / np.sqrt(M),
                                            "bit_identical": same, "clamps": a.clamps},
                 {"scaled_mean": "0.627 +- 0.03", "seconds": time_limit}, tm.seconds)


def sde(steps: int = 4000, paths: int = 400_000, seed: int = 2718, threads: int | None = None,
        time_limit: float = 600.0) -> Check:
    """Euler-Maruyama Feynman-Kac estimate of the value at the origin."""
    with _Timer() as tm:
        r = sde_feynman_kac(SdeConfig(steps=steps, paths=paths, seed=seed), threads=threads)
    ok = abs(r.mean - U1) <= 0.01 and tm.seconds < time_limit
    return Check("9 SDE Feynman-Kac", ok, {"mean": r.mean, "stderr": r.stderr, "target": U1},
                 {"mean": "0.6267 +- 0.01", "seconds": time_limit}, tm.seconds)


def invariances(seed: int = 99, count: int = 200) -> Check:
    """Translation, permutation and parabolic scaling of value4."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2.5, 2.5, (count, 4))
    t = rng.uniform(0.0, 0.9, count)
    c = rng.uniform(-3.0, 3.0, count)
    lam = rng.uniform(0.5, 2.0, count)
    w = dict(translation=0.0, permutation=0.0, scaling=0.0)
    with _Timer() as tm:
        for ti, x, ci, li in zip(t, X, c, lam):
            v = value4(ti, 1.0, x)
            w["translation"] = max(w["translation"], abs(value4(ti, 1.0, x + ci) - v - ci))
            w["permutation"] = max(w["permutation"], abs(value4(ti, 1.0, rng.permutation(x)) - v))
            w["scaling"] = max(w["scaling"], abs(value4(li ** 2 * ti, li ** 2, li * x) - li * v))
    tol = dict(translation=1e-10, permutation=1e-10, scaling=1e-8)
    return Check("10 invariances", all(w[k] <= tol[k] for k in tol), w, tol, tm.seconds)


def run_all(quick: bool = False, seed: int = 0, threads: int | None = None) -> list:
    """All criteria; ``quick`` shrinks sample sizes and horizons.

    ``seed`` is added to every per-check seed.
    """
    if quick:
        return [constants(), derivatives(2024 + seed, 20), representations(2024 + seed, 20),
                pde_optimality(7 + seed, 100), terminal(11 + seed, 10), laplace(),
                dp_sandwich(small=(1, 2, 3, 4), Ms=(4, 9, 16)),
                monte_carlo_game(M=100, paths=20_000, seed=12345 + seed),
                sde(steps=1000, paths=40_000, seed=2718 + seed, threads=threads),
                invariances(99 + seed, 40)]
    return [constants(), derivatives(2024 + seed), representations(2024 + seed),
            pde_optimality(7 + seed), terminal(11 + seed), laplace(), dp_sandwich(),
            monte_carlo_game(seed=12345 + seed), sde(seed=2718 + seed, threads=threads),
            invariances(99 + seed)]
