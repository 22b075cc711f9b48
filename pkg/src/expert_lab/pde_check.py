"""Numerical checks of the PDE characterization of the 4-expert value.

Everything here is built from the public value4/value3 routines and acts as
an oracle layer: residuals of the nonlinear PDE over all adversary subsets,
the theta-function inequality behind comb optimality, the terminal limit,
the Laplace-transform bridge to the geometric-stopping value, and central
finite differences of the value itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ALPHA, THETA, ExpertSubset, as_state, comb_subset, rank_state, subset_matrix
from .errors import DomainError
from .value3 import geometric_value3, value3
from .value4 import (DEFAULT_QUAD, EvalPoint, QuadratureConfig, dt_value4, geometric_value4,
                     gradient4, hessian4_integral, theta3, u_lambda, value4)


@dataclass
class ResidualProfile:
    """Residuals ``q_J = du/dt + e_J' H e_J / 2`` for every subset J.

    Attributes
    ----------
    q : ndarray (2**N,)
        Residual indexed by subset mask (original expert indices).
    tau : float
        Time to maturity; ``q * sqrt(tau)`` is scale free.
    comb : ExpertSubset
    argmax : list of int
        Masks attaining ``max q`` within ``tol``.
    crossing : list of int
        Masks of {i1,i3}, {i1,i4}, {i2,i3}, {i2,i4}.
    """

    q: np.ndarray
    tau: float
    comb: ExpertSubset
    argmax: list
    crossing: list
    dt: float = 0.0
    hessian: np.ndarray = field(default=None, repr=False)

    @property
    def scaled(self) -> np.ndarray:
        return self.q * np.sqrt(self.tau)

    def residual(self, subset) -> float:
        mask = subset.mask if isinstance(subset, ExpertSubset) else int(subset)
        return float(self.q[mask])


def residual_profile(t, T=None, x=None, tol: float = 1e-7,
                     cfg: QuadratureConfig = DEFAULT_QUAD) -> ResidualProfile:
    """Residual of the nonlinear PDE for every adversary subset.

    Parameters
    ----------
    t, T, x : point of evaluation (``t < T``).
    tol : float
        Tolerance defining the argmax set.
    cfg : QuadratureConfig

    Returns
    -------
    ResidualProfile
    """
    p = t if isinstance(t, EvalPoint) else EvalPoint(float(t), float(T), x)
    if p.tau <= 0:
        raise DomainError("residuals need t < T")
    dt = dt_value4(p, cfg=cfg)
    H = hessian4_integral(p, cfg=cfg)
    E = subset_matrix(4).astype(float)
    q = dt + 0.5 * np.einsum("ji,ik,jk->j", E, H, E)
    perm = rank_state(p.x).perm
    cross = [ExpertSubset.from_indices([perm[a], perm[b]], 4).mask
             for a, b in ((0, 2), (0, 3), (1, 2), (1, 3))]
    argmax = [int(m) for m in np.flatnonzero(q >= q.max() - tol)]
    return ResidualProfile(q, p.tau, comb_subset(p.x), argmax, cross, dt, H)


def theta_inequality_check(t, T=None, x=None):
    """Jacobi-theta values behind the {i1, i2} residual.

    Returns
    -------
    lhs, rhs : float
        ``theta3(mu, q)`` and ``theta3(nu, q)`` with
        ``mu = pi a_1/(4 th) + pi/4``, ``nu = pi a_4/(4 th) + pi/4`` and nome
        ``q = exp(-pi^2 tau / (4 th^2))``; comb optimality needs lhs <= rhs.
    cos_ok : bool
        Whether ``cos(2 mu) <= cos(2 nu)``.
    """
    p = t if isinstance(t, EvalPoint) else EvalPoint(float(t), float(T), x)
    xo = np.sort(p.x)
    th = float(THETA @ xo)
    if th == 0.0:
        raise DomainError("theta check is undefined on the diagonal")
    A = ALPHA @ xo
    mu = np.pi * A[0] / (4.0 * th) + np.pi / 4.0
    nu = np.pi * A[3] / (4.0 * th) + np.pi / 4.0
    q = np.exp(-np.pi ** 2 * p.tau / (4.0 * th ** 2))
    return theta3(mu, q), theta3(nu, q), bool(np.cos(2 * mu) <= np.cos(2 * nu) + 1e-15)


def terminal_probe(x, kappas, T: float = 1.0, cfg: QuadratureConfig = DEFAULT_QUAD):
    """Gap between ``u^T(T - kappa, x)`` and the terminal payoff.

    Returns
    -------
    list of (kappa, gap)
    """
    x = as_state(x, 4)
    out = []
    for k in kappas:
        if not k > 0:
            raise DomainError("kappa must be positive")
        out.append((float(k), abs(value4(T - k, T, x, cfg=cfg) - x.max())))
    return out


@dataclass
class LaplaceResult:
    lhs: float
    rhs: float
    tail_bound: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)


def laplace_bridge(x, lam: float, quad_T_max: float | None = None, panels: int = 16,
                   nodes: int = 16, cfg: QuadratureConfig = DEFAULT_QUAD) -> LaplaceResult:
    """Compare the Laplace transform of ``T -> u^T(0, x)`` with ``u_lambda``.

    The time integral is taken in ``s = sqrt(T)``, which removes the square
    root behaviour at ``T = 0``; Gauss-Legendre panels cover
    ``[0, sqrt(quad_T_max)]`` with ``quad_T_max = 40/lam`` by default.
    The tail beyond ``quad_T_max`` is approximated by the terminal payoff
    and bounded by the linear growth of the value.
    """
    if not lam > 0:
        raise DomainError("lambda must be positive")
    x = as_state(x, 4)
    Tmax = 40.0 / lam if quad_T_max is None else float(quad_T_max)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, np.sqrt(Tmax), panels + 1)
    tot = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        s = a + 0.5 * (b - a) * (xg + 1.0)
        vals = np.array([value4(0.0, si * si, x, cfg=cfg) for si in s])
        tot += np.sum(0.5 * (b - a) * wg * 2.0 * s * np.exp(-lam * s * s) * vals)
    tail = np.exp(-lam * Tmax) / lam
    tot += tail * x.max()
    # u^T(0,x) - max x lies in [0, sqrt(T pi/2)/2 + ...]; bound by linear growth
    tail_bound = tail * (np.sqrt(Tmax) + 1.0 / lam + np.abs(x).max())
    return LaplaceResult(float(tot), u_lambda(lam, x), float(tail_bound))


def ratio_check() -> dict:
    """Finite-horizon over geometric value at the origin for N = 4 and N = 3."""
    return {"n4": value4(0.0, 1.0, np.zeros(4)) / geometric_value4(np.zeros(4)),
            "n3": value3(0.0, 1.0, np.zeros(3)) / geometric_value3(np.zeros(3))}


def _fd_gradient(f, x, h):
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])


def _fd_hessian(f, x, h):
    n = x.size
    I = np.eye(n) * h
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        H[i, i] = (f(x + I[i]) - 2 * f0 + f(x - I[i])) / h ** 2
        for j in range(i):
            H[i, j] = H[j, i] = (f(x + I[i] + I[j]) - f(x + I[i] - I[j])
                                 - f(x - I[i] + I[j]) + f(x - I[i] - I[j])) / (4 * h * h)
    return H


@dataclass
class FDReport:
    grad_err: float
    hess_err: float
    dt_err: float
    grad_sum_err: float
    hess_row_sum: float


def _rel(a, b, scale):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), FD_FLOOR * scale))


#: relative errors are floored at this fraction of the on-diagonal magnitude;
#: far from the diagonal derivatives are exponentially small and fall below
#: the round-off of a finite difference of the value
FD_FLOOR = 1e-4


def fd_validate(t, T=None, x=None, h: float = 1e-5, h_hess: float = 1e-3,
                cfg: QuadratureConfig = DEFAULT_QUAD) -> FDReport:
    """Central finite differences of value4 against the analytic derivatives.

    Relative errors are max-abs differences divided by the max-abs analytic
    entry, floored at ``FD_FLOOR`` times the magnitude of the same quantity
    on the diagonal at the same time to maturity. The time derivative is
    differenced in the time-to-maturity.
    """
    p = t if isinstance(t, EvalPoint) else EvalPoint(float(t), float(T), x)
    if not 1e-6 <= h <= 1e-3 or not 1e-6 <= h_hess <= 1e-3:
        raise DomainError("finite-difference steps must lie in [1e-6, 1e-3]")
    if p.tau <= h:
        raise DomainError("point too close to maturity for the step")
    f = lambda y: value4(0.0, p.tau, y, cfg=cfg)
    g = gradient4(p, cfg=cfg, method="quad")
    H = hessian4_integral(p, cfg=cfg)
    dt = dt_value4(p, cfg=cfg)
    dt_fd = (value4(0.0, p.tau - h, p.x, cfg=cfg) - value4(0.0, p.tau + h, p.x, cfg=cfg)) / (2 * h)
    dt_scale = np.sqrt(np.pi / (32.0 * p.tau))
    return FDReport(_rel(_fd_gradient(f, p.x, h), g, 1.0),
                    _rel(_fd_hessian(f, p.x, h_hess), H, 6.0 * dt_scale),
                    _rel(dt_fd, dt, dt_scale), abs(g.sum() - 1.0), float(np.abs(H.sum(1)).max()))


def random_states(rng: np.random.Generator, count: int, n: int = 4, low: float = -2.5,
                  high: float = 2.5, min_gap: float = 0.0) -> np.ndarray:
    """I.i.d. uniform states, resampled until sorted gaps exceed ``min_gap``."""
    out = np.empty((0, n))
    while out.shape[0] < count:
        X = rng.uniform(low, high, size=(2 * count, n))
        ok = np.diff(np.sort(X, axis=1), axis=1).min(1) > min_gap
        out = np.vstack([out, X[ok]])
    return out[:count]
