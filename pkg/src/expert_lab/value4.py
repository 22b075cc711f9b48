"""Finite-horizon value function of the 4-expert game and its derivatives.

The value ``u^T(t, x)`` is represented as a one-sided oscillatory integral

    u = -1/(8 sqrt2) int_0^inf exp(-tau r^2) Lambda(r, x^o) / r^2 dr
        + sum(x)/4 + sqrt(tau pi / 2)/2,          tau = T - t,

whose integrand is piecewise smooth with kinks at integer multiples of
``T0 = -pi / (2 theta.x^o)``. Integrals are computed with Gauss-Legendre
panels aligned to these breakpoints and subdivided on the Gaussian scale
``1/sqrt(tau)``.

Second derivatives and the time derivative are expressed through the
profiles ``S_k`` (Gaussian-weighted square-wave integrals) and ``L_k``
(theta-type lattice sums). Each has a direct form and a Poisson-dual form;
the two have complementary convergence regimes and are used both as fast
paths and as mutual checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .core import ALPHA, EPS_TIE, SQRT2, THETA, as_state, rank_state
from .errors import BudgetError, DomainError

SQRT_PI = np.sqrt(np.pi)
U0_GEOMETRIC = np.pi / (4.0 * SQRT2)
#: bound on exp(-z) neglected in truncated Gaussian sums
_EXP_CUT = 40.0


@dataclass(frozen=True)
class EvalPoint:
    """Query point ``(t, T, x)`` of the continuum value function."""

    t: float
    T: float
    x: np.ndarray = field(compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.t) and np.isfinite(self.T)):
            raise DomainError("t and T must be finite")
        if self.T <= 0:
            raise DomainError(f"horizon T must be positive, got {self.T}")
        if not 0.0 <= self.t <= self.T:
            raise DomainError(f"need 0 <= t <= T, got t={self.t}, T={self.T}")
        object.__setattr__(self, "x", as_state(self.x, 4))

    @property
    def tau(self) -> float:
        return float(self.T - self.t)


def _point(t, T, x) -> EvalPoint:
    return t if isinstance(t, EvalPoint) else EvalPoint(float(t), float(T), x)


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for the breakpoint-panel quadrature.

    Attributes
    ----------
    nodes_per_panel : int
        Gauss-Legendre order on each panel.
    rel_tol : float
        Relative tolerance used for series truncation.
    r_taylor : float
        Below ``r_taylor * min(T0, 1/sqrt(tau))`` the value integrand uses its
        Taylor expansion.
    tail_sigma : float
        Cutoff of the r-integrals in units of ``1/sqrt(tau)``.
    panel_width : float
        Maximal panel width in units of ``1/sqrt(tau)``.
    max_panels : int
        Budget on the number of panels per integral.
    """

    nodes_per_panel: int = 32
    rel_tol: float = 1e-13
    r_taylor: float = 1e-4
    tail_sigma: float = 10.0
    panel_width: float = 1.0
    max_panels: int = 500_000

    def __post_init__(self):
        if self.nodes_per_panel < 8:
            raise DomainError("nodes_per_panel must be >= 8")
        if not 0.0 < self.rel_tol <= 1e-4:
            raise DomainError("rel_tol must lie in (0, 1e-4]")
        if self.tail_sigma < 6.0:
            raise DomainError("tail_sigma must be >= 6")
        if self.panel_width <= 0 or self.r_taylor <= 0:
            raise DomainError("panel_width and r_taylor must be positive")


DEFAULT_QUAD = QuadratureConfig()


@lru_cache(maxsize=16)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@dataclass(frozen=True)
class _Geometry:
    """Ranked state and the derived quantities shared by all formulas."""

    xo: np.ndarray      # sorted state
    perm: np.ndarray    # rank -> original index
    A: np.ndarray       # alpha_k . x^o
    thx: float          # theta . x^o  (<= 0)
    tau: float

    @property
    def diagonal(self) -> bool:
        return self.thx > -EPS_TIE * max(1.0, np.abs(self.xo).max())

    @property
    def middle_tie(self) -> bool:
        return self.xo[2] - self.xo[1] <= EPS_TIE * max(1.0, np.abs(self.xo).max())

    @property
    def any_tie(self) -> bool:
        return bool(np.any(np.diff(self.xo) <= EPS_TIE * max(1.0, np.abs(self.xo).max())))

    @property
    def a(self) -> float:
        """theta.x^o / sqrt(tau): the scale-free distance from the diagonal."""
        return self.thx / np.sqrt(self.tau)

    def unrank_vector(self, v):
        out = np.empty(4)
        out[self.perm] = v
        return out

    def unrank_matrix(self, m):
        out = np.empty((4, 4))
        out[np.ix_(self.perm, self.perm)] = m
        return out


def _geometry(p: EvalPoint) -> _Geometry:
    rs = rank_state(p.x, tie_tol=EPS_TIE)
    xo = rs.array()
    return _Geometry(xo, np.asarray(rs.perm), ALPHA @ xo, float(THETA @ xo), p.tau)


def _panel_nodes(g: _Geometry, cfg: QuadratureConfig):
    """Quadrature nodes on (0, r_max) aligned to multiples of T0.

    Returns
    -------
    r, w : ndarray (P, n)
        Nodes and weights.
    psi1, psi0 : ndarray (P, 1)
        Signs of sin(r theta.x + pi/2) and sin(r theta.x) on each panel.
    """
    sq = np.sqrt(g.tau)
    r_max = cfg.tail_sigma / sq
    if g.thx < 0:
        T0 = -np.pi / (2.0 * g.thx)
        nb = int(np.floor(r_max / T0))
        if nb > cfg.max_panels:
            raise BudgetError(f"{nb} breakpoint panels exceed max_panels={cfg.max_panels}",
                              partial=nb)
        breaks = T0 * np.arange(1, nb + 1)
        breaks = breaks[breaks < r_max]
    else:
        T0 = np.inf
        breaks = np.empty(0)
    edges = np.concatenate(([0.0], breaks, [r_max]))
    width = np.diff(edges)
    count = np.maximum(1, np.ceil(width * sq / cfg.panel_width)).astype(int)
    sub_w = np.repeat(width / count, count)
    j = np.arange(count.sum()) - np.repeat(np.cumsum(count) - count, count)
    lo = np.repeat(edges[:-1], count) + j * sub_w
    xg, wg = _gauss_legendre(cfg.nodes_per_panel)
    r = lo[:, None] + 0.5 * sub_w[:, None] * (xg[None, :] + 1.0)
    w = 0.5 * sub_w[:, None] * wg[None, :]
    if np.isfinite(T0):
        n = np.floor((lo + 0.5 * sub_w) / T0).astype(np.int64) % 4
    else:
        n = np.zeros(lo.size, dtype=np.int64)
    psi1 = np.where((n == 0) | (n == 3), 1.0, -1.0)[:, None]
    psi0 = np.where(n <= 1, -1.0, 1.0)[:, None]
    return r, w, psi1, psi0, T0


def _lambda_over_r2(r, A, psi1, psi0):
    """Lambda(r)/r^2 evaluated without cancellation; r broadcast against A."""
    rr = r[..., None]
    s = np.sin(rr * A).sum(-1)
    h = (np.sin(0.5 * rr * A) ** 2).sum(-1)
    lam = np.where(psi1 > 0, -2.0 * h, 2.0 * h - 8.0) - psi0 * s
    return lam / r ** 2


def _lambda_taylor(r, A):
    """Small-r expansion of Lambda(r)/r^2 on the first panel."""
    return (-0.5 * np.sum(A ** 2) - r * np.sum(A ** 3) / 6.0
            + r ** 2 * np.sum(A ** 4) / 24.0 + r ** 3 * np.sum(A ** 5) / 120.0)


def evaluate_lambda(r: float, xo) -> float:
    """Auxiliary function Lambda(r, x^o).

    Parameters
    ----------
    r : float
    xo : array_like
        Sorted 4-expert state (sorted internally if not).

    Returns
    -------
    float
        ``psi(r th + pi/2) sum cos(r a_k) - 4 - psi(r th) sum sin(r a_k)`` with
        ``psi = sign(sin)``, ``th = theta.x^o`` and ``a_k = alpha_k.x^o``.
    """
    xs = np.sort(as_state(xo, 4))
    A = ALPHA @ xs
    th = THETA @ xs
    p1 = np.sign(np.sin(r * th + np.pi / 2))
    p0 = np.sign(np.sin(r * th))
    return float(p1 * np.cos(r * A).sum() - 4.0 - p0 * np.sin(r * A).sum())


def _quad_all(g: _Geometry, cfg: QuadratureConfig):
    """Value integral, gradient integrals and S-type integrals in rank coords.

    Returns
    -------
    val : float
        int_0^inf e^{-tau r^2} Lambda / r^2 dr
    grad : ndarray (4,)
        2 int_0^inf e^{-tau r^2}/r sum_k alpha_{k,i}(psi1 sin + psi0 cos) dr
    ik : ndarray (4,)
        2 int_0^inf e^{-tau r^2}(psi1 cos(r a_k) - psi0 sin(r a_k)) dr
    """
    r, w, psi1, psi0, T0 = _panel_nodes(g, cfg)
    A = g.A
    gauss = np.exp(-g.tau * r ** 2) * w
    rr = r[..., None]
    s = np.sin(rr * A)
    h = np.sin(0.5 * rr * A) ** 2
    p1 = psi1[..., None]
    p0 = psi0[..., None]
    lam = np.where(psi1 > 0, -2.0 * h.sum(-1), 2.0 * h.sum(-1) - 8.0) - psi0 * s.sum(-1)
    lam_r2 = lam / r ** 2
    small = r < cfg.r_taylor * min(T0, 1.0 / np.sqrt(g.tau))
    if np.any(small):
        lam_r2 = np.where(small, _lambda_taylor(r, A), lam_r2)
    val = float(np.sum(gauss * lam_r2))
    # cos(r a) = 1 - 2h; the constant part drops out of alpha-weighted sums
    gk = (p1 * s - 2.0 * p0 * h) / rr
    grad = 2.0 * np.einsum("pn,pnk,ki->i", gauss, gk, ALPHA)
    ik = 2.0 * np.einsum("pn,pnk->k", gauss, p1 * (1.0 - 2.0 * h) - p0 * s)
    return val, grad, ik


def value4(t, T=None, x=None, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Value ``u^T(t, x)`` of the 4-expert game.

    Parameters
    ----------
    t, T : float
        Current time and horizon, ``0 <= t <= T``. ``t`` may also be an
        :class:`EvalPoint`, in which case ``T`` and ``x`` are ignored.
    x : array_like, shape (4,)
        State.
    cfg : QuadratureConfig

    Returns
    -------
    float
    """
    p = _point(t, T, x)
    if p.tau == 0.0:
        return float(p.x.max())
    g = _geometry(p)
    base = 0.25 * p.x.sum() + 0.5 * np.sqrt(p.tau * np.pi / 2.0)
    if g.thx == 0.0:
        return float(base)
    val, _, _ = _quad_all(g, cfg)
    return float(-val / (8.0 * SQRT2) + base)


def _require_open(p: EvalPoint):
    if p.tau <= 0.0:
        raise DomainError("derivatives are undefined at t = T")


def gradient4(t, T=None, x=None, cfg: QuadratureConfig = DEFAULT_QUAD,
              method: str = "auto") -> np.ndarray:
    """Gradient of ``u^T`` in x.

    The components are the probability-matching weights and sum to one.

    Parameters
    ----------
    t, T, x : see :func:`value4`
    cfg : QuadratureConfig
    method : {"auto", "quad", "series"}
        ``quad`` integrates the one-sided r-integral; ``series`` uses the
        erfc expansion obtained by expanding the square waves in Fourier
        series, which converges fast away from the diagonal; ``auto`` picks
        the series when ``|theta.x^o| >= 0.5 sqrt(T - t)``.

    Returns
    -------
    ndarray, shape (4,)
    """
    p = _point(t, T, x)
    _require_open(p)
    return gradient4_batch(p.t, p.T, p.x[None, :], cfg=cfg, method=method)[0]


#: |a| threshold above which the erfc series is preferred
A_SWITCH = 0.5


def _grad_series_sorted(a: np.ndarray, B: np.ndarray) -> np.ndarray:
    """erfc-series gradient for sorted states.

    Parameters
    ----------
    a : ndarray (P,)
        theta.x^o / sqrt(tau), all < 0.
    B : ndarray (P, 4)
        alpha_k.x^o / sqrt(tau).
    """
    out = np.empty((a.size, 4))
    need = 13.0 / np.abs(a) + 4.0
    order = np.argsort(need)
    chunk = max(1, int(4_000_000 // (4 * max(8.0, need.max()))))
    for start in range(0, a.size, 4096):
        idx = order[start:start + 4096]
        nmax = int(np.ceil(need[idx].max()))
        for s2 in range(0, idx.size, chunk):
            sub = idx[s2:s2 + chunk]
            n = np.arange(1, nmax + 1, 2, dtype=float)
            sigma = np.where(n % 4 == 1, 1.0, -1.0)
            arg = -(n[None, :, None] * a[sub, None, None]
                    + sigma[None, :, None] * B[sub, None, :]) / 2.0
            e = erfc(arg) / n[None, :, None]
            tot = e.sum(1)
            # sum_k alpha_{k,i} e_k = (4 e_i - sum_k e_k)/sqrt2
            out[sub] = 0.25 + (4.0 * tot - tot.sum(1, keepdims=True)) / (SQRT2 * 4.0 * SQRT2)
    return out


def gradient4_batch(t: float, T: float, X, cfg: QuadratureConfig = DEFAULT_QUAD,
                    method: str = "auto") -> np.ndarray:
    """Gradient of ``u^T(t, .)`` at many states sharing the same ``(t, T)``.

    Parameters
    ----------
    t, T : float
    X : array_like, shape (P, 4)
    cfg : QuadratureConfig
    method : {"auto", "quad", "series"}

    Returns
    -------
    ndarray, shape (P, 4)
    """
    if method not in ("auto", "quad", "series"):
        raise DomainError(f"unknown gradient method {method!r}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != 4 or not np.all(np.isfinite(X)):
        raise DomainError("states must be finite with 4 columns")
    EvalPoint(float(t), float(T), np.zeros(4))
    tau = float(T - t)
    if tau <= 0:
        raise DomainError("derivatives are undefined at t = T")
    order = np.argsort(X, axis=1, kind="stable")
    xo = np.take_along_axis(X, order, axis=1)
    thx = xo @ THETA
    a = thx / np.sqrt(tau)
    grads = np.full((X.shape[0], 4), 0.25)
    scale = np.maximum(1.0, np.abs(xo).max(1))
    off_diag = thx < -EPS_TIE * scale
    if method == "series":
        use_series = off_diag
    elif method == "quad":
        use_series = np.zeros_like(off_diag)
    else:
        use_series = off_diag & (np.abs(a) >= A_SWITCH)
    if np.any(use_series):
        B = (xo[use_series] @ ALPHA.T) / np.sqrt(tau)
        grads[use_series] = _grad_series_sorted(a[use_series], B)
    for i in np.flatnonzero(off_diag & ~use_series):
        p = EvalPoint(float(t), float(T), xo[i])
        g = _Geometry(xo[i], np.arange(4), ALPHA @ xo[i], float(thx[i]), tau)
        _, gi, _ = _quad_all(g, cfg)
        grads[i] = gi / (16.0 * SQRT2) + 0.25
    out = np.empty_like(grads)
    np.put_along_axis(out, order, grads, axis=1)
    return out


@dataclass(frozen=True)
class SLProfile:
    """Profiles ``S_k`` and ``L_k`` of a ranked state (k in rank order).

    Attributes
    ----------
    S, L : ndarray (4,)
    T_tilde : float
        ``-sqrt(tau) pi / (2 theta.x^o)``.
    beta : ndarray (4,)
        ``alpha_k.x^o / (2 pi sqrt(tau))``.
    eta1, eta4 : float
        ``4 T_tilde beta_k`` for k = 1, 4; lie in [-3, -1] and [1, 3].
    """

    S: np.ndarray
    L: np.ndarray
    T_tilde: float
    beta: np.ndarray
    eta1: float
    eta4: float


def _fhat(v):
    """Fourier transform of exp(-r^2): sqrt(pi) exp(-pi^2 v^2)."""
    return SQRT_PI * np.exp(-(np.pi * v) ** 2)


def _sl_dual(g: _Geometry):
    """S_k and L_k from their Poisson-dual series."""
    T_t = -np.sqrt(g.tau) * np.pi / (2.0 * g.thx)
    eta = -g.A / g.thx
    # exponent (2l+1 +- eta)^2 a^2/4 > _EXP_CUT once 2l - 2 > sqrt(4 cut)/|a|
    lmax = int(np.ceil((np.sqrt(4.0 * _EXP_CUT) / abs(g.a) + 4.0) / 2.0)) + 1
    l = np.arange(lmax + 1)
    sgn = (-1.0) ** l
    v = (2 * l[:, None] + 1 - sgn[:, None] * eta[None, :]) / (4.0 * T_t)
    f = _fhat(v)
    S = 4.0 / np.pi * np.sum(sgn[:, None] * f / (2 * l[:, None] + 1), axis=0)
    L = 2.0 / np.pi * f.sum(0)
    return S, L, T_t, eta


def _l_direct(g: _Geometry) -> np.ndarray:
    """L_k from the direct theta-type lattice sums."""
    q_exp = np.pi ** 2 * g.tau / (4.0 * g.thx ** 2)   # q = exp(-q_exp)
    mmax = int(np.ceil(np.sqrt(_EXP_CUT / q_exp))) + 2
    lh = np.arange(mmax // 2 + 2)
    half = (-1.0) ** lh * np.exp(-q_exp * (2 * lh + 1) ** 2)
    s_half = 2.0 * np.sum(half[:, None] * np.sin(np.outer(np.pi * (lh + 0.5), g.A / g.thx)), 0)
    li = np.arange(1, mmax // 2 + 2)
    ints = (-1.0) ** li * np.exp(-q_exp * (2 * li) ** 2)
    s_int = 1.0 + 2.0 * np.sum(ints[:, None] * np.cos(np.outer(np.pi * li, g.A / g.thx)), 0)
    return np.sqrt(g.tau) * (s_half - s_int) / g.thx


def sl_profile(t, T=None, x=None) -> SLProfile:
    """S_k and L_k profiles from their Poisson-dual series.

    Parameters
    ----------
    t, T, x : see :func:`value4`; the state must be off the diagonal.

    Returns
    -------
    SLProfile
    """
    p = _point(t, T, x)
    _require_open(p)
    g = _geometry(p)
    if g.diagonal:
        raise DomainError("S/L profiles are undefined on the diagonal")
    S, L, T_t, eta = _sl_dual(g)
    beta = g.A / (2.0 * np.pi * np.sqrt(g.tau))
    return SLProfile(S, L, float(T_t), beta, float(eta[0]), float(eta[3]))


def s_integral(t, T=None, x=None, cfg: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """S_k from the defining Gaussian-weighted integral (rank order)."""
    p = _point(t, T, x)
    _require_open(p)
    g = _geometry(p)
    _, _, ik = _quad_all(g, cfg)
    return np.sqrt(g.tau) * ik


def l_direct(t, T=None, x=None) -> np.ndarray:
    """L_k from the direct lattice sums (rank order)."""
    p = _point(t, T, x)
    _require_open(p)
    g = _geometry(p)
    if g.diagonal:
        raise DomainError("L profile is undefined on the diagonal")
    return _l_direct(g)


def _assemble_hessian(S, L, tau, with_series=True):
    """Rank-coordinate Hessian from S and L."""
    h = ALPHA.T @ (S[:, None] * ALPHA)
    if with_series:
        h = h + 2.0 * np.outer(ALPHA.T @ L, THETA)
    return h / (16.0 * np.sqrt(2.0 * tau))


def _hessian_diagonal(tau):
    return np.sqrt(np.pi / tau) * (ALPHA.T @ ALPHA) / (16.0 * SQRT2)


def hessian4_integral(t, T=None, x=None, cfg: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """Hessian of ``u^T`` from the integral representation.

    The Gaussian-weighted integral part is computed by quadrature; the
    lattice-sum correction (present off the middle tie) is summed directly,
    or from its dual series when the direct sum converges slowly.

    Returns
    -------
    ndarray, shape (4, 4), in the original coordinate order.
    """
    p = _point(t, T, x)
    _require_open(p)
    g = _geometry(p)
    if g.diagonal:
        return _hessian_diagonal(g.tau)
    _, _, ik = _quad_all(g, cfg)
    S = np.sqrt(g.tau) * ik
    if g.middle_tie:
        h = _assemble_hessian(S, None, g.tau, with_series=False)
    else:
        decay = np.exp(-np.pi ** 2 * g.tau / g.thx ** 2)
        if decay > 0.99 and not g.any_tie:
            L = _sl_dual(g)[1]
        else:
            L = _l_direct(g)
        h = _assemble_hessian(S, L, g.tau)
    return g.unrank_matrix(h)


def hessian4_from_sl(t, T=None, x=None) -> np.ndarray:
    """Hessian of ``u^T`` assembled entirely from the dual S/L series.

    Raises
    ------
    DomainError
        On ties or on the diagonal; use :func:`hessian4_integral` there.
    """
    p = _point(t, T, x)
    _require_open(p)
    g = _geometry(p)
    if g.diagonal or g.any_tie:
        raise DomainError("tied or diagonal state: use hessian4_integral")
    S, L, _, _ = _sl_dual(g)
    return g.unrank_matrix(_assemble_hessian(S, L, g.tau))


def hessian4(t, T=None, x=None, cfg: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """Hessian via the dual series when available, else the integral form."""
    p = _point(t, T, x)
    _require_open(p)
    g = _geometry(p)
    if g.diagonal or g.any_tie or abs(g.a) < A_SWITCH:
        return hessian4_integral(p, cfg=cfg)
    return hessian4_from_sl(p)


def dt_value4(t, T=None, x=None, cfg: QuadratureConfig = DEFAULT_QUAD,
              method: str = "quad") -> float:
    """Time derivative of ``u^T``; non-positive.

    Parameters
    ----------
    method : {"quad", "series"}
        Integral representation or the dual S series (off-diagonal only).
    """
    p = _point(t, T, x)
    _require_open(p)
    g = _geometry(p)
    if g.diagonal:
        return float(-SQRT_PI / (4.0 * np.sqrt(2.0 * g.tau)))
    if method == "series":
        S = _sl_dual(g)[0]
        return float(-S.sum() / (16.0 * np.sqrt(2.0 * g.tau)))
    _, _, ik = _quad_all(g, cfg)
    return float(-ik.sum() / (16.0 * SQRT2))


def theta3(z: float, q: float) -> float:
    """Jacobi theta function ``1 + 2 sum_{l>=1} q^{l^2} cos(2 l z)``.

    Parameters
    ----------
    z : float
        Phase.
    q : float
        Nome in [0, 1).
    """
    if not 0.0 <= q < 1.0:
        raise DomainError(f"nome must lie in [0, 1), got {q}")
    if q == 0.0:
        return 1.0
    lmax = int(np.ceil(np.sqrt(-np.log(1e-17) / -np.log(q)))) + 1
    l = np.arange(1, lmax + 1)
    return float(1.0 + 2.0 * np.sum(q ** (l * l) * np.cos(2.0 * l * z)))


def theta3_product(z: float, q: float) -> float:
    """Jacobi theta via the Jacobi triple product; same conventions as :func:`theta3`."""
    if not 0.0 <= q < 1.0:
        raise DomainError(f"nome must lie in [0, 1), got {q}")
    if q == 0.0:
        return 1.0
    lmax = int(np.ceil(np.log(1e-17) / (2.0 * np.log(q)))) + 2
    l = np.arange(1, lmax + 1)
    q2l = q ** (2 * l)
    q2l1 = q ** (2 * l - 1)
    return float(np.prod((1.0 - q2l) * (1.0 + 2.0 * q2l1 * np.cos(2 * z) + q2l1 ** 2)))


def geometric_value4(x) -> float:
    """Value of the 4-expert game with geometric stopping (unit rate).

    Parameters
    ----------
    x : array_like, shape (4,)

    Returns
    -------
    float
    """
    xo = np.sort(as_state(x, 4))
    A = ALPHA @ xo
    th = float(THETA @ xo)
    out = (xo[3] - SQRT2 / 4.0 * np.sinh(SQRT2 * (xo[3] - xo[2]))
           + np.arctan(np.exp(th)) * np.cosh(A).sum() / (4.0 * SQRT2))
    if abs(th) >= 1e-8:
        # arctanh(e^th) = -log(tanh(-th/2))/2 for th < 0, stable near 0
        out += -0.5 * np.log(np.tanh(-th / 2.0)) * np.sinh(A).sum() / (4.0 * SQRT2)
    return float(out)


def u_lambda(lam: float, x) -> float:
    """Geometric value with stopping rate ``lam``: ``lam^{-3/2} u(sqrt(lam) x)``."""
    if not lam > 0:
        raise DomainError(f"rate must be positive, got {lam}")
    return float(lam ** -1.5 * geometric_value4(np.sqrt(lam) * as_state(x, 4)))
