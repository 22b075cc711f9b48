"""Closed-form value functions of the 3-expert game.

With ranked coordinates ``x1 <= x2 <= x3`` put ``a = 2 x1 - x2 - x3`` and
``b = x2 - x3`` (both <= 0). The finite-horizon value is

    u = x2 + a/3 + F(a)/3 + F(b),
    F(c) = sqrt(tau) exp(-c^2/(2 tau)) / sqrt(2 pi) - c erfc(c / sqrt(2 tau)) / 2,

and ``F'(c) = -erfc(c / sqrt(2 tau)) / 2`` gives the gradient in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .core import SQRT2, as_state
from .errors import DomainError

SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class EvalPoint3:
    """Query point ``(t, T, x)`` for the 3-expert value."""

    t: float
    T: float
    x: np.ndarray = field(compare=False)

    def __post_init__(self):
        if self.T <= 0 or not 0.0 <= self.t <= self.T:
            raise DomainError(f"need 0 <= t <= T and T > 0, got t={self.t}, T={self.T}")
        object.__setattr__(self, "x", as_state(self.x, 3))

    @property
    def tau(self) -> float:
        return float(self.T - self.t)

    @property
    def ab(self) -> tuple:
        xo = np.sort(self.x)
        return 2.0 * xo[0] - xo[1] - xo[2], xo[1] - xo[2]


def _F(c, tau):
    s = np.sqrt(tau)
    return s * np.exp(-c * c / (2.0 * tau)) / SQRT_2PI - 0.5 * c * erfc(c / (s * SQRT2))


def value3(t, T=None, x=None) -> float:
    """Finite-horizon value ``u^T(t, x)`` of the 3-expert game.

    Parameters
    ----------
    t, T : float
        Time and horizon (``t`` may be an :class:`EvalPoint3`).
    x : array_like, shape (3,)

    Returns
    -------
    float
    """
    p = t if isinstance(t, EvalPoint3) else EvalPoint3(float(t), float(T), x)
    if p.tau == 0.0:
        return float(p.x.max())
    a, b = p.ab
    x2 = np.sort(p.x)[1]
    return float(x2 + a / 3.0 + _F(a, p.tau) / 3.0 + _F(b, p.tau))


def gradient3(t, T=None, x=None) -> np.ndarray:
    """Gradient of :func:`value3` in x (probability-matching weights).

    Tied coordinates receive the average of their one-sided values, which
    coincide because the value is continuously differentiable.

    Returns
    -------
    ndarray, shape (3,), summing to one.
    """
    p = t if isinstance(t, EvalPoint3) else EvalPoint3(float(t), float(T), x)
    if p.tau == 0.0:
        raise DomainError("gradient is undefined at t = T")
    perm = np.argsort(p.x, kind="stable")
    xo = p.x[perm]
    a, b = p.ab
    s = np.sqrt(2.0 * p.tau)
    da = 1.0 / 3.0 - erfc(a / s) / 6.0
    db = -0.5 * erfc(b / s)
    go = np.array([2.0 * da, 1.0 - da + db, -da - db])
    groups = np.concatenate(([0], np.cumsum(np.diff(xo) > 0)))
    for gid in np.unique(groups):
        go[groups == gid] = go[groups == gid].mean()
    out = np.empty(3)
    out[perm] = go
    return out


def gradient3_batch(t: float, T: float, X) -> np.ndarray:
    """Vectorized :func:`gradient3` for states of shape (P, 3)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    EvalPoint3(float(t), float(T), np.zeros(3))
    tau = float(T - t)
    if tau <= 0:
        raise DomainError("gradient is undefined at t = T")
    order = np.argsort(X, axis=1, kind="stable")
    xo = np.take_along_axis(X, order, axis=1)
    s = np.sqrt(2.0 * tau)
    da = 1.0 / 3.0 - erfc((2 * xo[:, 0] - xo[:, 1] - xo[:, 2]) / s) / 6.0
    db = -0.5 * erfc((xo[:, 1] - xo[:, 2]) / s)
    go = np.stack([2.0 * da, 1.0 - da + db, -da - db], axis=1)
    out = np.empty_like(go)
    np.put_along_axis(out, order, go, axis=1)
    return out


def geometric_value3(x) -> float:
    """Value of the 3-expert game with geometric stopping (unit rate)."""
    xo = np.sort(as_state(x, 3))
    return float(xo[2] + np.exp(SQRT2 * (xo[1] - xo[2])) / (2.0 * SQRT2)
                 + np.exp(SQRT2 * (2.0 * xo[0] - xo[1] - xo[2])) / (6.0 * SQRT2))
