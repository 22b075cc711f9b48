"""Shared state types, the alpha/theta constants and ranking helpers.

Expert indices are 0-based throughout the library; a state ``x`` is the
vector of gain differences ``G^i - G`` of the ``N`` experts relative to the
player.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError

SQRT2 = np.sqrt(2.0)

#: alpha[k, j] = 3/sqrt(2) if k == j else -1/sqrt(2)
ALPHA = (4.0 * np.eye(4) - np.ones((4, 4))) / SQRT2
#: theta = (1, 1, -1, -1)/sqrt(2), applied to the ranked state
THETA = np.array([1.0, 1.0, -1.0, -1.0]) / SQRT2

#: default absolute tolerance used to merge near-ties before ranking
EPS_TIE = 1e-12

SUPPORTED_N = (2, 3, 4)


def as_state(x, n: int | None = None) -> np.ndarray:
    """Validate and convert ``x`` into a float state vector.

    Parameters
    ----------
    x : array_like
        Gain differences.
    n : int, optional
        Expected number of experts. When given, the length must match.

    Returns
    -------
    ndarray of float64, shape (N,)
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"state must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.size != n:
        raise DomainError(f"state has {arr.size} entries, expected N={n}")
    if arr.size not in SUPPORTED_N:
        raise DomainError(f"unsupported expert count N={arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("state has non-finite entries")
    return arr


@dataclass(frozen=True)
class RankedState:
    """A state sorted ascending with its rank-to-index permutation.

    ``sorted[k] == values[perm[k]]``; equal entries keep their original
    index order.
    """

    sorted: tuple
    perm: tuple

    @property
    def n(self) -> int:
        return len(self.sorted)

    def array(self) -> np.ndarray:
        return np.asarray(self.sorted, dtype=float)


def rank_state(x, tie_tol: float = 0.0) -> RankedState:
    """Sort a state ascending with the stable tie convention.

    Parameters
    ----------
    x : array_like
        State vector.
    tie_tol : float, default 0
        Values closer than ``tie_tol`` (chained) are treated as tied and
        ordered by original index. With the default exact comparison is used.

    Returns
    -------
    RankedState
    """
    arr = as_state(x)
    perm = np.argsort(arr, kind="stable")
    if tie_tol > 0.0:
        vals = arr[perm]
        # group chains of near-equal values and re-sort each group by index
        group = np.concatenate(([0], np.cumsum(np.diff(vals) > tie_tol)))
        perm = perm[np.lexsort((perm, group))]
    return RankedState(tuple(float(v) for v in arr[perm]), tuple(int(i) for i in perm))


def theta_dot(x) -> float:
    """Return ``theta . x^o`` for a 4-expert state (always <= 0)."""
    xo = np.sort(as_state(x, 4))
    return float((xo[0] + xo[1] - xo[2] - xo[3]) / SQRT2)


@dataclass(frozen=True)
class ExpertSubset:
    """Subset J of experts stored as a bitmask (bit i <-> expert i)."""

    mask: int
    n: int

    def __post_init__(self):
        if self.n not in SUPPORTED_N or not 0 <= self.mask < (1 << self.n):
            raise DomainError(f"invalid subset mask {self.mask} for N={self.n}")

    @classmethod
    def from_indices(cls, idx: Sequence[int], n: int) -> "ExpertSubset":
        mask = 0
        for i in idx:
            if not 0 <= i < n:
                raise DomainError(f"expert index {i} out of range for N={n}")
            mask |= 1 << int(i)
        return cls(mask, n)

    @property
    def indices(self) -> tuple:
        return tuple(i for i in range(self.n) if self.mask >> i & 1)

    def complement(self) -> "ExpertSubset":
        return ExpertSubset(((1 << self.n) - 1) ^ self.mask, self.n)

    def indicator(self) -> np.ndarray:
        """The vector e_J."""
        return subset_matrix(self.n)[self.mask].astype(float)

    def __contains__(self, i: int) -> bool:
        return bool(self.mask >> i & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")


def all_subsets(n: int) -> Iterator[ExpertSubset]:
    """Iterate over P(N) in mask order."""
    for mask in range(1 << n):
        yield ExpertSubset(mask, n)


def subset_matrix(n: int) -> np.ndarray:
    """0/1 matrix of shape (2**n, n); row ``mask`` is e_J."""
    masks = np.arange(1 << n)[:, None]
    return (masks >> np.arange(n)[None, :]) & 1


def comb_subset(x, n: int | None = None) -> ExpertSubset:
    """Comb subset of the adversary.

    For N=4 this is {i_2, i_4} (second and fourth ranked experts). For N=3
    the leader plus the laggard {i_1, i_3} is used.

    Parameters
    ----------
    x : array_like
        State vector.
    n : int, optional
        Expected expert count.

    Returns
    -------
    ExpertSubset
    """
    arr = as_state(x, n)
    if arr.size not in (3, 4):
        raise DomainError(f"comb strategy defined for N in (3, 4), got N={arr.size}")
    perm = rank_state(arr).perm
    ranks = (1, 3) if arr.size == 4 else (0, 2)
    return ExpertSubset.from_indices([perm[r] for r in ranks], arr.size)


def comb_masks(states: np.ndarray) -> np.ndarray:
    """Vectorized comb subset for a batch of states.

    Parameters
    ----------
    states : ndarray, shape (P, N)

    Returns
    -------
    ndarray of bool, shape (P, N); True for experts in the comb subset.
    """
    p, n = states.shape
    if n not in (3, 4):
        raise DomainError(f"comb strategy defined for N in (3, 4), got N={n}")
    order = np.argsort(states, axis=1, kind="stable")
    out = np.zeros((p, n), dtype=bool)
    rows = np.arange(p)
    for r in ((1, 3) if n == 4 else (0, 2)):
        out[rows, order[:, r]] = True
    return out


def phi(x) -> float:
    """Terminal payoff: the maximal coordinate."""
    return float(np.max(x))
