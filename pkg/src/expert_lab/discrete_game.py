"""Exact backward induction for the discrete expert game.

State ``x`` is the integer vector of gain differences. One round: the
adversary picks a subset J of experts that gain, the player follows expert I
drawn from ``alpha``, and ``x <- x + e_J - 1{I in J} 1``. Because the payoff
is ``max(x)``, values commute with translations along ``1`` and with
permutations, so each layer is stored on normalized nodes (sorted, minimum
zero) and the subtracted minimum is added back on lookup.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable

import numpy as np

from .core import SUPPORTED_N, comb_masks, subset_matrix
from .errors import BudgetError, DomainError, NumericError

LP_TOL = 1e-9
M_MAX = {2: 400, 3: 120, 4: 40}


@dataclass
class MatrixGameSolution:
    """Solution of ``min_alpha max_J (c_J - alpha(J))``."""

    value: float
    alpha: np.ndarray
    pivots: int = 0


def bellman_value(c, n: int) -> MatrixGameSolution:
    """One Bellman step of the minimax game as a small linear program.

    Solves ``min over alpha in the simplex of max_J (c_J - sum_{i in J} alpha_i)``.
    The dual ``max sum_J b_J beta_J - delta`` subject to ``sum beta <= 1`` and
    ``sum_{J ni i} beta_J <= delta`` has the origin as a feasible basis, so a
    dense tableau simplex with Bland's rule needs no phase one. The primal
    mixture is read off the shadow prices.

    Parameters
    ----------
    c : array_like, shape (2**n,)
        Costs indexed by subset mask.
    n : int

    Returns
    -------
    MatrixGameSolution
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (1 << n,):
        raise DomainError(f"cost vector must have 2**{n} entries")
    if not np.all(np.isfinite(c)):
        raise DomainError("non-finite cost")
    shift = c.min() - 1.0
    b = c - shift                                   # >= 1
    E = subset_matrix(n).T.astype(float)            # (n, 2^n)
    nv = (1 << n) + 1                               # beta..., delta
    m = n + 1
    tab = np.zeros((m + 1, nv + m + 1))
    tab[0, :1 << n] = 1.0
    tab[1:m, :1 << n] = E
    tab[1:m, nv - 1] = -1.0
    tab[:m, nv:nv + m] = np.eye(m)
    tab[0, -1] = 1.0
    tab[m, :1 << n] = b                             # reduced costs (maximize)
    tab[m, nv - 1] = -1.0
    basis = list(range(nv, nv + m))
    pivots = 0
    for _ in range(200):
        red = tab[m, :-1]
        cand = np.flatnonzero(red > 1e-12)
        if cand.size == 0:
            break
        j = int(cand[0])                            # Bland: lowest index
        col = tab[:m, j]
        pos = col > 1e-12
        if not np.any(pos):
            raise NumericError("unbounded dual: primal infeasible")
        ratios = np.full(m, np.inf)
        ratios[pos] = tab[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-15)
        i = int(min(ties, key=lambda k: basis[k]))
        tab[i] /= tab[i, j]
        others = np.arange(m + 1) != i
        tab[others] -= np.outer(tab[others, j], tab[i])
        basis[i] = j
        pivots += 1
    else:
        raise NumericError("simplex did not terminate")
    y = -tab[m, nv:nv + m]
    value = -tab[m, -1] + shift
    alpha = np.maximum(y[1:], 0.0)
    deficit = 1.0 - alpha.sum()
    if deficit > 0:
        alpha += deficit / n                        # extra mass only lowers c_J - alpha(J)
    alpha /= alpha.sum()
    return MatrixGameSolution(float(value), alpha, pivots)


def normalize(y) -> tuple:
    """Normalized node ``(sorted(y) - min(y))`` and the offset ``min(y)``."""
    ys = sorted(y)
    lo = ys[0]
    return tuple(v - lo for v in ys), lo


@lru_cache(maxsize=64)
def layer_nodes(m: int, n: int) -> tuple:
    """All normalized nodes reachable from the origin after ``m`` rounds."""
    return tuple((0,) + rest for rest in combinations_with_replacement(range(m + 1), n - 1))


@dataclass
class DPTable:
    """Per-round values on normalized nodes.

    Attributes
    ----------
    layers : list of dict
        ``layers[m][node]`` is the value at round m of the normalized node.
    M, N : int
    kind : str
        ``exact``, ``lower`` or ``upper``.
    """

    layers: list
    M: int
    N: int
    kind: str
    meta: dict = field(default_factory=dict)

    @property
    def root(self) -> float:
        return self.layers[0][(0,) * self.N]

    def value(self, m: int, x) -> float:
        node, off = normalize(x)
        layer = self.layers[m]
        if layer is None:
            raise DomainError(f"layer {m} was not retained; solve with keep_layers=True")
        if node not in layer:
            raise DomainError(f"state {tuple(x)} is not reachable after {m} rounds")
        return layer[node] + off


def _check(M: int, N: int, m_max: int | None):
    if N not in SUPPORTED_N:
        raise DomainError(f"unsupported N={N}")
    if int(M) != M or M < 1:
        raise DomainError(f"M must be a positive integer, got {M}")
    limit = M_MAX[N] if m_max is None else m_max
    if M > limit:
        raise BudgetError(f"M={M} exceeds the budget M_max={limit} for N={N}", partial=0)


def _terminal(M: int, N: int) -> dict:
    return {node: float(node[-1]) for node in layer_nodes(M, N)}


def _successor_costs(nxt: dict, node: tuple, E: np.ndarray) -> np.ndarray:
    """``V(m+1, x + e_J)`` for all J, via normalized lookup."""
    out = np.empty(len(E))
    for mask, e in enumerate(E):
        key, off = normalize([a + b for a, b in zip(node, e)])
        out[mask] = nxt[key] + off
    return out


def solve_exact(M: int, N: int, m_max: int | None = None,
                keep_layers: bool = False) -> DPTable:
    """Minimax value ``V^M`` by backward induction.

    Parameters
    ----------
    M : int
        Number of rounds.
    N : int
        Number of experts (2, 3 or 4).
    m_max : int, optional
        Budget on M (defaults per N).
    keep_layers : bool
        Keep all layers (otherwise only the root layer is retained).
    """
    _check(M, N, m_max)
    E = [tuple(r) for r in subset_matrix(N)]
    layers = [None] * (M + 1)
    layers[M] = _terminal(M, N)
    for m in range(M - 1, -1, -1):
        nxt = layers[m + 1]
        layers[m] = {node: bellman_value(_successor_costs(nxt, node, E), N).value
                     for node in layer_nodes(m, N)}
        if not keep_layers and m + 2 <= M:
            layers[m + 2] = None
    return DPTable(layers, M, N, "exact")


def solve_fixed_adversary(M: int, N: int = 4, m_max: int | None = None) -> DPTable:
    """Lower game: the adversary is fixed to the balanced comb.

    The comb subset C and its complement are played with probability 1/2
    each. Since ``alpha(C) + alpha(C^c) = 1`` the player's mixture drops out
    and ``V(m, x) = (V(m+1, x+e_C) + V(m+1, x+e_{C^c}))/2 - 1/2``.
    """
    _check(M, N, m_max)
    if N not in (3, 4):
        raise DomainError("the comb adversary is defined for N in (3, 4)")
    layers = [None] * (M + 1)
    layers[M] = _terminal(M, N)
    for m in range(M - 1, -1, -1):
        nxt = layers[m + 1]
        nodes = layer_nodes(m, N)
        C = comb_masks(np.asarray(nodes, dtype=float))
        cur = {}
        for node, cm in zip(nodes, C):
            k1, o1 = normalize([a + b for a, b in zip(node, cm)])
            k2, o2 = normalize([a + (not b) for a, b in zip(node, cm)])
            cur[node] = 0.5 * (nxt[k1] + o1 + nxt[k2] + o2) - 0.5
        layers[m] = cur
        layers[m + 1] = None if m + 1 < M else layers[m + 1]
    return DPTable(layers, M, N, "lower")


def matching_policy(N: int, T: float = 1.0) -> Callable:
    """Probability-matching mixtures for a batch of states at round m.

    Returns ``f(m, M, X)`` giving the gradient of the finite-horizon value at
    ``(m T / M, X sqrt(T / M))``. Decisions are made at rounds
    ``m = 0, ..., M - 1`` so the evaluation time stays below the horizon; a
    half-step retreat guards the horizon itself. Negative weights (round-off)
    are clamped to zero; ``f.clamps`` counts those below -1e-10.
    """
    from .value3 import gradient3_batch
    from .value4 import gradient4_batch

    def policy(m: int, M: int, X: np.ndarray) -> np.ndarray:
        t = m * T / M
        if t >= T:
            t = (m - 0.5) * T / M
        Xs = np.asarray(X, dtype=float) * np.sqrt(T / M)
        if N == 4:
            g = gradient4_batch(t, T, Xs)
        elif N == 3:
            g = gradient3_batch(t, T, Xs)
        else:
            raise DomainError("probability matching is available for N in (3, 4)")
        policy.clamps += int(np.sum(g < -1e-10))
        g = np.maximum(g, 0.0)
        return g / g.sum(1, keepdims=True)

    policy.clamps = 0
    return policy


def solve_fixed_player(M: int, N: int = 4, m_max: int | None = None,
                       policy: Callable | None = None) -> DPTable:
    """Upper game: the player is fixed to probability matching.

    ``V(m, x) = max_J [V(m+1, x + e_J) - alpha*(J)]`` with ``alpha*`` the
    gradient of the finite-horizon value at the scaled state. Gradients are
    evaluated once per (round, normalized node), batched over the layer.
    """
    _check(M, N, m_max)
    policy = matching_policy(N) if policy is None else policy
    S = subset_matrix(N)
    E = [tuple(r) for r in S]
    layers = [None] * (M + 1)
    layers[M] = _terminal(M, N)
    for m in range(M - 1, -1, -1):
        nxt = layers[m + 1]
        nodes = layer_nodes(m, N)
        alpha = policy(m, M, np.asarray(nodes, dtype=float))
        pen = alpha @ S.T                           # (nodes, 2^N): alpha(J)
        cur = {}
        for node, pj in zip(nodes, pen):
            cur[node] = float(np.max(_successor_costs(nxt, node, E) - pj))
        layers[m] = cur
        layers[m + 1] = None if m + 1 < M else layers[m + 1]
    return DPTable(layers, M, N, "upper")


def convergence_table(Ms, N: int = 4, lower: bool = True, upper: bool = True,
                      m_max: int | None = None) -> list:
    """Rows ``(M, V/sqrt(M), V_lower/sqrt(M), V_upper/sqrt(M))``.

    Entries that are not requested, or not defined for this N, are None.
    """
    rows = []
    for M in Ms:
        v = solve_exact(M, N, m_max).root
        lo = solve_fixed_adversary(M, N, m_max).root if lower and N in (3, 4) else None
        hi = solve_fixed_player(M, N, m_max).root if upper and N in (3, 4) else None
        r = np.sqrt(M)
        rows.append((M, v / r, None if lo is None else lo / r, None if hi is None else hi / r))
    return rows
