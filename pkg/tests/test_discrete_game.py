from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np
import pytest
from scipy.optimize import linprog

from expert_lab.core import subset_matrix
from expert_lab.discrete_game import (bellman_value, convergence_table, layer_nodes, matching_policy,
                                      normalize, solve_exact, solve_fixed_adversary,
                                      solve_fixed_player)
from expert_lab.errors import BudgetError, DomainError

# exact lower-game values for M = 4, 9, 16, 25, 36 (rational oracle below)
LOWER_EXACT = {4: Fraction(5, 4), 9: Fraction(241, 128), 16: Fraction(20417, 8192),
               25: Fraction(26169483, 8388608), 36: Fraction(16115069799, 4294967296)}


def _linprog_value(c, n):
    """Primal LP: min z s.t. c_J - alpha(J) <= z, alpha in the simplex."""
    S = subset_matrix(n).astype(float)
    A_ub = np.hstack([-S, -np.ones((len(c), 1))])
    res = linprog(np.r_[np.zeros(n), 1.0], A_ub=A_ub, b_ub=-np.asarray(c),
                  A_eq=[np.r_[np.ones(n), 0.0]], b_eq=[1.0],
                  bounds=[(0, None)] * n + [(None, None)], method="highs")
    return res.fun


def test_bellman_examples():
    c = np.ones(16)
    c[0] = 0
    sol = bellman_value(c, 4)
    assert sol.value == pytest.approx(0.75, abs=1e-12)
    assert np.allclose(sol.alpha, 0.25)
    assert bellman_value(np.full(16, 2.5), 4).value == pytest.approx(2.5, abs=1e-12)
    assert bellman_value(subset_matrix(4).sum(1), 4).value == pytest.approx(3, abs=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_bellman_matches_linprog(n):
    rng = np.random.default_rng(n)
    S = subset_matrix(n)
    for _ in range(100):
        c = rng.normal(size=1 << n) * rng.choice([0.1, 1, 10])
        sol = bellman_value(c, n)
        assert sol.value == pytest.approx(_linprog_value(c, n), abs=1e-9)
        assert sol.alpha.min() >= 0 and sol.alpha.sum() == pytest.approx(1)
        # the returned mixture attains the value
        assert np.max(c - S @ sol.alpha) == pytest.approx(sol.value, abs=1e-9)


def test_bellman_errors():
    with pytest.raises(DomainError):
        bellman_value(np.ones(5), 2)
    with pytest.raises(DomainError):
        bellman_value([0, 1, np.inf, 0], 2)


def test_exact_small_values():
    assert solve_exact(1, 4).root == pytest.approx(0.75, abs=1e-9)
    assert solve_exact(1, 3).root == pytest.approx(2 / 3, abs=1e-9)
    assert solve_exact(2, 2).root == pytest.approx(0.5, abs=1e-9)


def test_two_round_two_experts_grid_oracle():
    mesh = np.linspace(0, 1, 1001)
    best = min(max(0.5, 1 - a, 1 - (1 - a), 0.5) for a in mesh)
    assert solve_exact(2, 2).root == pytest.approx(best, abs=1e-9)


def _brute_value(M, n):
    """Backward induction on raw states (no normalization) with a generic LP."""
    S = [tuple(r) for r in subset_matrix(n)]

    @lru_cache(maxsize=None)
    def V(m, x):
        if m == M:
            return float(max(x))
        c = [V(m + 1, tuple(a + b for a, b in zip(x, e))) for e in S]
        return _linprog_value(c, n)

    return V


@pytest.mark.parametrize("M, n", [(3, 2), (3, 3), (2, 4)])
def test_normalized_dp_matches_brute_force(M, n):
    tab = solve_exact(M, n, keep_layers=True)
    V = _brute_value(M, n)
    assert tab.root == pytest.approx(V(0, (0,) * n), abs=1e-9)
    rng = np.random.default_rng(0)
    for m in range(M + 1):
        for node in layer_nodes(m, n):
            x = tuple(int(v) for v in rng.permutation(node) + rng.integers(-2, 3))
            assert tab.value(m, x) == pytest.approx(V(m, x), abs=1e-9)
    with pytest.raises(DomainError):
        tab.value(1, (0,) * (n - 1) + (5,))


def test_equivariance():
    tab = solve_exact(4, 3, keep_layers=True)
    for x in [(0, 1, 3), (2, 2, 5), (1, 0, 0)]:
        for c in (-3, 4):
            for p in [(2, 0, 1), (1, 2, 0)]:
                y = tuple(x[i] + c for i in p)
                assert tab.value(3, y) == pytest.approx(tab.value(3, x) + c, abs=1e-12)


def _rational_lower(M):
    """Lower game in exact arithmetic on raw states with a direct comb rule."""

    @lru_cache(maxsize=None)
    def V(m, x):
        if m == M:
            return Fraction(max(x))
        order = sorted(range(4), key=lambda i: (x[i], i))
        C = {order[1], order[3]}
        up = tuple(v + (i in C) for i, v in enumerate(x))
        dn = tuple(v + (i not in C) for i, v in enumerate(x))
        return (V(m + 1, up) + V(m + 1, dn)) / 2 - Fraction(1, 2)

    return V(0, (0, 0, 0, 0))


@pytest.mark.parametrize("M", [1, 2, 3, 4, 9])
def test_lower_matches_rational_oracle(M):
    assert solve_fixed_adversary(M, 4).root == pytest.approx(float(_rational_lower(M)), abs=1e-12)


def test_lower_frozen_rationals_and_non_monotone_scaling():
    scaled = []
    for M, v in LOWER_EXACT.items():
        assert solve_fixed_adversary(M, 4).root == pytest.approx(float(v), abs=1e-12)
        scaled.append(v / Fraction(int(np.sqrt(M))))
    # exact values: the scaled lower game dips at M = 16 and 25
    assert scaled[1] > scaled[0] and scaled[2] < scaled[1] and scaled[4] > scaled[3]


def test_sandwich_small_M():
    for M in range(1, 6):
        lo, ex, hi = (solve_fixed_adversary(M, 4).root, solve_exact(M, 4).root,
                      solve_fixed_player(M, 4).root)
        assert lo <= ex + 1e-9 and ex <= hi + 1e-9
    for M in range(1, 5):
        assert solve_fixed_adversary(M, 3).root <= solve_exact(M, 3).root + 1e-9
        assert solve_exact(M, 3).root <= solve_fixed_player(M, 3).root + 1e-9


def test_matching_policy_is_distribution():
    pol = matching_policy(4)
    for m in range(5):
        P = pol(m, 5, np.asarray(layer_nodes(m, 4), float))
        assert np.allclose(P.sum(1), 1) and P.min() >= 0
    assert pol.clamps == 0


def test_layer_nodes_and_normalize():
    assert len(layer_nodes(2, 4)) == 10
    assert normalize([3, 1, 2]) == ((0, 1, 2), 1)


def test_budget_and_domain_errors():
    with pytest.raises(BudgetError):
        solve_exact(41, 4)
    with pytest.raises(DomainError):
        solve_exact(0, 4)
    with pytest.raises(DomainError):
        solve_fixed_adversary(2, 2)
    with pytest.raises(DomainError):
        solve_exact(2, 5)


def test_convergence_table_rows():
    rows = convergence_table([1, 4], N=3)
    assert rows[0][0] == 1 and rows[0][1] == pytest.approx(2 / 3)
    assert all(lo <= v + 1e-9 <= hi + 2e-9 for _, v, lo, hi in rows)
    assert convergence_table([2], N=2)[0][2:] == (None, None)
