import numpy as np
import pytest

from expert_lab.core import ExpertSubset
from expert_lab.errors import DomainError
from expert_lab.pde_check import (fd_validate, laplace_bridge, random_states, ratio_check,
                                  residual_profile, terminal_probe, theta_inequality_check)
from expert_lab.value4 import geometric_value4, value4

X0 = np.array([0.0, 0.5, 1.0, 2.0])


def test_residual_profile_comb_attains_zero():
    rp = residual_profile(0, 1, X0)
    comb = rp.comb.mask
    assert abs(rp.residual(rp.comb)) < 1e-10
    assert abs(rp.residual(rp.comb.complement())) < 1e-10
    assert comb in rp.argmax and rp.scaled.max() < 1e-10
    assert all(abs(rp.q[m]) < 1e-10 for m in rp.crossing)
    assert rp.residual(ExpertSubset(0, 4)) == pytest.approx(rp.dt)


def test_residual_scaling_is_scale_free():
    a = residual_profile(0, 1, X0).scaled
    b = residual_profile(0, 4, 2 * X0).scaled
    assert np.allclose(a, b, atol=1e-12)


def test_residual_errors():
    with pytest.raises(DomainError):
        residual_profile(1, 1, X0)


def test_theta_inequality():
    lhs, rhs, cos_ok = theta_inequality_check(0, 1, X0)
    assert lhs <= rhs + 1e-12 and cos_ok
    lhs, rhs, _ = theta_inequality_check(0, 1e4, X0)
    assert lhs == pytest.approx(1, abs=1e-12) and rhs == pytest.approx(1, abs=1e-12)
    with pytest.raises(DomainError):
        theta_inequality_check(0, 1, np.ones(4))


def test_terminal_probe():
    (k, gap), = terminal_probe(np.zeros(4), [0.01])
    assert gap == pytest.approx(0.5 * np.sqrt(0.01 * np.pi / 2), abs=1e-12)
    (_, g3), (_, g5) = terminal_probe(X0, [1e-3, 1e-5])
    assert g3 < 0.05 and g5 < 0.005
    with pytest.raises(DomainError):
        terminal_probe(X0, [0.0])


def test_laplace_bridge():
    r = laplace_bridge(np.array([0, 0, 0, 1.0]), 1.0)
    assert r.gap < 1e-4 and r.tail_bound < 1e-10
    assert r.rhs == pytest.approx(geometric_value4([0, 0, 0, 1]))
    with pytest.raises(DomainError):
        laplace_bridge(X0, -1.0)


def test_ratio_check():
    r = ratio_check()
    assert r["n4"] == pytest.approx(2 / np.sqrt(np.pi), abs=1e-12)
    assert r["n3"] == pytest.approx(2 / np.sqrt(np.pi), abs=1e-12)


def test_fd_validate():
    rep = fd_validate(0.2, 1, X0)
    assert rep.grad_err < 1e-8 and rep.hess_err < 1e-4 and rep.dt_err < 1e-6
    assert rep.grad_sum_err < 1e-12 and rep.hess_row_sum < 1e-12
    with pytest.raises(DomainError):
        fd_validate(0.2, 1, X0, h=1e-1)


def test_random_states_gap():
    X = random_states(np.random.default_rng(0), 50, min_gap=0.1)
    assert X.shape == (50, 4) and np.diff(np.sort(X, 1), axis=1).min() > 0.1


def test_value_is_subsolution_along_every_direction():
    """Residuals q_J <= 0 for all J also at small time to maturity."""
    rng = np.random.default_rng(1)
    for x in rng.uniform(-1, 1, (20, 4)):
        rp = residual_profile(0.99, 1, x)
        assert rp.scaled.max() < 1e-9
