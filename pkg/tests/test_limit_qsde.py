import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from wclimit import dyson as dy
from wclimit import limit_qsde as lq
from wclimit.correlation import CorrelationConstants, ExponentialKernel, GaussianKernel
from wclimit.errors import DivergenceError

EXP = ExponentialKernel(1.0, 0.0)
SM = np.array([[0, 1], [0, 0]], dtype=complex)  # |e> -> |g> on basis (|g>, |e>)
PE = np.diag([0.0, 1.0]).astype(complex)


def test_qubit_damping_frozen():
    c = lq.limit_coefficients(lq.qubit_damping(), EXP)
    assert c.gamma == 2.0
    assert np.allclose(c.L, -1j * SM)
    assert np.allclose(c.W, np.eye(2))
    assert np.allclose(c.H, 0)
    assert np.allclose(c.L00, -SM.conj().T @ SM)
    assert max(c.residuals().values()) < 1e-15


def test_excited_population_decays_at_gamma():
    c = lq.limit_coefficients(lq.qubit_damping(), EXP)
    for t in (0.1, 0.5, 2.0):
        J = lq.lindblad_semigroup(c, PE, t)
        assert np.allclose(J, math.exp(-2 * t) * PE, atol=1e-13)
    assert lq.lindblad_semigroup(c, PE, 0.5)[1, 1] == pytest.approx(0.36787944117144233, rel=1e-13)


@given(st.integers(0, 10_000), st.sampled_from([2, 3]), st.floats(-1.5, 1.5))
def test_structural_identities(seed, dim, sigma):
    m = ExponentialKernel(0.8, sigma)
    s = lq.random_system(np.random.default_rng(seed), dim, m.K)
    c = lq.limit_coefficients(s, m)
    assert max(c.residuals().values()) < 1e-10 * c.resolvent_cond
    rep = lq.evans_hudson_report(c)
    assert rep["identity"] < 1e-11 and rep["adjoint"] < 1e-11 and rep["structural"] < 1e-11
    assert rep["lindblad_margin"] > -1e-10
    assert max(lq.normal_order_identity_check(c, s, m.kappa_plus).values()) < 1e-10 * c.resolvent_cond


def test_partial_sums_converge_within_bound():
    m = GaussianKernel(0.7, 0.4)
    s = lq.random_system(np.random.default_rng(11), 3, m.K, margin=0.6)
    c = lq.limit_coefficients(s, m)
    for ab in lq.ROLES:
        for R in (1, 3, 6, 12):
            err = np.linalg.norm(lq.partial_sum(s, m.kappa_plus, *ab, R) - c.coef(*ab), 2)
            assert err <= lq.partial_sum_bound(s, m.kappa_plus, *ab, R) * (1 + 1e-9) + 1e-13


def test_divergent_series_refused():
    s = dy.SystemModel(np.zeros((1, 1)), np.zeros((1, 1)), np.zeros((1, 1)), np.array([[2.0]]))
    with pytest.raises(DivergenceError):
        lq.limit_coefficients(s, EXP)
    c = lq.limit_coefficients(s, EXP, require_series=False)
    assert abs(c.W[0, 0]) == pytest.approx(1.0)


def test_kappa_override():
    s = lq.random_system(np.random.default_rng(5), 2, 1.0)
    c = lq.limit_coefficients(s, CorrelationConstants(2.0, 1.0, 1.0, 0.0, 1.0), kappa=0.5 + 0.5j)
    assert c.gamma == pytest.approx(1.0)
    assert c.kappa_minus == pytest.approx(0.5 - 0.5j)


def test_superop_row_major():
    A = np.array([[1, 2], [3, 4]], dtype=complex)
    S = lq.superop(lambda X: A @ X, 2)
    X = np.array([[0, 1j], [2, -1]])
    assert np.allclose(lq.apply_superop(S, X), A @ X)
    assert np.allclose(S, np.kron(A, np.eye(2)))


def test_predual_trace_duality():
    c = lq.limit_coefficients(lq.random_system(np.random.default_rng(3), 2, 1.0), EXP)
    S = lq.semigroup_matrix(c, 0.4)
    P = lq.predual_matrix(S)
    rng = np.random.default_rng(0)
    A, B = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(2))
    lhs = np.trace(A.conj().T @ lq.apply_superop(S, B))
    rhs = np.trace(lq.apply_superop(P, A).conj().T @ B)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_vacuum_ode_is_semigroup_of_identity_sandwich():
    c = lq.limit_coefficients(lq.qubit_damping(), EXP)
    p = np.array([0, 1.0])
    # <e| V_t |e> = exp(-t gamma/2)
    assert lq.matrix_element_ode(c, p, p, t=1.0) == pytest.approx(math.exp(-1.0), rel=1e-13)


def test_propagator_against_expm_single_piece():
    c = lq.limit_coefficients(lq.random_system(np.random.default_rng(8), 2, 1.0), EXP)
    amps = (dy.SmearedAmplitude((0, 2), 0.4 - 0.1j), dy.SmearedAmplitude((0, 2), 0.2j))
    h1, h2c = 0.4 - 0.1j, np.conj(0.2j)
    G = c.L00 + h1 * c.L10 + h2c * c.L01 + h1 * h2c * c.L11
    assert np.allclose(lq.propagator(c, amps, 1.5), expm(1.5 * G), atol=1e-13)


def test_limit_overlap_closed_form():
    a = (dy.SmearedAmplitude((0, 1), 1.0), dy.SmearedAmplitude((0.5, 2), 1j))
    g = 2.0
    expect = np.exp(1.0 * np.conj(1j) * 0.5 / g - 0.5 * 1 / g - 0.5 * 1.5 / g)
    assert lq.limit_overlap(a, g) == pytest.approx(expect, rel=1e-14)


def test_chaotic_expansion_and_dyson_limit_match_ode():
    m = ExponentialKernel(1.0, 0.3)
    s = lq.random_system(np.random.default_rng(1), 2, m.K, margin=0.3)
    c = lq.limit_coefficients(s, m)
    amps = (dy.SmearedAmplitude((0, 1), 0.5 + 0.2j), dy.SmearedAmplitude((0.2, 1.5), -0.3j))
    p1 = np.array([1, 1j]) / math.sqrt(2)
    p2 = np.array([0.6, 0.8])
    t = 0.3
    ode = lq.matrix_element_ode(c, p1, p2, amps, t, with_overlap=False)
    assert abs(sum(lq.chaotic_levels(c, amps, p1, p2, t, 30)) - ode) < 1e-12
    assert abs(sum(lq.dyson_limit_levels(s, m, amps, p1, p2, t, 40)) - ode) < 1e-8
    # small-t chaotic terms are ordered by size
    small = [abs(x) for x in lq.chaotic_levels(c, amps, p1, p2, 0.05, 4)]
    assert small[1] > small[2] > small[3]


def test_conditional_cp_margin_detects_non_lindblad():
    bad = lq.superop(lambda X: -X + 2 * np.diag(np.diag(X)) * 0 - np.array([[0, 1], [1, 0]]) @ X @ np.array([[0, 1], [1, 0]]), 2)
    assert lq.conditional_cp_margin(bad, 2) < -0.5
