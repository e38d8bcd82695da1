import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wclimit import dyson as dy
from wclimit import limit_qsde as lq
from wclimit import simulator as sim
from wclimit.correlation import ExponentialKernel
from wclimit.errors import DomainError, InstabilityError
from wclimit.selftest import DEMO_AMPS, DEMO_PHI1, DEMO_PHI2, demo_system

EXP = ExponentialKernel(1.0, 0.0)
PE = np.diag([0.0, 1.0]).astype(complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


@pytest.fixture(scope="module")
def damping():
    return lq.limit_coefficients(lq.qubit_damping(), EXP)


@pytest.fixture(scope="module")
def demo():
    return lq.limit_coefficients(demo_system(), EXP)


def test_ito_audit_passes_and_fault_fails():
    rep = sim.ito_table_audit(sim.build_slices(2.0, 0.01))
    assert rep["passed"] and rep["table_pairs"] == 4 and rep["vanishing_pairs"] == 12
    assert rep["max_residual"] == 0.0
    bad = sim.ito_table_audit(sim.build_slices(2.0, 0.01, ito_constant=1.5))
    assert not bad["passed"]


def test_bad_slice_parameters():
    with pytest.raises(DomainError):
        sim.build_slices(0.0, 0.1)
    with pytest.raises(DomainError):
        sim.evolve_unitary(lq.limit_coefficients(lq.qubit_damping(), EXP), sim.build_slices(2.0, 0.3), t=1.0)


@pytest.mark.parametrize("tau", [1.0, 2.0])
def test_population_decay_rate_scales_with_gamma(tau):
    c = lq.limit_coefficients(lq.qubit_damping(), ExponentialKernel(tau, 0.0))
    assert c.gamma == pytest.approx(2 * tau)
    oracle = math.exp(-c.gamma * 0.5)
    errs = [abs(sim.evolve_heisenberg(c, sim.build_slices(c.gamma, dt), PE, t=0.5).operator[1, 1] - oracle)
            for dt in (0.01, 0.005)]
    assert errs[1] < errs[0] < 0.05
    assert 1.8 < errs[0] / errs[1] < 2.2


@pytest.mark.parametrize("scheme", ["euler", "discrete"])
def test_vacuum_first_order(demo, scheme):
    X = np.array([[0.3, 1 - 0.2j], [1 + 0.2j, -0.7]])
    oracle = lq.lindblad_semigroup(demo, X, 1.0)
    errs = sim.vacuum_heisenberg_errors(demo, X, [0.01, 0.005, 0.0025], 1.0, oracle, scheme)
    for r in sim.convergence_ratios(errs):
        assert 1.8 <= r <= 2.2


def test_coherent_first_order(demo):
    amps = DEMO_AMPS
    oracle = lq.matrix_element_ode(demo, DEMO_PHI1, DEMO_PHI2, amps, 1.0)
    errs = sim.coherent_errors(demo, amps, DEMO_PHI1, DEMO_PHI2, [0.01, 0.005, 0.0025], 1.0, oracle)
    for r in sim.convergence_ratios(errs):
        assert 1.8 <= r <= 2.2


def test_identity_preserved_in_vacuum(demo):
    J = sim.evolve_heisenberg(demo, sim.build_slices(demo.gamma, 0.01), np.eye(2), t=1.0).operator
    assert np.linalg.norm(J - np.eye(2)) < 1e-13


def test_identity_under_coherent_noise_is_overlap(demo):
    amps = DEMO_AMPS
    noise = sim.NoiseState(amps)
    sl = sim.build_slices(demo.gamma, 0.01)
    J = sim.evolve_heisenberg(demo, sl, np.eye(2), t=1.0, noise=noise).operator
    ov = np.prod([np.vdot(*noise.slice_vectors(sl, k)) for k in range(100)])
    assert np.linalg.norm(J - ov * np.eye(2)) < 1e-12


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_positivity_discrete_scheme(seed):
    rng = np.random.default_rng(seed)
    c = lq.limit_coefficients(lq.random_system(rng, 2, 1.0), EXP)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    J = sim.evolve_heisenberg(c, sim.build_slices(c.gamma, 0.01), A.conj().T @ A, t=0.3, scheme="discrete").operator
    assert np.linalg.eigvalsh(0.5 * (J + J.conj().T)).min() >= -1e-12
    assert np.linalg.norm(J - J.conj().T) < 1e-12


def test_heisenberg_equals_schrodinger(demo):
    amps = DEMO_AMPS
    noise = sim.NoiseState(amps)
    sl = sim.build_slices(demo.gamma, 0.02)
    for k in (1, 10, 50):
        J = sim.evolve_heisenberg(demo, sl, SZ, n_steps=k, noise=noise, scheme="discrete").operator
        h = np.vdot(DEMO_PHI1, J @ DEMO_PHI2)
        s = sim.schrodinger_matrix_elements(demo, sl, SZ, DEMO_PHI1, DEMO_PHI2, n_steps=k, noise=noise)[-1]
        assert abs(h - s) < 1e-8


def test_reduced_propagator_matches_full_space(demo):
    sl = sim.build_slices(demo.gamma, 0.05)
    rng = np.random.default_rng(4)
    vecs = [rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(6)]
    bras, kets = vecs[:3], vecs[3:]
    for consumed in range(4):
        full = sim.explicit_matrix_element(demo, sl, bras, kets, DEMO_PHI1, DEMO_PHI2, consumed)
        V = np.eye(2, dtype=complex)
        for k in range(consumed):
            V = sim.partial_element(sim.step_operator(demo, sl), bras[k], kets[k], 2) @ V
        rest = np.prod([np.vdot(bras[k], kets[k]) for k in range(consumed, 3)])
        assert abs(full - np.vdot(DEMO_PHI1, V @ DEMO_PHI2) * rest) < 1e-13


def test_polar_repair(damping):
    sl = sim.build_slices(damping.gamma, 0.01)
    raw = sim.evolve_unitary(damping, sl, n_steps=20)
    fixed = sim.evolve_unitary(damping, sl, n_steps=20, repair=True)
    assert raw.defects.max() > 1e-6
    assert fixed.defects.max() <= 1e-12
    assert raw.c_estimate <= 10 * sim.defect_constant(damping)


def test_zero_coefficients_give_identity():
    z = np.zeros((2, 2))
    c = lq.limit_coefficients(dy.SystemModel(z, z, z, z), EXP)
    tr = sim.evolve_unitary(c, sim.build_slices(c.gamma, 0.1), t=1.0)
    assert np.array_equal(tr.operator, np.eye(2))
    assert tr.defects.max() == 0.0


def test_instability_detected():
    # the per-step defect grows like dt^2 against a threshold linear in dt
    c = lq.limit_coefficients(lq.qubit_damping(), EXP)
    sim.evolve_unitary(c, sim.build_slices(c.gamma, 10.0), n_steps=1)
    with pytest.raises(InstabilityError):
        sim.evolve_unitary(c, sim.build_slices(c.gamma, 100.0), n_steps=1)


def test_records_per_step(damping):
    p = np.array([0, 1.0])
    tr = sim.evolve_unitary(damping, sim.build_slices(damping.gamma, 0.1), t=1.0, phi1=p, phi2=p)
    assert [r["step"] for r in tr.records] == list(range(1, 11))
    assert tr.records[-1]["time"] == pytest.approx(1.0)
    # <e|V|e> = (1 - gamma dt / 2)^k for the Euler slices
    assert tr.records[-1]["re"] == pytest.approx(0.9 ** 10, rel=1e-12)


def test_coevolute_generator(demo):
    from scipy.linalg import expm
    X = np.array([[1.0, 0.2j], [-0.2j, 0.5]])
    t = 0.5
    oracle = lq.apply_superop(expm(t * sim.coevolute_generator(demo)), X)
    errs = [np.linalg.norm(sim.coevolute(demo, sim.build_slices(demo.gamma, dt), X, t=t) - oracle)
            for dt in (0.01, 0.005)]
    assert 1.7 < errs[0] / errs[1] < 2.3
