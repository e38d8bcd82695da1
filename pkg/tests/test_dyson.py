import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wclimit import combinatorics as cb
from wclimit import dyson as dy
from wclimit import limit_qsde as lq
from wclimit.correlation import ExponentialKernel, GaussianKernel
from wclimit.errors import ConsistencyError, DivergenceError, DomainError, ValidationError

EXP = ExponentialKernel(1.0, 0.0)


def cs_of(*blocks):
    return dy.ContractionSet.from_partition(cb.SetPartition.from_blocks(blocks))


def test_system_validation():
    z = np.zeros((2, 2))
    with pytest.raises(ValidationError) as e:
        dy.SystemModel(z, z, np.array([[0, 1], [0, 0]]), z)
    assert e.value.field == "system.E_10"
    with pytest.raises(ValidationError):
        dy.SystemModel(np.array([[0, 1], [0, 0]]), z, z, z)
    s = dy.SystemModel(z, z, z, np.eye(2) * 2)
    with pytest.raises(DivergenceError):
        s.check_contraction(EXP)


def test_contraction_sets():
    assert [str(c) for c in dy.enumerate_contraction_sets(3, 1)] == ["(1,2)", "(1,3)", "(2,3)"]
    assert cs_of([1, 3], [2]).kind is cb.DiagramType.TYPE_II
    assert cs_of([1, 2, 3]).partition() == cb.SetPartition.from_blocks([[1, 2, 3]])
    with pytest.raises(DomainError):
        dy.ContractionSet(3, ((1, 2), (1, 3)))
    assert dy.diagram_roles(cb.SetPartition.from_blocks([[1, 2, 4], [3]])) == [(1, 0), (1, 1), (0, 0), (0, 1)]


def test_frozen_closed_forms():
    # n=2, one link: t - lam^2 (1 - exp(-t/lam^2)) for G = exp(-|v|)
    for t, lam in [(1.0, 1.0), (2.0, 0.5)]:
        exact = t - lam ** 2 * (1 - math.exp(-t / lam ** 2))
        assert dy.exact_exponential_contraction(2, cs_of([1, 2]), t, lam, 1.0) == pytest.approx(exact, rel=1e-13)
        assert dy.simplex_contraction_integral(2, cs_of([1, 2]), t, lam, EXP) == pytest.approx(exact, rel=1e-9)
    assert dy.exact_exponential_contraction(2, cs_of([1, 2]), 1.0, 1.0, 1.0).real == pytest.approx(
        0.36787944117144233, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("sigma", [0.0, 1.0])
def test_quadrature_vs_exponential_oracle(n, sigma):
    m = ExponentialKernel(1.0, sigma)
    for cs in dy.enumerate_contraction_sets(n):
        if cs.m == 0 or cs.m > 2:
            continue
        for lam in (1.0, 0.25):
            q = dy.simplex_contraction_integral(n, cs, 1.0, lam, m)
            ex = dy.exact_exponential_contraction(n, cs, 1.0, lam, m.rate)
            assert abs(q - ex) <= 3e-5 * abs(ex)


def test_limits():
    m = ExponentialKernel(1.0, 0.5)
    assert dy.type1_limit_value(3, 1, 2.0, m) == pytest.approx(m.kappa_plus * 2.0)
    assert dy.contraction_limit(cs_of([1, 3], [2]), 1.0, m) == 0
    val = dy.exact_exponential_contraction(3, cs_of([1, 2], [3]), 1.0, 0.05, m.rate)
    assert abs(val - dy.type1_limit_value(3, 1, 1.0, m)) < 5e-3


def test_type_two_rises_before_decaying_at_short_times():
    # at t=1 the correlation time at lambda=1 is comparable to t
    vals = [abs(dy.exact_exponential_contraction(3, cs_of([1, 3], [2]), 1.0, lam, 1.0)) for lam in (1, .5, .25, .125)]
    assert vals[0] < vals[1] and vals[1] > vals[2] > vals[3]


def test_bound_violation_raises():
    with pytest.raises(ConsistencyError):
        dy.simplex_contraction_integral(2, cs_of([1, 2]), 1.0, 0.5, _Liar())


class _Liar(ExponentialKernel):
    """Exponential kernel that under-reports K, so the bound must trip."""

    @property
    def K(self):
        return 0.1


def test_simplex_bound_gaussian():
    m = GaussianKernel(0.6, 0.8)
    for cs in dy.enumerate_contraction_sets(3):
        if cs.m == 0:
            continue
        for lam in (1.0, 0.5):
            v = dy.simplex_contraction_integral(3, cs, 1.5, lam, m)
            assert abs(v) <= m.K ** cs.m * dy.simplex_volume(3 - cs.m, 1.5)


def test_abs_integral_dominates():
    m = ExponentialKernel(1.0, 2.0)
    for cs in dy.enumerate_contraction_sets(3):
        if cs.m:
            assert abs(dy.simplex_contraction_integral(3, cs, 1.0, 0.5, m)) <= dy.abs_contraction_integral(
                3, cs, 1.0, 0.5, m) + 1e-12


def test_dressed_vacuum_is_plain():
    s = lq.random_system(np.random.default_rng(0), 2, 1.0)
    d = dy.dressed_coefficients(s, dy.VACUUM, dy.VACUUM, 0.5)
    for ab in dy.ROLES:
        assert np.allclose(d[ab], s.E(*ab))


def test_richardson_exact_on_quadratic():
    lams = [0.5, 0.25, 0.125]
    vals = [3 + 2 * l ** 2 - l ** 4 for l in lams]
    assert dy.richardson(lams, vals) == pytest.approx(3.0, abs=1e-12)


def test_validate_lambdas():
    with pytest.raises(ValidationError) as e:
        dy.validate_lambdas([0.5, 1.0])
    assert e.value.field == "experiment.lambdas"


def test_lambda_sweep_columns_and_decrease():
    rows = dy.lambda_sweep(2, 1.0, [1.0, 0.5, 0.25, 0.125], EXP, kind="I")
    assert list(rows[0]) == ["n", "diagram_id", "type", "lambda", "re", "im", "abs_err_vs_limit", "bound",
                             "bound_margin"]
    errs = [r["abs_err_vs_limit"] for r in rows]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert dy.lambda_sweep(2, 1.0, [1.0, 0.5], EXP, kind="II") == []


def test_dyson_level_zero_and_one():
    s = lq.random_system(np.random.default_rng(2), 2, 1.0)
    p1 = np.array([1, 0j])
    p2 = np.array([0.6, 0.8])
    assert dy.dyson_term_matrix_element(s, (dy.VACUUM, dy.VACUUM), EXP, 0, 1.0, 0.5, p1, p2) == 0.6
    # level one in the vacuum is -i t <p1|E_00|p2>
    v = dy.dyson_term_matrix_element(s, (dy.VACUUM, dy.VACUUM), EXP, 1, 1.0, 0.5, p1, p2)
    assert v == pytest.approx(-1j * np.vdot(p1, s.E00 @ p2), rel=1e-12)


def test_level_two_vacuum_matches_closed_form():
    s = lq.random_system(np.random.default_rng(4), 2, 1.0)
    p1 = np.array([0.6, 0.8j])
    p2 = np.array([1.0, 0])
    t, lam = 1.0, 0.5
    v = dy.dyson_term_matrix_element(s, (dy.VACUUM, dy.VACUUM), EXP, 2, t, lam, p1, p2)
    pair = dy.exact_exponential_contraction(2, cs_of([1, 2]), t, lam, 1.0)
    free = t * t / 2
    expect = -(np.vdot(p1, s.E00 @ s.E00 @ p2) * free + np.vdot(p1, s.E01 @ s.E10 @ p2) * pair)
    assert v == pytest.approx(expect, rel=1e-8)


@given(st.integers(0, 1000))
def test_bound_constants_nonnegative(seed):
    rng = np.random.default_rng(seed)
    s = lq.random_system(rng, 2, 1.0)
    amps = (dy.SmearedAmplitude((0, 1), complex(*rng.normal(size=2))), dy.VACUUM)
    c = dy.bound_constants(s, amps, EXP)
    assert c.C == max(c.C00, c.C01, c.C10, c.C11) and c.hbar2 == 0
