import math

import pytest
from hypothesis import given, strategies as st

from wclimit import pule_bounds as pb
from wclimit.errors import DivergenceError, DomainError


def test_omega_frozen():
    assert pb.omega(-math.log(2), 0.0) == pytest.approx(math.e, abs=1e-12)
    assert pb.heisenberg_majorant(-math.log(2), 0.0, 0.0) == pytest.approx(math.exp(7 / 3), rel=1e-12)


def test_series_reaches_omega():
    p = pb.BoundParameters(-0.7, 0.5, 0.5)
    assert abs(sum(pb.level_bounds(60, p)) - pb.omega(-0.7, 0.5)) < 1e-8


@pytest.mark.parametrize("n", range(1, 16))
def test_recurrence_matches_enumeration(n):
    p = pb.BoundParameters(-0.4, 0.3, 0.1)
    assert pb.level_bound(n, p) == pytest.approx(pb.level_bound_enumeration(n, p), rel=1e-12)


def test_divergence_and_domain():
    with pytest.raises(DivergenceError):
        pb.BoundParameters(0.1, 0.0, 0.0)
    with pytest.raises(DivergenceError):
        pb.omega(0.0, 1.0)
    with pytest.raises(DomainError):
        pb.level_bound(0, pb.BoundParameters(-1, 0, 0))
    with pytest.raises(DomainError):
        pb.level_bound_enumeration(41, pb.BoundParameters(-1, 0, 0))


def test_scattering_free_branch():
    p = pb.BoundParameters.from_constants(K=1.0, C11=0.0, C=0.8, t=2.0, gamma=2.0)
    assert p.scattering_free and p.weight(3) == 0.0
    assert p.pair_weights == pytest.approx((1.6, 1.28))
    assert sum(pb.level_bounds(40, p)) == pytest.approx(pb.series_total(p), rel=1e-12)
    with pytest.raises(DomainError):
        pb.heisenberg_majorant(p.A, p.B, p.B_prime)


@given(st.floats(-3.0, -0.05), st.floats(-2.0, 1.0), st.integers(1, 25))
def test_tail_bound_is_an_upper_bound(A, B, N):
    p = pb.BoundParameters(A, B, B)
    a = pb.level_bounds(N, p)
    remainder = pb.omega(A, B) - sum(a)
    assert remainder <= pb.tail_bound(N, p) * (1 + 1e-9) + 1e-12 * pb.omega(A, B)


@given(st.floats(-3.0, -0.3), st.floats(-2.0, 0.5), st.floats(-2.0, 0.5))
def test_heisenberg_enumeration_brackets_majorant(A, B, Bp):
    val, missing = pb.heisenberg_enumeration(A, B, Bp, e_max=10)
    full = pb.heisenberg_majorant(A, B, Bp)
    assert val <= full * (1 + 1e-12)
    assert full - val <= missing * (1 + 1e-9) + 1e-12 * full


def test_bound_table_monotone():
    rows = pb.bound_table(pb.BoundParameters(-0.7, 0.5, 0.5), 12)
    cums = [r["cumulative"] for r in rows]
    assert all(a < b for a, b in zip(cums, cums[1:])) and cums[-1] < rows[0]["omega"]
