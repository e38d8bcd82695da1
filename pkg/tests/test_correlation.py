import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from wclimit import correlation as co
from wclimit.errors import ModelError


def test_exponential_constants():
    c = co.ExponentialKernel(1.0, 0.0).constants
    assert (c.gamma, c.kappa_plus, c.K) == pytest.approx((2.0, 1.0, 1.0))
    c = co.ExponentialKernel(1.0, 1.0).constants
    assert c.kappa_plus == pytest.approx(0.5 - 0.5j)
    assert c.kappa_minus == pytest.approx(0.5 + 0.5j)
    assert c.sigma == pytest.approx(-0.5)


@pytest.mark.parametrize("tau,sigma", [(0.7, 0.0), (0.7, 0.4), (1.3, -1.1)])
def test_gaussian_against_quad(tau, sigma):
    m = co.GaussianKernel(tau, sigma)
    re = integrate.quad(lambda t: math.exp(-t * t / (2 * tau * tau)) * math.cos(sigma * t), 0, np.inf)[0]
    im = integrate.quad(lambda t: -math.exp(-t * t / (2 * tau * tau)) * math.sin(sigma * t), 0, np.inf)[0]
    assert abs(m.kappa_plus - complex(re, im)) < 1e-10
    if sigma == 0:
        assert m.kappa_plus == pytest.approx(tau * math.sqrt(math.pi / 2), rel=1e-12)
    assert m.integral(0.3, 1.7) == pytest.approx(
        complex(*(integrate.quad(lambda t, f=f: f(m.kernel(t)), 0.3, 1.7)[0] for f in (np.real, np.imag))), abs=1e-10)


@given(st.floats(0.2, 3.0), st.floats(-2.0, 2.0))
def test_symmetry(tau, sigma):
    for m in (co.ExponentialKernel(tau, sigma), co.GaussianKernel(tau, sigma)):
        assert co.symmetry_defect(m) < 1e-14
        assert m.constants.gamma > 0
        assert m.K >= abs(m.kappa_plus) - 1e-12


@pytest.mark.parametrize("lam", [1.0, 0.5, 0.1])
def test_rescaled_integral_is_gamma(lam):
    for m in (co.ExponentialKernel(1.0, 0.5), co.GaussianKernel(0.8, 0.3)):
        assert abs(co.rescaled_integral(m, lam, s=0.3) - m.constants.gamma) < 1e-9


def test_tabulated_and_callable_match_exponential():
    ref = co.ExponentialKernel(0.5, 0.7)
    t = np.linspace(0, 12, 2401)
    tab = co.TabulatedKernel(t, ref.kernel(t), tail_bound=float(0.5 * np.exp(-24)))
    assert abs(tab.kappa_plus - ref.kappa_plus) < 1e-9
    cal = co.CallableKernel(lambda x: np.exp(-x / 0.5 - 0.7j * x), scale=0.5)
    assert abs(cal.kappa_plus - ref.kappa_plus) < 1e-9
    assert abs(cal.K - ref.K) < 1e-9


def test_tabulated_csv(tmp_path):
    p = tmp_path / "g.csv"
    t = np.linspace(0, 10, 1001)
    rows = "\n".join(f"{x},{math.exp(-x)},0" for x in t)
    p.write_text("# sampled kernel\nt,re,im\n" + rows + "\n")
    m = co.kernel_from_config({"family": "tabulated", "csv": str(p)})
    assert m.constants.gamma == pytest.approx(2.0, abs=2e-4)  # tail beyond t=10 is dropped


def test_bad_models():
    with pytest.raises(ModelError):
        co.ExponentialKernel(-1.0)
    with pytest.raises(ModelError):
        co.TabulatedKernel([0, 1, 2, 3], [1j, 1, 1, 1])
    with pytest.raises(ModelError):
        co.kernel_from_config({"family": "lorentzian"})


def test_commutator_limit_exact_exponential():
    base = co.ExponentialKernel(1.0, 0.0)
    km = co.KernelMatrix.from_couplings(base, [1.0])
    assert km.limit_gram[0, 0] == pytest.approx(1 / 2)
    for lam in (1.0, 0.5, 0.25):
        val = co.smeared_inner(km, 0, 0, (0, 1), (0, 1), lam)
        exact = 2 * (1 - lam ** 2 * (1 - math.exp(-1 / lam ** 2))) * km.M[0, 0]
        assert abs(val - exact) < 1e-10


def test_commutator_errors_shrink():
    base = co.ExponentialKernel(1.0, 0.6)
    km = co.KernelMatrix.from_couplings(base, [0.8 + 0.3j, -0.5 + 0.2j])
    rows = co.commutator_limit_check(km, [(0.0, 1.0), (0.5, 2.0)], [1.0, 0.5, 0.25, 0.125])
    for j in range(2):
        for k in range(2):
            errs = [r["abs_err"] for r in rows if (r["j"], r["k"]) == (j, k)]
            # oscillation can spoil lambda=1; below that the error is O(lambda^2)
            for a, b in zip(errs[1:], errs[2:]):
                assert 3.0 < a / b < 5.0
            assert errs[-1] < 0.01


def test_weyl_overlap_converges():
    base = co.ExponentialKernel(1.0, 0.0)
    km = co.KernelMatrix.from_couplings(base, [1.0, 0.5j])
    iv = [(0.0, 1.0), (0.5, 1.5)]
    lim = co.weyl_overlap(km, iv)
    errs = [abs(co.weyl_overlap(km, iv, lam) - lim) for lam in (0.5, 0.25, 0.125)]
    assert errs[0] > errs[1] > errs[2]


def test_interval_overlap():
    assert co.interval_overlap((0, 1), (0.5, 2)) == 0.5
    assert co.interval_overlap((0, 1), (2, 3)) == 0.0
