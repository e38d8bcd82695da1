"""Reservoir two-point functions G(t) and the constants derived from them.

Every kernel satisfies G(-t) = conj(G(t)), so it is fixed by its values on
t >= 0.  Families only need to supply G on t >= 0 and the tail integral
F(x) = int_x^inf G for x >= 0; everything else (integrals over arbitrary
intervals, the constants kappa_+, kappa_-, gamma, sigma, K) follows.

Test functions f_j are taken proportional to the reservoir function g, so
the kernel between f_j and f_k is a constant multiple of G.  The couplings
c_j = (f_j|g) fix those multiples.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, interpolate, special

from .errors import IntegrationError, ModelError

QUAD_RTOL = 1e-10


@dataclass(frozen=True)
class CorrelationConstants:
    gamma: float
    kappa_plus: complex
    kappa_minus: complex
    sigma: float
    K: float
    error: float = 0.0


class CorrelationModel:
    """Base class.  Subclasses implement ``_kernel_pos`` and ``_tail_pos``."""

    family: str = "abstract"
    scale: float = 1.0

    def params(self) -> dict:
        return {}

    def _kernel_pos(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _tail_pos(self, x: np.ndarray) -> np.ndarray:
        """int_x^inf G(s) ds for x >= 0 (x may be +inf)."""
        raise NotImplementedError

    def _abs_tail_pos(self, x: np.ndarray) -> np.ndarray:
        """int_x^inf |G(s)| ds for x >= 0."""
        raise NotImplementedError

    def kernel(self, t):
        t = np.asarray(t, dtype=float)
        pos = self._kernel_pos(np.abs(t))
        return np.where(t >= 0, pos, np.conj(pos))

    def __call__(self, t):
        return self.kernel(t)

    @cached_property
    def kappa_plus(self) -> complex:
        return complex(self._tail_pos(np.zeros(1))[0])

    def tail(self, x):
        """F(x) = int_x^inf G for any real x."""
        x = np.asarray(x, dtype=float)
        kp = self.kappa_plus
        pos = self._tail_pos(np.abs(x))
        return np.where(x >= 0, pos, kp + np.conj(kp - pos))

    def integral(self, a, b):
        """int_a^b G, vectorised; a and b may be infinite."""
        return self.tail(a) - self.tail(b)

    def abs_integral(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        K = self.K

        def cum(x):
            # int_{-inf}^x |G|
            at = self._abs_tail_pos(np.abs(x))
            return np.where(x >= 0, 2 * K - at, at)

        return cum(b) - cum(a)

    @cached_property
    def K(self) -> float:
        return float(np.real(self._abs_tail_pos(np.zeros(1))[0]))

    @cached_property
    def constants(self) -> CorrelationConstants:
        return derive_constants(self)


@dataclass(frozen=True, eq=False)
class ExponentialKernel(CorrelationModel):
    """G(t) = exp(-|t|/tau - i sigma0 t)."""

    tau: float = 1.0
    sigma0: float = 0.0
    family = "exponential"

    def __post_init__(self):
        if self.tau <= 0:
            raise ModelError("exponential kernel needs tau > 0")

    @property
    def scale(self) -> float:
        return self.tau

    def params(self):
        return {"tau": self.tau, "sigma0": self.sigma0}

    @property
    def rate(self) -> complex:
        return 1.0 / self.tau + 1j * self.sigma0

    def _kernel_pos(self, t):
        return np.exp(-self.rate * t)

    def _tail_pos(self, x):
        with np.errstate(over="ignore", invalid="ignore"):
            v = np.exp(-self.rate * x) / self.rate
        return np.where(np.isinf(x), 0.0, v)

    def _abs_tail_pos(self, x):
        return self.tau * np.exp(-x / self.tau)


@dataclass(frozen=True, eq=False)
class GaussianKernel(CorrelationModel):
    """G(t) = exp(-t^2/(2 tau^2) - i sigma0 t).

    Tail integrals use the Faddeeva function: for x >= 0,
    int_x^inf G = tau sqrt(pi/2) G(x) w(i (x + i sigma0 tau^2)/(tau sqrt 2)),
    which stays bounded because the argument of w lies in the upper half plane.
    """

    tau: float = 1.0
    sigma0: float = 0.0
    family = "gaussian"

    def __post_init__(self):
        if self.tau <= 0:
            raise ModelError("gaussian kernel needs tau > 0")

    @property
    def scale(self) -> float:
        return self.tau

    def params(self):
        return {"tau": self.tau, "sigma0": self.sigma0}

    def _kernel_pos(self, t):
        return np.exp(-0.5 * (t / self.tau) ** 2 - 1j * self.sigma0 * t)

    def _tail_pos(self, x):
        x = np.asarray(x, dtype=float)
        fin = np.where(np.isinf(x), 0.0, x)
        z = 1j * (fin + 1j * self.sigma0 * self.tau ** 2) / (self.tau * math.sqrt(2))
        v = self.tau * math.sqrt(math.pi / 2) * self._kernel_pos(fin) * special.wofz(z)
        return np.where(np.isinf(x), 0.0, v)

    def _abs_tail_pos(self, x):
        return self.tau * math.sqrt(math.pi / 2) * special.erfc(np.asarray(x) / (self.tau * math.sqrt(2)))


class TabulatedKernel(CorrelationModel):
    """Cubic interpolation of samples of G on t >= 0, zero past the last sample.

    ``tail_bound`` declares an upper bound on int_{t_max}^inf |G|; it is
    carried into the error estimate of the derived constants.
    """

    family = "tabulated"

    def __init__(self, t: Sequence[float], values: Sequence[complex], tail_bound: float = 0.0):
        t = np.asarray(t, dtype=float)
        v = np.asarray(values, dtype=complex)
        if t.ndim != 1 or t.shape != v.shape or len(t) < 4:
            raise ModelError("tabulated kernel needs at least 4 matching (t, G) samples")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ModelError("tabulated kernel must start at t=0 with increasing times")
        if abs(v[0].imag) > 1e-12 * max(1.0, abs(v[0])):
            raise ModelError("G(0) must be real for a kernel with G(-t) = conj(G(t))")
        self.t = t
        self.values = v
        self.tail_bound = float(tail_bound)
        self._re = interpolate.CubicSpline(t, v.real)
        self._im = interpolate.CubicSpline(t, v.imag)
        self.t_max = float(t[-1])
        self.scale = float(t[-1]) / 8

    @classmethod
    def from_csv(cls, path: str, tail_bound: float = 0.0) -> "TabulatedKernel":
        ts, vals = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    t, re, im = (float(x) for x in row[:3])
                except ValueError:
                    continue  # header
                ts.append(t)
                vals.append(re + 1j * im)
        return cls(ts, vals, tail_bound)

    def params(self):
        return {"samples": len(self.t), "t_max": self.t_max, "tail_bound": self.tail_bound}

    def _kernel_pos(self, t):
        t = np.asarray(t, dtype=float)
        inside = t <= self.t_max
        tt = np.where(inside, t, 0.0)
        return np.where(inside, self._re(tt) + 1j * self._im(tt), 0.0)

    def _tail_pos(self, x):
        x = np.asarray(x, dtype=float)
        xx = np.clip(np.where(np.isinf(x), self.t_max, x), 0.0, self.t_max)
        re = self._re.integrate(0, self.t_max) - np.vectorize(lambda a: self._re.integrate(0, a))(xx)
        im = self._im.integrate(0, self.t_max) - np.vectorize(lambda a: self._im.integrate(0, a))(xx)
        return re + 1j * im

    def _abs_tail_pos(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        knots = self.t

        def one(a):
            if a >= self.t_max or np.isinf(a):
                return 0.0
            pts = [k for k in knots if a < k < self.t_max]
            val, err = integrate.quad(lambda s: abs(self._kernel_pos(np.array(s))), a, self.t_max,
                                      points=pts[:200] or None, limit=500, epsrel=QUAD_RTOL)
            return val

        return np.array([one(a) for a in x])


class CallableKernel(CorrelationModel):
    """A user supplied G on t >= 0, integrated by adaptive quadrature."""

    family = "callable"

    def __init__(self, fn: Callable[[float], complex], scale: float = 1.0, name: str = "callable"):
        self.fn = fn
        self.scale = float(scale)
        self.name = name

    def params(self):
        return {"name": self.name, "scale": self.scale}

    def _kernel_pos(self, t):
        t = np.asarray(t, dtype=float)
        return np.vectorize(lambda s: complex(self.fn(float(s))), otypes=[complex])(t)

    def _quad_tail(self, a: float, fn) -> tuple[float, float]:
        if np.isinf(a):
            return 0.0, 0.0
        val, err = integrate.quad(fn, a, np.inf, epsrel=QUAD_RTOL, epsabs=1e-13, limit=500)
        if err > 1e-8 * max(1.0, abs(val)):
            raise IntegrationError(f"tail quadrature reached only {err:.2e}")
        return val, err

    def _tail_pos(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = []
        for a in x:
            re, _ = self._quad_tail(a, lambda s: complex(self.fn(s)).real)
            im, _ = self._quad_tail(a, lambda s: complex(self.fn(s)).imag)
            out.append(re + 1j * im)
        return np.array(out)

    def _abs_tail_pos(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([self._quad_tail(a, lambda s: abs(complex(self.fn(s))))[0] for a in x])


def derive_constants(model: CorrelationModel) -> CorrelationConstants:
    kp = model.kappa_plus
    km = complex(np.conj(kp))  # int_{-inf}^0 G = conj(int_0^inf G) by the symmetry of G
    gamma = (kp + km).real
    err = getattr(model, "tail_bound", 0.0)
    return CorrelationConstants(gamma=float(gamma), kappa_plus=kp, kappa_minus=km,
                                sigma=float(kp.imag), K=model.K, error=float(err))


def kernel_from_config(spec: dict) -> CorrelationModel:
    family = spec.get("family", "exponential")
    params = spec.get("params", {})
    if family == "exponential":
        return ExponentialKernel(float(params.get("tau", 1.0)), float(params.get("sigma0", 0.0)))
    if family == "gaussian":
        return GaussianKernel(float(params.get("tau", 1.0)), float(params.get("sigma0", 0.0)))
    if family == "tabulated":
        if "csv" not in spec:
            raise ModelError("tabulated kernel needs a 'csv' path")
        return TabulatedKernel.from_csv(spec["csv"], float(params.get("tail_bound", 0.0)))
    raise ModelError(f"unknown kernel family '{family}'")


def symmetry_defect(model: CorrelationModel, samples: int = 101, span: float = 10.0) -> float:
    t = np.linspace(0.0, span * model.scale, samples)
    return float(np.max(np.abs(model.kernel(-t) - np.conj(model.kernel(t)))))


def rescaled_kernel(model: CorrelationModel, lam: float) -> Callable:
    """G_lambda(t, s) = G((t - s)/lambda^2) / lambda^2."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    l2 = lam * lam

    def g(t, s):
        return model.kernel((np.asarray(t) - np.asarray(s)) / l2) / l2

    return g


def rescaled_integral(model: CorrelationModel, lam: float, s: float = 0.0, width: float = 60.0) -> complex:
    """Quadrature of int G_lambda(t, s) dt over the real line.

    The window of +-width*scale*lambda^2 around s is integrated numerically;
    the far tails are added from the kernel's tail function.
    """
    g = rescaled_kernel(model, lam)
    half = width * model.scale * lam * lam
    total = 0j
    for a, b in ((s - half, s), (s, s + half)):
        re, _ = integrate.quad(lambda t: float(np.real(g(t, s))), a, b, epsrel=1e-12, limit=400)
        im, _ = integrate.quad(lambda t: float(np.imag(g(t, s))), a, b, epsrel=1e-12, limit=400)
        total += re + 1j * im
    far = model.integral(width * model.scale, np.inf) + model.integral(-np.inf, -width * model.scale)
    return complex(total + far)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Kernels G_jk(t) = M[j, k] G(t) for a family of test functions f_j proportional to g.

    The limit Gram matrix is (f_j|f_k) = int G_jk = gamma * M[j, k].
    """

    base: CorrelationModel
    M: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=complex))
        if np.max(np.abs(M - M.conj().T)) > 1e-12:
            raise ModelError("kernel matrix coefficients must be Hermitian")
        object.__setattr__(self, "M", M)

    @classmethod
    def from_couplings(cls, base: CorrelationModel, couplings: Sequence[complex]) -> "KernelMatrix":
        """f_j = (conj(c_j)/gamma) g, so that (f_j|g) = c_j."""
        c = np.asarray(couplings, dtype=complex)
        gamma = base.constants.gamma
        if gamma <= 0:
            raise ModelError("couplings need a kernel with gamma > 0")
        return cls(base, np.outer(c, c.conj()) / gamma ** 2)

    @property
    def size(self) -> int:
        return self.M.shape[0]

    def kernel(self, j: int, k: int, t):
        return self.M[j, k] * self.base.kernel(t)

    @property
    def limit_gram(self) -> np.ndarray:
        return self.base.constants.gamma * self.M


def interval_overlap(a: tuple[float, float], b: tuple[float, float]) -> float:
    return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))


def smeared_inner(kernels: KernelMatrix, j: int, k: int, Ij, Ik, lam: float) -> complex:
    """(1/lambda^2) int_{Ij} int_{Ik} G_jk((u - v)/lambda^2) du dv.

    With x = u - v the double integral becomes int G(y) l(lambda^2 y) dy,
    l(x) = |Ij cap (Ik + x)| being a trapezoid; each linear piece is
    integrated by adaptive quadrature.
    """
    (Sj, Tj), (Sk, Tk) = Ij, Ik
    l2 = lam * lam
    brk = sorted({Sj - Tk, Sj - Sk, Tj - Tk, Tj - Sk})
    base = kernels.base

    def ell(x):
        return max(0.0, min(Tj, Tk + x) - max(Sj, Sk + x))

    total = 0j
    for a, b in zip(brk, brk[1:]):
        if b <= a:
            continue
        ya, yb = a / l2, b / l2
        pts = [0.0] if ya < 0 < yb else None
        for part in (np.real, np.imag):
            f = lambda y: float(part(base.kernel(y))) * ell(l2 * y)
            val, err = integrate.quad(f, ya, yb, points=pts, epsrel=QUAD_RTOL, epsabs=1e-14, limit=400)
            total += val if part is np.real else 1j * val
    return complex(kernels.M[j, k] * total)


def commutator_limit_check(kernels: KernelMatrix, intervals: Sequence[tuple[float, float]],
                           lams: Sequence[float]) -> list[dict]:
    """Pre-limit commutators against their limits, with absolute errors per lambda."""
    gram = kernels.limit_gram
    rows = []
    for j in range(kernels.size):
        for k in range(kernels.size):
            target = complex(gram[j, k] * interval_overlap(intervals[j], intervals[k]))
            for lam in lams:
                val = smeared_inner(kernels, j, k, intervals[j], intervals[k], lam)
                rows.append({"j": j, "k": k, "lambda": lam, "value": val, "limit": target,
                             "abs_err": abs(val - target)})
    return rows


def weyl_overlap(kernels: KernelMatrix, intervals: Sequence[tuple[float, float]], lam: float | None = None,
                 j: int = 0, k: int = 1) -> complex:
    """<W_lambda(j) Phi | W_lambda(k) Phi>, or its limit when ``lam`` is None."""

    def ip(a, b):
        if lam is None:
            return complex(kernels.limit_gram[a, b] * interval_overlap(intervals[a], intervals[b]))
        return smeared_inner(kernels, a, b, intervals[a], intervals[b], lam)

    cross = ip(j, k)
    nj = ip(j, j).real
    nk = ip(k, k).real
    return complex(np.exp(cross - 0.5 * nj - 0.5 * nk))
