"""Limit objects: QSDE coefficients, Evans-Hudson maps, Lindblad semigroup.

The limit unitary solves dU = L_ab U (x) dA^ab with

    L_ab = -i sum_r (-i kappa)^(r-1) E^(r)_ab
         = -i E_ab - kappa E_a1 (1 + i kappa E_11)^(-1) E_1b,

kappa = kappa_+ and E^(r) the chain coefficients.  Equivalently
dU = {(W-1)/gamma dA^11 + L dA^10 - L^dag W dA^01 - (gamma/2 L^dag L + iH) dt} U.

Superoperators act on d x d matrices and are stored as d^2 x d^2 matrices
in the row-major vec convention, vec(A X B) = (A kron B^T) vec(X).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .correlation import CorrelationConstants
from .dyson import SmearedAmplitude, SystemModel, VACUUM
from .errors import DivergenceError, DomainError

ROLES = ((0, 0), (0, 1), (1, 0), (1, 1))


def _dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def chain_coefficient(sys: SystemModel, alpha: int, beta: int, r: int) -> np.ndarray:
    """E^(r)_ab: E_ab for r = 1, E_a1 E_11^(r-2) E_1b for r >= 2."""
    if r < 1:
        raise DomainError(f"chain length must be >= 1, got {r}")
    if r == 1:
        return sys.E(alpha, beta).copy()
    mid = np.linalg.matrix_power(sys.E11, r - 2)
    return sys.E(alpha, 1) @ mid @ sys.E(1, beta)


@dataclass(frozen=True, eq=False)
class QsdeCoefficients:
    dim: int
    L00: np.ndarray
    L01: np.ndarray
    L10: np.ndarray
    L11: np.ndarray
    W: np.ndarray
    L: np.ndarray
    H: np.ndarray
    kappa_plus: complex
    kappa_minus: complex
    gamma: float
    resolvent_cond: float = 1.0

    def coef(self, alpha: int, beta: int) -> np.ndarray:
        return getattr(self, f"L{alpha}{beta}")

    def residuals(self) -> dict[str, float]:
        """Structural identities that must hold to rounding."""
        d = self.dim
        eye = np.eye(d)
        g = self.gamma
        L, W, H = self.L, self.W, self.H
        nrm = lambda a: float(np.linalg.norm(a, 2))
        out = {
            "W_unitary": nrm(_dag(W) @ W - eye),
            "H_hermitian": nrm(H - _dag(H)),
            "L11_vs_W": nrm(self.L11 - (W - eye) / g) if g else 0.0,
            "L10_vs_L": nrm(self.L10 - L),
            "L01_vs_L": nrm(self.L01 + _dag(L) @ W),
            "L00_vs_LH": nrm(self.L00 + 0.5 * g * _dag(L) @ L + 1j * H),
            "unitarity_00": nrm(self.L00 + _dag(self.L00) + g * _dag(self.L10) @ self.L10),
            "unitarity_01": nrm(self.L01 + _dag(self.L10) + g * _dag(self.L10) @ self.L11),
            "unitarity_11": nrm(self.L11 + _dag(self.L11) + g * _dag(self.L11) @ self.L11),
        }
        return out


def _constants_of(source) -> CorrelationConstants:
    return source.constants if hasattr(source, "constants") else source


def limit_coefficients(sys: SystemModel, source, kappa: complex | None = None,
                       require_series: bool = True) -> QsdeCoefficients:
    """Closed-form limit coefficients.

    ``source`` is a correlation model or its constants; ``kappa`` overrides
    kappa_+ in the resolvent.  With ``require_series`` the chain series must
    converge, |kappa| ||E_11|| < 1.
    """
    c = _constants_of(source)
    kp = c.kappa_plus if kappa is None else complex(kappa)
    km = complex(np.conj(kp)) if kappa is not None else c.kappa_minus
    gamma = float((kp + km).real)
    d = sys.dim
    eye = np.eye(d)
    q = abs(kp) * np.linalg.norm(sys.E11, 2)
    if require_series and not q < 1:
        raise DivergenceError(f"|kappa_+| ||E_11|| = {q:.6g} >= 1; chain series diverges")
    M = eye + 1j * kp * sys.E11
    R = np.linalg.inv(M)
    cond = float(np.linalg.cond(M))
    L = {}
    for a, b in ROLES:
        L[(a, b)] = -1j * sys.E(a, b) - kp * sys.E(a, 1) @ R @ sys.E(1, b)
    W = (eye - 1j * km * sys.E11) @ R
    Lop = -1j * R @ sys.E10
    X = kp * sys.E01 @ R @ sys.E10
    H = sys.E00 + (X - _dag(X)) / 2j
    return QsdeCoefficients(d, L[(0, 0)], L[(0, 1)], L[(1, 0)], L[(1, 1)], W, Lop, H, kp, km, gamma, cond)


def partial_sum(sys: SystemModel, kappa: complex, alpha: int, beta: int, R: int) -> np.ndarray:
    """-i sum_{r<=R} (-i kappa)^(r-1) E^(r)_ab."""
    out = np.zeros((sys.dim, sys.dim), dtype=complex)
    for r in range(1, R + 1):
        out += (-1j * kappa) ** (r - 1) * chain_coefficient(sys, alpha, beta, r)
    return -1j * out


def partial_sum_bound(sys: SystemModel, kappa: complex, alpha: int, beta: int, R: int) -> float:
    """||E_a1|| ||E_1b|| |kappa| q^(R-1)/(1-q) with q = |kappa| ||E_11||, valid for R >= 1."""
    q = abs(kappa) * np.linalg.norm(sys.E11, 2)
    if not q < 1:
        raise DivergenceError("geometric bound needs |kappa| ||E_11|| < 1")
    e = np.linalg.norm(sys.E(alpha, 1), 2) * np.linalg.norm(sys.E(1, beta), 2)
    return float(e * abs(kappa) * q ** (R - 1) / (1 - q))


# ----------------------------------------------------------------------------
# superoperators

def superop(fn: Callable[[np.ndarray], np.ndarray], dim: int) -> np.ndarray:
    """Matrix of a linear map on dim x dim matrices, built column by column."""
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for k in range(dim * dim):
        E = np.zeros(dim * dim, dtype=complex)
        E[k] = 1.0
        out[:, k] = fn(E.reshape(dim, dim)).reshape(-1)
    return out


def apply_superop(S: np.ndarray, X: np.ndarray) -> np.ndarray:
    d = X.shape[0]
    return (S @ X.reshape(-1)).reshape(d, d)


def choi(S: np.ndarray, dim: int) -> np.ndarray:
    """Choi matrix sum_ij |i><j| (x) S(|i><j|)."""
    C = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            E = np.zeros((dim, dim), dtype=complex)
            E[i, j] = 1.0
            C += np.kron(E, apply_superop(S, E))
    return C


def conditional_cp_margin(S: np.ndarray, dim: int) -> float:
    """Least eigenvalue of the Choi matrix compressed off the maximally entangled vector.

    A generator is of Lindblad form iff this is >= 0 (together with
    hermiticity preservation).
    """
    C = choi(S, dim)
    omega = np.eye(dim).reshape(-1) / math.sqrt(dim)
    P = np.eye(dim * dim) - np.outer(omega, omega.conj())
    M = P @ C @ P
    return float(np.linalg.eigvalsh(0.5 * (M + _dag(M))).min())


@dataclass(frozen=True, eq=False)
class EvansHudsonMaps:
    dim: int
    maps: dict = field(repr=False)       # (a, b) -> callable
    matrices: dict = field(repr=False)   # (a, b) -> d^2 x d^2 matrix

    def __call__(self, alpha: int, beta: int, X: np.ndarray) -> np.ndarray:
        return self.maps[(alpha, beta)](X)

    def matrix(self, alpha: int, beta: int) -> np.ndarray:
        return self.matrices[(alpha, beta)]


def evans_hudson(coeffs: QsdeCoefficients) -> EvansHudsonMaps:
    W, L, H, g = coeffs.W, coeffs.L, coeffs.H, coeffs.gamma
    Wd, Ld = _dag(W), _dag(L)

    def l11(X):
        # W^dag [X, W] / gamma equals (W^dag X W - X)/gamma for unitary W and vanishes on I exactly
        return Wd @ (X @ W - W @ X) / g

    def l10(X):
        return Wd @ (X @ L - L @ X)

    def l01(X):
        return -(X @ Ld - Ld @ X) @ W

    def l00(X):
        return 0.5 * g * (Ld @ X - X @ Ld) @ L + 0.5 * g * Ld @ (X @ L - L @ X) - 1j * (X @ H - H @ X)

    maps = {(0, 0): l00, (0, 1): l01, (1, 0): l10, (1, 1): l11}
    mats = {k: superop(f, coeffs.dim) for k, f in maps.items()}
    return EvansHudsonMaps(coeffs.dim, maps, mats)


def structural_map(coeffs: QsdeCoefficients, alpha: int, beta: int, X: np.ndarray) -> np.ndarray:
    """X L_ab + L_ba^dag X + gamma L_1a^dag X L_1b."""
    C = coeffs.coef
    return X @ C(alpha, beta) + _dag(C(beta, alpha)) @ X + coeffs.gamma * _dag(C(1, alpha)) @ X @ C(1, beta)


def evans_hudson_report(coeffs: QsdeCoefficients, samples: Sequence[np.ndarray] = ()) -> dict[str, float]:
    """Residuals of L(I) = 0, adjoint symmetry and agreement with the structural form."""
    eh = evans_hudson(coeffs)
    d = coeffs.dim
    eye = np.eye(d, dtype=complex)
    if not samples:
        rng = np.random.default_rng(7)
        samples = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(3)]
    out = {"identity": 0.0, "adjoint": 0.0, "structural": 0.0}
    for ab in ROLES:
        out["identity"] = max(out["identity"], float(np.linalg.norm(eh(*ab, eye))))
        for X in samples:
            lhs = eh(*ab, _dag(X))
            rhs = _dag(eh(ab[1], ab[0], X))
            out["adjoint"] = max(out["adjoint"], float(np.linalg.norm(lhs - rhs)))
            out["structural"] = max(out["structural"],
                                    float(np.linalg.norm(eh(*ab, X) - structural_map(coeffs, *ab, X))))
    out["lindblad_margin"] = conditional_cp_margin(eh.matrix(0, 0), d)
    return out


def lindblad_generator(coeffs: QsdeCoefficients) -> np.ndarray:
    return evans_hudson(coeffs).matrix(0, 0)


def lindblad_semigroup(coeffs: QsdeCoefficients, X: np.ndarray, t: float) -> np.ndarray:
    """exp(t L_00)(X), Heisenberg picture."""
    G = lindblad_generator(coeffs)
    return apply_superop(expm(t * G), np.asarray(X, dtype=complex))


def semigroup_matrix(coeffs: QsdeCoefficients, t: float) -> np.ndarray:
    return expm(t * lindblad_generator(coeffs))


def predual_matrix(S: np.ndarray) -> np.ndarray:
    """Hilbert-Schmidt adjoint: tr(A^dag S(B)) = tr(S*(A)^dag B)."""
    return _dag(S)


# ----------------------------------------------------------------------------
# matrix elements between exponential vectors

def limit_overlap(amps: Sequence[SmearedAmplitude], gamma: float) -> complex:
    """<W(f_1 (x) 1_I1) Psi | W(f_2 (x) 1_I2) Psi> with (f_j|f_k) = c_j conj(c_k)/gamma."""
    a1, a2 = amps
    if gamma <= 0:
        return 1.0 + 0j

    def ip(x, y):
        lo = max(x.interval[0], y.interval[0])
        hi = min(x.interval[1], y.interval[1])
        return x.coupling * np.conj(y.coupling) / gamma * max(0.0, hi - lo)

    return complex(np.exp(ip(a1, a2) - 0.5 * ip(a1, a1).real - 0.5 * ip(a2, a2).real))


def _pieces(amps: Sequence[SmearedAmplitude], t: float) -> list[tuple[float, float]]:
    pts = {0.0, float(t)}
    for a in amps:
        for x in a.interval:
            if 0 < x < t:
                pts.add(float(x))
    pts = sorted(pts)
    return list(zip(pts, pts[1:]))


def _h_mid(amps, a, b):
    mid = 0.5 * (a + b)
    return complex(amps[0].h_limit(mid)), complex(np.conj(amps[1].h_limit(mid)))


def generator_at(coeffs: QsdeCoefficients, h1: complex, h2c: complex) -> np.ndarray:
    """sum_ab h1^a L_ab conj(h2)^b."""
    return coeffs.L00 + h1 * coeffs.L10 + h2c * coeffs.L01 + h1 * h2c * coeffs.L11


def propagator(coeffs: QsdeCoefficients, amps, t: float) -> np.ndarray:
    """V_t solving V' = (sum_ab h1^a L_ab conj(h2)^b) V, V_0 = I, piecewise exactly."""
    if t < 0:
        raise DomainError("time must be non-negative")
    V = np.eye(coeffs.dim, dtype=complex)
    for a, b in _pieces(amps, t):
        h1, h2c = _h_mid(amps, a, b)
        V = expm((b - a) * generator_at(coeffs, h1, h2c)) @ V
    return V


def matrix_element_ode(coeffs: QsdeCoefficients, phi1, phi2, amps=(VACUUM, VACUUM), t: float = 1.0,
                       with_overlap: bool = True) -> complex:
    phi1 = np.asarray(phi1, dtype=complex)
    phi2 = np.asarray(phi2, dtype=complex)
    val = complex(np.vdot(phi1, propagator(coeffs, amps, t) @ phi2))
    if with_overlap:
        val *= limit_overlap(amps, coeffs.gamma)
    return val


def _graded_levels(pieces_of: Callable[[complex, complex], list[np.ndarray]], dim: int, amps, t: float,
                   n_max: int) -> list[np.ndarray]:
    """Coefficients V_r of eps^r in V' = (sum_r eps^r A_r(s)) V, for r = 0..n_max.

    On each constancy interval the generator is a block upper triangular
    Toeplitz matrix whose exponential carries the whole eps-series.
    """
    size = (n_max + 1) * dim
    T = np.eye(size, dtype=complex)
    for a, b in _pieces(amps, t):
        h1, h2c = _h_mid(amps, a, b)
        A = pieces_of(h1, h2c)
        B = np.zeros((size, size), dtype=complex)
        for r in range(1, n_max + 1):
            for i in range(0, n_max + 1 - r):
                B[i * dim:(i + 1) * dim, (i + r) * dim:(i + r + 1) * dim] = A[r - 1]
        T = expm((b - a) * B) @ T
    return [T[:dim, r * dim:(r + 1) * dim] for r in range(n_max + 1)]


def dyson_limit_levels(sys: SystemModel, source, amps, phi1, phi2, t: float, n_max: int) -> list[complex]:
    """Order-n part of the limit matrix element (overlap removed), graded by powers of E.

    A run of r consecutive vertices collapses to one time with weight
    (-i)^r kappa_+^(r-1) h1^a E^(r)_ab conj(h2)^b.
    """
    c = _constants_of(source)
    kp = c.kappa_plus
    chains = {(a, b, r): chain_coefficient(sys, a, b, r) for a, b in ROLES for r in range(1, n_max + 1)}

    def pieces(h1, h2c):
        out = []
        for r in range(1, n_max + 1):
            A = np.zeros((sys.dim, sys.dim), dtype=complex)
            for a, b in ROLES:
                A += h1 ** a * h2c ** b * chains[(a, b, r)]
            out.append((-1j) ** r * kp ** (r - 1) * A)
        return out

    V = _graded_levels(pieces, sys.dim, amps, t, n_max)
    phi1 = np.asarray(phi1, dtype=complex)
    phi2 = np.asarray(phi2, dtype=complex)
    return [complex(np.vdot(phi1, v @ phi2)) for v in V]


def chaotic_levels(coeffs: QsdeCoefficients, amps, phi1, phi2, t: float, m_max: int) -> list[complex]:
    """Terms m = 0..m_max of the iterated-integral expansion in the generator (overlap removed)."""

    def pieces(h1, h2c):
        return [generator_at(coeffs, h1, h2c)] + [np.zeros((coeffs.dim, coeffs.dim), dtype=complex)] * (m_max - 1)

    V = _graded_levels(pieces, coeffs.dim, amps, t, m_max)
    phi1 = np.asarray(phi1, dtype=complex)
    phi2 = np.asarray(phi2, dtype=complex)
    return [complex(np.vdot(phi1, v @ phi2)) for v in V]


# ----------------------------------------------------------------------------
# normal ordering

def normal_ordered_coefficients(sys: SystemModel, kappa_plus: complex) -> dict:
    """Normal-order -i E_ab [a^dag]^a [a]^b U using a U = R (U a - i kappa E_10 U).

    Terms are collected as X_ab in [a^dag]^a X_ab U [a]^b, with
    R = (1 + i kappa E_11)^(-1).
    """
    d = sys.dim
    R = np.linalg.inv(np.eye(d) + 1j * kappa_plus * sys.E11)
    X = {ab: np.zeros((d, d), dtype=complex) for ab in ROLES}
    for a, b in ROLES:
        coef = -1j * sys.E(a, b)
        if b == 0:
            X[(a, 0)] += coef
        else:
            # a U -> R U a  and  a U -> R (-i kappa E_10) U
            X[(a, 1)] += coef @ R
            X[(a, 0)] += coef @ R @ (-1j * kappa_plus * sys.E10)
    return X


def normal_order_identity_check(coeffs: QsdeCoefficients, sys: SystemModel, kappa_plus: complex) -> dict[str, float]:
    X = normal_ordered_coefficients(sys, kappa_plus)
    return {f"L{a}{b}": float(np.linalg.norm(X[(a, b)] - coeffs.coef(a, b), 2)) for a, b in ROLES}


# ----------------------------------------------------------------------------
# ready-made systems

def qubit_damping(gamma_scale: float = 1.0) -> SystemModel:
    """E_10 = lowering operator, E_00 = E_11 = 0 on basis (|g>, |e>)."""
    lower = np.array([[0, 1], [0, 0]], dtype=complex) * math.sqrt(gamma_scale)
    z = np.zeros((2, 2), dtype=complex)
    return SystemModel(z, lower.conj().T, lower, z)


def random_system(rng: np.random.Generator, dim: int, K: float, margin: float = 0.9) -> SystemModel:
    """Random bounded system with K ||E_11|| = margin * rand < 1."""
    def herm():
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        return 0.5 * (a + a.conj().T)

    E00 = herm()
    E11 = herm()
    E11 *= margin * rng.uniform(0.05, 1.0) / (K * np.linalg.norm(E11, 2))
    E10 = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return SystemModel(E00, E10.conj().T, E10, E11)
