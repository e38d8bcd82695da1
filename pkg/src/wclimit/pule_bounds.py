"""Series majorants for the Dyson expansion.

Diagrams of shape n (occupation sequence) are bounded in total by
prod_j w_j^(n_j) / n_j! with block weights w_j = exp(jA + B), where
A = ln(K C_11) and B collects the remaining constants.  Summing over
shapes of size n gives ``level_bound(n)``; summing over all shapes gives
Omega(A, B) = exp(sum_j w_j) = exp(e^(A+B)/(1 - e^A)).

Without scattering (C_11 = 0) only singletons and pairs survive and the
weights are w_1 = C (t v 1), w_2 = C^2 K (t v 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import combinatorics as cb
from .errors import DivergenceError, DomainError

ENUMERATION_LIMIT = 40


@dataclass(frozen=True)
class BoundParameters:
    A: float
    B: float
    B_prime: float
    provenance: dict = field(default_factory=dict, compare=False)
    pair_weights: tuple[float, float] | None = None  # (w_1, w_2) when C_11 = 0

    def __post_init__(self):
        if self.pair_weights is None and not self.A < 0:
            raise DivergenceError(f"A = {self.A:.6g} >= 0, i.e. K*C_11 >= 1; the majorant diverges")

    @classmethod
    def from_constants(cls, K: float, C11: float, C: float, t: float, gamma: float) -> "BoundParameters":
        if K <= 0:
            raise DomainError("K must be positive")
        tv = max(t, 1.0)
        prov = {"K": K, "C11": C11, "C": C, "t": t, "gamma": gamma}
        rest = math.log(max(C * C, 1.0)) + math.log(max(K ** -1, 1.0))
        if C11 == 0:
            # no scattering: A = -inf and only n_1, n_2 survive
            B = math.log(tv) + rest
            Bp = 0.5 * math.log(tv) + rest + (0.5 * math.log(gamma) if gamma > 0 else -math.inf)
            return cls(-math.inf, B, Bp, prov, (C * tv, C * C * K * tv))
        A = math.log(K * C11)
        if not A < 0:
            raise DivergenceError(f"K*C_11 = {K * C11:.6g} >= 1; the majorant diverges")
        rest += math.log(max(C11 ** -2, 1.0))
        B = math.log(tv) + rest
        Bp = 0.5 * math.log(tv) + rest + (0.5 * math.log(gamma) if gamma > 0 else -math.inf)
        return cls(A, B, Bp, prov)

    @property
    def scattering_free(self) -> bool:
        return self.pair_weights is not None

    def weight(self, j: int) -> float:
        if self.pair_weights is not None:
            return self.pair_weights[j - 1] if j <= 2 else 0.0
        return math.exp(j * self.A + self.B)

    def log_generating(self, r: float) -> float:
        """sum_j w_j r^j."""
        if self.pair_weights is not None:
            w1, w2 = self.pair_weights
            return w1 * r + w2 * r * r
        x = r * math.exp(self.A)
        if not x < 1:
            return math.inf
        return math.exp(self.B) * x / (1 - x)


def params_from_system(sys, amps, model, t: float) -> BoundParameters:
    from .dyson import bound_constants
    c = bound_constants(sys, amps, model)
    return BoundParameters.from_constants(model.K, c.C11, c.C, t, model.constants.gamma)


def level_bounds(n_max: int, params: BoundParameters) -> list[float]:
    """level_bound(n) for n = 0..n_max via n a_n = sum_k k w_k a_(n-k)."""
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    w = [0.0] + [params.weight(j) for j in range(1, n_max + 1)]
    a = [1.0] + [0.0] * n_max
    for n in range(1, n_max + 1):
        a[n] = sum(k * w[k] * a[n - k] for k in range(1, n + 1)) / n
    return a


def level_bound(n: int, params: BoundParameters) -> float:
    if n < 1:
        raise DomainError(f"level must be >= 1, got {n}")
    return level_bounds(n, params)[n]


def level_bound_enumeration(n: int, params: BoundParameters) -> float:
    """Same quantity as an explicit sum over occupation sequences with E = n."""
    if not (1 <= n <= ENUMERATION_LIMIT):
        raise DomainError(f"enumeration level {n} outside 1..{ENUMERATION_LIMIT}")
    total = 0.0
    for occ in cb.occupations_of_size(n):
        term = 1.0
        for j, nj in occ.counts:
            term *= params.weight(j) ** nj / math.factorial(nj)
        total += term
    return total


def omega(A: float, B: float) -> float:
    """exp(e^(A+B)/(1 - e^A))."""
    if not A < 0:
        raise DivergenceError(f"A = {A:.6g} >= 0; the grand sum diverges")
    return math.exp(math.exp(A + B) / -math.expm1(A))


def series_total(params: BoundParameters) -> float:
    return math.exp(params.log_generating(1.0))


def heisenberg_majorant(A: float, B: float, B_prime: float) -> float:
    """exp(2 e^(A+B)/(1 - e^A) + e^(2A+2B')/(1 - e^(2A)))."""
    if not A < 0:
        raise DivergenceError(f"A = {A:.6g} >= 0; the Heisenberg majorant diverges")
    if A == -math.inf:
        raise DomainError("the closed form needs C_11 > 0; use the scattering-free weights instead")
    return math.exp(2 * math.exp(A + B) / -math.expm1(A) + math.exp(2 * A + 2 * B_prime) / -math.expm1(2 * A))


def heisenberg_enumeration(A: float, B: float, B_prime: float, e_max: int = 12) -> tuple[float, float]:
    """Truncated triple sum over (m, m', l) with E <= e_max each, and a bound on what it misses.

    The m and m' sums carry weights e^(jA+B); the l sum (cross contractions
    between the two time sets) carries e^(2jA+2B').
    """
    if not A < 0:
        raise DivergenceError(f"A = {A:.6g} >= 0")

    def truncated(a, b):
        s = 0.0
        for n in range(0, e_max + 1):
            for occ in (cb.occupations_of_size(n) if n else [None]):
                if occ is None:
                    s += 1.0
                    continue
                term = 1.0
                for j, nj in occ.counts:
                    term *= math.exp(j * a + b) ** nj / math.factorial(nj)
                s += term
        return s

    x = truncated(A, B)
    z = truncated(2 * A, 2 * B_prime)
    X = omega(A, B)
    Z = math.exp(math.exp(2 * A + 2 * B_prime) / -math.expm1(2 * A))
    tx = _rankin(e_max, lambda r: math.exp(A + B) * r / (1 - r * math.exp(A)) if r * math.exp(A) < 1 else math.inf,
                 math.exp(-A))
    tz = _rankin(e_max, lambda r: math.exp(2 * A + 2 * B_prime) * r / (1 - r * math.exp(2 * A))
                 if r * math.exp(2 * A) < 1 else math.inf, math.exp(-2 * A))
    missing = tx * X * Z + x * tx * Z + x * x * tz
    return x * x * z, missing


def _rankin(N: int, log_gen, r_max: float) -> float:
    """min over 1 <= r < r_max of r^-(N+1) exp(log_gen(r))."""

    def f(lr):
        r = math.exp(lr)
        g = log_gen(r)
        return math.inf if not math.isfinite(g) else g - (N + 1) * lr

    hi = math.log(r_max) if math.isfinite(r_max) else math.log(1e6)
    hi = max(hi - 1e-12, 1e-12)
    res = minimize_scalar(f, bounds=(0.0, hi), method="bounded", options={"xatol": 1e-10})
    best = min(res.fun, f(0.0))
    return math.exp(best)


def tail_bound(N: int, params: BoundParameters) -> float:
    """Upper bound on sum_{n > N} level_bound(n), by minimising r^-(N+1) F(r) over r >= 1."""
    if N < 0:
        raise DomainError("N must be >= 0")
    r_max = math.inf if params.scattering_free else math.exp(-params.A)
    return _rankin(N, params.log_generating, r_max)


def bound_table(params: BoundParameters, n_max: int) -> list[dict]:
    a = level_bounds(n_max, params)
    total = series_total(params)
    rows = []
    cum = a[0]
    for n in range(1, n_max + 1):
        cum += a[n]
        rows.append({"n": n, "level_bound": a[n], "cumulative": cum, "omega": total,
                     "tail": tail_bound(n, params)})
    return rows
