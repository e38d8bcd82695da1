"""Pre-limit Dyson terms and the simplex contraction integrals behind them.

Times are ordered t > s_n > ... > s_1 > 0 and vertex n is leftmost.  A
diagram is a set partition: each part is an emission / scattering /
absorption chain and every consecutive pair (p, q), p < q, of a chain
contributes the two-point function G_lambda(s_q - s_p).

The n-th Dyson term between states phi_1 (x) W_lambda(1) Phi and
phi_2 (x) W_lambda(2) Phi, divided by the Weyl overlap, is

    (-i)^n sum_diagrams int_{Delta_n(t)} <phi_1| E~(s_n) ... E~(s_1) |phi_2>
                                           prod_links G_lambda(s_q - s_p)

with dressed coefficients E~ whose role at each vertex is fixed by the
diagram.

Simplex integrals are done by nested Gauss-Legendre quadrature, outermost
variable s_n first.  A vertex p that opens a link (p, q) is integrated in
v = (s_q - s_p)/lambda^2 instead of s_p, so the kernel is G(v) dv and the
1/lambda^2 peak disappears.  Remaining time variables use composite panels
graded towards the points where the integrand varies on the lambda^2 scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from . import combinatorics as cb
from .correlation import CorrelationModel, ExponentialKernel
from .errors import ConsistencyError, DivergenceError, DomainError, ModelError, ValidationError

HERMITIAN_TOL = 1e-12
MAX_SIMPLEX_N = 6
MAX_TERM_N = 5
BOUND_HEADROOM = 1.05

ROLES = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True, eq=False)
class SystemModel:
    """The four system matrices E_ab coupling to [a+]^a [a-]^b."""

    E00: np.ndarray
    E01: np.ndarray
    E10: np.ndarray
    E11: np.ndarray
    omega: float = 0.0

    def __post_init__(self):
        mats = {}
        for name in ("E00", "E01", "E10", "E11"):
            m = np.atleast_2d(np.asarray(getattr(self, name), dtype=complex))
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValidationError(_field(name), f"must be a square matrix, got shape {m.shape}")
            mats[name] = m
        dims = {m.shape[0] for m in mats.values()}
        if len(dims) != 1:
            raise ValidationError("system", f"matrices disagree in dimension: {sorted(dims)}")
        for name in ("E00", "E11"):
            m = mats[name]
            if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
                raise ValidationError(_field(name), "must be Hermitian")
        if np.max(np.abs(mats["E10"] - mats["E01"].conj().T)) > HERMITIAN_TOL:
            raise ValidationError(_field("E10"), "must equal the adjoint of E_01")
        for name, m in mats.items():
            object.__setattr__(self, name, m)

    @property
    def dim(self) -> int:
        return self.E00.shape[0]

    def E(self, alpha: int, beta: int) -> np.ndarray:
        return getattr(self, f"E{alpha}{beta}")

    def check_contraction(self, model: CorrelationModel) -> float:
        """K*||E_11||, raising when it is not below 1."""
        val = model.K * np.linalg.norm(self.E11, 2)
        if not val < 1:
            raise DivergenceError(f"K*||E_11|| = {val:.6g} >= 1; the Dyson series is not controlled")
        return float(val)


def _field(name: str) -> str:
    return f"system.{name[0]}_{name[1:]}"


@dataclass(frozen=True)
class SmearedAmplitude:
    """Coherent test function on [S, T] with coupling c = (f|g).

    The test function is taken proportional to g, f = (conj(c)/gamma) g.
    """

    interval: tuple[float, float]
    coupling: complex = 0j

    def __post_init__(self):
        S, T = (float(x) for x in self.interval)
        if not T >= S:
            raise ValidationError("amplitudes.interval", f"needs S <= T, got [{S}, {T}]")
        object.__setattr__(self, "interval", (S, T))
        object.__setattr__(self, "coupling", complex(self.coupling))

    @property
    def is_zero(self) -> bool:
        return self.coupling == 0 or self.interval[0] == self.interval[1]

    def h(self, t, lam: float, model: CorrelationModel):
        """h(t, lambda) = (c/gamma) int_{(t-T)/lambda^2}^{(t-S)/lambda^2} G."""
        t = np.asarray(t, dtype=float)
        if self.is_zero:
            return np.zeros(t.shape, dtype=complex)
        S, T = self.interval
        l2 = lam * lam
        gamma = model.constants.gamma
        return (self.coupling / gamma) * model.integral((t - T) / l2, (t - S) / l2)

    def h_limit(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_zero:
            return np.zeros(t.shape, dtype=complex)
        S, T = self.interval
        return np.where((t >= S) & (t <= T), self.coupling, 0j)

    def hbar(self, model: CorrelationModel) -> float:
        """int |<g, theta_u f>| du = |c| * 2K / gamma."""
        if self.is_zero:
            return 0.0
        return abs(self.coupling) * 2 * model.K / model.constants.gamma


VACUUM = SmearedAmplitude((0.0, 0.0), 0j)


@dataclass(frozen=True)
class ContractionSet:
    n: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple(sorted((int(p), int(q)) for p, q in self.pairs))
        pairs = tuple(sorted(pairs, key=lambda pq: pq[1]))
        ps = [p for p, _ in pairs]
        qs = [q for _, q in pairs]
        if any(not (1 <= p < q <= self.n) for p, q in pairs):
            raise DomainError(f"pairs {pairs} need 1 <= p < q <= {self.n}")
        if len(set(ps)) != len(ps) or len(set(qs)) != len(qs):
            raise DomainError(f"pairs {pairs} repeat a creator or an annihilator")
        object.__setattr__(self, "pairs", pairs)

    @property
    def m(self) -> int:
        return len(self.pairs)

    @property
    def kind(self) -> cb.DiagramType:
        if all(q == p + 1 for p, q in self.pairs):
            return cb.DiagramType.TYPE_I
        return cb.DiagramType.TYPE_II

    def partition(self) -> cb.SetPartition:
        nxt = dict(self.pairs)
        has_prev = set(nxt.values())
        parts = []
        for start in range(1, self.n + 1):
            if start in has_prev:
                continue
            chain = [start]
            while chain[-1] in nxt:
                chain.append(nxt[chain[-1]])
            parts.append(tuple(chain))
        return cb.SetPartition(self.n, tuple(parts))

    @classmethod
    def from_partition(cls, p: cb.SetPartition) -> "ContractionSet":
        return cls(p.n, tuple(p.links()))

    def __str__(self) -> str:
        return " ".join(f"({p},{q})" for p, q in self.pairs) or "()"


def enumerate_contraction_sets(n: int, m: int | None = None, cap: int = cb.DEFAULT_CAP) -> list[ContractionSet]:
    """All contraction sets of level n (with exactly m pairs if given), in canonical order."""
    out = []
    for p in cb.enumerate_partitions(n, cap):
        cs = ContractionSet.from_partition(p)
        if m is None or cs.m == m:
            out.append(cs)
    return out


def diagram_roles(p: cb.SetPartition) -> list[tuple[int, int]]:
    """(alpha, beta) at each vertex 1..n implied by the chains of p."""
    roles = [(0, 0)] * p.n
    for part in p.parts:
        if len(part) == 1:
            continue
        roles[part[0] - 1] = (1, 0)
        roles[part[-1] - 1] = (0, 1)
        for i in part[1:-1]:
            roles[i - 1] = (1, 1)
    return roles


# ----------------------------------------------------------------------------
# dressed coefficients

def _dress(sys: SystemModel, role: tuple[int, int], h1, h2c) -> np.ndarray:
    """E~_ab = sum over a' >= a, b' >= b of h1^(a'-a) conj(h2)^(b'-b) E_a'b', batched over h."""
    alpha, beta = role
    h1 = np.atleast_1d(h1)
    h2c = np.atleast_1d(h2c)
    out = np.zeros((max(h1.size, h2c.size), sys.dim, sys.dim), dtype=complex)
    for a in range(alpha, 2):
        for b in range(beta, 2):
            coef = np.ones(out.shape[0], dtype=complex)
            if a > alpha:
                coef = coef * h1
            if b > beta:
                coef = coef * h2c
            out += coef[:, None, None] * sys.E(a, b)[None]
    return out


def dressed_coefficients(sys: SystemModel, amp1: SmearedAmplitude, amp2: SmearedAmplitude, t: float,
                         lam: float | None = None, model: CorrelationModel | None = None) -> dict:
    """The four dressed matrices at time t; the limit ones when ``lam`` is None."""
    if lam is None:
        h1 = amp1.h_limit(t)
        h2 = amp2.h_limit(t)
    else:
        if model is None:
            raise ModelError("pre-limit dressing needs a correlation model")
        h1 = amp1.h(t, lam, model)
        h2 = amp2.h(t, lam, model)
    return {role: _dress(sys, role, h1, np.conj(h2))[0] for role in ROLES}


# ----------------------------------------------------------------------------
# simplex quadrature

@dataclass(frozen=True)
class QuadratureConfig:
    """Node counts and grading for the nested simplex quadrature.

    ``raw_nodes`` Gauss points per panel for plain time variables,
    ``kernel_nodes`` Gauss points for each kernel variable v,
    ``offsets`` multiples of lambda^2 placed on both sides of every anchor,
    ``chunk`` largest number of nodes expanded at once.
    """

    raw_nodes: int = 8
    kernel_nodes: int = 40
    offsets: tuple[float, ...] = (0.25, 1.0, 4.0, 16.0)
    chunk: int = 400_000


DEFAULT_QUADRATURE = QuadratureConfig()


@lru_cache(maxsize=None)
def _gauss(q: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(q)


@dataclass
class _Plan:
    n: int
    t: float
    lam: float
    model: CorrelationModel
    link_of: dict          # creator p -> annihilator q
    spans: dict            # raw vertex k -> list of q with p < k < q for some link (p, q)
    anchors: np.ndarray    # static anchors for raw variables
    cfg: QuadratureConfig
    vertex: object = None  # callable (k, s) -> (N, d, d) or None
    phi2: np.ndarray | None = None
    abs_kernel: bool = False


def _plan(n, links, t, lam, model, cfg, static_anchors=(), vertex=None, phi2=None, abs_kernel=False) -> _Plan:
    link_of = {p: q for p, q in links}
    spans = {}
    for k in range(1, n + 1):
        if k in link_of:
            continue
        spans[k] = [q for p, q in links if p < k < q]
    anchors = sorted({0.0, *(float(a) for a in static_anchors if 0.0 < a < t)})
    return _Plan(n, float(t), float(lam), model, link_of, spans, np.array(anchors), cfg, vertex, phi2, abs_kernel)


def _kernel_nodes(plan: _Plan, k: int, S: np.ndarray):
    q = plan.link_of[k]
    l2 = plan.lam ** 2
    tau = 2.0 * plan.model.scale
    sq = S[:, q]
    hi = S[:, k + 1]
    vlo = np.maximum(sq - hi, 0.0) / l2
    vhi = sq / l2
    # w = 1 - exp(-v/tau) maps [0, inf) onto [0, 1)
    wlo = -np.expm1(-vlo / tau)
    whi = -np.expm1(-vhi / tau)
    x, gw = _gauss(plan.cfg.kernel_nodes)
    half = 0.5 * (whi - wlo)
    w = (0.5 * (whi + wlo))[:, None] + half[:, None] * x
    v = -tau * np.log1p(-np.minimum(w, 1.0 - 2e-16))
    g = plan.model.kernel(v)
    if plan.abs_kernel:
        g = np.abs(g).astype(complex)
    with np.errstate(over="ignore", invalid="ignore"):
        jac = tau * np.exp(np.minimum(v / tau, 700.0))
        fac = np.where(g == 0, 0.0, g * jac)
    weights = fac * (half[:, None] * gw)
    s = sq[:, None] - l2 * v
    return s, weights


def _raw_nodes(plan: _Plan, k: int, S: np.ndarray):
    N = S.shape[0]
    hi = S[:, k + 1]
    l2 = plan.lam ** 2
    cols = [np.broadcast_to(plan.anchors, (N, plan.anchors.size)), hi[:, None]]
    for q in plan.spans[k]:
        cols.append(S[:, q][:, None])
    anchors = np.concatenate(cols, axis=1)
    offs = np.array([0.0] + [s * o * l2 for o in plan.cfg.offsets for s in (-1.0, 1.0)])
    cand = (anchors[:, :, None] + offs).reshape(N, -1)
    bp = np.clip(cand, 0.0, hi[:, None])
    bp = np.sort(np.concatenate([np.zeros((N, 1)), bp, hi[:, None]], axis=1), axis=1)
    a, b = bp[:, :-1], bp[:, 1:]
    x, gw = _gauss(plan.cfg.raw_nodes)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    s = (mid[..., None] + half[..., None] * x).reshape(N, -1)
    w = (half[..., None] * gw).reshape(N, -1).astype(complex)
    return s, w


def _level(plan: _Plan, k: int, S: np.ndarray, W: np.ndarray, R: np.ndarray) -> complex:
    if k == 0:
        if plan.phi2 is None:
            return complex(np.sum(W))
        return complex(np.sum(W * (R @ plan.phi2)))
    per = plan.cfg.kernel_nodes if k in plan.link_of else None
    if per is None:
        width = 1 + plan.anchors.size + 1 + len(plan.spans[k])
        per = (width * (1 + 2 * len(plan.cfg.offsets)) + 1) * plan.cfg.raw_nodes
    N = S.shape[0]
    if N > 1 and N * per > plan.cfg.chunk:
        step = max(1, plan.cfg.chunk // per)
        return sum((_level(plan, k, S[i:i + step], W[i:i + step], R[i:i + step])
                    for i in range(0, N, step)), 0j)
    if k in plan.link_of:
        s, w = _kernel_nodes(plan, k, S)
    else:
        s, w = _raw_nodes(plan, k, S)
    Q = s.shape[1]
    W2 = (W[:, None] * w).ravel()
    keep = W2 != 0
    if not keep.any():
        return 0j
    idx = np.repeat(np.arange(N), Q)[keep]
    S2 = S[idx]
    S2[:, k] = s.ravel()[keep]
    R2 = R[idx]
    if plan.vertex is not None:
        M = plan.vertex(k, S2[:, k])
        R2 = np.einsum("ni,nij->nj", R2, M)
    return _level(plan, k - 1, S2, W2[keep], R2)


def _integrate(plan: _Plan, phi1: np.ndarray | None = None) -> complex:
    S = np.zeros((1, plan.n + 2))
    S[0, plan.n + 1] = plan.t
    W = np.ones(1, dtype=complex)
    R = np.ones((1, 1), dtype=complex) if phi1 is None else np.conj(phi1)[None, :].astype(complex)
    return _level(plan, plan.n, S, W, R)


def simplex_volume(n: int, t: float) -> float:
    return t ** n / math.factorial(n)


def simplex_contraction_integral(n: int, cs: ContractionSet, t: float, lam: float, model: CorrelationModel,
                                 cfg: QuadratureConfig = DEFAULT_QUADRATURE, check_bound: bool = True) -> complex:
    """int over Delta_n(t) of prod_(p,q) G_lambda(s_q - s_p), by nested quadrature.

    The result is checked against K^m t^(n-m)/(n-m)! (5% headroom); a
    violation means the quadrature is wrong and raises.
    """
    _check_level(n, t, lam)
    if cs.n != n:
        raise DomainError(f"contraction set is for n={cs.n}, not {n}")
    if cs.m == 0:
        return complex(simplex_volume(n, t))
    val = _integrate(_plan(n, cs.pairs, t, lam, model, cfg))
    if check_bound:
        bound = model.K ** cs.m * simplex_volume(n - cs.m, t)
        if abs(val) > BOUND_HEADROOM * bound:
            raise ConsistencyError(f"|I| = {abs(val):.6g} exceeds the bound {bound:.6g} for {cs}")
    return val


def abs_contraction_integral(n: int, cs: ContractionSet, t: float, lam: float, model: CorrelationModel,
                             cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Same integral with |G| in place of G."""
    _check_level(n, t, lam)
    if cs.m == 0:
        return simplex_volume(n, t)
    if isinstance(model, ExponentialKernel):
        return exact_exponential_contraction(n, cs, t, lam, 1.0 / model.tau).real
    return _integrate(_plan(n, cs.pairs, t, lam, model, cfg, abs_kernel=True)).real


def _check_level(n: int, t: float, lam: float) -> None:
    if not (0 <= n <= MAX_SIMPLEX_N):
        raise DomainError(f"simplex level {n} outside 0..{MAX_SIMPLEX_N}")
    if not (0 <= t <= 4):
        raise DomainError(f"time {t} outside [0, 4]")
    if not lam > 0:
        raise DomainError("lambda must be positive")


def exact_exponential_contraction(n: int, cs: ContractionSet, t: float, lam: float, rate: complex) -> complex:
    """Closed form for G(v) = exp(-rate*v), v > 0.

    The product of kernels is exp(-(rate/lambda^2) sum_k c_k (s_(k+1) - s_k))
    with c_k the number of links spanning the gap (s_k, s_(k+1)); the simplex
    integral of such a product is the (0, n) entry of exp(t Z), Z bidiagonal
    with -rate*c_k/lambda^2 on the diagonal and ones above it.
    """
    cover = np.zeros(n + 1)
    for p, q in cs.pairs:
        cover[p:q] += 1
    Z = np.diag(-rate * cover / lam ** 2).astype(complex) + np.diag(np.ones(n), 1)
    return complex(expm(t * Z)[0, n] / lam ** (2 * cs.m))


def type1_limit_value(n: int, m: int, t: float, model: CorrelationModel) -> complex:
    if not (0 <= m < n) and not (n == 0 and m == 0):
        raise DomainError(f"need 0 <= m < n, got m={m}, n={n}")
    return complex(model.constants.kappa_plus ** m * simplex_volume(n - m, t))


def contraction_limit(cs: ContractionSet, t: float, model: CorrelationModel) -> complex:
    if cs.kind is cb.DiagramType.TYPE_II:
        return 0j
    return type1_limit_value(cs.n, cs.m, t, model)


# ----------------------------------------------------------------------------
# Dyson terms

def _static_anchors(amps: Sequence[SmearedAmplitude]) -> list[float]:
    out = []
    for a in amps:
        if not a.is_zero:
            out.extend(a.interval)
    return out


def diagram_weight(sys: SystemModel, amps: tuple[SmearedAmplitude, SmearedAmplitude], model: CorrelationModel,
                   p: cb.SetPartition, t: float, lam: float, phi1, phi2,
                   cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> complex:
    """(-i)^n int <phi1| E~(s_n) ... E~(s_1) |phi2> prod_links G_lambda for one diagram."""
    n = p.n
    _check_level(n, t, lam)
    amp1, amp2 = amps
    roles = diagram_roles(p)
    phi1 = np.asarray(phi1, dtype=complex)
    phi2 = np.asarray(phi2, dtype=complex)

    def vertex(k, s):
        h1 = amp1.h(s, lam, model)
        h2c = np.conj(amp2.h(s, lam, model))
        return _dress(sys, roles[k - 1], h1, h2c)

    plan = _plan(n, p.links(), t, lam, model, cfg, _static_anchors(amps), vertex, phi2)
    return (-1j) ** n * _integrate(plan, phi1)


def _filtered_partitions(n: int, kind: str) -> list[cb.SetPartition]:
    parts = cb.enumerate_partitions(n)
    if kind == "all":
        return parts
    want = {"I": cb.DiagramType.TYPE_I, "II": cb.DiagramType.TYPE_II}.get(kind)
    if want is None:
        raise ValidationError("filter", f"expected one of all, I, II; got {kind!r}")
    return [p for p in parts if cb.classify_type(p) is want]


def dyson_term_matrix_element(sys: SystemModel, amps, model: CorrelationModel, n: int, t: float, lam: float,
                              phi1, phi2, kind: str = "all",
                              cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> complex:
    """n-th Dyson term of the Weyl matrix element, divided by the Weyl overlap."""
    if not (0 <= n <= MAX_TERM_N):
        raise DomainError(f"Dyson level {n} outside 0..{MAX_TERM_N}")
    phi1 = np.asarray(phi1, dtype=complex)
    phi2 = np.asarray(phi2, dtype=complex)
    if n == 0:
        return complex(np.vdot(phi1, phi2))
    return sum((diagram_weight(sys, amps, model, p, t, lam, phi1, phi2, cfg)
                for p in _filtered_partitions(n, kind)), 0j)


@dataclass(frozen=True)
class BoundConstants:
    C11: float
    C10: float
    C01: float
    C00: float
    C: float
    hbar1: float
    hbar2: float

    def role(self, alpha: int, beta: int) -> float:
        return getattr(self, f"C{alpha}{beta}")


def bound_constants(sys: SystemModel, amps, model: CorrelationModel) -> BoundConstants:
    n = {ab: float(np.linalg.norm(sys.E(*ab), 2)) for ab in ROLES}
    h1 = amps[0].hbar(model)
    h2 = amps[1].hbar(model)
    C11 = n[(1, 1)]
    C10 = n[(1, 0)] + n[(1, 1)] * h2
    C01 = n[(0, 1)] + n[(1, 1)] * h1
    C00 = n[(0, 0)] + n[(1, 0)] * h1 + n[(0, 1)] * h2 + n[(1, 1)] * h1 * h2
    return BoundConstants(C11, C10, C01, C00, max(C11, C10, C01, C00), h1, h2)


def diagram_weight_bound(consts: BoundConstants, model: CorrelationModel, p: cb.SetPartition, t: float,
                         lam: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """prod of C_role over the vertices times int prod |G_lambda| (unit-norm states)."""
    c = 1.0
    for role in diagram_roles(p):
        c *= consts.role(*role)
    if c == 0:
        return 0.0
    return c * abs_contraction_integral(p.n, ContractionSet.from_partition(p), t, lam, model, cfg)


def level_weight_bound(sys: SystemModel, amps, model: CorrelationModel, n: int, t: float, lam: float,
                       cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    consts = bound_constants(sys, amps, model)
    return sum(diagram_weight_bound(consts, model, p, t, lam, cfg) for p in cb.enumerate_partitions(n))


# ----------------------------------------------------------------------------
# lambda sweeps

def richardson(lams: Sequence[float], values: Sequence[complex], points: int = 3) -> complex:
    """Neville extrapolation to lambda^2 = 0 from the ``points`` smallest lambdas."""
    order = np.argsort(lams)[:points]
    x = np.array([lams[i] ** 2 for i in order])
    p = [complex(values[i]) for i in order]
    k = len(p)
    for level in range(1, k):
        p = [((0 - x[i + level]) * p[i] - (0 - x[i]) * p[i + 1]) / (x[i] - x[i + level])
             for i in range(k - level)]
    return p[0]


def validate_lambdas(lams: Sequence[float]) -> list[float]:
    lams = [float(x) for x in lams]
    if not lams or any(x <= 0 for x in lams) or any(a <= b for a, b in zip(lams, lams[1:])):
        raise ValidationError("experiment.lambdas", "must be positive and strictly decreasing")
    return lams


def lambda_sweep(n: int, t: float, lams: Sequence[float], model: CorrelationModel, kind: str = "all",
                 cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> list[dict]:
    """Contraction integrals of level n along a lambda list, with limits and bounds."""
    lams = validate_lambdas(lams)
    rows = []
    for p in _filtered_partitions(n, kind):
        cs = ContractionSet.from_partition(p)
        if cs.m == 0:
            continue
        limit = contraction_limit(cs, t, model)
        bound = model.K ** cs.m * simplex_volume(n - cs.m, t)
        for lam in lams:
            val = simplex_contraction_integral(n, cs, t, lam, model, cfg)
            rows.append({"n": n, "diagram_id": str(p), "type": cs.kind.value, "lambda": lam,
                         "re": val.real, "im": val.imag, "abs_err_vs_limit": abs(val - limit),
                         "bound": bound, "bound_margin": bound - abs(val)})
    return rows
