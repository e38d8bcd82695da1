"""Repeated-interaction integrator for the limit equation.

Time is cut into slices of length dt; each slice carries a fresh two-level
noise system in a product state (vacuum or truncated coherent).  The
increments on one slice are

    dA00 = dt I,  dA10 = sqrt(gamma dt) a^dag,  dA01 = sqrt(gamma dt) a,  dA11 = gamma N,

which reproduce dA^{a1} dA^{1b} = gamma dA^{ab} exactly on the slice vacuum.
One Euler step is S = I + sum_ab L_ab (x) dA^ab on system (x) slice.  Since
slice k is touched only by step k, a matrix element between product noise
states reduces to the ordered product of the partial elements
<w_k| S |w'_k>, and the slice can be discarded right away.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm, polar

from .dyson import SmearedAmplitude, VACUUM
from .errors import DomainError, InstabilityError, ModelError
from .limit_qsde import QsdeCoefficients, apply_superop, evans_hudson, limit_overlap, superop

ROLES = ((0, 0), (0, 1), (1, 0), (1, 1))
LEVELS = 2


@dataclass(frozen=True, eq=False)
class SliceSpace:
    gamma: float
    dt: float
    increments: dict = field(repr=False)
    ito_constant: float = 0.0

    def dA(self, alpha: int, beta: int) -> np.ndarray:
        return self.increments[(alpha, beta)]


def build_slices(gamma: float, dt: float, ito_constant: float | None = None) -> SliceSpace:
    """Slice increments for a two-level truncation.

    ``ito_constant`` replaces gamma as the value the Ito audit expects; it
    exists only to inject faults into the self-test.
    """
    if not gamma > 0 or not dt > 0:
        raise DomainError(f"need gamma > 0 and dt > 0, got {gamma}, {dt}")
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    ad = a.conj().T
    N = ad @ a
    inc = {
        (0, 0): dt * np.eye(LEVELS, dtype=complex),
        (1, 0): math.sqrt(gamma * dt) * ad,
        (0, 1): math.sqrt(gamma * dt) * a,
        (1, 1): gamma * N,
    }
    vac = np.array([1, 0], dtype=complex)
    for al in (0, 1):
        for be in (0, 1):
            lhs = inc[(al, 1)] @ inc[(1, be)] @ vac
            if np.max(np.abs(lhs - gamma * inc[(al, be)] @ vac)) > 1e-14 * max(1.0, gamma, gamma * dt):
                raise ModelError("slice increments violate the vacuum Ito table")
    return SliceSpace(float(gamma), float(dt), inc, float(gamma if ito_constant is None else ito_constant))


def ito_table_audit(slices: SliceSpace) -> dict:
    """Multiply all 16 increment pairs on the slice vacuum and classify them.

    Pairs dA^{a1} dA^{1b} are compared with c * dA^{ab}|0>, c the audit's Ito
    constant.  Every other pair must vanish at first order in dt: its
    vacuum action is reported together with its order in dt.
    """
    vac = np.array([1, 0], dtype=complex)
    rows = []
    worst = 0.0
    for x in ROLES:
        for y in ROLES:
            prod = slices.dA(*x) @ slices.dA(*y) @ vac
            if x[1] == 1 and y[0] == 1:
                target = slices.ito_constant * slices.dA(x[0], y[1]) @ vac
                res = float(np.max(np.abs(prod - target)))
                worst = max(worst, res)
                rows.append({"left": x, "right": y, "class": "table", "residual": res, "order": 1.0})
            else:
                size = float(np.max(np.abs(prod)))
                # increments scale as dt (00), sqrt(dt) (10, 01) or 1 (11)
                order = _dt_order(x) + _dt_order(y)
                cls = "zero" if size == 0.0 else "higher_order"
                if cls == "higher_order" and order <= 1.0:
                    worst = max(worst, size)
                rows.append({"left": x, "right": y, "class": cls, "residual": size, "order": order})
    n_table = sum(r["class"] == "table" for r in rows)
    return {"pairs": rows, "table_pairs": n_table, "vanishing_pairs": len(rows) - n_table,
            "max_residual": worst, "passed": worst <= 1e-14 * max(1.0, slices.gamma, slices.gamma * slices.dt)}


def _dt_order(role) -> float:
    return {(0, 0): 1.0, (1, 0): 0.5, (0, 1): 0.5, (1, 1): 0.0}[tuple(role)]


# ----------------------------------------------------------------------------
# noise states

@dataclass(frozen=True)
class NoiseState:
    """Vacuum, or coherent slices following the limit amplitudes of (bra, ket)."""

    amps: tuple[SmearedAmplitude, SmearedAmplitude] = (VACUUM, VACUUM)

    @property
    def is_vacuum(self) -> bool:
        return all(a.is_zero for a in self.amps)

    def slice_vectors(self, slices: SliceSpace, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Truncated coherent vectors of slice k (covering [k dt, (k+1) dt])."""
        mid = (k + 0.5) * slices.dt
        scale = math.sqrt(slices.dt / slices.gamma)
        z_bra = complex(np.conj(self.amps[0].h_limit(mid))) * scale
        z_ket = complex(np.conj(self.amps[1].h_limit(mid))) * scale
        return _trunc_coherent(z_bra), _trunc_coherent(z_ket)

    def tail_overlap(self, gamma: float, t: float) -> complex:
        """Overlap of the noise beyond time t, which U_t leaves untouched."""
        if self.is_vacuum:
            return 1.0 + 0j
        cut = tuple(SmearedAmplitude((max(a.interval[0], t), max(a.interval[1], t)), a.coupling) for a in self.amps)
        return limit_overlap(cut, gamma)


def _trunc_coherent(z: complex) -> np.ndarray:
    return math.exp(-0.5 * abs(z) ** 2) * np.array([1.0, z], dtype=complex)


VACUUM_NOISE = NoiseState()


# ----------------------------------------------------------------------------
# stepping

def step_operator(coeffs: QsdeCoefficients, slices: SliceSpace, repair: bool = False) -> np.ndarray:
    """I + sum L_ab (x) dA^ab on system (x) slice; polar factor when ``repair``."""
    d = coeffs.dim
    S = np.eye(d * LEVELS, dtype=complex)
    for ab in ROLES:
        S += np.kron(coeffs.coef(*ab), slices.dA(*ab))
    if repair:
        S, _ = polar(S)
    return S


def partial_element(S: np.ndarray, bra: np.ndarray, ket: np.ndarray, dim: int) -> np.ndarray:
    """(I (x) <bra|) S (I (x) |ket>)."""
    T = S.reshape(dim, LEVELS, dim, LEVELS)
    return np.einsum("b,ibjk,k->ij", bra.conj(), T, ket)


def _defect(S: np.ndarray, ket: np.ndarray, dim: int) -> float:
    G = partial_element(S.conj().T @ S, ket, ket, dim)
    return float(np.linalg.norm(G - np.vdot(ket, ket) * np.eye(dim), 2))


def defect_constant(coeffs: QsdeCoefficients) -> float:
    """A priori scale c for the per-step defect check, defect <= 10 c dt."""
    return 1.0 + sum(float(np.linalg.norm(coeffs.coef(*ab), 2)) ** 2 for ab in ROLES)


@dataclass
class Trajectory:
    n_slices: int
    dim: int
    dt: float
    operator: np.ndarray
    defects: np.ndarray
    repaired: bool = False
    records: list = field(default_factory=list)

    @property
    def c_estimate(self) -> float:
        return float(self.defects.max() / self.dt) if self.defects.size else 0.0


def _n_steps(slices: SliceSpace, n_steps: int | None, t: float | None) -> int:
    if n_steps is None:
        if t is None:
            raise DomainError("give n_steps or t")
        n_steps = int(round(t / slices.dt))
        if abs(n_steps * slices.dt - t) > 1e-9 * max(1.0, t):
            raise DomainError(f"t = {t} is not a multiple of dt = {slices.dt}")
    if n_steps < 0:
        raise DomainError("n_steps must be >= 0")
    return n_steps


def evolve_unitary(coeffs: QsdeCoefficients, slices: SliceSpace, n_steps: int | None = None,
                   phi1=None, phi2=None, noise: NoiseState = VACUUM_NOISE, repair: bool = False,
                   t: float | None = None) -> Trajectory:
    """Reduced propagator V = M_N ... M_1 with M_k = <w_k| S |w'_k>.

    <phi1 (x) w| U_t |phi2 (x) w'> = <phi1| V |phi2> times the overlap of the
    noise beyond t; V includes the overlaps of the consumed slices.  With both
    phi given, the full matrix element is recorded after every step.
    """
    n = _n_steps(slices, n_steps, t)
    d = coeffs.dim
    S = step_operator(coeffs, slices, repair)
    c_ref = defect_constant(coeffs)
    V = np.eye(d, dtype=complex)
    defects = np.zeros(n)
    records = []
    track = phi1 is not None and phi2 is not None
    if track:
        phi1 = np.asarray(phi1, dtype=complex)
        phi2 = np.asarray(phi2, dtype=complex)
    for k in range(n):
        bra, ket = noise.slice_vectors(slices, k)
        defects[k] = _defect(S, ket, d)
        if defects[k] > 10 * c_ref * slices.dt:
            raise InstabilityError(f"unitarity defect {defects[k]:.3e} at step {k + 1}; reduce dt below {slices.dt}")
        V = partial_element(S, bra, ket, d) @ V
        if track:
            val = complex(np.vdot(phi1, V @ phi2)) * noise.tail_overlap(slices.gamma, (k + 1) * slices.dt)
            records.append({"step": k + 1, "time": (k + 1) * slices.dt, "re": val.real, "im": val.imag,
                            "defect": defects[k]})
    return Trajectory(n, d, slices.dt, V, defects, repair, records)


def evolve_heisenberg(coeffs: QsdeCoefficients, slices: SliceSpace, X, n_steps: int | None = None,
                      noise: NoiseState = VACUUM_NOISE, scheme: str = "euler", repair: bool = False,
                      t: float | None = None) -> Trajectory:
    """Reduced Heisenberg evolute <w| J_t(X) |w'> as a system operator.

    ``euler``: each slice applies Y -> <w|w'> Y + sum_ab <w|dA^ab|w'> L_ab(Y),
    the Evans-Hudson flow step.  ``discrete``: each slice applies
    Y -> <w| S^dag (Y (x) 1) S |w'>, i.e. conjugation by the Euler unitary.
    Slice k is the innermost for the last time step, so maps are composed
    from the final slice back to the first.
    """
    n = _n_steps(slices, n_steps, t)
    d = coeffs.dim
    Y = np.asarray(X, dtype=complex).copy()
    defects = np.zeros(n)
    if scheme == "euler":
        eh = evans_hudson(coeffs)
        for k in reversed(range(n)):
            bra, ket = noise.slice_vectors(slices, k)
            new = np.vdot(bra, ket) * Y
            for ab in ROLES:
                w = np.vdot(bra, slices.dA(*ab) @ ket)
                if w != 0:
                    new = new + w * eh(*ab, Y)
            Y = new
    elif scheme == "discrete":
        S = step_operator(coeffs, slices, repair)
        Sd = S.conj().T
        eye = np.eye(LEVELS)
        c_ref = defect_constant(coeffs)
        for k in reversed(range(n)):
            bra, ket = noise.slice_vectors(slices, k)
            defects[k] = _defect(S, ket, d)
            if defects[k] > 10 * c_ref * slices.dt:
                raise InstabilityError(f"unitarity defect {defects[k]:.3e}; reduce dt below {slices.dt}")
            Y = partial_element(Sd @ np.kron(Y, eye) @ S, bra, ket, d)
    else:
        raise DomainError(f"unknown scheme {scheme!r}")
    return Trajectory(n, d, slices.dt, Y, defects, repair)


def schrodinger_matrix_elements(coeffs: QsdeCoefficients, slices: SliceSpace, X, phi1, phi2,
                                n_steps: int | None = None, noise: NoiseState = VACUUM_NOISE,
                                repair: bool = False, t: float | None = None) -> list[complex]:
    """<phi1 (x) w| U_k^dag (X (x) 1) U_k |phi2 (x) w'> after every step k, by forward conjugation.

    The system operator rho = |phi2><phi1| is pushed through
    rho -> tr_slice[S (rho (x) |w'><w|) S^dag]; the value is tr(X rho).
    Like the Heisenberg evolute, this leaves out the noise overlap beyond step k.
    """
    n = _n_steps(slices, n_steps, t)
    d = coeffs.dim
    S = step_operator(coeffs, slices, repair)
    Sd = S.conj().T
    X = np.asarray(X, dtype=complex)
    rho = np.outer(np.asarray(phi2, dtype=complex), np.asarray(phi1, dtype=complex).conj())
    out = []
    for k in range(n):
        bra, ket = noise.slice_vectors(slices, k)
        big = S @ np.kron(rho, np.outer(ket, bra.conj())) @ Sd
        rho = np.einsum("ibjb->ij", big.reshape(d, LEVELS, d, LEVELS))
        out.append(complex(np.trace(X @ rho)))
    return out


def coevolute(coeffs: QsdeCoefficients, slices: SliceSpace, X, n_steps: int | None = None,
              noise: NoiseState = VACUUM_NOISE, t: float | None = None) -> np.ndarray:
    """Reduced co-evolute <w| U_t (X (x) 1) U_t^dag |w'>, first slice innermost."""
    n = _n_steps(slices, n_steps, t)
    d = coeffs.dim
    S = step_operator(coeffs, slices)
    Sd = S.conj().T
    Y = np.asarray(X, dtype=complex).copy()
    eye = np.eye(LEVELS)
    for k in range(n):
        bra, ket = noise.slice_vectors(slices, k)
        Y = partial_element(S @ np.kron(Y, eye) @ Sd, bra, ket, d)
    return Y


def coevolute_generator(coeffs: QsdeCoefficients) -> np.ndarray:
    """X -> L_00 X + X L_00^dag + gamma L_01 X L_01^dag, the vacuum generator of the co-evolute."""
    L00, L01, g = coeffs.L00, coeffs.L01, coeffs.gamma
    return superop(lambda X: L00 @ X + X @ L00.conj().T + g * L01 @ X @ L01.conj().T, coeffs.dim)


def explicit_matrix_element(coeffs: QsdeCoefficients, slices: SliceSpace, bras: Sequence[np.ndarray],
                            kets: Sequence[np.ndarray], phi1, phi2, consumed: int) -> complex:
    """Matrix element of U after ``consumed`` steps on the full space system (x) all slices.

    Slice j (0-based) is acted on only by step j.  Used to test that
    unconsumed slices do not influence the result beyond their overlaps.
    """
    d = coeffs.dim
    n = len(bras)
    if len(kets) != n or not (0 <= consumed <= n):
        raise DomainError("bras/kets mismatch or consumed out of range")
    S = step_operator(coeffs, slices).reshape(d, LEVELS, d, LEVELS)
    dims = [d] + [LEVELS] * n
    state = np.asarray(phi2, dtype=complex)
    for k in kets:
        state = np.kron(state, k)
    state = state.reshape(dims)
    for j in range(consumed):
        # contract S over the system axis and slice axis j+1
        state = np.moveaxis(state, (0, j + 1), (0, 1))
        sh = state.shape
        state = np.einsum("abcd,cd...->ab...", S, state)
        state = np.moveaxis(state.reshape(sh), (0, 1), (0, j + 1))
    bra = np.asarray(phi1, dtype=complex)
    for b in bras:
        bra = np.kron(bra, b)
    return complex(np.vdot(bra, state.reshape(-1)))


# ----------------------------------------------------------------------------
# convergence

def convergence_ratios(errors: Sequence[float]) -> list[float]:
    return [a / b if b else math.inf for a, b in zip(errors, errors[1:])]


def vacuum_heisenberg_errors(coeffs: QsdeCoefficients, X, dts: Sequence[float], t: float, oracle: np.ndarray,
                             scheme: str = "euler", element: tuple[int, int] | None = None) -> list[float]:
    errs = []
    for dt in dts:
        J = evolve_heisenberg(coeffs, build_slices(coeffs.gamma, dt), X, t=t, scheme=scheme).operator
        if element is None:
            errs.append(float(np.linalg.norm(J - oracle, 2)))
        else:
            errs.append(abs(J[element] - oracle[element]))
    return errs


def coherent_errors(coeffs: QsdeCoefficients, amps, phi1, phi2, dts: Sequence[float], t: float,
                    oracle: complex) -> list[float]:
    errs = []
    for dt in dts:
        tr = evolve_unitary(coeffs, build_slices(coeffs.gamma, dt), t=t, phi1=phi1, phi2=phi2,
                            noise=NoiseState(tuple(amps)))
        errs.append(abs(complex(tr.records[-1]["re"], tr.records[-1]["im"]) - oracle))
    return errs
