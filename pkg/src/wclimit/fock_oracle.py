"""Brute-force truncated bosonic Fock space.

Test functions f_1..f_M with Gram matrix gram[i, j] = <f_i|f_j> are realised
by mixing orthonormal oscillators b_k: a_i = sum_k F[i, k] b_k with
F F^dagger = gram, so [a_i, a_j^dagger] = gram[i, j] below the cutoff.
The number of oscillators equals the numerical rank of the Gram matrix, so
a full-rank Gram gives the textbook dimension (d+1)^M.

Everything is dense.  The oracle refuses to answer when the truncation
could bias the result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DomainError, ModelError, PrecisionError

HERMITIAN_TOL = 1e-12
COHERENT_TOL = 1e-10


def _ladder(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1).astype(complex)


@dataclass(frozen=True, eq=False)
class TruncatedFock:
    modes: int
    cutoff: int
    gram: np.ndarray
    factor: np.ndarray = field(repr=False)

    @property
    def oscillators(self) -> int:
        return self.factor.shape[1]

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** self.oscillators

    @cached_property
    def _b(self) -> list[np.ndarray]:
        d = self.cutoff + 1
        r = self.oscillators
        eye = np.eye(d, dtype=complex)
        a = _ladder(self.cutoff)
        out = []
        for k in range(r):
            op = np.ones((1, 1), dtype=complex)
            for l in range(r):
                op = np.kron(op, a if l == k else eye)
            out.append(op)
        return out

    @cached_property
    def _annihilators(self) -> list[np.ndarray]:
        ops = []
        for i in range(self.modes):
            a = np.zeros((self.dim, self.dim), dtype=complex)
            for k, b in enumerate(self._b):
                if self.factor[i, k] != 0:
                    a += self.factor[i, k] * b
            ops.append(a)
        return ops

    def annihilator(self, i: int) -> np.ndarray:
        return self._annihilators[i]

    def creator(self, i: int) -> np.ndarray:
        return self._annihilators[i].conj().T

    def vacuum(self) -> "FockVector":
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return FockVector(self, v)

    def low_sector_projector(self) -> np.ndarray:
        """Diagonal projector onto basis states with every occupation below the cutoff."""
        d = self.cutoff + 1
        occ = np.indices((d,) * self.oscillators).reshape(self.oscillators, -1)
        keep = np.all(occ < self.cutoff, axis=0)
        return np.diag(keep.astype(float))


@dataclass(frozen=True, eq=False)
class FockVector:
    space: TruncatedFock
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def build_space(modes: int, cutoff: int, gram, tol: float = HERMITIAN_TOL) -> TruncatedFock:
    gram = np.atleast_2d(np.asarray(gram, dtype=complex))
    if modes < 1 or cutoff < 1:
        raise ModelError(f"need modes >= 1 and cutoff >= 1, got {modes}, {cutoff}")
    if gram.shape != (modes, modes):
        raise ModelError(f"gram has shape {gram.shape}, expected ({modes}, {modes})")
    if np.max(np.abs(gram - gram.conj().T)) > tol:
        raise ModelError("gram matrix is not Hermitian")
    gram = 0.5 * (gram + gram.conj().T)
    w, v = np.linalg.eigh(gram)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w.min() < -1e-10 * scale:
        raise ModelError(f"gram matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
    keep = w > 1e-13 * scale
    if not keep.any():
        keep[-1] = True
    factor = v[:, keep] * np.sqrt(np.clip(w[keep], 0.0, None))
    return TruncatedFock(modes, cutoff, gram, factor)


def vacuum_moment_bruteforce(space: TruncatedFock, word: Sequence[tuple[int, int, int, int]]) -> complex:
    """Vacuum expectation of a vertex word.

    ``word[i-1] = (alpha_i, beta_i, create_mode, annihilate_mode)`` describes
    vertex i, which contributes [a^dagger]^alpha [a]^beta.  Vertex n stands
    leftmost, so vertex 1 acts on the vacuum first.
    """
    n = len(word)
    if n > 8:
        raise DomainError(f"word length {n} exceeds the oracle limit 8")
    if space.cutoff < n:
        raise DomainError(f"cutoff {space.cutoff} below word length {n}; truncation would bias the moment")
    v = space.vacuum().amplitudes
    for alpha, beta, c, a in word:
        if beta:
            v = space.annihilator(a) @ v
        if alpha:
            v = space.creator(c) @ v
    return complex(v[0])


def coherent_vector(space: TruncatedFock, amplitudes: Sequence[complex], tol: float = COHERENT_TOL) -> FockVector:
    """Normalised coherent vector W(u) Phi for u = sum_i z_i f_i."""
    z = np.asarray(amplitudes, dtype=complex).reshape(space.modes)
    beta = z @ space.factor.conj()
    d = space.cutoff + 1
    out = np.ones(1, dtype=complex)
    for b in beta:
        mean = abs(b) ** 2
        tail = _poisson_tail(mean, space.cutoff)
        if tail > tol:
            need = _required_cutoff(mean, tol)
            raise PrecisionError(
                f"coherent amplitude |z|^2={mean:.3g} needs cutoff >= {need} (have {space.cutoff})"
            )
        single = np.zeros(d, dtype=complex)
        single[0] = math.exp(-0.5 * mean)
        for k in range(1, d):
            single[k] = single[k - 1] * b / math.sqrt(k)
        out = np.kron(out, single)
    return FockVector(space, out)


def _poisson_tail(mean: float, cutoff: int) -> float:
    """P(N > cutoff) for N ~ Poisson(mean)."""
    if mean == 0:
        return 0.0
    term = math.exp(-mean)
    acc = term
    for k in range(1, cutoff + 1):
        term *= mean / k
        acc += term
    return max(0.0, 1.0 - acc)


def _required_cutoff(mean: float, tol: float) -> int:
    d = 1
    while _poisson_tail(mean, d) > tol:
        d += 1
    return d


def overlap(u: FockVector, v: FockVector) -> complex:
    return complex(np.vdot(u.amplitudes, v.amplitudes))


def coherent_overlap_closed_form(gram, z1: Sequence[complex], z2: Sequence[complex]) -> complex:
    """exp{<u1,u2> - |u1|^2/2 - |u2|^2/2} for u = sum_i z_i f_i."""
    g = np.asarray(gram, dtype=complex)
    a = np.asarray(z1, dtype=complex)
    b = np.asarray(z2, dtype=complex)
    cross = a.conj() @ g @ b
    n1 = (a.conj() @ g @ a).real
    n2 = (b.conj() @ g @ b).real
    return complex(np.exp(cross - 0.5 * n1 - 0.5 * n2))
