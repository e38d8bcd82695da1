"""Vacuum moments of creation / scattering / annihilation words.

A word has vertices 1..n, vertex n written leftmost:

    [A+(f_n)]^a_n [A-(g_n)]^b_n ... [A+(f_1)]^a_1 [A-(g_1)]^b_1

Its vacuum expectation is a sum over set partitions of {1..n}.  A part
{i1 < ... < ik} with k >= 2 is a chain: emission at i1 (a=1, b=0),
scattering at the intermediate labels (a=b=1) and absorption at ik
(a=0, b=1); it contributes <g_ik|f_i(k-1)> ... <g_i2|f_i1>.  A singleton
needs a neutral vertex (a=b=0) and contributes 1.  Any other assignment
contributes 0.

Two evaluators are provided: a direct sum over partitions and a sum over
occupation sequences and Pule permutations.  They share no enumeration
code and must agree to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from . import combinatorics as cb
from .fock_oracle import build_space, vacuum_moment_bruteforce


@dataclass(frozen=True)
class Vertex:
    alpha: int
    beta: int
    f: Hashable
    g: Hashable


@dataclass(frozen=True, eq=False)
class VertexWord:
    """Vertices listed 1..n, plus the inner product <g|f> on test-function ids.

    ``inner`` is either a callable (gid, fid) -> complex or a Gram matrix
    indexed by integer ids, gram[g, f] = <g|f>.
    """

    vertices: tuple[Vertex, ...]
    inner: Callable[[Hashable, Hashable], complex] | np.ndarray

    @property
    def n(self) -> int:
        return len(self.vertices)

    def ip(self, gid, fid) -> complex:
        if callable(self.inner):
            return complex(self.inner(gid, fid))
        return complex(self.inner[gid, fid])

    @classmethod
    def from_tuples(cls, items: Sequence[tuple[int, int, Hashable, Hashable]], inner) -> "VertexWord":
        return cls(tuple(Vertex(*it) for it in items), inner)

    def adjoint(self) -> "VertexWord":
        """Word of the adjoint operator, relabelled so vertex 1 is again rightmost."""
        verts = tuple(Vertex(v.beta, v.alpha, v.g, v.f) for v in reversed(self.vertices))
        if callable(self.inner):
            inner = self.inner
            return VertexWord(verts, lambda g, f: inner(g, f))
        return VertexWord(verts, self.inner)


def part_weight(word: VertexWord, part: Sequence[int]) -> complex:
    """Contribution of one part, zero when its vertices cannot form a chain."""
    vs = word.vertices
    if len(part) == 1:
        v = vs[part[0] - 1]
        return 1.0 + 0j if (v.alpha == 0 and v.beta == 0) else 0j
    first, last = vs[part[0] - 1], vs[part[-1] - 1]
    if not (first.alpha == 1 and first.beta == 0 and last.alpha == 0 and last.beta == 1):
        return 0j
    for i in part[1:-1]:
        v = vs[i - 1]
        if not (v.alpha == 1 and v.beta == 1):
            return 0j
    w = 1.0 + 0j
    for a, b in zip(part, part[1:]):
        w *= word.ip(vs[b - 1].g, vs[a - 1].f)
    return w


def partition_weight(word: VertexWord, p: cb.SetPartition) -> complex:
    w = 1.0 + 0j
    for part in p.parts:
        w *= part_weight(word, part)
        if w == 0:
            return 0j
    return w


def vacuum_moment_partition(word: VertexWord, cap: int = cb.DEFAULT_CAP) -> complex:
    total = 0j
    for p in cb.enumerate_partitions(word.n, cap):
        total += partition_weight(word, p)
    return total


def vacuum_moment_pule(word: VertexWord, cap: int = cb.DEFAULT_CAP) -> complex:
    """Same moment, organised by occupation sequence and Pule permutation."""
    n = word.n
    total = 0j
    for occ in cb.occupations_of_size(n):
        q = cb.canonical_labelling(occ)
        blocks = occ.blocks()
        for rho in cb.enumerate_pule_permutations(occ, cap):
            w = 1.0 + 0j
            for j, k in blocks:
                chain = [rho.mapping[q(j, k, r) - 1] for r in range(1, j + 1)]
                w *= part_weight(word, chain)
                if w == 0:
                    break
            total += w
    return total


def admissible_partitions(word: VertexWord, cap: int = cb.DEFAULT_CAP) -> list[cb.SetPartition]:
    """Partitions whose every part passes the chain rules (weights may still vanish)."""
    out = []
    for p in cb.enumerate_partitions(word.n, cap):
        if all(_chain_ok(word, part) for part in p.parts):
            out.append(p)
    return out


def _chain_ok(word: VertexWord, part) -> bool:
    vs = word.vertices
    if len(part) == 1:
        v = vs[part[0] - 1]
        return v.alpha == 0 and v.beta == 0
    roles = [(vs[i - 1].alpha, vs[i - 1].beta) for i in part]
    return roles[0] == (1, 0) and roles[-1] == (0, 1) and all(r == (1, 1) for r in roles[1:-1])


def diagram_rule_partitions(word: VertexWord) -> list[cb.SetPartition]:
    """Diagrams built by joining each creator to a later annihilator.

    Every creator must be joined to exactly one annihilator standing to its
    left (a later vertex) and vice versa; neutral vertices stay alone.
    Each complete joining yields a set of chains, i.e. a partition.
    """
    vs = word.vertices
    n = len(vs)
    creators = [i for i in range(1, n + 1) if vs[i - 1].alpha]
    absorbers = [i for i in range(1, n + 1) if vs[i - 1].beta]
    if len(creators) != len(absorbers):
        return []
    found: list[cb.SetPartition] = []

    def rec(ci: int, used: frozenset, nxt: dict):
        if ci == len(creators):
            found.append(_chains_to_partition(n, nxt))
            return
        c = creators[ci]
        for a in absorbers:
            if a > c and a not in used:
                nxt[c] = a
                rec(ci + 1, used | {a}, nxt)
                del nxt[c]

    rec(0, frozenset(), {})
    return found


def _chains_to_partition(n: int, nxt: dict[int, int]) -> cb.SetPartition:
    has_prev = set(nxt.values())
    parts = []
    for start in range(1, n + 1):
        if start in has_prev:
            continue
        chain = [start]
        while chain[-1] in nxt:
            chain.append(nxt[chain[-1]])
        parts.append(tuple(chain))
    return cb.SetPartition(n, tuple(parts))


def vacuum_moment_fock(word: VertexWord) -> complex:
    """Brute-force value of the moment; ``word.inner`` must be a Gram matrix."""
    gram = np.asarray(word.inner, dtype=complex)
    space = build_space(gram.shape[0], max(1, word.n), gram)
    spec = [(v.alpha, v.beta, v.f, v.g) for v in word.vertices]
    return vacuum_moment_bruteforce(space, spec)


def random_word(rng: np.random.Generator, n: int, n_functions: int = 4, rank: int = 2,
                structured: bool = True) -> VertexWord:
    """Random word over a random complex Gram matrix of the given rank.

    With ``structured`` the roles are read off a random partition so that at
    least one diagram is admissible; otherwise roles are random bits.
    """
    vecs = rng.normal(size=(n_functions, rank)) + 1j * rng.normal(size=(n_functions, rank))
    vecs /= np.sqrt(rank)
    gram = vecs.conj() @ vecs.T
    if structured:
        parts = _random_partition(rng, n)
        roles = [(0, 0)] * n
        for part in parts:
            if len(part) == 1:
                continue
            roles[part[0] - 1] = (1, 0)
            roles[part[-1] - 1] = (0, 1)
            for i in part[1:-1]:
                roles[i - 1] = (1, 1)
    else:
        roles = [(int(rng.integers(2)), int(rng.integers(2))) for _ in range(n)]
    fs = rng.integers(n_functions, size=n)
    gs = rng.integers(n_functions, size=n)
    verts = tuple(Vertex(a, b, int(f), int(g)) for (a, b), f, g in zip(roles, fs, gs))
    return VertexWord(verts, gram)


def _random_partition(rng: np.random.Generator, n: int) -> list[list[int]]:
    labels = rng.integers(0, n, size=n)
    blocks: dict[int, list[int]] = {}
    for i, b in enumerate(labels, start=1):
        blocks.setdefault(int(b), []).append(i)
    return sorted(blocks.values())


def poisson_moment_check(intensity: float, order: int, points: int = 256) -> tuple[float, float]:
    """n-th Poisson moment two ways: Stirling sum and a Cauchy-integral derivative.

    The derivative of the characteristic function exp{lam(e^{it}-1)} at 0
    is taken as a trapezoidal contour integral on a circle whose radius sits
    at the saddle point of |phi(z)|/|z|^n, which keeps cancellation small.
    """
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    if not (0 <= order <= 20):
        raise ValueError("order must lie in 0..20")
    lam = float(intensity)
    lhs = float(sum(cb.stirling2(order, m) * lam ** m for m in range(order + 1)))
    if order == 0:
        return lhs, 1.0
    radius = _saddle_radius(lam, order)
    theta = 2 * np.pi * np.arange(points) / points
    # phi(z) with z = -i * radius * e^{i theta} so that phi(z) = M(radius e^{i theta}).
    z = -1j * radius * np.exp(1j * theta)
    phi = np.exp(lam * (np.exp(1j * z) - 1.0))
    # d^n phi / dz^n at 0, by Cauchy's formula along the circle z(theta).
    coeff = np.mean(phi * np.exp(-1j * order * theta)) / (-1j * radius) ** order
    deriv = coeff * math.factorial(order)
    rhs = (deriv / (1j ** order)).real
    return lhs, float(rhs)


def _saddle_radius(lam: float, n: int) -> float:
    # Solve lam * r * e^r = n by Newton iteration.
    r = max(1e-3, math.log1p(n / lam))
    for _ in range(60):
        f = lam * r * math.exp(r) - n
        df = lam * math.exp(r) * (1 + r)
        step = f / df
        r -= step
        if abs(step) < 1e-14 * max(1.0, r):
            break
    return max(r, 1e-3)
