"""Set partitions, occupation sequences and Pule permutations.

A set partition of {1..n} describes one diagram of a Dyson term: every part
is a chain in which a quantum is created at the smallest label, scattered at
the intermediate labels and absorbed at the largest one.  Singletons are
vertices that take no part in any contraction.

Partitions are always kept in canonical form: each part is an increasing
tuple and parts are sorted by their smallest element.  All enumerations
return lists in a fixed deterministic order.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from .errors import CapacityError, DomainError

DEFAULT_CAP = 12
EXACT_LIMIT = 25


@dataclass(frozen=True)
class SetPartition:
    """A partition of {1..n} in canonical form."""

    n: int
    parts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"partition of an empty ground set (n={self.n})")
        parts = tuple(sorted((tuple(sorted(p)) for p in self.parts), key=lambda p: p[0] if p else 0))
        seen: list[int] = []
        for p in parts:
            if not p:
                raise DomainError("partition contains an empty part")
            seen.extend(p)
        if sorted(seen) != list(range(1, self.n + 1)):
            raise DomainError(f"parts {parts} do not partition 1..{self.n}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]]) -> "SetPartition":
        n = sum(len(b) for b in blocks)
        return cls(n, tuple(tuple(b) for b in blocks))

    def __len__(self) -> int:
        return len(self.parts)

    def block_of(self) -> list[int]:
        """Index of the part containing each label, as a list over 1..n."""
        out = [0] * self.n
        for b, part in enumerate(self.parts):
            for i in part:
                out[i - 1] = b
        return out

    def links(self) -> list[tuple[int, int]]:
        """Consecutive pairs (earlier, later) inside every part."""
        return [(p[r], p[r + 1]) for p in self.parts for r in range(len(p) - 1)]

    def __str__(self) -> str:
        sep = "" if self.n < 10 else ","
        return "|".join(sep.join(str(i) for i in p) for p in self.parts)


@dataclass(frozen=True)
class OccupationSequence:
    """Counts n_j of parts of size j, stored as sorted (j, n_j) pairs with n_j > 0."""

    counts: tuple[tuple[int, int], ...]

    def __post_init__(self):
        clean = {}
        for j, nj in self.counts:
            if j < 1 or nj < 0:
                raise DomainError(f"invalid occupation entry ({j}, {nj})")
            if nj:
                clean[j] = clean.get(j, 0) + nj
        object.__setattr__(self, "counts", tuple(sorted(clean.items())))

    @classmethod
    def from_dict(cls, counts: dict[int, int]) -> "OccupationSequence":
        return cls(tuple(counts.items()))

    def as_dict(self) -> dict[int, int]:
        return dict(self.counts)

    def __getitem__(self, j: int) -> int:
        return self.as_dict().get(j, 0)

    @property
    def E(self) -> int:
        return sum(j * nj for j, nj in self.counts)

    @property
    def N(self) -> int:
        return sum(nj for _, nj in self.counts)

    def shape_count(self) -> int:
        """Number of set partitions with this occupation: n!/prod((j!)^n_j n_j!)."""
        den = 1
        for j, nj in self.counts:
            den *= math.factorial(j) ** nj * math.factorial(nj)
        return math.factorial(self.E) // den

    def blocks(self) -> list[tuple[int, int]]:
        """The (j, k) block labels in canonical order: by size j, then by k."""
        return [(j, k) for j, nj in self.counts for k in range(1, nj + 1)]

    def __str__(self) -> str:
        return ",".join(f"n{j}={nj}" for j, nj in self.counts)


@dataclass(frozen=True)
class PulePermutation:
    """A permutation rho of {1..n}; ``mapping[i-1]`` is rho(i)."""

    n: int
    mapping: tuple[int, ...]
    occupation: OccupationSequence

    def partition(self) -> SetPartition:
        q = canonical_labelling(self.occupation)
        parts = []
        for j, k in self.occupation.blocks():
            parts.append(tuple(self.mapping[q(j, k, r) - 1] for r in range(1, j + 1)))
        return SetPartition(self.n, tuple(parts))


class DiagramType(enum.Enum):
    TYPE_I = "I"
    TYPE_II = "II"


def _check_cap(n: int, cap: int) -> None:
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if n > cap:
        raise CapacityError(f"n={n} exceeds the enumeration cap {cap}")


def iter_partitions(n: int) -> Iterator[SetPartition]:
    """Yield every partition of {1..n} via restricted growth strings.

    The order is lexicographic in the growth string, which lists parts by
    their smallest element and is therefore already canonical.
    """
    a = [0] * n

    def emit():
        blocks: list[list[int]] = []
        for i, b in enumerate(a):
            if b == len(blocks):
                blocks.append([])
            blocks[b].append(i + 1)
        return SetPartition(n, tuple(tuple(b) for b in blocks))

    def rec(i: int, mx: int):
        if i == n:
            yield emit()
            return
        for b in range(mx + 2):
            a[i] = b
            yield from rec(i + 1, max(mx, b))

    if n == 1:
        yield SetPartition(1, ((1,),))
        return
    a[0] = 0
    yield from rec(1, 0)


def enumerate_partitions(n: int, cap: int = DEFAULT_CAP) -> list[SetPartition]:
    _check_cap(n, cap)
    return list(iter_partitions(n))


def stirling2(n: int, m: int) -> int:
    """Stirling number of the second kind from the alternating closed form."""
    if not (0 <= m <= n <= EXACT_LIMIT):
        raise DomainError(f"stirling2({n}, {m}) outside 0 <= m <= n <= {EXACT_LIMIT}")
    if m == 0:
        return 1 if n == 0 else 0
    total = sum((-1) ** (l + m) * l ** n * math.comb(m, l) for l in range(1, m + 1))
    s, rem = divmod(total, math.factorial(m))
    assert rem == 0
    return s


def bell_number(n: int) -> int:
    if not (0 <= n <= EXACT_LIMIT):
        raise DomainError(f"bell_number({n}) outside 0 <= n <= {EXACT_LIMIT}")
    return sum(stirling2(n, m) for m in range(n + 1))


def occupation_of(p: SetPartition) -> OccupationSequence:
    counts: dict[int, int] = {}
    for part in p.parts:
        counts[len(part)] = counts.get(len(part), 0) + 1
    return OccupationSequence.from_dict(counts)


def integer_partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    """Integer partitions of n as non-increasing tuples."""
    if largest is None:
        largest = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in integer_partitions(n - first, first):
            yield (first,) + rest


def occupations_of_size(n: int) -> list[OccupationSequence]:
    """All occupation sequences with E = n, one per integer partition of n."""
    out = []
    for parts in integer_partitions(n):
        counts: dict[int, int] = {}
        for j in parts:
            counts[j] = counts.get(j, 0) + 1
        out.append(OccupationSequence.from_dict(counts))
    return out


def canonical_labelling(occ: OccupationSequence) -> Callable[[int, int, int], int]:
    """The canonical labelling q(j, k, r) of an occupation sequence.

    Blocks are laid out by size and then by k, so the k-th block of size j
    starts after all smaller blocks and after k-1 blocks of its own size:
    q(j, k, r) = sum_{l<j} l*n_l + (k-1)*j + r.
    """
    if occ.E < 1:
        raise DomainError("labelling of an empty occupation sequence")
    counts = occ.as_dict()
    offset = {}
    acc = 0
    for j in sorted(counts):
        offset[j] = acc
        acc += j * counts[j]

    def q(j: int, k: int, r: int) -> int:
        if j not in counts or not (1 <= k <= counts[j]) or not (1 <= r <= j):
            raise DomainError(f"label ({j}, {k}, {r}) not defined for {occ}")
        return offset[j] + (k - 1) * j + r

    return q


def is_pule_permutation(mapping: Sequence[int], occ: OccupationSequence) -> bool:
    """Check block-order preservation and chronology inside each block."""
    n = occ.E
    if sorted(mapping) != list(range(1, n + 1)):
        return False
    q = canonical_labelling(occ)
    for j, nj in occ.counts:
        heads = [mapping[q(j, k, 1) - 1] for k in range(1, nj + 1)]
        if any(a >= b for a, b in zip(heads, heads[1:])):
            return False
        for k in range(1, nj + 1):
            chain = [mapping[q(j, k, r) - 1] for r in range(1, j + 1)]
            if any(a >= b for a, b in zip(chain, chain[1:])):
                return False
    return True


def enumerate_pule_permutations(occ: OccupationSequence, cap: int = DEFAULT_CAP) -> list[PulePermutation]:
    """All permutations that reorder the canonical labelling into a partition of shape ``occ``.

    Blocks are filled in canonical order; a block takes j of the remaining
    labels, and blocks of equal size must have increasing heads.
    """
    n = occ.E
    _check_cap(n, cap)
    q = canonical_labelling(occ)
    blocks = occ.blocks()
    out: list[PulePermutation] = []
    mapping = [0] * n

    def rec(b: int, remaining: tuple[int, ...], prev_head: int):
        if b == len(blocks):
            out.append(PulePermutation(n, tuple(mapping), occ))
            return
        j, k = blocks[b]
        for chosen in itertools.combinations(remaining, j):
            if k > 1 and chosen[0] <= prev_head:
                continue
            for r, label in enumerate(chosen, start=1):
                mapping[q(j, k, r) - 1] = label
            rest = tuple(x for x in remaining if x not in chosen)
            nxt = blocks[b + 1] if b + 1 < len(blocks) else None
            head = chosen[0] if nxt is not None and nxt[0] == j else 0
            rec(b + 1, rest, head)

    rec(0, tuple(range(1, n + 1)), 0)
    return out


def classify_type(p: SetPartition) -> DiagramType:
    """Type I iff every part is a run of consecutive integers."""
    for part in p.parts:
        if part[-1] - part[0] != len(part) - 1:
            return DiagramType.TYPE_II
    return DiagramType.TYPE_I
