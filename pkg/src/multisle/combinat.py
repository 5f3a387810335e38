"""Planar link patterns and general pair partitions.

Indices are 1-based throughout, matching the labelling x_1 < ... < x_{2N}
of boundary points.  A pairing is stored as a tuple of ``(a, b)`` tuples
with ``a < b``, sorted by ``a``.  Both enumeration routines produce their
output in lexicographic order of this canonical tuple.

The text form used by the command line and the CSV reports is
``"1-4,2-3"``; the empty pattern is written ``"-"``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "EnumerationCapError",
    "LinkPatternError",
    "LinkPattern",
    "PairPartition",
    "LINK_PATTERN_CAP",
    "PAIR_PARTITION_CAP",
    "catalan",
    "double_factorial",
    "enumerate_link_patterns",
    "enumerate_pair_partitions",
    "sign",
    "is_planar",
    "remove_link",
    "insert_link",
    "split",
    "pairing_table",
    "link_pattern_table",
]

#: Largest N accepted by :func:`enumerate_link_patterns` by default.
LINK_PATTERN_CAP = 12
#: Largest N accepted by :func:`enumerate_pair_partitions` by default.
PAIR_PARTITION_CAP = 10


class EnumerationCapError(ValueError):
    """Raised when an enumeration would exceed the configured size cap."""


class LinkPatternError(ValueError):
    """Raised for malformed pairings or for operations on absent links."""


def catalan(n: int) -> int:
    """Catalan number C_n = binom(2n, n) / (n + 1)."""
    return comb(2 * n, n) // (n + 1)


def double_factorial(m: int) -> int:
    """Return m!! with the convention (-1)!! = 0!! = 1."""
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def _canonical(pairs: Iterable[Sequence[int]]) -> tuple[tuple[int, int], ...]:
    out = []
    for p in pairs:
        if len(p) != 2:
            raise LinkPatternError(f"pair {p!r} does not have two entries")
        a, b = int(p[0]), int(p[1])
        if a == b:
            raise LinkPatternError(f"degenerate pair {p!r}")
        out.append((min(a, b), max(a, b)))
    out.sort()
    n = len(out)
    seen = sorted(i for p in out for i in p)
    if seen != list(range(1, 2 * n + 1)):
        raise LinkPatternError(
            f"pairs {out} do not partition {{1, ..., {2 * n}}} exactly"
        )
    return tuple(out)


def _crossing(p: tuple[int, int], q: tuple[int, int]) -> bool:
    (a, b), (c, d) = sorted((p, q))
    return a < c < b < d


def _parse_text(text: str) -> list[tuple[int, int]]:
    text = text.strip()
    if text in ("", "-", "{}"):
        return []
    pairs = []
    for chunk in text.split(","):
        try:
            a, b = chunk.split("-")
            pairs.append((int(a), int(b)))
        except ValueError as exc:
            raise LinkPatternError(f"cannot parse pair {chunk!r}") from exc
    return pairs


def _to_text(pairs: Sequence[tuple[int, int]]) -> str:
    return ",".join(f"{a}-{b}" for a, b in pairs) if pairs else "-"


@dataclass(frozen=True, order=True)
class PairPartition:
    """A pairing of {1, ..., 2N}, planar or not.

    Parameters
    ----------
    pairs : sequence of index pairs
        Any order is accepted; the stored form is canonical.
    """

    pairs: tuple[tuple[int, int], ...]

    def __init__(self, pairs: Iterable[Sequence[int]]):
        object.__setattr__(self, "pairs", _canonical(pairs))

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @classmethod
    def parse(cls, text: str) -> "PairPartition":
        return cls(_parse_text(text))

    def __str__(self) -> str:
        return _to_text(self.pairs)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def partner(self, i: int) -> int:
        """Index paired with ``i``."""
        for a, b in self.pairs:
            if a == i:
                return b
            if b == i:
                return a
        raise LinkPatternError(f"index {i} not present")

    def to_link_pattern(self) -> "LinkPattern":
        return LinkPattern(self.pairs)


@dataclass(frozen=True, order=True)
class LinkPattern:
    """A planar (noncrossing) pairing of {1, ..., 2N}.

    Examples
    --------
    >>> LinkPattern([(1, 4), (2, 3)])
    LinkPattern('1-4,2-3')
    >>> LinkPattern.parse("1-2,3-4").n_links
    2
    """

    links: tuple[tuple[int, int], ...]

    def __init__(self, links: Iterable[Sequence[int]]):
        canon = _canonical(links)
        for i, p in enumerate(canon):
            if (p[1] - p[0]) % 2 == 0:
                raise LinkPatternError(f"link {p} joins indices of equal parity")
            for q in canon[i + 1:]:
                if _crossing(p, q):
                    raise LinkPatternError(f"links {p} and {q} cross")
        object.__setattr__(self, "links", canon)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @classmethod
    def parse(cls, text: str) -> "LinkPattern":
        return cls(_parse_text(text))

    def __str__(self) -> str:
        return _to_text(self.links)

    def __repr__(self) -> str:
        return f"LinkPattern({str(self)!r})"

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.links)

    def __len__(self) -> int:
        return len(self.links)

    def __contains__(self, link) -> bool:
        a, b = sorted(link)
        return (a, b) in self.links

    def partner(self, i: int) -> int:
        for a, b in self.links:
            if a == i:
                return b
            if b == i:
                return a
        raise LinkPatternError(f"index {i} not present")

    def to_pair_partition(self) -> PairPartition:
        return PairPartition(self.links)

    def index_array(self) -> np.ndarray:
        """Zero-based ``(N, 2)`` integer array of the links."""
        return np.array(self.links, dtype=np.intp).reshape(-1, 2) - 1


# ---------------------------------------------------------------------------
# enumeration


def _pairings(n: int) -> Iterator[tuple[tuple[int, int], ...]]:
    # Pair the smallest free index with each candidate in increasing order;
    # this visits pairings in lexicographic order of the canonical tuple.
    def rec(free: tuple[int, ...]):
        if not free:
            yield ()
            return
        a = free[0]
        for k in range(1, len(free)):
            rest = free[1:k] + free[k + 1:]
            for tail in rec(rest):
                yield ((a, free[k]),) + tail

    yield from rec(tuple(range(1, 2 * n + 1)))


def _planar_pairings(n: int) -> Iterator[tuple[tuple[int, int], ...]]:
    # Same order as _pairings restricted to noncrossing pairings: the
    # smallest free index a may only pair with b when every index strictly
    # between them is still free, and their count is even.
    m = 2 * n

    def rec(free: list[bool], start: int):
        a = start
        while a <= m and not free[a]:
            a += 1
        if a > m:
            yield ()
            return
        free[a] = False
        b = a + 1
        while b <= m and free[b]:
            if (b - a) % 2 == 1:
                free[b] = False
                for tail in rec(free, a + 1):
                    yield ((a, b),) + tail
                free[b] = True
            b += 1
        free[a] = True

    yield from rec([False] + [True] * m, 1)


def enumerate_link_patterns(n: int, cap: int = LINK_PATTERN_CAP) -> list[LinkPattern]:
    """All C_N planar link patterns on 2N points, in lexicographic order.

    Raises
    ------
    EnumerationCapError
        If ``n > cap``.
    """
    if n < 0:
        raise ValueError("N must be non-negative")
    if n > cap:
        raise EnumerationCapError(f"N={n} exceeds the link-pattern cap {cap}")
    return [LinkPattern(p) for p in _planar_pairings(n)]


def enumerate_pair_partitions(n: int, cap: int = PAIR_PARTITION_CAP) -> list[PairPartition]:
    """All (2N-1)!! pair partitions of 2N points, in lexicographic order."""
    if n < 0:
        raise ValueError("N must be non-negative")
    if n > cap:
        raise EnumerationCapError(f"N={n} exceeds the pair-partition cap {cap}")
    return [PairPartition(p) for p in _pairings(n)]


def _perm_sign(seq: Sequence[int]) -> int:
    # parity via cycle decomposition of the 1-based permutation
    perm = [s - 1 for s in seq]
    seen = [False] * len(perm)
    parity = 0
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        parity += length - 1
    return -1 if parity % 2 else 1


def sign(pairing: PairPartition | LinkPattern) -> int:
    """Sign of a pairing.

    This is the sign of prod (a - c)(a - d)(b - c)(b - d) over unordered
    pairs of distinct pairs {a, b}, {c, d}, and coincides with the sign of
    the permutation (a_1 b_1 a_2 b_2 ...).

    Examples
    --------
    >>> sign(PairPartition([(1, 3), (2, 4)]))
    -1
    """
    pairs = pairing.pairs if isinstance(pairing, PairPartition) else pairing.links
    return _perm_sign([i for p in pairs for i in p])


def is_planar(pairing: PairPartition) -> bool:
    """True iff no two pairs interleave."""
    pairs = pairing.pairs
    return not any(
        _crossing(p, q) for i, p in enumerate(pairs) for q in pairs[i + 1:]
    )


# ---------------------------------------------------------------------------
# surgery


def remove_link(alpha: LinkPattern, j: int) -> LinkPattern:
    """Remove the link {j, j+1} and relabel the remaining indices in order."""
    if (j, j + 1) not in alpha.links:
        raise LinkPatternError(f"link {{{j},{j + 1}}} is not in {alpha}")

    def relabel(i: int) -> int:
        return i - 2 if i > j + 1 else i

    return LinkPattern(
        (relabel(a), relabel(b)) for a, b in alpha.links if a != j
    )


def insert_link(alpha: LinkPattern, j: int) -> LinkPattern:
    """Inverse of :func:`remove_link`: open a new link {j, j+1}."""
    if not 1 <= j <= 2 * alpha.n_links + 1:
        raise LinkPatternError(f"insertion slot {j} out of range")

    def relabel(i: int) -> int:
        return i + 2 if i >= j else i

    links = [(relabel(a), relabel(b)) for a, b in alpha.links]
    return LinkPattern(links + [(j, j + 1)])


def split(alpha: LinkPattern, a: int, b: int) -> tuple[LinkPattern, LinkPattern]:
    """Cut a link pattern along the link {a, b}.

    Returns
    -------
    right, left : LinkPattern
        ``right`` lives on the indices a+1, ..., b-1 and ``left`` on
        b+1, ..., 2N, 1, ..., a-1 (cyclic order), both relabelled from 1.
    """
    if a > b:
        a, b = b, a
    if (a, b) not in alpha.links:
        raise LinkPatternError(f"link {{{a},{b}}} is not in {alpha}")
    m = 2 * alpha.n_links
    right, left = [], []
    for c, d in alpha.links:
        if (c, d) == (a, b):
            continue
        if a < c < b:
            right.append((c - a, d - a))
        else:
            def cyc(i: int) -> int:
                return i - b if i > b else i + m - b
            left.append((cyc(c), cyc(d)))
    return LinkPattern(right), LinkPattern(left)


# ---------------------------------------------------------------------------
# vectorised tables


@lru_cache(maxsize=None)
def pairing_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All pair partitions of 2N points as arrays.

    Returns
    -------
    idx : ndarray of shape (M, N, 2)
        Zero-based index pairs, M = (2N-1)!!.
    signs : ndarray of shape (M,)
        Signs of the pairings as floats.
    """
    if n > PAIR_PARTITION_CAP:
        raise EnumerationCapError(f"N={n} exceeds the pair-partition cap")
    rows = list(_pairings(n))
    idx = np.array(rows, dtype=np.intp).reshape(len(rows), n, 2) - 1
    signs = np.array([_perm_sign([i for p in r for i in p]) for r in rows], float)
    idx.setflags(write=False)
    signs.setflags(write=False)
    return idx, signs


@lru_cache(maxsize=None)
def link_pattern_table(n: int) -> np.ndarray:
    """Zero-based ``(C_N, N, 2)`` array of all link patterns."""
    if n > LINK_PATTERN_CAP:
        raise EnumerationCapError(f"N={n} exceeds the link-pattern cap")
    rows = list(_planar_pairings(n))
    idx = np.array(rows, dtype=np.intp).reshape(len(rows), n, 2) - 1
    idx.setflags(write=False)
    return idx
