"""Planar link patterns, sub-pattern surgery, and meander matrices.

A link pattern is a non-crossing perfect pairing of the boundary points
1..2N.  These index the connectivities of multiple interfaces, and pairs of
patterns generate meanders whose loop counts drive the meander matrix.

Everything here is exact integer combinatorics; guards keep the enumeration
sizes at desk scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import DomainError, SizeLimitError

ENUMERATION_GUARD = 12  # Catalan(12) = 208012, still fine; beyond that refuse


@dataclass(frozen=True)
class LinkPattern:
    """Non-crossing pairing of {1..2N}, links sorted by left endpoint."""

    links: tuple[tuple[int, int], ...]

    def __post_init__(self):
        links = tuple(tuple(sorted(pair)) for pair in self.links)
        links = tuple(sorted(links))
        object.__setattr__(self, "links", links)
        pts = [p for pair in links for p in pair]
        n2 = 2 * len(links)
        if sorted(pts) != list(range(1, n2 + 1)):
            raise DomainError("endpoints must be exactly {1..2N}, each once")
        for s, (a, b) in enumerate(links):
            for (c, d) in links[s + 1:]:
                if a < c < b < d:
                    raise DomainError(f"links ({a},{b}) and ({c},{d}) cross")

    @property
    def n(self) -> int:
        return len(self.links)

    def partner(self, j: int) -> int:
        for a, b in self.links:
            if a == j:
                return b
            if b == j:
                return a
        raise DomainError(f"{j} is not an endpoint of the pattern")

    def to_json(self) -> str:
        return json.dumps([list(pair) for pair in self.links])

    @staticmethod
    def from_json(text: str) -> "LinkPattern":
        return LinkPattern(tuple(tuple(p) for p in json.loads(text)))

    def __str__(self):
        return "{" + ", ".join(f"{{{a},{b}}}" for a, b in self.links) + "}"


def catalan_number(n: int) -> int:
    if n < 0:
        raise DomainError("n must be non-negative")
    return math.comb(2 * n, n) // (n + 1)


def enumerate_link_patterns(n: int) -> list[LinkPattern]:
    """All of LP_N, ordered lexicographically on (a_1,b_1,...,a_N,b_N)."""
    if n < 0:
        raise DomainError("N must be non-negative")
    if n > ENUMERATION_GUARD:
        raise SizeLimitError(f"N={n} exceeds enumeration guard {ENUMERATION_GUARD}")

    def pairings(points):
        if not points:
            yield []
            return
        first = points[0]
        # the partner must leave an even number of points strictly inside
        for i in range(1, len(points), 2):
            partner = points[i]
            inside, outside = points[1:i], points[i + 1:]
            for pin in pairings(inside):
                for pout in pairings(outside):
                    yield [(first, partner)] + pin + pout

    pats = [LinkPattern(tuple(p)) for p in pairings(list(range(1, 2 * n + 1)))]
    pats.sort(key=lambda lp: tuple(x for pair in lp.links for x in pair))
    return pats


def _relabel(links, removed):
    """Shift endpoint labels down across the removed index set."""
    removed = sorted(removed)

    def shift(x):
        return x - sum(1 for r in removed if r < x)

    return tuple((shift(a), shift(b)) for a, b in links)


def remove_link(alpha: LinkPattern, j: int) -> LinkPattern:
    """Drop the link {j, j+1} and relabel the rest to 1..2N-2."""
    if (j, j + 1) not in alpha.links:
        raise DomainError(f"{{{j},{j + 1}}} is not a link of the pattern")
    rest = [pair for pair in alpha.links if pair != (j, j + 1)]
    return LinkPattern(_relabel(rest, {j, j + 1}))


def split_by_link(alpha: LinkPattern, s: int) -> tuple[LinkPattern, LinkPattern]:
    """Sub-patterns strictly inside link s and strictly outside it."""
    if not 1 <= s <= alpha.n:
        raise DomainError(f"link index {s} out of range 1..{alpha.n}")
    a, b = alpha.links[s - 1]
    inner = [(c, d) for c, d in alpha.links if a < c and d < b]
    outer = [p for p in alpha.links if p != (a, b) and p not in inner]
    inside_labels = set(range(a + 1, b))
    right = LinkPattern(_relabel(inner, set(range(1, 2 * alpha.n + 1)) - inside_labels))
    left = LinkPattern(_relabel(outer, inside_labels | {a, b}))
    return right, left


def meander_loop_count(alpha: LinkPattern, beta: LinkPattern) -> int:
    """Loops of the meander formed by alpha on top and beta mirrored below.

    Walk each loop explicitly: from an unvisited point follow the top arc,
    then the bottom arc, until the walk closes.
    """
    if alpha.n != beta.n:
        raise DomainError("meander needs two patterns of the same size")
    visited = set()
    loops = 0
    for start in range(1, 2 * alpha.n + 1):
        if start in visited:
            continue
        loops += 1
        point = start
        while True:
            visited.add(point)
            mid = alpha.partner(point)
            visited.add(mid)
            point = beta.partner(mid)
            if point == start:
                break
    return loops


def meander_weight(alpha: LinkPattern, beta: LinkPattern, q: float) -> float:
    """Meander matrix entry sqrt(q)^(number of meander loops)."""
    if q <= 0:
        raise DomainError("q must be positive")
    return math.sqrt(q) ** meander_loop_count(alpha, beta)


def meander_matrix(n: int, q: float):
    """Full Catalan(n) x Catalan(n) meander matrix over enumerate order."""
    pats = enumerate_link_patterns(n)
    return pats, [[meander_weight(a, b, q) for b in pats] for a in pats]
