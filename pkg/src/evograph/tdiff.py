"""k-neighborhood time differences and percentile-derived history sizes.

For every ordered vertex pair (u, v) with v reachable from u via 1..k edges
and time(v) <= time(u), the difference time(u) - time(v) is counted once.
Pairs with equal timestamps therefore contribute in both directions.  The
percentiles of this distribution serve as candidate history sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import TemporalGraph


@dataclass(frozen=True)
class TimeDiffHistogram:
    """Histogram of non-negative integer time differences within k hops."""

    counts: dict[int, int]
    k: int

    def total(self) -> int:
        return sum(self.counts.values())

    def max_diff(self) -> int:
        return max(self.counts) if self.counts else 0

    def as_sorted_items(self) -> list[tuple[int, int]]:
        return sorted(self.counts.items())


def _k_hop_sets(indptr, indices, source: int, k: int) -> np.ndarray:
    """Vertices reachable from ``source`` via 1..k edges (source excluded)."""
    seen = {source}
    frontier = [source]
    reached = []
    for _ in range(k):
        nxt = []
        for u in frontier:
            for v in indices[indptr[u]:indptr[u + 1]]:
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        if not nxt:
            break
        reached.extend(nxt)
        frontier = nxt
    return np.asarray(reached, dtype=np.int64)


def k_hop_time_diffs(g: TemporalGraph, k: int) -> TimeDiffHistogram:
    """Distribution of time differences within each vertex's k-hop neighborhood.

    Bounded BFS from every vertex; O(|V| * b^k) for average degree b.  Each
    reachable pair counts once per satisfying direction, regardless of how
    many paths connect it.
    """
    if k < 1:
        raise ValidationError("hop bound k must be >= 1")
    adj = g.adjacency()
    indptr, indices = adj.indptr, adj.indices
    time = g.time
    counts: dict[int, int] = {}
    for u in range(g.num_vertices):
        reach = _k_hop_sets(indptr, indices, u, k)
        if reach.size == 0:
            continue
        diffs = time[u] - time[reach]
        for d in diffs[diffs >= 0]:
            d = int(d)
            counts[d] = counts.get(d, 0) + 1
    return TimeDiffHistogram(counts=counts, k=k)


def percentile(h: TimeDiffHistogram, p: float) -> int:
    """Nearest-rank percentile: smallest d with cumulative count >= ceil(p/100 * total)."""
    if not h.counts:
        raise ValidationError("percentile of an empty histogram")
    if not 0 < p <= 100:
        raise ValidationError(f"percentile {p} outside (0, 100]")
    total = h.total()
    rank = math.ceil(p / 100.0 * total)
    cum = 0
    for value, count in h.as_sorted_items():
        cum += count
        if cum >= rank:
            return value
    return h.max_diff()


def suggest_history_sizes(g: TemporalGraph, k: int, percentiles) -> list[int]:
    """Percentiles of the k-hop time differences, floored to 1, deduplicated in order."""
    h = k_hop_time_diffs(g, k)
    out: list[int] = []
    for p in percentiles:
        size = max(1, percentile(h, p))
        if size not in out:
            out.append(size)
    return out
