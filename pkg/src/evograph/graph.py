"""Temporal graph storage, history trimming, and task-sequence construction.

A :class:`TemporalGraph` is an immutable snapshot container: vertices carry a
feature row, an integer timestamp, and an optional class label; edges are
undirected and stored once in canonical (min, max) order.  All views derived
from a graph (trimming, induced subgraphs) re-index vertices densely and keep
an ``origin_ids`` mapping back to the source graph for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import TaskSequenceError, ValidationError

UNLABELED = -1

# Sentinel for "keep the entire history" in trim/window operations.
FULL = None


def _canonical_edges(edges, num_vertices: int) -> np.ndarray:
    """Symmetrize, deduplicate, and drop self-loops; returns (E, 2) int64."""
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= num_vertices):
        bad = arr[(arr < 0) | (arr >= num_vertices)].flat[0]
        raise ValidationError(
            f"edge endpoint {bad} out of range for {num_vertices} vertices"
        )
    keep = arr[:, 0] != arr[:, 1]
    arr = arr[keep]
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    canon = np.stack([lo, hi], axis=1)
    if canon.size:
        canon = np.unique(canon, axis=0)
    return canon.reshape(-1, 2)


@dataclass(eq=False)
class TemporalGraph:
    """An evolving graph snapshot with per-vertex time, features, and labels.

    ``edges`` may be passed in any direction and with duplicates or
    self-loops; storage is canonicalized (undirected, deduplicated, loop-free)
    at construction.  ``labels`` uses ``UNLABELED`` (-1) for vertices without
    a class.  Arrays are frozen after validation; the graph is safe to share.
    """

    num_vertices: int
    edges: np.ndarray
    time: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    origin_ids: Optional[np.ndarray] = None

    _csr: Optional[sp.csr_matrix] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.features = np.asarray(self.features, dtype=np.float32)
        self.edges = _canonical_edges(self.edges, self.num_vertices)
        if self.origin_ids is not None:
            self.origin_ids = np.asarray(self.origin_ids, dtype=np.int64)

        n = self.num_vertices
        if self.time.shape != (n,):
            raise ValidationError(f"time has {self.time.shape[0]} entries, expected {n}")
        if self.labels.shape != (n,):
            raise ValidationError(f"labels has {self.labels.shape[0]} entries, expected {n}")
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise ValidationError(
                f"features has {self.features.shape[0]} rows, expected {n}"
            )
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("features contain non-finite values")
        labeled = self.labels != UNLABELED
        if np.any(self.labels[labeled] < 0) or np.any(self.labels[labeled] >= self.num_classes):
            bad = self.labels[labeled & ((self.labels < 0) | (self.labels >= self.num_classes))][0]
            raise ValidationError(
                f"label {bad} out of range for {self.num_classes} classes"
            )
        if self.origin_ids is not None and self.origin_ids.shape != (n,):
            raise ValidationError("origin_ids length does not match num_vertices")

        for arr in (self.edges, self.time, self.features, self.labels):
            arr.flags.writeable = False
        if self.origin_ids is not None:
            self.origin_ids.flags.writeable = False

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric CSR adjacency (no self-loops), built once and cached."""
        if self._csr is None:
            n = self.num_vertices
            if self.num_edges == 0:
                self._csr = sp.csr_matrix((n, n), dtype=np.float64)
            else:
                src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
                dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
                data = np.ones(src.shape[0], dtype=np.float64)
                self._csr = sp.csr_matrix((data, (src, dst)), shape=(n, n))
        return self._csr

    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency().sum(axis=1)).ravel()

    def timestamps(self) -> np.ndarray:
        """Distinct timestamps present, ascending."""
        return np.unique(self.time)

    def equals(self, other: "TemporalGraph") -> bool:
        """Structural equality including the origin mapping."""
        if self.num_vertices != other.num_vertices or self.num_classes != other.num_classes:
            return False
        if not (
            np.array_equal(self.edges, other.edges)
            and np.array_equal(self.time, other.time)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.features, other.features)
        ):
            return False
        if (self.origin_ids is None) != (other.origin_ids is None):
            return False
        if self.origin_ids is not None and not np.array_equal(self.origin_ids, other.origin_ids):
            return False
        return True


@dataclass(frozen=True)
class TaskView:
    """One evaluation task: a vertex window plus train/test structure.

    ``vertices`` holds the retained vertex ids of the source graph (sorted
    ascending); masks align with it.  ``known_classes`` is the set of classes
    observed in the training data of strictly earlier tasks.
    """

    t: int
    time: int
    vertices: np.ndarray
    train_mask: np.ndarray
    test_mask: np.ndarray
    known_classes: frozenset

    def __post_init__(self):
        if np.any(self.train_mask & self.test_mask):
            raise ValidationError("train and test masks overlap")


def induced_subgraph(g: TemporalGraph, keep: np.ndarray) -> TemporalGraph:
    """Subgraph on ``keep`` (vertex ids of ``g``), densely re-indexed.

    Keeps an edge only when both endpoints survive.  The result's
    ``origin_ids`` maps into ``g``'s original source: if ``g`` itself was
    derived, mappings compose.
    """
    keep = np.unique(np.asarray(keep, dtype=np.int64))
    if keep.size and (keep.min() < 0 or keep.max() >= g.num_vertices):
        raise ValidationError("keep ids out of range")
    remap = np.full(g.num_vertices, -1, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    if g.num_edges:
        mask = (remap[g.edges[:, 0]] >= 0) & (remap[g.edges[:, 1]] >= 0)
        new_edges = remap[g.edges[mask]]
    else:
        new_edges = np.empty((0, 2), dtype=np.int64)
    origin = g.origin_ids[keep] if g.origin_ids is not None else keep
    return TemporalGraph(
        num_vertices=int(keep.size),
        edges=new_edges,
        time=g.time[keep],
        features=g.features[keep],
        labels=g.labels[keep],
        num_classes=g.num_classes,
        origin_ids=origin,
    )


def trim_history(g: TemporalGraph, t: int, c=FULL) -> TemporalGraph:
    """Vertices with ``t - c <= time(v) <= t`` (all ``time <= t`` when FULL).

    An empty window yields an empty graph, not an error.
    """
    if c is FULL:
        keep = np.nonzero(g.time <= t)[0]
    else:
        if c < 0:
            raise ValidationError("history size must be >= 0 or FULL")
        keep = np.nonzero((g.time >= t - c) & (g.time <= t))[0]
    return induced_subgraph(g, keep)


def labeled_subgraph(g: TemporalGraph) -> TemporalGraph:
    """Induced subgraph on labeled vertices (edges need both endpoints labeled)."""
    return induced_subgraph(g, np.nonzero(g.labels != UNLABELED)[0])


def start_timestamp(g: TemporalGraph, fraction: float = 0.25) -> int:
    """Smallest timestamp whose cumulative vertex count reaches ``fraction``."""
    ts = g.timestamps()
    counts = np.array([(g.time == s).sum() for s in ts], dtype=np.int64)
    cum = np.cumsum(counts)
    idx = int(np.searchsorted(cum, fraction * g.num_vertices))
    idx = min(idx, ts.size - 1)
    return int(ts[idx])


def build_task_sequence(g: TemporalGraph, c=FULL) -> list[TaskView]:
    """Split ``g`` into evaluation tasks, one per timestamp after the start.

    The start timestamp is where the cumulative vertex count first reaches
    25% of the graph.  Each later timestamp becomes one task: its vertices
    are the test set, older retained (labeled) vertices are training
    candidates, and the window obeys the history size ``c``.
    """
    ts = g.timestamps()
    if ts.size < 2:
        raise TaskSequenceError("need at least 2 distinct timestamps")
    t0 = start_timestamp(g)
    eval_times = [int(s) for s in ts if s > t0]
    if not eval_times:
        raise TaskSequenceError(
            f"no timestamps after the 25% start timestamp {t0}"
        )
    labeled = g.labels != UNLABELED
    tasks: list[TaskView] = []
    known: set[int] = set()
    for i, tau in enumerate(eval_times, start=1):
        if c is FULL:
            window = np.nonzero(g.time <= tau)[0]
        else:
            window = np.nonzero((g.time >= tau - c) & (g.time <= tau))[0]
        tmask = (g.time[window] < tau) & labeled[window]
        emask = (g.time[window] == tau) & labeled[window]
        tasks.append(
            TaskView(
                t=i,
                time=tau,
                vertices=window,
                train_mask=tmask,
                test_mask=emask,
                known_classes=frozenset(known),
            )
        )
        known.update(int(y) for y in np.unique(g.labels[window[tmask]]))
    return tasks
