"""Seeded generator of desk-scale evolving graphs.

Every timestamp adds a fixed number of vertices.  Each vertex draws its class
from a Zipf-skewed distribution over the classes available so far (newer
classes rank last, so they stay rare), gets a feature row equal to its class
center plus Gaussian noise, and wires edges into the current and up to
``window_back`` earlier timestamps with class-dependent probabilities.
Classes introduced by the schedule are guaranteed at least one vertex at
their introduction timestamp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .graph import TemporalGraph


@dataclass(frozen=True)
class SynthConfig:
    num_timestamps: int = 10
    vertices_per_timestamp: int = 30
    num_initial_classes: int = 4
    new_class_schedule: dict = field(default_factory=dict)
    class_skew: float = 1.0
    feature_dim: int = 16
    feature_noise: float = 0.5
    intra_class_edge_prob: float = 0.08
    inter_class_edge_prob: float = 0.01
    window_back: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.num_timestamps < 1 or self.vertices_per_timestamp < 1:
            raise ConfigError("need at least one timestamp and one vertex per timestamp")
        if self.num_initial_classes < 1:
            raise ConfigError("need at least one initial class")
        if 0 in self.new_class_schedule:
            raise ConfigError(
                "new_class_schedule at timestamp 0 conflicts with num_initial_classes"
            )
        if any(t < 0 or t >= self.num_timestamps for t in self.new_class_schedule):
            raise ConfigError("new_class_schedule timestamps outside the generated range")
        if not 0 <= self.inter_class_edge_prob <= self.intra_class_edge_prob <= 1:
            raise ConfigError("need 0 <= inter_class_edge_prob <= intra_class_edge_prob <= 1")
        if self.class_skew < 0 or self.feature_noise < 0 or self.window_back < 0:
            raise ConfigError("class_skew, feature_noise, window_back must be >= 0")
        total = self.total_classes
        if self.feature_dim < total:
            raise ConfigError(
                f"feature_dim {self.feature_dim} < total classes {total}; "
                "class centers need distinct basis axes"
            )

    @property
    def total_classes(self) -> int:
        return self.num_initial_classes + sum(self.new_class_schedule.values())


def _zipf_probs(m: int, skew: float) -> np.ndarray:
    ranks = np.arange(1, m + 1, dtype=np.float64)
    p = ranks**-skew
    return p / p.sum()


def generate(cfg: SynthConfig) -> TemporalGraph:
    """Deterministic evolving graph for the given config."""
    rng = np.random.default_rng(cfg.seed)
    total_classes = cfg.total_classes
    # one distinct basis axis per class, in seeded random order
    axes = rng.permutation(cfg.feature_dim)[:total_classes]

    n = cfg.num_timestamps * cfg.vertices_per_timestamp
    times = np.empty(n, dtype=np.int64)
    labels = np.empty(n, dtype=np.int64)
    features = np.empty((n, cfg.feature_dim), dtype=np.float64)
    edges: list[tuple[int, int]] = []

    available = cfg.num_initial_classes
    vid = 0
    for ts in range(cfg.num_timestamps):
        introduced = cfg.new_class_schedule.get(ts, 0) if ts > 0 else 0
        forced = list(range(available, available + introduced))
        available += introduced
        probs = _zipf_probs(available, cfg.class_skew)

        window_lo = ts - cfg.window_back
        cand_lo = int(np.searchsorted(times[:vid], window_lo))

        for j in range(cfg.vertices_per_timestamp):
            if j < len(forced):
                cls = forced[j]
            else:
                cls = int(rng.choice(available, p=probs))
            times[vid] = ts
            labels[vid] = cls
            features[vid] = rng.normal(0.0, cfg.feature_noise, cfg.feature_dim)
            features[vid, axes[cls]] += 1.0

            cands = np.arange(cand_lo, vid)
            if cands.size:
                same = labels[cands] == cls
                p_edge = np.where(same, cfg.intra_class_edge_prob, cfg.inter_class_edge_prob)
                hit = rng.random(cands.size) < p_edge
                edges.extend((int(c), vid) for c in cands[hit])
            vid += 1

    return TemporalGraph(
        num_vertices=n,
        edges=np.asarray(edges, dtype=np.int64).reshape(-1, 2),
        time=times,
        features=features.astype(np.float32),
        labels=labels,
        num_classes=total_classes,
    )
