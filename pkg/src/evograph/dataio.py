"""On-disk dataset format: load and save temporal graphs.

A dataset is a directory of line-oriented UTF-8 text files plus features:

* ``manifest`` -- ``key=value`` lines; required keys ``format_version=1``,
  ``num_vertices``, ``feature_dim``, ``num_classes``.
* ``edges``    -- one ``src dst`` pair of 0-based decimal integers per line;
  direction is ignored.
* ``times``    -- one decimal integer per vertex, line i = vertex i.
* ``labels``   -- one decimal integer per vertex; ``-1`` means unlabeled.
* ``features.bin`` -- row-major 32-bit little-endian reals, no header,
  length num_vertices * feature_dim; or ``features.csv`` with
  comma-separated decimal reals, row i = vertex i.  When both exist the
  binary file wins.
"""

from __future__ import annotations

import hashlib
import warnings
from pathlib import Path

import numpy as np

from .errors import DatasetError, ValidationError
from .graph import TemporalGraph

_DATASET_FILES = ("manifest", "edges", "times", "labels", "features.bin", "features.csv")


def _read_manifest(path: Path) -> dict:
    entries = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if "=" not in line:
            raise DatasetError(f"{path.name}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def _read_ints(path: Path, what: str) -> np.ndarray:
    values = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise DatasetError(f"{path.name}:{lineno}: non-integer {what} {line!r}") from None
    return np.asarray(values, dtype=np.int64)


def _read_edges(path: Path) -> tuple[np.ndarray, int]:
    pairs = []
    loops = 0
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DatasetError(f"{path.name}:{lineno}: expected 'src dst', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DatasetError(f"{path.name}:{lineno}: non-integer vertex id in {line!r}") from None
        if u == v:
            loops += 1
        pairs.append((u, v))
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return arr, loops


def load_dataset(path) -> TemporalGraph:
    """Load and validate a dataset directory into a TemporalGraph.

    Raises DatasetError naming the missing/offending file, or
    ValidationError with the offending counts on dimension mismatch.
    """
    root = Path(path)
    if not root.is_dir():
        raise DatasetError(f"not a dataset directory: {root}")

    def require(name: str) -> Path:
        p = root / name
        if not p.exists():
            raise DatasetError(f"missing file: {name} (in {root})")
        return p

    manifest = _read_manifest(require("manifest"))
    for key in ("format_version", "num_vertices", "feature_dim", "num_classes"):
        if key not in manifest:
            raise DatasetError(f"manifest: missing required key {key!r}")
    if manifest["format_version"] != "1":
        raise DatasetError(f"manifest: unsupported format_version {manifest['format_version']!r}")
    try:
        num_vertices = int(manifest["num_vertices"])
        feature_dim = int(manifest["feature_dim"])
        num_classes = int(manifest["num_classes"])
    except ValueError as exc:
        raise DatasetError(f"manifest: non-integer value ({exc})") from None

    edges, loops = _read_edges(require("edges"))
    times = _read_ints(require("times"), "timestamp")
    labels = _read_ints(require("labels"), "label")

    bin_path = root / "features.bin"
    csv_path = root / "features.csv"
    if bin_path.exists():
        raw = np.fromfile(bin_path, dtype="<f4")
        expected = num_vertices * feature_dim
        if raw.size != expected:
            raise ValidationError(
                f"features.bin holds {raw.size} values, expected {expected} "
                f"({num_vertices} x {feature_dim})"
            )
        features = raw.reshape(num_vertices, feature_dim)
    elif csv_path.exists():
        features = np.loadtxt(csv_path, delimiter=",", dtype=np.float32, ndmin=2)
        if features.shape != (num_vertices, feature_dim):
            raise ValidationError(
                f"features.csv is {features.shape[0]} x {features.shape[1]}, "
                f"expected {num_vertices} x {feature_dim}"
            )
    else:
        raise DatasetError(f"missing file: features.bin or features.csv (in {root})")

    if times.size != num_vertices:
        raise ValidationError(f"times has {times.size} entries, expected {num_vertices}")
    if labels.size != num_vertices:
        raise ValidationError(f"labels has {labels.size} entries, expected {num_vertices}")
    if loops:
        warnings.warn(f"{root.name}: dropped {loops} self-loop(s)", stacklevel=2)

    return TemporalGraph(
        num_vertices=num_vertices,
        edges=edges,
        time=times,
        features=features,
        labels=labels,
        num_classes=num_classes,
    )


def save_dataset(g: TemporalGraph, path, features_format: str = "bin") -> None:
    """Write ``g`` in the dataset directory format (see module docstring)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / "manifest").write_text(
        "format_version=1\n"
        f"num_vertices={g.num_vertices}\n"
        f"feature_dim={g.feature_dim}\n"
        f"num_classes={g.num_classes}\n",
        encoding="utf-8",
    )
    (root / "edges").write_text(
        "".join(f"{u} {v}\n" for u, v in g.edges), encoding="utf-8"
    )
    (root / "times").write_text("".join(f"{t}\n" for t in g.time), encoding="utf-8")
    (root / "labels").write_text("".join(f"{y}\n" for y in g.labels), encoding="utf-8")
    if features_format == "bin":
        g.features.astype("<f4").tofile(root / "features.bin")
    elif features_format == "csv":
        np.savetxt(root / "features.csv", g.features, delimiter=",", fmt="%.8g")
    else:
        raise ValueError(f"unknown features_format {features_format!r}")


def dataset_fingerprint(path) -> str:
    """SHA-256 over the dataset files' names and bytes, order-independent."""
    root = Path(path)
    digest = hashlib.sha256()
    for name in _DATASET_FILES:
        p = root / name
        if p.exists():
            digest.update(name.encode())
            digest.update(b"\0")
            digest.update(p.read_bytes())
    return digest.hexdigest()
