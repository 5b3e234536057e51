"""Flat key=value experiment config files and the run manifest.

The config document is deliberately line-oriented and diff-friendly.  All
randomness flows from the seeds it names; a manifest written by a completed
run embeds the resolved config snapshot so the run can be reproduced
bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .graph import FULL
from .lifelong import ExperimentConfig, LOSS_AUTO
from .models import LOSS_MODES, MODEL_KINDS
from .openworld import DOC, GDOC, DetectorConfig

MODE_SEQUENCE = "sequence"
MODE_TWO_TASK = "two-task"

_DEFAULTS = {
    "format_version": "1",
    "mode": MODE_SEQUENCE,
    "dataset": "",
    "model": "sage",
    "hidden_dim": "32",
    "sgc_k": "2",
    "dropout": "0.5",
    "learning_rate": "0.01",
    "weight_decay": "0.0005",
    "epochs": "200",
    "loss_mode": LOSS_AUTO,
    "history_size": "full",
    "restart": "warm",
    "label_rate": "1.0",
    "label_seed": "0",
    "detector": "none",
    "tau_min": "0.75",
    "alpha": "0.0",
    "risk_reduction": "false",
    "seeds": "0",
    "pretrain_epochs": "200",
    "inference_epochs": "35",
}


def _parse_bool(field: str, value: str) -> bool:
    if value.lower() in ("true", "1", "yes"):
        return True
    if value.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"{field}: expected true/false, got {value!r}")


def _parse_number(field: str, value: str, conv, check=None):
    try:
        out = conv(value)
    except ValueError:
        raise ConfigError(f"{field}: cannot parse {value!r}") from None
    if check is not None and not check(out):
        raise ConfigError(f"{field}: value {out} out of range")
    return out


class RunSpec:
    """A parsed config document: experiment config plus run-level fields."""

    def __init__(self, entries: dict):
        unknown = set(entries) - set(_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        vals = dict(_DEFAULTS)
        vals.update(entries)
        # the plain-DOC baseline defaults to the sigmoid inflection point
        if vals["detector"] == DOC and "tau_min" not in entries:
            vals["tau_min"] = "0.5"
        if vals["format_version"] != "1":
            raise ConfigError(f"format_version: unsupported {vals['format_version']!r}")
        if vals["mode"] not in (MODE_SEQUENCE, MODE_TWO_TASK):
            raise ConfigError(f"mode: expected sequence or two-task, got {vals['mode']!r}")
        if not vals["dataset"]:
            raise ConfigError("dataset: required")
        if vals["model"] not in MODEL_KINDS:
            raise ConfigError(f"model: expected one of {MODEL_KINDS}, got {vals['model']!r}")
        if vals["loss_mode"] != LOSS_AUTO and vals["loss_mode"] not in LOSS_MODES:
            raise ConfigError(f"loss_mode: unknown {vals['loss_mode']!r}")

        history = vals["history_size"]
        history_size = FULL if history == "full" else _parse_number(
            "history_size", history, int, lambda v: v >= 1
        )
        seeds = tuple(
            _parse_number("seeds", s.strip(), int, lambda v: v >= 0)
            for s in vals["seeds"].split(",")
            if s.strip()
        )
        if not seeds:
            raise ConfigError("seeds: need at least one")

        detector: Optional[DetectorConfig] = None
        if vals["detector"] not in ("none", DOC, GDOC):
            raise ConfigError(f"detector: expected none, doc, or gdoc, got {vals['detector']!r}")
        if vals["detector"] != "none":
            detector = DetectorConfig(
                variant=vals["detector"],
                tau_min=_parse_number("tau_min", vals["tau_min"], float, lambda v: 0 < v <= 1),
                alpha=_parse_number("alpha", vals["alpha"], float, lambda v: v >= 0),
                use_risk_reduction=_parse_bool("risk_reduction", vals["risk_reduction"]),
            )

        self.mode = vals["mode"]
        self.dataset = vals["dataset"]
        self.pretrain_epochs = _parse_number(
            "pretrain_epochs", vals["pretrain_epochs"], int, lambda v: v >= 0
        )
        self.inference_epochs = _parse_number(
            "inference_epochs", vals["inference_epochs"], int, lambda v: v >= 0
        )
        self.experiment = ExperimentConfig(
            model=vals["model"],
            hidden_dim=_parse_number("hidden_dim", vals["hidden_dim"], int, lambda v: v >= 1),
            sgc_k=_parse_number("sgc_k", vals["sgc_k"], int, lambda v: v >= 0),
            dropout_rate=_parse_number("dropout", vals["dropout"], float, lambda v: 0 <= v < 1),
            learning_rate=_parse_number("learning_rate", vals["learning_rate"], float, lambda v: v > 0),
            weight_decay=_parse_number("weight_decay", vals["weight_decay"], float, lambda v: v >= 0),
            epochs=_parse_number("epochs", vals["epochs"], int, lambda v: v >= 1),
            loss_mode=vals["loss_mode"],
            history_size=history_size,
            restart=vals["restart"],
            label_rate=_parse_number("label_rate", vals["label_rate"], float, lambda v: 0 < v <= 1),
            label_seed=_parse_number("label_seed", vals["label_seed"], int, lambda v: v >= 0),
            detector=detector,
            seeds=seeds,
        )
        self._snapshot = vals

    def snapshot(self) -> dict:
        """The fully resolved key=value view of this run specification."""
        return dict(self._snapshot)

    def pair_key(self) -> dict:
        """Snapshot minus the restart field; warm/cold runs of one setup share it."""
        key = self.snapshot()
        key.pop("restart")
        return key


def parse_config_text(text: str) -> RunSpec:
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return RunSpec(entries)


def load_config(path) -> RunSpec:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text(encoding="utf-8"))


def config_text(snapshot: dict) -> str:
    return "".join(f"{k}={snapshot[k]}\n" for k in _DEFAULTS)


def write_manifest(path, *, snapshot: dict, dataset_fingerprint: str, reports: dict, summary: str, version: str) -> None:
    payload = {
        "format_version": 1,
        "tool_version": version,
        "config": snapshot,
        "dataset_fingerprint": dataset_fingerprint,
        "reports": reports,
        "summary": summary,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_manifest(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"manifest not found: {p}")
    payload = json.loads(p.read_text(encoding="utf-8"))
    if payload.get("format_version") != 1:
        raise ConfigError("manifest: unsupported format_version")
    return payload
