"""Incremental training over a task sequence: restarts, growth, label budgets.

For each evaluation task the engine trains on the history-trimmed graph
through the previous timestamp (warm restarts reuse the surviving
parameters, cold restarts reinitialize), grows the output layer when classes
enter the training data for the first time, predicts the vertices new at the
task's timestamp, and optionally applies an unseen-class detector whose
thresholds are re-fit on that task's training outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, EvographError, RunError, ValidationError
from .graph import FULL, UNLABELED, TemporalGraph, build_task_sequence, induced_subgraph, trim_history
from .metrics import MetricsReport, TaskRecord, open_macro_f1
from .models import (
    BCE,
    CATEGORICAL,
    WEIGHTED_BCE,
    ModelState,
    TrainConfig,
    expand_output_layer,
    forward,
    init_adam_state,
    init_model,
    loss_and_grad,
    adam_step,
    model_inputs,
    train,
)
from .openworld import DOC, GDOC, UNSEEN, DetectorConfig, class_weights, fit_thresholds, predict_open, sigmoid

WARM = "warm"
COLD = "cold"

LOSS_AUTO = "auto"


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment setup; all reported numbers are deterministic in ``seeds``.

    The learning-rate search grid used when tuning by hand is
    {0.1, 0.05, 0.01, 0.005, 0.001, 0.0005}.
    """

    model: str = "sage"
    hidden_dim: int = 32
    sgc_k: int = 2
    dropout_rate: float = 0.5
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    epochs: int = 200
    loss_mode: str = LOSS_AUTO
    history_size: Optional[int] = FULL
    restart: str = WARM
    label_rate: float = 1.0
    label_seed: int = 0
    detector: Optional[DetectorConfig] = None
    seeds: tuple = (0,)
    k_for_tdiff: int = 2

    def __post_init__(self):
        if self.restart not in (WARM, COLD):
            raise ConfigError(f"restart must be warm or cold, got {self.restart!r}")
        if not 0 < self.label_rate <= 1:
            raise ConfigError(f"label_rate {self.label_rate} outside (0, 1]")
        if self.history_size is not FULL and self.history_size < 1:
            raise ConfigError("history_size must be >= 1 or FULL")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if any(s < 0 for s in self.seeds) or self.label_seed < 0:
            raise ConfigError("seeds must be non-negative")

    def effective_loss_mode(self) -> str:
        if self.loss_mode != LOSS_AUTO:
            return self.loss_mode
        if self.detector is None:
            return CATEGORICAL
        return WEIGHTED_BCE if self.detector.variant == GDOC else BCE

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            epochs=self.epochs,
            loss_mode=self.effective_loss_mode(),
            seed=seed,
        )


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def label_rate_subsample(g: TemporalGraph, rate: float, seed: int) -> np.ndarray:
    """Global boolean mask of vertices whose labels may be used for training.

    Samples round(rate * #labeled) labeled vertices uniformly without
    replacement, once for the whole dataset; unselected vertices train as
    unlabeled but are still evaluated at test time.
    """
    if not 0 < rate <= 1:
        raise ConfigError(f"label rate {rate} outside (0, 1]")
    labeled_ids = np.nonzero(g.labels != UNLABELED)[0]
    k = int(np.floor(rate * labeled_ids.size + 0.5))
    mask = np.zeros(g.num_vertices, dtype=bool)
    if k >= labeled_ids.size:
        mask[labeled_ids] = True
        return mask
    chosen = np.random.default_rng(seed).choice(labeled_ids, size=k, replace=False)
    mask[chosen] = True
    return mask


def _unit_labels(labels: np.ndarray, unit_of: dict) -> np.ndarray:
    """Map class ids to output-unit indices; unmapped ids become -1."""
    out = np.full(labels.shape, -1, dtype=np.int64)
    for cls, unit in unit_of.items():
        out[labels == cls] = unit
    return out


def run_sequence(g: TemporalGraph, cfg: ExperimentConfig, seed: Optional[int] = None, trace=None) -> MetricsReport:
    """Execute the incremental training loop over the full task sequence.

    ``seed`` defaults to the first entry of ``cfg.seeds``.  ``trace``, if a
    list, receives one dict per task with the model bookkeeping
    (output_dim, new_classes, known_classes) for inspection.
    """
    report, _ = run_sequence_with_model(g, cfg, seed=seed, trace=trace)
    return report


def run_sequence_with_model(
    g: TemporalGraph, cfg: ExperimentConfig, seed: Optional[int] = None, trace=None
) -> tuple[MetricsReport, ModelState]:
    """Like :func:`run_sequence` but also returns the final task's model."""
    if seed is None:
        seed = cfg.seeds[0]
    tasks = build_task_sequence(g, cfg.history_size)
    label_mask = label_rate_subsample(g, cfg.label_rate, cfg.label_seed)
    loss_mode = cfg.effective_loss_mode()
    timestamps = g.timestamps()

    known_order: list[int] = []
    model: Optional[ModelState] = None
    records: list[TaskRecord] = []

    for task in tasks:
        try:
            prev_time = int(timestamps[timestamps < task.time][-1])
            train_g = trim_history(g, prev_time, cfg.history_size)
            train_sel = (train_g.labels != UNLABELED) & label_mask[train_g.origin_ids]
            if not train_sel.any():
                raise ValidationError("no labeled training vertices in the window")

            new_classes = [
                int(c)
                for c in np.unique(train_g.labels[train_sel])
                if int(c) not in known_order
            ]
            init_seed = _derive_seed(seed, task.t, 0)
            expand_seed = _derive_seed(seed, task.t, 1)
            train_seed = _derive_seed(seed, task.t, 2)

            if model is None:
                known_order.extend(new_classes)
                model = init_model(
                    cfg.model, g.feature_dim, cfg.hidden_dim, len(known_order),
                    sgc_k=cfg.sgc_k, dropout_rate=cfg.dropout_rate, seed=init_seed,
                )
            else:
                if new_classes:
                    model = expand_output_layer(model, len(new_classes), expand_seed)
                    known_order.extend(new_classes)
                if cfg.restart == COLD:
                    model = init_model(
                        cfg.model, g.feature_dim, cfg.hidden_dim, len(known_order),
                        sgc_k=cfg.sgc_k, dropout_rate=cfg.dropout_rate, seed=init_seed,
                    )

            unit_of = {cls: j for j, cls in enumerate(known_order)}
            y_units_train = _unit_labels(train_g.labels, unit_of)
            X_train = model_inputs(model, train_g)
            weights = (
                class_weights(y_units_train, train_sel, model.output_dim)
                if loss_mode == WEIGHTED_BCE
                else None
            )
            model = train(
                model, train_g, X_train, y_units_train, train_sel,
                cfg.train_config(train_seed), class_weights=weights,
            )

            eval_g = trim_history(g, task.time, cfg.history_size)
            X_eval = model_inputs(model, eval_g)
            logits = forward(model, eval_g, X_eval, train_mode=False)
            test_sel = (eval_g.time == task.time) & (eval_g.labels != UNLABELED)
            if not test_sel.any():
                raise ValidationError("no labeled test vertices at this timestamp")
            test_logits = logits[test_sel]
            y_true = eval_g.labels[test_sel]

            order_arr = np.asarray(known_order, dtype=np.int64)
            pred_ids = order_arr[np.argmax(test_logits, axis=1)]
            accuracy = float(np.mean(pred_ids == y_true))

            if cfg.detector is not None:
                train_logits = forward(model, train_g, X_train, train_mode=False)
                thresholds = fit_thresholds(
                    sigmoid(train_logits), y_units_train, train_sel, cfg.detector
                )
                open_units = predict_open(test_logits, thresholds)
                open_ids = np.where(open_units == UNSEEN, UNSEEN, order_arr[open_units])
            else:
                open_ids = pred_ids

            known_now = set(known_order)
            truly_unseen = ~np.isin(y_true, order_arr)
            said_unseen = open_ids == UNSEEN
            record = TaskRecord(
                t=task.t,
                accuracy=accuracy,
                tp=int(np.sum(said_unseen & truly_unseen)),
                tn=int(np.sum(~said_unseen & ~truly_unseen)),
                fp=int(np.sum(said_unseen & ~truly_unseen)),
                fn=int(np.sum(~said_unseen & truly_unseen)),
                open_f1=open_macro_f1(y_true, open_ids, known_now),
            )
            records.append(record)
            if trace is not None:
                entry = {
                    "t": task.t,
                    "time": task.time,
                    "output_dim": model.output_dim,
                    "new_classes": list(new_classes),
                    "known_classes": list(known_order),
                }
                if cfg.detector is not None:
                    entry["thresholds"] = thresholds.tau.tolist()
                    entry["sd"] = None if thresholds.sd is None else thresholds.sd.tolist()
                trace.append(entry)
        except RunError:
            raise
        except EvographError as exc:
            raise RunError(task.t, str(exc)) from exc
    return MetricsReport(records=records), model


def _validate_two_task_inputs(g_train: TemporalGraph, g_full: TemporalGraph) -> np.ndarray:
    if g_train.origin_ids is None:
        raise ValidationError(
            "g_train must carry origin_ids into g_full (use labeled_subgraph)"
        )
    origin = g_train.origin_ids
    if np.unique(origin).size != origin.size or origin.max(initial=-1) >= g_full.num_vertices:
        raise ValidationError("g_train origin_ids are not a valid vertex subset of g_full")
    if np.any(g_train.labels == UNLABELED):
        raise ValidationError("g_train must contain labeled vertices only")
    if (
        not np.array_equal(g_train.time, g_full.time[origin])
        or not np.array_equal(g_train.labels, g_full.labels[origin])
        or not np.array_equal(g_train.features, g_full.features[origin])
    ):
        raise ValidationError("g_train vertex data does not match g_full")
    expected = induced_subgraph(g_full, origin)
    if not np.array_equal(expected.edges, g_train.edges):
        raise ValidationError("g_train edges are not the induced edges of g_full")
    return origin


def two_task_experiment(
    g_train: TemporalGraph,
    g_full: TemporalGraph,
    cfg: ExperimentConfig,
    pretrain_epochs: int,
    inference_epochs: int,
    seed: Optional[int] = None,
) -> list[float]:
    """Pre-train on the labeled subgraph, then up-train after inserting the rest.

    Returns the test accuracy before the first and after each of the
    ``inference_epochs`` continued-training epochs (length
    ``inference_epochs + 1``).  Test vertices are the labeled vertices of
    ``g_full`` outside ``g_train``; no new labels appear at inference time.
    """
    if pretrain_epochs < 0 or inference_epochs < 0:
        raise ConfigError("epoch counts must be >= 0")
    if seed is None:
        seed = cfg.seeds[0]
    origin = _validate_two_task_inputs(g_train, g_full)
    loss_mode = cfg.effective_loss_mode()

    classes = sorted(int(c) for c in np.unique(g_train.labels))
    unit_of = {cls: j for j, cls in enumerate(classes)}
    order_arr = np.asarray(classes, dtype=np.int64)

    model = init_model(
        cfg.model, g_full.feature_dim, cfg.hidden_dim, len(classes),
        sgc_k=cfg.sgc_k, dropout_rate=cfg.dropout_rate, seed=_derive_seed(seed, 0),
    )
    y_units_train = _unit_labels(g_train.labels, unit_of)
    if pretrain_epochs > 0:
        model = train(
            model, g_train, model_inputs(model, g_train), y_units_train,
            np.ones(g_train.num_vertices, dtype=bool),
            TrainConfig(
                learning_rate=cfg.learning_rate, weight_decay=cfg.weight_decay,
                epochs=pretrain_epochs, loss_mode=loss_mode, seed=_derive_seed(seed, 1),
            ),
        )

    train_mask_full = np.zeros(g_full.num_vertices, dtype=bool)
    train_mask_full[origin] = True
    test_mask = (g_full.labels != UNLABELED) & ~train_mask_full
    if not test_mask.any():
        raise ValidationError("g_full has no labeled vertices outside g_train")
    y_units_full = _unit_labels(g_full.labels, unit_of)
    X_full = model_inputs(model, g_full)
    y_true = g_full.labels[test_mask]
    weights = (
        class_weights(y_units_full, train_mask_full, model.output_dim)
        if loss_mode == WEIGHTED_BCE
        else None
    )

    def test_accuracy(m: ModelState) -> float:
        logits = forward(m, g_full, X_full, train_mode=False)
        pred = order_arr[np.argmax(logits[test_mask], axis=1)]
        return float(np.mean(pred == y_true))

    trace = [test_accuracy(model)]
    # optimizer state restarts fresh for the inference phase
    opt = init_adam_state(model)
    rng = np.random.default_rng(_derive_seed(seed, 2))
    for _ in range(inference_epochs):
        _, grads = loss_and_grad(
            model, g_full, X_full, y_units_full, train_mask_full, loss_mode,
            class_weights=weights, train_mode=True, rng=rng,
        )
        model, opt = adam_step(model, grads, opt, cfg.learning_rate, cfg.weight_decay)
        trace.append(test_accuracy(model))
    return trace
