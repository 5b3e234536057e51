"""Dense graph models with hand-written gradients: MLP, SGC, GraphSAGE-mean.

Parameters live in float64 for numerical headroom; checkpoints serialize as
32-bit little-endian blocks (see :func:`save_checkpoint`).  Models are values:
every update returns a new :class:`ModelState` and never mutates its input.

Layer conventions
-----------------
* mlp : X -> linear(D, h) -> relu -> dropout -> linear(h, C)
* sgc : Xhat -> linear(D, C), where Xhat is the precomputed S^K X
  (see :func:`sgc_precompute`); the model itself ignores the graph.
* sage: each layer concatenates a vertex's representation with the mean of
  its neighbors' (zero vector for isolated vertices), so layer i maps
  2 * d_in -> d_out; relu + dropout after the hidden layer only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .graph import TemporalGraph

CATEGORICAL = "categorical"
BCE = "bce"
WEIGHTED_BCE = "weighted-bce"
LOSS_MODES = (CATEGORICAL, BCE, WEIGHTED_BCE)

MODEL_KINDS = ("mlp", "sgc", "sage")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    epochs: int = 200
    loss_mode: str = CATEGORICAL
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.weight_decay < 0:
            raise ValidationError("weight_decay must be >= 0")
        if self.loss_mode not in LOSS_MODES:
            raise ValidationError(f"unknown loss_mode {self.loss_mode!r}")


@dataclass
class ModelState:
    """Layered dense parameters; layers are (weights, bias) pairs."""

    kind: str
    layers: list[tuple[np.ndarray, np.ndarray]]
    hidden_dim: int
    output_dim: int
    sgc_k: int = 2
    dropout_rate: float = 0.5
    rng_seed: int = 0

    @property
    def input_dim(self) -> int:
        w0 = self.layers[0][0]
        return w0.shape[0] // 2 if self.kind == "sage" else w0.shape[0]

    def copy(self) -> "ModelState":
        return replace(self, layers=[(w.copy(), b.copy()) for w, b in self.layers])


def glorot_init(fan_in: int, fan_out: int, seed: int) -> np.ndarray:
    """Uniform Glorot matrix in [-sqrt(6/(fan_in+fan_out)), +...], seeded."""
    if fan_in < 1 or fan_out < 1:
        raise ValidationError("fan_in and fan_out must be >= 1")
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    rng = np.random.default_rng(seed)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_model(
    kind: str,
    input_dim: int,
    hidden_dim: int,
    output_dim: int,
    *,
    sgc_k: int = 2,
    dropout_rate: float = 0.5,
    seed: int = 0,
) -> ModelState:
    """Fresh Glorot-initialized model; biases start at zero."""
    if kind not in MODEL_KINDS:
        raise ValidationError(f"unknown model kind {kind!r}")
    if kind == "mlp":
        shapes = [(input_dim, hidden_dim), (hidden_dim, output_dim)]
    elif kind == "sage":
        shapes = [(2 * input_dim, hidden_dim), (2 * hidden_dim, output_dim)]
    else:
        shapes = [(input_dim, output_dim)]
    layer_seeds = np.random.default_rng(seed).integers(0, 2**31 - 1, size=len(shapes))
    layers = [
        (glorot_init(fi, fo, int(s)), np.zeros(fo, dtype=np.float64))
        for (fi, fo), s in zip(shapes, layer_seeds)
    ]
    return ModelState(
        kind=kind,
        layers=layers,
        hidden_dim=hidden_dim if kind != "sgc" else 0,
        output_dim=output_dim,
        sgc_k=sgc_k,
        dropout_rate=dropout_rate,
        rng_seed=seed,
    )


def mean_propagation(g: TemporalGraph) -> sp.csr_matrix:
    """Row-normalized adjacency D^-1 A; rows of isolated vertices are zero."""
    adj = g.adjacency()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return sp.diags(inv) @ adj


def sgc_precompute(g: TemporalGraph, K: int) -> np.ndarray:
    """Propagated features S^K X with S = D~^-1/2 (A + I) D~^-1/2."""
    if K < 0:
        raise ValidationError("propagation power K must be >= 0")
    X = np.asarray(g.features, dtype=np.float64)
    if K == 0:
        return X.copy()
    adj = g.adjacency() + sp.identity(g.num_vertices, format="csr")
    deg = np.asarray(adj.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    S = sp.diags(inv_sqrt) @ adj @ sp.diags(inv_sqrt)
    for _ in range(K):
        X = S @ X
    return X


def model_inputs(model: ModelState, g: TemporalGraph) -> np.ndarray:
    """The feature matrix this model kind consumes for graph ``g``."""
    if model.kind == "sgc":
        return sgc_precompute(g, model.sgc_k)
    return np.asarray(g.features, dtype=np.float64)


def _dropout_mask(rng, shape, rate: float) -> np.ndarray:
    return (rng.random(shape) >= rate).astype(np.float64)


def _forward_cached(model, g, X, train_mode=False, rng=None):
    X = np.asarray(X, dtype=np.float64)
    w0 = model.layers[0][0]
    expected = w0.shape[0] // 2 if model.kind == "sage" else w0.shape[0]
    if X.shape[1] != expected:
        raise ValidationError(
            f"feature width {X.shape[1]} does not match layer-0 input {expected}"
        )
    use_dropout = train_mode and model.dropout_rate > 0
    if use_dropout and rng is None:
        rng = np.random.default_rng(model.rng_seed)

    cache = {"inputs": [], "prelin": [], "drop": [], "P": None}
    if model.kind == "sgc":
        W, b = model.layers[0]
        cache["inputs"].append(X)
        return X @ W + b, cache

    if model.kind == "sage":
        P = mean_propagation(g)
        cache["P"] = P
    H = X
    last = len(model.layers) - 1
    for i, (W, b) in enumerate(model.layers):
        if model.kind == "sage":
            H_in = np.hstack([H, cache["P"] @ H])
        else:
            H_in = H
        cache["inputs"].append(H_in)
        Z = H_in @ W + b
        if i < last:
            cache["prelin"].append(Z)
            H = np.maximum(Z, 0.0)
            if use_dropout:
                mask = _dropout_mask(rng, H.shape, model.dropout_rate)
                H = H * mask / (1.0 - model.dropout_rate)
                cache["drop"].append(mask)
            else:
                cache["drop"].append(None)
        else:
            H = Z
    return H, cache


def forward(model: ModelState, g: TemporalGraph, X, train_mode: bool = False, rng=None) -> np.ndarray:
    """Logits per vertex (rows) and output unit (columns).

    Dropout fires only on hidden activations and only when ``train_mode``;
    pass ``rng`` to control the masks, else the model's own seed is used.
    """
    logits, _ = _forward_cached(model, g, X, train_mode=train_mode, rng=rng)
    return logits


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z):
    # log(1 + exp(z)) without overflow
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def loss_from_logits(logits, labels, train_mask, loss_mode, class_weights=None):
    """Loss value and d(loss)/d(logits) for the masked rows.

    categorical: softmax cross-entropy averaged over masked rows.
    bce / weighted-bce: element-wise sigmoid cross-entropy against one-hot
    targets, averaged over masked rows x output columns; in weighted mode
    both the positive and negative terms of column i scale by
    class_weights[i].
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    mask = np.asarray(train_mask, dtype=bool)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        raise ValidationError("empty train mask")
    if not np.all(np.isfinite(logits)):
        raise ValidationError("non-finite logits")
    if (class_weights is not None) != (loss_mode == WEIGHTED_BCE):
        raise ValidationError("class_weights required iff loss_mode is weighted-bce")

    n, C = idx.size, logits.shape[1]
    Z = logits[idx]
    y = labels[idx]
    if np.any(y < 0) or np.any(y >= C):
        raise ValidationError("labels on masked rows must be valid output units")
    onehot = np.zeros((n, C), dtype=np.float64)
    onehot[np.arange(n), y] = 1.0

    dlogits = np.zeros_like(logits)
    if loss_mode == CATEGORICAL:
        shifted = Z - Z.max(axis=1, keepdims=True)
        logsumexp = np.log(np.exp(shifted).sum(axis=1))
        loss = float(np.mean(logsumexp - shifted[np.arange(n), y]))
        probs = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)
        dlogits[idx] = (probs - onehot) / n
    elif loss_mode in (BCE, WEIGHTED_BCE):
        # stable elementwise: max(z,0) - z*y + log(1 + exp(-|z|))
        elem = np.maximum(Z, 0.0) - Z * onehot + np.log1p(np.exp(-np.abs(Z)))
        grad = _sigmoid(Z) - onehot
        if loss_mode == WEIGHTED_BCE:
            w = np.asarray(class_weights, dtype=np.float64)
            if w.shape != (C,) or np.any(w <= 0):
                raise ValidationError("class_weights must be positive, one per output unit")
            elem = elem * w
            grad = grad * w
        loss = float(elem.sum() / (n * C))
        dlogits[idx] = grad / (n * C)
    else:
        raise ValidationError(f"unknown loss_mode {loss_mode!r}")
    return loss, dlogits


def _backward(model, cache, dlogits):
    grads = [None] * len(model.layers)
    dZ = dlogits
    P = cache["P"]
    for i in range(len(model.layers) - 1, -1, -1):
        W, _ = model.layers[i]
        H_in = cache["inputs"][i]
        grads[i] = (H_in.T @ dZ, dZ.sum(axis=0))
        if i == 0:
            break
        dH_in = dZ @ W.T
        if model.kind == "sage":
            d = dH_in.shape[1] // 2
            dH = dH_in[:, :d] + P.T @ dH_in[:, d:]
        else:
            dH = dH_in
        mask = cache["drop"][i - 1]
        if mask is not None:
            dH = dH * mask / (1.0 - model.dropout_rate)
        dZ = dH * (cache["prelin"][i - 1] > 0)
    return grads


def loss_and_grad(
    model: ModelState,
    g: TemporalGraph,
    X,
    labels,
    train_mask,
    loss_mode: str,
    class_weights=None,
    train_mode: bool = False,
    rng=None,
):
    """Loss plus parameter gradients, backpropagated through the forward rule."""
    logits, cache = _forward_cached(model, g, X, train_mode=train_mode, rng=rng)
    loss, dlogits = loss_from_logits(logits, labels, train_mask, loss_mode, class_weights)
    return loss, _backward(model, cache, dlogits)


@dataclass
class AdamState:
    step: int
    m: list
    v: list


def init_adam_state(model: ModelState) -> AdamState:
    return AdamState(
        step=0,
        m=[(np.zeros_like(w), np.zeros_like(b)) for w, b in model.layers],
        v=[(np.zeros_like(w), np.zeros_like(b)) for w, b in model.layers],
    )


def adam_step(model, grads, opt_state, lr, weight_decay):
    """One Adam update (beta1=0.9, beta2=0.999, eps=1e-8, bias correction).

    The weight-decay term is added to the gradient before the moment
    updates.  Returns a new (model, opt_state) pair.
    """
    step = opt_state.step + 1
    c1 = 1.0 - ADAM_BETA1**step
    c2 = 1.0 - ADAM_BETA2**step
    new_layers, new_m, new_v = [], [], []
    for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(
        model.layers, grads, opt_state.m, opt_state.v
    ):
        out_params, out_m, out_v = [], [], []
        for p, gr, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
            gr = gr + weight_decay * p
            m2 = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * gr
            v2 = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * gr * gr
            p2 = p - lr * (m2 / c1) / (np.sqrt(v2 / c2) + ADAM_EPS)
            out_params.append(p2)
            out_m.append(m2)
            out_v.append(v2)
        new_layers.append((out_params[0], out_params[1]))
        new_m.append((out_m[0], out_m[1]))
        new_v.append((out_v[0], out_v[1]))
    new_model = replace(model, layers=new_layers)
    return new_model, AdamState(step=step, m=new_m, v=new_v)


def train(
    model: ModelState,
    g: TemporalGraph,
    X,
    labels,
    train_mask,
    cfg: TrainConfig,
    class_weights=None,
) -> ModelState:
    """Full-batch training: one update step per epoch, deterministic per seed.

    Optimizer moments start at zero.  In weighted-bce mode the per-class
    weights default to (n - n_i) / n_i over the masked labels.
    """
    if cfg.loss_mode == WEIGHTED_BCE and class_weights is None:
        from .openworld import class_weights as _cw

        class_weights = _cw(labels, train_mask, model.output_dim)
    rng = np.random.default_rng(cfg.seed)
    opt = init_adam_state(model)
    for _ in range(cfg.epochs):
        _, grads = loss_and_grad(
            model, g, X, labels, train_mask, cfg.loss_mode,
            class_weights=class_weights, train_mode=True, rng=rng,
        )
        model, opt = adam_step(model, grads, opt, cfg.learning_rate, cfg.weight_decay)
    return model


def expand_output_layer(model: ModelState, l: int, seed: int) -> ModelState:
    """Grow the final layer by ``l`` output units.

    Existing output weights and biases are preserved bit-exactly; new weight
    columns are Glorot-initialized and new biases zero.
    """
    if l < 0:
        raise ValidationError("cannot expand by a negative count")
    if l == 0:
        return model.copy()
    W, b = model.layers[-1]
    new_W = np.hstack([W, glorot_init(W.shape[0], l, seed)])
    new_b = np.concatenate([b, np.zeros(l, dtype=np.float64)])
    layers = [(w.copy(), bb.copy()) for w, bb in model.layers[:-1]] + [(new_W, new_b)]
    return replace(model, layers=layers, output_dim=model.output_dim + l)


def save_checkpoint(model: ModelState, path) -> None:
    """Write a checkpoint directory: text manifest + params.bin.

    params.bin concatenates, per layer in order, the weight matrix in
    row-major 32-bit little-endian floats followed by the bias vector.
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    lines = [
        "format_version=1",
        f"kind={model.kind}",
        f"hidden_dim={model.hidden_dim}",
        f"output_dim={model.output_dim}",
        f"sgc_k={model.sgc_k}",
        f"dropout_rate={model.dropout_rate!r}",
        f"rng_seed={model.rng_seed}",
        f"num_layers={len(model.layers)}",
    ]
    for i, (w, _) in enumerate(model.layers):
        lines.append(f"layer{i}_shape={w.shape[0]},{w.shape[1]}")
    (root / "manifest").write_text("\n".join(lines) + "\n", encoding="utf-8")
    blocks = []
    for w, b in model.layers:
        blocks.append(np.ascontiguousarray(w, dtype="<f4").tobytes())
        blocks.append(np.ascontiguousarray(b, dtype="<f4").tobytes())
    (root / "params.bin").write_bytes(b"".join(blocks))


def load_checkpoint(path) -> ModelState:
    """Inverse of :func:`save_checkpoint` (parameters come back as float32-exact)."""
    root = Path(path)
    manifest = {}
    for line in (root / "manifest").read_text(encoding="utf-8").splitlines():
        if line.strip():
            k, v = line.split("=", 1)
            manifest[k] = v
    n_layers = int(manifest["num_layers"])
    raw = np.frombuffer((root / "params.bin").read_bytes(), dtype="<f4")
    layers = []
    offset = 0
    for i in range(n_layers):
        fi, fo = (int(x) for x in manifest[f"layer{i}_shape"].split(","))
        w = raw[offset : offset + fi * fo].reshape(fi, fo).astype(np.float64)
        offset += fi * fo
        b = raw[offset : offset + fo].astype(np.float64)
        offset += fo
        layers.append((w, b))
    return ModelState(
        kind=manifest["kind"],
        layers=layers,
        hidden_dim=int(manifest["hidden_dim"]),
        output_dim=int(manifest["output_dim"]),
        sgc_k=int(manifest["sgc_k"]),
        dropout_rate=float(manifest["dropout_rate"]),
        rng_seed=int(manifest["rng_seed"]),
    )
