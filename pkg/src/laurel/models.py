"""Classifier stack: single-hidden-layer perceptrons trained from scratch.

Three networks cooperate: one scores the five topological features, one
scores the text embedding, and a two-input logistic unit mixes their
output probabilities into the final score. A fourth, a plain logistic
unit over the topological features, exists purely for interpretability:
its learned weights are the report.

All training is mini-batch gradient descent on mean binary
cross-entropy, deterministic per seed. The loss and its gradient are
computed in logit space (softplus form), so saturation never produces a
NaN; the public forward() clips probabilities into the open interval
(0,1). Early stopping watches validation macro-F1 at threshold 0.5 and
returns the parameters of the best epoch.

Prediction calls class 1 when the mixed probability is >= 0.5 (the
boundary goes to the positive class). A missing embedding at predict
time skips the text network and falls back to the topological
probability alone, flagged in the result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .metrics import ConfusionMatrix, f1_macro
from .topo import FEATURE_NAMES

MODEL_SCHEMA_VERSION = 1

_P_LO = float(np.nextafter(0.0, 1.0))
_P_HI = float(np.nextafter(1.0, 0.0))


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss leaves the finite range."""


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z: np.ndarray) -> np.ndarray:
    # log(1 + e^z) without overflow
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


@dataclass
class MlpParams:
    """One hidden rectifier layer (hidden_dim 0 collapses to a plain
    logistic unit over the raw inputs)."""

    input_dim: int
    hidden_dim: int
    w1: np.ndarray | None  # (hidden, input)
    b1: np.ndarray | None  # (hidden,)
    w_out: np.ndarray      # (hidden,) or (input,) when hidden_dim == 0
    b_out: float

    def copy(self) -> "MlpParams":
        return MlpParams(
            input_dim=self.input_dim, hidden_dim=self.hidden_dim,
            w1=None if self.w1 is None else self.w1.copy(),
            b1=None if self.b1 is None else self.b1.copy(),
            w_out=self.w_out.copy(), b_out=self.b_out)

    def flat(self) -> np.ndarray:
        parts = [] if self.w1 is None else [self.w1.ravel(), self.b1]
        return np.concatenate(parts + [self.w_out, [self.b_out]])


def init_params(input_dim: int, hidden_dim: int, seed: int) -> MlpParams:
    """Fan-balanced uniform weights, zero biases, deterministic per seed."""
    if input_dim < 1:
        raise ValueError("input_dim must be >= 1")
    if hidden_dim < 0:
        raise ValueError("hidden_dim must be >= 0")
    rng = np.random.default_rng(seed)
    if hidden_dim == 0:
        limit = math.sqrt(6.0 / (input_dim + 1))
        w_out = rng.uniform(-limit, limit, input_dim)
        return MlpParams(input_dim, 0, None, None, w_out, 0.0)
    limit1 = math.sqrt(6.0 / (input_dim + hidden_dim))
    w1 = rng.uniform(-limit1, limit1, (hidden_dim, input_dim))
    limit2 = math.sqrt(6.0 / (hidden_dim + 1))
    w_out = rng.uniform(-limit2, limit2, hidden_dim)
    return MlpParams(input_dim, hidden_dim, w1, np.zeros(hidden_dim), w_out, 0.0)


def _as_batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


def logits(params: MlpParams, x) -> np.ndarray:
    X, single = _as_batch(x)
    if X.shape[1] != params.input_dim:
        raise ValueError(
            f"input has {X.shape[1]} features, model expects {params.input_dim}")
    if params.hidden_dim == 0:
        z = X @ params.w_out + params.b_out
    else:
        a = np.maximum(X @ params.w1.T + params.b1, 0.0)
        z = a @ params.w_out + params.b_out
    return z[0] if single else z


def forward(params: MlpParams, x):
    """Probability of class 1, strictly inside (0,1)."""
    z = logits(params, x)
    p = _sigmoid(np.atleast_1d(np.asarray(z, dtype=np.float64)))
    p = np.clip(p, _P_LO, _P_HI)
    return float(p[0]) if np.ndim(z) == 0 else p


def loss(params: MlpParams, x, y, sample_weight=None) -> float:
    """Mean binary cross-entropy, evaluated in logit space."""
    X, _ = _as_batch(x)
    y = np.asarray(y, dtype=np.float64)
    z = logits(params, X)
    per_sample = _softplus(z) - y * z
    if sample_weight is not None:
        per_sample = per_sample * np.asarray(sample_weight, dtype=np.float64)
    return float(per_sample.mean())


@dataclass
class Gradients:
    w1: np.ndarray | None
    b1: np.ndarray | None
    w_out: np.ndarray
    b_out: float

    def flat(self) -> np.ndarray:
        parts = [] if self.w1 is None else [self.w1.ravel(), self.b1]
        return np.concatenate(parts + [self.w_out, [self.b_out]])


def gradient(params: MlpParams, x, y, sample_weight=None) -> Gradients:
    """Exact gradient of the mean BCE over the batch."""
    X, _ = _as_batch(x)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    n = X.shape[0]
    if params.hidden_dim == 0:
        z = X @ params.w_out + params.b_out
        g = (_sigmoid(z) - y) / n  # dL/dz, unclipped so saturation zeroes out
        if sample_weight is not None:
            g = g * np.asarray(sample_weight, dtype=np.float64)
        return Gradients(None, None, X.T @ g, float(g.sum()))
    pre = X @ params.w1.T + params.b1
    a = np.maximum(pre, 0.0)
    z = a @ params.w_out + params.b_out
    g = (_sigmoid(z) - y) / n
    if sample_weight is not None:
        g = g * np.asarray(sample_weight, dtype=np.float64)
    gw_out = a.T @ g
    gb_out = float(g.sum())
    da = np.outer(g, params.w_out)
    dpre = da * (pre > 0)
    return Gradients(dpre.T @ X, dpre.sum(axis=0), gw_out, gb_out)


def _apply(params: MlpParams, grads: Gradients, lr: float) -> None:
    if params.hidden_dim > 0:
        params.w1 -= lr * grads.w1
        params.b1 -= lr * grads.b1
    params.w_out -= lr * grads.w_out
    params.b_out -= lr * grads.b_out


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 300
    batch_size: int = 32
    seed: int = 0
    patience: int = 25
    class_weight: bool = False

    def validate(self) -> None:
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("learning_rate, epochs, batch_size must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


def class_weights(y: np.ndarray) -> np.ndarray:
    """Per-sample inverse-class-frequency weights, mean 1 over the split."""
    y = np.asarray(y)
    n = y.size
    n_pos = int(y.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        return np.ones(n, dtype=np.float64)
    w = np.where(y == 1, n / (2.0 * n_pos), n / (2.0 * n_neg))
    return w.astype(np.float64)


def _val_f1(params: MlpParams, x_val, y_val) -> float:
    p = np.atleast_1d(forward(params, x_val))
    pred = p >= 0.5
    y = np.asarray(y_val).astype(bool)
    conf = ConfusionMatrix(
        tp=int((pred & y).sum()), fp=int((pred & ~y).sum()),
        tn=int((~pred & ~y).sum()), fn=int((~pred & y).sum()))
    return f1_macro(conf)


@dataclass
class TrainResult:
    params: MlpParams
    best_epoch: int
    best_val_f1: float
    epochs_run: int
    train_losses: list[float]


def train(params: MlpParams, x_train, y_train, x_val, y_val,
          config: TrainConfig) -> TrainResult:
    """Mini-batch gradient descent with early stopping on validation
    macro-F1 at threshold 0.5. Returns the best-epoch parameters."""
    config.validate()
    X = np.asarray(x_train, dtype=np.float64)
    y = np.asarray(y_train, dtype=np.float64)
    if X.shape[0] == 0 or np.asarray(x_val).shape[0] == 0:
        raise ValueError("train and validation splits must be nonempty")
    params = params.copy()
    weights = class_weights(y) if config.class_weight else None
    rng = np.random.default_rng(config.seed)

    best = params.copy()
    best_f1 = -1.0
    best_epoch = 0
    stall = 0
    losses: list[float] = []
    epoch = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(X.shape[0])
        for start in range(0, X.shape[0], config.batch_size):
            idx = order[start:start + config.batch_size]
            bw = None if weights is None else weights[idx]
            _apply(params, gradient(params, X[idx], y[idx], bw), config.learning_rate)
        epoch_loss = loss(params, X, y, weights)
        if not math.isfinite(epoch_loss):
            raise TrainingDivergedError(
                f"non-finite training loss {epoch_loss!r} at epoch {epoch} "
                f"(learning_rate={config.learning_rate})")
        losses.append(epoch_loss)
        f1 = _val_f1(params, x_val, y_val)
        if f1 > best_f1:
            best, best_f1, best_epoch = params.copy(), f1, epoch
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                break
    return TrainResult(params=best, best_epoch=best_epoch, best_val_f1=best_f1,
                       epochs_run=epoch, train_losses=losses)


# ---------------------------------------------------------------------------
# Standardization and splits
# ---------------------------------------------------------------------------

@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x) -> "Standardizer":
        X = np.asarray(x, dtype=np.float64)
        mean = X.mean(axis=0)
        std = X.std(axis=0)  # population deviation
        std = np.where(std == 0.0, 1.0, std)  # constant features pass through
        return cls(mean=mean, std=std)

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std


@dataclass
class Splits:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def stratified_split(labels, seed: int,
                     fractions: tuple[float, float, float] = (0.70, 0.15, 0.15),
                     ) -> Splits:
    """Per-label shuffled split; deterministic per seed."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    parts: tuple[list, list, list] = ([], [], [])
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        n = idx.size
        n_tr = max(1, int(round(fractions[0] * n)))
        n_va = int(round(fractions[1] * n))
        n_va = min(n_va, n - n_tr)
        if n_va == 0 and n - n_tr >= 2:
            n_va = 1
        parts[0].append(idx[:n_tr])
        parts[1].append(idx[n_tr:n_tr + n_va])
        parts[2].append(idx[n_tr + n_va:])
    train, val, test = (np.sort(np.concatenate(p)) if p else np.array([], dtype=np.int64)
                        for p in parts)
    return Splits(train=train, val=val, test=test)


@dataclass
class LabeledDataset:
    """Rows with both feature families present."""

    ids: list[str]
    x_topo: np.ndarray   # (n, 5)
    x_text: np.ndarray   # (n, D)
    y: np.ndarray        # (n,) in {0,1}
    years: np.ndarray    # (n,)
    splits: Splits | None = None


# ---------------------------------------------------------------------------
# Mixed model
# ---------------------------------------------------------------------------

@dataclass
class MixedModel:
    gamma1: MlpParams            # topological, consumes standardized features
    gamma2: MlpParams            # textual, consumes raw embeddings
    gamma12: MlpParams           # logistic mixer over (y1, y2)
    standardizer: Standardizer
    feature_names: list[str] = field(default_factory=lambda: list(FEATURE_NAMES))


@dataclass
class MixedTrainReport:
    gamma1: TrainResult
    gamma2: TrainResult
    gamma12: TrainResult
    splits: Splits


def train_mixed(dataset: LabeledDataset, config: TrainConfig,
                hidden1: int = 16, hidden2: int = 64,
                ) -> tuple[MixedModel, MixedTrainReport]:
    """Train the two single-family networks, then the mixer on their
    output probabilities. Sub-networks draw seeds seed, seed+1, seed+2."""
    splits = dataset.splits or stratified_split(dataset.y, config.seed)
    tr, va = splits.train, splits.val
    std = Standardizer.fit(dataset.x_topo[tr])
    z1 = std.transform(dataset.x_topo)

    r1 = train(init_params(dataset.x_topo.shape[1], hidden1, config.seed),
               z1[tr], dataset.y[tr], z1[va], dataset.y[va], config)
    r2 = train(init_params(dataset.x_text.shape[1], hidden2, config.seed + 1),
               dataset.x_text[tr], dataset.y[tr],
               dataset.x_text[va], dataset.y[va], config)

    y1 = np.atleast_1d(forward(r1.params, z1))
    y2 = np.atleast_1d(forward(r2.params, dataset.x_text))
    mixer_in = np.column_stack([y1, y2])
    r12 = train(init_params(2, 0, config.seed + 2),
                mixer_in[tr], dataset.y[tr], mixer_in[va], dataset.y[va], config)

    model = MixedModel(gamma1=r1.params, gamma2=r2.params, gamma12=r12.params,
                       standardizer=std)
    return model, MixedTrainReport(gamma1=r1, gamma2=r2, gamma12=r12, splits=splits)


@dataclass
class Prediction:
    y1: float
    y2: float | None
    y12: float
    label: int
    text_fallback: bool  # embedding missing, mixed score fell back to y1


def predict(model: MixedModel, x_topo, x_text=None) -> Prediction:
    """Score one paper. class 1 iff the mixed probability >= 0.5."""
    y1 = forward(model.gamma1, model.standardizer.transform(
        np.asarray(x_topo, dtype=np.float64)[None, :])[0])
    if x_text is None:
        return Prediction(y1=y1, y2=None, y12=y1,
                          label=int(y1 >= 0.5), text_fallback=True)
    y2 = forward(model.gamma2, x_text)
    y12 = forward(model.gamma12, np.array([y1, y2]))
    return Prediction(y1=y1, y2=y2, y12=y12,
                      label=int(y12 >= 0.5), text_fallback=False)


def predict_scores(model: MixedModel, x_topo, x_text) -> np.ndarray:
    """Batch mixed probabilities; both feature matrices required."""
    z1 = model.standardizer.transform(x_topo)
    y1 = np.atleast_1d(forward(model.gamma1, z1))
    y2 = np.atleast_1d(forward(model.gamma2, x_text))
    return np.atleast_1d(forward(model.gamma12, np.column_stack([y1, y2])))


# ---------------------------------------------------------------------------
# Interpretability perceptron
# ---------------------------------------------------------------------------

@dataclass
class WeightReport:
    raw: list[tuple[str, float]]           # sorted by |weight| descending
    standardized: list[tuple[str, float]]
    bias_raw: float
    bias_std: float


@dataclass
class SimplePerceptronResult:
    params_raw: MlpParams
    params_std: MlpParams
    standardizer: Standardizer
    report: WeightReport


def _sorted_weights(names, w) -> list[tuple[str, float]]:
    pairs = [(name, float(weight)) for name, weight in zip(names, w)]
    return sorted(pairs, key=lambda p: abs(p[1]), reverse=True)


def _train_logistic_converged(x_train, y_train, x_val, y_val,
                              config: TrainConfig) -> TrainResult:
    """Logistic fit to convergence by damped Newton steps: the objective
    is convex, so the optimum does not depend on the start, and curvature
    steps settle directions that collinear features leave nearly flat in
    the gradient (where first-order descent stalls short of the optimum
    and can even leave small weights with the wrong sign). config.epochs
    caps the iteration count; the weights are the product here, so the
    fit runs until the step size collapses rather than to peak F1."""
    config.validate()
    X = np.asarray(x_train, dtype=np.float64)
    y = np.asarray(y_train, dtype=np.float64)
    n, d = X.shape
    sw = class_weights(y) if config.class_weight else np.ones(n)
    weights = sw if config.class_weight else None
    A = np.hstack([X, np.ones((n, 1))])
    theta = np.zeros(d + 1)

    def as_params(t: np.ndarray) -> MlpParams:
        return MlpParams(d, 0, None, None, t[:d].copy(), float(t[d]))

    cur = loss(as_params(theta), X, y, weights)
    losses: list[float] = []
    epoch = 0
    for epoch in range(1, config.epochs + 1):
        p = _sigmoid(A @ theta)
        g = A.T @ (sw * (p - y)) / n
        curv = sw * p * (1.0 - p)
        # tiny ridge keeps the solve well-posed under exact collinearity
        H = (A.T * curv) @ A / n + 1e-12 * np.eye(d + 1)
        step = np.linalg.solve(H, g)
        # halve until the convex objective actually decreases
        scale = 1.0
        while scale > 1e-12:
            trial = loss(as_params(theta - scale * step), X, y, weights)
            if math.isfinite(trial) and trial <= cur:
                break
            scale *= 0.5
        theta = theta - scale * step
        new = loss(as_params(theta), X, y, weights)
        if not math.isfinite(new):
            raise TrainingDivergedError(
                f"non-finite training loss {new!r} at epoch {epoch}")
        losses.append(new)
        moved = float(np.max(np.abs(scale * step)))
        settled = moved < 1e-10 or cur - new < 1e-15
        cur = new
        if settled:
            break
    params = as_params(theta)
    return TrainResult(params=params, best_epoch=epoch,
                       best_val_f1=_val_f1(params, x_val, y_val),
                       epochs_run=epoch, train_losses=losses)


def train_simple_perceptron(x, y, config: TrainConfig,
                            feature_names: list[str] | None = None,
                            ) -> SimplePerceptronResult:
    """Logistic unit over the named features, fit twice: on the raw
    values and on standardized values. The report carries both weight
    sets, each sorted by magnitude."""
    X = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    names = list(feature_names) if feature_names is not None else list(FEATURE_NAMES)
    if X.shape[1] != len(names):
        raise ValueError("feature names do not match matrix width")
    splits = stratified_split(y, config.seed, (0.85, 0.15, 0.0))
    tr, va = splits.train, splits.val

    raw = _train_logistic_converged(X[tr], y[tr], X[va], y[va], config)
    std = Standardizer.fit(X[tr])
    Z = std.transform(X)
    stdr = _train_logistic_converged(Z[tr], y[tr], Z[va], y[va], config)

    report = WeightReport(
        raw=_sorted_weights(names, raw.params.w_out),
        standardized=_sorted_weights(names, stdr.params.w_out),
        bias_raw=float(raw.params.b_out), bias_std=float(stdr.params.b_out))
    return SimplePerceptronResult(params_raw=raw.params, params_std=stdr.params,
                                  standardizer=std, report=report)


def format_weight_report(report: WeightReport) -> str:
    """Human-readable weight table, one feature per line, |weight| order."""
    width = max(len(name) for name, _ in report.raw)
    lines = ["feature weights (raw inputs):"]
    for name, w in report.raw:
        lines.append(f"  {name:<{width}}  {w: .4f}")
    lines.append(f"  {'bias':<{width}}  {report.bias_raw: .4f}")
    lines.append("feature weights (standardized inputs):")
    for name, w in report.standardized:
        lines.append(f"  {name:<{width}}  {w: .4f}")
    lines.append(f"  {'bias':<{width}}  {report.bias_std: .4f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _params_to_dict(p: MlpParams) -> dict:
    return {
        "input_dim": p.input_dim,
        "hidden_dim": p.hidden_dim,
        "w1": None if p.w1 is None else p.w1.tolist(),
        "b1": None if p.b1 is None else p.b1.tolist(),
        "w_out": p.w_out.tolist(),
        "b_out": p.b_out,
    }


def _params_from_dict(d: dict) -> MlpParams:
    return MlpParams(
        input_dim=int(d["input_dim"]), hidden_dim=int(d["hidden_dim"]),
        w1=None if d["w1"] is None else np.array(d["w1"], dtype=np.float64),
        b1=None if d["b1"] is None else np.array(d["b1"], dtype=np.float64),
        w_out=np.array(d["w_out"], dtype=np.float64), b_out=float(d["b_out"]))


def save_model(path: str | Path, model: MixedModel, config: TrainConfig) -> None:
    payload = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "feature_names": model.feature_names,
        "standardizer": {"mean": model.standardizer.mean.tolist(),
                         "std": model.standardizer.std.tolist()},
        "gamma1": _params_to_dict(model.gamma1),
        "gamma2": _params_to_dict(model.gamma2),
        "gamma12": _params_to_dict(model.gamma12),
        "train_config": {
            "learning_rate": config.learning_rate, "epochs": config.epochs,
            "batch_size": config.batch_size, "seed": config.seed,
            "patience": config.patience, "class_weight": config.class_weight,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_model(path: str | Path) -> tuple[MixedModel, TrainConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported model schema version {version!r}")
    std = Standardizer(mean=np.array(payload["standardizer"]["mean"]),
                       std=np.array(payload["standardizer"]["std"]))
    model = MixedModel(
        gamma1=_params_from_dict(payload["gamma1"]),
        gamma2=_params_from_dict(payload["gamma2"]),
        gamma12=_params_from_dict(payload["gamma12"]),
        standardizer=std, feature_names=list(payload["feature_names"]))
    tc = payload["train_config"]
    config = TrainConfig(learning_rate=tc["learning_rate"], epochs=tc["epochs"],
                         batch_size=tc["batch_size"], seed=tc["seed"],
                         patience=tc["patience"], class_weight=tc["class_weight"])
    return model, config
