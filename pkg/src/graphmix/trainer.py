"""Training loops for the mixup-regularized GCN+FCN pair and its baselines.

One trial is a pure function of (dataset, config): every stochastic choice
(coin flips, dropout masks, mixing coefficients, permutations) comes from
a labeled stream derived from the seed, and the streams are split by
purpose so ablations that remove a component leave the remaining streams'
draws untouched.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import evaluate, nn
from .graphdata import Dataset
from .model import (
    FeatureSource,
    MixSpec,
    ModelParams,
    ema_update,
    fcn_forward,
    fcn_backward,
    fcn_mixup_backward,
    fcn_mixup_forward,
    gcn_backward,
    gcn_forward,
)
from .nn import AdamConfig, LossBreakdown
from .rng import Rng
from .sparse import CSRMatrix

METHODS = ("graphmix", "gcn", "gcn-self", "fcn-self")


@dataclass
class TrainConfig:
    epochs: int = 2000
    alpha: float = 1.0
    gamma: float = 1.0
    temperature: float = 0.1
    k_perturb: int = 10
    rampup_start: int = 500
    rampup_end: int = 1000
    alternation: str = "coin"  # coin | strict | joint
    lambda_joint: float = 1.0
    unlabeled_pool: str = "all-non-train"  # | non-train-non-val
    ema_decay: "float | None" = None
    teacher: str = "gnn"  # gnn | ema
    use_mixup: bool = True
    use_predicted_targets: bool = True
    use_sharpening: bool = True
    use_averaging: bool = True
    use_fcn: bool = True
    lr: float = 0.01
    weight_decay: float = 5e-4
    input_dropout: float = 0.5
    hidden_dropout: float = 0.0
    hidden: int = 16
    use_bias: bool = False
    seed: int = 0
    metric: str = "accuracy"  # accuracy | f1
    f1_positive_class: int = 0

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (0 <= self.rampup_start <= self.rampup_end <= self.epochs):
            raise ValueError("need 0 <= rampup_start <= rampup_end <= epochs")
        if self.k_perturb < 1:
            raise ValueError("k_perturb must be >= 1")
        if self.alpha < 0 or self.gamma < 0:
            raise ValueError("alpha and gamma must be >= 0")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.alternation not in ("coin", "strict", "joint"):
            raise ValueError(f"unknown alternation {self.alternation!r}")
        if self.unlabeled_pool not in ("all-non-train", "non-train-non-val"):
            raise ValueError(f"unknown unlabeled_pool {self.unlabeled_pool!r}")
        if self.teacher not in ("gnn", "ema"):
            raise ValueError(f"unknown teacher {self.teacher!r}")
        if self.teacher == "ema" and self.ema_decay is None:
            raise ValueError("teacher 'ema' requires ema_decay")
        if self.ema_decay is not None and not (0.0 < self.ema_decay < 1.0):
            raise ValueError("ema_decay must lie in (0, 1)")
        if self.metric not in ("accuracy", "f1"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")

    def adam(self) -> AdamConfig:
        return AdamConfig(lr=self.lr, weight_decay=self.weight_decay)

    def to_json(self) -> str:
        doc = asdict(self)
        return json.dumps(doc, indent=2, sort_keys=True)

    @staticmethod
    def from_dict(doc: dict) -> "TrainConfig":
        known = {f for f in TrainConfig.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = TrainConfig(**doc)
        cfg.validate()
        return cfg

    @staticmethod
    def from_json(text: str) -> "TrainConfig":
        return TrainConfig.from_dict(json.loads(text))


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_metric: float
    test_metric: float


@dataclass
class TrialResult:
    records: list
    selected_epoch: int
    selected_val_metric: float
    selected_test_metric: float
    seed: int
    wall_clock: float
    metric_name: str = "accuracy"
    best_params: "ModelParams | None" = None

    def log_rows(self):
        """Trial-log rows: (epoch, split, metric, value)."""
        rows = []
        for r in self.records:
            rows.append((r.epoch, "train", "loss", r.train_loss))
            rows.append((r.epoch, "val", self.metric_name, r.val_metric))
            rows.append((r.epoch, "test", self.metric_name, r.test_metric))
        return rows


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, message: str):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


def rampup_weight(t: int, cfg: TrainConfig) -> float:
    """gamma * exp(-5 (1-p)^2), p = clip((t-start)/(end-start), 0, 1).

    The formula floors at gamma*e^-5 for t <= start; callers that want
    "off before the window" use unsupervised_weight instead.
    """
    if cfg.rampup_end == cfg.rampup_start:
        p = 1.0 if t >= cfg.rampup_end else 0.0
    else:
        p = min(max((t - cfg.rampup_start) / (cfg.rampup_end - cfg.rampup_start), 0.0), 1.0)
    return cfg.gamma * math.exp(-5.0 * (1.0 - p) ** 2)


def unsupervised_weight(t: int, cfg: TrainConfig) -> float:
    """Ramp weight actually applied in training: exactly 0 before the
    window opens, the ramp formula from there on."""
    if t < cfg.rampup_start:
        return 0.0
    return rampup_weight(t, cfg)


def sharpen(p: np.ndarray, temperature: float) -> np.ndarray:
    """Raise rows to 1/T and renormalize. Rows must be nonnegative and
    not all zero."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    p = np.asarray(p, dtype=np.float64)
    vec = p.ndim == 1
    rows = p[None, :] if vec else p
    if (rows < 0).any():
        raise ValueError("probabilities must be nonnegative")
    peak = rows.max(axis=1, keepdims=True)
    if (peak == 0).any():
        raise ValueError("cannot sharpen an all-zero vector")
    powered = (rows / peak) ** (1.0 / temperature)
    out = powered / powered.sum(axis=1, keepdims=True)
    return out[0] if vec else out


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], num_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def predict_targets(
    params: ModelParams,
    a_hat: "CSRMatrix | None",
    x,
    unlabeled_ids: np.ndarray,
    cfg: TrainConfig,
    gen,
    network: str = "gnn",
) -> np.ndarray:
    """Soft targets for the unlabeled rows: softmax averaged over
    k_perturb dropout-perturbed forward passes (parameters frozen),
    optionally sharpened. Averaging off forces a single pass."""
    k = cfg.k_perturb if cfg.use_averaging else 1
    acc = None
    for _ in range(k):
        if network == "gnn":
            logits, _ = gcn_forward(
                params, a_hat, x, cfg.input_dropout, cfg.hidden_dropout, gen, train=True
            )
        else:
            logits, _ = fcn_forward(
                params, x, cfg.input_dropout, cfg.hidden_dropout, gen, train=True
            )
        probs = nn.softmax(logits[unlabeled_ids])
        acc = probs if acc is None else acc + probs
    avg = acc / k
    if cfg.use_sharpening:
        avg = sharpen(avg, cfg.temperature)
    return avg


@dataclass
class _TrainState:
    """Everything a trial shares across epochs."""

    dataset: Dataset
    a_hat: CSRMatrix
    cfg: TrainConfig
    x_full: FeatureSource
    x_lab: FeatureSource
    x_unlab: "FeatureSource | None"
    y_lab: np.ndarray
    labeled_ids: np.ndarray
    unlabeled_ids: np.ndarray
    rng: Rng
    adam: AdamConfig


def _make_state(dataset: Dataset, a_hat: CSRMatrix, cfg: TrainConfig) -> _TrainState:
    cfg.validate()
    labeled_ids = np.flatnonzero(dataset.train_mask)
    if labeled_ids.shape[0] == 0:
        raise ValueError("no training nodes in the split")
    if cfg.unlabeled_pool == "all-non-train":
        pool = ~dataset.train_mask
    else:
        pool = ~(dataset.train_mask | dataset.val_mask)
    unlabeled_ids = np.flatnonzero(pool)
    x_full = FeatureSource(dataset.features)
    x_unlab = x_full.take(unlabeled_ids) if unlabeled_ids.shape[0] else None
    return _TrainState(
        dataset=dataset,
        a_hat=a_hat,
        cfg=cfg,
        x_full=x_full,
        x_lab=x_full.take(labeled_ids),
        x_unlab=x_unlab,
        y_lab=one_hot(dataset.labels[labeled_ids], dataset.num_classes),
        labeled_ids=labeled_ids,
        unlabeled_ids=unlabeled_ids,
        rng=Rng(cfg.seed),
        adam=cfg.adam(),
    )


def _mix_spec(n_rows: int, state: _TrainState) -> MixSpec:
    cfg = state.cfg
    if not cfg.use_mixup:
        return MixSpec(1.0, np.arange(n_rows, dtype=np.int64))
    lam = nn.sample_beta(cfg.alpha, state.rng.derive("mixup-lambda"))
    perm = state.rng.derive("permutation").permutation(n_rows).astype(np.int64)
    return MixSpec(lam, perm)


def fcn_step(
    params: ModelParams,
    state: _TrainState,
    targets_u: "np.ndarray | None",
    w: float,
    scale: float = 1.0,
    step: bool = True,
) -> LossBreakdown:
    """One FCN update: mixup CE on labeled rows plus w * mixup CE on
    unlabeled rows against their predicted targets. With scale != 1 the
    gradient contribution is multiplied (joint mode); step=False leaves
    the accumulated gradient for the caller's optimizer step."""
    cfg = state.cfg
    gen = state.rng.derive("fcn-dropout")

    mix = _mix_spec(state.labeled_ids.shape[0], state)
    logits, mixed_t, cache = fcn_mixup_forward(
        params, state.x_lab, state.y_lab, mix, cfg.input_dropout, cfg.hidden_dropout, gen
    )
    loss_sup, d_logits = nn.softmax_cross_entropy(logits, mixed_t)
    fcn_mixup_backward(cache, scale * d_logits, params)

    loss_unsup = 0.0
    if targets_u is not None and w > 0.0 and state.x_unlab is not None:
        mix_u = _mix_spec(state.unlabeled_ids.shape[0], state)
        logits_u, mixed_tu, cache_u = fcn_mixup_forward(
            params,
            state.x_unlab,
            targets_u,
            mix_u,
            cfg.input_dropout,
            cfg.hidden_dropout,
            gen,
        )
        loss_unsup, d_u = nn.softmax_cross_entropy(logits_u, mixed_tu)
        fcn_mixup_backward(cache_u, (scale * w) * d_u, params)

    total = loss_sup + w * loss_unsup
    if step:
        for p in params.parameters():
            nn.adam_step(p, state.adam)
    return LossBreakdown(loss_sup, loss_unsup, w, total)


def gnn_step(
    params: ModelParams,
    state: _TrainState,
    scale: float = 1.0,
    step: bool = True,
) -> float:
    """One GCN update: plain CE on the labeled nodes."""
    cfg = state.cfg
    gen = state.rng.derive("gnn-dropout")
    logits, cache = gcn_forward(
        params, state.a_hat, state.x_full, cfg.input_dropout, cfg.hidden_dropout, gen
    )
    loss, d_sub = nn.softmax_cross_entropy(logits[state.labeled_ids], state.y_lab)
    d_full = np.zeros_like(logits)
    d_full[state.labeled_ids] = scale * d_sub
    gcn_backward(cache, d_full, params, state.a_hat)
    if step:
        for p in params.parameters():
            nn.adam_step(p, state.adam)
    return loss


def _metric(predictions, labels, mask, cfg: TrainConfig) -> float:
    if cfg.metric == "f1":
        return evaluate.binary_f1(predictions, labels, mask, cfg.f1_positive_class)
    return evaluate.accuracy(predictions, labels, mask)


def _eval_epoch(params, state: _TrainState, network: str = "gnn"):
    if network == "gnn":
        logits, _ = gcn_forward(params, state.a_hat, state.x_full, 0.0, 0.0, None, train=False)
    else:
        logits, _ = fcn_forward(params, state.x_full, 0.0, 0.0, None, train=False)
    predictions = logits.argmax(axis=1)
    d = state.dataset
    val = _metric(predictions, d.labels, d.val_mask, state.cfg)
    test = _metric(predictions, d.labels, d.test_mask, state.cfg)
    return val, test


def _fresh_targets(params, ema, state: _TrainState, network: str = "gnn"):
    cfg = state.cfg
    if not cfg.use_predicted_targets or state.x_unlab is None:
        return None
    teacher = ema if cfg.teacher == "ema" else params
    if network == "gnn":
        return predict_targets(
            teacher,
            state.a_hat,
            state.x_full,
            state.unlabeled_ids,
            cfg,
            state.rng.derive("target-dropout"),
            network="gnn",
        )
    return predict_targets(
        teacher,
        None,
        state.x_full,
        state.unlabeled_ids,
        cfg,
        state.rng.derive("target-dropout"),
        network="fcn",
    )


def _finish(records, seed, t0, metric_name, best_params) -> TrialResult:
    best = max(range(len(records)), key=lambda i: (records[i].val_metric, -i))
    return TrialResult(
        records=records,
        selected_epoch=records[best].epoch,
        selected_val_metric=records[best].val_metric,
        selected_test_metric=records[best].test_metric,
        seed=seed,
        wall_clock=time.perf_counter() - t0,
        metric_name=metric_name,
        best_params=best_params,
    )


def train_graphmix(dataset: Dataset, a_hat: CSRMatrix, cfg: TrainConfig) -> TrialResult:
    """Alternating (or joint) optimization of the weight-sharing GCN/FCN
    pair. Evaluation always goes through the GCN."""
    t0 = time.perf_counter()
    state = _make_state(dataset, a_hat, cfg)
    params = ModelParams.init(
        dataset.num_features, cfg.hidden, dataset.num_classes, state.rng, cfg.use_bias
    )
    ema = params.copy() if cfg.ema_decay is not None else None
    coin = state.rng.derive("coin")

    records = []
    best_val = -np.inf
    best_params = None
    for t in range(cfg.epochs):
        if cfg.alternation == "coin":
            train_fcn = int(coin.integers(0, 2)) == 0
        elif cfg.alternation == "strict":
            train_fcn = t % 2 == 1
        else:
            train_fcn = False  # joint handles both below

        if cfg.alternation == "joint":
            w = unsupervised_weight(t, cfg)
            targets_u = _fresh_targets(params, ema, state) if w > 0 else None
            loss_gnn = gnn_step(params, state, step=False)
            breakdown = (
                fcn_step(params, state, targets_u, w, scale=cfg.lambda_joint, step=False)
                if cfg.use_fcn
                else LossBreakdown()
            )
            for p in params.parameters():
                nn.adam_step(p, state.adam)
            loss = loss_gnn + cfg.lambda_joint * breakdown.total
            stepped = True
        elif train_fcn:
            if cfg.use_fcn:
                w = unsupervised_weight(t, cfg)
                targets_u = _fresh_targets(params, ema, state) if w > 0 else None
                breakdown = fcn_step(params, state, targets_u, w)
                loss = breakdown.total
                stepped = True
            else:
                loss = 0.0
                stepped = False
        else:
            loss = gnn_step(params, state)
            stepped = True

        if stepped and not math.isfinite(loss):
            raise TrainingDiverged(t, f"non-finite loss {loss}")
        if stepped and ema is not None:
            ema_update(ema, params, cfg.ema_decay)

        val, test = _eval_epoch(params, state, network="gnn")
        records.append(EpochRecord(t, loss, val, test))
        if val > best_val:
            best_val = val
            best_params = params.copy()

    return _finish(records, cfg.seed, t0, cfg.metric, best_params)


def train_self_training(
    dataset: Dataset, a_hat: CSRMatrix, cfg: TrainConfig, backbone: str = "gnn"
) -> TrialResult:
    """Single-network baseline: CE on labeled nodes plus the ramped CE of
    the network's own averaged-and-sharpened predictions on the unlabeled
    pool. No mixing, no weight-sharing partner. gamma = 0 reduces this to
    plain supervised training of the backbone."""
    if backbone not in ("gnn", "fcn"):
        raise ValueError(f"unknown backbone {backbone!r}")
    t0 = time.perf_counter()
    state = _make_state(dataset, a_hat, cfg)
    params = ModelParams.init(
        dataset.num_features, cfg.hidden, dataset.num_classes, state.rng, cfg.use_bias
    )
    ema = params.copy() if cfg.ema_decay is not None else None
    stream = "gnn-dropout" if backbone == "gnn" else "fcn-dropout"

    records = []
    best_val = -np.inf
    best_params = None
    for t in range(cfg.epochs):
        w = unsupervised_weight(t, cfg)
        targets_u = _fresh_targets(params, ema, state, network=backbone) if w > 0 else None

        gen = state.rng.derive(stream)
        if backbone == "gnn":
            logits, cache = gcn_forward(
                params, a_hat, state.x_full, cfg.input_dropout, cfg.hidden_dropout, gen
            )
        else:
            logits, cache = fcn_forward(
                params, state.x_full, cfg.input_dropout, cfg.hidden_dropout, gen
            )
        loss_sup, d_sub = nn.softmax_cross_entropy(logits[state.labeled_ids], state.y_lab)
        d_full = np.zeros_like(logits)
        d_full[state.labeled_ids] = d_sub
        loss_unsup = 0.0
        if targets_u is not None:
            loss_unsup, d_u = nn.softmax_cross_entropy(logits[state.unlabeled_ids], targets_u)
            d_full[state.unlabeled_ids] += w * d_u
        if backbone == "gnn":
            gcn_backward(cache, d_full, params, a_hat)
        else:
            fcn_backward(cache, d_full, params)
        for p in params.parameters():
            nn.adam_step(p, state.adam)
        if ema is not None:
            ema_update(ema, params, cfg.ema_decay)

        loss = loss_sup + w * loss_unsup
        if not math.isfinite(loss):
            raise TrainingDiverged(t, f"non-finite loss {loss}")

        val, test = _eval_epoch(params, state, network=backbone)
        records.append(EpochRecord(t, loss, val, test))
        if val > best_val:
            best_val = val
            best_params = params.copy()

    return _finish(records, cfg.seed, t0, cfg.metric, best_params)


def run_trial(dataset: Dataset, a_hat: CSRMatrix, cfg: TrainConfig, method: str) -> TrialResult:
    """Dispatch a single trial by method name."""
    if method == "graphmix":
        return train_graphmix(dataset, a_hat, cfg)
    if method == "gcn":
        return train_self_training(dataset, a_hat, replace(cfg, gamma=0.0), backbone="gnn")
    if method == "gcn-self":
        return train_self_training(dataset, a_hat, cfg, backbone="gnn")
    if method == "fcn-self":
        return train_self_training(dataset, a_hat, cfg, backbone="fcn")
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
