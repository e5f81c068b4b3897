"""Joint training of all per-target networks and causal graph extraction."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .constraints import (
    PenaltyConfig,
    acyclicity_penalty,
    break_cycles,
    softmax_columns,
    softmax_columns_backward,
)
from .model import (
    ACTIVATIONS,
    ConfigurationError,
    ConvAttentionModel,
    _as_values,
    backward_all,
    forward_all,
    layers_for_lag,
    receptive_field,
)
from .numeric import AdamState, NonFiniteGradientError, adam_step
from .structures import CausalGraph, Edge


class TrainingDivergedError(FloatingPointError):
    def __init__(self, epoch: int, detail: str = "loss is not finite"):
        super().__init__(f"training diverged at epoch {epoch}: {detail}")
        self.epoch = epoch


@dataclass
class DiscoveryConfig:
    """Hyperparameters of one discovery run.

    ``n_layers=None`` picks the smallest depth whose receptive field covers
    ``max_lag_hint``. ``threshold`` applies to per-column min-max rescaled
    attention scores.

    Two options go beyond plain training. ``standardize`` z-scores every
    series before :func:`discover` trains on it. ``n_restarts`` trains that
    many independently seeded models and averages their column-softmax
    attention before extraction.
    """

    epochs: int = 1000
    lr: float = 0.01
    dilation_base: int = 4
    kernel_width: int = 4
    max_lag_hint: int = 8
    n_layers: int | None = None
    alpha_diag: float = 0.0
    alpha_weight: float = 0.1
    beta: float = 1.0
    K: int | None = None
    l1_weight: float = 0.01
    threshold: float = 0.7
    self_causation: bool = False
    activation: str = "relu"
    standardize: bool = False
    n_restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ValueError(f"epochs must be a positive integer, got {self.epochs!r}")
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        for name in ("alpha_weight", "l1_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.dilation_base < 1 or self.kernel_width < 2 or self.max_lag_hint < 1:
            raise ValueError("dilation_base >= 1, kernel_width >= 2 and max_lag_hint >= 1 required")
        if self.n_layers is not None and self.n_layers < 1:
            raise ValueError(f"n_layers must be >= 1, got {self.n_layers}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if int(self.n_restarts) != self.n_restarts or self.n_restarts < 1:
            raise ValueError(f"n_restarts must be a positive integer, got {self.n_restarts!r}")
        PenaltyConfig(self.beta, self.K, self.alpha_weight)

    @property
    def depth(self) -> int:
        if self.n_layers is not None:
            return self.n_layers
        return layers_for_lag(self.max_lag_hint, self.kernel_width, self.dilation_base)

    @property
    def receptive_field(self) -> int:
        return receptive_field(self.depth, self.kernel_width, self.dilation_base)

    @property
    def penalty(self) -> PenaltyConfig:
        return PenaltyConfig(self.beta, self.K, self.alpha_weight)

    def replace(self, **changes) -> "DiscoveryConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class TrainingTrace:
    """Per-epoch loss components, recorded before each optimizer step."""

    total: list = field(default_factory=list)
    mse: list = field(default_factory=list)
    penalty: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    attention: np.ndarray | None = None
    attention_softmax: np.ndarray | None = None

    def __len__(self):
        return len(self.total)

    def to_csv(self) -> str:
        n = len(self.mse[0]) if self.mse else 0
        header = ["epoch", "total", "penalty", "l1"] + [f"mse_{k}" for k in range(n)]
        lines = [",".join(header)]
        for e, (tot, mse, pen, l1) in enumerate(zip(self.total, self.mse, self.penalty, self.l1)):
            row = [str(e), repr(tot), repr(pen), repr(l1)] + [repr(float(m)) for m in mse]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def global_loss(model: ConvAttentionModel, data, cfg: DiscoveryConfig, return_parts: bool = False):
    """Total training loss and its gradient for every model parameter.

    ``sum_k MSE_k + alpha_weight * penalty + l1_weight * sum|shared_weight|``,
    where each MSE skips the first receptive-field samples.

    The penalty never covers the attention diagonal. A self-loop is a cycle
    of length one, so penalising it would only push every column away from
    its own channel. Extraction drops the diagonal anyway unless
    ``self_causation`` is set.
    """
    values = _as_values(data)
    pred, cache = forward_all(model, values, return_cache=True)
    T = values.shape[1]
    warmup = model.receptive_field
    if warmup >= T:
        raise ConfigurationError(
            f"series length T={T} leaves no samples after the receptive field RF={warmup}"
        )
    resid = pred - values
    resid[:, :warmup] = 0.0
    n_eff = T - warmup
    mse = np.sum(resid * resid, axis=1) / n_eff
    grads = backward_all(model, cache, 2.0 * resid / n_eff)

    penalty, grad_att_pen = acyclicity_penalty(model.attention, cfg.penalty, self_causation=True)
    l1 = float(np.sum(np.abs(model.shared_weight)))
    total = float(np.sum(mse)) + cfg.alpha_weight * penalty + cfg.l1_weight * l1

    scores = cache["scores"]
    grads["attention"] = softmax_columns_backward(scores, grads.pop("scores")) + cfg.alpha_weight * grad_att_pen
    grads["shared_weight"] = grads["shared_weight"] + cfg.l1_weight * np.sign(model.shared_weight)
    if return_parts:
        return total, grads, {"mse": mse, "penalty": penalty, "l1": l1}
    return total, grads


def build_model(n_vars: int, cfg: DiscoveryConfig) -> ConvAttentionModel:
    return ConvAttentionModel.initialize(
        n_vars,
        cfg.depth,
        kernel_width=cfg.kernel_width,
        dilation_base=cfg.dilation_base,
        alpha_diag=cfg.alpha_diag,
        activation=cfg.activation,
        random_state=cfg.seed,
    )


def train(data, cfg: DiscoveryConfig | None = None, model: ConvAttentionModel | None = None):
    """Fit all networks jointly with Adam for ``cfg.epochs`` full-batch steps.

    Returns ``(model, trace)``. Deterministic for a fixed ``cfg.seed``.
    """
    cfg = cfg or DiscoveryConfig()
    values = _as_values(data)
    n, T = values.shape
    if n < 2:
        raise ValueError(f"need at least 2 variables, got {n}")
    rf = cfg.receptive_field
    if T <= rf:
        raise ConfigurationError(f"series length T={T} must exceed the receptive field RF={rf}")
    model = model.copy() if model is not None else build_model(n, cfg)

    state = AdamState(lr=cfg.lr)
    trace = TrainingTrace()
    params = model.params()
    for epoch in range(cfg.epochs):
        # overflow is caught below as a non-finite loss or gradient
        with np.errstate(over="ignore", invalid="ignore"):
            total, grads, parts = global_loss(model, values, cfg, return_parts=True)
        if not np.isfinite(total):
            raise TrainingDivergedError(epoch)
        trace.total.append(total)
        trace.mse.append(parts["mse"].tolist())
        trace.penalty.append(parts["penalty"])
        trace.l1.append(parts["l1"])
        try:
            adam_step(params, grads, state)
        except NonFiniteGradientError as exc:
            raise TrainingDivergedError(epoch, str(exc)) from exc
    trace.attention = model.attention.copy()
    trace.attention_softmax = softmax_columns(model.attention)
    return model, trace


def rescaled_scores(attention) -> np.ndarray:
    """Column-softmax attention min-max rescaled to [0, 1] per column.

    Columns whose scores are all equal (to 1e-12) have no meaningful ranking
    and come back as zeros.
    """
    s = softmax_columns(attention)
    lo = s.min(axis=0, keepdims=True)
    span = s.max(axis=0, keepdims=True) - lo
    flat = span <= 1e-12
    return np.where(flat, 0.0, (s - lo) / np.where(flat, 1.0, span))


def extract_graph(model, cfg: DiscoveryConfig | None = None) -> CausalGraph:
    """Threshold rescaled attention and remove cycles.

    Accepts a trained model or a raw attention matrix.
    """
    cfg = cfg or DiscoveryConfig()
    attention = getattr(model, "attention", model)
    attention = np.asarray(attention, dtype=np.float64)
    scores = softmax_columns(attention)
    keep = rescaled_scores(attention) >= cfg.threshold
    adj = break_cycles(scores, keep, keep_diagonal=cfg.self_causation)
    edges = [
        Edge(int(i), int(j), None, float(scores[i, j])) for i, j in zip(*np.nonzero(adj))
    ]
    return CausalGraph(attention.shape[0], edges)


def standardize(data) -> np.ndarray:
    """Z-score every series; constant series are only centred."""
    values = _as_values(data)
    mean = values.mean(axis=1, keepdims=True)
    std = values.std(axis=1, keepdims=True)
    return (values - mean) / np.where(std > 0, std, 1.0)


def restart_seeds(cfg: DiscoveryConfig) -> list:
    """Seeds of the ``cfg.n_restarts`` training runs; the first is ``cfg.seed``."""
    extra = np.random.SeedSequence(cfg.seed).generate_state(cfg.n_restarts - 1, dtype=np.uint32)
    return [int(cfg.seed)] + [int(s) for s in extra]


def consensus_attention(models) -> np.ndarray:
    """Raw attention whose column softmax is the mean over ``models``.

    The mean of column-stochastic matrices is column-stochastic, so its
    elementwise log is a valid raw attention matrix.
    """
    mean = np.mean([softmax_columns(getattr(m, "attention", m)) for m in models], axis=0)
    return np.log(mean)


def discover(data, cfg: DiscoveryConfig | None = None, return_models: bool = False):
    """Train, then extract a graph.

    Returns ``(graph, attention, trace)``. ``attention`` is the raw matrix the
    graph was read from and ``trace`` belongs to the first training run. With
    ``n_restarts > 1`` the attention is :func:`consensus_attention` over all
    runs. ``return_models=True`` returns ``(graph, attention, traces, models)``
    with one trace and one model per run instead.
    """
    cfg = cfg or DiscoveryConfig()
    values = standardize(data) if cfg.standardize else _as_values(data)
    models, traces = [], []
    for seed in restart_seeds(cfg):
        model, trace = train(values, cfg.replace(seed=seed))
        models.append(model)
        traces.append(trace)
    attention = models[0].attention.copy() if len(models) == 1 else consensus_attention(models)
    graph = extract_graph(attention, cfg)
    if return_models:
        return graph, attention, traces, models
    return graph, attention, traces[0]
