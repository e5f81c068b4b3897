"""Attention-gated depthwise dilated convolution networks, one per target.

Network ``k`` predicts variable ``k`` from every variable. Each input channel
``i`` is scaled by the column-softmax attention weight ``softmax(A[:, k])[i]``
(the target's own channel is additionally delayed one step), filtered by its
own stack of causal dilated convolutions, and the ``N`` filtered channels are
mixed by a width-1 aggregation kernel that all networks share.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .constraints import softmax_columns
from .numeric import _shift_right, causal_dilated_conv, causal_dilated_conv_backward

CHECKPOINT_FORMAT = "lagcausal-checkpoint"
CHECKPOINT_VERSION = 1

ACTIVATIONS = ("relu", "leaky_relu", "identity")
LEAKY_SLOPE = 0.1


class ConfigurationError(ValueError):
    """Raised when settings and data are incompatible (e.g. series too short)."""


def receptive_field(n_layers: int, kernel_width: int, dilation_base: int) -> int:
    """Number of past samples (including the current one) one output can see."""
    if n_layers < 1 or kernel_width < 1 or dilation_base < 1:
        raise ValueError("n_layers, kernel_width and dilation_base must all be >= 1")
    return 1 + (kernel_width - 1) * sum(dilation_base**l for l in range(n_layers))


def layers_for_lag(max_lag: int, kernel_width: int, dilation_base: int, max_layers: int = 32) -> int:
    """Smallest depth whose receptive field reaches back ``max_lag`` steps.

    A receptive field of ``RF`` samples spans lags ``0 .. RF-1``, so the
    rule is ``RF >= max_lag + 1``.
    """
    if kernel_width < 2:
        raise ValueError("kernel_width must be >= 2 to grow the receptive field")
    for n_layers in range(1, max_layers + 1):
        if receptive_field(n_layers, kernel_width, dilation_base) >= max_lag + 1:
            return n_layers
    raise ValueError(f"no depth up to {max_layers} reaches lag {max_lag}")


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "leaky_relu":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    return z


def _activate_grad(z, kind):
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "leaky_relu":
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    return np.ones_like(z)


@dataclass
class ConvAttentionModel:
    """Parameters of the ``N`` per-target networks.

    Attributes
    ----------
    attention : ndarray, shape (N, N)
        Raw attention; ``attention[i, k]`` scores ``i`` as a cause of ``k``.
    kernels : ndarray, shape (N, N, L, k_w)
        ``kernels[k, i, l]`` is layer ``l`` of channel ``i`` in network ``k``.
    shared_weight : ndarray, shape (N,)
        Aggregation weights shared by every network.
    shared_bias : ndarray, shape ()
    """

    attention: np.ndarray
    kernels: np.ndarray
    shared_weight: np.ndarray
    shared_bias: np.ndarray
    dilation_base: int = 4
    alpha_diag: float = 0.0
    activation: str = "relu"

    def __post_init__(self):
        self.attention = np.asarray(self.attention, dtype=np.float64)
        self.kernels = np.asarray(self.kernels, dtype=np.float64)
        self.shared_weight = np.asarray(self.shared_weight, dtype=np.float64)
        self.shared_bias = np.asarray(self.shared_bias, dtype=np.float64).reshape(())
        n = self.attention.shape[0]
        if self.attention.shape != (n, n):
            raise ValueError(f"attention must be square, got {self.attention.shape}")
        if self.kernels.ndim != 4 or self.kernels.shape[:2] != (n, n):
            raise ValueError(f"kernels must have shape (N, N, L, k_w), got {self.kernels.shape}")
        if self.shared_weight.shape != (n,):
            raise ValueError(f"shared_weight must have shape ({n},), got {self.shared_weight.shape}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")

    @property
    def n_vars(self) -> int:
        return self.attention.shape[0]

    @property
    def n_layers(self) -> int:
        return self.kernels.shape[2]

    @property
    def kernel_width(self) -> int:
        return self.kernels.shape[3]

    @property
    def receptive_field(self) -> int:
        return receptive_field(self.n_layers, self.kernel_width, self.dilation_base)

    @classmethod
    def initialize(
        cls,
        n_vars: int,
        n_layers: int,
        kernel_width: int = 4,
        dilation_base: int = 4,
        alpha_diag: float = 0.0,
        activation: str = "relu",
        random_state=None,
        kernel_scale: float = 0.1,
        identity_tap: bool = True,
    ) -> "ConvAttentionModel":
        """Fresh model: off-diagonal attention 1, diagonal ``alpha_diag``.

        Each convolution kernel starts as a unit tap on the current sample
        plus small Gaussian noise, so a new stack roughly passes its channel
        through.
        """
        rng = np.random.default_rng(random_state)
        attention = np.ones((n_vars, n_vars))
        np.fill_diagonal(attention, alpha_diag)
        kernels = rng.normal(0.0, kernel_scale, size=(n_vars, n_vars, n_layers, kernel_width))
        if identity_tap:
            kernels[..., -1] += 1.0
        shared_weight = rng.normal(0.0, 0.1, size=n_vars) + 1.0 / n_vars
        return cls(attention, kernels, shared_weight, np.zeros(()), dilation_base, alpha_diag, activation)

    def params(self) -> dict:
        """Trainable arrays by name; the optimizer updates them in place."""
        return {
            "attention": self.attention,
            "kernels": self.kernels,
            "shared_weight": self.shared_weight,
            "shared_bias": self.shared_bias,
        }

    def parameter_count(self) -> int:
        return sum(p.size for p in self.params().values())

    def copy(self) -> "ConvAttentionModel":
        return ConvAttentionModel(
            self.attention.copy(), self.kernels.copy(), self.shared_weight.copy(),
            self.shared_bias.copy(), self.dilation_base, self.alpha_diag, self.activation,
        )

    def attention_scores(self) -> np.ndarray:
        return softmax_columns(self.attention)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "format_version": CHECKPOINT_VERSION,
            "n_vars": self.n_vars,
            "n_layers": self.n_layers,
            "kernel_width": self.kernel_width,
            "dilation_base": self.dilation_base,
            "alpha_diag": self.alpha_diag,
            "activation": self.activation,
            "attention": self.attention.tolist(),
            "kernels": self.kernels.tolist(),
            "shared_weight": self.shared_weight.tolist(),
            "shared_bias": float(self.shared_bias),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConvAttentionModel":
        if d.get("format") != CHECKPOINT_FORMAT:
            raise ValueError("not a model checkpoint")
        if d.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('format_version')!r}")
        n, L, k_w = d["n_vars"], d["n_layers"], d["kernel_width"]
        model = cls(
            np.array(d["attention"], dtype=np.float64).reshape(n, n),
            np.array(d["kernels"], dtype=np.float64).reshape(n, n, L, k_w),
            np.array(d["shared_weight"], dtype=np.float64),
            np.array(d["shared_bias"], dtype=np.float64),
            int(d["dilation_base"]),
            float(d["alpha_diag"]),
            d["activation"],
        )
        return model

    def to_json(self) -> str:
        # json writes floats with repr(), which round-trips float64 exactly
        return json.dumps(self.to_dict(), indent=1, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ConvAttentionModel":
        return cls.from_dict(json.loads(text))


def _as_values(data) -> np.ndarray:
    values = getattr(data, "values", data)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"expected an (N, T) array, got shape {values.shape}")
    return values


def channel_inputs(values: np.ndarray) -> np.ndarray:
    """Ungated inputs of every network, shape ``(N_target, N_channel, T)``.

    Network ``k`` sees every series as is, except its own, which is delayed by
    one step so the current target value is never an input.
    """
    n, _ = values.shape
    xin = np.broadcast_to(values, (n,) + values.shape).copy()
    idx = np.arange(n)
    xin[idx, idx] = _shift_right(values, 1)
    return xin


def attention_gate(data, k: int, attention) -> np.ndarray:
    """Gated input channels of network ``k``, shape ``(N, T)``."""
    values = _as_values(data)
    scores = softmax_columns(attention)[:, k]
    xin = values.copy()
    xin[k] = _shift_right(values[k], 1)
    return scores[:, None] * xin


def _check_length(model: ConvAttentionModel, values: np.ndarray) -> None:
    if values.shape[0] != model.n_vars:
        raise ValueError(f"model has {model.n_vars} variables, data has {values.shape[0]}")
    rf = model.receptive_field
    if values.shape[1] < rf:
        raise ConfigurationError(
            f"series length T={values.shape[1]} is shorter than the receptive field RF={rf}"
        )


def forward_all(model: ConvAttentionModel, data, return_cache: bool = False):
    """Predictions of all ``N`` networks at once, shape ``(N, T)``."""
    values = _as_values(data)
    _check_length(model, values)
    scores = softmax_columns(model.attention)
    xin = channel_inputs(values)
    h = scores.T[:, :, None] * xin
    pre_acts = []
    hidden = [h]
    L = model.n_layers
    for l in range(L):
        z = causal_dilated_conv(h, model.kernels[:, :, l, :], model.dilation_base**l)
        if l < L - 1:
            pre_acts.append(z)
            h = _activate(z, model.activation)
        else:
            h = z
        hidden.append(h)
    pred = np.einsum("kit,i->kt", h, model.shared_weight) + model.shared_bias
    if return_cache:
        return pred, {"scores": scores, "xin": xin, "hidden": hidden, "pre_acts": pre_acts}
    return pred


def forward(model: ConvAttentionModel, data, k: int) -> np.ndarray:
    """Prediction of variable ``k`` by network ``k``."""
    values = _as_values(data)
    _check_length(model, values)
    h = attention_gate(values, k, model.attention)
    L = model.n_layers
    for l in range(L):
        h = causal_dilated_conv(h, model.kernels[k, :, l, :], model.dilation_base**l)
        if l < L - 1:
            h = _activate(h, model.activation)
    return model.shared_weight @ h + model.shared_bias


def backward_all(model: ConvAttentionModel, cache: dict, grad_pred: np.ndarray) -> dict:
    """Gradients of all parameters given ``dLoss/dpred`` of shape ``(N, T)``.

    The attention entry holds the gradient with respect to the column-softmax
    scores; callers chain it through the softmax together with any other
    score-dependent terms.
    """
    hidden = cache["hidden"]
    L = model.n_layers
    grads = {
        "shared_weight": np.einsum("kt,kit->i", grad_pred, hidden[-1]),
        "shared_bias": np.asarray(grad_pred.sum()),
    }
    g = grad_pred[:, None, :] * model.shared_weight[None, :, None]
    kernel_grad = np.zeros_like(model.kernels)
    for l in reversed(range(L)):
        if l < L - 1:
            g = g * _activate_grad(cache["pre_acts"][l], model.activation)
        g, kernel_grad[:, :, l, :] = causal_dilated_conv_backward(
            g, hidden[l], model.kernels[:, :, l, :], model.dilation_base**l
        )
    grads["kernels"] = kernel_grad
    # g is now dLoss/d(gated input); gated[k, i] = scores[i, k] * xin[k, i]
    grads["scores"] = np.einsum("kit,kit->ik", g, cache["xin"])
    return grads


def local_loss(pred, actual, warmup: int = 0) -> float:
    """Mean squared error ignoring the first ``warmup`` samples."""
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {actual.shape}")
    if warmup >= pred.shape[-1]:
        raise ConfigurationError(f"warmup {warmup} leaves no samples out of {pred.shape[-1]}")
    r = pred[..., warmup:] - actual[..., warmup:]
    return float(np.mean(r * r))
