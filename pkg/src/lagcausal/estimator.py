"""Scikit-learn style wrapper around :func:`lagcausal.discovery.discover`."""
from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .constraints import softmax_columns
from .discovery import DiscoveryConfig, discover, rescaled_scores
from .model import forward_all


class CausalDiscovery(BaseEstimator):
    """Learn a lagged causal graph from a multivariate time series.

    Parameters mirror :class:`~lagcausal.discovery.DiscoveryConfig`; ``seed``
    is exposed as ``random_state``. Input arrays have shape
    ``(n_timesteps, n_variables)``, the usual samples-by-features layout.

    Attributes
    ----------
    graph_ : CausalGraph
        Extracted graph; a DAG unless ``self_causation`` is set.
    adjacency_ : ndarray of int, shape (n_variables, n_variables)
        ``adjacency_[i, j] == 1`` means ``i`` causes ``j``.
    attention_ : ndarray, shape (n_variables, n_variables)
        Column-softmax attention the graph was read from.
    scores_ : ndarray, shape (n_variables, n_variables)
        Per-column min-max rescaled attention compared against ``threshold``.
    models_ : list of ConvAttentionModel
        One trained model per restart.
    traces_ : list of TrainingTrace
    mean_, scale_ : ndarray, shape (n_variables,)
        Standardisation applied before training (zeros and ones when
        ``standardize=False``).

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> x = np.cumsum(rng.normal(size=60))
    >>> X = np.column_stack([x, np.r_[0.0, 0.8 * x[:-1]]])
    >>> est = CausalDiscovery(epochs=50, max_lag_hint=2).fit(X)
    >>> est.adjacency_.shape
    (2, 2)
    """

    def __init__(
        self,
        epochs=1000,
        lr=0.01,
        dilation_base=4,
        kernel_width=4,
        max_lag_hint=8,
        n_layers=None,
        alpha_diag=0.0,
        alpha_weight=0.1,
        beta=1.0,
        K=None,
        l1_weight=0.01,
        threshold=0.7,
        self_causation=False,
        activation="relu",
        standardize=False,
        n_restarts=1,
        random_state=0,
    ):
        self.epochs = epochs
        self.lr = lr
        self.dilation_base = dilation_base
        self.kernel_width = kernel_width
        self.max_lag_hint = max_lag_hint
        self.n_layers = n_layers
        self.alpha_diag = alpha_diag
        self.alpha_weight = alpha_weight
        self.beta = beta
        self.K = K
        self.l1_weight = l1_weight
        self.threshold = threshold
        self.self_causation = self_causation
        self.activation = activation
        self.standardize = standardize
        self.n_restarts = n_restarts
        self.random_state = random_state

    def to_config(self) -> DiscoveryConfig:
        """The :class:`DiscoveryConfig` these parameters describe."""
        params = self.get_params()
        params["seed"] = params.pop("random_state")
        names = {f.name for f in dataclasses.fields(DiscoveryConfig)}
        return DiscoveryConfig(**{k: v for k, v in params.items() if k in names})

    def fit(self, X, y=None):
        """Train on ``X`` of shape ``(n_timesteps, n_variables)``; ``y`` is ignored."""
        X = check_array(X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=2)
        cfg = self.to_config()
        values = X.T
        if cfg.standardize:
            self.mean_ = values.mean(axis=1)
            std = values.std(axis=1)
            self.scale_ = np.where(std > 0, std, 1.0)
        else:
            self.mean_ = np.zeros(values.shape[0])
            self.scale_ = np.ones(values.shape[0])
        # standardisation is done here so predict() can invert it
        scaled = (values - self.mean_[:, None]) / self.scale_[:, None]
        graph, attention, traces, models = discover(
            scaled, cfg.replace(standardize=False), return_models=True
        )
        self.graph_ = graph
        self.adjacency_ = graph.adjacency()
        self.attention_ = softmax_columns(attention)
        self.scores_ = rescaled_scores(attention)
        self.models_ = models
        self.traces_ = traces
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """One-step-ahead predictions, shape ``(n_timesteps, n_variables)``.

        Row ``t`` predicts ``X[t]`` from the other variables up to ``t`` and the
        target's own history before ``t``, averaged over restarts. The first
        receptive-field rows only see zero padding.
        """
        check_is_fitted(self, "models_")
        X = check_array(X, dtype=np.float64, ensure_min_features=2)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} variables, the estimator was fitted on {self.n_features_in_}"
            )
        scaled = (X.T - self.mean_[:, None]) / self.scale_[:, None]
        pred = np.mean([forward_all(m, scaled) for m in self.models_], axis=0)
        return (pred * self.scale_[:, None] + self.mean_[:, None]).T

    def score(self, X, y=None):
        """Negative one-step-ahead MSE after the receptive field (higher is better)."""
        X = check_array(X, dtype=np.float64, ensure_min_features=2)
        warmup = self.models_[0].receptive_field
        resid = self.predict(X)[warmup:] - X[warmup:]
        return -float(np.mean(resid * resid))
