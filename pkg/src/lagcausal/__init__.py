"""Temporal causal discovery with attention-gated dilated convolutions."""
from .constraints import PenaltyConfig, acyclicity_penalty, break_cycles, is_dag
from .datagen import GenConfig, generate_dataset, natural_cubic_spline, random_dag
from .discovery import (
    DiscoveryConfig,
    TrainingDivergedError,
    TrainingTrace,
    discover,
    extract_graph,
    global_loss,
    train,
)
from .estimator import CausalDiscovery
from .metrics import MetricsReport, evaluate, precision_recall_f1, shd
from .model import ConfigurationError, ConvAttentionModel, receptive_field
from .numeric import AdamState, adam_step, causal_dilated_conv, trace_power_series
from .structures import CausalGraph, Edge, TimeSeriesDataset

__version__ = "0.1.0"

__all__ = [
    "AdamState", "CausalDiscovery", "CausalGraph", "ConfigurationError", "ConvAttentionModel",
    "DiscoveryConfig", "Edge", "GenConfig", "MetricsReport", "PenaltyConfig", "TimeSeriesDataset",
    "TrainingDivergedError", "TrainingTrace", "acyclicity_penalty", "adam_step", "break_cycles",
    "causal_dilated_conv", "discover", "evaluate", "extract_graph", "generate_dataset",
    "global_loss", "is_dag", "natural_cubic_spline", "precision_recall_f1", "random_dag",
    "receptive_field", "shd", "trace_power_series", "train",
]
