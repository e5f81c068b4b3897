"""Core containers: multivariate time series and lagged causal graphs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


@dataclass
class TimeSeriesDataset:
    """``N`` aligned series of length ``T`` stored as an ``(N, T)`` array."""

    values: np.ndarray
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError(f"dataset values must be 2-D (N, T), got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("dataset contains NaN or infinite values")
        if not self.names:
            self.names = [f"x{i}" for i in range(self.n_vars)]
        self.names = [str(s) for s in self.names]
        if len(self.names) != self.n_vars:
            raise ValueError(f"{len(self.names)} names given for {self.n_vars} variables")

    @property
    def n_vars(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]

    def slice_time(self, start: int, stop: int) -> "TimeSeriesDataset":
        return TimeSeriesDataset(self.values[:, start:stop].copy(), list(self.names))


class Edge(NamedTuple):
    cause: int
    effect: int
    lag: int | None = None
    weight: float | None = None


@dataclass
class CausalGraph:
    """Directed graph over ``n`` variables; edges may carry a lag and a weight."""

    n: int
    edges: list = field(default_factory=list)

    def __post_init__(self):
        self.edges = [Edge(*e) for e in self.edges]
        seen = set()
        for e in self.edges:
            if not (0 <= e.cause < self.n and 0 <= e.effect < self.n):
                raise ValueError(f"edge {e.cause}->{e.effect} out of range for n={self.n}")
            if (e.cause, e.effect) in seen:
                raise ValueError(f"duplicate edge {e.cause}->{e.effect}")
            seen.add((e.cause, e.effect))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=np.int64)
        for e in self.edges:
            adj[e.cause, e.effect] = 1
        return adj

    @classmethod
    def from_adjacency(cls, adj) -> "CausalGraph":
        adj = np.asarray(adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        edges = [Edge(int(i), int(j)) for i, j in zip(*np.nonzero(adj))]
        return cls(adj.shape[0], edges)

    def parents(self, j: int) -> list:
        return [e for e in self.edges if e.effect == j]
