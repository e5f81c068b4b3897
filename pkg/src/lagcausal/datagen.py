"""Synthetic multivariate time series with a known lagged causal DAG.

Generation runs in three steps: draw a random DAG with ``d`` edges and a lag
and weight per edge; give every root variable a smooth series sampled from a
natural cubic spline through random control points; then compute the other
variables in topological order as lagged weighted sums of their parents plus
Gaussian noise.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .structures import CausalGraph, Edge, TimeSeriesDataset


@dataclass
class GenConfig:
    n: int = 4
    d: int = 1
    T: int = 40
    max_lag: int = 2
    noise_sigma: float = 0.01
    weight_range: tuple = (0.5, 1.5)
    control_points: int | None = None
    seed: int = 0

    def __post_init__(self):
        self.weight_range = tuple(float(w) for w in self.weight_range)
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.d <= self.n * (self.n - 1) // 2:
            raise ValueError(f"d={self.d} edges impossible in a DAG on n={self.n} nodes")
        if self.max_lag < 1:
            raise ValueError(f"max_lag must be >= 1, got {self.max_lag}")
        if self.T <= self.max_lag:
            raise ValueError(f"T={self.T} must exceed max_lag={self.max_lag}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        lo, hi = self.weight_range
        if len(self.weight_range) != 2 or not 0 <= lo <= hi:
            raise ValueError(f"weight_range must be (lo, hi) with 0 <= lo <= hi, got {self.weight_range}")
        if self.control_points is not None and self.control_points < 2:
            raise ValueError(f"control_points must be >= 2, got {self.control_points}")

    @property
    def n_control_points(self) -> int:
        if self.control_points is not None:
            return self.control_points
        return max(4, self.T // 10)

    def replace(self, **changes) -> "GenConfig":
        return dataclasses.replace(self, **changes)


def random_dag(n: int, d: int, max_lag: int, seed=None, weight_range=(0.5, 1.5)) -> CausalGraph:
    """Random DAG with exactly ``d`` edges over a random topological order.

    Each edge gets a lag uniform in ``[1, max_lag]`` and a weight whose
    magnitude is uniform in ``weight_range`` with a random sign.
    """
    if not 0 <= d <= n * (n - 1) // 2:
        raise ValueError(f"d={d} edges impossible in a DAG on n={n} nodes")
    if max_lag < 1:
        raise ValueError(f"max_lag must be >= 1, got {max_lag}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    pairs = [(int(order[a]), int(order[b])) for a in range(n) for b in range(a + 1, n)]
    chosen = sorted(rng.choice(len(pairs), size=d, replace=False).tolist())
    edges = []
    for idx in chosen:
        lag = int(rng.integers(1, max_lag + 1))
        weight = float(rng.uniform(*weight_range) * rng.choice((-1.0, 1.0)))
        edges.append(Edge(*pairs[idx], lag, weight))
    edges.sort(key=lambda e: (e.cause, e.effect))
    return CausalGraph(n, edges)


def _solve_tridiagonal(sub, diag, sup, rhs):
    # Thomas algorithm; sub[0] and sup[-1] are unused
    n = len(diag)
    c = np.zeros(n)
    r = np.zeros(n)
    c[0] = sup[0] / diag[0] if n > 1 else 0.0
    r[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - sub[i] * c[i - 1]
        if i < n - 1:
            c[i] = sup[i] / m
        r[i] = (rhs[i] - sub[i] * r[i - 1]) / m
    x = np.zeros(n)
    x[-1] = r[-1]
    for i in range(n - 2, -1, -1):
        x[i] = r[i] - c[i] * x[i + 1]
    return x


class NaturalCubicSpline:
    """Interpolating cubic spline with zero curvature at both ends.

    The knot second derivatives ``M`` come from the three-moment equations
    ``h[i-1] M[i-1] + 2 (h[i-1] + h[i]) M[i] + h[i] M[i+1] = 6 (s[i] - s[i-1])``
    with ``s`` the divided differences and ``M[0] = M[-1] = 0``.
    """

    def __init__(self, knots, values):
        x = np.asarray(knots, dtype=np.float64)
        y = np.asarray(values, dtype=np.float64)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("knots and values must be 1-D arrays of equal length")
        if len(x) < 2:
            raise ValueError("at least two knots are required")
        h = np.diff(x)
        if np.any(h <= 0):
            raise ValueError("knots must be strictly increasing (no duplicates)")
        self.x, self.y, self.h = x, y, h
        m = np.zeros(len(x))
        if len(x) > 2:
            slopes = np.diff(y) / h
            rhs = 6.0 * np.diff(slopes)
            sub = np.concatenate(([0.0], h[1:-1]))
            sup = np.concatenate((h[1:-1], [0.0]))
            m[1:-1] = _solve_tridiagonal(sub, 2.0 * (h[:-1] + h[1:]), sup, rhs)
        self.moments = m

    def __call__(self, t, nu: int = 0):
        """Evaluate the spline (or derivative ``nu`` in 0..3) at ``t``.

        Points outside the knot range use the end segments' polynomials.
        """
        t = np.asarray(t, dtype=np.float64)
        i = np.clip(np.searchsorted(self.x, t, side="right") - 1, 0, len(self.h) - 1)
        h = self.h[i]
        m0, m1 = self.moments[i], self.moments[i + 1]
        y0, y1 = self.y[i], self.y[i + 1]
        a = self.x[i + 1] - t
        b = t - self.x[i]
        if nu == 0:
            return (m0 * a**3 + m1 * b**3) / (6 * h) + (y0 / h - m0 * h / 6) * a + (y1 / h - m1 * h / 6) * b
        if nu == 1:
            return (-m0 * a**2 + m1 * b**2) / (2 * h) - (y0 / h - m0 * h / 6) + (y1 / h - m1 * h / 6)
        if nu == 2:
            return (m0 * a + m1 * b) / h
        if nu == 3:
            return (m1 - m0) / h + 0 * t
        raise ValueError(f"derivative order must be 0..3, got {nu}")


def natural_cubic_spline(knots, values) -> NaturalCubicSpline:
    return NaturalCubicSpline(knots, values)


def generate_root_series(T: int, control_point_count: int, seed=None) -> np.ndarray:
    """Smooth series of length ``T`` through uniform random control values.

    Control points sit at evenly spaced knots over ``[0, T-1]`` with values
    drawn from ``U(-1, 1)``; the spline is sampled at ``0..T-1``.
    """
    if control_point_count < 2:
        raise ValueError(f"control_point_count must be >= 2, got {control_point_count}")
    if T < 2:
        raise ValueError(f"T must be >= 2, got {T}")
    rng = np.random.default_rng(seed)
    knots = np.linspace(0.0, T - 1, control_point_count)
    values = rng.uniform(-1.0, 1.0, size=control_point_count)
    return NaturalCubicSpline(knots, values)(np.arange(T, dtype=np.float64))


def topological_order(graph: CausalGraph) -> list:
    indeg = [0] * graph.n
    children = [[] for _ in range(graph.n)]
    for e in graph.edges:
        indeg[e.effect] += 1
        children[e.cause].append(e.effect)
    ready = [i for i in range(graph.n) if indeg[i] == 0]
    order = []
    while ready:
        i = ready.pop(0)
        order.append(i)
        for j in sorted(children[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
    if len(order) != graph.n:
        raise ValueError("graph has a cycle")
    return order


def propagate(graph: CausalGraph, cfg: GenConfig, seed=None, return_full: bool = False):
    """Simulate the linear lagged structural equations over ``graph``.

    ``max_lag`` burn-in samples are generated first and dropped, so the
    returned dataset has ``cfg.T`` samples. With ``return_full`` the burn-in
    is kept (shape ``(n, T + max_lag)``) which lets callers check the
    generating equation at every retained step.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    total = cfg.T + cfg.max_lag
    x = np.zeros((graph.n, total))
    has_parent = {e.effect for e in graph.edges}
    for j in topological_order(graph):
        if j not in has_parent:
            x[j] = generate_root_series(total, cfg.n_control_points, rng)
            continue
        acc = np.zeros(total)
        for e in graph.parents(j):
            acc[e.lag:] += e.weight * x[e.cause, : total - e.lag]
        if cfg.noise_sigma > 0:
            acc += rng.normal(0.0, cfg.noise_sigma, size=total)
        x[j] = acc
    if return_full:
        return x
    names = [f"x{i}" for i in range(graph.n)]
    return TimeSeriesDataset(x[:, cfg.max_lag:].copy(), names)


def generate_dataset(cfg: GenConfig):
    """Draw a ground-truth graph and simulate data; returns ``(dataset, graph)``."""
    rng = np.random.default_rng(cfg.seed)
    graph_seed, data_seed = rng.integers(0, 2**63 - 1, size=2)
    graph = random_dag(cfg.n, cfg.d, cfg.max_lag, graph_seed, cfg.weight_range)
    return propagate(graph, cfg, seed=data_seed), graph
