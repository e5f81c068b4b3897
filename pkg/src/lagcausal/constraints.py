"""Acyclicity penalty, DAG checks and greedy cycle removal."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numeric import trace_power_series


@dataclass
class PenaltyConfig:
    """Settings for the trace-of-powers cycle penalty.

    Parameters
    ----------
    beta : float
        Per-length discount; loops of length ``k`` are weighted ``beta**k``.
    K : int or None
        Longest loop length considered. ``None`` means the number of variables.
    alpha_weight : float
        Multiplier of the penalty inside the global training loss.
    """

    beta: float = 1.0
    K: int | None = None
    alpha_weight: float = 0.1

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.K is not None and self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.alpha_weight < 0:
            raise ValueError(f"alpha_weight must be >= 0, got {self.alpha_weight}")


def softmax_columns(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    e = np.exp(a - a.max(axis=0, keepdims=True))
    return e / e.sum(axis=0, keepdims=True)


def softmax_columns_backward(s: np.ndarray, grad_s: np.ndarray) -> np.ndarray:
    # Jacobian-vector product of column softmax, given s = softmax_columns(a)
    return s * (grad_s - np.sum(s * grad_s, axis=0, keepdims=True))


def cycle_penalty(weights, cfg: PenaltyConfig | None = None, ignore_diagonal: bool = False):
    """Trace-of-powers penalty on a nonnegative weighted adjacency matrix.

    Returns ``(value, grad)``. With ``ignore_diagonal`` the self-loops are
    zeroed first and receive zero gradient.
    """
    cfg = cfg or PenaltyConfig()
    w = np.array(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {w.shape}")
    if ignore_diagonal:
        np.fill_diagonal(w, 0.0)
    value, grad = trace_power_series(w, cfg.beta, cfg.K or w.shape[0])
    if ignore_diagonal:
        np.fill_diagonal(grad, 0.0)
    return value, grad


def acyclicity_penalty(attention, cfg: PenaltyConfig | None = None, self_causation: bool = False):
    """Penalty on raw attention, taken through column softmax and squaring.

    The penalised matrix is ``softmax_columns(attention) ** 2``; its diagonal is
    dropped when self-causation is allowed. Returns the value and the gradient
    with respect to the raw attention.
    """
    attention = np.asarray(attention, dtype=np.float64)
    if attention.ndim != 2 or attention.shape[0] != attention.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {attention.shape}")
    s = softmax_columns(attention)
    value, grad_w = cycle_penalty(s * s, cfg, ignore_diagonal=self_causation)
    return value, softmax_columns_backward(s, 2.0 * s * grad_w)


def _find_cycle(adj: np.ndarray):
    """Return the edges of one directed cycle as a list of (i, j), or None.

    Vertices and successors are visited in index order so the result is
    deterministic.
    """
    n = adj.shape[0]
    color = [0] * n  # 0 new, 1 on stack, 2 done
    for root in range(n):
        if color[root]:
            continue
        path = [root]
        iters = [iter(np.flatnonzero(adj[root]).tolist())]
        color[root] = 1
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                color[path.pop()] = 2
                iters.pop()
                continue
            if color[nxt] == 1:
                cyc = path[path.index(nxt):] + [nxt]
                return list(zip(cyc[:-1], cyc[1:]))
            if color[nxt] == 0:
                color[nxt] = 1
                path.append(nxt)
                iters.append(iter(np.flatnonzero(adj[nxt]).tolist()))
    return None


def _binary(adj, ignore_diagonal: bool) -> np.ndarray:
    a = (np.asarray(adj) != 0).astype(np.int64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    if ignore_diagonal:
        np.fill_diagonal(a, 0)
    return a


def is_dag(adj, ignore_diagonal: bool = False) -> bool:
    """True when the binary adjacency matrix has no directed cycle."""
    return _find_cycle(_binary(adj, ignore_diagonal)) is None


def break_cycles(weights, adj, keep_diagonal: bool = False) -> np.ndarray:
    """Remove edges until the graph is acyclic.

    Repeatedly finds a cycle and drops its weakest edge according to
    ``weights``; equal weights are resolved by taking the lexicographically
    smallest ``(cause, effect)`` pair. Self-loops survive untouched when
    ``keep_diagonal`` is set and are removed otherwise.
    """
    weights = np.asarray(weights, dtype=np.float64)
    out = _binary(adj, ignore_diagonal=True)
    if weights.shape != out.shape:
        raise ValueError(f"weights shape {weights.shape} does not match adjacency {out.shape}")
    while (cycle := _find_cycle(out)) is not None:
        i, j = min(cycle, key=lambda e: (weights[e], e))
        out[i, j] = 0
    if keep_diagonal:
        diag = np.diag(_binary(adj, ignore_diagonal=False))
        out[np.diag_indices_from(out)] = diag
    return out
