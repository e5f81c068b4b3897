"""Independent oracles shared by the unit and acceptance tests."""
import itertools
from collections import deque

import numpy as np


def lagged(v, lag, max_lag):
    """``v[t - lag]`` for ``t = max_lag .. T-1``."""
    return v[max_lag - lag: len(v) - lag]


def ols_parent_weights(x, graph, j, max_lag):
    """Least-squares weights of node ``j`` on its true lagged parents."""
    parents = graph.parents(j)
    Z = np.column_stack([lagged(x[p.cause], p.lag, max_lag) for p in parents])
    coef, *_ = np.linalg.lstsq(Z, x[j, max_lag:], rcond=None)
    return coef, [p.weight for p in parents]


def xcorr_lag(cause, effect, max_lag):
    """Lag in ``1..max_lag`` maximising |corr(cause[t-lag], effect[t])|."""
    y = effect[max_lag:]
    c = [abs(np.corrcoef(lagged(cause, l, max_lag), y)[0, 1]) for l in range(1, max_lag + 1)]
    return int(np.argmax(c)) + 1


def joint_lag_scan(x, causes, effect, max_lag):
    """Lag tuple minimising the OLS residual of ``effect`` on all ``causes``."""
    y = x[effect, max_lag:]

    def sse(lags):
        Z = np.column_stack([lagged(x[c], l, max_lag) for c, l in zip(causes, lags)])
        r = y - Z @ np.linalg.lstsq(Z, y, rcond=None)[0]
        return float(r @ r)

    return min(itertools.product(range(1, max_lag + 1), repeat=len(causes)), key=sse)


def recovered_lags(x, graph, max_lag):
    """``{(cause, effect): lag}`` found without looking at the true lags.

    Single-parent effects use cross-correlation argmax. Smooth roots are
    strongly autocorrelated, so with several parents the plain argmax is
    confounded; those effects use a joint least-squares scan over lags.
    """
    found = {}
    for j in sorted({e.effect for e in graph.edges}):
        causes = [p.cause for p in graph.parents(j)]
        if len(causes) == 1:
            found[(causes[0], j)] = xcorr_lag(x[causes[0]], x[j], max_lag)
        else:
            for c, l in zip(causes, joint_lag_scan(x, causes, j, max_lag)):
                found[(c, j)] = l
    return found


class MinEditOracle:
    """Breadth-first search over all off-diagonal graphs on ``n`` nodes.

    Moves are: insert an edge, delete an edge, or reverse an edge ``i->j``
    into ``j->i`` when ``j->i`` is absent. The SHD is the length of the
    shortest move sequence.
    """

    def __init__(self, n):
        self.pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
        self.bit = {p: 1 << k for k, p in enumerate(self.pairs)}
        size = 1 << len(self.pairs)
        moves = []
        for state in range(size):
            nb = [state ^ b for b in self.bit.values()]
            for (i, j), b in self.bit.items():
                back = self.bit[(j, i)]
                if state & b and not state & back:
                    nb.append(state ^ b ^ back)
            moves.append(nb)
        self.moves = moves

    def encode(self, adj):
        return sum(b for (i, j), b in self.bit.items() if adj[i, j])

    def distance(self, a, b):
        src, dst = self.encode(a), self.encode(b)
        dist = {src: 0}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            if u == dst:
                return dist[u]
            for v in self.moves[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        raise AssertionError("unreachable")
