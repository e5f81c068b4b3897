import numpy as np
import pytest

from lagcausal.structures import CausalGraph, Edge, TimeSeriesDataset


def test_dataset_defaults_and_slice():
    ds = TimeSeriesDataset(np.arange(12.0).reshape(3, 4))
    assert (ds.n_vars, ds.n_steps) == (3, 4)
    assert ds.names == ["x0", "x1", "x2"]
    part = ds.slice_time(1, 3)
    np.testing.assert_array_equal(part.values, [[1, 2], [5, 6], [9, 10]])


@pytest.mark.parametrize(
    "values, names",
    [(np.zeros(4), None), (np.array([[0.0, np.nan]]), None), (np.zeros((2, 3)), ["a"])],
)
def test_dataset_validation(values, names):
    with pytest.raises(ValueError):
        TimeSeriesDataset(values, names or [])


def test_graph_adjacency_round_trip():
    g = CausalGraph(3, [(0, 1, 2, 0.5), Edge(2, 1)])
    adj = g.adjacency()
    assert adj.tolist() == [[0, 1, 0], [0, 0, 0], [0, 1, 0]]
    back = CausalGraph.from_adjacency(adj)
    assert {(e.cause, e.effect) for e in back.edges} == {(0, 1), (2, 1)}
    assert [e.cause for e in g.parents(1)] == [0, 2]
    assert g.n_edges == 2


@pytest.mark.parametrize("edges", [[(0, 3)], [(-1, 0)], [(0, 1), (0, 1, 2)]])
def test_graph_validation(edges):
    with pytest.raises(ValueError):
        CausalGraph(3, edges)
