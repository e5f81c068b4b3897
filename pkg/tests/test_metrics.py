import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lagcausal.metrics import MetricsReport, evaluate, precision_recall_f1, shd

from oracles import MinEditOracle


def graph(n, *edges):
    a = np.zeros((n, n), dtype=int)
    for i, j in edges:
        a[i, j] = 1
    return a


@pytest.fixture(scope="module")
def oracle3():
    return MinEditOracle(3)


class TestShd:
    def test_identical(self):
        g = graph(3, (0, 1), (1, 2))
        assert shd(g, g) == 0

    def test_missing_edge(self):
        assert shd(graph(2), graph(2, (0, 1))) == 1

    def test_reversal_counts_once(self):
        assert shd(graph(2, (1, 0)), graph(2, (0, 1))) == 1

    def test_both_directions_vs_none(self):
        assert shd(graph(2, (0, 1), (1, 0)), graph(2)) == 2

    def test_extra_reverse_edge(self):
        assert shd(graph(2, (0, 1), (1, 0)), graph(2, (0, 1))) == 1

    def test_exhaustive_three_nodes(self, oracle3):
        graphs = [np.array(bits).reshape(3, 3) * (1 - np.eye(3, dtype=int))
                  for bits in itertools.product([0, 1], repeat=9)
                  if not any(bits[k] for k in (0, 4, 8))]
        assert len(graphs) == 64
        for a in graphs:
            for b in graphs:
                assert shd(a, b) == oracle3.distance(a, b)

    def test_self_loops(self):
        a = graph(2, (0, 0))
        assert shd(a, graph(2)) == 0
        assert shd(a, graph(2), self_loops=True) == 1

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            shd(graph(2), graph(3))

    @given(st.integers(2, 6).flatmap(
        lambda n: st.tuples(*[arrays(np.int64, (n, n), elements=st.integers(0, 1))] * 2)))
    def test_symmetric(self, pair):
        a, b = pair
        assert shd(a, b) == shd(b, a) >= 0


class TestPrecisionRecall:
    def test_perfect(self):
        g = graph(3, (0, 1))
        assert precision_recall_f1(g, g) == (1.0, 1.0, 1.0)

    def test_missing_one_of_two(self):
        p, r, f = precision_recall_f1(graph(4, (0, 1)), graph(4, (0, 1), (2, 3)))
        assert (p, r) == (1.0, 0.5) and f == pytest.approx(2 / 3)

    def test_one_extra(self):
        p, r, f = precision_recall_f1(graph(3, (0, 1), (1, 2)), graph(3, (0, 1)))
        assert (p, r) == (0.5, 1.0) and f == pytest.approx(2 / 3)

    def test_reversal_is_fp_and_fn(self):
        rep = evaluate(graph(2, (1, 0)), graph(2, (0, 1)))
        assert (rep.tp, rep.fp, rep.fn, rep.reversed, rep.shd) == (0, 1, 1, 1, 1)

    def test_empty_prediction_flags_undefined(self):
        rep = evaluate(graph(3), graph(3, (0, 1)))
        assert rep.precision == 0.0 and rep.f1 == 0.0
        assert "precision" in rep.undefined and "f1" in rep.undefined

    def test_empty_truth(self):
        rep = evaluate(graph(3, (0, 1)), graph(3))
        assert rep.avg_shd == 0.0 and "avg_shd" in rep.undefined and "recall" in rep.undefined

    @given(st.integers(2, 5).flatmap(
        lambda n: st.tuples(*[arrays(np.int64, (n, n), elements=st.integers(0, 1))] * 2)))
    def test_f1_properties(self, pair):
        a, b = pair
        np.fill_diagonal(a, 0)
        np.fill_diagonal(b, 0)
        rep = evaluate(a, b)
        assert 0 <= rep.f1 <= 1
        assert (rep.f1 == 0) == (rep.tp == 0)
        assert (rep.f1 == 1) == (np.array_equal(a, b) and b.any())


def test_avg_shd_divides_by_true_edges():
    rep = evaluate(graph(4), graph(4, (0, 1), (1, 2), (2, 3), (0, 3)))
    assert rep.shd == 4 and rep.avg_shd == 1.0 and rep.d == 4


def test_report_text_and_csv():
    rep = evaluate(graph(3, (0, 1)), graph(3, (0, 1), (1, 2)))
    text = rep.to_text()
    assert "shd=1\n" in text and "recall=0.5\n" in text
    header = MetricsReport.csv_header().split(",")
    row = dict(zip(header, rep.csv_row().split(",")))
    assert row["f1"] == repr(rep.f1) and row["n"] == "3"
