import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lagcausal.io import (
    FormatError,
    RunConfig,
    atomic_write,
    format_dataset,
    format_graph,
    format_matrix,
    load_config,
    parse_dataset,
    parse_graph,
    parse_matrix,
    read_dataset,
    write_manifest,
)
from lagcausal.structures import CausalGraph, Edge, TimeSeriesDataset

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 6)), elements=finite))
def test_dataset_round_trip_bytes(values):
    ds = TimeSeriesDataset(values)
    text = format_dataset(ds)
    back = parse_dataset(text)
    assert np.array_equal(back.values, values)
    assert format_dataset(back) == text


def test_dataset_without_header():
    ds = parse_dataset("1,2\n3,4\n5,6\n", header=False)
    np.testing.assert_array_equal(ds.values, [[1, 3, 5], [2, 4, 6]])
    assert ds.names == ["x0", "x1"]


@pytest.mark.parametrize(
    "text, match",
    [("", "empty"), ("a,b\n", "no data"), ("a,b\n1,2\n3\n", "line 3"),
     ("a,b\n1,x\n", "line 2"), ("a,b\n1,nan\n", "non-finite")],
)
def test_dataset_errors_name_location(text, match):
    with pytest.raises(FormatError, match=match):
        parse_dataset(text, source="data.csv")


def test_read_dataset_reports_path(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a\nq\n")
    with pytest.raises(FormatError, match="bad.csv"):
        read_dataset(p)


edges = st.integers(2, 6).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1),
                       st.one_of(st.none(), st.integers(1, 9)),
                       st.one_of(st.none(), finite)),
             unique_by=lambda e: (e[0], e[1]), max_size=8)))


@given(edges)
def test_graph_round_trip(args):
    n, es = args
    g = CausalGraph(n, es)
    text = format_graph(g)
    back = parse_graph(text)
    assert sorted(back.edges) == sorted(Edge(*e) for e in es)
    assert format_graph(back) == text


@pytest.mark.parametrize(
    "text, match",
    [("0,1,-,-\n", "header"), ("# n=2 d=1\n0,5,-,-\n", "out of range"),
     ("# n=2 d=2\n0,1,-,-\n", "d=2"), ("# n=2 d=1\n0,1\n", "expected"),
     ("# n=x d=1\n", "bad header"), ("# n=2 d=2\n0,1,-,-\n0,1,2,-\n", "duplicate")],
)
def test_graph_errors(text, match):
    with pytest.raises(FormatError, match=match):
        parse_graph(text)


def test_matrix_round_trip(rng):
    m = rng.normal(size=(3, 3))
    np.testing.assert_array_equal(parse_matrix(format_matrix(m, ["a", "b", "c"])), m)


def test_atomic_write_leaves_no_partial_file(tmp_path, monkeypatch):
    target = tmp_path / "out.txt"
    target.write_text("old")

    def boom(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr("lagcausal.io.os.replace", boom)
    with pytest.raises(OSError):
        atomic_write(target, "new")
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.discovery.epochs == 1000 and cfg.gen.T == 40
        assert cfg.fit_sizes == [40, 160, 640] and cfg.train_fraction == 0.7
        assert cfg.sweep_cells() == []

    def test_sections_parsed(self):
        cfg = RunConfig({"generate": {"n": 5}, "discover": {"epochs": 7},
                         "fit_report": {"sizes": [50]}, "sweep": {"T": [40, 80], "d": [1, 2]}})
        assert cfg.gen.n == 5 and cfg.discovery.epochs == 7 and cfg.fit_sizes == [50]
        assert cfg.sweep_cells() == [{"T": 40, "d": 1}, {"T": 40, "d": 2},
                                     {"T": 80, "d": 1}, {"T": 80, "d": 2}]

    @pytest.mark.parametrize(
        "raw, match",
        [({"bogus": {}}, "bogus"), ({"discover": {"epoch": 3}}, "epoch"),
         ({"generate": {"T": 2, "max_lag": 2}}, "generate"), ({"discover": {"epochs": 0}}, "epochs"),
         ({"sweep": {"T": 40}}, "non-empty list"), ({"sweep": {"T": [1]}}, "sweep"),
         ({"format_version": 9}, "format_version"), ({"fit_report": {"train_fraction": 1.5}}, "fraction")],
    )
    def test_rejects_invalid(self, raw, match):
        with pytest.raises(FormatError, match=match):
            RunConfig(raw)

    def test_load_config_errors(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{nope")
        with pytest.raises(FormatError, match="invalid JSON"):
            load_config(p)

    def test_round_trip(self, tmp_path):
        raw = {"format_version": 1, "generate": {"n": 3}, "sweep": {"seed": [1, 2]}}
        p = tmp_path / "c.json"
        p.write_text(json.dumps(raw))
        assert load_config(p).to_dict() == raw


def test_manifest_hashes(tmp_path):
    (tmp_path / "a.txt").write_text("hello")
    write_manifest(tmp_path, "test", {"k": 1}, 3, ["a.txt"])
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["files"]["a.txt"] == "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
    assert m["format_version"] == 1 and m["seed"] == 3
