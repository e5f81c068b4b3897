"""File formats: dataset CSV, graph edge lists, run configs and manifests.

Formats
-------
Dataset CSV
    UTF-8, ``,``-separated. First row holds variable names, each later row is
    one time step. Floats are written with ``repr`` so values round-trip.
Graph file
    A header ``# n=<N> d=<D>`` followed by one ``cause,effect,lag,weight``
    line per edge; ``-`` marks a missing lag or weight.
Run config
    JSON object with optional sections ``generate``, ``discover``,
    ``fit_report`` and ``sweep`` plus ``format_version``. Unknown keys are
    rejected.
Manifest
    JSON describing a command run: its config, seed, and the SHA-256 of every
    output file.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .datagen import GenConfig
from .discovery import DiscoveryConfig
from .structures import CausalGraph, Edge, TimeSeriesDataset

FORMAT_VERSION = 1


class FormatError(ValueError):
    """A file does not follow the expected format."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- datasets ---------------------------------------------------------------

def format_dataset(ds: TimeSeriesDataset) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ds.names)
    for row in ds.values.T:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def write_dataset(path, ds: TimeSeriesDataset) -> None:
    atomic_write(path, format_dataset(ds))


def parse_dataset(text: str, header: bool = True, source="<string>") -> TimeSeriesDataset:
    rows = [r for r in csv.reader(_io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError(source, "empty dataset")
    names = [c.strip() for c in rows[0]] if header else []
    body = rows[1:] if header else rows
    if not body:
        raise FormatError(source, "no data rows")
    width = len(names) if header else len(body[0])
    values = []
    for lineno, row in enumerate(body, start=2 if header else 1):
        if len(row) != width:
            raise FormatError(source, f"line {lineno}: expected {width} columns, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise FormatError(source, f"line {lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise FormatError(source, f"line {lineno}: non-finite value")
        values.append(vals)
    return TimeSeriesDataset(np.array(values).T, names)


def read_dataset(path, header: bool = True) -> TimeSeriesDataset:
    return parse_dataset(Path(path).read_text(encoding="utf-8"), header, source=path)


# -- graphs -----------------------------------------------------------------

def format_graph(graph: CausalGraph) -> str:
    lines = [f"# n={graph.n} d={graph.n_edges}"]
    for e in sorted(graph.edges, key=lambda e: (e.cause, e.effect)):
        lag = "-" if e.lag is None else str(int(e.lag))
        weight = "-" if e.weight is None else repr(float(e.weight))
        lines.append(f"{e.cause},{e.effect},{lag},{weight}")
    return "\n".join(lines) + "\n"


def write_graph(path, graph: CausalGraph) -> None:
    atomic_write(path, format_graph(graph))


def parse_graph(text: str, source="<string>") -> CausalGraph:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise FormatError(source, "missing '# n=<N> d=<D>' header")
    meta = {}
    for tok in lines[0].lstrip("#").split():
        key, _, val = tok.partition("=")
        meta[key] = val
    try:
        n = int(meta["n"])
        d = int(meta["d"])
    except (KeyError, ValueError):
        raise FormatError(source, f"bad header {lines[0]!r}") from None
    edges = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 4:
            raise FormatError(source, f"line {lineno}: expected cause,effect,lag,weight")
        try:
            cause, effect = int(parts[0]), int(parts[1])
            lag = None if parts[2] == "-" else int(parts[2])
            weight = None if parts[3] == "-" else float(parts[3])
        except ValueError as exc:
            raise FormatError(source, f"line {lineno}: {exc}") from None
        if not (0 <= cause < n and 0 <= effect < n):
            raise FormatError(source, f"line {lineno}: index out of range for n={n}")
        edges.append(Edge(cause, effect, lag, weight))
    if len(edges) != d:
        raise FormatError(source, f"header says d={d} but {len(edges)} edges follow")
    try:
        return CausalGraph(n, edges)
    except ValueError as exc:
        raise FormatError(source, str(exc)) from None


def read_graph(path) -> CausalGraph:
    return parse_graph(Path(path).read_text(encoding="utf-8"), source=path)


# -- attention --------------------------------------------------------------

def format_matrix(m, names=None) -> str:
    m = np.asarray(m, dtype=np.float64)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = names or [f"x{i}" for i in range(m.shape[1])]
    w.writerow(["cause"] + list(names))
    for name, row in zip(names, m):
        w.writerow([name] + [repr(float(v)) for v in row])
    return buf.getvalue()


def parse_matrix(text: str) -> np.ndarray:
    rows = list(csv.reader(_io.StringIO(text)))
    return np.array([[float(c) for c in r[1:]] for r in rows[1:] if r])


# -- configs ----------------------------------------------------------------

FIT_REPORT_KEYS = {"sizes": list, "seeds": list, "train_fraction": float}
_SECTIONS = ("generate", "discover", "fit_report", "sweep")


def _check_keys(section: str, given: dict, allowed, source) -> None:
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise FormatError(source, f"unknown key(s) in [{section}]: {', '.join(unknown)}")


def _build(cls, section: str, values: dict, source):
    names = [f.name for f in dataclasses.fields(cls)]
    _check_keys(section, values, names, source)
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise FormatError(source, f"[{section}] {exc}") from None


class RunConfig:
    """Validated contents of a run config file."""

    def __init__(self, raw: dict | None = None, source="<config>"):
        raw = dict(raw or {})
        if not isinstance(raw, dict):
            raise FormatError(source, "config must be a JSON object")
        version = raw.pop("format_version", FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise FormatError(source, f"unsupported format_version {version!r}")
        _check_keys("top level", raw, _SECTIONS, source)
        self.raw = {k: dict(raw.get(k, {})) for k in _SECTIONS}
        self.source = source
        self.gen = _build(GenConfig, "generate", self.raw["generate"], source)
        self.discovery = _build(DiscoveryConfig, "discover", self.raw["discover"], source)
        fr = self.raw["fit_report"]
        _check_keys("fit_report", fr, FIT_REPORT_KEYS, source)
        self.fit_sizes = [int(s) for s in fr.get("sizes", [40, 160, 640])]
        self.fit_seeds = [int(s) for s in fr.get("seeds", [0, 1, 2, 3, 4])]
        self.train_fraction = float(fr.get("train_fraction", 0.7))
        if not 0 < self.train_fraction < 1:
            raise FormatError(source, "[fit_report] train_fraction must lie in (0, 1)")
        gen_fields = {f.name for f in dataclasses.fields(GenConfig)}
        _check_keys("sweep", self.raw["sweep"], gen_fields, source)
        for key, vals in self.raw["sweep"].items():
            if not isinstance(vals, list) or not vals:
                raise FormatError(source, f"[sweep] {key} must be a non-empty list")
        for cell in self.sweep_cells():
            _build(GenConfig, "sweep", {**self.raw["generate"], **cell}, source)

    def sweep_cells(self) -> list:
        """One dict of overrides per sweep cell (cartesian product)."""
        import itertools

        keys = sorted(self.raw["sweep"])
        combos = itertools.product(*(self.raw["sweep"][k] for k in keys))
        return [dict(zip(keys, c)) for c in combos] if keys else []

    def to_dict(self) -> dict:
        out = {"format_version": FORMAT_VERSION}
        out.update({k: v for k, v in self.raw.items() if v})
        return out


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(path, f"invalid JSON: {exc}") from None
    return RunConfig(raw, source=str(path))


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_manifest(out_dir, command: str, config: dict, seed, files: list) -> None:
    out_dir = Path(out_dir)
    manifest = {
        "format_version": FORMAT_VERSION,
        "command": command,
        "seed": seed,
        "config": config,
        "files": {name: sha256_file(out_dir / name) for name in sorted(files)},
    }
    atomic_write(out_dir / "manifest.json", dump_json(manifest))
