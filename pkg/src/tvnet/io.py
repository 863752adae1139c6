"""Data ingestion and result serialization.

Input files are CSV/TSV with observations as rows. Outputs are line-
delimited edge records, dense tab-separated parameter-path tables, metric
and BIC tables, and a JSON manifest carrying enough context to reproduce
the run. Floats are written with 17 significant digits so a round trip
through text is exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import InvalidArgumentError, OutputError, ParseError, ValidationError
from .graphs import GraphSequence, MetricsResult
from .ising import Dataset, NodeParamPath

FORMAT_VERSION = 1

VALUE_MAPS = ("native", "zero_one")
MISSING_POLICIES = ("fill_minus_one", "drop_row", "error")


@dataclass
class IngestionConfig:
    """How to read a raw observation file into a dataset."""

    path: str
    fmt: str = "csv"
    has_header: bool = False
    time_column: str | None = None
    value_map: str = "native"
    missing_tokens: tuple = ("NA", "")
    missing_policy: str = "fill_minus_one"

    def __post_init__(self):
        if self.fmt not in ("csv", "tsv"):
            raise InvalidArgumentError("format must be 'csv' or 'tsv'")
        if self.value_map not in VALUE_MAPS:
            raise InvalidArgumentError(f"value_map must be one of {VALUE_MAPS}")
        if self.missing_policy not in MISSING_POLICIES:
            raise InvalidArgumentError(f"missing_policy must be one of {MISSING_POLICIES}")
        if self.time_column is not None and not self.has_header:
            raise InvalidArgumentError("a time column can only be named when the file has a header")


def _map_value(token: str, value_map: str, line: int, col: int) -> float:
    try:
        val = float(token)
    except ValueError:
        raise ParseError(f"unreadable value {token!r}", row=line, column=col) from None
    if value_map == "native":
        if val in (-1.0, 1.0):
            return val
        raise ParseError(f"value {token!r} is not +/-1", row=line, column=col)
    if val == 0.0:
        return -1.0
    if val == 1.0:
        return 1.0
    raise ParseError(f"value {token!r} is not 0/1", row=line, column=col)


def _rescale_times(raw: np.ndarray) -> np.ndarray:
    """Affine map of raw stamps onto (0, 1], mirroring the default grid."""
    uniq = np.unique(raw)
    m = uniq.size
    if m == 1:
        return np.ones_like(raw)
    lo, hi = raw.min(), raw.max()
    return (raw - lo) / (hi - lo) * (1.0 - 1.0 / m) + 1.0 / m


def ingest(cfg: IngestionConfig) -> Dataset:
    """Read a CSV/TSV of spin observations into a validated dataset.

    Missing cells are handled per the configured policy (the default fills
    them with -1). Without a time column the rows get the equally spaced
    grid {1/n, ..., 1}; with one, stamps are affinely rescaled onto (0, 1]
    and duplicate stamps become replicates.
    """
    delim = "," if cfg.fmt == "csv" else "\t"
    path = Path(cfg.path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc}") from exc

    lines = [ln for ln in text.splitlines()]
    rows = []
    header = None
    start = 0
    if cfg.has_header:
        if not lines:
            raise ParseError("file is empty, expected a header", row=1)
        header = [c.strip() for c in lines[0].split(delim)]
        start = 1
    time_idx = None
    if cfg.time_column is not None:
        if cfg.time_column not in header:
            raise ParseError(f"time column {cfg.time_column!r} not in header {header}")
        time_idx = header.index(cfg.time_column)

    raw_times = []
    for line_no in range(start, len(lines)):
        line = lines[line_no]
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(delim)]
        values = []
        t_val = None
        drop = False
        for col, token in enumerate(cells):
            if time_idx is not None and col == time_idx:
                try:
                    t_val = float(token)
                except ValueError:
                    raise ParseError(f"unreadable time stamp {token!r}", row=line_no + 1, column=col + 1) from None
                continue
            if token in cfg.missing_tokens:
                if cfg.missing_policy == "fill_minus_one":
                    values.append(-1.0)
                    continue
                if cfg.missing_policy == "drop_row":
                    drop = True
                    break
                raise ParseError("missing value", row=line_no + 1, column=col + 1)
            values.append(_map_value(token, cfg.value_map, line_no + 1, col + 1))
        if drop:
            continue
        rows.append(values)
        raw_times.append(t_val)

    if not rows:
        raise ValidationError("no usable observation rows in the input")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError(f"rows have inconsistent widths {sorted(widths)}")
    x = np.asarray(rows, dtype=np.float64)

    if time_idx is None:
        return Dataset.from_matrix(x)

    raw = np.asarray(raw_times, dtype=np.float64)
    if np.any(np.diff(raw) < 0):
        raise ValidationError("explicit time stamps must be non-decreasing")
    scaled = _rescale_times(raw)
    uniq, inverse = np.unique(scaled, return_inverse=True)
    blocks = tuple(x[inverse == i] for i in range(uniq.size))
    return Dataset(times=uniq, observations=blocks)


def fmt17(x: float) -> str:
    """Format with 17 significant digits (exact float round trip)."""
    return format(float(x), ".17g")


@dataclass
class RunManifest:
    """Provenance for one CLI run: enough to reproduce it exactly."""

    command: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    threads: int | None = None
    input_digest: str | None = None
    argv: list = field(default_factory=list)
    version: str = __version__
    format_version: int = FORMAT_VERSION
    created_utc: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def input_digest(path) -> str:
    """SHA-256 of the raw input bytes."""
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def _open_out(path: Path):
    try:
        return path.open("w", encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def write_edges(path, graphs: GraphSequence):
    """One JSON record per edge per time point: {t, u, v, theta}."""
    path = Path(path)
    with _open_out(path) as fh:
        for t, d in zip(graphs.times, graphs.edges):
            for (u, v), w in sorted(d.items()):
                fh.write(f'{{"t": {fmt17(t)}, "u": {u}, "v": {v}, "theta": {fmt17(w)}}}\n')


def read_edges(path, p: int | None = None) -> GraphSequence:
    """Rebuild a graph sequence from an edge file.

    Times absent from the file cannot be recovered, so callers comparing two
    files should align them on the union of stamps (see ``align_sequences``).
    """
    path = Path(path)
    by_time: dict = {}
    max_node = -1
    for i, line in enumerate(path.read_text().splitlines()):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            t, u, v, w = float(rec["t"]), int(rec["u"]), int(rec["v"]), float(rec["theta"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            raise ParseError("malformed edge record", row=i + 1) from None
        key = (u, v) if u < v else (v, u)
        by_time.setdefault(t, {})[key] = w
        max_node = max(max_node, u, v)
    times = np.array(sorted(by_time))
    if p is None:
        p = max_node + 1 if max_node >= 1 else 2
    return GraphSequence(p=p, times=times, edges=tuple(by_time[t] for t in times))


def align_sequences(a: GraphSequence, b: GraphSequence) -> tuple:
    """Put two sequences on the union of their grids (missing times = empty)."""
    times = np.union1d(a.times, b.times)
    p = max(a.p, b.p)

    def expand(g: GraphSequence):
        lookup = {t: d for t, d in zip(g.times, g.edges)}
        return GraphSequence(p=p, times=times, edges=tuple(lookup.get(t, {}) for t in times))

    return expand(a), expand(b)


def write_paths(path, node_paths: Sequence[NodeParamPath], times):
    """Dense table of all directed coefficients; header names theta_u_v."""
    path = Path(path)
    times = np.asarray(times, dtype=np.float64)
    node_paths = sorted(node_paths, key=lambda q: q.node)
    p = node_paths[0].p
    headers = ["t"]
    for u in range(p):
        for v in range(p):
            if v != u:
                headers.append(f"theta_{u}_{v}")
    with _open_out(path) as fh:
        fh.write("\t".join(headers) + "\n")
        for j, t in enumerate(times):
            cells = [fmt17(t)]
            for u in range(p):
                cells.extend(fmt17(val) for val in node_paths[u].path[j])
            fh.write("\t".join(cells) + "\n")


def read_paths(path) -> tuple:
    """Invert :func:`write_paths`; returns (times, node paths)."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ParseError("empty paths table", row=1)
    header = lines[0].split("\t")
    n_cols = len(header) - 1
    # p(p-1) coefficient columns
    p = round((1 + np.sqrt(1 + 4 * n_cols)) / 2)
    if p * (p - 1) != n_cols or header[0] != "t":
        raise ParseError("paths table header is malformed", row=1)
    times = []
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != n_cols + 1:
            raise ParseError("wrong number of columns", row=i)
        times.append(float(cells[0]))
        rows.append([float(c) for c in cells[1:]])
    mat = np.asarray(rows, dtype=np.float64)
    node_paths = [
        NodeParamPath(u, mat[:, u * (p - 1) : (u + 1) * (p - 1)].copy()) for u in range(p)
    ]
    return np.asarray(times), node_paths


def write_metrics(path, metrics: MetricsResult):
    with _open_out(Path(path)) as fh:
        fh.write("metric\tvalue\n")
        for name in ("precision", "recall", "f1"):
            fh.write(f"{name}\t{fmt17(getattr(metrics, name))}\n")


def write_bic(path, report):
    """Tab-separated BIC grid: one row per cell, selected cell flagged."""
    with _open_out(Path(path)) as fh:
        keys = list(report.cells[0].params)
        fh.write("\t".join(keys + ["bic_avg", "valid", "selected"]) + "\n")
        for i, cell in enumerate(report.cells):
            cells = [fmt17(cell.params[k]) for k in keys]
            cells.append(fmt17(cell.average) if cell.valid else "nan")
            cells.append(str(int(cell.valid)))
            cells.append(str(int(i == report.selected_index)))
            fh.write("\t".join(cells) + "\n")


def write_experiment_summary(path, summary_rows):
    with _open_out(Path(path)) as fh:
        fh.write("scheme\tmethod\tsymmetrization\tk\truns\tf1_mean\tf1_std\tprecision_mean\trecall_mean\n")
        for r in summary_rows:
            fh.write(
                "\t".join(
                    [
                        r.scheme,
                        r.method,
                        r.symmetrization,
                        str(r.k),
                        str(r.runs),
                        fmt17(r.f1_mean),
                        fmt17(r.f1_std),
                        fmt17(r.precision_mean),
                        fmt17(r.recall_mean),
                    ]
                )
                + "\n"
            )


def write_dataset_csv(path, data: Dataset):
    """Observations with a leading time column, one row per replicate."""
    with _open_out(Path(path)) as fh:
        fh.write(",".join(["t"] + [f"x{j}" for j in range(data.p)]) + "\n")
        for t, block in zip(data.times, data.observations):
            for row in block:
                fh.write(",".join([fmt17(t)] + [str(int(v)) for v in row]) + "\n")


def write_manifest(path, manifest: RunManifest):
    with _open_out(Path(path)) as fh:
        fh.write(manifest.to_json() + "\n")


def emit_results(
    out_dir,
    manifest: RunManifest,
    node_paths: Sequence[NodeParamPath] | None = None,
    times=None,
    graphs: GraphSequence | None = None,
    metrics: MetricsResult | None = None,
    bic_report=None,
    summary_rows=None,
) -> dict:
    """Write whichever artifacts are present plus the manifest; returns the
    name -> path map of everything written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    if graphs is not None:
        write_edges(out / "edges.jsonl", graphs)
        written["edges"] = out / "edges.jsonl"
    if node_paths is not None:
        if times is None:
            raise InvalidArgumentError("parameter paths need their time grid to be emitted")
        write_paths(out / "paths.tsv", node_paths, times)
        written["paths"] = out / "paths.tsv"
    if metrics is not None:
        write_metrics(out / "metrics.tsv", metrics)
        written["metrics"] = out / "metrics.tsv"
    if bic_report is not None:
        write_bic(out / "bic.tsv", bic_report)
        written["bic"] = out / "bic.tsv"
    if summary_rows is not None:
        write_experiment_summary(out / "summary.tsv", summary_rows)
        written["summary"] = out / "summary.tsv"
    write_manifest(out / "manifest.json", manifest)
    written["manifest"] = out / "manifest.json"
    return written
