"""Synthetic benchmark: random anchor graphs under a degree cap, interpolated
coupling trajectories, Gibbs-sampled observations, and the full evaluation
loop (estimate, tune, assemble, score).

Anchor graphs are rewired by removing and adding a fixed number of edges;
additions avoid every edge of the previous anchor and respect the degree cap
on the union of consecutive anchors, so interpolated couplings keep the
nominal support size and degree bound at every time point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GenerationError, InvalidArgumentError
from .graphs import GraphSequence, assemble_graphs, evaluate
from .ising import Dataset, ThetaFull, gibbs_sample
from .selection import GridSpec, grid_search

SCHEMES = ("smooth", "piecewise")
REWIRE_MAX_TRIES = 10_000


@dataclass
class ScenarioSpec:
    """Benchmark scenario: graph sizes, rewiring churn, and sampling counts."""

    p: int = 20
    s_max: int = 4
    n: int = 500
    anchors: int = 6
    edges_per_anchor: int = 15
    churn: int = 10
    replicates: int = 10
    scheme: str = "smooth"
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidArgumentError(f"unknown scheme {self.scheme!r}; use one of {SCHEMES}")
        if min(self.p, self.s_max, self.n, self.anchors, self.edges_per_anchor) < 1:
            raise InvalidArgumentError("scenario sizes must be positive")
        if self.anchors < 2:
            raise InvalidArgumentError("need at least two anchor graphs to interpolate")
        if not 1 <= self.replicates <= 10:
            raise InvalidArgumentError("replicates must lie in [1, 10]")
        if self.churn < 0 or self.churn > self.edges_per_anchor:
            raise InvalidArgumentError("churn must lie in [0, edges_per_anchor]")
        capacity = self.p * self.s_max // 2
        if self.edges_per_anchor + self.churn > capacity:
            raise InvalidArgumentError(
                f"union of consecutive anchors needs {self.edges_per_anchor + self.churn} edges, "
                f"but the degree cap allows at most {capacity}"
            )


@dataclass
class AnchorSequence:
    """Anchor edge sets and their coupling prototypes."""

    graphs: list
    prototypes: list


def _random_edge(rng, degrees, p, s_max, forbidden, max_tries):
    for _ in range(max_tries):
        u = int(rng.integers(p))
        v = int(rng.integers(p))
        if u == v:
            continue
        edge = (u, v) if u < v else (v, u)
        if edge in forbidden:
            continue
        if degrees[edge[0]] >= s_max or degrees[edge[1]] >= s_max:
            continue
        return edge
    raise GenerationError(
        f"could not place an edge under the degree cap after {max_tries} tries"
    )


def generate_anchors(spec: ScenarioSpec, seed=None) -> AnchorSequence:
    """Random anchor graphs plus coupling prototypes, deterministic in the seed.

    The first graph grows edge by edge under the degree cap. Each subsequent
    anchor removes ``churn`` random edges and adds ``churn`` edges that did
    not occur in the previous anchor, keeping the degree cap satisfied on
    the union of the two anchors (so interpolated graphs obey it too).
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    graphs = []

    edges = set()
    degrees = np.zeros(spec.p, dtype=np.int64)
    while len(edges) < spec.edges_per_anchor:
        e = _random_edge(rng, degrees, spec.p, spec.s_max, edges, REWIRE_MAX_TRIES)
        edges.add(e)
        degrees[e[0]] += 1
        degrees[e[1]] += 1
    graphs.append(frozenset(edges))

    for _ in range(spec.anchors - 1):
        prev = graphs[-1]
        removed = rng.choice(len(prev), size=spec.churn, replace=False)
        prev_sorted = sorted(prev)
        kept = set(prev_sorted) - {prev_sorted[i] for i in removed}
        union_degrees = np.zeros(spec.p, dtype=np.int64)
        for (a, b) in prev:
            union_degrees[a] += 1
            union_degrees[b] += 1
        new_edges = set(kept)
        blocked = set(prev)
        for _ in range(spec.churn):
            e = _random_edge(rng, union_degrees, spec.p, spec.s_max, blocked, REWIRE_MAX_TRIES)
            new_edges.add(e)
            blocked.add(e)
            union_degrees[e[0]] += 1
            union_degrees[e[1]] += 1
        graphs.append(frozenset(new_edges))

    prototypes = []
    for g in graphs:
        couplings = {e: float(w) for e, w in zip(sorted(g), rng.uniform(0.5, 1.0, size=len(g)))}
        prototypes.append(ThetaFull(p=spec.p, couplings=couplings))
    return AnchorSequence(graphs=graphs, prototypes=prototypes)


def _segment_lengths(n: int, segments: int) -> list:
    bounds = [round(n * i / segments) for i in range(segments + 1)]
    return [bounds[i + 1] - bounds[i] for i in range(segments)]


def interpolate_parameters(anchors: AnchorSequence, spec: ScenarioSpec) -> list:
    """Coupling matrices at every grid time, one segment per anchor pair.

    The smooth scheme places the segment's points strictly between the two
    prototypes (fractions j/(L+1) for j = 1..L), so churned couplings never
    vanish inside a segment and every interpolated graph keeps the full
    union support. The piecewise scheme holds the prototype average on the
    whole segment.
    """
    protos = [t.matrix() for t in anchors.prototypes]
    if len(protos) != spec.anchors:
        raise InvalidArgumentError("anchor count disagrees with the scenario")
    out = []
    for i, length in enumerate(_segment_lengths(spec.n, spec.anchors - 1), start=1):
        left, right = protos[i - 1], protos[i]
        if spec.scheme == "piecewise":
            mid = ThetaFull.from_matrix(0.5 * (left + right))
            out.extend([mid] * length)
        else:
            for j in range(1, length + 1):
                frac = j / (length + 1)
                out.append(ThetaFull.from_matrix(left + frac * (right - left)))
    return out


def true_graphs(thetas: Sequence[ThetaFull], times: np.ndarray) -> GraphSequence:
    """Ground-truth edge sequences from the nonzero coupling pattern."""
    times = np.asarray(times, dtype=np.float64)
    if len(thetas) != times.size:
        raise InvalidArgumentError("need one coupling specification per time stamp")
    return GraphSequence(
        p=thetas[0].p,
        times=times,
        edges=tuple(dict(t.couplings) for t in thetas),
    )


def check_protocol_invariants(anchors: AnchorSequence, thetas: Sequence[ThetaFull], spec: ScenarioSpec):
    """Assert the size/degree claims of the generation protocol; raises on violation."""
    union_size = spec.edges_per_anchor + spec.churn
    shared_size = spec.edges_per_anchor - spec.churn
    for g in anchors.graphs:
        if len(g) != spec.edges_per_anchor:
            raise GenerationError(f"anchor has {len(g)} edges, expected {spec.edges_per_anchor}")
        if _max_degree(g, spec.p) > spec.s_max:
            raise GenerationError("anchor exceeds the degree cap")
    for a, b in zip(anchors.graphs, anchors.graphs[1:]):
        if len(a & b) != shared_size or len(a | b) != union_size:
            raise GenerationError("consecutive anchors do not have the expected churn")
    for theta in thetas:
        support = theta.edge_set()
        if len(support) != union_size:
            raise GenerationError(f"interpolated support has {len(support)} edges, expected {union_size}")
        if _max_degree(support, spec.p) > spec.s_max:
            raise GenerationError("interpolated graph exceeds the degree cap")


def _max_degree(edges, p: int) -> int:
    deg = np.zeros(p, dtype=np.int64)
    for (u, v) in edges:
        deg[u] += 1
        deg[v] += 1
    return int(deg.max()) if p else 0


def generate_dataset(
    thetas: Sequence[ThetaFull],
    k: int,
    seed,
    burn_in: int = 1000,
    times: np.ndarray | None = None,
) -> Dataset:
    """Draw ``k`` independent Gibbs replicates at every time point.

    Every (time, replicate) pair runs a fresh chain seeded by the matching
    child of ``SeedSequence(seed).spawn``, so generation is reproducible and
    order-independent.
    """
    if k < 1:
        raise InvalidArgumentError("need at least one replicate")
    n = len(thetas)
    if times is None:
        times = np.arange(1, n + 1) / n
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n * k)
    blocks = []
    for t, theta in enumerate(thetas):
        rows = [
            gibbs_sample(theta, 1, burn_in=burn_in, thin=1, seed=children[t * k + r])[0]
            for r in range(k)
        ]
        blocks.append(np.vstack(rows))
    return Dataset(times=times, observations=tuple(blocks))


@dataclass
class ResultRow:
    """Recovery metrics of one (run, k, method, symmetrization) combination."""

    scheme: str
    run: int
    k: int
    method: str
    symmetrization: str
    precision: float
    recall: float
    f1: float
    selected: dict


@dataclass
class SummaryRow:
    scheme: str
    method: str
    symmetrization: str
    k: int
    f1_mean: float
    f1_std: float
    precision_mean: float
    recall_mean: float
    runs: int


@dataclass
class ExperimentReport:
    spec: ScenarioSpec
    rows: list = field(default_factory=list)

    def summary(self) -> list:
        """Mean and standard deviation per (method, symmetrization, k)."""
        keys = sorted({(r.method, r.symmetrization, r.k) for r in self.rows})
        out = []
        for method, sym, k in keys:
            grp = [r for r in self.rows if (r.method, r.symmetrization, r.k) == (method, sym, k)]
            f1 = np.array([r.f1 for r in grp])
            out.append(
                SummaryRow(
                    scheme=self.spec.scheme,
                    method=method,
                    symmetrization=sym,
                    k=k,
                    f1_mean=float(f1.mean()),
                    f1_std=float(f1.std(ddof=1)) if f1.size > 1 else 0.0,
                    precision_mean=float(np.mean([r.precision for r in grp])),
                    recall_mean=float(np.mean([r.recall for r in grp])),
                    runs=len(grp),
                )
            )
        return out

    def mean_f1(self, method: str, symmetrization: str, k: int) -> float:
        for row in self.summary():
            if (row.method, row.symmetrization, row.k) == (method, symmetrization, k):
                return row.f1_mean
        raise KeyError((method, symmetrization, k))


def run_experiment(
    spec: ScenarioSpec,
    methods: Sequence[str],
    grid: GridSpec,
    runs: int,
    k_values: Sequence[int] | None = None,
    threads: int | None = None,
    burn_in: int = 1000,
    solver_options: dict | None = None,
) -> ExperimentReport:
    """Full benchmark: generate, tune by BIC, assemble both symmetrizations,
    and score against the ground truth, for every run and replicate count.

    Data at each run is generated once with the scenario's replicate count;
    smaller ``k`` values reuse the first ``k`` replicates.
    """
    if k_values is None:
        k_values = list(range(1, spec.replicates + 1))
    if max(k_values) > spec.replicates:
        raise InvalidArgumentError("k_values cannot exceed the scenario's replicate count")
    report = ExperimentReport(spec=spec)
    for run in range(runs):
        anchors = generate_anchors(spec, seed=np.random.SeedSequence([spec.seed, run, 0]))
        thetas = interpolate_parameters(anchors, spec)
        check_protocol_invariants(anchors, thetas, spec)
        data_full = generate_dataset(
            thetas, spec.replicates, np.random.SeedSequence([spec.seed, run, 1]), burn_in=burn_in
        )
        truth = true_graphs(thetas, data_full.times)
        for k in k_values:
            data_k = data_full.with_replicates(k)
            for method in methods:
                search = grid_search(
                    method, data_k, grid, threads=threads, solver_options=solver_options
                )
                for mode in ("min", "max"):
                    est = assemble_graphs(search.selected_paths, data_k.times, mode=mode)
                    scored = evaluate(est, truth)
                    report.rows.append(
                        ResultRow(
                            scheme=spec.scheme,
                            run=run,
                            k=k,
                            method=method,
                            symmetrization=mode,
                            precision=scored.precision,
                            recall=scored.recall,
                            f1=scored.f1,
                            selected=dict(search.selected.params),
                        )
                    )
    return report
