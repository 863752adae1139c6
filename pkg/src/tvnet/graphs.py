"""Assemble per-node estimates into undirected graphs and score recovery.

Neighborhood estimation yields two directed values per pair; the min rule
keeps an edge only when both directions support it, the max rule when at
least one does. Recovery quality is reported as time-averaged precision and
recall plus their harmonic mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError
from .ising import NodeParamPath, NodeParams

SYMMETRIZE_MODES = ("min", "max")

# Threshold on the combined coupling below which an edge is treated as absent.
DEFAULT_ZERO_EPS = 1e-8


def symmetrize(theta_uv: float, theta_vu: float, mode: str) -> float:
    """Resolve the two directed estimates of one pair into a single value.

    ``min`` keeps the smaller magnitude (ties go to the second argument),
    ``max`` the larger (ties also go to the second argument).
    """
    if mode == "min":
        return theta_uv if abs(theta_uv) < abs(theta_vu) else theta_vu
    if mode == "max":
        return theta_uv if abs(theta_uv) > abs(theta_vu) else theta_vu
    raise InvalidArgumentError(f"unknown symmetrization mode {mode!r}; use one of {SYMMETRIZE_MODES}")


@dataclass
class GraphSequence:
    """Edge sets (with combined weights) over a common time grid."""

    p: int
    times: np.ndarray
    edges: tuple  # one {(u, v): weight} dict per time stamp, keys with u < v

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if len(self.edges) != self.times.size:
            raise InvalidArgumentError("need one edge set per time stamp")
        for d in self.edges:
            for (u, v) in d:
                if not (0 <= u < v < self.p):
                    raise InvalidArgumentError(f"edge ({u},{v}) invalid for p={self.p}")

    @property
    def n_times(self) -> int:
        return self.times.size

    def edge_sets(self) -> tuple:
        return tuple(frozenset(d.keys()) for d in self.edges)

    def relabeled(self, perm: Sequence[int]) -> "GraphSequence":
        """Apply a node permutation (used by metric invariance checks)."""
        perm = list(perm)
        out = []
        for d in self.edges:
            out.append({tuple(sorted((perm[u], perm[v]))): w for (u, v), w in d.items()})
        return GraphSequence(self.p, self.times.copy(), tuple(out))


@dataclass
class MetricsResult:
    """Time-averaged precision/recall and their harmonic mean."""

    precision: float
    recall: float
    f1: float


def _paths_to_tensor(all_node_paths: Sequence[NodeParamPath], p: int) -> np.ndarray:
    """(n_times, p, p) tensor of directed estimates theta[t, u, v]."""
    by_node = {path.node: path for path in all_node_paths}
    if sorted(by_node) != list(range(p)):
        missing = sorted(set(range(p)) - set(by_node))
        raise InvalidArgumentError(f"missing node paths for nodes {missing}")
    n = by_node[0].n_times
    theta = np.zeros((n, p, p))
    for u, path in by_node.items():
        if path.n_times != n or path.p != p:
            raise InvalidArgumentError(f"path for node {u} has inconsistent shape")
        cols = np.concatenate([np.arange(u), np.arange(u + 1, p)])
        theta[:, u, cols] = path.path
    return theta


def assemble_graphs(
    all_node_paths: Sequence[NodeParamPath],
    times: np.ndarray,
    mode: str = "max",
    zero_eps: float = DEFAULT_ZERO_EPS,
) -> GraphSequence:
    """Combine directed neighborhood paths into per-time undirected graphs.

    An edge is present when the symmetrized value exceeds ``zero_eps`` in
    magnitude: with ``min`` that reproduces the intersection of the two
    directed neighborhoods, with ``max`` their union.
    """
    if mode not in SYMMETRIZE_MODES:
        raise InvalidArgumentError(f"unknown symmetrization mode {mode!r}; use one of {SYMMETRIZE_MODES}")
    times = np.asarray(times, dtype=np.float64)
    p = all_node_paths[0].p
    theta = _paths_to_tensor(all_node_paths, p)
    if theta.shape[0] != times.size:
        raise InvalidArgumentError("paths and time grid disagree on the number of time points")
    edges = []
    for t in range(times.size):
        d = {}
        for u in range(p):
            for v in range(u + 1, p):
                combined = symmetrize(theta[t, u, v], theta[t, v, u], mode)
                if abs(combined) > zero_eps:
                    d[(u, v)] = float(combined)
        edges.append(d)
    return GraphSequence(p, times, tuple(edges))


def constant_paths(params: Sequence[NodeParams], n_times: int) -> list:
    """Repeat static per-node estimates over a grid (for assembly/scoring)."""
    return [NodeParamPath(q.node, np.tile(q.theta, (n_times, 1))) for q in params]


def evaluate(estimated: GraphSequence, truth: GraphSequence) -> MetricsResult:
    """Time-averaged precision/recall of edge recovery, and their F1.

    At a time point with an empty denominator (no estimated edges for
    precision, no true edges for recall) the term counts 1 when both edge
    sets are empty and 0 otherwise, keeping every term inside [0, 1].
    """
    if estimated.p != truth.p:
        raise InvalidArgumentError("graph sequences disagree on p")
    if estimated.n_times != truth.n_times or not np.array_equal(estimated.times, truth.times):
        raise InvalidArgumentError("graph sequences disagree on the time grid")
    prec_terms = []
    rec_terms = []
    for est_d, true_d in zip(estimated.edges, truth.edges):
        est, tru = set(est_d), set(true_d)
        hits = len(est & tru)
        if est:
            prec_terms.append(hits / len(est))
        else:
            prec_terms.append(1.0 if not tru else 0.0)
        if tru:
            rec_terms.append(hits / len(tru))
        else:
            rec_terms.append(1.0 if not est else 0.0)
    precision = float(np.mean(prec_terms))
    recall = float(np.mean(rec_terms))
    f1 = 0.0 if precision + recall == 0 else 2.0 * precision * recall / (precision + recall)
    return MetricsResult(precision=precision, recall=recall, f1=f1)
