"""BIC-based tuning: block-counting degrees of freedom, scores for all three
estimators, the bandwidth median heuristic, and grid search.

The degrees of freedom of a path count maximal time blocks on which a
coefficient is constant and nonzero. Grid search averages per-node BIC
scores over all nodes and picks the maximizing cell with a deterministic
tie-break (smaller lambda1 first, then the smaller second parameter).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .errors import EmptyWindowError, GridSearchError, InvalidArgumentError, TvnetError
from .ising import Dataset, NodeParamPath, NodeParams, log2cosh
from .parallel import parallel_map
from .smooth import KernelSpec, SmoothConfig, estimate_node_smooth_path, estimate_node_static
from .tv import TVConfig, estimate_node_tv

METHODS = ("smooth", "tv", "static")

# Coefficients below this magnitude count as zero when blocks are counted;
# kernel-smoothed paths are never exactly constant, so snapping is needed.
DIM_ZERO_EPS = 1e-8


def _default_lambda1_grid() -> np.ndarray:
    return np.geomspace(0.01, 0.3, 100)


def _default_h_grid() -> np.ndarray:
    return np.arange(1, 11) * 0.05


def _default_lambda_tv_grid() -> np.ndarray:
    return np.geomspace(0.05, 0.3, 10)


@dataclass
class GridSpec:
    """Search grids for the tuning parameters of all three methods."""

    lambda1_grid: np.ndarray = field(default_factory=_default_lambda1_grid)
    h_grid: np.ndarray = field(default_factory=_default_h_grid)
    lambda_tv_grid: np.ndarray = field(default_factory=_default_lambda_tv_grid)

    def __post_init__(self):
        for name in ("lambda1_grid", "h_grid", "lambda_tv_grid"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1 or arr.size == 0:
                raise InvalidArgumentError(f"{name} must be a non-empty 1-d array")
            if np.any(arr <= 0):
                raise InvalidArgumentError(f"{name} values must be positive")
            setattr(self, name, arr)


def dim_blocks(path, zero_eps: float = DIM_ZERO_EPS) -> int:
    """Number of constant nonzero time blocks across all coefficients.

    Uses the sign pattern after snapping magnitudes below ``zero_eps`` to
    zero; the (virtual) predecessor of the first time point is zero, so an
    initial nonzero block is counted.
    """
    arr = path.path if isinstance(path, NodeParamPath) else np.asarray(path, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    signs = np.sign(np.where(np.abs(arr) < zero_eps, 0.0, arr))
    prev = np.vstack([np.zeros((1, signs.shape[1])), signs[:-1]])
    return int(np.sum((signs != prev) & (signs != 0)))


def _fit_term_tv(path: NodeParamPath, data: Dataset) -> float:
    u = path.node
    y = data.x[:, u]
    z = np.delete(data.x, u, axis=1)
    margins = np.einsum("ij,ij->i", z, path.path[data.row_time_index])
    return float(np.sum(y * margins - log2cosh(margins)))


def bic_tv(path: NodeParamPath, data: Dataset, zero_eps: float = DIM_ZERO_EPS) -> float:
    """Log pseudo-likelihood over all observations minus the block penalty."""
    if path.n_times != data.n_times or path.p != data.p:
        raise InvalidArgumentError("path shape does not match the dataset")
    return _fit_term_tv(path, data) - 0.5 * np.log(data.n_times) * dim_blocks(path, zero_eps)


def bic_smooth(
    path: NodeParamPath,
    data: Dataset,
    kernel: KernelSpec,
    zero_eps: float = DIM_ZERO_EPS,
) -> float:
    """Kernel-weighted fit term over all (target, observation) pairs minus
    the same block penalty used for the fused estimator.

    ``path`` must hold the estimates at every grid time, in grid order.
    """
    if path.n_times != data.n_times or path.p != data.p:
        raise InvalidArgumentError("need one estimate per grid time")
    u = path.node
    y = data.x[:, u]
    z = np.delete(data.x, u, axis=1)
    row_starts = np.concatenate([[0], np.cumsum(data.counts)])
    fit = 0.0
    for j, tau in enumerate(data.times):
        raw_t = kernel.values((data.times - tau) / kernel.bandwidth)
        pos = np.nonzero(raw_t > 0)[0]
        if pos.size == 0:
            raise EmptyWindowError(float(tau), kernel.bandwidth)
        lo, hi = row_starts[pos[0]], row_starts[pos[-1] + 1]
        w = raw_t[data.row_time_index[lo:hi]]
        w = w / w.sum()
        margins = z[lo:hi] @ path.path[j]
        fit += float(w @ (y[lo:hi] * margins - log2cosh(margins)))
    return fit - 0.5 * np.log(data.n_times) * dim_blocks(path, zero_eps)


def bic_static(params: NodeParams, data: Dataset, zero_eps: float = DIM_ZERO_EPS) -> float:
    """BIC of a time-invariant fit: one block per nonzero coefficient."""
    if params.p != data.p:
        raise InvalidArgumentError("parameter dimension does not match the dataset")
    u = params.node
    y = data.x[:, u]
    z = np.delete(data.x, u, axis=1)
    margins = z @ params.theta
    fit = float(np.sum(y * margins - log2cosh(margins)))
    dim = int(np.sum(np.abs(params.theta) >= zero_eps))
    return fit - 0.5 * np.log(data.n_times) * dim


def bandwidth_median_heuristic(time_grid) -> float:
    """Median squared distance between pairs of time points.

    The full n-by-n matrix of squared differences (diagonal included) is
    formed and the lower-middle entry of the sorted n^2 values is returned,
    which makes the even-count case deterministic.
    """
    t = np.asarray(time_grid, dtype=np.float64)
    if t.ndim != 1 or t.size < 2:
        raise InvalidArgumentError("need at least two time points")
    sq = (t[:, None] - t[None, :]) ** 2
    flat = np.sort(sq.ravel())
    return float(flat[(flat.size - 1) // 2])


@dataclass
class BICCell:
    """One grid cell: its tuning values and the per-node and averaged scores."""

    params: dict
    per_node: np.ndarray | None
    average: float
    valid: bool


@dataclass
class BICReport:
    """Full grid with the selected cell and its fitted paths."""

    method: str
    cells: list
    selected_index: int
    selected_paths: list

    @property
    def selected(self) -> BICCell:
        return self.cells[self.selected_index]


def _cell_grid(method: str, grid: GridSpec) -> list:
    if method == "smooth":
        return [
            {"lambda1": float(l1), "bandwidth": float(h)}
            for h in grid.h_grid
            for l1 in grid.lambda1_grid
        ]
    if method == "tv":
        return [
            {"lambda1": float(l1), "lambda_tv": float(lt)}
            for lt in grid.lambda_tv_grid
            for l1 in grid.lambda1_grid
        ]
    if method == "static":
        return [{"lambda1": float(l1)} for l1 in grid.lambda1_grid]
    raise InvalidArgumentError(f"unknown method {method!r}; use one of {METHODS}")


def fit_node(
    method: str,
    data: Dataset,
    params: dict,
    node: int,
    kernel_kind: str = "epanechnikov",
    solver_options: dict | None = None,
):
    """Fit one node under one tuning cell; returns (paths, bic score).

    Static fits are broadcast to a constant path so all methods share the
    same downstream assembly. ``solver_options`` overrides config fields of
    the chosen estimator (tolerances, sweep caps).
    """
    opts = solver_options or {}
    if method == "smooth":
        cfg = SmoothConfig(
            lambda1=params["lambda1"],
            kernel=KernelSpec(kind=kernel_kind, bandwidth=params["bandwidth"]),
            **opts,
        )
        path = estimate_node_smooth_path(node, data, cfg)
        return path, bic_smooth(path, data, cfg.kernel)
    if method == "tv":
        cfg = TVConfig(lambda1=params["lambda1"], lambda_tv=params["lambda_tv"], **opts)
        path = estimate_node_tv(node, data, cfg)
        return path, bic_tv(path, data)
    if method == "static":
        fitted = estimate_node_static(node, data, params["lambda1"], **opts)
        path = NodeParamPath(node, np.tile(fitted.theta, (data.n_times, 1)))
        return path, bic_static(fitted, data)
    raise InvalidArgumentError(f"unknown method {method!r}; use one of {METHODS}")


def _tie_break_key(cell_params: dict):
    return (cell_params["lambda1"], cell_params.get("bandwidth", cell_params.get("lambda_tv", 0.0)))


# Above this many (node, cell) tasks, per-cell paths are refit on demand
# instead of being held in memory during the search.
_CACHE_TASK_LIMIT = 1024


def grid_search(
    method: str,
    data: Dataset,
    grid: GridSpec,
    kernel_kind: str = "epanechnikov",
    threads: int | None = None,
    solver_options: dict | None = None,
) -> BICReport:
    """Estimate every grid cell, average per-node BIC scores, pick the best.

    Work fans out over (node, cell) tasks; any estimation failure inside a
    cell invalidates the whole cell. Ties on the averaged score break toward
    the smaller lambda1 and then the smaller bandwidth / TV penalty.
    """
    cell_params = _cell_grid(method, grid)
    nodes = range(data.p)
    tasks = [(ci, u) for ci in range(len(cell_params)) for u in nodes]
    keep_paths = len(tasks) <= _CACHE_TASK_LIMIT

    def run_task(task):
        ci, u = task
        try:
            path, score = fit_node(method, data, cell_params[ci], u, kernel_kind, solver_options)
            return (path if keep_paths else None), score
        except TvnetError as exc:
            return None, exc

    outcomes = parallel_map(run_task, tasks, threads=threads)

    cells = []
    for ci, params in enumerate(cell_params):
        scores = [s for _, s in outcomes[ci * data.p : (ci + 1) * data.p]]
        if any(isinstance(s, TvnetError) for s in scores):
            cells.append(BICCell(params=params, per_node=None, average=-np.inf, valid=False))
        else:
            per_node = np.asarray(scores, dtype=np.float64)
            cells.append(BICCell(params=params, per_node=per_node, average=float(per_node.mean()), valid=True))

    valid_idx = [i for i, c in enumerate(cells) if c.valid]
    if not valid_idx:
        raise GridSearchError(f"estimation failed in every one of the {len(cells)} grid cells")
    best = valid_idx[0]
    for i in valid_idx[1:]:
        if cells[i].average > cells[best].average or (
            cells[i].average == cells[best].average
            and _tie_break_key(cells[i].params) < _tie_break_key(cells[best].params)
        ):
            best = i

    if keep_paths:
        selected_paths = [outcomes[best * data.p + u][0] for u in nodes]
    else:
        selected_paths = parallel_map(
            lambda u: fit_node(method, data, cells[best].params, u, kernel_kind, solver_options)[0],
            list(nodes),
            threads=threads,
        )
    return BICReport(method=method, cells=cells, selected_index=best, selected_paths=selected_paths)
