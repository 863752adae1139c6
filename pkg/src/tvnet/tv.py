"""Fused-lasso penalized logistic regression over a whole time path.

For one node, all per-time coupling vectors are estimated jointly under a
composite penalty: an l1 term on every coefficient plus a total-variation
term on each coefficient's trajectory, which drives the estimates toward
sparse, piecewise-constant paths. Block coordinate descent cycles over
covariates; each block is a 1-covariate fused-lasso problem solved by
proximal gradient with an exact total-variation proximal step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConvergenceError, InvalidArgumentError
from .ising import Dataset, NodeParamPath, log2cosh


@dataclass
class TVConfig:
    """Penalties and solver settings for the fused path estimator."""

    lambda1: float = 0.1
    lambda_tv: float = 0.1
    tol: float = 1e-7
    max_outer_sweeps: int = 500
    inner_tol: float = 1e-9
    inner_max_iters: int = 10_000

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda_tv < 0:
            raise InvalidArgumentError("penalties must be nonnegative")
        if self.tol <= 0 or self.inner_tol <= 0:
            raise InvalidArgumentError("tolerances must be positive")


def tv_penalty(path_v) -> float:
    """Sum of absolute consecutive differences; zero for a single point."""
    path_v = np.asarray(path_v, dtype=np.float64)
    if path_v.ndim != 1:
        raise InvalidArgumentError("tv_penalty expects a 1-d trajectory")
    if path_v.size <= 1:
        return 0.0
    return float(np.abs(np.diff(path_v)).sum())


def tv_objective(path: NodeParamPath, data: Dataset, cfg: TVConfig) -> float:
    """Value being minimized: negative log pseudo-likelihood plus both penalties."""
    if path.n_times != data.n_times or path.p != data.p:
        raise InvalidArgumentError("path shape does not match the dataset")
    u = path.node
    y = data.x[:, u]
    z = np.delete(data.x, u, axis=1)
    margins = np.einsum("ij,ij->i", z, path.path[data.row_time_index])
    loss = float(np.sum(log2cosh(margins) - y * margins))
    l1 = cfg.lambda1 * float(np.abs(path.path).sum())
    tv = cfg.lambda_tv * float(np.abs(np.diff(path.path, axis=0)).sum())
    return loss + l1 + tv


@njit(cache=True, nogil=True)
def _tv1d_prox(y, lam, out):
    """Exact prox of ``0.5||x - y||^2 + lam * TV(x)`` by the direct
    running-bound (taut string) recursion; linear time, no extra memory."""
    n = y.shape[0]
    if n == 0:
        return
    if n == 1 or lam <= 0.0:
        for i in range(n):
            out[i] = y[i]
        return
    k = 0
    k0 = 0
    kminus = 0
    kplus = 0
    vmin = y[0] - lam
    vmax = y[0] + lam
    umin = lam
    umax = -lam
    while True:
        while k == n - 1:
            if umin < 0.0:
                while True:
                    out[k0] = vmin
                    k0 += 1
                    if k0 > kminus:
                        break
                k = k0
                kminus = k
                vmin = y[k]
                umin = lam
                umax = vmin + lam - vmax
            elif umax > 0.0:
                while True:
                    out[k0] = vmax
                    k0 += 1
                    if k0 > kplus:
                        break
                k = k0
                kplus = k
                vmax = y[k]
                umax = -lam
                umin = vmax - lam - vmin
            else:
                vmin += umin / (k - k0 + 1)
                while True:
                    out[k0] = vmin
                    k0 += 1
                    if k0 > k:
                        break
                return
        umin += y[k + 1] - vmin
        if umin < -lam:
            while True:
                out[k0] = vmin
                k0 += 1
                if k0 > kminus:
                    break
            k = k0
            kminus = k
            kplus = k
            vmin = y[k]
            vmax = vmin + 2.0 * lam
            umin = lam
            umax = -lam
        else:
            umax += y[k + 1] - vmax
            if umax > lam:
                while True:
                    out[k0] = vmax
                    k0 += 1
                    if k0 > kplus:
                        break
                k = k0
                kminus = k
                kplus = k
                vmax = y[k]
                vmin = vmax - 2.0 * lam
                umin = lam
                umax = -lam
            else:
                k += 1
                if umin >= lam:
                    vmin += (umin - lam) / (k - k0 + 1)
                    umin = lam
                    kminus = k
                if umax <= -lam:
                    vmax += (umax + lam) / (k - k0 + 1)
                    umax = -lam
                    kplus = k


def prox_tv1d(y, lam: float) -> np.ndarray:
    """Exact 1-d total-variation proximal operator."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    if lam < 0:
        raise InvalidArgumentError("prox parameter must be nonnegative")
    out = np.empty_like(y)
    _tv1d_prox(y, lam, out)
    return out


def prox_fused(y, lam_tv: float, lam_l1: float) -> np.ndarray:
    """Prox of ``lam_tv * TV + lam_l1 * l1``: TV prox then soft threshold.

    This composition is exact for the fused-lasso penalty pair.
    """
    smoothed = prox_tv1d(y, lam_tv)
    return np.sign(smoothed) * np.maximum(np.abs(smoothed) - lam_l1, 0.0)


@njit(cache=True, nogil=True)
def _block_loss_grad(base, zv, y, row_start, theta, grad):
    """Loss and per-time gradient of the 1-covariate block at ``theta``."""
    n = row_start.shape[0] - 1
    loss = 0.0
    for t in range(n):
        g = 0.0
        for i in range(row_start[t], row_start[t + 1]):
            m = base[i] + zv[i] * theta[t]
            a = abs(m)
            loss += a + np.log1p(np.exp(-2.0 * a)) - y[i] * m
            g += zv[i] * (np.tanh(m) - y[i])
        grad[t] = g
    return loss


@njit(cache=True, nogil=True)
def _fused_block_ista(base, zv, y, row_start, theta, lam1, lam_tv, step, tol, max_iters, work, grad):
    """Proximal-gradient iterations on one covariate's path, in place.

    Each iteration takes a gradient step of size ``step`` on the logistic
    part and applies the exact fused prox. Stops once the objective decrease
    falls below ``tol``. Returns (iterations, converged).
    """
    n = theta.shape[0]
    obj = _block_loss_grad(base, zv, y, row_start, theta, grad)
    for t in range(n):
        obj += lam1 * abs(theta[t])
        if t > 0:
            obj += lam_tv * abs(theta[t] - theta[t - 1])
    for it in range(max_iters):
        for t in range(n):
            work[t] = theta[t] - step * grad[t]
        _tv1d_prox(work, step * lam_tv, theta)
        for t in range(n):
            mag = abs(theta[t]) - step * lam1
            if mag <= 0.0:
                theta[t] = 0.0
            else:
                theta[t] = mag if theta[t] > 0 else -mag
        new_obj = _block_loss_grad(base, zv, y, row_start, theta, grad)
        for t in range(n):
            new_obj += lam1 * abs(theta[t])
            if t > 0:
                new_obj += lam_tv * abs(theta[t] - theta[t - 1])
        decrease = obj - new_obj
        obj = new_obj
        if decrease < tol:
            return it + 1, True
    return max_iters, False


@dataclass
class FusedBlockContext:
    """Partial linear predictors for one covariate's block subproblem.

    ``base_margins`` holds, for every stacked observation, the linear
    predictor with the covariate's own contribution removed.
    """

    base_margins: np.ndarray
    covariate: np.ndarray
    response: np.ndarray
    row_start: np.ndarray  # (n_times + 1,) row offsets into the stacked arrays

    @classmethod
    def from_dataset(cls, data: Dataset, u: int, v_col: int, path: np.ndarray | None = None):
        """Context for node ``u`` and design column ``v_col`` (0..p-2).

        ``path`` is the node's full current path; its column ``v_col`` is
        subtracted out. A missing path means all-zero current estimates.
        """
        y = np.ascontiguousarray(data.x[:, u])
        z = np.delete(data.x, u, axis=1)
        if path is None:
            base = np.zeros(data.n_obs)
        else:
            without = path.copy()
            without[:, v_col] = 0.0
            base = np.einsum("ij,ij->i", z, without[data.row_time_index])
        row_start = np.concatenate([[0], np.cumsum(data.counts)]).astype(np.int64)
        return cls(
            base_margins=np.ascontiguousarray(base),
            covariate=np.ascontiguousarray(z[:, v_col]),
            response=y,
            row_start=row_start,
        )

    @property
    def n_times(self) -> int:
        return self.row_start.size - 1

    @property
    def max_replicates(self) -> int:
        return int(np.diff(self.row_start).max())

    def loss_gradient(self, theta_path: np.ndarray) -> np.ndarray:
        """Per-time gradient of the block's logistic loss at ``theta_path``."""
        grad = np.empty(self.n_times)
        _block_loss_grad(
            self.base_margins, self.covariate, self.response, self.row_start,
            np.ascontiguousarray(theta_path, dtype=np.float64), grad,
        )
        return grad


def fused_subproblem(
    context: FusedBlockContext,
    lambda1: float,
    lambda_tv: float,
    theta0: np.ndarray | None = None,
    inner_tol: float = 1e-9,
    max_iters: int = 10_000,
) -> np.ndarray:
    """Minimize one covariate's path under loss + l1 + TV.

    Proximal gradient with step ``1/L`` where ``L`` is the largest replicate
    count over time points (each +/-1 covariate bounds the per-time logistic
    curvature by the number of observations there), followed by the exact
    fused prox. The TV prox runs first, then the soft threshold; that order
    is exact for this penalty pair.
    """
    n = context.n_times
    theta = np.zeros(n) if theta0 is None else np.array(theta0, dtype=np.float64)
    if theta.shape != (n,):
        raise InvalidArgumentError(f"theta0 must have shape ({n},)")
    step = 1.0 / context.max_replicates
    work = np.empty(n)
    grad = np.empty(n)
    iters, converged = _fused_block_ista(
        context.base_margins, context.covariate, context.response, context.row_start,
        theta, lambda1, lambda_tv, step, inner_tol, max_iters, work, grad,
    )
    if not converged:
        raise ConvergenceError(
            f"fused block solver hit the {max_iters}-iteration cap",
            iterate=theta,
            trace=np.empty(0),
        )
    return theta


def estimate_node_tv(
    u: int,
    data: Dataset,
    cfg: TVConfig,
    trace: list | None = None,
) -> NodeParamPath:
    """Whole-path estimate for one node by block coordinate descent.

    Blocks are the covariates, visited cyclically; each block is solved by
    :func:`fused_subproblem` warm-started at its current path. Stops when a
    full sweep decreases the objective by less than ``cfg.tol``. Passing a
    list as ``trace`` records the objective after every block update.
    """
    if not 0 <= u < data.p:
        raise InvalidArgumentError(f"node {u} outside range [0, {data.p})")
    n, d = data.n_times, data.p - 1
    y = np.ascontiguousarray(data.x[:, u])
    z = np.ascontiguousarray(np.delete(data.x, u, axis=1))
    row_start = np.concatenate([[0], np.cumsum(data.counts)]).astype(np.int64)
    tidx = data.row_time_index
    step = 1.0 / int(data.counts.max())

    paths = np.zeros((n, d))
    margins = np.zeros(data.n_obs)
    work = np.empty(n)
    grad = np.empty(n)

    def full_objective():
        loss = float(np.sum(log2cosh(margins) - y * margins))
        return (
            loss
            + cfg.lambda1 * float(np.abs(paths).sum())
            + cfg.lambda_tv * float(np.abs(np.diff(paths, axis=0)).sum())
        )

    obj = full_objective()
    sweep_trace = [obj]
    for sweep in range(cfg.max_outer_sweeps):
        for v in range(d):
            zv = np.ascontiguousarray(z[:, v])
            base = margins - zv * paths[tidx, v]
            theta_v = paths[:, v].copy()
            iters, converged = _fused_block_ista(
                base, zv, y, row_start, theta_v,
                cfg.lambda1, cfg.lambda_tv, step, cfg.inner_tol, cfg.inner_max_iters,
                work, grad,
            )
            if not converged:
                raise ConvergenceError(
                    f"fused block solver for covariate column {v} hit the "
                    f"{cfg.inner_max_iters}-iteration cap",
                    iterate=paths,
                    trace=np.asarray(sweep_trace),
                )
            paths[:, v] = theta_v
            margins = base + zv * theta_v[tidx]
            if trace is not None:
                trace.append(full_objective())
        # Rebuild margins once per sweep so float drift cannot accumulate.
        margins = np.einsum("ij,ij->i", z, paths[tidx])
        new_obj = full_objective()
        sweep_trace.append(new_obj)
        decrease = obj - new_obj
        obj = new_obj
        if decrease < cfg.tol:
            return NodeParamPath(u, paths)
    raise ConvergenceError(
        f"block coordinate descent did not converge within {cfg.max_outer_sweeps} sweeps",
        iterate=paths,
        trace=np.asarray(sweep_trace),
    )


def fused_kkt_feasible(
    theta_path: np.ndarray,
    loss_grad: np.ndarray,
    lambda1: float,
    lambda_tv: float,
    slack: float = 1e-5,
) -> bool:
    """First-order optimality check for a 1-covariate fused-lasso solution.

    Propagates the interval of dual variables compatible with stationarity:
    the running dual must stay inside ``[-lambda_tv, lambda_tv]``, is pinned
    to the signed bound wherever consecutive estimates differ, and must
    return to zero at the end. Every constraint is widened by ``slack``.
    """
    theta_path = np.asarray(theta_path, dtype=np.float64)
    loss_grad = np.asarray(loss_grad, dtype=np.float64)
    n = theta_path.size
    lo = hi = 0.0
    for t in range(n):
        if theta_path[t] == 0.0:
            add_lo, add_hi = -lambda1, lambda1
        else:
            s = lambda1 * np.sign(theta_path[t])
            add_lo = add_hi = s
        lo = lo + loss_grad[t] + add_lo
        hi = hi + loss_grad[t] + add_hi
        if t < n - 1:
            diff = theta_path[t + 1] - theta_path[t]
            if diff > 0:
                pin_lo, pin_hi = lambda_tv, lambda_tv
            elif diff < 0:
                pin_lo, pin_hi = -lambda_tv, -lambda_tv
            else:
                pin_lo, pin_hi = -lambda_tv, lambda_tv
        else:
            pin_lo = pin_hi = 0.0
        lo = max(lo, pin_lo - slack)
        hi = min(hi, pin_hi + slack)
        if lo > hi:
            return False
    return True
