"""Binary pairwise Markov random field: model types, conditional likelihood,
exact enumeration for small dimensions, and a seeded Gibbs sampler.

The joint model over spin vectors x in {-1,+1}^p is
``P(x) = exp(sum_{u<v} w_uv x_u x_v) / Z`` with no singleton potentials.
All estimation in this package works through the conditional distribution of
one coordinate given the rest, which is a logistic model in the couplings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
from numba import njit

from .errors import CapacityError, InvalidArgumentError, ValidationError

# Enumeration of all 2^p states is refused above this dimension.
EXACT_ENUMERATION_CAP = 20


def _as_spin_array(x, p: int | None = None) -> np.ndarray:
    """Validate and return a +/-1 vector as float64."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"spin vector must be 1-d, got shape {arr.shape}")
    if p is not None and arr.shape[0] != p:
        raise InvalidArgumentError(f"spin vector has length {arr.shape[0]}, expected {p}")
    if not np.all(np.abs(arr) == 1.0):
        raise InvalidArgumentError("spin vector entries must be exactly -1 or +1")
    return arr


def neighbor_nodes(u: int, p: int) -> np.ndarray:
    """Indices of all nodes except ``u``, in increasing order."""
    if not 0 <= u < p:
        raise InvalidArgumentError(f"node {u} outside range [0, {p})")
    return np.concatenate([np.arange(u), np.arange(u + 1, p)])


@dataclass
class NodeParams:
    """Coupling subvector of one node against all others.

    ``theta[j]`` is the coupling of ``node`` with the j-th element of
    ``neighbor_nodes(node, p)`` where ``p = len(theta) + 1``. ``capped`` is
    set by solvers that had to clamp a diverging coordinate (possible only
    with a zero l1 penalty on separable data).
    """

    node: int
    theta: np.ndarray
    capped: bool = False

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.ndim != 1:
            raise InvalidArgumentError("theta must be a 1-d vector")
        if not np.all(np.isfinite(self.theta)):
            raise InvalidArgumentError("theta entries must be finite")
        if not 0 <= self.node <= self.theta.shape[0]:
            raise InvalidArgumentError(
                f"node {self.node} inconsistent with {self.theta.shape[0] + 1} variables"
            )

    @property
    def p(self) -> int:
        return self.theta.shape[0] + 1

    def full_vector(self) -> np.ndarray:
        """Length-p vector with a structural zero at the node's own index."""
        return np.insert(self.theta, self.node, 0.0)


@dataclass
class NodeParamPath:
    """Per-node coupling vectors at every time point, stacked as rows."""

    node: int
    path: np.ndarray  # (n_times, p - 1)

    def __post_init__(self):
        self.path = np.asarray(self.path, dtype=np.float64)
        if self.path.ndim != 2:
            raise InvalidArgumentError("path must be a 2-d (n_times, p-1) array")
        if not np.all(np.isfinite(self.path)):
            raise InvalidArgumentError("path entries must be finite")

    @property
    def n_times(self) -> int:
        return self.path.shape[0]

    @property
    def p(self) -> int:
        return self.path.shape[1] + 1

    def at(self, t_index: int) -> NodeParams:
        return NodeParams(self.node, self.path[t_index].copy())


def _normalize_pair(u: int, v: int) -> tuple[int, int]:
    if u == v:
        raise InvalidArgumentError(f"self-pair ({u},{u}) is not a valid coupling")
    return (u, v) if u < v else (v, u)


@dataclass
class ThetaFull:
    """Full symmetric coupling specification, stored once per unordered pair."""

    p: int
    couplings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.p < 2:
            raise InvalidArgumentError("dimension p must be at least 2")
        clean = {}
        for (u, v), w in dict(self.couplings).items():
            u, v = int(u), int(v)
            if not (0 <= u < self.p and 0 <= v < self.p):
                raise InvalidArgumentError(f"pair ({u},{v}) outside node range")
            clean[_normalize_pair(u, v)] = float(w)
        self.couplings = clean

    @classmethod
    def from_matrix(cls, w: np.ndarray, zero_eps: float = 0.0) -> "ThetaFull":
        w = np.asarray(w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidArgumentError("coupling matrix must be square")
        if not np.allclose(w, w.T):
            raise InvalidArgumentError("coupling matrix must be symmetric")
        p = w.shape[0]
        cpl = {
            (u, v): float(w[u, v])
            for u in range(p)
            for v in range(u + 1, p)
            if abs(w[u, v]) > zero_eps
        }
        return cls(p=p, couplings=cpl)

    def matrix(self) -> np.ndarray:
        w = np.zeros((self.p, self.p))
        for (u, v), val in self.couplings.items():
            w[u, v] = w[v, u] = val
        return w

    def node_params(self, u: int) -> NodeParams:
        """True coupling subvector of node ``u`` (for oracles and truth graphs)."""
        full = self.matrix()[u]
        return NodeParams(u, np.delete(full, u))

    def edge_set(self, zero_eps: float = 0.0) -> frozenset:
        return frozenset(pair for pair, w in self.couplings.items() if abs(w) > zero_eps)


@dataclass
class Dataset:
    """Time-indexed spin observations with optional replicates per time point.

    ``times`` is strictly increasing inside (0, 1]; ``observations[i]`` holds
    the replicates observed at ``times[i]`` as a (k_i, p) array of +/-1
    values. Arrays are frozen after validation and safe to share.
    """

    times: np.ndarray
    observations: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        if times.ndim != 1 or times.size == 0:
            raise ValidationError("time grid must be a non-empty 1-d array")
        if np.any(np.diff(times) <= 0):
            raise ValidationError("time stamps must be strictly increasing")
        if times[0] <= 0 or times[-1] > 1:
            raise ValidationError("time stamps must lie in (0, 1]")
        obs = []
        p = None
        for i, block in enumerate(self.observations):
            arr = np.asarray(block, dtype=np.float64)
            if arr.ndim != 2 or arr.shape[0] == 0:
                raise ValidationError(f"observations at time index {i} must be a non-empty (k, p) array")
            if p is None:
                p = arr.shape[1]
            elif arr.shape[1] != p:
                raise ValidationError("all observation blocks must share the dimension p")
            if not np.all(np.abs(arr) == 1.0):
                raise ValidationError(f"non +/-1 value among observations at time index {i}")
            obs.append(arr)
        if len(obs) != times.size:
            raise ValidationError("need one observation block per time stamp")
        if p < 2:
            raise ValidationError("dimension p must be at least 2")
        times.flags.writeable = False
        self.times = times
        self.observations = tuple(obs)
        # Flat row-major view used by the solvers; rows are sorted by time.
        x = np.concatenate(obs, axis=0)
        counts = np.array([a.shape[0] for a in obs], dtype=np.int64)
        row_time = np.repeat(np.arange(times.size, dtype=np.int64), counts)
        for a in (x, counts, row_time, *self.observations):
            a.flags.writeable = False
        self._x = x
        self._counts = counts
        self._row_time = row_time

    @classmethod
    def from_matrix(cls, x: np.ndarray, times: np.ndarray | None = None) -> "Dataset":
        """Single-replicate dataset from an (n, p) matrix; default grid is {1/n,...,1}."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise ValidationError("observation matrix must be 2-d")
        n = x.shape[0]
        if times is None:
            times = np.arange(1, n + 1) / n
        return cls(times=times, observations=tuple(x[i : i + 1] for i in range(n)))

    @property
    def p(self) -> int:
        return self._x.shape[1]

    @property
    def n_times(self) -> int:
        return self.times.size

    @property
    def n_obs(self) -> int:
        return self._x.shape[0]

    @property
    def x(self) -> np.ndarray:
        """All observations stacked as an (n_obs, p) array, time-sorted."""
        return self._x

    @property
    def counts(self) -> np.ndarray:
        """Replicate count per time point."""
        return self._counts

    @property
    def row_time_index(self) -> np.ndarray:
        """Time index of each stacked row."""
        return self._row_time

    def with_replicates(self, k: int) -> "Dataset":
        """Keep the first ``k`` replicates at every time point."""
        if k < 1 or np.any(self._counts < k):
            raise InvalidArgumentError(f"cannot take {k} replicates from every time point")
        return Dataset(self.times.copy(), tuple(a[:k] for a in self.observations))


def _split_response(theta_u: NodeParams, x: np.ndarray) -> tuple[float, np.ndarray]:
    x = _as_spin_array(x, theta_u.p)
    return x[theta_u.node], np.delete(x, theta_u.node)


def log2cosh(a):
    """Overflow-safe ``log(exp(a) + exp(-a))`` for scalars or arrays."""
    a = np.abs(a)
    return a + np.log1p(np.exp(-2.0 * a))


def conditional_probability(theta_u: NodeParams, x) -> float:
    """P(x_u | x_rest) under the pairwise model; strictly inside (0, 1)."""
    x_u, rest = _split_response(theta_u, x)
    margin = float(rest @ theta_u.theta)
    return float(np.exp(x_u * margin - log2cosh(margin)))


def conditional_log_likelihood(theta_u: NodeParams, x) -> float:
    """log P(x_u | x_rest); equals x_u <theta, x_rest> - log2cosh(<theta, x_rest>)."""
    x_u, rest = _split_response(theta_u, x)
    margin = float(rest @ theta_u.theta)
    return float(x_u * margin - log2cosh(margin))


def cll_gradient(theta_u: NodeParams, x) -> np.ndarray:
    """Gradient of the conditional log-likelihood in the couplings.

    Entry for neighbor v is ``x_u x_v - x_v tanh(<theta, x_rest>)``.
    """
    x_u, rest = _split_response(theta_u, x)
    margin = float(rest @ theta_u.theta)
    return rest * (x_u - np.tanh(margin))


def enumerate_states(p: int) -> np.ndarray:
    """All 2^p spin vectors as a (2^p, p) array of +/-1, lexicographic in bits."""
    if p > EXACT_ENUMERATION_CAP:
        raise CapacityError(
            f"exact enumeration requires 2^p states; p={p} exceeds the cap {EXACT_ENUMERATION_CAP}"
        )
    codes = np.arange(2 ** p, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(p - 1, -1, -1)) & 1
    return bits.astype(np.float64) * 2.0 - 1.0


def state_log_weights(theta: ThetaFull):
    """(states, unnormalized log-weights) for every configuration."""
    states = enumerate_states(theta.p)
    w = theta.matrix()
    # sum_{u<v} w_uv x_u x_v == 0.5 * x' W x with a zero diagonal
    log_w = 0.5 * np.einsum("ij,jk,ik->i", states, w, states)
    return states, log_w


def exact_distribution(theta: ThetaFull) -> dict:
    """Exact probability of every spin configuration, keyed by the +/-1 tuple.

    Only feasible for small p: the state space has 2^p configurations.
    """
    states, log_w = state_log_weights(theta)
    log_z = np.logaddexp.reduce(log_w)
    probs = np.exp(log_w - log_z)
    return {tuple(int(s) for s in row): float(pr) for row, pr in zip(states, probs)}


def exact_pairwise_moments(theta: ThetaFull) -> np.ndarray:
    """Matrix of E[x_u x_v] under the exact distribution (unit diagonal)."""
    states, log_w = state_log_weights(theta)
    probs = np.exp(log_w - np.logaddexp.reduce(log_w))
    return np.einsum("i,ij,ik->jk", probs, states, states)


@njit(cache=True, nogil=True)
def _gibbs_chain(w, uniforms, burn_in, thin, n_samples, out):
    """Sequential-sweep Gibbs updates for one chain.

    ``uniforms`` must hold one value per (sweep, coordinate); sweeps are
    consumed in order, so the output is a pure function of the inputs.
    """
    p = w.shape[0]
    x = np.ones(p)
    total = burn_in + n_samples * thin
    kept = 0
    for sweep in range(total):
        for u in range(p):
            margin = 0.0
            for v in range(p):
                margin += w[u, v] * x[v]
            # P(x_u = +1 | rest) = 1 / (1 + exp(-2 margin))
            prob_plus = 1.0 / (1.0 + np.exp(-2.0 * margin))
            if uniforms[sweep, u] < prob_plus:
                x[u] = 1.0
            else:
                x[u] = -1.0
        if sweep >= burn_in and (sweep - burn_in + 1) % thin == 0:
            for v in range(p):
                out[kept, v] = x[v]
            kept += 1


def gibbs_sample(
    theta: ThetaFull,
    n_samples: int,
    burn_in: int = 1000,
    thin: int = 100,
    seed=0,
) -> np.ndarray:
    """Draw ``n_samples`` states by single-site Gibbs sampling.

    One sweep updates all coordinates in index order from the conditional
    distribution. The chain starts at the all +1 state, discards ``burn_in``
    sweeps, then keeps one state every ``thin`` sweeps. Randomness comes from
    numpy's seeded PCG64 generator, so identical arguments reproduce the
    output bit for bit.
    """
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be at least 1")
    if burn_in < 0 or thin < 1:
        raise InvalidArgumentError("need burn_in >= 0 and thin >= 1")
    rng = np.random.default_rng(seed)
    total = burn_in + n_samples * thin
    uniforms = rng.random((total, theta.p))
    out = np.empty((n_samples, theta.p))
    _gibbs_chain(theta.matrix(), uniforms, burn_in, thin, n_samples, out)
    return out
