"""Adaptive density estimation over streaming feature representations.

A fixed-size set of centroids summarizes every sample retained so far.
Each centroid carries a lifetime assignment count and a balancing weight;
density queries evaluate a weighted Gaussian kernel density estimate over
the centroids with a shared diagonal bandwidth. Crowded regions of feature
space accumulate large counts and therefore large weights, which raises
the estimated density there and lets downstream selection favor rare
samples. The centroid set is updated once per batch from the retained
samples only, so the estimate tracks the feature distribution as the
network drifts during training.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .validation import as_float_matrix, as_float_vector, check_positive_int

BANDWIDTH_RULES = ("silverman", "scott", "identity")
DEFAULT_BANDWIDTH_FLOOR = 1e-12

_LOG_2PI = math.log(2.0 * math.pi)


def silverman_factor(n_kernels: int, dim: int) -> float:
    """Rule-of-thumb scale applied to the per-dimension spread: (4 / ((d+2) n))^(1/(d+4))."""
    return (4.0 / ((dim + 2) * n_kernels)) ** (1.0 / (dim + 4))


def scott_factor(n_kernels: int, dim: int) -> float:
    """Scott's scale n^(-1/(d+4))."""
    return float(n_kernels) ** (-1.0 / (dim + 4))


def compute_bandwidth(
    positions,
    rule: str = "silverman",
    floor: float = DEFAULT_BANDWIDTH_FLOOR,
) -> np.ndarray:
    """Diagonal bandwidth (variance per dimension) from kernel positions.

    For ``silverman`` and ``scott`` the square root of each entry is the
    rule's scale factor times the population standard deviation of the
    positions along that dimension; ``identity`` returns ones. Every entry
    is floored at ``floor`` so degenerate dimensions cannot produce a zero
    bandwidth.
    """
    positions = as_float_matrix(positions, "positions")
    n_kernels, dim = positions.shape
    if rule == "identity":
        h = np.ones(dim)
    elif rule in ("silverman", "scott"):
        factor = (
            silverman_factor(n_kernels, dim)
            if rule == "silverman"
            else scott_factor(n_kernels, dim)
        )
        sigma = positions.std(axis=0)
        h = (factor * sigma) ** 2
    else:
        raise ValueError(f"unknown bandwidth rule {rule!r}; expected one of {BANDWIDTH_RULES}")
    return np.maximum(h, floor)


def log_gaussian_kernel(offsets, bandwidth) -> np.ndarray:
    """Log of the scaled multivariate normal kernel for each offset row.

    log K(x) = -1/2 (d log 2pi + sum_d log h_d + sum_d x_d^2 / h_d)
    with a diagonal bandwidth. Working in log space keeps the determinant
    term finite for large d.
    """
    offsets = as_float_matrix(offsets, "offsets")
    bw = as_float_vector(bandwidth, "bandwidth", size=offsets.shape[1])
    quad = ((offsets * offsets) / bw).sum(axis=1)
    log_norm = offsets.shape[1] * _LOG_2PI + np.log(bw).sum()
    return -0.5 * (log_norm + quad)


def gaussian_kernel(offset, bandwidth) -> float:
    """Kernel value for a single offset vector.

    Evaluated in log space and exponentiated at the end; extreme distances
    may round to exactly 0.0.
    """
    return float(np.exp(log_gaussian_kernel(np.atleast_2d(offset), bandwidth))[0])


class AdaptiveDensityEstimator(BaseEstimator):
    """Streaming weighted kernel density estimator over a centroid summary.

    The estimator starts empty and seeds itself from the first
    ``n_centroids`` distinct rows passed to :meth:`partial_fit`. After that,
    each :meth:`partial_fit` call runs one serialized update round: rows are
    assigned to their nearest centroid, centroid positions move by an
    exponentially discounted blend toward the new assignments, lifetime
    counts accumulate, balancing weights are rebuilt, and the bandwidth is
    refreshed. Density queries via :meth:`estimate_density` are read-only
    and may run concurrently against a fixed state.

    Parameters
    ----------
    n_centroids : int
        Number of summary kernels.
    bandwidth_rule : {"silverman", "scott", "identity"}
        Diagonal bandwidth selection rule.
    ema_beta : float
        Discount applied to the previous centroid position during updates.
    update_mode : {"normalized", "literal"}
        ``normalized`` divides the blended position by the sum of the blend
        coefficients; ``literal`` divides by the updated lifetime count,
        which shrinks positions toward the origin when the count dwarfs the
        discounted history (kept for fidelity experiments).
    unit_weights : bool
        When true every balancing weight is fixed at 1 instead of being
        rebuilt from the counts.
    bandwidth_floor : float
        Lower bound for each diagonal bandwidth entry.

    Attributes
    ----------
    centroids_ : ndarray of shape (n_centroids, dim)
    counts_ : ndarray of int, lifetime assignments per centroid
    weights_ : ndarray, balancing weights
    bandwidth_ : ndarray of shape (dim,)
    iteration_ : int, completed update rounds since initialization
    dim_ : int
    initialized_ : bool
    """

    def __init__(
        self,
        n_centroids: int = 64,
        bandwidth_rule: str = "silverman",
        ema_beta: float = 0.01,
        update_mode: str = "normalized",
        unit_weights: bool = False,
        bandwidth_floor: float = DEFAULT_BANDWIDTH_FLOOR,
    ):
        self.n_centroids = n_centroids
        self.bandwidth_rule = bandwidth_rule
        self.ema_beta = ema_beta
        self.update_mode = update_mode
        self.unit_weights = unit_weights
        self.bandwidth_floor = bandwidth_floor

    # -- state ------------------------------------------------------------

    @property
    def is_initialized(self) -> bool:
        return getattr(self, "initialized_", False)

    def _require_initialized(self):
        if not self.is_initialized:
            raise NotFittedError(
                "estimator has no centroids yet; feed it representations "
                "via partial_fit until seeding completes"
            )

    # -- update phase -----------------------------------------------------

    def partial_fit(self, X):
        """Run one serialized update round on a batch of representations.

        While uninitialized this accumulates distinct seed rows; rows left
        over in the batch that completes seeding are discarded. Once
        initialized it performs assign / move centroids / rebuild weights /
        refresh bandwidth, in that order.
        """
        X = as_float_matrix(X, "X")
        if not self.is_initialized:
            self._seed(X)
            return self
        X = as_float_matrix(X, "X", dim=self.dim_)
        self.iteration_ += 1
        partition = self.assign(X)
        self.update_centroids(partition, X)
        self.update_weights()
        self.refresh_bandwidth()
        return self

    def _seed(self, X):
        check_positive_int(self.n_centroids, "n_centroids")
        if not hasattr(self, "_pending_seeds"):
            self._pending_seeds = []
        for row in X:
            if any(np.array_equal(row, seen) for seen in self._pending_seeds):
                continue
            self._pending_seeds.append(row.copy())
            if len(self._pending_seeds) == self.n_centroids:
                break
        if len(self._pending_seeds) < self.n_centroids:
            return
        self.centroids_ = np.vstack(self._pending_seeds)
        self.dim_ = self.centroids_.shape[1]
        self.counts_ = np.ones(self.n_centroids, dtype=np.int64)
        self.iteration_ = 0
        self.initialized_ = True
        del self._pending_seeds
        self.update_weights()
        self.refresh_bandwidth()

    def assign(self, X) -> list[np.ndarray]:
        """Partition rows by nearest centroid in squared Euclidean distance.

        Ties go to the lowest centroid index. Returns one index array per
        centroid; every row index appears in exactly one of them.
        """
        self._require_initialized()
        X = as_float_matrix(X, "X", dim=self.dim_)
        diffs = X[:, None, :] - self.centroids_[None, :, :]
        sq_dist = (diffs * diffs).sum(axis=2)
        labels = sq_dist.argmin(axis=1)
        return [np.flatnonzero(labels == j) for j in range(self.n_centroids)]

    def update_centroids(self, partition, X):
        """Move centroids toward their assigned rows and accumulate counts.

        A centroid with an empty assignment keeps its position; counts grow
        by the assignment size either way.
        """
        self._require_initialized()
        X = as_float_matrix(X, "X", dim=self.dim_)
        beta = self.ema_beta
        for j, idx in enumerate(partition):
            size = len(idx)
            if size == 0:
                continue
            prev_count = int(self.counts_[j])
            blended = beta * prev_count * self.centroids_[j] + (1.0 - beta) * X[idx].sum(axis=0)
            if self.update_mode == "normalized":
                denom = beta * prev_count + (1.0 - beta) * size
            elif self.update_mode == "literal":
                denom = prev_count + size
            else:
                raise ValueError(
                    f"unknown update_mode {self.update_mode!r}; "
                    "expected 'normalized' or 'literal'"
                )
            self.centroids_[j] = blended / denom
        sizes = np.array([len(idx) for idx in partition], dtype=np.int64)
        self.counts_ += sizes

    def update_weights(self):
        """Rebuild balancing weights from lifetime counts.

        Weights are the counts normalized to a unit total, so centroids
        that absorbed more retained samples contribute more density. With
        ``unit_weights`` every weight is 1 instead.
        """
        self._require_initialized()
        if self.unit_weights:
            self.weights_ = np.ones(self.n_centroids)
        else:
            self.weights_ = self.counts_ / self.counts_.sum()

    def refresh_bandwidth(self):
        """Recompute the diagonal bandwidth from the current centroids."""
        self._require_initialized()
        self.bandwidth_ = compute_bandwidth(
            self.centroids_, self.bandwidth_rule, self.bandwidth_floor
        )

    # -- query phase ------------------------------------------------------

    def estimate_density(self, X) -> np.ndarray:
        """Weighted kernel density estimate for each row of ``X``.

        Returns sum_j (w_j / n_centroids) K(x - c_j) per row. Kernels are
        evaluated in log space and exponentiated, so values can underflow
        to 0.0 far from every centroid. Each row's result depends only on
        that row, making chunked or parallel evaluation exact.
        """
        self._require_initialized()
        X = as_float_matrix(X, "X", dim=self.dim_)
        diffs = X[:, None, :] - self.centroids_[None, :, :]
        quad = ((diffs * diffs) / self.bandwidth_).sum(axis=2)
        log_norm = self.dim_ * _LOG_2PI + np.log(self.bandwidth_).sum()
        log_kernels = -0.5 * (log_norm + quad)
        coef = self.weights_ / self.n_centroids
        return (np.exp(log_kernels) * coef).sum(axis=1)

    # -- checkpoint support -------------------------------------------------

    def get_state(self) -> dict:
        """Serializable snapshot of the mutable state."""
        if self.is_initialized:
            return {
                "initialized": True,
                "dim": int(self.dim_),
                "iteration": int(self.iteration_),
                "centroids": self.centroids_.tolist(),
                "counts": self.counts_.tolist(),
                "weights": self.weights_.tolist(),
                "bandwidth": self.bandwidth_.tolist(),
            }
        pending = [row.tolist() for row in getattr(self, "_pending_seeds", [])]
        return {"initialized": False, "pending": pending}

    def set_state(self, state: dict):
        """Restore a snapshot produced by :meth:`get_state`."""
        if state["initialized"]:
            if len(state["centroids"]) != self.n_centroids:
                raise ValueError(
                    f"state holds {len(state['centroids'])} centroids but the "
                    f"estimator is configured for {self.n_centroids}"
                )
            self.centroids_ = np.asarray(state["centroids"], dtype=np.float64)
            self.counts_ = np.asarray(state["counts"], dtype=np.int64)
            self.weights_ = np.asarray(state["weights"], dtype=np.float64)
            self.bandwidth_ = np.asarray(state["bandwidth"], dtype=np.float64)
            self.dim_ = int(state["dim"])
            self.iteration_ = int(state["iteration"])
            self.initialized_ = True
        else:
            self._pending_seeds = [
                np.asarray(row, dtype=np.float64) for row in state["pending"]
            ]
            for attr in ("centroids_", "counts_", "weights_", "bandwidth_",
                         "dim_", "iteration_", "initialized_"):
                if hasattr(self, attr):
                    delattr(self, attr)
        return self

    @classmethod
    def from_state(cls, state: dict, **params) -> "AdaptiveDensityEstimator":
        """Build an estimator directly from a state snapshot."""
        return cls(**params).set_state(state)
