"""Brute-force reference implementations for tests and acceptance checks.

Everything here deliberately re-derives its result with straight-line
arithmetic that shares no code with the modules under test: plain Python
loops, ``math`` scalars and literal formula order. The oracles are slow by
design and restricted to small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import PARAM_NAMES, TwoStageNet


@dataclass(frozen=True)
class OracleReport:
    """Summary of a randomized oracle comparison sweep."""

    max_rel_error: float
    max_abs_error: float
    instances: int
    worst_seed: int

    def __post_init__(self):
        if self.max_rel_error < 0 or self.max_abs_error < 0:
            raise ValueError("errors must be non-negative")


# -- density ---------------------------------------------------------------


def brute_force_density(x, centroids, weights, bandwidth) -> float:
    """Weighted Gaussian KDE evaluated term by term in literal order."""
    x = [float(v) for v in np.asarray(x).ravel()]
    bw = [float(h) for h in np.asarray(bandwidth).ravel()]
    cents = np.asarray(centroids, dtype=np.float64)
    ws = [float(w) for w in np.asarray(weights).ravel()]
    n_c = cents.shape[0]
    d = len(x)
    prefactor = 1.0 / ((2.0 * math.pi) ** (d / 2.0) * math.sqrt(math.prod(bw)))
    total = 0.0
    for j in range(n_c):
        quad = 0.0
        for k in range(d):
            diff = x[k] - float(cents[j, k])
            quad += diff * diff / bw[k]
        total += (ws[j] / n_c) * prefactor * math.exp(-0.5 * quad)
    return total


# -- assignment --------------------------------------------------------------


def exhaustive_assign(batch, centroids) -> list[list[int]]:
    """Nearest-centroid partition from a full pairwise distance table.

    Ties resolve to the lowest centroid index, matching the streaming
    estimator's rule.
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    cents = np.atleast_2d(np.asarray(centroids, dtype=np.float64))
    if batch.size == 0:
        batch = batch.reshape(0, cents.shape[1])
    partition: list[list[int]] = [[] for _ in range(cents.shape[0])]
    for i in range(batch.shape[0]):
        best_j = 0
        best_d = math.inf
        for j in range(cents.shape[0]):
            dist = 0.0
            for k in range(cents.shape[1]):
                diff = float(batch[i, k]) - float(cents[j, k])
                dist += diff * diff
            if dist < best_d:
                best_d = dist
                best_j = j
        partition[best_j].append(i)
    return partition


# -- network ------------------------------------------------------------------


def reference_loss(params: dict, inputs, labels, retained_indices) -> float:
    """Mean retained softmax cross-entropy, re-derived with scalar loops."""
    w_sh = np.asarray(params["w_shallow"])
    b_sh = np.asarray(params["b_shallow"])
    w_h = np.asarray(params["w_hidden"])
    b_h = np.asarray(params["b_hidden"])
    w_o = np.asarray(params["w_out"])
    b_o = np.asarray(params["b_out"])
    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    losses = []
    for i in retained_indices:
        x = inputs[int(i)]
        feat = [
            max(0.0, math.fsum(x[a] * w_sh[a, k] for a in range(len(x))) + b_sh[k])
            for k in range(w_sh.shape[1])
        ]
        hidden = [
            max(0.0, math.fsum(feat[a] * w_h[a, k] for a in range(len(feat))) + b_h[k])
            for k in range(w_h.shape[1])
        ]
        logits = [
            math.fsum(hidden[a] * w_o[a, k] for a in range(len(hidden))) + b_o[k]
            for k in range(w_o.shape[1])
        ]
        peak = max(logits)
        lse = peak + math.log(math.fsum(math.exp(v - peak) for v in logits))
        losses.append(lse - logits[int(labels[int(i)])])
    return math.fsum(losses) / len(losses)


def finite_difference_grad(
    net: TwoStageNet,
    batch,
    decision,
    step: float = 1e-5,
) -> dict[str, np.ndarray]:
    """Central-difference gradient of the mean retained loss per parameter.

    Evaluates the loss through :func:`reference_loss`, so the estimate is
    independent of both the network's forward and backward code paths.
    """
    params = {k: v.copy() for k, v in net.parameters().items()}
    retained = np.asarray(decision.retained_indices)
    grads = {}
    for name in PARAM_NAMES:
        base = params[name]
        grad = np.zeros_like(base)
        flat = base.reshape(-1)
        grad_flat = grad.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + step
            loss_plus = reference_loss(params, batch.inputs, batch.labels, retained)
            flat[idx] = original - step
            loss_minus = reference_loss(params, batch.inputs, batch.labels, retained)
            flat[idx] = original
            grad_flat[idx] = (loss_plus - loss_minus) / (2.0 * step)
        grads[name] = grad
    return grads


# -- randomized comparison sweeps ---------------------------------------------


def compare_density_estimates(
    n_instances: int = 1000,
    seed: int = 0,
    max_centroids: int = 16,
    max_dim: int = 8,
) -> OracleReport:
    """Compare the streaming estimator's density to the brute-force sum.

    Each instance draws a random centroid set, weights, bandwidth and query
    point, then evaluates both paths. Returns the worst relative and
    absolute errors across all instances.
    """
    from .density import AdaptiveDensityEstimator

    max_rel = 0.0
    max_abs = 0.0
    worst = seed
    for inst in range(n_instances):
        inst_seed = seed + inst
        rng = np.random.default_rng(inst_seed)
        n_c = int(rng.integers(1, max_centroids + 1))
        dim = int(rng.integers(1, max_dim + 1))
        cents = rng.normal(size=(n_c, dim))
        weights = rng.uniform(0.1, 1.0, size=n_c)
        weights = weights / weights.sum()
        bw = rng.uniform(0.25, 4.0, size=dim)
        x = rng.normal(size=dim)
        est = AdaptiveDensityEstimator.from_state(
            {
                "initialized": True,
                "dim": dim,
                "iteration": 1,
                "centroids": cents.tolist(),
                "counts": np.ones(n_c, dtype=int).tolist(),
                "weights": weights.tolist(),
                "bandwidth": bw.tolist(),
            },
            n_centroids=n_c,
        )
        fast = float(est.estimate_density(x.reshape(1, -1))[0])
        slow = brute_force_density(x, cents, weights, bw)
        abs_err = abs(fast - slow)
        rel_err = abs_err / max(abs(slow), 1e-300)
        if rel_err > max_rel:
            max_rel = rel_err
            worst = inst_seed
        max_abs = max(max_abs, abs_err)
    return OracleReport(max_rel, max_abs, n_instances, worst)


def compare_assignments(
    n_instances: int = 1000,
    seed: int = 0,
    max_centroids: int = 16,
    max_dim: int = 8,
    max_batch: int = 24,
) -> OracleReport:
    """Check the streaming assignment against the exhaustive distance table.

    ``max_abs_error`` reports the number of instances whose partitions
    differ (0.0 means full agreement); ``max_rel_error`` is the mismatch
    fraction.
    """
    from .density import AdaptiveDensityEstimator

    mismatches = 0
    worst = seed
    for inst in range(n_instances):
        inst_seed = seed + inst
        rng = np.random.default_rng(inst_seed)
        n_c = int(rng.integers(1, max_centroids + 1))
        dim = int(rng.integers(1, max_dim + 1))
        n_rows = int(rng.integers(1, max_batch + 1))
        cents = rng.normal(size=(n_c, dim))
        batch = rng.normal(size=(n_rows, dim))
        est = AdaptiveDensityEstimator.from_state(
            {
                "initialized": True,
                "dim": dim,
                "iteration": 1,
                "centroids": cents.tolist(),
                "counts": np.ones(n_c, dtype=int).tolist(),
                "weights": (np.ones(n_c) / n_c).tolist(),
                "bandwidth": np.ones(dim).tolist(),
            },
            n_centroids=n_c,
        )
        fast = [idx.tolist() for idx in est.assign(batch)]
        slow = exhaustive_assign(batch, cents)
        if fast != slow:
            mismatches += 1
            worst = inst_seed
    return OracleReport(mismatches / n_instances, float(mismatches), n_instances, worst)
