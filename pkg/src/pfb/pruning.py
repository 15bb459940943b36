"""Per-batch importance scoring and pruning mask construction.

A sample's importance is the reciprocal of its estimated feature density
plus a small random offset: rare samples (low density) score high and
survive, crowded ones score low and are dropped before the deep forward
pass. The offset is drawn per sample as a uniform fraction of the batch's
maximum density, so selection is mostly density-driven but occasionally
keeps a sample from a crowded region.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .density import AdaptiveDensityEstimator
from .validation import as_float_matrix

_SCORE_CHUNK = 256


@dataclass(frozen=True, slots=True)
class ImportanceScore:
    """Importance of one sample: value = 1 / (density + offset)."""

    value: float
    density: float
    offset: float


@dataclass(frozen=True)
class PruneDecision:
    """Outcome of pruning one batch.

    ``mask`` holds one bit per sample (1 = pruned); ``retained_indices``
    are the zero-mask positions in ascending order; ``threshold`` is the
    importance of the last sample pruned (-inf when nothing is pruned).
    """

    mask: np.ndarray = field(repr=False)
    threshold: float
    retained_indices: np.ndarray = field(repr=False)
    scores: tuple[ImportanceScore, ...] = field(repr=False)

    @property
    def pruned_count(self) -> int:
        return int(self.mask.sum())


def pruned_count(prune_ratio: float, batch_size: int) -> int:
    """floor(prune_ratio * batch_size) against the nominal real product.

    Float products that land a hair under an integer (0.3 * 10 ->
    2.999...96) are snapped up so the count matches the exact value.
    """
    exact = prune_ratio * batch_size
    k = math.floor(exact)
    if exact - k > 1.0 - 1e-9:
        k += 1
    return k


def _density_chunks(reps: np.ndarray, estimator: AdaptiveDensityEstimator,
                    n_threads: int) -> np.ndarray:
    chunks = [reps[i:i + _SCORE_CHUNK] for i in range(0, len(reps), _SCORE_CHUNK)]
    if n_threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(estimator.estimate_density, chunks))
    else:
        parts = [estimator.estimate_density(c) for c in chunks]
    return np.concatenate(parts)


def score_batch(
    reps,
    estimator: AdaptiveDensityEstimator,
    random_bound: float,
    rng: np.random.Generator,
    n_threads: int = 1,
) -> list[ImportanceScore]:
    """Score every representation in a batch.

    Densities come from the estimator's current (immutable) state. Each
    sample independently draws alpha ~ U(0, random_bound) and uses
    offset = alpha * max batch density. If the whole batch has density 0,
    all importances are set to 1 so selection falls through to the
    positional tie-break. The alpha vector is drawn in one call from the
    supplied generator, so results do not depend on evaluation order or
    ``n_threads``.
    """
    if random_bound <= 0:
        raise ValueError(f"random_bound must be positive, got {random_bound}")
    reps = as_float_matrix(reps, "reps")
    densities = _density_chunks(reps, estimator, n_threads)
    f_max = densities.max()
    if f_max == 0.0:
        return [ImportanceScore(1.0, 0.0, 0.0) for _ in densities]
    alphas = rng.uniform(0.0, random_bound, size=len(densities))
    offsets = alphas * f_max
    values = 1.0 / (densities + offsets)
    return [
        ImportanceScore(float(v), float(d), float(r))
        for v, d, r in zip(values, densities, offsets)
    ]


def prune(scores, prune_ratio: float) -> PruneDecision:
    """Drop the lowest-importance fraction of a batch.

    Exactly ``floor(prune_ratio * len(scores))`` samples are pruned; ties at
    the cut are resolved by pruning the lower batch index first, so the mask
    is deterministic for a fixed score sequence.
    """
    scores = tuple(scores)
    if not scores:
        raise ValueError("scores must be non-empty")
    if not 0.0 <= prune_ratio < 1.0:
        raise ValueError(f"prune_ratio must lie in [0, 1), got {prune_ratio}")
    n = len(scores)
    k = pruned_count(prune_ratio, n)
    values = np.array([s.value for s in scores])
    order = np.argsort(values, kind="stable")
    mask = np.zeros(n, dtype=np.int8)
    mask[order[:k]] = 1
    threshold = float(values[order[k - 1]]) if k > 0 else float("-inf")
    retained = np.flatnonzero(mask == 0)
    return PruneDecision(mask=mask, threshold=threshold,
                         retained_indices=retained, scores=scores)


def retain_all(batch_size: int) -> PruneDecision:
    """Decision that keeps every sample (used outside the pruning window)."""
    if batch_size <= 0:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    return PruneDecision(
        mask=np.zeros(batch_size, dtype=np.int8),
        threshold=float("-inf"),
        retained_indices=np.arange(batch_size),
        scores=(),
    )
