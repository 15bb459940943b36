"""Compact per-sample representations from shallow-layer feature maps.

A raw feature map (height x width x channels) is reduced in two steps:
spatial average pooling collapses the grid to one value per channel, then
contiguous channel groups are averaged down to the target dimension. Both
steps are mean-preserving, so a constant map stays constant all the way
through the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import as_float_vector, check_positive_int


@dataclass(frozen=True)
class FeatureMap:
    """A spatial feature map stored flat in row-major (h, w, d) order."""

    height: int
    width: int
    channels: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        check_positive_int(self.height, "height")
        check_positive_int(self.width, "width")
        check_positive_int(self.channels, "channels")
        expected = self.height * self.width * self.channels
        values = as_float_vector(self.values, "values", size=expected)
        object.__setattr__(self, "values", values)

    def grid(self) -> np.ndarray:
        """View as an (height, width, channels) array."""
        return self.values.reshape(self.height, self.width, self.channels)


@dataclass(frozen=True)
class Representation:
    """A pooled, channel-reduced feature vector for one sample."""

    dim: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        check_positive_int(self.dim, "dim")
        values = as_float_vector(self.values, "values", size=self.dim)
        object.__setattr__(self, "values", values)


def spatial_pool(fmap: FeatureMap) -> np.ndarray:
    """Average every channel over all spatial positions.

    Returns a vector of length ``fmap.channels``.
    """
    flat = fmap.values.reshape(fmap.height * fmap.width, fmap.channels)
    return flat.mean(axis=0)


def channel_downsample(vector, target_dim: int) -> Representation:
    """Reduce a channel vector by averaging non-overlapping contiguous groups.

    ``target_dim`` must divide the input length; entry ``k`` of the result is
    the mean of the k-th group of ``len(vector) / target_dim`` input entries.

    Raises
    ------
    ValueError
        If ``target_dim`` does not divide the input length or exceeds it.
    """
    vec = as_float_vector(vector, "vector")
    check_positive_int(target_dim, "target_dim")
    n = vec.size
    if target_dim > n or n % target_dim != 0:
        raise ValueError(
            f"target_dim {target_dim} must divide the channel count {n}"
        )
    group = n // target_dim
    values = vec.reshape(target_dim, group).mean(axis=1)
    return Representation(target_dim, values)


def pool_representation(fmap: FeatureMap, target_dim: int) -> Representation:
    """Full pipeline for one sample: spatial pooling, then channel reduction."""
    return channel_downsample(spatial_pool(fmap), target_dim)


def pool_feature_rows(features: np.ndarray, target_dim: int) -> np.ndarray:
    """Vectorized pipeline for a batch of 1x1 feature maps.

    ``features`` has shape (n, channels); each row is treated as a
    1 x 1 x channels map, so spatial pooling is the identity and only the
    channel reduction applies. Returns an (n, target_dim) array equal
    row-for-row to :func:`pool_representation`.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {feats.shape}")
    n_rows, channels = feats.shape
    check_positive_int(target_dim, "target_dim")
    if target_dim > channels or channels % target_dim != 0:
        raise ValueError(
            f"target_dim {target_dim} must divide the channel count {channels}"
        )
    group = channels // target_dim
    return feats.reshape(n_rows, target_dim, group).mean(axis=2)


class FeaturePooler(BaseEstimator, TransformerMixin):
    """Stateless transformer wrapping the pooling pipeline.

    Accepts either stacked feature maps of shape (n, height, width, channels)
    or already-pooled rows of shape (n, channels) and produces
    (n, target_dim) representations.
    """

    def __init__(self, target_dim: int = 128):
        self.target_dim = target_dim

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        channels = X.shape[-1]
        check_positive_int(self.target_dim, "target_dim")
        if self.target_dim > channels or channels % self.target_dim != 0:
            raise ValueError(
                f"target_dim {self.target_dim} must divide the channel "
                f"count {channels}"
            )
        self.n_channels_ = channels
        return self

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 4:
            X = X.mean(axis=(1, 2))
        elif X.ndim != 2:
            raise ValueError(
                f"X must have shape (n, h, w, c) or (n, c), got {X.shape}"
            )
        return pool_feature_rows(X, self.target_dim)
