"""Synthetic Gaussian-mixture datasets with per-sample component tags.

Each sample remembers which mixture component generated it. The tags are
diagnostic only: the training loop uses them to measure how pruning treats
rare versus common components, and they never reach the pruner.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import check_positive_int

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class MixtureSpec:
    """A diagonal Gaussian mixture with one class label per component."""

    means: np.ndarray = field(repr=False)
    variances: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    n_samples: int = 1024

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        variances = np.atleast_2d(np.asarray(self.variances, dtype=np.float64))
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        k, dim = means.shape
        if variances.shape != (k, dim):
            raise ValueError(
                f"variances shape {variances.shape} does not match means {means.shape}"
            )
        if weights.shape != (k,) or labels.shape != (k,):
            raise ValueError("weights and labels need one entry per component")
        if np.any(variances <= 0):
            raise ValueError("variances must be strictly positive")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        if np.any(labels < 0):
            raise ValueError("class labels must be non-negative")
        check_positive_int(self.n_samples, "n_samples")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "labels", labels)

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "weights": self.weights.tolist(),
            "labels": self.labels.tolist(),
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureSpec":
        return cls(
            means=np.asarray(d["means"], dtype=np.float64),
            variances=np.asarray(d["variances"], dtype=np.float64),
            weights=np.asarray(d["weights"], dtype=np.float64),
            labels=np.asarray(d["labels"], dtype=np.int64),
            n_samples=int(d["n_samples"]),
        )


@dataclass(frozen=True)
class LabeledDataset:
    """Drawn samples plus labels and generating-component tags."""

    inputs: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    components: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.inputs.shape[0]


def generate_dataset(spec: MixtureSpec, seed) -> LabeledDataset:
    """Draw ``spec.n_samples`` points from the mixture, deterministically.

    ``seed`` may be anything ``numpy.random.default_rng`` accepts (an int or
    a SeedSequence). Component choices are drawn first, then one Gaussian
    noise block, so the output is a pure function of (spec, seed).
    """
    rng = np.random.default_rng(seed)
    comps = rng.choice(spec.n_components, size=spec.n_samples, p=spec.weights)
    noise = rng.standard_normal((spec.n_samples, spec.dim))
    inputs = spec.means[comps] + np.sqrt(spec.variances[comps]) * noise
    return LabeledDataset(
        inputs=inputs,
        labels=spec.labels[comps],
        components=comps,
    )


def block_mixture(
    n_components: int = 4,
    dim: int = 32,
    separation: float = 2.5,
    variance: float = 1.0,
    weights=None,
    n_samples: int = 2048,
) -> MixtureSpec:
    """Mixture whose component means light up disjoint coordinate blocks.

    Component c places ``separation`` on its own block of ``dim /
    n_components`` coordinates and zero elsewhere, giving well-defined but
    overlapping classes. Used as the default dataset and by the tests.
    """
    if dim % n_components != 0:
        raise ValueError("dim must be a multiple of n_components")
    block = dim // n_components
    means = np.zeros((n_components, dim))
    for c in range(n_components):
        means[c, c * block:(c + 1) * block] = separation
    if weights is None:
        weights = np.full(n_components, 1.0 / n_components)
    return MixtureSpec(
        means=means,
        variances=np.full((n_components, dim), variance),
        weights=np.asarray(weights, dtype=np.float64),
        labels=np.arange(n_components),
        n_samples=n_samples,
    )
