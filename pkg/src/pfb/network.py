"""Two-stage multilayer perceptron with explicit forward and backward passes.

The network splits into a shallow stage (one affine layer plus rectifier,
producing the features used for importance scoring) and a deep stage (one
hidden affine+rectifier layer and an affine output head with softmax
cross-entropy). The deep stage only ever sees the retained rows of a
batch; their features are reused from the shallow pass rather than
recomputed, and gradients flow back through those cached features into the
shallow parameters. Everything runs in float64 so gradients can be checked
against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .validation import check_positive_int

PARAM_NAMES = ("w_shallow", "b_shallow", "w_hidden", "b_hidden", "w_out", "b_out")


@dataclass(frozen=True)
class NetDims:
    """Layer sizes: input -> feature (shallow) -> hidden -> classes (deep)."""

    input_dim: int
    feature_dim: int
    hidden_dim: int
    class_count: int

    def __post_init__(self):
        for name in ("input_dim", "feature_dim", "hidden_dim", "class_count"):
            check_positive_int(getattr(self, name), name)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "feature_dim": self.feature_dim,
            "hidden_dim": self.hidden_dim,
            "class_count": self.class_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetDims":
        return cls(int(d["input_dim"]), int(d["feature_dim"]),
                   int(d["hidden_dim"]), int(d["class_count"]))


@dataclass
class BatchTensors:
    """One batch: raw inputs, class labels, and cached shallow features."""

    inputs: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    features: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"inputs have {self.inputs.shape[0]} rows but labels have "
                f"{self.labels.shape[0]}"
            )
        if self.features is not None and self.features.shape[0] != self.inputs.shape[0]:
            raise ValueError("features row count does not match inputs")


class TwoStageNet:
    """MLP with a designated shallow/deep split and hand-written gradients."""

    def __init__(self, dims: NetDims, params: dict[str, np.ndarray]):
        self.dims = dims
        expected = self._shapes(dims)
        for name in PARAM_NAMES:
            arr = np.asarray(params[name], dtype=np.float64)
            if arr.shape != expected[name]:
                raise ValueError(
                    f"{name} has shape {arr.shape}, expected {expected[name]}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            setattr(self, name, arr)
        self.shallow_calls = 0
        self._shallow_cache = None
        self._deep_cache = None

    @staticmethod
    def _shapes(dims: NetDims) -> dict[str, tuple]:
        return {
            "w_shallow": (dims.input_dim, dims.feature_dim),
            "b_shallow": (dims.feature_dim,),
            "w_hidden": (dims.feature_dim, dims.hidden_dim),
            "b_hidden": (dims.hidden_dim,),
            "w_out": (dims.hidden_dim, dims.class_count),
            "b_out": (dims.class_count,),
        }

    @classmethod
    def initialize(cls, dims: NetDims, rng: np.random.Generator) -> "TwoStageNet":
        """Random init: weights ~ N(0, 1/fan_in), biases zero."""
        params = {
            "w_shallow": rng.standard_normal((dims.input_dim, dims.feature_dim))
            / np.sqrt(dims.input_dim),
            "b_shallow": np.zeros(dims.feature_dim),
            "w_hidden": rng.standard_normal((dims.feature_dim, dims.hidden_dim))
            / np.sqrt(dims.feature_dim),
            "b_hidden": np.zeros(dims.hidden_dim),
            "w_out": rng.standard_normal((dims.hidden_dim, dims.class_count))
            / np.sqrt(dims.hidden_dim),
            "b_out": np.zeros(dims.class_count),
        }
        return cls(dims, params)

    def parameters(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "TwoStageNet":
        return TwoStageNet(self.dims, {k: v.copy() for k, v in self.parameters().items()})

    # -- forward ------------------------------------------------------------

    def shallow_forward(self, inputs) -> np.ndarray:
        """Shallow stage for every row of a batch; caches activations.

        Called exactly once per training batch; the returned features are
        reused by the deep stage for the retained rows.
        """
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.ndim != 2 or inputs.shape[1] != self.dims.input_dim:
            raise ValueError(
                f"inputs must have shape (n, {self.dims.input_dim}), got {inputs.shape}"
            )
        pre = inputs @ self.w_shallow + self.b_shallow
        features = np.maximum(pre, 0.0)
        self.shallow_calls += 1
        self._shallow_cache = (inputs, pre)
        return features

    def deep_forward_loss(self, features_subset, labels_subset):
        """Deep stage on the retained rows only.

        ``features_subset`` must be the cached shallow outputs for exactly
        the retained rows. Returns (per-sample losses, mean loss, logits).
        """
        feats = np.asarray(features_subset, dtype=np.float64)
        labels = np.asarray(labels_subset, dtype=np.int64)
        if feats.shape[0] == 0:
            raise ValueError("every sample was pruned; the deep stage needs at least one row")
        if feats.ndim != 2 or feats.shape[1] != self.dims.feature_dim:
            raise ValueError(
                f"features must have shape (n, {self.dims.feature_dim}), got {feats.shape}"
            )
        if labels.shape != (feats.shape[0],):
            raise ValueError("labels must align one-to-one with feature rows")
        hidden_pre = feats @ self.w_hidden + self.b_hidden
        hidden = np.maximum(hidden_pre, 0.0)
        logits = hidden @ self.w_out + self.b_out
        shifted = logits - logits.max(axis=1, keepdims=True)
        exp = np.exp(shifted)
        sum_exp = exp.sum(axis=1)
        log_probs = shifted - np.log(sum_exp)[:, None]
        losses = -log_probs[np.arange(len(labels)), labels]
        probs = exp / sum_exp[:, None]
        self._deep_cache = (feats, labels, hidden_pre, hidden, probs)
        return losses, float(losses.mean()), logits

    def forward_logits(self, inputs) -> np.ndarray:
        """Full pass without caching or instrumentation (evaluation only)."""
        inputs = np.asarray(inputs, dtype=np.float64)
        feats = np.maximum(inputs @ self.w_shallow + self.b_shallow, 0.0)
        hidden = np.maximum(feats @ self.w_hidden + self.b_hidden, 0.0)
        return hidden @ self.w_out + self.b_out

    def predict(self, inputs) -> np.ndarray:
        return self.forward_logits(inputs).argmax(axis=1)

    # -- backward -----------------------------------------------------------

    def gradients(self, batch: BatchTensors, decision) -> dict[str, np.ndarray]:
        """Analytic gradients of the mean retained loss for every parameter.

        Requires the caches from :meth:`shallow_forward` over the full batch
        and :meth:`deep_forward_loss` over the retained rows. Pruned rows
        contribute exactly zero to every gradient.
        """
        if self._shallow_cache is None or self._deep_cache is None:
            raise RuntimeError("run shallow_forward and deep_forward_loss first")
        inputs, shallow_pre = self._shallow_cache
        feats, labels, hidden_pre, hidden, probs = self._deep_cache
        retained = np.asarray(decision.retained_indices)
        n_ret = len(retained)
        if feats.shape[0] != n_ret or inputs.shape[0] != len(decision.mask):
            raise ValueError("caches do not match the supplied batch/decision")

        d_logits = probs.copy()
        d_logits[np.arange(n_ret), labels] -= 1.0
        d_logits /= n_ret

        grads = {
            "w_out": hidden.T @ d_logits,
            "b_out": d_logits.sum(axis=0),
        }
        d_hidden = d_logits @ self.w_out.T
        d_hidden_pre = d_hidden * (hidden_pre > 0.0)
        grads["w_hidden"] = feats.T @ d_hidden_pre
        grads["b_hidden"] = d_hidden_pre.sum(axis=0)

        d_feats_full = np.zeros((inputs.shape[0], self.dims.feature_dim))
        d_feats_full[retained] = d_hidden_pre @ self.w_hidden.T
        d_shallow_pre = d_feats_full * (shallow_pre > 0.0)
        grads["w_shallow"] = inputs.T @ d_shallow_pre
        grads["b_shallow"] = d_shallow_pre.sum(axis=0)
        return grads

    def backward_and_step(self, batch: BatchTensors, decision, lr: float):
        """Plain gradient-descent step on the mean retained loss."""
        if lr < 0:
            raise ValueError(f"lr must be non-negative, got {lr}")
        grads = self.gradients(batch, decision)
        for name in PARAM_NAMES:
            param = getattr(self, name)
            param -= lr * grads[name]
        return self


def flops_forward(dims: NetDims, n_total: int, n_retained: int) -> tuple[int, int, int]:
    """Analytic multiply-accumulate counts for one batch's forward pass.

    The shallow stage is charged for every row; the deep stage only for the
    retained rows. Returns (shallow_flops, deep_flops, saved_flops) where
    saved_flops is the deep per-row cost times the pruned row count.
    """
    if n_retained > n_total or n_retained < 0 or n_total < 0:
        raise ValueError(f"invalid row counts: total={n_total}, retained={n_retained}")
    shallow_per_row = dims.input_dim * dims.feature_dim
    deep_per_row = dims.feature_dim * dims.hidden_dim + dims.hidden_dim * dims.class_count
    return (
        n_total * shallow_per_row,
        n_retained * deep_per_row,
        (n_total - n_retained) * deep_per_row,
    )
