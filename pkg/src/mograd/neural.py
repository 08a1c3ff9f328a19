"""Small dense networks with hand-rolled backpropagation.

Parameters live in structured form (per-layer weight matrix and bias) but
every gradient is returned as a single flat vector with a fixed layout:
layer by layer, weight entries row-major, then the bias. That layout is
what the descent loops in :mod:`mograd.optimize` operate on.

Per-sample losses are cross-entropies and per-class or per-task losses are
*sums* (not means) over their samples, so a class with more samples in the
batch produces a proportionally larger gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError

__all__ = [
    "MlpParams",
    "TwoHeadMlp",
    "ClassLossSpec",
    "init_mlp",
    "init_two_head_mlp",
    "forward",
    "cross_entropy",
    "per_class_losses",
    "weighted_total_gradient",
    "two_task_gradients",
    "predict_two_task",
]


@dataclass
class MlpParams:
    """Feedforward parameters: rectifier between layers, linear last layer.

    ``layers[j]`` is ``(W_j, b_j)`` with W_j of shape (d_out, d_in). The
    flat-vector view concatenates, per layer, the row-major weight entries
    followed by the bias; ``flatten``/``from_flat`` round-trip bitwise.
    """

    layers: list[tuple[np.ndarray, np.ndarray]]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("need at least one layer")
        prev_out = None
        for j, (W, b) in enumerate(self.layers):
            if W.ndim != 2 or b.ndim != 1 or b.shape[0] != W.shape[0]:
                raise ValueError(f"layer {j}: weight {W.shape} and bias {b.shape} do not chain")
            if prev_out is not None and W.shape[1] != prev_out:
                raise ValueError(
                    f"layer {j}: input dim {W.shape[1]} does not match previous output {prev_out}"
                )
            prev_out = W.shape[0]

    @property
    def dims(self) -> list[int]:
        return [self.layers[0][0].shape[1]] + [W.shape[0] for W, _ in self.layers]

    @property
    def n_params(self) -> int:
        return sum(W.size + b.size for W, b in self.layers)

    def flatten(self) -> np.ndarray:
        return np.concatenate([np.concatenate([W.ravel(), b]) for W, b in self.layers])

    @classmethod
    def from_flat(cls, flat: np.ndarray, dims: list[int]) -> "MlpParams":
        flat = np.asarray(flat, dtype=float)
        layers = []
        offset = 0
        for d_in, d_out in zip(dims[:-1], dims[1:]):
            W = flat[offset : offset + d_in * d_out].reshape(d_out, d_in).copy()
            offset += d_in * d_out
            b = flat[offset : offset + d_out].copy()
            offset += d_out
            layers.append((W, b))
        if offset != flat.shape[0]:
            raise ValueError(f"flat vector of length {flat.shape[0]} does not match dims {dims}")
        return cls(layers)

    def copy(self) -> "MlpParams":
        return MlpParams([(W.copy(), b.copy()) for W, b in self.layers])


def init_mlp(dims: list[int], rng: np.random.Generator | int) -> MlpParams:
    """Seeded initialization: weights uniform in +-sqrt(6/(fan_in+fan_out)), biases 0."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    layers = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (d_in + d_out))
        layers.append((rng.uniform(-bound, bound, size=(d_out, d_in)), np.zeros(d_out)))
    return MlpParams(layers)


def _forward_cached(net: MlpParams, X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """All layer inputs plus the final logits, for reuse by backprop."""
    activations = [X]
    a = X
    for W, b in net.layers[:-1]:
        a = np.maximum(a @ W.T + b, 0.0)
        activations.append(a)
    W, b = net.layers[-1]
    return activations, a @ W.T + b


def forward(net: MlpParams, x) -> np.ndarray:
    """Logits for a single feature vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    X = x[None, :] if x.ndim == 1 else x
    if X.ndim != 2 or X.shape[1] != net.dims[0]:
        raise ValueError(f"input of shape {x.shape} does not match input dim {net.dims[0]}")
    _, logits = _forward_cached(net, X)
    return logits[0] if x.ndim == 1 else logits


def _backward(
    net: MlpParams, activations: list[np.ndarray], dlogits: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Flat parameter gradient and input gradient for an upstream dlogits."""
    grads: list[np.ndarray] = []
    delta = dlogits
    for j in range(len(net.layers) - 1, -1, -1):
        W, _ = net.layers[j]
        grads.append(np.concatenate([(delta.T @ activations[j]).ravel(), delta.sum(axis=0)]))
        upstream = delta @ W
        delta = upstream * (activations[j] > 0) if j > 0 else upstream
    return np.concatenate(grads[::-1]), delta


def cross_entropy(logits, label: int) -> float:
    """Negative log-softmax of the labeled class, stable for huge logits."""
    z = np.asarray(logits, dtype=float)
    if z.ndim != 1:
        raise ValueError("expected a single logits vector")
    if not 0 <= label < z.shape[0]:
        raise ValueError(f"label {label} out of range for {z.shape[0]} classes")
    m = z.max()
    return float(m + np.log(np.exp(z - m).sum()) - z[label])


def _ce_sum(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Summed cross-entropy over rows and its gradient (softmax minus one-hot)."""
    m = logits.max(axis=1, keepdims=True)
    shifted = logits - m
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    rows = np.arange(logits.shape[0])
    loss = float(np.sum(np.log(total[:, 0]) + m[:, 0] - logits[rows, labels]))
    dlogits = exp / total
    dlogits[rows, labels] -= 1.0
    return loss, dlogits


@dataclass(frozen=True)
class ClassLossSpec:
    """Per-class loss weights, plus optional dataset-level class index sets."""

    class_weights: np.ndarray
    class_index_sets: tuple[np.ndarray, ...] | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.class_weights, dtype=float)
        if w.ndim != 1 or w.shape[0] < 1:
            raise ValueError("class_weights must be a nonempty vector")
        if np.any(w < 0):
            raise ValueError("class weights must be nonnegative")
        object.__setattr__(self, "class_weights", w)
        if self.class_index_sets is not None:
            seen: set[int] = set()
            for idx in self.class_index_sets:
                as_set = set(int(i) for i in np.asarray(idx).ravel())
                if seen & as_set:
                    raise ValueError("class index sets must be disjoint")
                seen |= as_set

    @property
    def n_classes(self) -> int:
        return self.class_weights.shape[0]


def per_class_losses(
    net: MlpParams, X, y, spec: ClassLossSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Summed cross-entropy and flat gradient for each class separately.

    Loss i sums over the batch rows labeled i (an absent class contributes
    zero loss and a zero gradient); gradient i is the backpropagation of
    loss i alone. Summing the per-class losses reproduces the whole-batch
    loss exactly, since the classes partition the batch.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("expected a nonempty (N, m) batch")
    if y.shape != (X.shape[0],):
        raise ValueError("labels must match the batch rows")
    c = spec.n_classes
    if np.any(y < 0) or np.any(y >= c):
        raise ValueError(f"labels must lie in [0, {c})")

    activations, logits = _forward_cached(net, X)
    if not np.all(np.isfinite(logits)):
        raise NumericalError("non-finite activations in forward pass")
    _, dlogits_all = _ce_sum(logits, y)

    m = logits.max(axis=1, keepdims=True)
    log_total = np.log(np.exp(logits - m).sum(axis=1)) + m[:, 0]
    rows = np.arange(X.shape[0])
    per_sample = log_total - logits[rows, y]

    losses = np.zeros(c)
    grads = np.zeros((c, net.n_params))
    for i in range(c):
        mask = y == i
        if not np.any(mask):
            continue
        losses[i] = float(per_sample[mask].sum())
        dlogits = np.zeros_like(dlogits_all)
        dlogits[mask] = dlogits_all[mask]
        grads[i], _ = _backward(net, activations, dlogits)
    return losses, grads


def weighted_total_gradient(per_class_gradients, spec: ClassLossSpec) -> np.ndarray:
    """Weighted sum of the per-class gradients, using the given class weights."""
    G = np.asarray(per_class_gradients, dtype=float)
    if G.ndim != 2 or G.shape[0] != spec.n_classes:
        raise ValueError(
            f"expected {spec.n_classes} per-class gradients, got shape {G.shape}"
        )
    return spec.class_weights @ G


@dataclass
class TwoHeadMlp:
    """A shared trunk feeding two task heads.

    The trunk output passes through the same rectifier used between layers
    before it reaches either head, so the junction behaves exactly like an
    internal layer boundary. The flat-vector view is trunk parameters, then
    head 1, then head 2; ``shared_slice`` marks the trunk block.
    """

    trunk: MlpParams
    heads: tuple[MlpParams, MlpParams]

    def __post_init__(self) -> None:
        out = self.trunk.dims[-1]
        for k, head in enumerate(self.heads):
            if head.dims[0] != out:
                raise ValueError(
                    f"head {k} input dim {head.dims[0]} does not match trunk output {out}"
                )

    @property
    def n_shared(self) -> int:
        return self.trunk.n_params

    @property
    def shared_slice(self) -> slice:
        return slice(0, self.n_shared)

    @property
    def head_slices(self) -> tuple[slice, slice]:
        n0 = self.n_shared
        n1 = n0 + self.heads[0].n_params
        return slice(n0, n1), slice(n1, n1 + self.heads[1].n_params)

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [self.trunk.flatten(), self.heads[0].flatten(), self.heads[1].flatten()]
        )

    def copy(self) -> "TwoHeadMlp":
        return TwoHeadMlp(self.trunk.copy(), (self.heads[0].copy(), self.heads[1].copy()))


def init_two_head_mlp(
    input_dim: int,
    trunk_hidden: tuple[int, ...] = (32, 16),
    head_classes: tuple[int, int] = (2, 2),
    seed: int = 0,
) -> TwoHeadMlp:
    rng = np.random.default_rng(seed)
    trunk = init_mlp([input_dim, *trunk_hidden], rng)
    rep = trunk_hidden[-1]
    heads = (init_mlp([rep, head_classes[0]], rng), init_mlp([rep, head_classes[1]], rng))
    return TwoHeadMlp(trunk, heads)


def two_task_gradients(
    model: TwoHeadMlp, X, y1, y2
) -> tuple[np.ndarray, np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """Both task losses with their shared-block and head-block gradients.

    Each task's summed cross-entropy is backpropagated through its own head
    and the trunk; the two shared gradients are flat vectors over the trunk
    slice, the head gradients over the matching head slice.
    """
    X = np.asarray(X, dtype=float)
    labels = (np.asarray(y1), np.asarray(y2))
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("expected a nonempty (N, m) batch")
    for y in labels:
        if y.shape != (X.shape[0],):
            raise ValueError("each task needs one label per sample")

    trunk_acts, trunk_out = _forward_cached(model.trunk, X)
    h = np.maximum(trunk_out, 0.0)

    losses = np.empty(2)
    shared = np.empty((2, model.n_shared))
    head_grads = []
    for k in range(2):
        head_acts, logits = _forward_cached(model.heads[k], h)
        if not np.all(np.isfinite(logits)):
            raise NumericalError(f"non-finite activations in task {k + 1} forward pass")
        losses[k], dlogits = _ce_sum(logits, labels[k])
        g_head, dh = _backward(model.heads[k], head_acts, dlogits)
        shared[k], _ = _backward(model.trunk, trunk_acts, dh * (trunk_out > 0))
        head_grads.append(g_head)
    return losses, shared, (head_grads[0], head_grads[1])


def predict_two_task(model: TwoHeadMlp, X) -> tuple[np.ndarray, np.ndarray]:
    """Logit matrices of both heads for a batch of rows."""
    X = np.asarray(X, dtype=float)
    _, trunk_out = _forward_cached(model.trunk, X)
    h = np.maximum(trunk_out, 0.0)
    return forward(model.heads[0], h), forward(model.heads[1], h)
