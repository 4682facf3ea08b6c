"""Dense two-layer classifier: softmax cross-entropy, exact gradients, plain SGD.

Everything runs in float64 and every operation is pure (inputs are never
mutated), so a parameter set and its one-step lookahead copy can coexist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_float_matrix, as_label_vector, check_positive_int


@dataclass(eq=False)
class Params:
    """Weights and biases of an input -> ReLU hidden -> output network.

    The same layout carries gradients (see :func:`backward`), which keeps
    them shape-congruent with their parameters by construction.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @property
    def dims(self):
        """(input_dim, hidden_dim, output_dim)."""
        return self.w1.shape[0], self.w1.shape[1], self.w2.shape[1]

    def arrays(self):
        return (self.w1, self.b1, self.w2, self.b2)

    def copy(self) -> "Params":
        """Independent snapshot; round-trips bit-exactly."""
        return Params(*(a.copy() for a in self.arrays()))

    def equals(self, other: "Params") -> bool:
        """Bit-exact equality of all arrays."""
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


# Gradients share the parameter layout.
Grads = Params


@dataclass
class LossReport:
    """Mean and per-example cross-entropy (nats) plus argmax predictions."""

    mean_loss: float
    per_example_loss: np.ndarray
    predictions: np.ndarray


def init_network(input_dim, hidden_dim, output_dim, seed) -> Params:
    """Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""
    input_dim = check_positive_int(input_dim, "input_dim")
    hidden_dim = check_positive_int(hidden_dim, "hidden_dim")
    output_dim = check_positive_int(output_dim, "output_dim")
    rng = np.random.default_rng(seed)
    bound1 = 1.0 / np.sqrt(input_dim)
    bound2 = 1.0 / np.sqrt(hidden_dim)
    return Params(
        w1=rng.uniform(-bound1, bound1, size=(input_dim, hidden_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-bound2, bound2, size=(hidden_dim, output_dim)),
        b2=np.zeros(output_dim),
    )


def _check_batch(params, X, y):
    X = as_float_matrix(X, "batch features")
    y = as_label_vector(y, "batch labels")
    if X.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"{X.shape[0]} examples but {y.shape[0]} labels")
    d_in, _, d_out = params.dims
    if X.shape[1] != d_in:
        raise ValueError(f"expected {d_in} features, got {X.shape[1]}")
    if y.min() < 0 or y.max() >= d_out:
        raise ValueError(f"labels must lie in [0, {d_out})")
    return X, y


def _forward(params, X):
    z1 = X @ params.w1 + params.b1
    hidden = np.maximum(z1, 0.0)
    logits = hidden @ params.w2 + params.b2
    return z1, hidden, logits


def forward_loss(params: Params, X, y) -> LossReport:
    """Softmax cross-entropy -log p(y|x) per example over a single head.

    Predictions are argmax logits across all classes, so the classifier
    must discriminate every class seen so far without a task hint.
    """
    X, y = _check_batch(params, X, y)
    _, _, logits = _forward(params, X)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    per_example = (log_norm - shifted[np.arange(len(y)), y, None]).ravel()
    return LossReport(
        mean_loss=float(per_example.mean()),
        per_example_loss=per_example,
        predictions=logits.argmax(axis=1),
    )


def backward(params: Params, X, y) -> Grads:
    """Exact analytic gradients of the mean batch loss."""
    X, y = _check_batch(params, X, y)
    z1, hidden, logits = _forward(params, X)
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    dlogits = expz / expz.sum(axis=1, keepdims=True)
    n = X.shape[0]
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    dw2 = hidden.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dhidden = dlogits @ params.w2.T
    dz1 = np.where(z1 > 0.0, dhidden, 0.0)
    return Params(w1=X.T @ dz1, b1=dz1.sum(axis=0), w2=dw2, b2=db2)


def sgd_step(params: Params, grads: Grads, alpha: float) -> Params:
    """theta - alpha * g as a fresh parameter set; inputs are untouched."""
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    for p, g in zip(params.arrays(), grads.arrays()):
        if p.shape != g.shape:
            raise ValueError(f"shape mismatch: params {p.shape} vs grads {g.shape}")
    return Params(
        w1=params.w1 - alpha * grads.w1,
        b1=params.b1 - alpha * grads.b1,
        w2=params.w2 - alpha * grads.w2,
        b2=params.b2 - alpha * grads.b2,
    )


def accuracy(params: Params, X, y) -> float:
    """Fraction of argmax predictions matching the labels."""
    report = forward_loss(params, X, y)
    return float(np.mean(report.predictions == as_label_vector(y)))
