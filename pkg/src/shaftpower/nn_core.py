"""Dense feedforward regressor with manual backpropagation and Adam.

Hidden layers use ReLU, the output layer is affine, and the training
loss is mean absolute error. Parameters, gradients, and optimizer state
are immutable value objects; every update returns fresh instances, so a
training loop can snapshot any step without defensive copies.

All arithmetic is float64 so oracle comparisons at 1e-12 are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import serialize
from .errors import ConfigurationError, DataError, NumericalError

DEFAULT_LAYER_DIMS = (7, 128, 64, 32, 1)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8


def _as_float_arrays(arrays) -> tuple[np.ndarray, ...]:
    return tuple(np.asarray(a, dtype=np.float64) for a in arrays)


@dataclass(frozen=True)
class MlpParams:
    """Weight matrices and bias vectors of a dense network.

    ``weights[i]`` has shape ``(layer_dims[i+1], layer_dims[i])`` and
    ``biases[i]`` has length ``layer_dims[i+1]``.
    """

    layer_dims: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "weights", _as_float_arrays(self.weights))
        object.__setattr__(self, "biases", _as_float_arrays(self.biases))
        if len(dims) < 2:
            raise ConfigurationError(
                f"need at least an input and an output layer, got dims {dims}"
            )
        if any(d < 1 for d in dims):
            raise ConfigurationError(f"layer widths must be >= 1, got {dims}")
        n = len(dims) - 1
        if len(self.weights) != n or len(self.biases) != n:
            raise ConfigurationError(
                f"expected {n} weight/bias pairs for dims {dims}, "
                f"got {len(self.weights)}/{len(self.biases)}"
            )
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (dims[i + 1], dims[i])
            if w.shape != want:
                raise ConfigurationError(
                    f"weights[{i}] has shape {w.shape}, expected {want}"
                )
            if b.shape != (dims[i + 1],):
                raise ConfigurationError(
                    f"biases[{i}] has shape {b.shape}, expected ({dims[i + 1]},)"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise NumericalError(f"non-finite entries in layer {i} parameters")

    @property
    def n_layers(self) -> int:
        return len(self.weights)


def init_params(layer_dims, seed: int) -> MlpParams:
    """Seeded Glorot-uniform weights, zero biases.

    Identical seeds produce bit-identical parameters.
    """
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2:
        raise ConfigurationError(
            f"need at least an input and an output layer, got dims {dims}"
        )
    if any(d < 1 for d in dims):
        raise ConfigurationError(f"layer widths must be >= 1, got {dims}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(dims, tuple(weights), tuple(biases))


@dataclass(frozen=True)
class ForwardTrace:
    """Intermediate values of one forward pass, kept for backprop.

    ``activations[0]`` is the input batch; ``activations[i]`` is the input
    seen by layer ``i``; the final entry equals the linear output.
    All arrays carry a leading batch axis.
    """

    pre_activations: tuple[np.ndarray, ...]
    activations: tuple[np.ndarray, ...]

    @property
    def predictions(self) -> np.ndarray:
        out = self.pre_activations[-1]
        if out.shape[1] != 1:
            raise ConfigurationError(
                f"predictions need an output width of 1, got {out.shape[1]}"
            )
        return out[:, 0]

    @property
    def prediction(self) -> float:
        preds = self.predictions
        if preds.shape[0] != 1:
            raise ConfigurationError(
                f"scalar prediction needs a single-sample trace, got batch {preds.shape[0]}"
            )
        return float(preds[0])


def forward(params: MlpParams, x) -> ForwardTrace:
    """ReLU hidden layers, affine output. ``x`` is one vector or a batch."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[np.newaxis, :]
    if a.ndim != 2 or a.shape[1] != params.layer_dims[0]:
        raise ConfigurationError(
            f"input width {a.shape[-1] if a.ndim else a.shape} does not match "
            f"network input width {params.layer_dims[0]}"
        )
    pre = []
    acts = [a]
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        pre.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)
    return ForwardTrace(tuple(pre), tuple(acts))


def predict(params: MlpParams, x) -> np.ndarray:
    """Forward pass returning only the predictions, shape (n,)."""
    return forward(params, x).predictions


def mae_loss(predictions, targets) -> float:
    """Mean absolute error between two equal-length vectors."""
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if p.size == 0 or t.size == 0:
        raise ConfigurationError("mae_loss needs non-empty inputs")
    if p.shape != t.shape:
        raise ConfigurationError(
            f"length mismatch: predictions {p.shape} vs targets {t.shape}"
        )
    return float(np.mean(np.abs(t - p)))


@dataclass(frozen=True)
class Gradients:
    """Loss gradients, shape-congruent with the parameters."""

    d_weights: tuple[np.ndarray, ...]
    d_biases: tuple[np.ndarray, ...]


def backward(params: MlpParams, trace: ForwardTrace, targets) -> Gradients:
    """Gradients of batch-mean MAE through the traced forward pass.

    The absolute-value subgradient at zero error is taken as 0, so an
    exact fit produces all-zero gradients. For a batch, the result is the
    mean of per-sample gradients.
    """
    y = np.atleast_1d(np.asarray(targets, dtype=np.float64))
    preds = trace.predictions
    if y.shape != preds.shape:
        raise ConfigurationError(
            f"targets shape {y.shape} does not match batch size {preds.shape}"
        )
    batch = preds.shape[0]
    # d|e|/dyhat with sign(0) = 0; the 1/n of the loss folds in here.
    delta = (np.sign(preds - y) / batch)[:, np.newaxis]
    d_weights = [None] * params.n_layers
    d_biases = [None] * params.n_layers
    for i in range(params.n_layers - 1, -1, -1):
        d_weights[i] = delta.T @ trace.activations[i]
        d_biases[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i]) * (trace.pre_activations[i - 1] > 0.0)
    return Gradients(tuple(d_weights), tuple(d_biases))


@dataclass(frozen=True)
class AdamState:
    """First/second moment estimates plus the update counter.

    Moments are stored in the flattened layout weights-then-biases; build
    a matching zeroed state with :func:`fresh_adam_state`.
    """

    first_moment: tuple[np.ndarray, ...]
    second_moment: tuple[np.ndarray, ...]
    step_count: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    epsilon: float = ADAM_EPSILON


def _flatten_grads(grads: Gradients) -> tuple[np.ndarray, ...]:
    return tuple(grads.d_weights) + tuple(grads.d_biases)


def _flatten_params(params: MlpParams) -> tuple[np.ndarray, ...]:
    return tuple(params.weights) + tuple(params.biases)


def fresh_adam_state(
    params: MlpParams,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    epsilon: float = ADAM_EPSILON,
) -> AdamState:
    """Zeroed moments matching the flattened parameter layout."""
    flat = _flatten_params(params)
    zeros = tuple(np.zeros_like(a) for a in flat)
    return AdamState(zeros, zeros, 0, beta1, beta2, epsilon)


def adam_step(
    params: MlpParams, grads: Gradients, state: AdamState, lr: float
) -> tuple[MlpParams, AdamState]:
    """One Adam update with bias correction; returns new params and state."""
    if lr <= 0.0:
        raise ConfigurationError(f"learning rate must be positive, got {lr}")
    theta = _flatten_params(params)
    g = _flatten_grads(grads)
    if len(g) != len(theta) or any(a.shape != b.shape for a, b in zip(g, theta)):
        raise ConfigurationError("gradient shapes do not match parameter shapes")
    for a in g:
        if not np.isfinite(a).all():
            raise NumericalError("non-finite gradient entry; parameters unchanged")
    if len(state.first_moment) != len(theta):
        raise ConfigurationError("optimizer state does not match parameter layout")

    t = state.step_count + 1
    b1, b2, eps = state.beta1, state.beta2, state.epsilon
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_m = []
    new_v = []
    new_theta = []
    for p, gi, m, v in zip(theta, g, state.first_moment, state.second_moment):
        m = b1 * m + (1.0 - b1) * gi
        v = b2 * v + (1.0 - b2) * (gi * gi)
        step = (lr / c1) * m / (np.sqrt(v / c2) + eps)
        new_m.append(m)
        new_v.append(v)
        new_theta.append(p - step)

    n = params.n_layers
    new_params = MlpParams(
        params.layer_dims, tuple(new_theta[:n]), tuple(new_theta[n:])
    )
    new_state = AdamState(tuple(new_m), tuple(new_v), t, b1, b2, eps)
    return new_params, new_state


@dataclass(frozen=True)
class Checkpoint:
    """A trained network plus the input standardization that it expects.

    The stored network maps standardized features directly to kilowatts,
    so inference needs nothing beyond this file.
    """

    params: MlpParams
    feature_means: np.ndarray
    feature_stds: np.ndarray
    seed: int
    trained_on: str

    def __post_init__(self):
        object.__setattr__(
            self, "feature_means", np.asarray(self.feature_means, dtype=np.float64)
        )
        object.__setattr__(
            self, "feature_stds", np.asarray(self.feature_stds, dtype=np.float64)
        )
        width = self.params.layer_dims[0]
        if self.feature_means.shape != (width,) or self.feature_stds.shape != (width,):
            raise ConfigurationError(
                f"scaler stats must have length {width} to match the input layer"
            )


def checkpoint_to_dict(ckpt: Checkpoint) -> dict:
    return {
        "layer_dims": list(ckpt.params.layer_dims),
        "weights": [w.ravel().tolist() for w in ckpt.params.weights],
        "biases": [b.tolist() for b in ckpt.params.biases],
        "feature_means": ckpt.feature_means.tolist(),
        "feature_stds": ckpt.feature_stds.tolist(),
        "seed": int(ckpt.seed),
        "trained_on": str(ckpt.trained_on),
    }


def checkpoint_from_dict(doc: dict) -> Checkpoint:
    try:
        dims = tuple(int(d) for d in doc["layer_dims"])
        weights = tuple(
            np.asarray(flat, dtype=np.float64).reshape(dims[i + 1], dims[i])
            for i, flat in enumerate(doc["weights"])
        )
        biases = tuple(np.asarray(b, dtype=np.float64) for b in doc["biases"])
        params = MlpParams(dims, weights, biases)
        return Checkpoint(
            params=params,
            feature_means=np.asarray(doc["feature_means"], dtype=np.float64),
            feature_stds=np.asarray(doc["feature_stds"], dtype=np.float64),
            seed=int(doc["seed"]),
            trained_on=str(doc["trained_on"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigurationError(f"malformed checkpoint document: {exc}") from exc


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    """Write a checkpoint as JSON with 17-significant-digit floats.

    save -> load -> save reproduces the file byte for byte.
    """
    serialize.dump_file(checkpoint_to_dict(ckpt), path, float_style="sig17")


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint file not found: {path}")
    return checkpoint_from_dict(serialize.load_file(path))
