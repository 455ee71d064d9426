"""Mini-batch training loop with plateau scheduling, early stopping, and
per-layer freezing for fine-tuning.

Networks at this interface always map standardized features to kilowatts.
Internally the output layer is reparameterized so the optimizer works
against z-scored targets (Adam steps are roughly ``lr`` per parameter, so
reaching kilowatt-scale outputs directly would take millions of steps);
the returned parameters are folded back to kilowatt space. Frozen layers
are returned bit-identical to their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DataError, NumericalError
from .nn_core import (
    Gradients,
    MlpParams,
    adam_step,
    backward,
    forward,
    fresh_adam_state,
    init_params,
    mae_loss,
    predict,
)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 32
    initial_lr: float = 1e-3
    scheduler_factor: float = 0.5
    scheduler_patience: int = 3
    early_stop_patience: int = 5
    min_lr: float = 1e-6
    seed: int = 0
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if not (0.0 < self.scheduler_factor < 1.0):
            raise ConfigurationError(
                f"scheduler_factor must be in (0, 1), got {self.scheduler_factor}"
            )
        if self.scheduler_patience < 1 or self.early_stop_patience < 1:
            raise ConfigurationError("patiences must be >= 1")
        if self.initial_lr <= 0.0 or self.min_lr <= 0.0:
            raise ConfigurationError("learning rates must be positive")
        if not (0.0 < self.validation_fraction < 1.0):
            raise ConfigurationError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )

    @classmethod
    def baseline(cls, seed: int = 0) -> "TrainConfig":
        """High-frequency recipe: 300 epochs, batch 32, lr 1e-3."""
        return cls(seed=seed)

    @classmethod
    def finetune(cls, seed: int = 0) -> "TrainConfig":
        """Daily-report recipe: batch 16, lr 1e-4, otherwise as baseline."""
        return cls(batch_size=16, initial_lr=1e-4, seed=seed)


@dataclass(frozen=True)
class FreezeMask:
    """Per-layer trainability flags, aligned with MlpParams layers."""

    trainable: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "trainable", tuple(bool(t) for t in self.trainable))
        if not self.trainable:
            raise ConfigurationError("freeze mask must cover at least one layer")

    @classmethod
    def all_trainable(cls, n_layers: int) -> "FreezeMask":
        return cls((True,) * n_layers)

    @classmethod
    def head_only(cls, n_layers: int) -> "FreezeMask":
        """Freeze every layer except the last."""
        return cls((False,) * (n_layers - 1) + (True,))


@dataclass(frozen=True)
class TrainReport:
    best_epoch: int
    best_val_loss: float
    lr_history: tuple[float, ...]
    train_loss_history: tuple[float, ...]
    val_loss_history: tuple[float, ...]
    stopped_early: bool

    def to_dict(self) -> dict:
        return {
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
            "lr_history": list(self.lr_history),
            "train_loss_history": list(self.train_loss_history),
            "val_loss_history": list(self.val_loss_history),
            "stopped_early": self.stopped_early,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainReport":
        return cls(
            best_epoch=int(doc["best_epoch"]),
            best_val_loss=float(doc["best_val_loss"]),
            lr_history=tuple(float(x) for x in doc["lr_history"]),
            train_loss_history=tuple(float(x) for x in doc["train_loss_history"]),
            val_loss_history=tuple(float(x) for x in doc["val_loss_history"]),
            stopped_early=bool(doc["stopped_early"]),
        )


def _epochs_since_improvement(losses: Sequence[float]) -> int:
    best = losses[0]
    last = 0
    for i in range(1, len(losses)):
        if losses[i] < best:
            best = losses[i]
            last = i
    return len(losses) - 1 - last


def early_stop(history: Sequence[float], patience: int) -> bool:
    """True once the best validation loss is `patience` epochs stale."""
    if not history:
        raise ConfigurationError("early_stop needs a non-empty history")
    return _epochs_since_improvement(list(history)) >= patience


def scheduler_step(
    current_lr: float,
    val_loss: float,
    history: Sequence[float],
    factor: float,
    patience: int,
    min_lr: float,
) -> float:
    """Reduce-on-plateau: multiply by `factor` after `patience` epochs with
    no strict improvement, never below `min_lr`.

    ``history`` holds the validation losses observed since the last
    reduction (the caller reseeds it with the best-so-far loss after each
    reduction, which both carries the global best and restarts the count).
    """
    losses = list(history) + [float(val_loss)]
    if _epochs_since_improvement(losses) >= patience:
        return max(current_lr * factor, min_lr)
    return current_lr


def validation_split(n_rows: int, fraction: float) -> tuple[int, int]:
    """Row counts (train, validation) for a chronological tail holdout."""
    if n_rows < 2:
        raise ConfigurationError(f"need at least 2 rows to split, got {n_rows}")
    n_val = max(1, int(round(n_rows * fraction)))
    n_train = n_rows - n_val
    if n_train < 1:
        raise ConfigurationError(
            f"validation fraction {fraction} leaves no training rows out of {n_rows}"
        )
    return n_train, n_val


def _fold_head(params: MlpParams, mu: float, sigma: float) -> MlpParams:
    """Rescale the output layer so the network emits z-scored targets."""
    weights = list(params.weights)
    biases = list(params.biases)
    weights[-1] = weights[-1] / sigma
    biases[-1] = (biases[-1] - mu) / sigma
    return MlpParams(params.layer_dims, tuple(weights), tuple(biases))


def _unfold_head(params: MlpParams, mu: float, sigma: float) -> MlpParams:
    weights = list(params.weights)
    biases = list(params.biases)
    weights[-1] = weights[-1] * sigma
    biases[-1] = biases[-1] * sigma + mu
    return MlpParams(params.layer_dims, tuple(weights), tuple(biases))


def _zero_frozen(grads: Gradients, mask: FreezeMask) -> Gradients:
    dw = list(grads.d_weights)
    db = list(grads.d_biases)
    for i, trainable in enumerate(mask.trainable):
        if not trainable:
            dw[i] = np.zeros_like(dw[i])
            db[i] = np.zeros_like(db[i])
    return Gradients(tuple(dw), tuple(db))


def _restore_frozen(
    result: MlpParams, original: MlpParams, mask: FreezeMask
) -> MlpParams:
    weights = list(result.weights)
    biases = list(result.biases)
    for i, trainable in enumerate(mask.trainable):
        if not trainable:
            weights[i] = original.weights[i]
            biases[i] = original.biases[i]
    return MlpParams(result.layer_dims, tuple(weights), tuple(biases))


def train(
    params: MlpParams,
    data,
    config: TrainConfig,
    mask: FreezeMask | None = None,
) -> tuple[MlpParams, TrainReport]:
    """Train on a FeatureMatrix and return the best-validation snapshot.

    The validation set is the chronologically last ``validation_fraction``
    of the rows; batches are reshuffled each epoch from the seeded
    generator over the training portion only. The returned parameters are
    the snapshot with minimum validation MAE, not the final epoch, and
    layers marked non-trainable come back bit-identical to their inputs.
    Losses in the report are in target units (kilowatts); the per-epoch
    train loss is the mean of that epoch's batch losses.
    """
    rows = np.asarray(data.rows, dtype=np.float64)
    targets = np.asarray(data.targets, dtype=np.float64)
    n = rows.shape[0]
    if n == 0:
        raise ConfigurationError("training data is empty")
    if rows.shape[1] != params.layer_dims[0]:
        raise ConfigurationError(
            f"feature width {rows.shape[1]} does not match network input "
            f"width {params.layer_dims[0]}"
        )
    if n < config.batch_size:
        raise ConfigurationError(
            f"{n} rows is fewer than the batch size {config.batch_size}"
        )
    if mask is None:
        mask = FreezeMask.all_trainable(params.n_layers)
    if len(mask.trainable) != params.n_layers:
        raise ConfigurationError(
            f"freeze mask covers {len(mask.trainable)} layers, "
            f"network has {params.n_layers}"
        )

    n_train, _ = validation_split(n, config.validation_fraction)
    x_train, y_train = rows[:n_train], targets[:n_train]
    x_val, y_val = rows[n_train:], targets[n_train:]

    mu = float(np.mean(y_train))
    sigma = float(np.std(y_train))
    if not math.isfinite(mu) or not math.isfinite(sigma):
        raise NumericalError("non-finite training targets")
    if sigma <= 0.0:
        raise DataError("training targets are constant; nothing to fit")

    work = _fold_head(params, mu, sigma)
    state = fresh_adam_state(work)
    rng = np.random.default_rng(config.seed)
    y_train_scaled = (y_train - mu) / sigma

    lr = config.initial_lr
    window: list[float] = []
    lr_hist: list[float] = []
    train_hist: list[float] = []
    val_hist: list[float] = []
    best_val = math.inf
    best_epoch = 0
    best_snapshot = _unfold_head(work, mu, sigma)
    stopped_early = False
    fully_trainable = all(mask.trainable)

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_train)
        batch_losses = []
        for start in range(0, n_train, config.batch_size):
            idx = order[start : start + config.batch_size]
            trace = forward(work, x_train[idx])
            batch_losses.append(mae_loss(trace.predictions, y_train_scaled[idx]))
            grads = backward(work, trace, y_train_scaled[idx])
            if not fully_trainable:
                grads = _zero_frozen(grads, mask)
            work, state = adam_step(work, grads, state, lr)

        kw_params = _unfold_head(work, mu, sigma)
        val_loss = mae_loss(predict(kw_params, x_val), y_val)
        train_loss = float(np.mean(batch_losses)) * sigma
        if not (math.isfinite(val_loss) and math.isfinite(train_loss)):
            raise NumericalError(f"non-finite loss at epoch {epoch}")
        lr_hist.append(lr)
        train_hist.append(train_loss)
        val_hist.append(val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_snapshot = kw_params

        if early_stop(val_hist, config.early_stop_patience):
            stopped_early = True
            break

        new_lr = scheduler_step(
            lr,
            val_loss,
            window,
            config.scheduler_factor,
            config.scheduler_patience,
            config.min_lr,
        )
        if new_lr < lr:
            window = [best_val]
        else:
            window.append(val_loss)
        lr = new_lr

    result = _restore_frozen(best_snapshot, params, mask)
    report = TrainReport(
        best_epoch=best_epoch,
        best_val_loss=best_val,
        lr_history=tuple(lr_hist),
        train_loss_history=tuple(train_hist),
        val_loss_history=tuple(val_hist),
        stopped_early=stopped_early,
    )
    return result, report


def fine_tune(
    pretrained: MlpParams,
    noon_data,
    config: TrainConfig,
    reinit_head: bool = False,
) -> tuple[MlpParams, TrainReport]:
    """Adapt a pretrained network to daily-report data.

    All layers except the last are frozen. By default the output layer
    warm-starts from its pretrained values; ``reinit_head`` draws a fresh
    seeded initialization for it instead.
    """
    start = pretrained
    if reinit_head:
        fresh = init_params(pretrained.layer_dims, config.seed)
        weights = pretrained.weights[:-1] + (fresh.weights[-1],)
        biases = pretrained.biases[:-1] + (fresh.biases[-1],)
        start = MlpParams(pretrained.layer_dims, weights, biases)
    mask = FreezeMask.head_only(pretrained.n_layers)
    return train(start, noon_data, config, mask)
