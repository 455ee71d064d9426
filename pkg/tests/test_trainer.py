"""Training-loop behavior: scheduler, early stopping, freezing, and
best-checkpoint selection."""

import numpy as np
import pytest

from shaftpower.errors import ConfigurationError, DataError
from shaftpower.features import FeatureMatrix
from shaftpower.nn_core import init_params, mae_loss, predict
from shaftpower.trainer import (
    FreezeMask,
    TrainConfig,
    early_stop,
    fine_tune,
    scheduler_step,
    train,
    validation_split,
)


def make_matrix(X, y):
    X = np.asarray(X, dtype=np.float64)
    return FeatureMatrix(
        rows=X,
        targets=np.asarray(y, dtype=np.float64),
        timestamps=np.arange(X.shape[0], dtype=np.float64),
        columns=tuple(f"f{i}" for i in range(X.shape[1])),
    )


def linear_data(n=1000, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 7))
    y = 2.0 * X[:, 0] + 3.0 * X[:, 1]
    if noise:
        y = y + rng.normal(0.0, noise, size=n)
    return make_matrix(X, y)


class TestSchedulerStep:
    def test_improving_sequence_unchanged(self):
        assert scheduler_step(1e-3, 0.8, [1.0, 0.9], 0.5, 3, 1e-6) == 1e-3

    def test_halves_after_three_stagnant_epochs(self):
        lr = 1e-3
        window = []
        for epoch, loss in enumerate([1.0, 1.0, 1.0, 1.0], start=1):
            new_lr = scheduler_step(lr, loss, window, 0.5, 3, 1e-6)
            if new_lr < lr:
                window = [min(window + [loss])]
            else:
                window.append(loss)
            lr = new_lr
            if epoch < 4:
                assert lr == 1e-3
        assert lr == 5e-4

    def test_floor_at_min_lr(self):
        assert scheduler_step(1e-6, 1.0, [1.0, 1.0, 1.0], 0.5, 3, 1e-6) == 1e-6

    def test_reset_window_restarts_counting(self):
        # after a reduction the caller reseeds history with the best loss
        assert scheduler_step(5e-4, 1.0, [1.0], 0.5, 3, 1e-6) == 5e-4
        assert scheduler_step(5e-4, 1.0, [1.0, 1.0, 1.0], 0.5, 3, 1e-6) == 2.5e-4


class TestEarlyStop:
    def test_monotone_improvement(self):
        assert early_stop([1.0, 0.9, 0.8, 0.7, 0.6, 0.5], 5) is False

    def test_five_stagnant_epochs(self):
        assert early_stop([1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 5) is True

    def test_insufficient_history(self):
        assert early_stop([1.0], 5) is False

    def test_counts_from_last_improvement(self):
        assert early_stop([1.0, 0.9, 1.1, 1.1, 1.1, 1.1], 5) is False
        assert early_stop([1.0, 0.9, 1.1, 1.1, 1.1, 1.1, 1.1], 5) is True

    def test_empty_history_rejected(self):
        with pytest.raises(ConfigurationError):
            early_stop([], 5)


class TestTrainConfig:
    def test_baseline_preset(self):
        cfg = TrainConfig.baseline(seed=3)
        assert (cfg.epochs, cfg.batch_size, cfg.initial_lr) == (300, 32, 1e-3)
        assert (cfg.scheduler_factor, cfg.scheduler_patience) == (0.5, 3)
        assert (cfg.early_stop_patience, cfg.min_lr) == (5, 1e-6)
        assert (cfg.seed, cfg.validation_fraction) == (3, 0.1)

    def test_finetune_preset(self):
        cfg = TrainConfig.finetune(seed=1)
        assert (cfg.batch_size, cfg.initial_lr) == (16, 1e-4)
        assert cfg.epochs == 300

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"scheduler_factor": 1.0},
            {"scheduler_factor": 0.0},
            {"scheduler_patience": 0},
            {"validation_fraction": 0.0},
            {"epochs": 0},
        ],
    )
    def test_invalid_configs(self, kwargs):
        with pytest.raises(ConfigurationError):
            TrainConfig(**kwargs)


class TestFreezeMask:
    def test_head_only(self):
        assert FreezeMask.head_only(4).trainable == (False, False, False, True)

    def test_all_trainable(self):
        assert FreezeMask.all_trainable(3).trainable == (True, True, True)


def small_config(seed=0, epochs=20, batch_size=16):
    return TrainConfig(seed=seed, epochs=epochs, batch_size=batch_size)


class TestTrain:
    def test_fully_frozen_network_cannot_change(self):
        data = linear_data(200, seed=1)
        params = init_params((7, 8, 4, 1), 0)
        mask = FreezeMask((False, False, False))
        result, _ = train(params, data, small_config(), mask)
        for a, b in zip(params.weights + params.biases, result.weights + result.biases):
            assert a.tobytes() == b.tobytes()

    def test_linear_target_converges(self):
        data = linear_data(1000, seed=0)
        params = init_params((7, 128, 64, 32, 1), 0)
        _, report = train(params, data, TrainConfig.baseline(seed=0))
        assert report.train_loss_history[-1] < 0.05

    def test_finetune_preset_freezes_feature_layers(self):
        data = linear_data(300, seed=2, noise=0.5)
        pretrained = init_params((7, 16, 8, 4, 1), 1)
        result, _ = fine_tune(pretrained, data, TrainConfig.finetune(seed=0))
        for i in range(3):
            assert result.weights[i].tobytes() == pretrained.weights[i].tobytes()
            assert result.biases[i].tobytes() == pretrained.biases[i].tobytes()
        assert not np.array_equal(result.weights[3], pretrained.weights[3])

    def test_deterministic(self):
        data = linear_data(300, seed=3, noise=0.2)
        params = init_params((7, 16, 1), 4)
        r1, rep1 = train(params, data, small_config(seed=9))
        r2, rep2 = train(params, data, small_config(seed=9))
        for a, b in zip(r1.weights + r1.biases, r2.weights + r2.biases):
            assert a.tobytes() == b.tobytes()
        assert rep1 == rep2

    def test_returned_params_achieve_best_val_loss(self):
        data = linear_data(500, seed=5, noise=0.3)
        params = init_params((7, 16, 8, 1), 6)
        cfg = small_config(seed=7, epochs=30)
        result, report = train(params, data, cfg)
        n_train, n_val = validation_split(data.n, cfg.validation_fraction)
        val_rows = data.rows[n_train:]
        val_targets = data.targets[n_train:]
        re_evaluated = mae_loss(predict(result, val_rows), val_targets)
        assert re_evaluated == pytest.approx(report.best_val_loss, abs=1e-12)
        assert report.best_val_loss == min(report.val_loss_history)

    def test_lr_history_non_increasing_with_floor(self):
        data = linear_data(300, seed=8, noise=1.0)
        params = init_params((7, 8, 1), 9)
        cfg = TrainConfig(seed=1, epochs=60, batch_size=16, min_lr=1e-6)
        _, report = train(params, data, cfg)
        lrs = report.lr_history
        assert all(a >= b for a, b in zip(lrs, lrs[1:]))
        assert all(lr >= cfg.min_lr for lr in lrs)

    def test_early_stop_soundness(self):
        data = linear_data(300, seed=10, noise=1.0)
        params = init_params((7, 8, 1), 11)
        cfg = TrainConfig(seed=2, epochs=300, batch_size=16)
        _, report = train(params, data, cfg)
        if report.stopped_early:
            tail = report.val_loss_history[-cfg.early_stop_patience :]
            assert all(v >= report.best_val_loss for v in tail)

    def test_fewer_rows_than_batch_rejected(self):
        data = linear_data(8, seed=0)
        params = init_params((7, 4, 1), 0)
        with pytest.raises(ConfigurationError):
            train(params, data, TrainConfig(seed=0, batch_size=16))

    def test_width_mismatch_rejected(self):
        data = linear_data(100, seed=0)
        params = init_params((5, 4, 1), 0)
        with pytest.raises(ConfigurationError):
            train(params, data, small_config())

    def test_constant_targets_rejected(self):
        X = np.random.default_rng(0).normal(size=(50, 7))
        data = make_matrix(X, np.full(50, 5.0))
        params = init_params((7, 4, 1), 0)
        with pytest.raises(DataError):
            train(params, data, small_config())

    def test_kilowatt_scale_targets_learnable(self):
        # targets in the thousands must not stall the optimizer
        rng = np.random.default_rng(13)
        X = rng.normal(size=(800, 7))
        y = 5000.0 + 900.0 * X[:, 0] + 400.0 * X[:, 1]
        data = make_matrix(X, y)
        params = init_params((7, 32, 16, 1), 3)
        _, report = train(params, data, TrainConfig(seed=3, epochs=60, batch_size=32))
        assert report.best_val_loss < 150.0


class TestFineTune:
    def test_single_row_noon_data_rejected(self):
        data = linear_data(1, seed=0)
        pretrained = init_params((7, 8, 4, 1), 0)
        with pytest.raises(ConfigurationError):
            fine_tune(pretrained, data, TrainConfig.finetune(seed=0))

    def test_reinit_head_changes_start(self):
        data = linear_data(200, seed=4, noise=0.5)
        pretrained = init_params((7, 8, 4, 1), 5)
        warm, _ = fine_tune(pretrained, data, TrainConfig.finetune(seed=1))
        cold, _ = fine_tune(
            pretrained, data, TrainConfig.finetune(seed=1), reinit_head=True
        )
        assert not np.array_equal(warm.weights[-1], cold.weights[-1])
        for i in range(pretrained.n_layers - 1):
            assert np.array_equal(cold.weights[i], pretrained.weights[i])

    def test_finetuned_beats_scratch_on_matching_distribution(self):
        # pretrain on abundant clean data, then compare fine-tuning against
        # from-scratch training on a small noisy sample of the same function
        rng = np.random.default_rng(20)
        X_big = rng.normal(size=(4000, 7))

        def target(X):
            return 3.0 * X[:, 0] - 2.0 * X[:, 1] + 1.5 * np.maximum(X[:, 2], 0.0)

        big = make_matrix(X_big, target(X_big))
        pretrained, _ = train(
            init_params((7, 32, 16, 8, 1), 0),
            big,
            TrainConfig(seed=0, epochs=60, batch_size=32),
        )
        wins = []
        for seed in range(10):
            rng_s = np.random.default_rng(100 + seed)
            X_small = rng_s.normal(size=(200, 7))
            small = make_matrix(
                X_small, target(X_small) + rng_s.normal(0.0, 1.0, size=200)
            )
            _, tl_report = fine_tune(
                pretrained,
                small,
                TrainConfig(
                    seed=seed, epochs=40, batch_size=16, initial_lr=1e-4
                ),
            )
            _, scratch_report = train(
                init_params((7, 32, 16, 8, 1), 50 + seed),
                small,
                TrainConfig(seed=seed, epochs=40, batch_size=16),
            )
            wins.append(tl_report.best_val_loss - scratch_report.best_val_loss)
        assert np.median(wins) < 0.0
