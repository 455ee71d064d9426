"""Forward/backward/Adam correctness against independent oracles."""

import json

import numpy as np
import pytest

from shaftpower.errors import ConfigurationError, NumericalError
from shaftpower.nn_core import (
    Checkpoint,
    Gradients,
    MlpParams,
    adam_step,
    backward,
    checkpoint_to_dict,
    forward,
    fresh_adam_state,
    init_params,
    load_checkpoint,
    mae_loss,
    predict,
    save_checkpoint,
)


def loop_forward(params: MlpParams, x) -> float:
    """Naive pure-Python forward pass: explicit loops, no numpy algebra."""
    a = [float(v) for v in x]
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = []
        for r in range(w.shape[0]):
            s = float(b[r])
            for c in range(w.shape[1]):
                s += float(w[r, c]) * a[c]
            z.append(s)
        a = z if i == last else [max(0.0, v) for v in z]
    return a[0]


def finite_diff_gradients(params: MlpParams, x, y, h=1e-5) -> Gradients:
    """Central-difference gradients of the single-sample MAE loss."""

    def loss(p: MlpParams) -> float:
        return mae_loss(predict(p, x), [y])

    d_weights = []
    d_biases = []
    for li in range(params.n_layers):
        dw = np.zeros_like(params.weights[li])
        for r in range(dw.shape[0]):
            for c in range(dw.shape[1]):
                wp = [w.copy() for w in params.weights]
                wm = [w.copy() for w in params.weights]
                wp[li][r, c] += h
                wm[li][r, c] -= h
                lp = loss(MlpParams(params.layer_dims, tuple(wp), params.biases))
                lm = loss(MlpParams(params.layer_dims, tuple(wm), params.biases))
                dw[r, c] = (lp - lm) / (2.0 * h)
        db = np.zeros_like(params.biases[li])
        for r in range(db.shape[0]):
            bp = [b.copy() for b in params.biases]
            bm = [b.copy() for b in params.biases]
            bp[li][r] += h
            bm[li][r] -= h
            lp = loss(MlpParams(params.layer_dims, params.weights, tuple(bp)))
            lm = loss(MlpParams(params.layer_dims, params.weights, tuple(bm)))
            db[r] = (lp - lm) / (2.0 * h)
        d_weights.append(dw)
        d_biases.append(db)
    return Gradients(tuple(d_weights), tuple(d_biases))


def max_rel_error(analytic: Gradients, numeric: Gradients) -> float:
    worst = 0.0
    for ga, gn in zip(
        analytic.d_weights + analytic.d_biases, numeric.d_weights + numeric.d_biases
    ):
        diff = np.abs(ga - gn)
        scale = np.maximum(np.maximum(np.abs(ga), np.abs(gn)), 1e-8)
        worst = max(worst, float(np.max(diff / scale)))
    return worst


class TestInitParams:
    def test_same_seed_identical(self):
        a = init_params((2, 3, 1), 42)
        b = init_params((2, 3, 1), 42)
        for wa, wb in zip(a.weights, b.weights):
            assert wa.tobytes() == wb.tobytes()
        for ba, bb in zip(a.biases, b.biases):
            assert ba.tobytes() == bb.tobytes()

    def test_default_architecture_shapes(self):
        p = init_params((7, 128, 64, 32, 1), 0)
        assert [w.shape for w in p.weights] == [(128, 7), (64, 128), (32, 64), (1, 32)]
        assert [b.shape for b in p.biases] == [(128,), (64,), (32,), (1,)]

    def test_biases_zero(self):
        p = init_params((2, 3, 1), 7)
        for b in p.biases:
            assert np.all(b == 0.0)

    def test_glorot_bounds(self):
        p = init_params((7, 128, 64, 32, 1), 3)
        for w, fan_in, fan_out in zip(p.weights, (7, 128, 64, 32), (128, 64, 32, 1)):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            assert np.all(np.abs(w) <= limit)

    def test_different_seeds_differ(self):
        a = init_params((4, 8, 1), 0)
        b = init_params((4, 8, 1), 1)
        assert not np.array_equal(a.weights[0], b.weights[0])

    @pytest.mark.parametrize("dims", [(), (5,), (3, 0, 1)])
    def test_bad_dims_rejected(self, dims):
        with pytest.raises(ConfigurationError):
            init_params(dims, 0)


class TestForward:
    def test_zero_network_predicts_zero(self):
        p = MlpParams(
            (3, 4, 1),
            (np.zeros((4, 3)), np.zeros((1, 4))),
            (np.zeros(4), np.zeros(1)),
        )
        assert forward(p, [1.0, -2.0, 3.0]).prediction == 0.0

    def test_single_layer_affine(self):
        p = MlpParams((2, 1), (np.array([[1.0, 1.0]]),), (np.array([0.5]),))
        assert forward(p, [1.0, 2.0]).prediction == pytest.approx(3.5, abs=0)

    def test_matches_loop_oracle_small(self):
        rng = np.random.default_rng(5)
        p = init_params((3, 4, 1), 17)
        x = rng.normal(size=3)
        got = forward(p, x).prediction
        want = loop_forward(p, x)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_matches_loop_oracle_default_architecture(self):
        rng = np.random.default_rng(99)
        p = init_params((7, 128, 64, 32, 1), 23)
        for _ in range(100):
            x = rng.normal(size=7) * 3.0
            got = forward(p, x).prediction
            want = loop_forward(p, x)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_hidden_activations_nonnegative(self):
        rng = np.random.default_rng(1)
        p = init_params((7, 16, 8, 1), 2)
        tr = forward(p, rng.normal(size=(50, 7)))
        for a in tr.activations[1:-1]:
            assert np.all(a >= 0.0)

    def test_trace_layout(self):
        p = init_params((3, 5, 1), 0)
        x = np.array([0.3, -0.1, 2.0])
        tr = forward(p, x)
        assert np.array_equal(tr.activations[0][0], x)
        assert tr.prediction == tr.pre_activations[-1][0, 0]

    def test_width_mismatch(self):
        p = init_params((3, 4, 1), 0)
        with pytest.raises(ConfigurationError):
            forward(p, [1.0, 2.0])


class TestMaeLoss:
    def test_identity_zero(self):
        assert mae_loss([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_symmetric_errors(self):
        assert mae_loss([0.0, 0.0], [1.0, -1.0]) == pytest.approx(1.0, abs=0)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(3)
        p = rng.normal(size=100)
        t = rng.normal(size=100)
        want = sum(abs(a - b) for a, b in zip(t, p)) / 100.0
        assert mae_loss(p, t) == pytest.approx(want, rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ConfigurationError):
            mae_loss([], [])


class TestBackward:
    def test_exact_fit_zero_gradients(self):
        p = init_params((2, 3, 1), 4)
        x = np.array([0.5, -1.0])
        tr = forward(p, x)
        g = backward(p, tr, [tr.prediction])
        for arr in g.d_weights + g.d_biases:
            assert np.all(arr == 0.0)

    def test_overprediction_bias_gradient_is_one(self):
        p = init_params((2, 3, 1), 4)
        x = np.array([0.5, -1.0])
        tr = forward(p, x)
        g = backward(p, tr, [tr.prediction - 1.0])
        assert g.d_biases[-1][0] == 1.0

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(12)
        for trial in range(20):
            n_hidden = int(rng.integers(1, 3))
            dims = [int(rng.integers(2, 8))]
            dims += [int(rng.integers(2, 17)) for _ in range(n_hidden)]
            dims = tuple(dims[:1] + [min(d, 16) for d in dims[1:]] + [1])
            p = init_params(dims, int(rng.integers(0, 10_000)))
            x = rng.normal(size=dims[0])
            pred = forward(p, x).prediction
            y = pred + float(rng.choice([-1.0, 1.0])) * float(rng.uniform(0.1, 2.0))
            analytic = backward(p, forward(p, x), [y])
            numeric = finite_diff_gradients(p, x, y)
            assert max_rel_error(analytic, numeric) < 1e-4

    def test_batch_gradient_is_mean_of_per_sample(self):
        rng = np.random.default_rng(8)
        p = init_params((3, 6, 1), 9)
        xs = rng.normal(size=(4, 3))
        ys = rng.normal(size=4)
        batch = backward(p, forward(p, xs), ys)
        singles = [backward(p, forward(p, x), [y]) for x, y in zip(xs, ys)]
        for li in range(p.n_layers):
            mean_w = np.mean([s.d_weights[li] for s in singles], axis=0)
            assert np.allclose(batch.d_weights[li], mean_w, rtol=0, atol=1e-15)


class TestAdamStep:
    def _zero_grads(self, p):
        return Gradients(
            tuple(np.zeros_like(w) for w in p.weights),
            tuple(np.zeros_like(b) for b in p.biases),
        )

    def test_zero_gradients_fixed_point(self):
        p = init_params((2, 3, 1), 0)
        st = fresh_adam_state(p)
        q, st2 = adam_step(p, self._zero_grads(p), st, 1e-3)
        for a, b in zip(p.weights + p.biases, q.weights + q.biases):
            assert a.tobytes() == b.tobytes()
        assert st2.step_count == 1

    def test_second_moment_decays_never_negative(self):
        p = init_params((2, 3, 1), 0)
        st = fresh_adam_state(p)
        g = Gradients(
            tuple(np.ones_like(w) for w in p.weights),
            tuple(np.ones_like(b) for b in p.biases),
        )
        p, st = adam_step(p, g, st, 1e-3)
        v_prev = [v.copy() for v in st.second_moment]
        for _ in range(5):
            p, st = adam_step(p, self._zero_grads(p), st, 1e-3)
            for v_new, v_old in zip(st.second_moment, v_prev):
                assert np.all(v_new <= v_old)
                assert np.all(v_new >= 0.0)
            v_prev = [v.copy() for v in st.second_moment]

    def test_first_step_closed_form(self):
        # m_hat = g, v_hat = g^2, so the first update is lr*g/(|g|+eps)
        p = MlpParams((1, 1), (np.array([[2.0]]),), (np.array([0.0]),))
        st = fresh_adam_state(p)
        g = Gradients((np.array([[1.0]]),), (np.array([0.0]),))
        q, _ = adam_step(p, g, st, 1e-3)
        assert q.weights[0][0, 0] == pytest.approx(2.0 - 1e-3, abs=1e-6)

    def test_deterministic(self):
        p = init_params((3, 4, 1), 1)
        st = fresh_adam_state(p)
        g = Gradients(
            tuple(np.full_like(w, 0.25) for w in p.weights),
            tuple(np.full_like(b, -0.5) for b in p.biases),
        )
        q1, s1 = adam_step(p, g, st, 1e-3)
        q2, s2 = adam_step(p, g, st, 1e-3)
        for a, b in zip(q1.weights + q1.biases, q2.weights + q2.biases):
            assert a.tobytes() == b.tobytes()
        assert s1.step_count == s2.step_count

    def test_nonfinite_gradient_rejected_params_unchanged(self):
        p = init_params((2, 2, 1), 0)
        before = [w.copy() for w in p.weights]
        st = fresh_adam_state(p)
        g = self._zero_grads(p)
        g.d_weights[0][0, 0] = np.nan
        with pytest.raises(NumericalError):
            adam_step(p, g, st, 1e-3)
        for w, old in zip(p.weights, before):
            assert np.array_equal(w, old)

    def test_nonpositive_lr_rejected(self):
        p = init_params((2, 2, 1), 0)
        with pytest.raises(ConfigurationError):
            adam_step(p, self._zero_grads(p), fresh_adam_state(p), 0.0)


class TestCheckpoint:
    def _checkpoint(self):
        params = init_params((7, 8, 1), 5)
        return Checkpoint(
            params=params,
            feature_means=np.linspace(-1.0, 1.0, 7),
            feature_stds=np.linspace(0.5, 2.0, 7),
            seed=5,
            trained_on="sensor:test_vessel",
        )

    def test_round_trip_bytes_identical(self, tmp_path):
        ckpt = self._checkpoint()
        path1 = tmp_path / "a.json"
        path2 = tmp_path / "b.json"
        save_checkpoint(ckpt, path1)
        loaded = load_checkpoint(path1)
        save_checkpoint(loaded, path2)
        assert path1.read_bytes() == path2.read_bytes()

    def test_round_trip_values_exact(self, tmp_path):
        ckpt = self._checkpoint()
        path = tmp_path / "c.json"
        save_checkpoint(ckpt, path)
        loaded = load_checkpoint(path)
        for a, b in zip(ckpt.params.weights, loaded.params.weights):
            assert a.tobytes() == b.tobytes()
        assert loaded.seed == 5
        assert loaded.trained_on == "sensor:test_vessel"

    def test_required_fields_present(self, tmp_path):
        doc = checkpoint_to_dict(self._checkpoint())
        assert set(doc) == {
            "layer_dims",
            "weights",
            "biases",
            "feature_means",
            "feature_stds",
            "seed",
            "trained_on",
        }

    def test_weights_row_major_flat(self):
        ckpt = self._checkpoint()
        doc = checkpoint_to_dict(ckpt)
        w0 = np.array(doc["weights"][0]).reshape(8, 7)
        assert np.array_equal(w0, ckpt.params.weights[0])

    def test_malformed_document_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"layer_dims": [2, 1]}))
        with pytest.raises(ConfigurationError):
            load_checkpoint(path)
