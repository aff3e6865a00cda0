from collections import Counter

import numpy as np
import pytest

from spoofkit.data import DatasetManifest, Utterance
from spoofkit.estimator import _ArrayProvider, _as_manifest
from spoofkit.head import Wav2VecArch, init_head
from spoofkit.trainer import (
    AdamW,
    EarlyStopping,
    TrainConfig,
    TrainError,
    balanced_batches,
    fit,
    sigmoid_bce_loss,
    softmax_ce_loss,
)


def _manifest(n_real, n_fake):
    entries = [Utterance(f"r{i}", "", 0, "d", "train") for i in range(n_real)]
    entries += [Utterance(f"f{i}", "", 1, "d", "train") for i in range(n_fake)]
    return DatasetManifest(name="m", entries=tuple(entries))


class TestBalancedBatches:
    def test_balanced_case_each_used_once(self):
        batches = balanced_batches(_manifest(10, 10), 4, seed=0)
        assert len(batches) == 5
        counts = Counter(u.id for b in batches for u in b)
        assert all(c == 1 for c in counts.values()) and len(counts) == 20
        for b in batches:
            assert sum(u.label for u in b) == 2

    def test_minority_oversampled_evenly(self):
        batches = balanced_batches(_manifest(2, 6), 4, seed=1)
        assert len(batches) == 3
        counts = Counter(u.id for b in batches for u in b)
        assert all(counts[f"f{i}"] == 1 for i in range(6))
        assert counts["r0"] == 3 and counts["r1"] == 3

    def test_every_batch_half_and_half(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n_real, n_fake = rng.integers(1, 40, 2)
            bs = 2 * int(rng.integers(1, 8))
            batches = balanced_batches(_manifest(int(n_real), int(n_fake)), bs, seed=3)
            for b in batches:
                assert len(b) == bs
                assert sum(u.label for u in b) == bs // 2

    def test_majority_covered_each_epoch(self):
        m = _manifest(3, 17)
        counts = Counter(u.id for b in balanced_batches(m, 4, seed=4, epoch=2) for u in b)
        assert all(counts[f"f{i}"] >= 1 for i in range(17))

    def test_deterministic_in_seed_and_epoch(self):
        m = _manifest(5, 9)
        a = balanced_batches(m, 4, seed=5, epoch=3)
        b = balanced_batches(m, 4, seed=5, epoch=3)
        assert [[u.id for u in batch] for batch in a] == [[u.id for u in batch] for batch in b]
        c = balanced_batches(m, 4, seed=5, epoch=4)
        assert [[u.id for u in batch] for batch in a] != [[u.id for u in batch] for batch in c]

    def test_odd_batch_size_rejected(self):
        with pytest.raises(TrainError, match="even"):
            balanced_batches(_manifest(4, 4), 3, seed=0)

    def test_empty_class_rejected(self):
        with pytest.raises(TrainError, match="both classes"):
            balanced_batches(_manifest(4, 0), 4, seed=0)


class TestLosses:
    def test_bce_at_half_is_ln2(self):
        for label in (0, 1):
            value, _ = sigmoid_bce_loss(np.array([0.0]), label)
            assert value == pytest.approx(np.log(2.0))

    def test_ce_hand_computed(self):
        value, _ = softmax_ce_loss(np.array([2.0, 0.0]), 0)
        assert value == pytest.approx(0.1269, abs=1e-4)
        assert value == pytest.approx(np.log(1 + np.exp(-2.0)), abs=1e-12)

    def test_confident_correct_loss_vanishes(self):
        value, _ = softmax_ce_loss(np.array([50.0, 0.0]), 0)
        assert value < 1e-20
        value, _ = sigmoid_bce_loss(np.array([50.0]), 1)
        assert value < 1e-20

    @pytest.mark.parametrize("label", [0, 1])
    def test_gradients_match_finite_differences(self, label):
        rng = np.random.default_rng(6)
        step = 1e-5
        for _ in range(10):
            z = rng.standard_normal(2) * 3
            _, grad = softmax_ce_loss(z, label)
            for i in range(2):
                up = z.copy(); up[i] += step
                down = z.copy(); down[i] -= step
                fd = (softmax_ce_loss(up, label)[0] - softmax_ce_loss(down, label)[0]) / (2 * step)
                assert grad[i] == pytest.approx(fd, rel=1e-4, abs=1e-8)
            z1 = rng.standard_normal(1) * 3
            _, grad = sigmoid_bce_loss(z1, label)
            fd = (sigmoid_bce_loss(z1 + step, label)[0] - sigmoid_bce_loss(z1 - step, label)[0]) / (2 * step)
            assert grad[0] == pytest.approx(fd, rel=1e-4, abs=1e-8)


class TestAdamW:
    def test_zero_gradient_zero_decay_is_identity(self):
        opt = AdamW([(3,)], weight_decay=0.0)
        params = [np.array([1.0, -2.0, 0.5])]
        out = opt.step(params, [np.zeros(3)], lr=1e-4)
        assert np.array_equal(out[0], params[0])

    def test_single_scalar_first_step(self):
        # hand-executed recurrence: m_hat = v_hat = 1 after bias correction
        opt = AdamW([(1,)], weight_decay=0.0)
        out = opt.step([np.array([1.0])], [np.array([1.0])], lr=1e-4)
        expected = 1.0 - 1e-4 / (1.0 + 1e-8)
        assert out[0][0] == pytest.approx(expected, abs=1e-9)

    def test_decoupled_decay_exact_shrink(self):
        opt = AdamW([(1,)], weight_decay=0.01)
        theta = np.array([2.0])
        for _ in range(3):
            new = opt.step([theta], [np.zeros(1)], lr=1e-4)[0]
            assert new[0] == theta[0] * (1.0 - 1e-4 * 0.01)
            theta = new

    def test_quadratic_descent(self):
        # loss = theta^2 / 2, gradient = theta
        opt = AdamW([(1,)], weight_decay=0.0)
        theta = np.array([1.0])
        for _ in range(50):
            new = opt.step([theta], [theta.copy()], lr=1e-3)[0]
            assert abs(new[0]) < abs(theta[0])
            theta = new

    def test_shape_mismatch_rejected(self):
        opt = AdamW([(2,)])
        with pytest.raises(TrainError, match="shape"):
            opt.step([np.zeros(2)], [np.zeros(3)], lr=1e-4)

    def test_nonfinite_gradient_named(self):
        opt = AdamW([(2,)])
        with pytest.raises(TrainError, match="tensor 0"):
            opt.step([np.zeros(2)], [np.array([np.nan, 0.0])], lr=1e-4)


class TestEarlyStopping:
    def test_strictly_improving_never_stops(self):
        stopper = EarlyStopping(10)
        stops = [stopper.update(e, 1.0 / e) for e in range(1, 101)]
        assert not any(stops)
        assert stopper.best_epoch == 100

    def test_constant_stops_at_eleven(self):
        stopper = EarlyStopping(10)
        stopped_at = None
        for e in range(1, 101):
            if stopper.update(e, 1.0):
                stopped_at = e
                break
        assert stopped_at == 11
        assert stopper.best_epoch == 1

    def test_improving_then_flat(self):
        stopper = EarlyStopping(10)
        losses = [1.0, 0.8, 0.6] + [0.6] * 50
        stopped_at = None
        for e, loss in enumerate(losses, start=1):
            if stopper.update(e, loss):
                stopped_at = e
                break
        assert stopped_at == 3 + 10
        assert stopper.best_epoch == 3


def _blob_data(n, dim=8, t=5, sep=3.0, sigma=0.3, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.standard_normal((n, t, dim)) * sigma
    X[y == 1] += sep * sigma / 2
    X[y == 0] -= sep * sigma / 2
    return X, y


class TestFit:
    def _setup(self, seed=0):
        X, y = _blob_data(300, seed=41)
        provider = _ArrayProvider(X)
        train = _as_manifest(range(200), y, "train", "toy")
        dev = _as_manifest(range(200, 300), y, "dev", "toy")
        model = init_head(Wav2VecArch(input_dim=8, hidden1=16, hidden2=8), seed)
        cfg = TrainConfig(max_epochs=20, patience=10, batch_size=16, seed=seed)
        return model, provider, train, dev, cfg

    def test_separable_blobs_reach_low_eer(self):
        model, provider, train, dev, cfg = self._setup()
        best, log = fit(model, provider, train, dev, cfg)
        assert log.records[-1].dev_eer < 5.0 or min(r.dev_eer for r in log.records) < 5.0

    def test_same_seed_bit_identical(self):
        outputs = []
        for _ in range(2):
            model, provider, train, dev, cfg = self._setup(seed=3)
            best, log = fit(model, provider, train, dev, cfg)
            outputs.append((best, [r.dev_loss for r in log.records]))
        (a, la), (b, lb) = outputs
        assert la == lb
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert np.array_equal(pa, pb)

    def test_best_epoch_has_min_dev_loss(self):
        model, provider, train, dev, cfg = self._setup(seed=5)
        _, log = fit(model, provider, train, dev, cfg)
        best_rec = log.records[log.best_epoch - 1]
        assert best_rec.dev_loss == min(r.dev_loss for r in log.records)

    def test_empty_manifest_rejected(self):
        model, provider, train, dev, cfg = self._setup()
        empty = DatasetManifest(name="e", entries=())
        with pytest.raises(TrainError):
            fit(model, provider, empty, dev, cfg)

    def test_provider_failure_names_utterance(self):
        model, provider, train, dev, cfg = self._setup()

        class Broken:
            def provide(self, u):
                raise RuntimeError("boom")

        with pytest.raises(TrainError, match="utterance"):
            fit(model, Broken(), train, dev, cfg)
