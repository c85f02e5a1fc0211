import numpy as np
import pytest
import torch

from travnet.train import TrainLog, TrainSpec, load_model, save_model, train

from conftest import synthetic_samples


class TestTrainSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            TrainSpec(train_shards=["x"], dropout=1.0)
        with pytest.raises(ValueError):
            TrainSpec(train_shards=["x"], learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainSpec(train_shards=["x"], epochs=0)

    def test_defaults_mirror_reference_recipe(self):
        spec = TrainSpec(train_shards=["x"])
        assert spec.learning_rate == 1e-4
        assert spec.dropout == 0.2
        assert spec.l2 == 1e-3
        assert spec.freeze_epochs == 1
        assert spec.epochs == 10


class TestTraining:
    def make_spec(self, shard_file, n=96, **kw):
        path = shard_file(synthetic_samples(n, seed=5))
        args = dict(train_shards=[path], epochs=2, batch_size=32,
                    learning_rate=3e-4, freeze_epochs=1, seed=0)
        args.update(kw)
        return TrainSpec(**args)

    def test_loss_decreases(self, shard_file):
        spec = self.make_spec(shard_file, epochs=3)
        _, log = train(spec)
        losses = log.train_losses()
        assert losses[-1] < losses[0]

    def test_deterministic(self, shard_file):
        spec = self.make_spec(shard_file)
        _, log_a = train(spec)
        _, log_b = train(spec)
        assert log_a.entries == log_b.entries

    def test_trunk_frozen_during_head_phase(self, shard_file):
        spec = self.make_spec(shard_file, epochs=1, freeze_epochs=1)
        torch.manual_seed(spec.seed)
        from travnet.model import SurrogateNet

        reference = SurrogateNet(backbone=spec.backbone, dropout=spec.dropout)
        trunk_before = [p.detach().clone() for p in reference.trunk.parameters()]
        model, _ = train(spec)
        for before, after in zip(trunk_before, model.trunk.parameters()):
            assert torch.equal(before, after)

    def test_trunk_unfreezes_after(self, shard_file):
        spec = self.make_spec(shard_file, epochs=2, freeze_epochs=1)
        torch.manual_seed(spec.seed)
        from travnet.model import SurrogateNet

        reference = SurrogateNet(backbone=spec.backbone, dropout=spec.dropout)
        trunk_before = [p.detach().clone() for p in reference.trunk.parameters()]
        model, log = train(spec)
        assert any(
            not torch.equal(before, after)
            for before, after in zip(trunk_before, model.trunk.parameters())
        )
        assert [e[1] for e in log.entries] == ["heads-only", "full"]

    def test_all_safe_converges_low(self, shard_file):
        samples = [(0, i, (False, False, False),
                    np.random.default_rng(i).random((3, 129, 129)).astype(np.float32))
                   for i in range(48)]
        path = shard_file(samples, "safe.sbt")
        spec = TrainSpec(train_shards=[path], epochs=4, batch_size=16,
                         learning_rate=1e-3, freeze_epochs=0, seed=1)
        model, _ = train(spec)
        from travnet.predict import predict

        preds = predict(model, [path])
        probs = np.array(list(preds.values()))
        assert np.all(probs < 0.5)

    def test_val_loss_logged(self, shard_file):
        val_path = shard_file(synthetic_samples(32, seed=9), "val.sbt")
        spec = self.make_spec(shard_file, val_shards=[val_path])
        _, log = train(spec)
        assert all(e[3] is not None for e in log.entries)

    def test_log_render_and_write(self, shard_file, tmp_path):
        spec = self.make_spec(shard_file)
        _, log = train(spec)
        out = tmp_path / "train.log"
        log.write(out)
        lines = out.read_text().splitlines()
        assert lines[0].startswith("#")
        assert len(lines) == 1 + spec.epochs

    def test_save_load_round_trip(self, shard_file, tmp_path):
        spec = self.make_spec(shard_file)
        model, _ = train(spec)
        path = tmp_path / "model.pt"
        save_model(model, spec, path)
        loaded = load_model(path)
        x = torch.rand(2, 3, 129, 129)
        model.eval()
        with torch.no_grad():
            np.testing.assert_allclose(model(x).numpy(), loaded(x).numpy(),
                                       atol=1e-7)


class TestGradientSanity:
    def test_finite_difference_matches_autograd(self):
        # Three-parameter logistic head against central differences.
        torch.manual_seed(3)
        x = torch.randn(40, 2, dtype=torch.float64)
        y = (torch.rand(40, dtype=torch.float64) < 0.4).double()
        params = torch.tensor([0.3, -0.7, 0.1], dtype=torch.float64,
                              requires_grad=True)

        def loss_at(p):
            logits = x @ p[:2] + p[2]
            probs = torch.sigmoid(logits)
            return torch.nn.functional.binary_cross_entropy(probs, y)

        loss = loss_at(params)
        loss.backward()
        analytic = params.grad.detach().numpy()

        eps = 1e-6
        numeric = np.zeros(3)
        for i in range(3):
            up = params.detach().clone()
            down = params.detach().clone()
            up[i] += eps
            down[i] -= eps
            numeric[i] = float(loss_at(up) - loss_at(down)) / (2 * eps)

        rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-12)
        assert np.all(rel < 1e-4)
