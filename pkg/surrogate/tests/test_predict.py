import csv

import numpy as np
import torch

from travnet.model import SurrogateNet
from travnet.predict import labels_csv_from_shards, predict, write_predictions_csv
from travnet.sbt import ShardIndex

from conftest import synthetic_samples


def fresh_model(seed=0):
    torch.manual_seed(seed)
    model = SurrogateNet()
    model.eval()
    return model


class TestPredict:
    def test_keys_cover_shards_exactly(self, shard_file):
        samples = synthetic_samples(17, seed=2)
        path = shard_file(samples)
        preds = predict(fresh_model(), [path])
        assert set(preds) == {(m, t) for m, t, _, _ in samples}

    def test_probabilities_in_range(self, shard_file):
        path = shard_file(synthetic_samples(9, seed=3))
        preds = predict(fresh_model(), [path])
        probs = np.array(list(preds.values()))
        assert np.all((probs >= 0) & (probs <= 1))

    def test_shard_order_invariance(self, shard_file):
        a = shard_file(synthetic_samples(8, seed=4), "a.sbt")
        b_samples = [(9, t, lab, data)
                     for _, t, lab, data in synthetic_samples(8, seed=5)]
        b = shard_file(b_samples, "b.sbt")
        model = fresh_model()
        fwd = predict(model, [a, b])
        rev = predict(model, [b, a])
        assert fwd.keys() == rev.keys()
        for key in fwd:
            np.testing.assert_allclose(fwd[key], rev[key], atol=1e-7)

    def test_duplicate_sample_identical(self, shard_file):
        base = synthetic_samples(1, seed=6)[0]
        _, _, labels, tensor = base
        path = shard_file([(0, 0, labels, tensor), (0, 1, labels, tensor)])
        preds = predict(fresh_model(), [path])
        np.testing.assert_allclose(preds[(0, 0)], preds[(0, 1)], atol=0)


class TestCsvEmission:
    def test_prediction_csv(self, shard_file, tmp_path):
        path = shard_file(synthetic_samples(6, seed=7))
        preds = predict(fresh_model(), [path])
        out = tmp_path / "preds.csv"
        write_predictions_csv(out, preds)
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["map_id", "traj_id", "p_step", "p_obstacle", "p_tilt"]
        assert len(rows) == 7
        keys = [(int(r[0]), int(r[1])) for r in rows[1:]]
        assert keys == sorted(keys)
        for row in rows[1:]:
            for v in row[2:]:
                assert 0.0 <= float(v) <= 1.0

    def test_labels_csv(self, shard_file, tmp_path):
        samples = synthetic_samples(5, seed=8)
        path = shard_file(samples)
        out = tmp_path / "labels.csv"
        labels_csv_from_shards(out, [path])
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["map_id", "traj_id", "step", "obstacle", "tilt", "valid"]
        by_key = {(int(r[0]), int(r[1])): r[2:] for r in rows[1:]}
        for map_id, traj_id, labels, _ in samples:
            got = by_key[(map_id, traj_id)]
            assert got == [str(int(b)) for b in labels] + ["1"]
