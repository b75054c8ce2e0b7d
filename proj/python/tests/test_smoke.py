import numpy as np
import pytest

import foal


def test_projection_is_seeded():
    a = foal.init_projection(7, 6, 10)
    b = foal.init_projection(7, 6, 10)
    assert a.weights.shape == (6, 10)
    np.testing.assert_array_equal(a.weights, b.weights)
    assert not np.array_equal(a.weights, foal.init_projection(8, 6, 10).weights)


def test_encode_batch_range():
    rng = np.random.default_rng(0)
    proj = foal.init_projection(1, 5, 12)
    samples = [rng.normal(size=(3, 5)).astype(np.float32) for _ in range(4)]
    acts = foal.encode_batch(samples, True, proj)
    assert acts.shape == (4, 12)
    assert np.all((acts > 0) & (acts < 1))
    fused = foal.fuse_blocks(samples[0])
    np.testing.assert_allclose(fused, samples[0].mean(axis=0), rtol=1e-6)
    assert foal.encode_batch(samples).shape == (4, 5)


def test_streaming_matches_closed_form():
    rng = np.random.default_rng(1)
    x = rng.random((60, 8))
    labels = [int(v) for v in rng.integers(0, 4, size=60)]
    clf = foal.AnalyticClassifier(8, 0.5)
    for start in range(0, 60, 7):
        clf.update(x[start:start + 7], labels[start:start + 7])
    y = foal.one_hot(labels, clf.class_ids)
    expected = foal.closed_form(x, y, 0.5)
    err = np.linalg.norm(clf.weights - expected) / np.linalg.norm(expected)
    assert err <= 1e-8
    predicted, logits = clf.predict(x)
    assert logits.shape == (60, len(clf.class_ids))
    assert len(predicted) == 60


def test_metrics():
    acc = foal.AccuracyMatrix(2)
    acc.set(1, 1, 1.0)
    acc.set(2, 1, 0.8)
    acc.set(2, 2, 0.9)
    assert foal.average_accuracy(acc, 2) == pytest.approx(0.85, abs=1e-12)
    mean, per_task = foal.forgetting(acc, 2)
    assert mean == pytest.approx(0.2, abs=1e-12)


def test_feature_round_trip(tmp_path):
    blocks = np.arange(6, dtype=np.float32).reshape(2, 3)
    path = tmp_path / "f.foal"
    foal.write_features(path, [(3, blocks), (5, blocks * 2)], 2, 3)
    header, samples = foal.read_features(path)
    assert header["sample_count"] == 2
    assert [s[0] for s in samples] == [3, 5]
    np.testing.assert_array_equal(samples[1][1], blocks * 2)
    with pytest.raises(foal.FoalError):
        foal.read_features(tmp_path / "missing.foal")


def test_synthetic_run(tmp_path):
    manifest = foal.make_synthetic(tmp_path, tasks=2, samples_per_class=20)
    assert foal.validate_manifest(manifest) == 2
    results, clf = foal.run_experiment(manifest, proj_dim=200)
    assert results["schema"] == "foal-results/1"
    assert len(results["accuracy_matrix"]) == 2
    assert 0.0 <= results["a_last"] <= 1.0
    assert clf.samples_seen == 2 * 4 * 20


def test_cli_verify():
    code, out, _ = foal.cli(["verify"])
    assert code == 0
    assert "verify: PASS" in out
    code, _, err = foal.cli(["run"])
    assert code == 1
