import math

import numpy as np
import pytest

semirend = pytest.importorskip("semirend")


def test_upsampling_matches_repeated_2x():
    rng = np.random.default_rng(0)
    g = rng.normal(size=(4, 5))
    up = semirend.upsample_repeated(g, 2)
    assert up.shape == (16, 20)
    assert np.array_equal(up, semirend.upsample2x(semirend.upsample2x(g)))
    # Constant grids stay constant.
    assert np.all(semirend.upsample2x(np.full((3, 3, 2), 1.5)) == 1.5)


def test_bilinear_sample_at_cell_centers():
    g = np.arange(12, dtype=float).reshape(3, 4)
    pts = np.array([[(c + 0.5) / 4, (r + 0.5) / 3] for r in range(3) for c in range(4)])
    assert np.allclose(semirend.bilinear_sample(g, pts)[:, 0], g.ravel())


def test_rle_round_trip_and_iou():
    rng = np.random.default_rng(1)
    m = (rng.random((7, 9)) < 0.4).astype(np.uint8)
    rle = semirend.rle_encode(m)
    assert tuple(rle["size"]) == (7, 9)
    assert sum(rle["counts"]) == 63
    assert np.array_equal(semirend.rle_decode(rle), m)
    assert semirend.mask_iou(m, m) == 1.0


def test_rasterize_rectangle():
    mask = semirend.rasterize_polygon([2, 6, 6, 2], [3, 3, 8, 8], 10, 10)
    assert mask.sum() == 20


def test_refine_invariants():
    rng = np.random.default_rng(2)
    coarse = rng.normal(size=(4, 4))
    feats = rng.normal(size=(32, 32, 3))
    head = semirend.PointHead(hidden=[8], seed=3)
    out, evals = semirend.refine(coarse, feats, head, subdivision_steps=3, points_per_step=0)
    assert evals == 0
    assert np.array_equal(out, semirend.upsample_repeated(coarse, 3))
    out, evals = semirend.refine(coarse, feats, head, subdivision_steps=3, points_per_step=10)
    assert evals == 30
    assert out.shape == (32, 32)


def test_head_save_load(tmp_path):
    head = semirend.PointHead(hidden=[4, 4], seed=7)
    assert head.parameter_count == (4 * 4 + 4) + (5 * 4 + 4) + (5 + 1)
    path = str(tmp_path / "head.srph")
    head.save(path)
    assert semirend.PointHead.load(path) == head
    assert math.isfinite(head.forward([0.3], [0.1, 0.2, 0.3]))


def test_synthetic_training_and_evaluation():
    samples = semirend.generate_synthetic(total=10, image_size=128, line_pitch=16, line_width=8, seed=1)
    assert len(samples) == 10
    assert {s["class"] for s in samples} <= set(semirend.defect_classes())
    train = [s for s in samples if s["split"] == "train"]
    head, losses = semirend.train_head(
        [s["coarse"] for s in train],
        [s["features"] for s in train],
        [s["mask"] for s in train],
        hidden=[8],
        points_per_instance=32,
        learning_rate=0.05,
        batch_size=16,
        steps=20,
        subdivision_steps=3,
    )
    assert len(losses) == 20
    gts = [s["instance"] for s in samples]
    report = semirend.evaluate(gts, gts, mode="segm")
    assert report["mode"] == "segm"
    stats = semirend.area_statistics(gts)
    assert sum(row["count"] for row in stats) == 10


def test_relative_improvement_and_errors():
    assert round(semirend.relative_improvement(0.542, 0.617), 1) == 13.8
    with pytest.raises(semirend.Error):
        semirend.relative_improvement(0.0, 0.5)
    with pytest.raises(semirend.Error):
        semirend.rle_decode({"size": [2, 2], "counts": [1, 1]})
