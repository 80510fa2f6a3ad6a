import math
import random

import pytest

import lidartrack as lt


def test_chi_squared_examples():
    assert lt.chi_squared_distance([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert lt.chi_squared_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(2.0)


def test_cdf_and_mdt():
    cdf = lt.cdf_of([0.25, 0.25, 0.5])
    assert cdf == pytest.approx([0.25, 0.5, 1.0])
    assert cdf[-1] == 1.0
    assert lt.mdt_score(cdf, cdf) == 1.0
    other = lt.cdf_of([0.5, 0.25, 0.25])
    assert lt.mdt_score(cdf, other) == pytest.approx(lt.mdt_score(other, cdf))
    assert 0.0 <= lt.mdt_score(cdf, other) < 1.0


def test_dbscan_two_blobs():
    rng = random.Random(5)
    pts = [(rng.gauss(0, 0.05), rng.gauss(0, 0.05), 0.0) for _ in range(30)]
    pts += [(5 + rng.gauss(0, 0.05), rng.gauss(0, 0.05), 0.0) for _ in range(30)]
    pts.append((50.0, 50.0, 50.0))
    labels = lt.dbscan(pts, eps=0.5, min_pts=5)
    assert len(set(labels[:30])) == 1 and len(set(labels[30:60])) == 1
    assert labels[0] != labels[30]
    assert labels[60] == -1


def test_vfh_normalized():
    pts = []
    for i in range(20):
        for j in range(20):
            pts.append((10.0 + 0.05 * i, 0.05 * j, 0.0))
    pdf, cdf = lt.vfh(pts, k=10, viewpoint=(0.0, 0.0, 1.0))
    assert math.fsum(pdf) == pytest.approx(1.0)
    assert cdf[-1] == 1.0
    assert all(b >= a for a, b in zip(cdf, cdf[1:]))


def test_vfh_too_few_points():
    with pytest.raises(ValueError):
        lt.vfh([(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)])


def test_run_scenario_deterministic():
    a = lt.run_scenario("cyclists", seed=2, frames=8)
    b = lt.run_scenario("cyclists", seed=2, frames=8)
    assert a["frames"] == 8
    assert a["tracks"] == b["tracks"]
    assert a["accuracy"] is not None
    assert 0.0 <= a["accuracy"]["pooled"] <= 1.0
    assert "Methodology Total" in a["timing_table"]


def test_unknown_scenario():
    with pytest.raises(ValueError):
        lt.scenario_text("nope")


def test_corrupt_drive_aborts(tmp_path):
    drive = tmp_path / "drive"
    lt.generate_drive("cyclists", 1, 5, drive)
    (drive / "velodyne_points" / "data" / "0000000002.bin").write_bytes(b"x" * 17)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("source.kitti = drive\n")
    with pytest.raises(RuntimeError, match="frame 2"):
        lt.run_config(cfg)
