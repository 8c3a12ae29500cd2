"""Acceptance gate.

Each test carries a ``criterion`` marker; conftest prints one PASS/FAIL/SKIP
line per criterion at the end of the run. Criterion 8 needs the UC Merced
images on disk: set ``TEXLBP_UCMERCED=/path/to/UCMerced_LandUse/Images``.
"""

import os
import time

import numpy as np
import pytest

from reference import reference_histograms
from texlbp.classifier import DistanceMetric, KnnConfig, chi_square, minkowski
from texlbp.evaluation import cohen_kappa, cross_validate, loo_split, precision_recall, stratified_kfold
from texlbp.features import build_store
from texlbp.image_io import GrayImage, load_dataset
from texlbp.lbp import STANDARD_PAIRS, ImageTooSmallError, LbpConfig, build_u2_table, lbp_histogram
from texlbp.synthetic import synthetic_dataset

SEED = 20240601


@pytest.mark.criterion(1, "LBP histograms equal brute-force oracle (200 images x 5 configs x u2/riu2, < 30 s)")
def test_oracle_equivalence():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    compared = 0
    for _ in range(200):
        h, w = rng.integers(8, 65, size=2)
        pixels = rng.integers(0, 256, (h, w), dtype=np.uint8)
        img = GrayImage(pixels)
        for P, R in STANDARD_PAIRS:
            riu2_cfg, u2_cfg = LbpConfig(P, R, "riu2"), LbpConfig(P, R, "u2")
            if min(h, w) <= 2 * riu2_cfg.margin:
                with pytest.raises(ImageTooSmallError):
                    lbp_histogram(img, riu2_cfg)
                continue
            want_riu2, want_u2 = reference_histograms(pixels, P, R)
            assert np.array_equal(lbp_histogram(img, riu2_cfg).bins, want_riu2), (h, w, P, R)
            assert np.array_equal(lbp_histogram(img, u2_cfg).bins, want_u2), (h, w, P, R)
            compared += 2
    elapsed = time.perf_counter() - start
    print(f"criterion 1: {compared} histograms compared in {elapsed:.1f}s")
    assert compared > 1000
    assert elapsed < 30.0


@pytest.mark.criterion(2, "histograms unchanged by strictly increasing intensity maps (50 images x 10 maps)")
def test_monotone_invariance():
    # Images use intensities 0..127 so that non-identity increasing maps into
    # 0..255 exist; on full-range images the only such map is the identity.
    rng = np.random.default_rng(SEED + 2)
    configs = [LbpConfig(P, R, v) for P, R in STANDARD_PAIRS for v in ("riu2", "u2")]
    failures = {str(c): 0 for c in configs}
    for _ in range(50):
        n = int(rng.integers(16, 65))
        pixels = rng.integers(0, 128, (n, n))
        img = GrayImage(pixels)
        base = {str(c): lbp_histogram(img, c) for c in configs}
        for _ in range(10):
            f = np.sort(rng.choice(256, size=128, replace=False))
            mapped = GrayImage(f[pixels])
            for c in configs:
                if lbp_histogram(mapped, c) != base[str(c)]:
                    failures[str(c)] += 1
    print("criterion 2: mismatching (image, map) pairs per config of 500:", failures)
    assert not any(failures.values()), failures


@pytest.mark.criterion(3, "riu2 histogram unchanged by 90-degree rotation (P divisible by 4)")
def test_rotation_invariance():
    rng = np.random.default_rng(SEED + 3)
    configs = [LbpConfig(P, R, "riu2") for P, R in STANDARD_PAIRS if P % 4 == 0]
    assert len(configs) == 5
    checked = 0
    for _ in range(50):
        n = int(rng.integers(12, 65))
        pixels = rng.integers(0, 256, (n, n))
        img = GrayImage(pixels)
        for cfg in configs:
            if n <= 2 * cfg.margin:
                continue
            want = lbp_histogram(img, cfg)
            for quarter in (1, 2, 3):
                assert lbp_histogram(GrayImage(np.rot90(pixels, quarter)), cfg) == want, (n, str(cfg), quarter)
                checked += 1
    assert checked > 500


@pytest.mark.criterion(4, "bin counts: riu2 (10,18,26,34,34); u2 P=8 is 59 by exhaustive enumeration")
def test_bin_counts():
    assert [LbpConfig(P, R, "riu2").bin_count for P, R in STANDARD_PAIRS] == [10, 18, 26, 34, 34]

    def circular_changes(code, P):
        return sum(((code >> i) & 1) != ((code >> ((i + 1) % P)) & 1) for i in range(P))

    uniform = [c for c in range(256) if circular_changes(c, 8) <= 2]
    assert len(uniform) == 58
    assert LbpConfig(8, 1, "u2").bin_count == build_u2_table(8).bin_count == len(uniform) + 1 == 59


@pytest.mark.criterion(5, "metric symmetry/identity/non-negativity over 1000 pairs; chi-square <= 1")
def test_metric_properties():
    rng = np.random.default_rng(SEED + 5)
    metrics = [("chi2", chi_square), ("minkowski p=2", lambda a, b: minkowski(a, b, 2.0)),
               ("minkowski p=1", lambda a, b: minkowski(a, b, 1.0))]
    for _ in range(1000):
        d = int(rng.integers(2, 123))
        x = rng.random(d) ** 4 * (rng.random(d) > 0.3)  # sparse, with empty bins
        y = rng.random(d) ** 4 * (rng.random(d) > 0.3)
        x[0] += 1e-3
        y[-1] += 1e-3
        x, y = x / x.sum(), y / y.sum()
        for name, fn in metrics:
            dxy, dyx = fn(x, y), fn(y, x)
            assert dxy == dyx, name
            assert fn(x, x) == 0.0 and fn(y, y) == 0.0, name
            assert dxy >= 0.0, name
        assert chi_square(x, y) <= 1.0


@pytest.mark.criterion(6, "synthetic 4-class textures, (8,1)+(24,3) riu2, 1-NN chi2 LOO accuracy >= 0.95 (< 60 s)")
def test_synthetic_end_to_end():
    start = time.perf_counter()
    images = synthetic_dataset(per_class=40, size=64, seed=SEED)
    store = build_store(images, [LbpConfig(8, 1, "riu2"), LbpConfig(24, 3, "riu2")])
    report = cross_validate(store, KnnConfig(1, DistanceMetric("chi_square")), loo_split(len(store)))
    elapsed = time.perf_counter() - start
    print(f"criterion 6: accuracy={report.accuracy:.4f} kappa={report.kappa:.4f} in {elapsed:.1f}s")
    assert len(store) == 160 and store.dim == 36
    assert report.accuracy >= 0.95
    assert elapsed < 60.0


@pytest.mark.criterion(7, "kappa and precision/recall hand cases")
def test_evaluation_units():
    assert cohen_kappa([[2, 0], [0, 2]]) == 1.0
    assert cohen_kappa([[1, 1], [1, 1]]) == 0.0
    (p0, r0), (p1, r1) = precision_recall([[2, 1], [0, 3]])
    assert abs(p0 - 1.0) <= 1e-4 and abs(r0 - 0.6667) <= 1e-4
    assert abs(p1 - 0.75) <= 1e-4 and abs(r1 - 1.0) <= 1e-4


UC_MERCED = os.environ.get("TEXLBP_UCMERCED")


@pytest.mark.criterion(8, "UC Merced full-scale reproduction (optional, needs TEXLBP_UCMERCED)")
@pytest.mark.skipif(not UC_MERCED, reason="TEXLBP_UCMERCED not set")
def test_uc_merced_reproduction():
    images = load_dataset(UC_MERCED, threads=0)
    assert len(images) == 2100
    singles = {pr: build_store(images, [LbpConfig(*pr, "riu2")], threads=0) for pr in STANDARD_PAIRS}
    multi = build_store(images, [LbpConfig(8, 1), LbpConfig(24, 3), LbpConfig(32, 5)], threads=0)
    knn_chi = KnnConfig(1, DistanceMetric("chi_square"))
    loo = loo_split(2100)

    best = cross_validate(multi, knn_chi, loo, threads=0)
    print(f"criterion 8: multi-neighborhood LOO accuracy={best.accuracy:.4f} kappa={best.kappa:.4f}")
    assert abs(best.accuracy - 0.7776) <= 0.03
    assert abs(best.kappa - 0.76) <= 0.03

    plan = stratified_kfold(multi.labels, 10, seed=0)
    chi_acc, euc_acc = [], []
    for pr, store in singles.items():
        acc = cross_validate(store, knn_chi, loo, threads=0).accuracy
        print(f"criterion 8: LBP{pr} LOO accuracy={acc:.4f}")
        assert 0.62 <= acc <= 0.68
        chi_acc.append(cross_validate(store, knn_chi, plan, threads=0).accuracy)
        euc_acc.append(cross_validate(store, KnnConfig(1, DistanceMetric("minkowski", 2)), plan,
                                      threads=0).accuracy)
    # "clear margin": mean 10-fold chi-square accuracy at least 3 points above Euclidean
    assert np.mean(chi_acc) - np.mean(euc_acc) >= 0.03
