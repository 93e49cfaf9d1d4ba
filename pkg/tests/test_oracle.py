import itertools

import numpy as np
import pandas as pd
import pytest

from errors import DomainError, NoSignalError, ShapeError
from radio.array import ArrayConfig, FocalPoint, far_field_vector, steering_vector
from radio.channel import LinkParams, beamformed_snr, calibrate_power, slot_channel, spectral_efficiency
from radio.codebook import BeamIndex3D, build_codebook, flat_index, unflatten
from radio.oracle import (
    METRIC_COLUMNS, BeamLabel, bench_sweep, codebook_se, codebook_se_batch, label_from_se, metric_rows,
    read_metrics_csv, soft_targets, summarize, sweep_optimal_beam, top_k_beams, topk_accuracy,
    trajectory_mae, write_metrics_csv,
)

LINK = LinkParams(p_r=1e6, sigma2=1.0)


def brute_force_se(h, cb, link):
    return np.array([spectral_efficiency(beamformed_snr(cb.codeword(j), h, link)) for j in range(cb.size)])


# ----------------------------------------------------------------- sweep
@pytest.mark.parametrize("j", [0, 37, 74])
def test_sweep_finds_the_focused_codeword(small_codebook, empty_scene, j):
    uav = empty_scene.bs_position + small_codebook.focal_point(j).cartesian()
    h = slot_channel(small_codebook.cfg, empty_scene, uav)
    assert sweep_optimal_beam(h, small_codebook, LINK) == unflatten(j, 5, 3)


@pytest.mark.slow
def test_full_scale_sweep_recovers_random_codewords(empty_scene):
    cb = build_codebook(ArrayConfig(), N=20, S=10)
    assert (cb.size, cb.cfg.M) == (4000, 4096)
    link = calibrate_power(cb.cfg)
    for j in np.random.default_rng(5).choice(cb.size, size=50, replace=False):
        uav = empty_scene.bs_position + cb.focal_point(int(j)).cartesian()
        h = slot_channel(cb.cfg, empty_scene, uav, cb.antennas)
        assert sweep_optimal_beam(h, cb, link, on_the_fly=True) == unflatten(int(j), 20, 10)


def test_sweep_matches_brute_force_on_two_codeword_mix(small_codebook):
    lo, hi = 3, 60
    h = 2 * small_codebook.codeword(lo) + small_codebook.codeword(hi)
    se = brute_force_se(h, small_codebook, LINK)
    best = sweep_optimal_beam(h, small_codebook, LINK)
    assert flat_index(best, 5, 3) == int(np.argmax(se))
    assert np.all(se[flat_index(best, 5, 3)] >= se - 1e-12)


def test_zero_channel_has_no_signal(small_codebook):
    with pytest.raises(NoSignalError):
        sweep_optimal_beam(np.zeros(64, complex), small_codebook, LINK)


def test_channel_shape_is_checked(small_codebook):
    with pytest.raises(ShapeError):
        codebook_se(np.ones(10, complex), small_codebook, LINK)


def test_on_the_fly_sweep_matches_cached(small_codebook, rng):
    h = rng.normal(size=64) + 1j * rng.normal(size=64)
    np.testing.assert_allclose(codebook_se(h, small_codebook, LINK, on_the_fly=True),
                               codebook_se(h, small_codebook, LINK), rtol=1e-12)


def test_batch_sweep_matches_single(small_codebook, rng):
    H = rng.normal(size=(3, 64)) + 1j * rng.normal(size=(3, 64))
    batch = codebook_se_batch(H, small_codebook, LINK)
    for row, h in zip(batch, H):
        np.testing.assert_allclose(row, codebook_se(h, small_codebook, LINK), rtol=1e-12)


def test_ties_go_to_the_smallest_flat_index(small_codebook):
    se = np.zeros(small_codebook.size)
    se[[9, 4, 20]] = [3.0, 3.0, 2.0]
    label = label_from_se(se, small_codebook, 3)
    assert [flat_index(b, 5, 3) for b in label.topk] == [4, 9, 20]
    assert label.optimal == label.topk[0]


def test_top_k_examples(rng):
    cb = build_codebook(ArrayConfig(m_y=4, m_z=4), N=4, S=2)
    h = rng.normal(size=16) + 1j * rng.normal(size=16)
    se = brute_force_se(h, cb, LINK)
    reference = sorted(range(cb.size), key=lambda i: (-se[i], i))

    assert top_k_beams(h, cb, LINK, 1).topk == [sweep_optimal_beam(h, cb, LINK)]
    full = top_k_beams(h, cb, LINK, cb.size)
    assert [flat_index(b, 4, 2) for b in full.topk] == reference
    assert full.se[-1] == pytest.approx(se.min())
    assert all(a >= b for a, b in zip(full.se, full.se[1:]))
    assert len({flat_index(b, 4, 2) for b in full.topk}) == cb.size


def test_k_out_of_range(small_codebook):
    se = np.ones(small_codebook.size)
    with pytest.raises(DomainError):
        label_from_se(se, small_codebook, 0)
    with pytest.raises(DomainError):
        label_from_se(se, small_codebook, small_codebook.size + 1)


def test_focused_codeword_beats_plane_wave_in_near_field(empty_scene):
    cfg = ArrayConfig()
    link = calibrate_power(cfg)
    fp = FocalPoint(0.2, 0.1, 30.0)
    h = slot_channel(cfg, empty_scene, empty_scene.bs_position + fp.cartesian())
    near = spectral_efficiency(beamformed_snr(steering_vector(cfg, fp), h, link))
    far = spectral_efficiency(beamformed_snr(far_field_vector(cfg, fp.theta, fp.phi, fp.r), h, link))
    assert near - far > 0


def test_label_invariant_under_channel_scaling(small_codebook, rng):
    h = rng.normal(size=64) + 1j * rng.normal(size=64)
    assert sweep_optimal_beam(3.7 * h, small_codebook, LINK) == sweep_optimal_beam(h, small_codebook, LINK)


def test_bench_sweep_reports_the_focused_beam(small_codebook, empty_scene):
    j = 52
    h = slot_channel(small_codebook.cfg, empty_scene,
                     empty_scene.bs_position + small_codebook.focal_point(j).cartesian())
    for workers in (1, 2):
        out = bench_sweep(h, small_codebook, LINK, workers=workers)
        assert out["best_flat"] == j
        assert out["codewords"] == 75 and out["antennas"] == 64


# ---------------------------------------------------------- soft targets
def label(*beams):
    return BeamLabel(optimal=beams[0], topk=list(beams), se=[float(len(beams) - k) for k in range(len(beams))])


def test_soft_target_one_hot_for_k1():
    t = soft_targets(label(BeamIndex3D(3, 7, 2)), 0.5, 20, 10)
    assert t.theta[3] == 1.0 and t.phi[7] == 1.0 and t.r[2] == 1.0
    assert t.theta.sum() == 1.0


def test_soft_target_concentrates_shared_index():
    t = soft_targets(label(BeamIndex3D(5, 1, 2), BeamIndex3D(5, 2, 7), BeamIndex3D(5, 3, 4)), 0.5, 20, 10)
    assert t.theta[5] == pytest.approx(1.0)
    np.testing.assert_allclose(t.r[[2, 7, 4]], [4 / 7, 2 / 7, 1 / 7])
    np.testing.assert_allclose(t.phi[[1, 2, 3]], [4 / 7, 2 / 7, 1 / 7])


def test_soft_targets_are_distributions(rng):
    for K in (1, 2, 5, 10):
        for gamma in (0.1, 0.5, 1.0):
            flats = rng.choice(75, size=K, replace=False)
            t = soft_targets(label(*[unflatten(f, 5, 3) for f in flats]), gamma, 5, 3)
            for v in t.as_tuple():
                assert np.all(v >= 0)
                assert v.sum() == pytest.approx(1.0, abs=1e-9)


def test_soft_target_gamma_range():
    with pytest.raises(DomainError):
        soft_targets(label(BeamIndex3D(0, 0, 0)), 0.0, 3, 2)


# --------------------------------------------------------------- metrics
def test_one_hot_logits_are_fully_correct():
    true = BeamIndex3D(2, 1, 0)
    acc = topk_accuracy(np.eye(4)[2] * 5, np.eye(4)[1] * 5, np.eye(2)[0] * 5, true, 1)
    assert acc == {"theta": True, "phi": True, "r": True, "joint": True}


def test_joint_needs_every_dimension():
    true = BeamIndex3D(2, 1, 0)
    acc = topk_accuracy(np.eye(4)[2] * 5, np.eye(4)[3] * 5, np.eye(2)[0] * 5, true, 1)
    assert acc["theta"] and not acc["phi"] and not acc["joint"]


def test_joint_top5_matches_full_enumeration(rng):
    N, S = 4, 2

    def softmax(x):
        e = np.exp(x - x.max())
        return e / e.sum()

    for _ in range(20):
        lt, lp, lr = rng.normal(size=N), rng.normal(size=N), rng.normal(size=S)
        pt, pp, pr = softmax(lt), softmax(lp), softmax(lr)
        scores = {}
        for a, b, c in itertools.product(range(N), range(N), range(S)):
            scores[(a * N + b) * S + c] = pt[a] * pp[b] * pr[c]
        ranking = sorted(scores, key=lambda f: (-scores[f], f))
        true = unflatten(int(rng.integers(0, N * N * S)), N, S)
        assert topk_accuracy(lt, lp, lr, true, 5)["joint"] == (flat_index(true, N, S) in ranking[:5])


def test_trajectory_mae_examples():
    true = np.zeros((4, 3))
    assert trajectory_mae(true, true) == 0.0
    off = true.copy()
    off[:, 0] += 1.0
    assert trajectory_mae(off, true) == pytest.approx(1 / 3)
    pred = np.array([[[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]], [[0.0, 0.0, 6.0], [3.0, 3.0, 3.0]]])
    # |erros| somados: 6 + 0 + 6 + 9 = 21 sobre 12 entradas
    assert trajectory_mae(pred, np.zeros_like(pred)) == pytest.approx(21 / 12)
    np.testing.assert_allclose(trajectory_mae(pred, np.zeros_like(pred), per_step=True), [2.0, 1.5])
    with pytest.raises(ShapeError):
        trajectory_mae(np.zeros((2, 3)), np.zeros((3, 3)))


def test_metric_rows_and_csv(tmp_path):
    labels = [[BeamIndex3D(1, 2, 0), BeamIndex3D(0, 0, 1)] for _ in range(2)]
    logits = [[(np.eye(3)[b.i_theta], np.eye(3)[b.i_phi], np.eye(2)[b.i_r]) for b in seq] for seq in labels]
    pred = np.zeros((2, 2, 3))
    true = np.ones((2, 2, 3))
    rows = metric_rows(pred, true, logits, labels)
    assert [r["step"] for r in rows] == [1, 2]
    assert all(r["mae_m"] == 1.0 and r["top1_joint"] == 1.0 and r["top5_joint"] == 1.0 for r in rows)

    path = write_metrics_csv(rows, tmp_path / "metrics.csv")
    assert path.read_text().splitlines()[0] == ",".join(METRIC_COLUMNS)
    back = read_metrics_csv(path)
    assert back == rows
    assert summarize(back)["top1_theta"] == 1.0


def test_metrics_csv_keeps_full_precision(tmp_path):
    row = {c: 1 / 3 for c in METRIC_COLUMNS}
    row["step"] = 1
    path = write_metrics_csv([row], tmp_path / "m.csv")
    df = pd.read_csv(path)
    assert list(df.columns) == METRIC_COLUMNS and df["step"].dtype.kind == "i"
    assert read_metrics_csv(path) == [row]
    assert read_metrics_csv(write_metrics_csv([], tmp_path / "empty.csv")) == []


def test_metrics_csv_rejects_foreign_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("step,mae\n1,0.5\n")
    with pytest.raises(ShapeError):
        read_metrics_csv(path)
