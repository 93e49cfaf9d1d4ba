import numpy as np
import pytest

from errors import DomainError
from prompts import MODE_DESCRIPTIONS, TASK_MODE_COUNT, describe_mode, task_mode_label
from radio.codebook import CodebookRanges
from radio.scene import generate_scene
from sensing.point_cloud import DEFAULT_GROUND, sample_point_cloud
from sensing.trajectory import (
    MOTION_MODES, MotionParams, add_gps_noise, collision_free, derive_seed, generate_trajectory, in_coverage,
    simulate_motion,
)


def test_derive_seed_is_stable_and_spread():
    assert derive_seed(42, 3) == derive_seed(42, 3)
    seeds = {derive_seed(42, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert all(0 <= s < 2 ** 64 for s in seeds)


def test_modes_and_prompts_line_up():
    assert TASK_MODE_COUNT == len(MOTION_MODES) == len(MODE_DESCRIPTIONS) == 10
    assert "hover" in describe_mode(6).lower()
    with pytest.raises(DomainError):
        task_mode_label(10)


def test_straight_line_motion():
    pos = simulate_motion(MOTION_MODES[0], [50.0, 0.0, 40.0], 0.0, T=5, dt=0.1)
    np.testing.assert_allclose(np.diff(pos, axis=0), np.tile([0.6, 0.0, 0.0], (4, 1)), atol=1e-12)


def test_acceleration_respects_speed_cap():
    params = MotionParams(speed=2.0, accel=50.0, speed_cap=5.0)
    pos = simulate_motion(params, [0.0, 0.0, 30.0], 0.0, T=30, dt=0.1)
    step = np.linalg.norm(np.diff(pos, axis=0), axis=1)
    assert step.max() == pytest.approx(0.5)


def test_hover_stays_put():
    pos = simulate_motion(MOTION_MODES[6], [60.0, 0.0, 40.0], 1.0, T=20, dt=0.1, rng=np.random.default_rng(3))
    assert np.abs(pos - pos[0]).max() <= 0.1 + 1e-12


@pytest.mark.parametrize("mode", range(10))
def test_generated_trajectories_stay_valid(mode):
    scene = generate_scene(2)
    ranges = CodebookRanges()
    pos = generate_trajectory(scene, mode, T=20, dt=0.1, seed=derive_seed(9, mode), ranges=ranges)
    assert pos.shape == (20, 3)
    assert pos[:, 2].min() >= 5.0
    assert in_coverage(scene, pos, ranges)
    assert collision_free(scene, pos)


def test_trajectory_is_deterministic_per_seed(empty_scene):
    a = generate_trajectory(empty_scene, 2, 20, 0.1, seed=77)
    b = generate_trajectory(empty_scene, 2, 20, 0.1, seed=77)
    c = generate_trajectory(empty_scene, 2, 20, 0.1, seed=78)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_trajectory_rejects_bad_input(empty_scene):
    with pytest.raises(DomainError):
        generate_trajectory(empty_scene, 11, 20, 0.1, seed=0)
    with pytest.raises(DomainError):
        generate_trajectory(empty_scene, 0, 1, 0.1, seed=0)


def test_gps_noise():
    pos = np.zeros((40000, 3))
    np.testing.assert_array_equal(add_gps_noise(pos, 0.0, 5), pos)
    noisy = add_gps_noise(pos, 0.5, 5)
    np.testing.assert_array_equal(noisy, add_gps_noise(pos, 0.5, 5))
    assert noisy.std() == pytest.approx(0.5, abs=0.005)
    np.testing.assert_allclose(noisy.std(axis=0), 0.5, atol=0.01)
    assert abs(noisy.mean()) < 0.005
    with pytest.raises(DomainError):
        add_gps_noise(pos, -1.0, 5)


# ---------------------------------------------------------- point cloud
def test_point_cloud_lies_on_visible_faces():
    scene = generate_scene(1)
    cloud = sample_point_cloud(scene, 300, seed=4)
    assert cloud.shape == (300, 3)
    for p in cloud:
        on_face = False
        for lo, hi in zip(scene.box_min, scene.box_max):
            inside = np.all(p >= lo - 1e-9) and np.all(p <= hi + 1e-9)
            if inside and np.any(np.isclose(p, lo) | np.isclose(p, hi)):
                on_face = True
        assert on_face


def test_point_cloud_is_deterministic():
    scene = generate_scene(1)
    np.testing.assert_array_equal(sample_point_cloud(scene, 50, 8), sample_point_cloud(scene, 50, 8))


def test_point_cloud_falls_back_to_ground(empty_scene):
    cloud = sample_point_cloud(empty_scene, 40, seed=1)
    x0, x1, y0, y1 = DEFAULT_GROUND
    assert np.all(cloud[:, 2] == 0)
    assert np.all((cloud[:, 0] >= x0) & (cloud[:, 0] <= x1) & (cloud[:, 1] >= y0) & (cloud[:, 1] <= y1))


def test_point_cloud_needs_points(empty_scene):
    with pytest.raises(DomainError):
        sample_point_cloud(empty_scene, 0, seed=1)
