import numpy as np
import pytest
from pydantic import ValidationError

from errors import DomainError, GenerationError, ShapeError
from radio.array import ArrayConfig, FocalPoint, steering_vector
from radio.channel import (
    BOUNCE, LOS, LinkParams, PathSet, beamformed_snr, calibrate_power, channel_vector, enumerate_paths,
    slot_channel, spectral_efficiency,
)
from radio.geometry import points_inside_boxes, segment_blocked
from radio.scene import Scene, SceneParams, generate_scene, load_scene, save_scene

BS = np.array([0.0, 0.0, 25.0])


def blocking_scene() -> Scene:
    return Scene(bs_position=BS.copy(), box_min=np.array([[40.0, -10.0, 0.0]]), box_max=np.array([[60.0, 10.0, 50.0]]))


def side_scene() -> Scene:
    return Scene(
        bs_position=BS.copy(),
        box_min=np.array([[40.0, 20.0, 0.0]]),
        box_max=np.array([[60.0, 40.0, 30.0]]),
        scatterer_pos=np.array([[50.0, 20.0, 15.0]]),
        reflection=np.array([0.5]),
        scatterer_host=np.array([0]),
    )


# ------------------------------------------------------------- geometry
def test_segment_through_box_is_blocked():
    s = blocking_scene()
    assert segment_blocked(BS, [100.0, 0.0, 25.0], s.box_min, s.box_max)
    assert not segment_blocked(BS, [100.0, 30.0, 25.0], s.box_min, s.box_max)


def test_touching_a_face_does_not_block():
    lo, hi = np.array([[0.0, 0.0, 0.0]]), np.array([[1.0, 1.0, 1.0]])
    # rasante à face superior
    assert not segment_blocked([-1.0, 0.5, 1.0], [2.0, 0.5, 1.0], lo, hi)
    # parte da face para fora
    assert not segment_blocked([1.0, 0.5, 0.5], [3.0, 0.5, 0.5], lo, hi)
    assert segment_blocked([-1.0, 0.5, 0.5], [3.0, 0.5, 0.5], lo, hi)


def test_points_inside_boxes_is_strict():
    lo, hi = np.array([[0.0, 0.0, 0.0]]), np.array([[1.0, 1.0, 1.0]])
    np.testing.assert_array_equal(
        points_inside_boxes([[0.5, 0.5, 0.5], [1.0, 0.5, 0.5], [2.0, 0.0, 0.0]], lo, hi), [True, False, False])


# ---------------------------------------------------------------- scene
def test_scene_generation_is_deterministic():
    a, b = generate_scene(7), generate_scene(7)
    for field in ("box_min", "box_max", "scatterer_pos", "reflection", "scatterer_host"):
        np.testing.assert_array_equal(getattr(a, field), getattr(b, field))


def test_scene_counts_and_invariants():
    scene = generate_scene(1, building_count=5)
    assert scene.building_count == 5
    assert scene.scatterer_count == 5 * SceneParams().scatterers_per_building
    assert np.all(scene.box_max > scene.box_min)
    assert not scene.contains_point(scene.bs_position)
    assert np.all((scene.reflection >= 0.3) & (scene.reflection <= 0.7))
    for s, h in zip(scene.scatterer_pos, scene.scatterer_host):
        lo, hi = scene.box_min[h], scene.box_max[h]
        assert np.all(s >= lo - 1e-9) and np.all(s <= hi + 1e-9)
        assert np.any(np.isclose(s, lo) | np.isclose(s, hi))


def test_scene_without_buildings():
    scene = generate_scene(3, building_count=0)
    assert scene.building_count == 0 and scene.scatterer_count == 0
    paths = enumerate_paths(scene, [80.0, 10.0, 40.0])
    assert len(paths) == 1 and paths.has_los


def test_infeasible_scene_raises():
    with pytest.raises(GenerationError):
        generate_scene(0, building_count=2, region_bounds=(30.0, 31.0, 0.0, 1.0))


def test_scene_params_validation():
    with pytest.raises(ValidationError):
        SceneParams(region_bounds=(10.0, 5.0, 0.0, 1.0))


def test_scene_document_roundtrip(tmp_path):
    scene = generate_scene(11)
    path = save_scene(scene, tmp_path / "scene.json")
    back = load_scene(path)
    assert back.seed == 11
    np.testing.assert_array_equal(back.box_min, scene.box_min)
    np.testing.assert_array_equal(back.scatterer_pos, scene.scatterer_pos)
    np.testing.assert_array_equal(back.scatterer_host, scene.scatterer_host)


def test_without_building_drops_its_scatterers():
    scene = generate_scene(5)
    reduced = scene.without_building(0)
    assert reduced.building_count == scene.building_count - 1
    assert reduced.scatterer_count == int(np.sum(scene.scatterer_host != 0))
    assert reduced.scatterer_host.max() < reduced.building_count


# ---------------------------------------------------------------- paths
def test_empty_scene_has_one_los_path(empty_scene):
    uav = np.array([60.0, 20.0, 45.0])
    paths = enumerate_paths(empty_scene, uav)
    assert len(paths) == 1
    assert paths.paths[0].kind == LOS
    assert paths.paths[0].r_ref == pytest.approx(np.linalg.norm(uav - BS))


def test_full_blockage_gives_no_paths(small_array):
    scene = blocking_scene()
    uav = [100.0, 0.0, 25.0]
    assert len(enumerate_paths(scene, uav)) == 0
    assert not np.any(slot_channel(small_array, scene, uav))


def test_los_plus_single_bounce():
    scene = side_scene()
    wl = ArrayConfig().wavelength
    paths = enumerate_paths(scene, [100.0, 0.0, 25.0], wl)
    assert [p.kind for p in paths] == [LOS, BOUNCE]
    bounce = paths.paths[1]
    assert bounce.r_ref == pytest.approx(2 * np.sqrt(3000.0))
    assert abs(bounce.amplitude) == pytest.approx(0.5 * wl / (4 * np.pi * 2 * np.sqrt(3000.0)))


def test_uav_inside_building_is_rejected():
    with pytest.raises(DomainError):
        enumerate_paths(blocking_scene(), [50.0, 0.0, 25.0])


def test_single_antenna_los_channel(empty_scene):
    cfg = ArrayConfig(m_y=1, m_z=1)
    h = slot_channel(cfg, empty_scene, BS + [30.0, 40.0, 0.0])
    a = cfg.wavelength / (4 * np.pi * 50.0)
    np.testing.assert_allclose(h, [a * np.exp(-1j * cfg.wavenumber * 50.0)], rtol=1e-12)


def test_empty_path_set_gives_zero_channel(small_array, empty_scene):
    h = channel_vector(small_array, PathSet(), empty_scene, [50.0, 0.0, 30.0])
    assert h.shape == (64,) and not np.any(h)


def test_channel_is_linear_in_paths(small_array):
    scene = side_scene()
    uav = [100.0, 0.0, 25.0]
    paths = enumerate_paths(scene, uav, small_array.wavelength)
    whole = channel_vector(small_array, paths, scene, uav)
    parts = sum(channel_vector(small_array, PathSet([p]), scene, uav) for p in paths)
    np.testing.assert_allclose(whole, parts, rtol=1e-14, atol=0)


def test_removing_a_building_never_removes_other_paths():
    scene = generate_scene(3)
    rng = np.random.default_rng(0)
    for _ in range(20):
        uav = np.array([rng.uniform(20, 150), rng.uniform(-80, 80), 45.0])
        full = enumerate_paths(scene, uav)
        for b in range(scene.building_count):
            kept = [p for p in full if not (p.kind == BOUNCE and scene.scatterer_host[p.scatterer] == b)]
            assert len(enumerate_paths(scene.without_building(b), uav)) >= len(kept)


def test_channel_is_deterministic(small_array):
    scene = generate_scene(4)
    uav = [90.0, -20.0, 50.0]
    np.testing.assert_array_equal(slot_channel(small_array, scene, uav), slot_channel(small_array, scene, uav))


# ------------------------------------------------------------------ SNR
def test_unit_snr():
    link = LinkParams(p_r=4.0, sigma2=2.0)
    w = np.ones(4, complex)
    h = w / np.linalg.norm(w) * np.sqrt(link.sigma2 / link.p_r) / np.linalg.norm(w)
    assert beamformed_snr(w, h, link) == pytest.approx(1.0)


def test_snr_of_zero_channel():
    assert beamformed_snr(np.ones(3, complex), np.zeros(3, complex), LinkParams()) == 0.0


def test_snr_matches_naive_dot(rng):
    link = LinkParams(p_r=3.0, sigma2=0.5)
    w = rng.normal(size=8) + 1j * rng.normal(size=8)
    h = rng.normal(size=8) + 1j * rng.normal(size=8)
    acc = 0j
    for a, b in zip(w, h):
        acc += a.conjugate() * b
    ref = link.p_r * (acc.real ** 2 + acc.imag ** 2) / link.sigma2
    assert beamformed_snr(w, h, link) == pytest.approx(ref, rel=1e-12)


def test_snr_global_phase_invariance(rng):
    link = LinkParams()
    w = np.exp(1j * rng.uniform(0, 2 * np.pi, 16))
    h = rng.normal(size=16) + 1j * rng.normal(size=16)
    rot = np.exp(1j * 1.234)
    assert beamformed_snr(w, rot * h, link) == pytest.approx(beamformed_snr(w, h, link), rel=1e-12)


def test_snr_shape_mismatch():
    with pytest.raises(ShapeError):
        beamformed_snr(np.ones(3), np.ones(4), LinkParams())


def test_spectral_efficiency_values():
    assert spectral_efficiency(1.0) == 1.0
    assert spectral_efficiency(0.0) == 0.0
    assert spectral_efficiency(3.0) == 2.0
    with pytest.raises(DomainError):
        spectral_efficiency(-0.1)


def test_link_params_must_be_positive():
    with pytest.raises(ValidationError):
        LinkParams(p_r=0.0)


def test_calibrated_power_hits_target_at_reference_range(small_array, empty_scene):
    link = calibrate_power(small_array, sigma2=1.0, r_ref=100.0, target_db=20.0)
    fp = FocalPoint(0.3, 0.2, 100.0)
    h = slot_channel(small_array, empty_scene, empty_scene.bs_position + fp.cartesian())
    snr = beamformed_snr(steering_vector(small_array, fp), h, link)
    assert 10 * np.log10(snr) == pytest.approx(20.0, abs=1e-9)
