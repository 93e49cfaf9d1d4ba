import json

import numpy as np
import pytest
from pydantic import ValidationError

from dataset.container import (
    MANIFEST_NAME, CodebookSpec, DatasetManifest, SequenceRecord, read_dataset, read_split, write_dataset,
    write_split,
)
from dataset.pipeline import GenerationConfig, generate_dataset, sequence_seeds
from errors import (
    BadMagicError, BadVersionError, ConfigError, DatasetFormatError, ManifestMismatchError, TruncatedError,
)
from predictor.data import samples_from_records
from radio.array import ArrayConfig
from radio.channel import LinkParams
from radio.scene import generate_scene, load_scene


def make_record(seq_id, rng, T=5, P=4, K=2, N=3, S=2):
    def dist(cols):
        w = rng.random((T, cols)) + 0.1
        return (w / w.sum(axis=1, keepdims=True)).astype(np.float32)

    topk = rng.integers(0, N * N * S, size=(T, K)).astype(np.uint32)
    return SequenceRecord(
        seq_id=seq_id, mode=seq_id % 10,
        positions=rng.normal(size=(T, 3)).astype(np.float32),
        gps=rng.normal(size=(T, 3)).astype(np.float32),
        cloud=rng.normal(size=(P, 3)).astype(np.float32),
        optimal=topk[:, 0].copy(), topk=topk,
        topk_se=np.sort(rng.random((T, K)), axis=1)[:, ::-1].astype(np.float32),
        soft_theta=dist(N), soft_phi=dist(N), soft_r=dist(S),
    )


def make_manifest(**kw):
    base = dict(codebook=CodebookSpec(N=3, S=2), link=LinkParams(), master_seed=0, scene_seed=0,
                split_sizes={"train": 2, "val": 1, "test": 1}, sigma_gps=0.5, K=2, gamma=0.5, dt=0.1,
                T=5, P=4, T_prev=3, T_pred=2)
    base.update(kw)
    return DatasetManifest(**base)


# ------------------------------------------------------------- container
def test_split_roundtrip(tmp_path, rng):
    records = [make_record(i, rng) for i in range(3)]
    back = read_split(write_split(records, tmp_path / "train.nftl"))
    assert [r.seq_id for r in back] == [0, 1, 2]
    for a, b in zip(records, back):
        assert a.mode == b.mode
        for (x, _), (y, _) in zip(a.arrays(), b.arrays()):
            np.testing.assert_array_equal(x, y)


def test_empty_split_is_valid(tmp_path):
    assert read_split(write_split([], tmp_path / "val.nftl")) == []


def test_corrupt_containers(tmp_path, rng):
    raw = write_split([make_record(0, rng)], tmp_path / "ok.nftl").read_bytes()
    cases = {
        "empty": (b"", TruncatedError),
        "magic": (b"ABCD" + raw[4:], BadMagicError),
        "version": (raw[:4] + (7).to_bytes(4, "little") + raw[8:], BadVersionError),
        "short": (raw[:-10], TruncatedError),
        "trailing": (raw + b"\x00", DatasetFormatError),
    }
    for name, (blob, err) in cases.items():
        path = tmp_path / f"{name}.nftl"
        path.write_bytes(blob)
        with pytest.raises(err):
            read_split(path)


def test_dataset_manifest_consistency(tmp_path, rng):
    splits = {"train": [make_record(0, rng), make_record(1, rng)], "val": [make_record(2, rng)],
              "test": [make_record(3, rng)]}
    write_dataset(splits, make_manifest(), tmp_path)
    loaded, manifest = read_dataset(tmp_path)
    assert manifest.record_counts == {"train": 2, "val": 1, "test": 1}
    assert manifest.split_ids["val"] == [2, 3]
    assert len(loaded["train"]) == 2

    doc = json.loads((tmp_path / MANIFEST_NAME).read_text())
    doc["record_counts"]["train"] = 5
    (tmp_path / MANIFEST_NAME).write_text(json.dumps(doc))
    with pytest.raises(ManifestMismatchError):
        read_dataset(tmp_path, ("train",))


def test_dataset_dims_must_match_manifest(tmp_path, rng):
    write_dataset({"train": [make_record(0, rng)]}, make_manifest(P=9), tmp_path)
    with pytest.raises(ManifestMismatchError):
        read_dataset(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(DatasetFormatError):
        read_dataset(tmp_path)


# -------------------------------------------------------------- pipeline
def tiny_generation(**kw):
    base = dict(array=ArrayConfig(m_y=8, m_z=8), N=5, S=3, counts=(3, 2, 2), T=6, P=8, T_prev=3, T_pred=3)
    base.update(kw)
    return GenerationConfig(**base)


def test_generation_config_validation():
    with pytest.raises(ValidationError):
        tiny_generation(T_prev=4, T_pred=3)
    with pytest.raises(ValidationError):
        tiny_generation(K=100)
    with pytest.raises(ValidationError):
        tiny_generation(counts=(1, -1, 0))


def test_sequence_seeds_are_stable():
    assert sequence_seeds(5, 2) == sequence_seeds(5, 2)
    assert sequence_seeds(5, 2)["base"] != sequence_seeds(5, 3)["base"]


def test_generated_dataset_is_labelled_and_reproducible(tmp_path):
    scene = generate_scene(1)
    a = generate_dataset(scene, tiny_generation(), 42, tmp_path / "a", progress=False)
    generate_dataset(scene, tiny_generation(), 42, tmp_path / "b", progress=False)
    generate_dataset(scene, tiny_generation(workers=2), 42, tmp_path / "c", progress=False)
    for name in ("train.nftl", "val.nftl", "test.nftl", MANIFEST_NAME):
        ref = (tmp_path / "a" / name).read_bytes()
        assert (tmp_path / "b" / name).read_bytes() == ref
        assert (tmp_path / "c" / name).read_bytes() == ref

    assert a.record_counts == {"train": 3, "val": 2, "test": 2}
    assert a.split_ids == {"train": [0, 3], "val": [3, 5], "test": [5, 7]}
    assert load_scene(tmp_path / "a" / "scene.json").seed == 1

    splits, manifest = read_dataset(tmp_path / "a")
    for records in splits.values():
        for rec in records:
            assert rec.mode == sequence_seeds(42, rec.seq_id)["base"] % 10
            np.testing.assert_array_equal(rec.optimal, rec.topk[:, 0])
            assert np.all(np.diff(rec.topk_se, axis=1) <= 0)
            assert np.all(rec.topk_se[:, 0] > 0)
            for soft in (rec.soft_theta, rec.soft_phi, rec.soft_r):
                np.testing.assert_allclose(soft.sum(axis=1), 1.0, atol=1e-6)
            assert rec.cloud.shape == (8, 3)

    samples = samples_from_records(splits["train"], manifest.T_prev, manifest.T_pred)
    assert len(samples) == 3
    assert samples[0].gps_prev.shape == (3, 3) and samples[0].future.shape == (3, 3)
    assert samples[0].soft[2].shape == (3, 3)
    with pytest.raises(ConfigError):
        samples_from_records(splits["train"], 3, 4)


def test_default_cloud_size_is_1024(tmp_path):
    assert GenerationConfig().P == 1024
    generate_dataset(generate_scene(2), tiny_generation(P=1024, counts=(1, 0, 0)), 9, tmp_path, progress=False)
    splits, manifest = read_dataset(tmp_path, ("train",))
    assert manifest.P == 1024
    assert splits["train"][0].cloud.shape == (1024, 3)
    assert np.all(np.isfinite(splits["train"][0].cloud))
