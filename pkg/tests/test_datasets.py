import struct

import numpy as np
import pytest

from elasticsgd.datasets import (
    Dataset,
    gen_synthetic,
    load_idx,
    normalize,
    sample_batch,
    write_idx,
)
from elasticsgd.errors import DataFormatError, InputError
from elasticsgd.rng import CounterRng


def fake_idx_pair(tmp_path, n=20, d=6, classes=3, seed=0):
    rng = CounterRng(seed)
    images = rng.randint_block(n * d, 256).astype(np.uint8).reshape(n, d)
    labels = rng.randint_block(n, classes).astype(np.uint8)
    ip, lp = str(tmp_path / "img.idx"), str(tmp_path / "lab.idx")
    write_idx(ip, lp, images, labels)
    return ip, lp, images, labels


class TestLoadIdx:
    def test_roundtrip_counts_and_scaling(self, tmp_path):
        ip, lp, images, labels = fake_idx_pair(tmp_path)
        ds = load_idx(ip, lp)
        assert ds.n == 20 and ds.dim == 6
        assert np.array_equal(ds.labels, labels.astype(np.int64))
        assert np.array_equal(ds.samples, images / 255.0)
        assert ds.samples.min() >= 0.0 and ds.samples.max() <= 1.0

    def test_write_load_write_is_bit_exact(self, tmp_path):
        ip, lp, _, _ = fake_idx_pair(tmp_path, seed=3)
        ds = load_idx(ip, lp)
        ip2, lp2 = str(tmp_path / "img2.idx"), str(tmp_path / "lab2.idx")
        write_idx(ip2, lp2, ds.samples, ds.labels)
        assert open(ip, "rb").read() == open(ip2, "rb").read()
        assert open(lp, "rb").read() == open(lp2, "rb").read()

    def test_bad_image_magic(self, tmp_path):
        p = tmp_path / "bad.idx"
        p.write_bytes(struct.pack(">IIII", 0x99, 1, 2, 2) + b"\x00" * 4)
        lp = tmp_path / "lab.idx"
        lp.write_bytes(struct.pack(">II", 0x00000801, 1) + b"\x00")
        with pytest.raises(DataFormatError, match="magic"):
            load_idx(str(p), str(lp))

    def test_bad_label_magic(self, tmp_path):
        ip, lp, _, _ = fake_idx_pair(tmp_path)
        bad = tmp_path / "badlab.idx"
        bad.write_bytes(struct.pack(">II", 0x00000777, 1) + b"\x00")
        with pytest.raises(DataFormatError, match="magic"):
            load_idx(ip, str(bad))

    def test_truncated_file_reports_offset(self, tmp_path):
        p = tmp_path / "trunc.idx"
        p.write_bytes(struct.pack(">IIII", 0x00000803, 10, 2, 2) + b"\x00" * 5)
        lp = tmp_path / "lab.idx"
        lp.write_bytes(struct.pack(">II", 0x00000801, 10) + b"\x00" * 10)
        with pytest.raises(DataFormatError, match="offset 16"):
            load_idx(str(p), str(lp))

    def test_count_mismatch(self, tmp_path):
        ip, _, images, _ = fake_idx_pair(tmp_path)
        lp = tmp_path / "short.idx"
        lp.write_bytes(struct.pack(">II", 0x00000801, 5) + b"\x00" * 5)
        with pytest.raises(DataFormatError, match="count"):
            load_idx(ip, str(lp))


class TestSynthetic:
    def test_deterministic(self):
        a = gen_synthetic(3, 5, 10, seed=4)
        b = gen_synthetic(3, 5, 10, seed=4)
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.labels, b.labels)
        assert not np.array_equal(a.samples, gen_synthetic(3, 5, 10, seed=5).samples)

    def test_counting(self):
        ds = gen_synthetic(3, 4, 50, seed=1)
        assert ds.n == 150 and ds.num_classes == 3
        assert np.bincount(ds.labels).tolist() == [50, 50, 50]

    def test_least_squares_oracle_separates_blobs(self):
        # independent closed-form classifier: least squares onto one-hot
        ds = gen_synthetic(2, 8, 200, seed=9, separation=6.0)
        x = np.hstack([ds.samples, np.ones((ds.n, 1))])
        onehot = np.eye(2)[ds.labels]
        coef, *_ = np.linalg.lstsq(x, onehot, rcond=None)
        pred = (x @ coef).argmax(axis=1)
        assert (pred == ds.labels).mean() >= 0.99

    def test_dim_smaller_than_classes_rejected(self):
        with pytest.raises(InputError):
            gen_synthetic(5, 3, 10, seed=0)


class TestNormalize:
    def test_two_point_feature(self):
        ds = Dataset(np.array([[0.0], [2.0]]), np.array([0, 1]), 2)
        out = normalize(ds)
        assert np.allclose(out.samples, [[-1.0], [1.0]], atol=1e-12)

    def test_moments_and_idempotence(self):
        ds = gen_synthetic(3, 6, 40, seed=2)
        out = normalize(ds)
        assert np.abs(out.samples.mean(axis=0)).max() < 1e-10
        assert np.abs(out.samples.std(axis=0) - 1.0).max() < 1e-8
        again = normalize(out)
        assert np.abs(again.samples - out.samples).max() < 1e-10

    def test_constant_feature_maps_to_zero(self):
        ds = Dataset(np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]), np.zeros(3, np.int64), 1)
        out = normalize(ds)
        assert np.array_equal(out.samples[:, 0], [0.0, 0.0, 0.0])


class TestSampleBatch:
    def test_single_sample(self):
        ds = Dataset(np.array([[1.0, 2.0]]), np.array([0]), 1)
        batch = sample_batch(ds, 1, CounterRng(0))
        assert np.array_equal(batch.samples, ds.samples)

    def test_deterministic_sequence(self):
        ds = gen_synthetic(2, 3, 20, seed=0)
        idx_a = [sample_batch(ds, 4, r).labels.tolist() for r in [CounterRng(1)] for _ in range(3)]
        idx_b = [sample_batch(ds, 4, r).labels.tolist() for r in [CounterRng(1)] for _ in range(3)]
        assert idx_a == idx_b

    def test_uniformity(self):
        ds = Dataset(np.arange(10, dtype=np.float64).reshape(10, 1),
                     np.arange(10, dtype=np.int64), 10)
        rng = CounterRng(13)
        counts = np.zeros(10)
        batch = sample_batch(ds, 10, rng)
        for _ in range(10_000):
            batch = sample_batch(ds, 10, rng)
            counts += np.bincount(batch.labels, minlength=10)
        n = 100_000
        sigma = np.sqrt(n * 0.1 * 0.9)
        assert (np.abs(counts - n * 0.1) < 5 * sigma).all()

    def test_out_of_range(self):
        ds = gen_synthetic(2, 3, 5, seed=0)
        with pytest.raises(InputError):
            sample_batch(ds, 0, CounterRng(0))
        with pytest.raises(InputError):
            sample_batch(ds, 11, CounterRng(0))

    def test_batch_nbytes(self):
        ds = gen_synthetic(2, 3, 5, seed=0)
        assert sample_batch(ds, 4, CounterRng(0)).nbytes == 4 * 3 * 8


def test_dataset_immutable():
    ds = gen_synthetic(2, 3, 5, seed=0)
    with pytest.raises(ValueError):
        ds.samples[0, 0] = 99.0
