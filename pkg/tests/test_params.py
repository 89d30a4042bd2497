"""Flat parameter store, checkpoint container, numeric helpers."""

import math

import numpy as np
import pytest

from pocketflow.params import (
    CheckpointError,
    ParamStore,
    load_checkpoint,
    max_relative_error,
    save_checkpoint,
    softplus,
    softplus_inverse,
)


class TestParamStore:
    def test_sections_are_views_of_flat(self):
        store = ParamStore({"w": (2, 3), "scalar": (), "b": (4,)})
        assert store.size == 11
        store["w"][1, 2] = 7.0
        assert store.flat[5] == 7.0
        store.flat[6] = 3.0
        assert float(store["scalar"]) == 3.0

    def test_flat_rebinding_rejected(self):
        store = ParamStore({"w": (2,)})
        with pytest.raises(AttributeError):
            store.flat = np.zeros(2)
        store.flat -= 1.0  # in-place ops are fine
        assert np.array_equal(store.flat, [-1.0, -1.0])

    def test_zeros_like_and_copy(self):
        store = ParamStore({"w": (3,)})
        store["w"][...] = [1.0, 2.0, 3.0]
        zeros = store.zeros_like()
        assert zeros.shapes == store.shapes and zeros.flat.sum() == 0.0
        dup = store.copy()
        dup["w"][0] = 9.0
        assert store["w"][0] == 1.0


class TestCheckpoint:
    def test_roundtrip_exact(self, tmp_path):
        store = ParamStore({"a.w": (3, 2), "a.gate": (), "b": (5,)})
        rng = np.random.default_rng(0)
        store.flat[:] = rng.standard_normal(store.size) * 1e3
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, store, meta={"layers": "2", "note": "x=1"})
        loaded, meta = load_checkpoint(path)
        assert meta == {"layers": "2", "note": "x=1"}
        assert loaded.shapes == store.shapes
        assert np.array_equal(loaded.flat, store.flat)  # bit-exact

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nope.ckpt")

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_text("something else\n")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_truncated_section(self, tmp_path):
        store = ParamStore({"w": (4,)})
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, store)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestNumericHelpers:
    def test_max_relative_error_basic(self):
        assert max_relative_error(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
        assert max_relative_error(np.array([1.0]), np.array([1.1])) == pytest.approx(
            0.1 / 1.1
        )

    def test_max_relative_error_ignores_joint_near_zeros(self):
        a = np.array([1e-12, 1.0])
        b = np.array([-1e-12, 1.0])
        assert max_relative_error(a, b) == 0.0

    @pytest.mark.parametrize("y", [1e-6, 0.5, 1.0, 3.0, 40.0])
    def test_softplus_inverse(self, y):
        assert softplus(softplus_inverse(y)) == pytest.approx(y, rel=1e-12)

    def test_softplus_matches_reference(self):
        x = np.array([-30.0, -1.0, 0.0, 1.0, 30.0])
        expected = np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)
        assert np.allclose(softplus(x), expected, rtol=1e-15)
        assert softplus_inverse(1.0) == pytest.approx(math.log(math.e - 1.0))
