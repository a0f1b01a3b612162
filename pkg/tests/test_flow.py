import numpy as np
import pytest

from push_sentinel.errors import DimensionMismatch
from push_sentinel.flow import (
    DisplacementField,
    EstimatorKind,
    FlowEstimatorSpec,
    estimate_flow,
    kernels,
    reference_block_match,
)
from push_sentinel.ingest import RoiKeyframe

from conftest import roi_pair_with_shift, texture
from oracles import exhaustive_block_match, naive_block_match

BACKENDS = ["pure"] + (["native"] if kernels.HAVE_NATIVE else [])


def keyframe(pixels, i=1, t=0.0):
    return RoiKeyframe(i=i, t=t, pixels=pixels)


class TestReferenceBlockMatch:
    def test_identical_frames_zero_field(self):
        prev, _ = roi_pair_with_shift(20, 24, 0, 0)
        nxt = RoiKeyframe(i=2, t=2.0, pixels=prev.pixels)
        out = reference_block_match(prev, nxt, search_radius=4, block_size=5)
        assert np.all(out.vectors == 0)

    def test_uniform_image_zero_by_tie_break(self):
        pixels = np.full((16, 16, 3), 128, np.uint8)
        out = reference_block_match(keyframe(pixels, 1), keyframe(pixels, 2),
                                    search_radius=3, block_size=3)
        assert np.all(out.vectors == 0)

    def test_translation_recovered_in_interior(self):
        prev, nxt = roi_pair_with_shift(28, 32, 3, -2)
        out = reference_block_match(prev, nxt, search_radius=4, block_size=7)
        margin = 4 + 3  # radius + block half, stay clear of border effects
        interior = out.vectors[margin:-margin, margin:-margin]
        assert np.all(interior[..., 0] == 3)
        assert np.all(interior[..., 1] == -2)

    def test_shift_beyond_radius_clamps_to_window(self):
        prev, nxt = roi_pair_with_shift(24, 24, 6, 0)
        out = reference_block_match(prev, nxt, search_radius=4, block_size=5)
        assert not np.any(out.vectors[..., 0] == 6)  # 6 is unreachable
        want = exhaustive_block_match(prev.pixels, nxt.pixels, 4, 5)
        assert np.array_equal(out.vectors, want)

    def test_field_tagging_and_geometry(self):
        prev, nxt = roi_pair_with_shift(10, 12, 1, 1)
        prev = RoiKeyframe(i=7, t=12.0, pixels=prev.pixels)
        nxt = RoiKeyframe(i=8, t=14.0, pixels=nxt.pixels)
        out = reference_block_match(prev, nxt, search_radius=2, block_size=3)
        assert out.i == 7
        assert (out.height, out.width) == (10, 12)
        assert out.vectors.shape == (10, 12, 2)

    def test_dimension_mismatch(self):
        a = keyframe(texture(10, 10), 1)
        b = keyframe(texture(10, 12, seed=1), 2)
        with pytest.raises(DimensionMismatch):
            reference_block_match(a, b)

    def test_non_consecutive_ordinals_rejected(self):
        a = keyframe(texture(10, 10), 1)
        b = keyframe(texture(10, 10, seed=1), 3)
        with pytest.raises(ValueError):
            reference_block_match(a, b)


class TestKernelEquivalence:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_matches_exhaustive_oracle(self, rng, backend):
        for _ in range(30):
            h, w = (int(v) for v in rng.integers(4, 33, size=2))
            radius = int(rng.integers(1, 5))
            block = int(rng.choice([3, 5, 7]))
            prev = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
            nxt = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
            got = kernels.block_match(prev, nxt, radius, block, backend=backend)
            want = exhaustive_block_match(prev, nxt, radius, block)
            assert np.array_equal(got, want)

    def test_matches_naive_oracle_small(self, rng):
        for _ in range(5):
            h, w = (int(v) for v in rng.integers(4, 13, size=2))
            prev = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
            nxt = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
            got = kernels.block_match(prev, nxt, 2, 3)
            assert np.array_equal(got, naive_block_match(prev, nxt, 2, 3))

    @pytest.mark.skipif(not kernels.HAVE_NATIVE, reason="native kernel not built")
    def test_native_equals_pure(self, rng):
        for _ in range(10):
            h, w = (int(v) for v in rng.integers(4, 40, size=2))
            prev = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
            nxt = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
            native = kernels.block_match(prev, nxt, 3, 5, backend="native")
            pure = kernels.block_match(prev, nxt, 3, 5, backend="pure")
            assert np.array_equal(native, pure)

    def test_kernel_validation(self):
        img = texture(8, 8)
        with pytest.raises(ValueError):
            kernels.block_match(img, img, search_radius=0)
        with pytest.raises(ValueError):
            kernels.block_match(img, img, block_size=4)
        with pytest.raises(ValueError):
            kernels.block_match(img.astype(np.int32), img.astype(np.int32))
        with pytest.raises(ValueError):
            kernels.block_match(img, texture(8, 9, seed=2))

    def test_displacement_order_tie_break_rule(self):
        order = kernels.displacement_order(2)
        assert tuple(order[0]) == (0, 0)
        keys = [(abs(u) + abs(v), v, u) for u, v in order]
        assert keys == sorted(keys)
        assert len(order) == 25


class TestEstimatorSpec:
    def test_defaults(self):
        spec = FlowEstimatorSpec()
        assert spec.kind is EstimatorKind.REFERENCE_BLOCK_MATCH
        assert spec.search_radius == 8
        assert spec.block_size == 7

    def test_external_requires_model_path(self):
        with pytest.raises(ValueError):
            FlowEstimatorSpec(kind=EstimatorKind.EXTERNAL_MODEL)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            FlowEstimatorSpec(search_radius=0)
        with pytest.raises(ValueError):
            FlowEstimatorSpec(block_size=6)

    def test_estimate_flow_dispatches_to_reference(self):
        prev, nxt = roi_pair_with_shift(16, 16, 1, 0)
        spec = FlowEstimatorSpec(search_radius=3, block_size=5)
        via_spec = estimate_flow(prev, nxt, spec)
        direct = reference_block_match(prev, nxt, 3, 5)
        assert np.array_equal(via_spec.vectors, direct.vectors)


class TestDisplacementField:
    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            DisplacementField(i=1, vectors=np.zeros((4, 4, 3)))

    def test_rejects_nonfinite(self):
        bad = np.zeros((2, 2, 2))
        bad[0, 0, 0] = np.inf
        with pytest.raises(ValueError):
            DisplacementField(i=1, vectors=bad)
