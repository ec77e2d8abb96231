import numpy as np
import pytest
import torch

from stereoid.core import TensorImage, ValueRange
from stereoid.depth import (
    DepthCache,
    DepthConvention,
    DepthMap,
    PretrainedDepthBackend,
    SyntheticOracleBackend,
    depth_to_context,
    estimate_depth,
    load_depth_png,
    normalize_depth,
    resolve_cache_dir,
    save_depth_png,
)
from stereoid.errors import BackendError, ShapeError
from stereoid.synth import ObjectSpec, SceneSpec, default_scene_sampler, oracle_backend, render_scene


def unit(data):
    return TensorImage(np.asarray(data, dtype=np.float32), ValueRange.UNIT)


def scene_with_one_object():
    return SceneSpec(
        width=48, height=48,
        background_color=(0.1, 0.1, 0.15), background_z=50.0,
        objects=(ObjectSpec("ellipse", (0.9, 0.3, 0.2), (28.0, 24.0), (18.0, 14.0), z=6.0),),
        focal=8.0, baseline=1.0,
    )


class TestDepthMap:
    def test_rejects_non_2d(self):
        with pytest.raises(ShapeError):
            DepthMap(np.zeros((2, 3, 4)))

    def test_rejects_nan(self):
        data = np.zeros((4, 4))
        data[0, 0] = np.inf
        with pytest.raises(ValueError):
            DepthMap(data)

    def test_normalized_bounds_enforced(self):
        with pytest.raises(ValueError):
            DepthMap(np.full((2, 2), 2.0), normalized=True)


class TestNormalize:
    def test_minmax_range(self):
        d = normalize_depth(DepthMap(np.array([[1.0, 3.0], [5.0, 9.0]])))
        assert d.normalized
        assert d.data.min() == 0.0
        assert d.data.max() == 1.0

    def test_constant_becomes_half(self):
        d = normalize_depth(DepthMap(np.full((3, 3), 7.0)))
        assert (d.data == 0.5).all()

    def test_idempotent(self):
        raw = DepthMap(np.random.default_rng(0).random((6, 6)))
        once = normalize_depth(raw)
        twice = normalize_depth(once)
        assert np.allclose(once.data, twice.data, atol=1e-7)


class TestEstimateDepth:
    def test_object_region_strictly_closer_than_background(self):
        spec = scene_with_one_object()
        frame, _, _ = render_scene(spec)
        depth = estimate_depth(oracle_backend(spec), frame.left)
        assert depth.normalized
        assert depth.convention is DepthConvention.RELATIVE_INVERSE
        obj = frame.left.data[0] > 0.5
        assert depth.data[obj].min() > depth.data[~obj].max()

    def test_constant_scene_gives_half(self):
        spec = SceneSpec(width=16, height=16, background_color=(0.2, 0.2, 0.2),
                         background_z=10.0, objects=(), focal=4.0, baseline=1.0)
        frame, _, _ = render_scene(spec)
        depth = estimate_depth(oracle_backend(spec), frame.left)
        assert (depth.data == 0.5).all()

    def test_shape_contract(self):
        spec = scene_with_one_object()
        frame, _, _ = render_scene(spec)
        depth = estimate_depth(oracle_backend(spec), frame.left)
        assert depth.data.shape == (frame.height, frame.width)

    def test_deterministic(self):
        spec = scene_with_one_object()
        frame, _, _ = render_scene(spec)
        backend = oracle_backend(spec)
        a = estimate_depth(backend, frame.left)
        b = estimate_depth(backend, frame.left)
        assert np.array_equal(a.data, b.data)

    def test_rank_correlation_with_scene_order(self):
        rng = np.random.default_rng(21)
        spec = default_scene_sampler(rng)
        frame, _, _ = render_scene(spec)
        depth = estimate_depth(oracle_backend(spec), frame.left)
        means = []
        for i, obj in enumerate(spec.objects):
            from stereoid.synth import _visible_mask, _shape_mask

            mask = _shape_mask(obj.shape, obj.center, obj.size, spec.height, spec.width)
            # restrict to pixels the object actually wins in the left eye
            visible = mask & np.isclose(
                render_scene(spec)[1].data, 1.0 / obj.z, rtol=1e-6
            )
            if visible.any():
                means.append((obj.z, float(depth.data[visible].mean())))
        means.sort()
        values = [m for _, m in means]
        assert values == sorted(values, reverse=True)  # closer => larger

    def test_unit_range_required(self):
        signed = TensorImage(np.zeros((3, 4, 4), dtype=np.float32), ValueRange.SIGNED)
        with pytest.raises(ValueError):
            estimate_depth(SyntheticOracleBackend([], 0.1), signed)

    def test_wrong_backend_shape_rejected(self):
        class Bad:
            kind = "bad"

            def infer(self, image):
                return np.zeros((2, 2), dtype=np.float32)

        with pytest.raises(BackendError, match="shape"):
            estimate_depth(Bad(), unit(np.zeros((3, 8, 8))))

    def test_backend_exception_wrapped(self):
        class Boom:
            kind = "boom"

            def infer(self, image):
                raise RuntimeError("inference exploded")

        with pytest.raises(BackendError, match="exploded"):
            estimate_depth(Boom(), unit(np.zeros((3, 4, 4))))


class TestDepthContext:
    def test_three_identical_channels(self):
        depth = normalize_depth(DepthMap(np.random.default_rng(1).random((8, 8))))
        ctx = depth_to_context(depth)
        assert ctx.data.shape == (3, 8, 8)
        assert np.array_equal(ctx.data[0], ctx.data[1])
        assert np.array_equal(ctx.data[1], ctx.data[2])

    def test_zeros_stay_zeros(self):
        ctx = depth_to_context(DepthMap(np.zeros((4, 4)), normalized=True))
        assert (ctx.data == 0.0).all()

    def test_channel_zero_round_trip(self):
        depth = normalize_depth(DepthMap(np.random.default_rng(2).random((5, 5))))
        ctx = depth_to_context(depth)
        assert np.array_equal(ctx.data[0], depth.data)

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError, match="normalized"):
            depth_to_context(DepthMap(np.ones((4, 4)) * 3.0))


class TestDepthCachePng:
    def test_round_trip_within_quantization(self, tmp_path):
        depth = normalize_depth(DepthMap(np.random.default_rng(3).random((16, 16))))
        save_depth_png(depth, tmp_path / "d.png")
        back = load_depth_png(tmp_path / "d.png")
        assert back.normalized
        assert np.abs(back.data - depth.data).max() <= 1.0 / 65535 + 1e-9

    def test_quantization_rule(self, tmp_path):
        depth = DepthMap(np.array([[0.0, 1.0], [0.5, 0.25]]), normalized=True)
        save_depth_png(depth, tmp_path / "d.png")
        from PIL import Image

        raw = np.asarray(Image.open(tmp_path / "d.png"))
        assert raw.dtype == np.uint16
        assert raw[0, 0] == 0 and raw[0, 1] == 65535
        assert raw[1, 0] == round(0.5 * 65535)

    def test_cache_get_or_compute(self, tmp_path):
        spec = scene_with_one_object()
        frame, _, _ = render_scene(spec)
        cache = DepthCache(tmp_path)
        backend = oracle_backend(spec)
        first = cache.get_or_compute(backend, frame.left, "f0", "left")
        assert (tmp_path / "f0.left.png").is_file()
        second = cache.get_or_compute(backend, frame.left, "f0", "left")
        assert np.abs(first.data - second.data).max() <= 1.0 / 65535 + 1e-9

    def test_resolve_cache_dir_env(self, tmp_path, monkeypatch):
        monkeypatch.delenv("STEREOID_CACHE", raising=False)
        assert resolve_cache_dir(None) is None
        monkeypatch.setenv("STEREOID_CACHE", str(tmp_path))
        assert resolve_cache_dir(None) == tmp_path
        assert resolve_cache_dir(tmp_path / "x") == tmp_path / "x"


class TestPretrainedBackend:
    def make_model_file(self, tmp_path):
        class TinyDepth(torch.nn.Module):
            def forward(self, x):
                # brightness as inverse depth, mean over channels
                return x.mean(dim=1)

        path = tmp_path / "depth.pt"
        torch.jit.script(TinyDepth()).save(str(path))
        return path

    def test_inference_shape_and_determinism(self, tmp_path):
        path = self.make_model_file(tmp_path)
        backend = PretrainedDepthBackend(path, input_size=16)
        image = unit(np.random.default_rng(4).random((3, 32, 24), dtype=np.float32))
        a = estimate_depth(backend, image)
        b = estimate_depth(backend, image)
        assert a.data.shape == (32, 24)
        assert a.normalized
        assert np.array_equal(a.data, b.data)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(BackendError, match="readable"):
            PretrainedDepthBackend(tmp_path / "missing.pt")

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "junk.pt"
        path.write_bytes(b"not a model")
        with pytest.raises(BackendError, match="load"):
            PretrainedDepthBackend(path)
