import numpy as np
import pytest
import torch

from stereoid.core import TensorImage, ValueRange
from stereoid.errors import ConfigError, ShapeError
from stereoid.painter import (
    CriticConfig,
    GeneratorConfig,
    LossWeights,
    build_critic,
    build_generator,
    build_model,
    generator_forward,
    receptive_field,
)

torch.set_num_threads(2)


def signed(data):
    return TensorImage(np.asarray(data, dtype=np.float32), ValueRange.SIGNED)


class TestGeneratorConfig:
    def test_depth_levels_must_divide_512(self):
        with pytest.raises(ConfigError):
            GeneratorConfig(depth_levels=10)
        GeneratorConfig(depth_levels=9)  # 512 = 2^9

    def test_positive_ngf(self):
        with pytest.raises(ConfigError):
            GeneratorConfig(ngf=0)


class TestUNetGenerator:
    def test_full_scale_shape(self):
        g = build_generator(GeneratorConfig(ngf=64, depth_levels=5))
        with torch.no_grad():
            out = g(torch.randn(1, 9, 512, 512) * 0.3)
        assert out.shape == (1, 3, 512, 512)

    def test_encoder_widths_double_from_ngf(self):
        g = build_generator(GeneratorConfig(ngf=64, depth_levels=5))
        assert g.encoder_widths == [64, 128, 256, 512, 1024]
        firsts = [blk[0].out_channels for blk in g.encoders]
        assert firsts == [64, 128, 256, 512, 1024]

    def test_desk_scale_shape(self):
        g = build_generator(GeneratorConfig(ngf=8, depth_levels=3))
        with torch.no_grad():
            out = g(torch.randn(2, 9, 64, 64))
        assert out.shape == (2, 3, 64, 64)

    @pytest.mark.parametrize("size", [32, 64, 128, 512])
    def test_shape_invariance_over_sizes(self, size):
        g = build_generator(GeneratorConfig(ngf=4, depth_levels=5))
        with torch.no_grad():
            out = g(torch.randn(1, 9, size, size))
        assert out.shape == (1, 3, size, size)

    def test_indivisible_size_rejected(self):
        g = build_generator(GeneratorConfig(ngf=4, depth_levels=5))
        with pytest.raises(ShapeError, match="divisible"):
            g(torch.randn(1, 9, 48, 48))

    def test_output_saturates_to_unit_ball(self):
        g = build_generator(GeneratorConfig(ngf=4, depth_levels=2))
        with torch.no_grad():
            out = g(torch.randn(2, 9, 16, 16) * 10)
        assert out.min() >= -1.0 and out.max() <= 1.0


class TestPatchCritic:
    def test_scores_are_a_patch_map(self):
        d = build_critic(CriticConfig())
        with torch.no_grad():
            scores = d(torch.randn(1, 9, 512, 512), torch.randn(1, 3, 512, 512))
        assert scores.shape[-2:] == (62, 62)
        assert scores.shape[1] == 1

    def test_receptive_field_is_70(self):
        d = build_critic(CriticConfig())
        # independent arithmetic oracle over the documented conv stack
        rf, jump = 1, 1
        for kernel, stride in [(4, 2), (4, 2), (4, 2), (4, 1), (4, 1)]:
            rf += (kernel - 1) * jump
            jump *= stride
        assert rf == 70
        assert d.conv_stack() == [(4, 2), (4, 2), (4, 2), (4, 1), (4, 1)]
        assert d.receptive_field() == 70
        assert receptive_field(d.conv_stack()) == 70

    def test_empirical_receptive_field_covers_70px(self):
        # instance norm couples every pixel through its spatial statistics,
        # so the pure conv geometry is probed with the norms switched off
        d = build_critic(CriticConfig(ndf=8)).double()
        layers = [
            torch.nn.Identity() if isinstance(m, torch.nn.InstanceNorm2d) else m
            for m in d.net
        ]
        d.net = torch.nn.Sequential(*layers)
        x = torch.randn(1, 12, 96, 96, dtype=torch.float64, requires_grad=True)
        scores = d(x[:, :9], x[:, 9:])
        cy, cx = scores.shape[-2] // 2, scores.shape[-1] // 2
        scores[0, 0, cy, cx].backward()
        touched = (x.grad[0].abs().sum(dim=0) > 0).numpy()
        ys, xs = np.nonzero(touched)
        assert ys.max() - ys.min() + 1 == 70
        assert xs.max() - xs.min() + 1 == 70

    def test_feature_widths(self):
        d = build_critic(CriticConfig(ndf=64, n_layers=3))
        convs = [m for m in d.net if isinstance(m, torch.nn.Conv2d)]
        assert [c.out_channels for c in convs] == [64, 128, 256, 512, 1]

    def test_spatial_mismatch_rejected(self):
        d = build_critic(CriticConfig())
        with pytest.raises(ShapeError):
            d(torch.randn(1, 9, 64, 64), torch.randn(1, 3, 32, 32))


class TestGeneratorForward:
    def make_model(self):
        return build_model(
            GeneratorConfig(ngf=4, depth_levels=2),
            CriticConfig(ndf=4, n_layers=1),
            LossWeights(),
            seed=0,
        )

    def test_output_contract(self):
        model = self.make_model()
        rng = np.random.default_rng(0)
        args = [signed(rng.random((3, 16, 16), dtype=np.float32) * 2 - 1) for _ in range(3)]
        out = generator_forward(model, *args)
        assert out.value_range is ValueRange.SIGNED
        assert out.data.shape == (3, 16, 16)
        assert out.data.min() >= -1.0 and out.data.max() <= 1.0

    def test_deterministic(self):
        model = self.make_model()
        rng = np.random.default_rng(1)
        args = [signed(rng.random((3, 16, 16), dtype=np.float32) * 2 - 1) for _ in range(3)]
        a = generator_forward(model, *args)
        b = generator_forward(model, *args)
        assert np.array_equal(a.data, b.data)

    def test_unit_range_rejected(self):
        model = self.make_model()
        unit_img = TensorImage(np.zeros((3, 16, 16), dtype=np.float32), ValueRange.UNIT)
        s = signed(np.zeros((3, 16, 16), dtype=np.float32))
        with pytest.raises(ValueError, match="signed"):
            generator_forward(model, unit_img, s, s)

    def test_shape_mismatch_rejected(self):
        model = self.make_model()
        a = signed(np.zeros((3, 16, 16), dtype=np.float32))
        b = signed(np.zeros((3, 32, 32), dtype=np.float32))
        with pytest.raises(ShapeError):
            generator_forward(model, a, b, b)
