import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stereoid.core import (
    Label,
    ManifestationCategory,
    Scope,
    Source,
    StereoFrame,
    TensorImage,
    ValueRange,
    concat_channels,
    convert_range,
)
from stereoid.errors import ShapeError


def unit_image(shape, fill=None, seed=0):
    if fill is not None:
        data = np.full(shape, fill, dtype=np.float32)
    else:
        data = np.random.default_rng(seed).random(shape, dtype=np.float32)
    return TensorImage(data, ValueRange.UNIT)


class TestTensorImage:
    def test_basic_properties(self):
        img = unit_image((3, 8, 10))
        assert (img.channels, img.height, img.width) == (3, 8, 10)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            TensorImage(np.full((3, 2, 2), 1.5, dtype=np.float32), ValueRange.UNIT)
        with pytest.raises(ValueError, match="outside"):
            TensorImage(np.full((3, 2, 2), -2.0, dtype=np.float32), ValueRange.SIGNED)

    def test_rejects_non_3d(self):
        with pytest.raises(ShapeError):
            TensorImage(np.zeros((4, 4), dtype=np.float32))

    def test_rejects_nan(self):
        data = np.zeros((1, 2, 2), dtype=np.float32)
        data[0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            TensorImage(data)

    def test_immutable(self):
        img = unit_image((3, 4, 4))
        with pytest.raises(ValueError):
            img.data[0, 0, 0] = 0.0


class TestStereoFrame:
    def test_mismatched_eyes_rejected(self):
        with pytest.raises(ShapeError):
            StereoFrame(unit_image((3, 4, 4)), unit_image((3, 4, 6)))

    def test_synthetic_needs_label(self):
        left, right = unit_image((3, 4, 4)), unit_image((3, 4, 4))
        with pytest.raises(ValueError, match="label"):
            StereoFrame(left, right, source=Source.SYNTHETIC)
        frame = StereoFrame(left, right, source=Source.SYNTHETIC, label=Label.NORMAL)
        assert frame.label is Label.NORMAL

    def test_non_rgb_eyes_rejected(self):
        with pytest.raises(ShapeError):
            StereoFrame(unit_image((1, 4, 4)), unit_image((1, 4, 4)))


class TestCategories:
    def test_sixteen_members(self):
        assert len(ManifestationCategory) == 16

    def test_scopes(self):
        view = [
            ManifestationCategory.MONOCULAR_BLINDNESS,
            ManifestationCategory.VIEW_MISALIGNMENT,
            ManifestationCategory.WARPED_VIEWS,
            ManifestationCategory.ASYMMETRIC_VIEWING_ANGLES,
        ]
        for cat in view:
            assert cat.scope is Scope.VIEW_LEVEL
        assert ManifestationCategory.OTHER.scope is None
        for cat in ManifestationCategory:
            if cat not in view and cat is not ManifestationCategory.OTHER:
                assert cat.scope is Scope.OBJECT_LEVEL


class TestConcatChannels:
    def test_three_rgb_images_make_nine_channels(self):
        imgs = [unit_image((3, 512, 512), seed=i) for i in range(3)]
        out = concat_channels(imgs)
        assert out.data.shape == (9, 512, 512)
        for i, img in enumerate(imgs):
            assert np.array_equal(out.data[3 * i : 3 * i + 3], img.data)

    def test_singleton_identity(self):
        img = unit_image((3, 6, 6), seed=1)
        out = concat_channels([img])
        assert np.array_equal(out.data, img.data)

    def test_zeros_and_ones_channel_sums(self):
        zeros = unit_image((1, 4, 4), fill=0.0)
        ones = unit_image((1, 4, 4), fill=1.0)
        out = concat_channels([zeros, ones])
        assert out.channels == 2
        assert out.data[0].sum() == 0.0
        assert out.data[1].sum() == 16.0

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            concat_channels([unit_image((3, 4, 4)), unit_image((3, 4, 5))])

    def test_mixed_range_rejected(self):
        signed = TensorImage(np.zeros((3, 4, 4), dtype=np.float32), ValueRange.SIGNED)
        with pytest.raises(ShapeError):
            concat_channels([unit_image((3, 4, 4)), signed])

    def test_empty_rejected(self):
        with pytest.raises(ShapeError):
            concat_channels([])

    def test_split_back_reproduces_inputs_bit_exactly(self):
        imgs = [unit_image((3, 5, 7), seed=i) for i in range(3)]
        out = concat_channels(imgs)
        for i, img in enumerate(imgs):
            part = TensorImage(out.data[3 * i : 3 * i + 3], out.value_range)
            assert np.array_equal(part.data, img.data)


class TestConvertRange:
    @pytest.mark.parametrize(
        "value,expected",
        [(0.0, -1.0), (0.5, 0.0), (1.0, 1.0)],
    )
    def test_unit_to_signed_endpoints(self, value, expected):
        img = unit_image((1, 1, 1), fill=value)
        out = convert_range(img, ValueRange.SIGNED)
        assert out.data[0, 0, 0] == pytest.approx(expected, abs=1e-7)

    def test_signed_one_maps_to_unit_one(self):
        img = TensorImage(np.ones((1, 1, 1), dtype=np.float32), ValueRange.SIGNED)
        assert convert_range(img, ValueRange.UNIT).data[0, 0, 0] == 1.0

    def test_same_range_is_identity(self):
        img = unit_image((3, 4, 4), seed=3)
        assert convert_range(img, ValueRange.UNIT) is img

    @settings(max_examples=50, deadline=None)
    @given(
        arrays(
            np.float32,
            (2, 3, 3),
            elements=st.floats(0, 1, width=32, allow_nan=False),
        )
    )
    def test_round_trip_property(self, data):
        img = TensorImage(data, ValueRange.UNIT)
        back = convert_range(convert_range(img, ValueRange.SIGNED), ValueRange.UNIT)
        assert np.max(np.abs(back.data - img.data)) <= 1e-6
