import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from dynimage.core import (
    DynamicImage,
    MultiChannelImage,
    Normalization,
    Plane2D,
    PoolMethod,
    Volume3D,
    slice_view,
    volume_from_slices,
)
from dynimage.errors import DimensionMismatch, EmptyInput, IndexOutOfRange, NonFiniteValue


def test_two_planes_make_depth_two_volume():
    a, b = Plane2D(np.zeros((2, 2))), Plane2D(np.ones((2, 2)))
    v = volume_from_slices([a, b])
    assert v.depth == 2
    assert v.size == 8
    assert (v.width, v.height) == (2, 2)


def test_mismatched_planes_rejected():
    with pytest.raises(DimensionMismatch):
        volume_from_slices([np.zeros((2, 2)), np.zeros((3, 3))])


def test_empty_slice_list_rejected():
    with pytest.raises(EmptyInput):
        volume_from_slices([])


def test_110_cube_volume():
    planes = [np.full((110, 110), k, dtype=np.float32) for k in range(110)]
    v = volume_from_slices(planes)
    assert v.shape == (110, 110, 110)
    assert v.voxels.dtype == np.float32


def test_slice_view_is_one_based():
    a, b = np.zeros((2, 3)), np.arange(6.0).reshape(2, 3)
    v = volume_from_slices([a, b])
    np.testing.assert_array_equal(slice_view(v, 2).values, b)
    np.testing.assert_array_equal(slice_view(v, v.depth).values, b)
    with pytest.raises(IndexOutOfRange):
        slice_view(v, 0)
    with pytest.raises(IndexOutOfRange):
        slice_view(v, 3)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_constructors_reject_non_finite(bad):
    arr = np.zeros((2, 2, 2))
    arr[1, 0, 1] = bad
    with pytest.raises(NonFiniteValue):
        Volume3D(arr)
    with pytest.raises(NonFiniteValue):
        Plane2D(arr[1])
    with pytest.raises(NonFiniteValue):
        volume_from_slices([arr[0], arr[1]])
    with pytest.raises(NonFiniteValue):
        MultiChannelImage(np.concatenate([arr, arr[:1]]))


def test_volume_is_immutable():
    v = Volume3D(np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        v.voxels[0, 0, 0] = 1.0


def test_volume_copies_its_input():
    src = np.zeros((2, 2, 2), dtype=np.float32)
    v = Volume3D(src)
    src[0, 0, 0] = 5.0
    assert v.voxels[0, 0, 0] == 0.0


def test_minmax_image_outside_unit_interval_rejected():
    with pytest.raises(ValueError):
        DynamicImage(Plane2D([[0.0, 2.0]]), PoolMethod.AVG_POOL, 1, Normalization.MINMAX01)


def test_multichannel_needs_three_channels():
    with pytest.raises(DimensionMismatch):
        MultiChannelImage(np.zeros((2, 4, 4)))
    img = MultiChannelImage(np.zeros((3, 4, 5)))
    assert img.interleaved().shape == (4, 5, 3)


planes = st.integers(1, 6).flatmap(
    lambda h: st.integers(1, 6).flatmap(
        lambda w: st.lists(
            hnp.arrays(np.float32, (h, w), elements=st.floats(-1e6, 1e6, width=32)),
            min_size=1,
            max_size=8,
        )
    )
)


@given(planes)
def test_slice_round_trip(slices):
    v = volume_from_slices(slices)
    for t, s in enumerate(slices, start=1):
        np.testing.assert_array_equal(slice_view(v, t).values, s)
