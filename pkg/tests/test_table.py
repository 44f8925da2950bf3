import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rallyseg.errors import TableGeomError
from rallyseg.io import Mask
from rallyseg.table import table_center


def mask_from_pixels(pixels, width=100, height=100):
    xs = np.asarray([p[0] for p in pixels], dtype=np.int64)
    ys = np.asarray([p[1] for p in pixels], dtype=np.int64)
    return Mask(width=width, height=height, xs=xs, ys=ys)


def test_uniform_rectangle():
    pixels = [(x, y) for x in range(10, 20) for y in range(30, 40)]
    c = table_center(mask_from_pixels(pixels))
    assert c.cx == pytest.approx(14.5)
    assert c.cy == pytest.approx(34.5)


def test_single_pixel():
    c = table_center(mask_from_pixels([(5, 7)]))
    assert (c.cx, c.cy) == (5.0, 7.0)


def test_two_pixel_midpoint():
    c = table_center(mask_from_pixels([(0, 0), (10, 0)]))
    assert (c.cx, c.cy) == (5.0, 0.0)


def test_empty_mask_errors():
    with pytest.raises(TableGeomError, match="no table mask"):
        table_center(mask_from_pixels([]))


pixel_lists = st.lists(
    st.tuples(st.integers(0, 80), st.integers(0, 80)), min_size=1, max_size=40
)


@given(pixels=pixel_lists, dx=st.integers(0, 19), dy=st.integers(0, 19))
def test_translation_equivariance(pixels, dx, dy):
    base = table_center(mask_from_pixels(pixels))
    shifted = table_center(mask_from_pixels([(x + dx, y + dy) for x, y in pixels]))
    assert shifted.cx == pytest.approx(base.cx + dx)
    assert shifted.cy == pytest.approx(base.cy + dy)


@given(pixels=pixel_lists, copies=st.integers(2, 4))
def test_duplication_invariance(pixels, copies):
    base = table_center(mask_from_pixels(pixels))
    dup = table_center(mask_from_pixels(pixels * copies))
    assert dup.cx == pytest.approx(base.cx)
    assert dup.cy == pytest.approx(base.cy)
