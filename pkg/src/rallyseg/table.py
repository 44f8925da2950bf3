"""Table center from an occupancy mask."""

from __future__ import annotations

from .errors import TableGeomError
from .io import Mask
from .model import TableCenter


def table_center(mask: Mask) -> TableCenter:
    """Weighted centroid of the mask's occupied pixels.

    Pixel (i, j) contributes its integer index, no half-pixel centering.
    """
    if mask.n_pixels == 0:
        raise TableGeomError("no table mask")
    return TableCenter(
        cx=float(mask.xs.mean()),
        cy=float(mask.ys.mean()),
        image_w=float(mask.width),
        image_h=float(mask.height),
    )
