"""Bayer CFA sampling, the half-image split/recombine adapter, and quad packing.

A CFA image is a single plane where each pixel holds one color sample; the
phase names the 2x2 block layout by the colors of its top-left corner.  The
split adapter turns a CFA into two half-resolution RGB images (sharing R and
B, each carrying one of the two greens) so that plain RGB denoisers can be
applied before demosaicing; recombining puts every green back on its own
site and averages the duplicated R and B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import formats
from .image import ColorImage, DomainError, GrayImage

PHASES = ("RGGB", "GRBG", "GBRG", "BGGR")

# Per phase: (row, col) of each role inside the 2x2 block.  G1 is the green
# sharing a row with R, G2 the green sharing a row with B.
_BLOCK_LAYOUT = {
    "RGGB": {"R": (0, 0), "G1": (0, 1), "G2": (1, 0), "B": (1, 1)},
    "GRBG": {"R": (0, 1), "G1": (0, 0), "G2": (1, 1), "B": (1, 0)},
    "GBRG": {"R": (1, 0), "G1": (1, 1), "G2": (0, 0), "B": (0, 1)},
    "BGGR": {"R": (1, 1), "G1": (1, 0), "G2": (0, 1), "B": (0, 0)},
}

_ROLE_CHANNEL = {"R": 0, "G1": 1, "G2": 1, "B": 2}


def channel_index_grid(phase: str) -> np.ndarray:
    """2x2 grid of RGB channel indices (0/1/2) for a phase."""
    layout = _BLOCK_LAYOUT[phase]
    grid = np.empty((2, 2), dtype=np.intp)
    for role, (r, c) in layout.items():
        grid[r, c] = _ROLE_CHANNEL[role]
    return grid


def _check_phase(phase: str) -> str:
    if phase not in PHASES:
        raise DomainError(f"unknown Bayer phase {phase!r}; expected one of {PHASES}")
    return phase


@dataclass(frozen=True)
class CfaImage:
    """Single-plane Bayer mosaic with even dimensions and a named phase."""

    plane: np.ndarray
    phase: str = "RGGB"

    def __post_init__(self):
        gray = GrayImage(self.plane)
        if gray.height % 2 or gray.width % 2:
            raise DomainError(
                f"CfaImage requires even dimensions, got {gray.width}x{gray.height}"
            )
        _check_phase(self.phase)
        object.__setattr__(self, "plane", gray.plane)

    @property
    def height(self) -> int:
        return self.plane.shape[0]

    @property
    def width(self) -> int:
        return self.plane.shape[1]


@dataclass(frozen=True)
class HalfPair:
    """The two half-resolution RGB images produced by splitting a CFA."""

    first: ColorImage  # uses G1, the green in R's row
    second: ColorImage  # uses G2, the green in B's row

    def __post_init__(self):
        if self.first.planes.shape != self.second.planes.shape:
            raise DomainError("HalfPair halves must share dimensions")


def mosaick(img: ColorImage, phase: str = "RGGB") -> CfaImage:
    """Sample one color per pixel from a full RGB image under a Bayer phase."""
    _check_phase(phase)
    if img.height % 2 or img.width % 2:
        raise DomainError(
            f"mosaick requires even dimensions, got {img.width}x{img.height}"
        )
    grid = channel_index_grid(phase)
    plane = np.empty((img.height, img.width), dtype=np.float64)
    for r in range(2):
        for c in range(2):
            plane[r::2, c::2] = img.planes[grid[r, c], r::2, c::2]
    return CfaImage(plane, phase)


def split_cfa(cfa: CfaImage) -> HalfPair:
    """Split each 2x2 block (R, G1, G2, B) into two half-size RGB pixels.

    Both halves carry the block's R and B; the first takes G1 and the
    second G2.
    """
    layout = _BLOCK_LAYOUT[cfa.phase]

    def site(role):
        r, c = layout[role]
        return cfa.plane[r::2, c::2]

    r_plane, b_plane = site("R"), site("B")
    first = ColorImage(np.stack([r_plane, site("G1"), b_plane]))
    second = ColorImage(np.stack([r_plane, site("G2"), b_plane]))
    return HalfPair(first, second)


def recombine_cfa(pair: HalfPair, phase: str = "RGGB") -> CfaImage:
    """Reassemble a CFA: each green from its own half, R and B averaged."""
    _check_phase(phase)
    layout = _BLOCK_LAYOUT[phase]
    h, w = pair.first.height, pair.first.width
    plane = np.empty((2 * h, 2 * w), dtype=np.float64)

    def put(role, values):
        r, c = layout[role]
        plane[r::2, c::2] = values

    put("R", (pair.first.r + pair.second.r) / 2.0)
    put("B", (pair.first.b + pair.second.b) / 2.0)
    put("G1", pair.first.g)
    put("G2", pair.second.g)
    return CfaImage(plane, phase)


def pack_quad(cfa: CfaImage) -> tuple[GrayImage, GrayImage, GrayImage, GrayImage]:
    """Rearrange a CFA into four half-size planes in (R, G1, G2, B) order."""
    layout = _BLOCK_LAYOUT[cfa.phase]

    def site(role):
        r, c = layout[role]
        return GrayImage(cfa.plane[r::2, c::2])

    return site("R"), site("G1"), site("G2"), site("B")


def unpack_quad(
    quads: tuple[GrayImage, GrayImage, GrayImage, GrayImage], phase: str = "RGGB"
) -> CfaImage:
    """Exact inverse of :func:`pack_quad`."""
    _check_phase(phase)
    layout = _BLOCK_LAYOUT[phase]
    r_img, g1_img, g2_img, b_img = quads
    h, w = r_img.height, r_img.width
    for img in (g1_img, g2_img, b_img):
        if (img.height, img.width) != (h, w):
            raise DomainError("unpack_quad: quads must share dimensions")
    plane = np.empty((2 * h, 2 * w), dtype=np.float64)
    for role, img in zip(("R", "G1", "G2", "B"), (r_img, g1_img, g2_img, b_img)):
        r, c = layout[role]
        plane[r::2, c::2] = img.plane
    return CfaImage(plane, phase)


def write_cfa(path, cfa: CfaImage) -> None:
    """Serialize as gray PFM plus a 'phase=...' sidecar ('<path>.meta')."""
    formats.write_image(path, GrayImage(cfa.plane))
    formats.write_meta(path, {"phase": cfa.phase})


def read_cfa(path) -> CfaImage:
    img = formats.read_image(path)
    if not isinstance(img, GrayImage):
        raise DomainError(f"{path}: CFA file must be a gray image")
    meta = formats.read_meta(path)
    return CfaImage(img.plane, meta.get("phase", "RGGB"))
