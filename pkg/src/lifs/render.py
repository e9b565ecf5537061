"""Three-level grayscale PGM rendering of grid sets."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .ambient import CompactSetApprox, GridSpace

BACKGROUND, ENDPOINT, CORE = 255, 128, 0
STRIP_HEIGHT = 16


@dataclass(frozen=True)
class RenderSpec:
    width: int
    height: int
    scale: int = 1

    @classmethod
    def for_space(cls, space: GridSpace, scale: int = 1) -> "RenderSpec":
        if not isinstance(space, GridSpace) or space.dim > 2:
            raise ValueError("rendering needs a 1- or 2-dimensional grid")
        nx = space.shape[0]
        ny = space.shape[1] if space.dim == 2 else STRIP_HEIGHT
        return cls(nx * scale, ny * scale, scale)


def raster(spec: RenderSpec, space: GridSpace, layers) -> np.ndarray:
    """Paint ``(set, value)`` layers in order onto a background image; row 0 is the top."""
    ny = spec.height // spec.scale
    img = np.full((ny, spec.width // spec.scale), BACKGROUND, dtype=np.uint8)
    for S, value in layers:
        if not S:
            continue
        idx = space.multi_index(S.ids)
        col = idx[:, 0]
        if space.dim == 2:
            img[ny - 1 - idx[:, 1], col] = value
        else:
            img[:, col] = value
    if spec.scale > 1:
        img = np.kron(img, np.ones((spec.scale, spec.scale), dtype=np.uint8))
    return img


def pgm_bytes(img: np.ndarray) -> bytes:
    h, w = img.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, dims, maxval, body = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError("not a P5 maxval-255 file")
    w, h = (int(t) for t in dims.split())
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)


def render_attractor(space: GridSpace, core: CompactSetApprox, endpoints: Optional[CompactSetApprox] = None,
                     scale: int = 1) -> np.ndarray:
    """Endpoints grey, points with infinite orbits black."""
    spec = RenderSpec.for_space(space, scale)
    layers = [(endpoints, ENDPOINT)] if endpoints is not None else []
    return raster(spec, space, layers + [(core, CORE)])


def write_pgm(path, img: np.ndarray) -> None:
    Path(path).write_bytes(pgm_bytes(img))
