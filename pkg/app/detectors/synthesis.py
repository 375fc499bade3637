"""Local anomaly synthesis: random blob masks blended with a texture"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from PIL import Image as PILImage

from app.helpers.errors import ShapeError, SynthesisError
from app.helpers.imageio import read_image, to_grayscale
from app.helpers.schemas import SynthLocalConfig, TextureSource
from app.numerics.rng import RngStream

logger = logging.getLogger(__name__)

TEXTURE_SUFFIXES = (".png", ".pgm", ".ppm", ".jpg", ".jpeg")


def blob_mask(
    fg_mask: np.ndarray, cfg: SynthLocalConfig, rng: RngStream
) -> np.ndarray:
    """Union of rotated ellipses centered on foreground pixels, cut to the foreground

    Each ellipse covers about ``blob_area / blob_count`` of the foreground.
    The result is never empty: every ellipse contains its own center.
    """
    fg = np.asarray(fg_mask, dtype=bool)
    ys, xs = np.nonzero(fg)
    if ys.size == 0:
        raise SynthesisError("foreground mask is empty; nowhere to synthesize")

    lo, hi = cfg.blob_count
    count = int(rng.integers(lo, hi + 1))
    fraction = float(rng.draw_uniform(None, *cfg.blob_area))
    target = max(fraction * ys.size / count, 1.0)

    rows, cols = np.mgrid[0 : fg.shape[0], 0 : fg.shape[1]]
    blobs = np.zeros_like(fg)
    for _ in range(count):
        center = int(rng.integers(0, ys.size))
        cy, cx = ys[center], xs[center]
        aspect = float(rng.draw_uniform(None, 0.5, 2.0))
        angle = float(rng.draw_uniform(None, 0.0, np.pi))
        semi_a = max(np.sqrt(target / (np.pi * aspect)), cfg.min_blob_size)
        semi_b = max(aspect * semi_a, cfg.min_blob_size)
        dy, dx = rows - cy, cols - cx
        u = dx * np.cos(angle) + dy * np.sin(angle)
        v = -dx * np.sin(angle) + dy * np.cos(angle)
        blobs |= (u / semi_a) ** 2 + (v / semi_b) ** 2 <= 1.0
    return blobs & fg


def value_noise(
    shape: Tuple[int, int], cells: int, rng: RngStream
) -> np.ndarray:
    """Smooth value noise in [0, 1]: random lattice, smoothstep interpolation"""
    height, width = shape
    lattice = np.asarray(rng.draw_uniform((cells + 1, cells + 1)))
    gy = np.linspace(0.0, cells, height, endpoint=False) if height > 1 else np.zeros(1)
    gx = np.linspace(0.0, cells, width, endpoint=False) if width > 1 else np.zeros(1)
    y0, x0 = np.floor(gy).astype(int), np.floor(gx).astype(int)
    fy, fx = gy - y0, gx - x0
    sy = (fy * fy * (3 - 2 * fy))[:, None]
    sx = (fx * fx * (3 - 2 * fx))[None, :]
    top = lattice[np.ix_(y0, x0)] * (1 - sx) + lattice[np.ix_(y0, x0 + 1)] * sx
    y1, x1 = y0 + 1, x0 + 1
    bottom = lattice[np.ix_(y1, x0)] * (1 - sx) + lattice[np.ix_(y1, x1)] * sx
    return top * (1 - sy) + bottom * sy


def list_textures(texture_dir: str) -> List[Path]:
    root = Path(texture_dir)
    if not root.is_dir():
        raise SynthesisError(f"texture directory {texture_dir} does not exist")
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in TEXTURE_SUFFIXES)
    if not files:
        raise SynthesisError(f"texture directory {texture_dir} holds no images")
    return files


def directory_texture(
    shape: Tuple[int, int], texture_dir: str, rng: RngStream
) -> np.ndarray:
    """A randomly chosen texture image, grayscale, resized, scaled to [0, 1]"""
    files = list_textures(texture_dir)
    path = files[int(rng.integers(0, len(files)))]
    gray = to_grayscale(read_image(path))
    resized = PILImage.fromarray(gray).resize(
        (shape[1], shape[0]), resample=PILImage.Resampling.BILINEAR
    )
    return np.asarray(resized, dtype=np.float64) / 255.0


def make_texture(
    sample: np.ndarray, cfg: SynthLocalConfig, rng: RngStream
) -> np.ndarray:
    """Texture shaped like ``sample``, mapped into the configured value range"""
    shape = sample.shape[:2]
    channels = 1 if sample.ndim == 2 else sample.shape[2]
    layers = []
    for c in range(channels):
        if cfg.texture_source == TextureSource.DIRECTORY:
            layers.append(directory_texture(shape, cfg.texture_dir or "", rng.child(c)))
        else:
            layers.append(value_noise(shape, cfg.noise_cells, rng.child(c)))
    unit = layers[0] if sample.ndim == 2 else np.stack(layers, axis=-1)

    if cfg.texture_range is not None:
        low, high = cfg.texture_range
    else:
        low, high = float(np.min(sample)), float(np.max(sample))
        if high <= low:
            high = low + 1.0
    return low + unit * (high - low)


def synth_local(
    sample: np.ndarray,
    fg_mask: np.ndarray,
    cfg: SynthLocalConfig,
    rng: RngStream,
    texture: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Blend a texture into a random blob region of the foreground

    Args:
        sample: (H, W) or (H, W, C) image or feature grid
        fg_mask: (H, W) foreground
        cfg: Opacity, blob and texture settings
        rng: Stream for the blobs and the texture
        texture: Optional explicit overlay shaped like ``sample``, blended as
            given; generated textures are pushed at least
            ``cfg.min_contrast`` away from the sample

    Returns:
        The float64 augmented sample and the boolean anomaly mask, which is
        exactly the set of positions whose value changed.

    Raises:
        SynthesisError: If the foreground is empty
    """
    x = np.asarray(sample, dtype=np.float64)
    fg = np.asarray(fg_mask, dtype=bool)
    if x.shape[:2] != fg.shape:
        raise ShapeError(f"sample {x.shape[:2]} and mask {fg.shape} differ in size")

    region = blob_mask(fg, cfg, rng.child(0))
    if texture is None:
        tex = make_texture(x, cfg, rng.child(1))
        closest = np.abs(tex - x)
        if x.ndim == 3:
            closest = closest.max(axis=-1, keepdims=True)
        tex = np.where(closest < cfg.min_contrast, x + cfg.min_contrast, tex)
    else:
        tex = np.asarray(texture, dtype=np.float64)
    if tex.shape != x.shape:
        raise ShapeError(f"texture {tex.shape} does not match sample {x.shape}")

    weight = cfg.opacity * (region if x.ndim == 2 else region[..., None])
    out = (1.0 - weight) * x + weight * tex
    changed = out != x if x.ndim == 2 else np.any(out != x, axis=-1)
    if np.any(changed & ~region):
        raise SynthesisError("synthesis altered positions outside its mask")
    logger.debug(
        "Local synthesis altered %d of %d foreground positions",
        int(changed.sum()),
        int(fg.sum()),
    )
    return out, changed
