"""Core raster types and color operations shared by the whole pipeline.

Images live in memory as float32 arrays of shape (height, width, 3) with
intensities normalized to [0, 1]; 8-bit quantization happens only at the PNG
boundary. Color math (HSV conversion, red filtering) is done in float64 so
the scalar and vectorized paths agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptImageError, UnsupportedImageError


class HsvPixel(NamedTuple):
    """Hue in degrees [0, 360), saturation and value in [0, 1].

    Achromatic pixels (saturation 0) carry hue 0 by convention.
    """

    hue: float
    saturation: float
    value: float


@dataclass
class RasterImage:
    """H x W RGB raster with intensities in [0, 1], stored as float32."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must have at least one pixel")
        arr = arr.astype(np.float32, copy=False)
        lo, hi = float(arr.min()), float(arr.max())
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("image intensities must be finite")
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"intensities outside [0, 1]: min={lo}, max={hi}")
        self.data = arr

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 3


@dataclass(frozen=True)
class RedFilterConfig:
    """HSV gate for 'red-like' pixels.

    The hue band [-20, 20] from the staining protocol is expressed on the
    color circle as [hue_low, 360) U [0, hue_high], inclusive at both ends.
    Saturation/value floors keep stain-free white/gray background from
    counting as red.
    """

    hue_low: float = 340.0
    hue_high: float = 20.0
    min_saturation: float = 0.2
    min_value: float = 0.2


def rgb_to_hsv(p: tuple[float, float, float]) -> HsvPixel:
    """Convert one RGB triple in [0,1]^3 to HSV (standard hexcone formula)."""
    r, g, b = float(p[0]), float(p[1]), float(p[2])
    mx = max(r, g, b)
    mn = min(r, g, b)
    delta = mx - mn
    v = mx
    s = 0.0 if mx == 0.0 else delta / mx
    if delta == 0.0:
        h = 0.0
    elif mx == r:
        h = 60.0 * ((g - b) / delta)
        if h < 0.0:
            h += 360.0
        if h >= 360.0:
            h -= 360.0
    elif mx == g:
        h = 60.0 * ((b - r) / delta) + 120.0
    else:
        h = 60.0 * ((r - g) / delta) + 240.0
    return HsvPixel(h, s, v)


def hsv_to_rgb(hue: float, saturation: float, value: float) -> tuple[float, float, float]:
    """Inverse hexcone conversion; hue in degrees, s/v in [0, 1]."""
    h = (hue % 360.0) / 60.0
    i = int(h) % 6
    f = h - int(h)
    p = value * (1.0 - saturation)
    q = value * (1.0 - saturation * f)
    t = value * (1.0 - saturation * (1.0 - f))
    if i == 0:
        return (value, t, p)
    if i == 1:
        return (q, value, p)
    if i == 2:
        return (p, value, t)
    if i == 3:
        return (p, q, value)
    if i == 4:
        return (t, p, value)
    return (value, p, q)


def rgb_to_hsv_image(arr: np.ndarray) -> np.ndarray:
    """Vectorized RGB->HSV over an (..., 3) array; returns float64 (..., 3).

    Mirrors rgb_to_hsv exactly (same float64 operations in the same order).
    """
    rgb = np.asarray(arr, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ValueError(f"expected (..., 3) array, got shape {rgb.shape}")
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = np.max(rgb, axis=-1)
    mn = np.min(rgb, axis=-1)
    delta = mx - mn

    v = mx
    s = np.zeros_like(mx)
    nonzero = mx != 0.0
    np.divide(delta, mx, out=s, where=nonzero)

    h = np.zeros_like(mx)
    chromatic = delta != 0.0
    safe_delta = np.where(chromatic, delta, 1.0)

    red_max = chromatic & (mx == r)
    green_max = chromatic & (mx == g) & ~red_max
    blue_max = chromatic & ~red_max & ~green_max

    hr = 60.0 * ((g - b) / safe_delta)
    hr = np.where(hr < 0.0, hr + 360.0, hr)
    hr = np.where(hr >= 360.0, hr - 360.0, hr)
    h = np.where(red_max, hr, h)
    h = np.where(green_max, 60.0 * ((b - r) / safe_delta) + 120.0, h)
    h = np.where(blue_max, 60.0 * ((r - g) / safe_delta) + 240.0, h)

    return np.stack([h, s, v], axis=-1)


def is_red_like(p: HsvPixel, cfg: RedFilterConfig = RedFilterConfig()) -> bool:
    """True iff hue falls in the wrap-around red band and s/v pass the floors."""
    if cfg.hue_low > cfg.hue_high:
        in_band = p.hue >= cfg.hue_low or p.hue <= cfg.hue_high
    else:
        in_band = cfg.hue_low <= p.hue <= cfg.hue_high
    return bool(in_band and p.saturation >= cfg.min_saturation and p.value >= cfg.min_value)


def red_mask(img: RasterImage, cfg: RedFilterConfig = RedFilterConfig()) -> np.ndarray:
    """Boolean (H, W) mask of red-like pixels."""
    hsv = rgb_to_hsv_image(img.data)
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    if cfg.hue_low > cfg.hue_high:
        in_band = (h >= cfg.hue_low) | (h <= cfg.hue_high)
    else:
        in_band = (h >= cfg.hue_low) & (h <= cfg.hue_high)
    return in_band & (s >= cfg.min_saturation) & (v >= cfg.min_value)


def count_red(img: RasterImage, cfg: RedFilterConfig = RedFilterConfig()) -> int:
    """Number of red-like pixels in the image."""
    return int(red_mask(img, cfg).sum())


def _box_weights(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic (n_out, n_in) overlap weights for 1-D area averaging."""
    scale = n_in / n_out
    w = np.zeros((n_out, n_in), dtype=np.float64)
    for o in range(n_out):
        lo = o * scale
        hi = (o + 1) * scale
        i0 = int(math.floor(lo))
        i1 = min(int(math.ceil(hi)), n_in)
        for i in range(i0, i1):
            overlap = min(i + 1.0, hi) - max(float(i), lo)
            if overlap > 0.0:
                w[o, i] = overlap
    w /= w.sum(axis=1, keepdims=True)
    return w


def resize(img: RasterImage, out_w: int, out_h: int) -> RasterImage:
    """Area-averaging resample to (out_h, out_w).

    Exact box filter when both ratios are integral (e.g. 224 -> 28 uses 8x8
    blocks); general interval-overlap averaging otherwise. Output intensities
    stay in [0, 1] because every output pixel is a convex combination.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output dimensions must be >= 1, got {out_w}x{out_h}")
    h, w = img.height, img.width
    if out_h == h and out_w == w:
        return RasterImage(img.data.copy())
    data = img.data.astype(np.float64)
    if h % out_h == 0 and w % out_w == 0:
        rh, rw = h // out_h, w // out_w
        out = data.reshape(out_h, rh, out_w, rw, 3).mean(axis=(1, 3))
    else:
        wh = _box_weights(h, out_h)
        ww = _box_weights(w, out_w)
        out = np.einsum("oi,iwc->owc", wh, data)
        out = np.einsum("pj,ojc->opc", ww, out)
    return RasterImage(np.clip(out, 0.0, 1.0))


def save_image(img: RasterImage, path: str | Path) -> None:
    """Write an 8-bit RGB PNG."""
    arr = np.clip(np.rint(img.data.astype(np.float64) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(Path(path), format="PNG")


def load_image(path: str | Path) -> RasterImage:
    """Read an 8-bit RGB PNG back into a normalized raster.

    Raises FileNotFoundError for missing paths, UnsupportedImageError for
    bit depths/modes other than 8-bit RGB, CorruptImageError for undecodable
    files.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.mode != "RGB":
                raise UnsupportedImageError(
                    f"{path}: unsupported image mode {im.mode!r}; expected 8-bit RGB"
                )
            arr = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise CorruptImageError(f"{path}: cannot decode image") from exc
    return RasterImage(arr.astype(np.float32) / 255.0)
