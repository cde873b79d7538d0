"""Artificial image noise applied after rendering.

The stages run in a fixed order: rectangle cutouts, circle cutouts, line
cutouts, multicolor pepper-and-salt, Gaussian blur.  Only the RGB
channels are touched; depth is left untouched because the noise models
RGB camera artifacts.

All randomness comes from the per-image noise stream, drawn in stage
order, so a frame's noisy version is fully determined by
``(config, master seed, image index)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.ndimage import convolve1d

from .rng import RandomStream

if TYPE_CHECKING:  # pragma: no cover
    from .renderer import Frame


@dataclass(frozen=True)
class PostprocessConfig:
    apply_pepper_prob: float = 1.0
    pepper_rate: float = 0.01
    apply_blur_prob: float = 0.5
    blur_kernel_choices: tuple[int, ...] = (3, 5, 7)
    cutout_rect_count: tuple[int, int] = (0, 0)
    cutout_circle_count: tuple[int, int] = (0, 0)
    cutout_line_count: tuple[int, int] = (0, 0)
    cutout_size: tuple[float, float] = (0.05, 0.2)
    line_thickness: tuple[float, float] = (1.0, 5.0)

    def __post_init__(self):
        for name in ("apply_pepper_prob", "pepper_rate", "apply_blur_prob"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for k in self.blur_kernel_choices:
            if k < 3 or k % 2 == 0:
                raise ValueError(f"blur kernel sizes must be odd >= 3, got {k}")
        for name in (
            "cutout_rect_count",
            "cutout_circle_count",
            "cutout_line_count",
            "cutout_size",
            "line_thickness",
        ):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: lo {lo} > hi {hi}")

    @staticmethod
    def disabled() -> "PostprocessConfig":
        return PostprocessConfig(apply_pepper_prob=0.0, apply_blur_prob=0.0)


def pepper_salt(rgb: np.ndarray, rate: float, stream: RandomStream) -> np.ndarray:
    """Multicolor pepper-and-salt: every pixel channel independently
    flips to 0 or 255 with probability ``rate`` (fair coin between the
    two), one draw per channel, row-major then channel order.
    """
    if not (0.0 <= rate <= 1.0):
        raise ValueError("rate must be in [0, 1]")
    out = rgb.copy()
    u = stream.next_unit_block(out.size).reshape(out.shape)
    out[u < rate / 2.0] = 0
    out[(u >= rate / 2.0) & (u < rate)] = 255
    return out


def gaussian_kernel(kernel_size: int) -> np.ndarray:
    """1-D Gaussian weights, sigma = kernel_size / 3, normalized to 1."""
    if kernel_size < 3 or kernel_size % 2 == 0:
        raise ValueError("kernel size must be odd >= 3")
    sigma = kernel_size / 3.0
    half = kernel_size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


def gaussian_blur(rgb: np.ndarray, kernel_size: int) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders."""
    k = gaussian_kernel(kernel_size)
    acc = rgb.astype(np.float64)
    acc = convolve1d(acc, k, axis=1, mode="nearest")
    acc = convolve1d(acc, k, axis=0, mode="nearest")
    return np.clip(np.rint(acc), 0, 255).astype(np.uint8)


def cutout_rect(rgb: np.ndarray, x0: float, y0: float, w: float, h: float, color) -> np.ndarray:
    out = rgb.copy()
    height, width = out.shape[:2]
    xa = max(int(math.floor(x0)), 0)
    ya = max(int(math.floor(y0)), 0)
    xb = min(int(math.floor(x0 + w)), width)
    yb = min(int(math.floor(y0 + h)), height)
    if xa < xb and ya < yb:
        out[ya:yb, xa:xb] = color
    return out


def cutout_circle(rgb: np.ndarray, cx: float, cy: float, r: float, color) -> np.ndarray:
    out = rgb.copy()
    height, width = out.shape[:2]
    ys = np.arange(height, dtype=np.float64)[:, None] + 0.5
    xs = np.arange(width, dtype=np.float64)[None, :] + 0.5
    mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
    out[mask] = color
    return out


def cutout_line(
    rgb: np.ndarray, x0: float, y0: float, x1: float, y1: float, thickness: float, color
) -> np.ndarray:
    out = rgb.copy()
    height, width = out.shape[:2]
    ys = np.arange(height, dtype=np.float64)[:, None] + 0.5
    xs = np.arange(width, dtype=np.float64)[None, :] + 0.5
    dx, dy = x1 - x0, y1 - y0
    seg2 = dx * dx + dy * dy
    if seg2 == 0:
        t = np.zeros((height, width))
    else:
        t = np.clip(((xs - x0) * dx + (ys - y0) * dy) / seg2, 0.0, 1.0)
    dist2 = (xs - (x0 + t * dx)) ** 2 + (ys - (y0 + t * dy)) ** 2
    out[dist2 <= (thickness / 2.0) ** 2] = color
    return out


def _rand_color(stream: RandomStream) -> np.ndarray:
    return np.array(
        [stream.next_int(0, 255), stream.next_int(0, 255), stream.next_int(0, 255)],
        dtype=np.uint8,
    )


def apply_postprocess(frame: "Frame", cfg: PostprocessConfig, stream: RandomStream) -> "Frame":
    """Run the full noise chain on a frame's RGB channels.

    Frames without RGB (depth-only output) pass through unchanged.
    """
    if frame.rgb is None:
        return frame
    rgb = frame.rgb
    h, w = rgb.shape[:2]
    size_scale = min(w, h)

    n = stream.next_int(*_int_range(cfg.cutout_rect_count))
    for _ in range(n):
        x0 = stream.next_uniform(0, w)
        y0 = stream.next_uniform(0, h)
        rw = stream.next_uniform(*cfg.cutout_size) * w
        rh = stream.next_uniform(*cfg.cutout_size) * h
        rgb = cutout_rect(rgb, x0, y0, rw, rh, _rand_color(stream))

    n = stream.next_int(*_int_range(cfg.cutout_circle_count))
    for _ in range(n):
        cx = stream.next_uniform(0, w)
        cy = stream.next_uniform(0, h)
        r = stream.next_uniform(*cfg.cutout_size) * size_scale / 2.0
        rgb = cutout_circle(rgb, cx, cy, r, _rand_color(stream))

    n = stream.next_int(*_int_range(cfg.cutout_line_count))
    for _ in range(n):
        x0, y0 = stream.next_uniform(0, w), stream.next_uniform(0, h)
        x1, y1 = stream.next_uniform(0, w), stream.next_uniform(0, h)
        t = stream.next_uniform(*cfg.line_thickness)
        rgb = cutout_line(rgb, x0, y0, x1, y1, t, _rand_color(stream))

    if cfg.apply_pepper_prob > 0 and stream.next_unit() < cfg.apply_pepper_prob:
        rgb = pepper_salt(rgb, cfg.pepper_rate, stream)

    if cfg.apply_blur_prob > 0 and stream.next_unit() < cfg.apply_blur_prob:
        k = cfg.blur_kernel_choices[stream.next_int(0, len(cfg.blur_kernel_choices) - 1)]
        rgb = gaussian_blur(rgb, k)

    from .renderer import Frame  # deferred to avoid an import cycle

    return Frame(width=frame.width, height=frame.height, rgb=rgb, depth=frame.depth)


def _int_range(pair: tuple[int, int]) -> tuple[int, int]:
    return int(pair[0]), int(pair[1])
