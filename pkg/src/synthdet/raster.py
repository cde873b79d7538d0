"""Scanline z-buffer rasterization kernel.

The inner loop is JIT-compiled with numba; everything here operates on
plain arrays so the kernel stays allocation-free.  Triangles arrive as
per-corner screen coordinates with perspective-correct attributes
(1/depth and uv/depth interpolate linearly in screen space).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, fastmath=False)
def raster_triangles(
    rgb,          # (H, W, 3) uint8, written in place
    depth,        # (H, W) float64 eye-space axial distance, written in place
    px,           # (T, 3) float64 corner pixel x
    py,           # (T, 3) float64 corner pixel y
    inv_d,        # (T, 3) float64 1 / eye depth per corner
    u_over_d,     # (T, 3) float64
    v_over_d,     # (T, 3) float64
    shade,        # (T,) float64 per-face lighting factor
    use_texture,  # bool
    texture,      # (th, tw, 3) uint8 (dummy 1x1 when unused)
    base_color,   # (3,) float64 in [0, 1] (ignored when textured)
    far,          # float64 far clip distance
):
    height, width = depth.shape
    th, tw = texture.shape[0], texture.shape[1]
    for t in range(px.shape[0]):
        x0, x1, x2 = px[t, 0], px[t, 1], px[t, 2]
        y0, y1, y2 = py[t, 0], py[t, 1], py[t, 2]
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if area == 0.0 or not np.isfinite(area):
            continue
        inv_area = 1.0 / area
        xmin = int(max(min(x0, min(x1, x2)), 0.0))
        xmax = int(min(max(x0, max(x1, x2)), width - 1.0))
        ymin = int(max(min(y0, min(y1, y2)), 0.0))
        ymax = int(min(max(y0, max(y1, y2)), height - 1.0))
        if xmax < xmin or ymax < ymin:
            continue
        id0, id1, id2 = inv_d[t, 0], inv_d[t, 1], inv_d[t, 2]
        ud0, ud1, ud2 = u_over_d[t, 0], u_over_d[t, 1], u_over_d[t, 2]
        vd0, vd1, vd2 = v_over_d[t, 0], v_over_d[t, 1], v_over_d[t, 2]
        sh = shade[t]
        for yi in range(ymin, ymax + 1):
            cy = yi + 0.5
            for xi in range(xmin, xmax + 1):
                cx = xi + 0.5
                w0 = (x1 - cx) * (y2 - cy) - (x2 - cx) * (y1 - cy)
                w1 = (x2 - cx) * (y0 - cy) - (x0 - cx) * (y2 - cy)
                w2 = (x0 - cx) * (y1 - cy) - (x1 - cx) * (y0 - cy)
                # double-sided: accept either orientation consistently
                if area > 0.0:
                    if w0 < 0.0 or w1 < 0.0 or w2 < 0.0:
                        continue
                else:
                    if w0 > 0.0 or w1 > 0.0 or w2 > 0.0:
                        continue
                b0 = w0 * inv_area
                b1 = w1 * inv_area
                b2 = w2 * inv_area
                inv_dd = b0 * id0 + b1 * id1 + b2 * id2
                if inv_dd <= 0.0:
                    continue
                d = 1.0 / inv_dd
                if d > far:
                    continue
                if d >= depth[yi, xi]:
                    continue
                if use_texture:
                    u = (b0 * ud0 + b1 * ud1 + b2 * ud2) * d
                    v = (b0 * vd0 + b1 * vd1 + b2 * vd2) * d
                    # bilinear, repeat wrap
                    fx = u * tw - 0.5
                    fy = v * th - 0.5
                    ix = int(np.floor(fx))
                    iy = int(np.floor(fy))
                    ax = fx - ix
                    ay = fy - iy
                    x0i = ix % tw
                    x1i = (ix + 1) % tw
                    y0i = iy % th
                    y1i = (iy + 1) % th
                    r = (
                        (1 - ax) * (1 - ay) * texture[y0i, x0i, 0]
                        + ax * (1 - ay) * texture[y0i, x1i, 0]
                        + (1 - ax) * ay * texture[y1i, x0i, 0]
                        + ax * ay * texture[y1i, x1i, 0]
                    ) / 255.0
                    g = (
                        (1 - ax) * (1 - ay) * texture[y0i, x0i, 1]
                        + ax * (1 - ay) * texture[y0i, x1i, 1]
                        + (1 - ax) * ay * texture[y1i, x0i, 1]
                        + ax * ay * texture[y1i, x1i, 1]
                    ) / 255.0
                    b = (
                        (1 - ax) * (1 - ay) * texture[y0i, x0i, 2]
                        + ax * (1 - ay) * texture[y0i, x1i, 2]
                        + (1 - ax) * ay * texture[y1i, x0i, 2]
                        + ax * ay * texture[y1i, x1i, 2]
                    ) / 255.0
                else:
                    r = base_color[0]
                    g = base_color[1]
                    b = base_color[2]
                depth[yi, xi] = d
                rr = r * sh * 255.0
                gg = g * sh * 255.0
                bb = b * sh * 255.0
                rgb[yi, xi, 0] = np.uint8(255.0 if rr > 255.0 else (0.0 if rr < 0.0 else rr))
                rgb[yi, xi, 1] = np.uint8(255.0 if gg > 255.0 else (0.0 if gg < 0.0 else gg))
                rgb[yi, xi, 2] = np.uint8(255.0 if bb > 255.0 else (0.0 if bb < 0.0 else bb))
