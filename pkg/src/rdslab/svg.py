"""Plain SVG 1.1 drawing of a bounded window of the space."""
from __future__ import annotations

import numpy as np

from .space import Triangle, embed

SCALE = 100.0
PAD = 0.3


def _fmt(v: float) -> str:
    return f"{v:.3f}"


class _Canvas:
    def __init__(self, x_lo, x_hi, y_lo, y_hi):
        self.x_lo, self.y_hi = x_lo - PAD, y_hi + PAD
        self.width = (x_hi - x_lo + 2 * PAD) * SCALE
        self.height = (y_hi - y_lo + 2 * PAD) * SCALE
        self.items: list[str] = []

    def px(self, x: float, y: float) -> str:
        return f"{_fmt((x - self.x_lo) * SCALE)},{_fmt((self.y_hi - y) * SCALE)}"

    def render(self) -> str:
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{_fmt(self.width)}" height="{_fmt(self.height)}" '
                f'viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">\n')
        return head + "\n".join(self.items) + "\n</svg>\n"


def space_svg(z_lo: int = -3, z_hi: int = 8, ray_top: float = 8.0, arc_points: int = 129,
              cloud=None) -> str:
    """Triangles ``X_z`` for ``z_lo <= z <= z_hi``, the ray up to ``ray_top`` and the arc.

    An optional point cloud is overlaid as dots.
    """
    if z_lo > z_hi:
        raise ValueError("need z_lo <= z_hi")
    top = max(ray_top, 2.0 ** (-z_lo))
    c = _Canvas(-1.0, 2.0, -1.5, top)
    for z in range(z_lo, z_hi + 1):
        corners = [embed(Triangle(z, "L", 0.0)), embed(Triangle(z, "L", 1.0)), embed(Triangle(z + 1, "L", 0.0))]
        pts = " ".join(c.px(x, y) for x, y in corners)
        c.items.append(f'<polygon points="{pts}" fill="#dde6f0" stroke="#204060" stroke-width="1"/>')
    c.items.append(f'<line x1="{c.px(-1, 0).split(",")[0]}" y1="{c.px(-1, 0).split(",")[1]}" '
                   f'x2="{c.px(-1, ray_top).split(",")[0]}" y2="{c.px(-1, ray_top).split(",")[1]}" '
                   f'stroke="#204060" stroke-width="2"/>')
    alpha = np.pi + np.pi * np.arange(arc_points) / (arc_points - 1)
    arc = " ".join(c.px(0.5 + 1.5 * np.cos(a), 1.5 * np.sin(a)) for a in alpha)
    c.items.append(f'<polyline points="{arc}" fill="none" stroke="#204060" stroke-width="2"/>')
    if cloud is not None:
        xy = cloud.embed()
        keep = (xy[:, 1] <= top) & np.isfinite(xy).all(axis=1)
        for x, y in xy[keep]:
            px, py = c.px(float(x), float(y)).split(",")
            c.items.append(f'<circle cx="{px}" cy="{py}" r="3" fill="#c03020"/>')
    return c.render()
