"""Dependency-free SVG line charts."""

from __future__ import annotations

import numpy as np


def line_svg(x, y, xlabel: str, ylabel: str, title: str = "", width: int = 480, height: int = 320) -> str:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pad = 40
    xs = (x - x.min()) / max(np.ptp(x), 1e-300) * (width - 2 * pad) + pad
    ys = height - pad - (y - y.min()) / max(np.ptp(y), 1e-300) * (height - 2 * pad)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, ys))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect width="100%" height="100%" fill="white"/>\n'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{pts}"/>\n'
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="12">{xlabel}</text>\n'
        f'<text x="12" y="{height / 2}" font-size="12">{ylabel}</text>\n'
        f'<text x="{pad}" y="{pad - 10}" font-size="12">{title} [{y.min():.4g}, {y.max():.4g}]</text>\n'
        "</svg>\n"
    )
