"""Static exports: PGM spin images and SVG pictures of interfaces."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .interface import InterfaceTrace
from .sampler import SpinField

__all__ = ["spins_to_pgm", "interfaces_to_svg"]

_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def spins_to_pgm(field: SpinField, path: str | Path | None = None) -> bytes:
    """Binary PGM (P5) image, one byte per site: 255 for +1, 0 for -1.

    The collar is included; image rows run from the top (largest y) down.

    Examples
    --------
    >>> from multisle.ising.lattice import build_polygon
    >>> from multisle.ising.sampler import sample_spins
    >>> data = spins_to_pgm(sample_spins(build_polygon(4, (0.0, 0.5)), sweeps=1))
    >>> data[:11]
    b'P5\\n6 6\\n255\\n'
    """
    img = np.where(field.spins.T[::-1] > 0, 255, 0).astype(np.uint8)
    h, w = img.shape
    data = f"P5\n{w} {h}\n255\n".encode() + img.tobytes()
    if path is not None:
        Path(path).write_bytes(data)
    return data


def interfaces_to_svg(field: SpinField, traces: list[InterfaceTrace],
                      path: str | Path | None = None, cell: float = 6.0) -> str:
    """SVG with the spin raster (light for +1, dark for -1) and the interfaces."""
    s = field.spins
    n = s.shape[0]
    size = n * cell
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:g}" height="{size:g}" '
        f'viewBox="0 0 {size:g} {size:g}">'
    ]
    for x in range(n):
        for y in range(n):
            fill = "#f2f2f2" if s[x, y] > 0 else "#555555"
            out.append(f'<rect x="{x * cell:g}" y="{(n - 1 - y) * cell:g}" width="{cell:g}" '
                       f'height="{cell:g}" fill="{fill}"/>')
    poly = field.polygon
    for k, tr in enumerate(traces):
        pts = tr.path.astype(float) + 1.0  # plaquette (p, q) is centred at cell (p + 1, q + 1) corners
        (p0, q0), (dx, dy) = poly.mark_edge(tr.start - 1)
        start = np.array([[p0 + 1.0 - dx, q0 + 1.0 - dy]])
        xy = np.concatenate([start, pts]) * cell
        coords = " ".join(f"{a:g},{size - b:g}" for a, b in xy)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{_COLORS[k % len(_COLORS)]}" '
                   f'stroke-width="{cell / 3:g}"/>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
