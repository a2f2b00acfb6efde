"""Writers for the JSON documents and hit-map pictures a run leaves behind."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from somnb.som import SomModel


def dumps(doc) -> str:
    # json renders floats with repr, which round-trips every float64 exactly
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_json(doc, path) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def hitmap_text(model: SomModel, counts) -> str:
    """Grid of ``class:count`` cells; odd rows of a hexagonal map are shifted half a cell."""
    grid = model.config.grid
    width = max(len(f"{grid.n_units}:{max(counts, default=0)}"), 6) + 2
    lines = []
    for r in range(grid.rows):
        pad = " " * (width // 2) if grid.topology == "hexagonal" and r % 2 else ""
        cells = []
        for c in range(grid.cols):
            u = r * grid.cols + c
            cells.append(f"{u + 1}:{int(counts[u])}".center(width))
        lines.append(pad + "".join(f"[{cell}]" for cell in cells).rstrip())
    return "\n".join(lines) + "\n"


def _hexagon(cx: float, cy: float, radius: float) -> str:
    pts = []
    for k in range(6):
        ang = math.pi / 6 + k * math.pi / 3
        pts.append(f"{cx + radius * math.cos(ang):.2f},{cy + radius * math.sin(ang):.2f}")
    return " ".join(pts)


def hitmap_svg(model: SomModel, counts, scale: float = 80.0) -> str:
    """Static SVG: one cell per unit, darker fill for more assigned rows."""
    counts = np.asarray(counts)
    pos = model.positions * scale
    margin = scale
    width = pos[:, 0].max() + 2 * margin
    height = pos[:, 1].max() + 2 * margin
    top = max(int(counts.max()), 1)
    hexagonal = model.config.grid.topology == "hexagonal"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.2f} {height:.2f}">',
        f'<rect width="100%" height="100%" fill="white"/>',
    ]
    for u, (x, y) in enumerate(pos):
        cx, cy = x + margin, y + margin
        shade = int(round(235 - 190 * counts[u] / top))
        fill = f"rgb({shade},{shade},{min(shade + 20, 255)})"
        if hexagonal:
            shape = f'<polygon points="{_hexagon(cx, cy, scale / math.sqrt(3))}"'
        else:
            half = scale / 2
            shape = f'<rect x="{cx - half:.2f}" y="{cy - half:.2f}" width="{scale:.2f}" height="{scale:.2f}"'
        parts.append(f'{shape} fill="{fill}" stroke="#333" stroke-width="1"/>')
        ink = "white" if shade < 130 else "black"
        parts.append(
            f'<text x="{cx:.2f}" y="{cy:.2f}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="12" fill="{ink}">class {u + 1}: {int(counts[u])}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
