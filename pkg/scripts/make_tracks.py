"""Regenerate the bundled synthetic track assets.

The three circuits are smooth closed loops scaled to the lengths of the
F1tenth Porto, Barcelona-Catalunya and Monaco maps (30.7 m, 236.8 m,
178.3 m).  The public centerlines are not redistributable here, so the
shapes are procedural; only length, width and curvature range are matched.

    python scripts/make_tracks.py [outdir]
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

HERE = Path(__file__).resolve().parent
DEFAULT_OUT = HERE.parent / "src" / "frenet_racer" / "assets" / "tracks"


def periodic_spline(ctrl: np.ndarray, dense: int = 40000) -> np.ndarray:
    pts = np.vstack([ctrl, ctrl[:1]])
    chord = np.r_[0.0, np.cumsum(np.hypot(*np.diff(pts, axis=0).T))]
    spline = CubicSpline(chord, pts, bc_type="periodic")
    u = np.linspace(0.0, chord[-1], dense, endpoint=False)
    return spline(u)


def resample(dense: np.ndarray, length: float, spacing: float) -> np.ndarray:
    """Uniform-arclength polyline whose closed length equals ``length``."""
    closed = np.vstack([dense, dense[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    s = np.r_[0.0, np.cumsum(seg)]
    n = int(round(length / spacing))
    target = np.linspace(0.0, s[-1], n, endpoint=False)
    pts = np.stack([np.interp(target, s, closed[:, 0]), np.interp(target, s, closed[:, 1])], axis=1)
    for _ in range(3):
        poly = np.vstack([pts, pts[:1]])
        total = np.hypot(*np.diff(poly, axis=0).T).sum()
        pts = pts * (length / total)
    return pts - pts.mean(axis=0)


def min_radius(pts: np.ndarray) -> float:
    a = np.roll(pts, 1, axis=0)
    c = np.roll(pts, -1, axis=0)
    ab = np.hypot(*(pts - a).T)
    bc = np.hypot(*(c - pts).T)
    ca = np.hypot(*(a - c).T)
    cross = np.abs((pts - a)[:, 0] * (c - pts)[:, 1] - (pts - a)[:, 1] * (c - pts)[:, 0])
    with np.errstate(divide="ignore"):
        r = ab * bc * ca / (2.0 * cross)
    return float(np.min(r))


def stadium(straight: float, radius: float, spacing: float) -> np.ndarray:
    length = 2 * straight + 2 * np.pi * radius
    s = np.arange(0.0, length, length / round(length / spacing))
    pts = np.empty((s.size, 2))
    for k, si in enumerate(s):
        if si < straight:
            pts[k] = (si - straight / 2, -radius)
        elif si < straight + np.pi * radius:
            a = -np.pi / 2 + (si - straight) / radius
            pts[k] = (straight / 2 + radius * np.cos(a), radius * np.sin(a))
        elif si < 2 * straight + np.pi * radius:
            pts[k] = (straight / 2 - (si - straight - np.pi * radius), radius)
        else:
            a = np.pi / 2 + (si - 2 * straight - np.pi * radius) / radius
            pts[k] = (-straight / 2 + radius * np.cos(a), radius * np.sin(a))
    return pts


PORTO_CTRL = np.array([
    [5.6, 0.0], [4.85, 1.99], [2.8, 3.31], [0.0, 3.2], [-2.8, 3.31], [-4.85, 1.99],
    [-5.6, 0.0], [-4.85, -2.0], [-2.8, -3.46], [0.0, -4.0], [2.8, -3.46], [4.85, -2.0],
])

BARCELONA_CTRL = np.array([
    [0, 0], [14, 0], [28, 0], [40, 0.5], [47, 4], [48, 10], [43, 14], [37, 13],
    [33, 16], [35, 22], [41, 25], [45, 30], [42, 36], [34, 38], [26, 35],
    [21, 30], [15, 31], [10, 36], [3, 37], [-3, 33], [-4, 26], [-1, 21],
    [-5, 15], [-7, 8], [-5, 2],
], dtype=float)

MONACO_CTRL = np.array([
    [0, 0], [10, -1], [18, 0], [23, 4], [22, 9], [17, 10], [14, 14], [17, 18],
    [23, 19], [27, 23], [25, 28], [19, 30], [12, 28], [7, 24], [2, 25],
    [-3, 22], [-4, 16], [-1, 12], [-5, 7], [-4, 2],
], dtype=float)


def write_track(path: Path, pts: np.ndarray, w_left: float, w_right: float, note: str) -> None:
    rows = np.vstack([pts, pts[:1]])
    with path.open("w") as fh:
        fh.write(f"# {note}\n")
        fh.write("# x_m,y_m,w_tr_left_m,w_tr_right_m\n")
        for x, y in rows:
            fh.write(f"{x:.6f},{y:.6f},{w_left:.4f},{w_right:.4f}\n")


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    specs = [
        ("porto", PORTO_CTRL, 30.7, 0.1, 0.8),
        ("barcelona", BARCELONA_CTRL, 236.8, 0.2, 1.1),
        ("monaco", MONACO_CTRL, 178.3, 0.2, 0.9),
    ]
    for name, ctrl, length, spacing, width in specs:
        pts = resample(periodic_spline(ctrl), length, spacing)
        print(f"{name}: {len(pts)} points, min radius {min_radius(pts):.2f} m")
        write_track(out / f"{name}.csv", pts, width, width, f"synthetic {name}-length loop, {length} m")
    oval = stadium(10.0, 4.0, 0.1)
    print(f"test_oval: {len(oval)} points, min radius {min_radius(oval):.2f} m")
    write_track(out / "test_oval.csv", oval, 1.0, 1.0, "stadium oval: 10 m straights, 4 m radius")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_OUT)
