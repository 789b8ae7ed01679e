"""
Track geometry: centerline loading, Frenet conversion, LiDAR and collisions.

The Frenet frame is built from per-vertex unit normals (bisectors of the
adjacent segment normals) that are interpolated linearly along each
segment.  A point is therefore written as

    P = C(t) + n * N(t) / |N(t)|,    C(t) = A + t (B - A),  N(t) = N_A + t (N_B - N_A)

which is continuous across vertices, so ``to_cartesian`` and ``to_frenet``
are exact inverses inside the corridor (no dead wedges at polyline kinks).
"""

from __future__ import annotations

import bisect
import csv
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray
from shapely.geometry import LinearRing, LineString

FloatArray = NDArray[np.float64]

TWO_PI = 2.0 * math.pi
CLOSE_TOL = 0.01
DEFAULT_COLUMNS = ("x_m", "y_m", "w_tr_left_m", "w_tr_right_m")
BUNDLED_TRACKS = ("porto", "barcelona", "monaco", "test_oval")


class TrackParseError(ValueError):
    """Malformed track CSV; carries the offending 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TrackValidationError(ValueError):
    pass


class OutOfCorridorError(ValueError):
    pass


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - a) % TWO_PI


class FrenetPose(NamedTuple):
    s: float
    n: float
    psi: float


@dataclass(frozen=True)
class LidarConfig:
    n_beams: int = 20
    fov: float = math.pi
    max_range: float = 20.0
    noise_std: float = 0.0

    def __post_init__(self) -> None:
        if self.n_beams < 2:
            raise ValueError("n_beams must be >= 2")
        if not 0.0 < self.fov <= TWO_PI:
            raise ValueError("fov must lie in (0, 2*pi]")
        if self.max_range <= 0.0:
            raise ValueError("max_range must be positive")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be non-negative")

    @property
    def beam_offsets(self) -> FloatArray:
        return -self.fov / 2.0 + np.arange(self.n_beams) * self.fov / (self.n_beams - 1)


def _cross(a: FloatArray, b: FloatArray) -> FloatArray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True, eq=False)
class TrackGeometry:
    """
    Immutable centerline track.

    Parameters
    ----------
    centerline : (N, 2) array
        Ordered centerline points.  For closed tracks the first point is not
        repeated at the end.
    w_left, w_right : (N,) arrays
        Half-widths from the centerline to the left/right boundary.
    closed : bool
        Whether the last point connects back to the first.
    name : str
        Informational label.
    """

    centerline: FloatArray
    w_left: FloatArray
    w_right: FloatArray
    closed: bool = True
    name: str = ""
    cum_s: FloatArray = field(init=False, repr=False)
    total_length: float = field(init=False)
    seg_start: FloatArray = field(init=False, repr=False)
    seg_vec: FloatArray = field(init=False, repr=False)
    seg_len: FloatArray = field(init=False, repr=False)
    normals: FloatArray = field(init=False, repr=False)
    left_boundary: FloatArray = field(init=False, repr=False)
    right_boundary: FloatArray = field(init=False, repr=False)
    bbox: tuple[float, float, float, float] = field(init=False)
    boundary_start: FloatArray = field(init=False, repr=False)
    boundary_vec: FloatArray = field(init=False, repr=False)
    normal_delta: FloatArray = field(init=False, repr=False)
    _py: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        pts = np.ascontiguousarray(self.centerline, dtype=np.float64)
        wl = np.ascontiguousarray(self.w_left, dtype=np.float64)
        wr = np.ascontiguousarray(self.w_right, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise TrackValidationError("centerline must have shape (N, 2)")
        if pts.shape[0] < 2 + int(self.closed):
            raise TrackValidationError("too few centerline points")
        if wl.shape != (pts.shape[0],) or wr.shape != (pts.shape[0],):
            raise TrackValidationError("width arrays must match the centerline length")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(wl)) and np.all(np.isfinite(wr))):
            raise TrackValidationError("non-finite track data")
        if np.any(wl <= 0.0) or np.any(wr <= 0.0):
            raise TrackValidationError("half-widths must be positive")

        end = np.roll(pts, -1, axis=0) if self.closed else pts[1:]
        start = pts if self.closed else pts[:-1]
        seg_vec = end - start
        seg_len = np.hypot(seg_vec[:, 0], seg_vec[:, 1])
        if np.any(seg_len <= 0.0):
            i = int(np.argmin(seg_len))
            raise TrackValidationError(f"consecutive centerline points {i} and {i + 1} coincide")
        cum_s = np.concatenate(([0.0], np.cumsum(seg_len)))
        total_length = float(cum_s[-1])
        cum_s = cum_s[: pts.shape[0]]

        tangents = seg_vec / seg_len[:, None]
        seg_normals = np.stack([-tangents[:, 1], tangents[:, 0]], axis=1)
        if self.closed:
            summed = seg_normals + np.roll(seg_normals, 1, axis=0)
        else:
            summed = np.empty_like(pts)
            summed[0] = seg_normals[0]
            summed[-1] = seg_normals[-1]
            summed[1:-1] = seg_normals[1:] + seg_normals[:-1]
        norm = np.hypot(summed[:, 0], summed[:, 1])
        if np.any(norm < 1e-9):
            raise TrackValidationError("centerline reverses direction")
        normals = summed / norm[:, None]

        left = pts + wl[:, None] * normals
        right = pts - wr[:, None] * normals
        for label, line in (("left", left), ("right", right)):
            geom = LinearRing(line) if self.closed else LineString(line)
            if not geom.is_simple:
                raise TrackValidationError(f"{label} boundary self-intersects")
        b_start, b_vec = [], []
        for line in (left, right):
            begin = line if self.closed else line[:-1]
            finish = np.roll(line, -1, axis=0) if self.closed else line[1:]
            b_start.append(begin)
            b_vec.append(finish - begin)
        nxt = np.roll(normals, -1, axis=0) if self.closed else normals[1:]
        normal_delta = nxt - normals[: seg_len.shape[0]]
        both = np.vstack([left, right])
        bbox = (float(both[:, 0].min()), float(both[:, 1].min()),
                float(both[:, 0].max()), float(both[:, 1].max()))

        for name, value in (
            ("centerline", pts), ("w_left", wl), ("w_right", wr), ("cum_s", cum_s),
            ("total_length", total_length), ("seg_start", start), ("seg_vec", seg_vec),
            ("seg_len", seg_len), ("normals", normals), ("left_boundary", left),
            ("right_boundary", right), ("bbox", bbox),
            ("boundary_start", np.vstack(b_start)), ("boundary_vec", np.vstack(b_vec)),
            ("normal_delta", normal_delta),
        ):
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, name, value)
        # plain-list mirrors for the scalar hot paths
        object.__setattr__(self, "_py", {
            "cum_s": cum_s.tolist(), "seg_len": seg_len.tolist(),
            "seg_start": start.tolist(), "seg_vec": seg_vec.tolist(),
            "normals": normals.tolist(), "normal_delta": normal_delta.tolist(),
            "w_left": wl.tolist(), "w_right": wr.tolist(),
        })

    @property
    def n_segments(self) -> int:
        return self.seg_len.shape[0]

    @property
    def max_half_width(self) -> float:
        return float(max(self.w_left.max(), self.w_right.max()))

    def _next_index(self, i: int | NDArray[np.int64]):
        return (i + 1) % self.centerline.shape[0] if self.closed else i + 1

    def wrap_s(self, s: float) -> float:
        if self.closed:
            s = s % self.total_length
            if s >= self.total_length:
                s = 0.0
        return s

    def _locate(self, s: float) -> tuple[int, float]:
        """Segment index and local parameter for arclength ``s``."""
        s = self.wrap_s(s)
        cum = self._py["cum_s"]
        i = bisect.bisect_right(cum, s) - 1
        i = min(max(i, 0), len(self._py["seg_len"]) - 1)
        return i, (s - cum[i]) / self._py["seg_len"][i]

    def half_widths(self, s: float) -> tuple[float, float]:
        """(left, right) half-widths at ``s``, linearly interpolated."""
        i, t = self._locate(s)
        j = self._next_index(i)
        t = min(max(t, 0.0), 1.0)
        wl_, wr_ = self._py["w_left"], self._py["w_right"]
        return wl_[i] + t * (wl_[j] - wl_[i]), wr_[i] + t * (wr_[j] - wr_[i])


def _parse_rows(text: str) -> tuple[list[str] | None, list[tuple[int, list[str]]]]:
    header = None
    rows: list[tuple[int, list[str]]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if header is None and not rows and "x_m" in body:
                header = [c.strip() for c in body.split(",")]
            continue
        fields = next(csv.reader(io.StringIO(stripped)))
        if header is None and not rows and fields and fields[0].strip() == "x_m":
            header = [c.strip() for c in fields]
            continue
        rows.append((lineno, fields))
    return header, rows


def load_track(source: str, *, closed: bool | None = None, name: str = "") -> TrackGeometry:
    """
    Parse racetrack-database style centerline CSV text.

    Columns are ``x_m, y_m, w_tr_left_m, w_tr_right_m`` unless a header
    (optionally commented with ``#``) names them in a different order.
    The track is closed when the first and last rows coincide within 1 cm,
    unless ``closed`` is given explicitly.
    """
    header, rows = _parse_rows(source)
    columns = list(DEFAULT_COLUMNS)
    if header is not None:
        missing = [c for c in DEFAULT_COLUMNS if c not in header]
        if missing:
            raise TrackParseError(1, f"header lacks columns {missing}")
        columns = header
    index = [columns.index(c) for c in DEFAULT_COLUMNS]
    data = np.empty((len(rows), 4))
    for k, (lineno, fields) in enumerate(rows):
        if len(fields) != len(columns):
            raise TrackParseError(lineno, f"expected {len(columns)} fields, got {len(fields)}")
        try:
            values = [float(fields[j]) for j in index]
        except ValueError as exc:
            raise TrackParseError(lineno, str(exc)) from None
        if not all(math.isfinite(v) for v in values):
            raise TrackParseError(lineno, "non-finite value")
        data[k] = values
    if data.shape[0] < 3:
        raise TrackValidationError("a track needs at least 3 rows")

    coincide = bool(np.hypot(*(data[0, :2] - data[-1, :2])) <= CLOSE_TOL)
    if closed is None:
        closed = coincide
    if closed and coincide:
        data = data[:-1]
    return TrackGeometry(data[:, :2], data[:, 2], data[:, 3], closed=closed, name=name)


def assets_dir() -> Path:
    env = os.environ.get("FRENET_RACER_ASSETS")
    if env:
        return Path(env)
    return Path(__file__).resolve().parent / "assets"


def track_path(name: str) -> Path:
    return assets_dir() / "tracks" / f"{name}.csv"


def load_track_file(path: str | os.PathLike, **kwargs) -> TrackGeometry:
    path = Path(path)
    kwargs.setdefault("name", path.stem)
    return load_track(path.read_text(), **kwargs)


def bundled_track(name: str) -> TrackGeometry:
    """Load a bundled asset by id (``porto``, ``barcelona``, ``monaco``, ``test_oval``)."""
    path = track_path(name)
    if not path.exists():
        raise FileNotFoundError(f"track asset not found: {path}")
    return load_track_file(path)


def to_cartesian(track: TrackGeometry, s: float, n: float) -> tuple[float, float, float]:
    """Map (s, n) to (x, y, tangent_angle)."""
    i, t = track._locate(s)
    py = track._py
    ax, ay = py["seg_start"][i]
    dx, dy = py["seg_vec"][i]
    nax, nay = py["normals"][i]
    ddx, ddy = py["normal_delta"][i]
    nx = nax + t * ddx
    ny = nay + t * ddy
    norm = math.hypot(nx, ny)
    nx /= norm
    ny /= norm
    return ax + t * dx + n * nx, ay + t * dy + n * ny, math.atan2(-nx, ny)


def _segment_roots(track: TrackGeometry, i: int, x: float, y: float, open_lo: bool, open_hi: bool):
    """Scalar version of the per-segment root solve used by the local search."""
    py = track._py
    ax, ay = py["seg_start"][i]
    dx, dy = py["seg_vec"][i]
    nax, nay = py["normals"][i]
    ddx, ddy = py["normal_delta"][i]
    qx, qy = x - ax, y - ay
    qa = -(dx * ddy - dy * ddx)
    qb = (qx * ddy - qy * ddx) - (dx * nay - dy * nax)
    qc = qx * nay - qy * nax
    seg_len = py["seg_len"][i]
    if abs(qa) <= 1e-12 * seg_len * seg_len:
        roots = (-qc / qb,) if qb != 0.0 else ()
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0:
            return ()
        qq = -0.5 * (qb + math.copysign(math.sqrt(disc), qb))
        roots = (qq / qa, qc / qq) if qq != 0.0 else (qq / qa,)
    lo = -math.inf if open_lo else -1e-9
    hi = math.inf if open_hi else 1.0 + 1e-9
    out = []
    for t in roots:
        if lo <= t <= hi:
            rx, ry = qx - t * dx, qy - t * dy
            nx, ny = nax + t * ddx, nay + t * ddy
            norm = math.hypot(nx, ny)
            out.append((math.hypot(rx, ry), i, t, (rx * nx + ry * ny) / norm, nx / norm, ny / norm))
    return out


def _to_frenet_local(track: TrackGeometry, x: float, y: float, heading: float,
                     s_hint: float, reach: int = 3) -> FrenetPose | None:
    """Search a few segments around ``s_hint``; ``None`` if nothing lies inside the corridor."""
    i0, _ = track._locate(s_hint)
    nseg = track.n_segments
    best = None
    for k in range(i0 - reach, i0 + reach + 1):
        if track.closed:
            i = k % nseg
        elif 0 <= k < nseg:
            i = k
        else:
            continue
        open_lo = not track.closed and i == 0
        open_hi = not track.closed and i == nseg - 1
        for cand in _segment_roots(track, i, x, y, open_lo, open_hi):
            if best is None or cand[0] < best[0]:
                best = cand
    if best is None:
        return None
    dist, i, t, n, nx, ny = best
    s = track._py["cum_s"][i] + t * track._py["seg_len"][i]
    if track.closed:
        s = s % track.total_length
        if s >= track.total_length:
            s = 0.0
    wl, wr = track.half_widths(s)
    if abs(n) >= (wl if n >= 0.0 else wr):
        return None
    return FrenetPose(s, n, wrap_angle(heading - math.atan2(-nx, ny)))


def _frenet_candidates(track: TrackGeometry, x: float, y: float):
    """All (segment, t) pairs whose interpolated normal passes through (x, y)."""
    nseg = track.n_segments
    idx = np.arange(nseg)
    a_pts = track.seg_start
    d = track.seg_vec
    na = track.normals[:nseg]
    dn = track.normal_delta
    q = np.array([x, y]) - a_pts

    qa = -_cross(d, dn)
    qb = _cross(q, dn) - _cross(d, na)
    qc = _cross(q, na)

    scale = track.seg_len * track.seg_len
    linear = np.abs(qa) <= 1e-12 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        t_lin = np.where(linear, -qc / qb, np.nan)
        disc = qb * qb - 4.0 * qa * qc
        root = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
        qq = -0.5 * (qb + np.copysign(root, qb))
        t1 = np.where(linear, np.nan, qq / qa)
        t2 = np.where(linear, np.nan, qc / qq)

    seg = np.concatenate([idx, idx, idx])
    t = np.concatenate([t_lin, t1, t2])
    lo = np.full(seg.shape, -1e-9)
    hi = np.full(seg.shape, 1.0 + 1e-9)
    if not track.closed:
        lo[seg == 0] = -np.inf
        hi[seg == nseg - 1] = np.inf
    ok = np.isfinite(t) & (t >= lo) & (t <= hi)
    return seg[ok], t[ok], q[seg[ok]], na[seg[ok]], dn[seg[ok]]


def to_frenet(track: TrackGeometry, x: float, y: float, heading: float,
              s_hint: float | None = None) -> FrenetPose:
    """
    Project a Cartesian pose into the track's Frenet frame.

    The candidate closest to the point wins; among exact ties the smaller
    arclength is kept.  With ``s_hint`` (e.g. the previous arclength) a few
    neighbouring segments are tried first; the result is used only if it
    lies inside the corridor, where the projection is unique, otherwise the
    full search runs.

    Raises
    ------
    OutOfCorridorError
        If the point is farther than twice the widest half-width from the
        centerline.
    """
    if s_hint is not None:
        pose = _to_frenet_local(track, x, y, heading, s_hint)
        if pose is not None:
            return pose
    seg, t, q, na, dn = _frenet_candidates(track, x, y)
    limit = 2.0 * track.max_half_width
    if seg.size == 0:
        raise OutOfCorridorError(f"({x:.3f}, {y:.3f}) has no projection onto the centerline")
    d = track.seg_vec[seg]
    rel = q - t[:, None] * d
    dist = np.hypot(rel[:, 0], rel[:, 1])
    s_all = track.cum_s[seg] + t * track.seg_len[seg]
    if track.closed:
        s_all = np.mod(s_all, track.total_length)
    order = np.lexsort((s_all, dist))
    k = int(order[0])
    if dist[k] > limit:
        raise OutOfCorridorError(
            f"({x:.3f}, {y:.3f}) is {dist[k]:.3f} m from the centerline (limit {limit:.3f} m)"
        )
    nvec = na[k] + t[k] * dn[k]
    nvec = nvec / math.hypot(nvec[0], nvec[1])
    n = float(rel[k, 0] * nvec[0] + rel[k, 1] * nvec[1])
    s = float(s_all[k])
    if track.closed and s >= track.total_length:
        s = 0.0
    tangent = math.atan2(-nvec[0], nvec[1])
    return FrenetPose(s, n, wrap_angle(heading - tangent))


def lidar_scan(
    track: TrackGeometry,
    x: float,
    y: float,
    heading: float,
    cfg: LidarConfig,
    rng: np.random.Generator | None = None,
) -> FloatArray:
    """
    Ranges to the first boundary hit along equispaced beams.

    Beam ``i`` points at ``heading - fov/2 + i * fov/(n_beams - 1)``.  Misses
    saturate at ``max_range``.  Gaussian noise is added when
    ``cfg.noise_std > 0`` and the result is clamped to ``[0, max_range]``.
    """
    p0, e = track.boundary_start, track.boundary_vec
    angles = heading + cfg.beam_offsets
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    w = p0 - np.array([x, y])
    denom = dirs[:, None, 0] * e[None, :, 1] - dirs[:, None, 1] * e[None, :, 0]
    r_num = w[None, :, 0] * e[None, :, 1] - w[None, :, 1] * e[None, :, 0]
    u_num = w[None, :, 0] * dirs[:, None, 1] - w[None, :, 1] * dirs[:, None, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = r_num / denom
        u = u_num / denom
    hit = (np.abs(denom) > 1e-15) & (r >= 0.0) & (u >= -1e-12) & (u <= 1.0 + 1e-12)
    ranges = np.where(hit, r, np.inf).min(axis=1)
    ranges = np.minimum(ranges, cfg.max_range)
    if cfg.noise_std > 0.0:
        if rng is None:
            raise ValueError("a random generator is required when noise_std > 0")
        ranges = np.clip(ranges + rng.normal(0.0, cfg.noise_std, ranges.shape), 0.0, cfg.max_range)
    return ranges


def check_collision(track: TrackGeometry, pose: FrenetPose, vehicle_half_width: float) -> bool:
    """Contact test: ``|n| + half_width >= local half-width`` (equality collides)."""
    wl, wr = track.half_widths(pose.s)
    width = wl if pose.n >= 0.0 else wr
    return abs(pose.n) + vehicle_half_width >= width


def centerline_progress(track: TrackGeometry, s_prev: float, s_now: float) -> float:
    """Signed shortest difference ``s_now - s_prev`` around the loop."""
    delta = s_now - s_prev
    if track.closed:
        half = 0.5 * track.total_length
        if delta > half:
            delta -= track.total_length
        elif delta < -half:
            delta += track.total_length
    return delta
