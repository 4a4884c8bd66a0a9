"""Planar primitives: points, lines, convex polygons, reflections and folds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .exceptions import AnchorOnLine, DegenerateDomain, InvalidParameters

TOL = 1e-12


class Point(NamedTuple):
    x: float
    y: float


def as_point(p) -> Point:
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidParameters(f"non-finite point ({x}, {y})")
    return Point(x, y)


@dataclass(frozen=True)
class Line:
    """The locus ``nx*x + ny*y = offset`` with a unit normal."""

    nx: float
    ny: float
    offset: float

    def __post_init__(self):
        norm = math.hypot(self.nx, self.ny)
        if norm == 0.0 or not math.isfinite(norm):
            raise InvalidParameters("line normal must be a finite nonzero vector")
        object.__setattr__(self, "nx", self.nx / norm)
        object.__setattr__(self, "ny", self.ny / norm)
        object.__setattr__(self, "offset", self.offset / norm)

    @classmethod
    def vertical(cls, x0: float) -> "Line":
        return cls(1.0, 0.0, x0)

    @classmethod
    def horizontal(cls, y0: float) -> "Line":
        return cls(0.0, 1.0, y0)

    @classmethod
    def through(cls, p, q) -> "Line":
        p, q = as_point(p), as_point(q)
        nx, ny = q.y - p.y, p.x - q.x
        return cls(nx, ny, nx * p.x + ny * p.y)

    def signed_distance(self, p) -> float:
        return self.nx * p[0] + self.ny * p[1] - self.offset

    def signed_distances(self, pts: np.ndarray) -> np.ndarray:
        return pts[:, 0] * self.nx + pts[:, 1] * self.ny - self.offset

    def reflection_matrix(self) -> np.ndarray:
        n = np.array([self.nx, self.ny])
        return np.eye(2) - 2.0 * np.outer(n, n)


def reflect(p, line: Line) -> Point:
    """Mirror image of ``p`` across ``line``."""
    d = line.signed_distance(p)
    return Point(p[0] - 2.0 * d * line.nx, p[1] - 2.0 * d * line.ny)


def fold(p, line: Line, anchor, tol: float = TOL) -> Point:
    """Fold ``p`` onto the anchor's side of ``line``.

    Points within ``tol`` of the line are left unchanged, which keeps the
    fold exactly idempotent under rounding.
    """
    sa = line.signed_distance(anchor)
    if abs(sa) <= tol:
        raise AnchorOnLine(f"anchor {tuple(anchor)} lies on the fold line")
    sp = line.signed_distance(p)
    if abs(sp) <= tol or (sp > 0) == (sa > 0):
        return Point(float(p[0]), float(p[1]))
    return reflect(p, line)


def fold_many(pts: np.ndarray, line: Line, anchor, tol: float = TOL) -> np.ndarray:
    sa = line.signed_distance(anchor)
    if abs(sa) <= tol:
        raise AnchorOnLine(f"anchor {tuple(anchor)} lies on the fold line")
    sp = line.signed_distances(pts)
    flip = (np.abs(sp) > tol) & ((sp > 0) != (sa > 0))
    out = pts.copy()
    out[flip, 0] -= 2.0 * sp[flip] * line.nx
    out[flip, 1] -= 2.0 * sp[flip] * line.ny
    return out


def _signed_area(vs: Sequence[Point]) -> float:
    s = 0.0
    for i in range(len(vs)):
        x0, y0 = vs[i]
        x1, y1 = vs[(i + 1) % len(vs)]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


@dataclass(frozen=True)
class PolygonDomain:
    """Convex polygon with vertices stored counterclockwise."""

    vertices: tuple

    def __post_init__(self):
        vs = [as_point(v) for v in self.vertices]
        if len(vs) < 3:
            raise DegenerateDomain("a polygon needs at least 3 vertices")
        area = _signed_area(vs)
        if area < 0:
            vs = vs[::-1]
            area = -area
        scale = max(max(abs(v.x), abs(v.y)) for v in vs) or 1.0
        if area <= TOL * scale * scale:
            raise DegenerateDomain(f"polygon area {area:.3e} is not positive")
        n = len(vs)
        for i in range(n):
            a, b, c = vs[i], vs[(i + 1) % n], vs[(i + 2) % n]
            cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x)
            if cross < -TOL * scale * scale:
                raise DegenerateDomain("polygon is not convex")
        object.__setattr__(self, "vertices", tuple(vs))

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return min(xs), max(xs), min(ys), max(ys)

    def as_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)

    def _edges(self):
        v = self.as_array()
        w = np.roll(v, -1, axis=0)
        e = w - v
        length = np.hypot(e[:, 0], e[:, 1])
        return v, e, length

    def edge_distances(self, pts: np.ndarray) -> np.ndarray:
        """Signed distance of each point to each edge's supporting line.

        Positive values are inside. Shape ``(n_points, n_edges)``.
        """
        v, e, length = self._edges()
        rel_x = pts[:, 0, None] - v[None, :, 0]
        rel_y = pts[:, 1, None] - v[None, :, 1]
        return (e[None, :, 0] * rel_y - e[None, :, 1] * rel_x) / length[None, :]

    def contains_many(self, pts: np.ndarray, tol: float = TOL) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.all(self.edge_distances(pts) >= -tol, axis=1)

    def contains(self, p, tol: float = TOL) -> bool:
        return bool(self.contains_many(np.array([[p[0], p[1]]], dtype=float), tol)[0])

    def distance_outside(self, pts: np.ndarray) -> np.ndarray:
        """Euclidean distance from each point to the polygon (0 inside)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        inside = np.all(self.edge_distances(pts) >= 0.0, axis=1)
        v, e, length = self._edges()
        rel = pts[:, None, :] - v[None, :, :]
        s = np.clip(np.einsum("pek,ek->pe", rel, e) / (length**2)[None, :], 0.0, 1.0)
        closest = v[None, :, :] + s[..., None] * e[None, :, :]
        d = np.hypot(*(pts[:, None, :] - closest).transpose(2, 0, 1)).min(axis=1)
        d[inside] = 0.0
        return d

    def project(self, p) -> Point:
        """Nearest point of the polygon to ``p``."""
        arr = np.array([[p[0], p[1]]], dtype=float)
        if self.contains_many(arr, 0.0)[0]:
            return Point(float(p[0]), float(p[1]))
        v, e, length = self._edges()
        rel = arr[0] - v
        s = np.clip((rel * e).sum(axis=1) / length**2, 0.0, 1.0)
        closest = v + s[:, None] * e
        i = int(np.argmin(np.hypot(*(arr[0] - closest).T)))
        return Point(float(closest[i, 0]), float(closest[i, 1]))

    def clip(self, line: Line, keep_side) -> "PolygonDomain | None":
        """Intersection with the closed half-plane of ``line`` containing ``keep_side``.

        Returns ``None`` when the intersection has no interior.
        """
        sign = 1.0 if line.signed_distance(keep_side) >= 0 else -1.0
        out = []
        vs = self.vertices
        n = len(vs)
        for i in range(n):
            p, q = vs[i], vs[(i + 1) % n]
            dp = sign * line.signed_distance(p)
            dq = sign * line.signed_distance(q)
            if dp >= 0:
                out.append(p)
            if (dp > 0 > dq) or (dp < 0 < dq):
                s = dp / (dp - dq)
                out.append(Point(p.x + s * (q.x - p.x), p.y + s * (q.y - p.y)))
        out = _dedupe(out)
        if len(out) < 3:
            return None
        try:
            return PolygonDomain(tuple(out))
        except DegenerateDomain:
            return None

    def sample(self, n: int, rng_seed: int = 0) -> list[Point]:
        return [Point(float(x), float(y)) for x, y in self.sample_array(n, rng_seed)]

    def sample_array(self, n: int, rng_seed: int = 0) -> np.ndarray:
        """``n`` points drawn uniformly by rejection from the bounding box."""
        if n < 1:
            raise InvalidParameters("sample size must be at least 1")
        if self.area <= 0:
            raise DegenerateDomain("cannot sample a polygon with zero area")
        rng = np.random.default_rng(rng_seed)
        x0, x1, y0, y1 = self.bbox
        ratio = self.area / ((x1 - x0) * (y1 - y0))
        chunks, got = [], 0
        while got < n:
            m = max(16, int(1.3 * (n - got) / ratio) + 8)
            cand = np.column_stack([rng.uniform(x0, x1, m), rng.uniform(y0, y1, m)])
            cand = cand[self.contains_many(cand, 0.0)]
            chunks.append(cand)
            got += len(cand)
        return np.concatenate(chunks)[:n]


def _dedupe(pts: Iterable[Point]) -> list[Point]:
    out: list[Point] = []
    for p in pts:
        if not out or math.hypot(p.x - out[-1].x, p.y - out[-1].y) > TOL:
            out.append(p)
    if len(out) > 1 and math.hypot(out[0].x - out[-1].x, out[0].y - out[-1].y) <= TOL:
        out.pop()
    return out


def contains(domain: PolygonDomain, p, tol: float = TOL) -> bool:
    return domain.contains(p, tol)


def sample(domain: PolygonDomain, n: int, rng_seed: int = 0) -> list[Point]:
    return domain.sample(n, rng_seed)


TRIANGLE = PolygonDomain(((0.0, 0.0), (2.0, 0.0), (1.0, 1.0)))
SQUARE = PolygonDomain(((0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)))
CRITICAL_X1 = Line.vertical(1.0)
ORIGIN = Point(0.0, 0.0)
