"""Orbit simulation, Lyapunov exponents, occupancy-grid attractor census,
mixing probes and the Lambda^8 versus Psi residual study.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from . import _kernels as K
from .conjugacy import interior_seeds, named_domain
from .exceptions import DegenerateOrbit, EmptyAttractor, InvalidParameters, OutOfDomain
from .geometry import TRIANGLE, Point, PolygonDomain
from .maps import LambdaMap, PiecewiseMap, TentMap, TentProduct
from .regions import P, P1, P2, gamma0, in_region
from .validation import check_count, check_points

log = logging.getLogger(__name__)

CRITICAL_NUDGE = 1e-13
STRUCT8 = np.ones((3, 3), dtype=bool)
_CHUNK = 65_536


# ---------------------------------------------------------------- orbits


@dataclass(frozen=True)
class OrbitSpec:
    map: PiecewiseMap
    x0: object
    burn_in: int = 0
    length: int = 1000

    def __post_init__(self):
        if self.burn_in < 0:
            raise InvalidParameters("burn_in must be non-negative")
        if self.length < 1:
            raise InvalidParameters("length must be at least 1")

    def start(self) -> tuple[float, float]:
        if self.map.dim == 1:
            return float(self.x0), 0.0
        x, y = float(self.x0[0]), float(self.x0[1])
        if not self.map.domain.contains((x, y), 1e-12):
            raise OutOfDomain(f"start {(x, y)} is outside the map's domain")
        return x, y


def _check_snap(worst: float):
    if worst > K.SNAP_TOL:
        raise OutOfDomain(f"orbit left the domain by {worst:.3e}")


def run_orbit(spec: OrbitSpec) -> Iterator:
    """Lazily yield the orbit after burn-in: floats for tent maps, Points otherwise."""
    m, prm = spec.map, spec.map.kernel_params
    x, y = spec.start()
    if spec.burn_in:
        out, worst = K.orbit(m.kind, prm, x, y, spec.burn_in, 1)
        _check_snap(worst)
        x, y = out[-1]
        remaining = spec.length - 1
        yield float(x) if m.dim == 1 else Point(float(x), float(y))
    else:
        remaining = spec.length
    while remaining > 0:
        n = min(remaining, _CHUNK)
        out, worst = K.orbit(m.kind, prm, x, y, 0, n)
        _check_snap(worst)
        for px, py in out:
            yield float(px) if m.dim == 1 else Point(float(px), float(py))
        x, y = out[-1]
        remaining -= n


def orbit_array(spec: OrbitSpec) -> np.ndarray:
    """The whole orbit after burn-in as an ``(length, 2)`` array."""
    x, y = spec.start()
    out, worst = K.orbit(spec.map.kind, spec.map.kernel_params, x, y, spec.burn_in, spec.length)
    _check_snap(worst)
    return out


# ---------------------------------------------------------------- Lyapunov


@dataclass(frozen=True)
class LyapunovEstimate:
    lambda1: float
    lambda2: float
    critical_hits: int = 0


def lyapunov(spec: OrbitSpec) -> LyapunovEstimate:
    """QR accumulation of branch differentials along one orbit."""
    if spec.length < 1000:
        raise InvalidParameters("lyapunov needs length >= 1000")
    x, y = spec.start()
    l1, l2, hits, worst = K.lyapunov(spec.map.kind, spec.map.kernel_params, x, y,
                                     spec.burn_in, spec.length, CRITICAL_NUDGE)
    _check_snap(worst)
    if hits:
        log.info("orbit touched a critical line %d times; nudged by %g", hits, CRITICAL_NUDGE)
    if hits > spec.length // 100:
        raise DegenerateOrbit(f"orbit sits on critical lines ({hits} hits); re-seed")
    if spec.map.dim == 1:
        return LyapunovEstimate(float(l1), float(l1), int(hits))
    hi, lo = max(l1, l2), min(l1, l2)
    return LyapunovEstimate(float(hi), float(lo), int(hits))


class LyapunovEstimator(BaseEstimator):
    """Per-seed Lyapunov exponents.

    ``fit(X)`` runs one orbit from every row of ``X`` and stores
    ``exponents_`` (n, 2) plus their means ``lambda1_`` and ``lambda2_``.
    """

    def __init__(self, map=None, length: int = 100_000, burn_in: int = 0):
        self.map = map
        self.length = length
        self.burn_in = burn_in

    def fit(self, X, y=None):
        if self.map is None:
            raise InvalidParameters("LyapunovEstimator needs a map")
        X = check_points(X)
        est = [lyapunov(OrbitSpec(self.map, row if self.map.dim == 2 else row[0], self.burn_in, self.length))
               for row in X]
        self.exponents_ = np.array([[e.lambda1, e.lambda2] for e in est])
        self.critical_hits_ = np.array([e.critical_hits for e in est])
        self.lambda1_, self.lambda2_ = (float(v) for v in self.exponents_.mean(axis=0))
        return self


# ---------------------------------------------------------------- census


@dataclass
class OccupancyGrid:
    """Boolean cells over an axis-aligned box, indexed ``cells[iy, ix]``."""

    bounds: tuple
    resolution: int
    cells: np.ndarray

    def __post_init__(self):
        if self.resolution < 16:
            raise InvalidParameters("resolution must be at least 16")
        x0, x1, y0, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise InvalidParameters("grid bounds must have positive extent")

    @classmethod
    def empty(cls, bounds, resolution) -> "OccupancyGrid":
        return cls(tuple(float(v) for v in bounds), int(resolution), np.zeros((resolution, resolution), bool))

    @property
    def n_occupied(self) -> int:
        return int(self.cells.sum())

    def index(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x0, x1, y0, y1 = self.bounds
        r = self.resolution
        ix = np.clip(((pts[:, 0] - x0) * (r / (x1 - x0))).astype(np.int64), 0, r - 1)
        iy = np.clip(((pts[:, 1] - y0) * (r / (y1 - y0))).astype(np.int64), 0, r - 1)
        return iy, ix

    def inside_box(self, pts: np.ndarray) -> np.ndarray:
        x0, x1, y0, y1 = self.bounds
        return (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)

    def mark(self, pts: np.ndarray) -> "OccupancyGrid":
        pts = np.atleast_2d(pts)
        pts = pts[self.inside_box(pts)]
        iy, ix = self.index(pts)
        self.cells[iy, ix] = True
        return self

    def dilated(self, cells: int = 1) -> np.ndarray:
        return ndimage.binary_dilation(self.cells, STRUCT8, iterations=cells)

    def cell_centers(self) -> np.ndarray:
        x0, x1, y0, y1 = self.bounds
        iy, ix = np.nonzero(self.cells)
        w, h = (x1 - x0) / self.resolution, (y1 - y0) / self.resolution
        return np.column_stack([x0 + (ix + 0.5) * w, y0 + (iy + 0.5) * h])

    def count_pieces(self) -> int:
        return int(ndimage.label(self.cells, STRUCT8)[1])


@dataclass
class Attractor:
    occupancy: OccupancyGrid
    pieces: int
    seed_count: int
    seeds: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"pieces": self.pieces, "seed_count": self.seed_count, "seeds": list(self.seeds),
                "cells": self.occupancy.n_occupied}


@dataclass
class AttractorCensus:
    attractors: list
    distinct_count: int
    bounds: tuple
    resolution: int
    labels: np.ndarray
    seeds: np.ndarray
    power: int = 1

    @property
    def pieces_total(self) -> int:
        return sum(a.pieces for a in self.attractors)

    def to_dict(self) -> dict:
        return {
            "distinct_count": self.distinct_count,
            "pieces_total": self.pieces_total,
            "bounds": list(self.bounds),
            "resolution": self.resolution,
            "power": self.power,
            "attractors": [a.to_dict() for a in self.attractors],
        }


def default_seeds(m: PiecewiseMap, n: int, rng_seed: int = 0) -> np.ndarray:
    """Uniform starting points in the interior of the map's domain."""
    rng = np.random.default_rng(rng_seed)
    if isinstance(m, TentMap):
        return np.column_stack([rng.uniform(0.0, 2.0, n), np.zeros(n)])
    if isinstance(m, TentProduct):
        return rng.uniform(0.0, 2.0, (n, 2))
    if m.domain is TRIANGLE:
        return interior_seeds(n, rng_seed)
    return m.domain.sample_array(n, rng_seed)


def _cluster(grids: np.ndarray) -> tuple[int, np.ndarray]:
    """Connected components of the 'dilated grids overlap' relation."""
    m = grids.shape[0]
    dil = np.stack([ndimage.binary_dilation(g, STRUCT8) for g in grids]).reshape(m, -1)
    flat = csr_matrix(dil.astype(np.float32))
    overlap = (flat @ flat.T).toarray() > 0
    return connected_components(csr_matrix(overlap), directed=False)


def census_from_grids(grids: np.ndarray, bounds, resolution: int, seeds: np.ndarray, power: int = 1) -> AttractorCensus:
    n_clusters, raw = _cluster(grids)
    # relabel clusters in order of their first seed for determinism
    order = {}
    for lab in raw:
        order.setdefault(int(lab), len(order))
    labels = np.array([order[int(lab)] for lab in raw])
    attractors = []
    for c in range(n_clusters):
        members = np.flatnonzero(labels == c)
        union = grids[members].any(axis=0)
        occ = OccupancyGrid(tuple(bounds), resolution, union)
        attractors.append(Attractor(occ, occ.count_pieces(), len(members), members.tolist()))
    return AttractorCensus(attractors, n_clusters, tuple(bounds), resolution, labels, seeds, power)


def orbit_bounds(m: PiecewiseMap, seeds: np.ndarray, orbit_len: int, pad: float = 1e-3) -> tuple:
    bb = K.bbox(m.kind, m.kernel_params, seeds, orbit_len)
    x0, x1, y0, y1 = bb[:, 0].min(), bb[:, 1].max(), bb[:, 2].min(), bb[:, 3].max()
    px = (x1 - x0) * pad + 1e-12
    py = (y1 - y0) * pad + 1e-12
    return (float(x0 - px), float(x1 + px), float(y0 - py), float(y1 + py))


def attractor_census(m: PiecewiseMap, n_seeds: int = 64, orbit_len: int = 1_000_000, burn_in: int = 10_000,
                     resolution: int = 512, rng_seed: int = 0, power: int = 1,
                     seeds: Optional[np.ndarray] = None, bounds: Optional[tuple] = None) -> AttractorCensus:
    """Cluster seeds by overlap of their post-burn-in occupancy grids.

    The grid box is fitted to the union of the orbits (one extra pass) unless
    ``bounds`` is given. ``power > 1`` records every ``power``-th iterate, which
    resolves the attractors of the power map.
    """
    if seeds is None:
        check_count("n_seeds", n_seeds, 8)
        seeds = default_seeds(m, n_seeds, rng_seed)
    else:
        seeds = check_points(seeds)
    check_count("orbit_len", orbit_len, 1)
    check_count("resolution", resolution, 16)
    check_count("power", power, 1)
    prm = m.kernel_params
    start, worst = K.advance(m.kind, prm, np.ascontiguousarray(seeds, dtype=float), int(burn_in))
    _check_snap(float(worst.max()) if len(worst) else 0.0)
    if bounds is None:
        bounds = orbit_bounds(m, start, orbit_len)
    x0, x1, y0, y1 = bounds
    grids = K.occupancy(m.kind, prm, start, int(orbit_len), int(resolution), x0, x1, y0, y1, int(power))
    return census_from_grids(grids, bounds, int(resolution), seeds, int(power))


class AttractorDetector(ClusterMixin, BaseEstimator):
    """Seeds as samples, coexisting attractors as clusters.

    ``fit(X)`` runs the census from the rows of ``X`` (or from ``n_seeds``
    random interior seeds when ``X`` is None) and exposes ``labels_``,
    ``n_attractors_`` and ``census_``.
    """

    def __init__(self, map=None, n_seeds: int = 64, orbit_len: int = 1_000_000, burn_in: int = 10_000,
                 resolution: int = 512, power: int = 1, rng_seed: int = 0):
        self.map = map
        self.n_seeds = n_seeds
        self.orbit_len = orbit_len
        self.burn_in = burn_in
        self.resolution = resolution
        self.power = power
        self.rng_seed = rng_seed

    def fit(self, X=None, y=None):
        if self.map is None:
            raise InvalidParameters("AttractorDetector needs a map")
        self.census_ = attractor_census(self.map, self.n_seeds, self.orbit_len, self.burn_in, self.resolution,
                                        self.rng_seed, self.power, seeds=X)
        self.labels_ = self.census_.labels
        self.n_attractors_ = self.census_.distinct_count
        return self

    def predict(self, X):
        """Attractor label of the cell each point's orbit lands in (-1 if none)."""
        check_is_fitted(self, "census_")
        X = check_points(X)
        m = self.map
        start, _ = K.advance(m.kind, m.kernel_params, X, int(self.burn_in))
        grids = K.occupancy(m.kind, m.kernel_params, start, min(int(self.orbit_len), 10_000),
                            self.census_.resolution, *self.census_.bounds, int(self.power))
        out = np.full(len(X), -1)
        for i, g in enumerate(grids):
            for lab, att in enumerate(self.census_.attractors):
                if (g & att.occupancy.dilated()).any():
                    out[i] = lab
                    break
        return out


# ---------------------------------------------------------------- mixing


def mixing_probe(m: PiecewiseMap, attractor_grid: OccupancyGrid, disc_center, disc_radius: float, steps: int,
                 n_samples: int = 1000, rng_seed: int = 0) -> float:
    """Fraction of the attractor's cells hit by iterates 0..steps of a small disc."""
    if attractor_grid.n_occupied == 0:
        raise EmptyAttractor("the attractor grid has no occupied cells")
    if steps < 0 or disc_radius <= 0:
        raise InvalidParameters("steps must be >= 0 and the radius positive")
    rng = np.random.default_rng(rng_seed)
    r = disc_radius * np.sqrt(rng.uniform(0.0, 1.0, n_samples))
    th = rng.uniform(0.0, 2.0 * math.pi, n_samples)
    pts = np.column_stack([disc_center[0] + r * np.cos(th), disc_center[1] + r * np.sin(th)])
    hit = OccupancyGrid.empty(attractor_grid.bounds, attractor_grid.resolution)
    hit.mark(pts)
    for _ in range(steps):
        pts = m.eval_many(pts, 1)
        hit.mark(pts)
    covered = (hit.cells & attractor_grid.cells).sum()
    return float(covered / attractor_grid.n_occupied)


def full_grid(bounds, resolution: int) -> OccupancyGrid:
    g = OccupancyGrid.empty(bounds, resolution)
    g.cells[:] = True
    return g


# ---------------------------------------------------------------- Lambda^8 study


def lambda_psi_residual(t: float, n_samples: int = 1000, rng_seed: int = 0) -> list[dict]:
    """Compare eight steps of Lambda_t with one step of Psi on gamma0(t).

    One record per candidate domain; domains undefined at these parameters
    are reported with ``defined: False``.
    """
    a, b = gamma0(t)
    lam = LambdaMap(t)
    psi_prm = np.array([a, b])
    candidates = [("T", TRIANGLE)]
    for name, region in (("RectP1", P1), ("RectP2", P2), ("Delta", P), ("Pi", P)):
        dom = None
        if in_region(region, a, b):
            dom = named_domain(name, (a, b)).polygon
        candidates.append((name, dom))
    out = []
    for name, dom in candidates:
        if dom is None:
            out.append({"domain": name, "defined": False, "sup": None, "mean": None, "n": 0, "vertices": None})
            continue
        pts = dom.sample_array(n_samples, rng_seed)
        lhs = lam.eval_many(pts, 8)
        rhs = K.eval_many(K.PSI, psi_prm, pts, 1)
        err = np.hypot(*(lhs - rhs).T)
        out.append({"domain": name, "defined": True, "sup": float(err.max()), "mean": float(err.mean()),
                    "n": int(len(err)), "vertices": [list(v) for v in dom.vertices]})
    return out
