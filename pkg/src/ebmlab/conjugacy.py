"""Fixed points, named invariant domains, affine charts and numerical
checks of the conjugacies between powers of Psi and simpler maps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _kernels as K
from .exceptions import InvalidParameters, RegionMismatch, SingularChange
from .geometry import TRIANGLE, Point, PolygonDomain
from .maps import BranchId, Params, as_params, psi_branch_formula, psi_eval_many
from .regions import P, P1, P2, P3, RegionId, in_region
from .renorm import gamma_coeff
from .validation import check_points

SINGULAR_TOL = 1e-14
BOUNDARY_SKIP = 1e-9

DOMAIN_NAMES = ("R1", "RectP1", "RectP2", "Delta", "Pi", "DeltaTilde", "Delta0", "Pi0")
_REQUIRED = {
    "R1": P, "RectP1": P1, "RectP2": P2, "Delta": P, "Pi": P,
    "DeltaTilde": P3, "Delta0": P3, "Pi0": P3,
}
CENTERED = frozenset({"Delta", "Pi", "DeltaTilde", "Delta0", "Pi0"})


# ---------------------------------------------------------------- fixed point


@dataclass(frozen=True)
class FixedPointData:
    p: Point
    x2: float
    d: float
    y2: Optional[float] = None
    chart: str = "OmegaP1"


def fixed_point(a: float, b: float) -> Point:
    den = 1.0 + a * a
    return Point((a * b + 2.0 * a * a - a * a * b) / den, (a * b - 2.0 * a + a * a * b) / den)


def psi_fixed_point(prm, chart: str = "OmegaP1") -> FixedPointData:
    """Fixed point plus the auxiliary constants of the chosen square chart."""
    a, b = as_params(prm)
    p = fixed_point(a, b)
    if chart == "OmegaP1":
        return FixedPointData(p, 2.0 * a / (1.0 + a), (2.0 * a + b - 2.0) / a, None, chart)
    if chart == "TauP2":
        x2 = a * b / (1.0 + a)
        return FixedPointData(p, x2, (a * b - 1.0) / a, x2, chart)
    raise InvalidParameters(f"unknown chart {chart!r}")


# ---------------------------------------------------------------- named points


def _branch_t1plus_inverse(a, b, u, v):
    return (v / a + 2.0 - b, b - u / a)


def named_points(a: float, b: float) -> dict:
    """Labeled construction points in the original frame."""
    a2, a3 = a * a, a**3
    pts = {
        "C": (2.0 - a - b + a * b, a * (b - 1.0)),
        "D": (1.0, a * (b - 1.0)),
        "E": (1.0, a * b - 1.0),
        "F": (0.5 * (2.0 - b + a * b), 0.5 * (-2.0 + b + a * b)),
        "C1": (a * (a + b - a * b), a2 * (b - 1.0)),
        "D1": (a * (a + b - a * b), a * (b - 1.0)),
        "E1": (a * (1.0 + b - a * b), a * (b - 1.0)),
        "F1": (0.5 * a * (2.0 + b - a * b), 0.5 * a * (-2.0 + b + a * b)),
        "F2": (0.5 * a * (2.0 * a + 2.0 * b - a * b - a2 * b), 0.5 * a * (-4.0 + 2.0 * a + 2.0 * b + a * b - a2 * b)),
        "F3": (0.5 * a * (4.0 * a - 2.0 * a2 + 2.0 * b - 2.0 * a * b - a2 * b + a3 * b),
               0.5 * a * (-4.0 + 2.0 * a2 + 2.0 * b + 2.0 * a * b - a2 * b - a3 * b)),
        "G1": (a * (-1.0 + 2.0 * a + b - a2 * b), a * (b - 1.0)),
        "K": (0.5 * (2.0 - 2.0 * a + 2.0 * a2 - b + 2.0 * a * b - a3 * b),
              0.5 * (-2.0 - 2.0 * a + b + 2.0 * a2 + 2.0 * a * b - a3 * b)),
        "K1": (0.5 * a * (2.0 + 2.0 * a - 2.0 * a2 + b - 2.0 * a * b + a3 * b),
               0.5 * a * (-2.0 - 2.0 * a + b + 2.0 * a2 + 2.0 * a * b - a3 * b)),
        "D2": (a * (a + b - a * b), a * (-2.0 + a2 + b + a * b - a2 * b)),
        "D3": (a * (2.0 * a - a3 + b - a * b - a2 * b + a3 * b), a * (-2.0 + a2 + b + a * b - a2 * b)),
        "N": (1.0, a * (-2.0 + a2 + b + a * b - a2 * b)),
        "N1": (a * (2.0 * a + b - a * b - a2 * b - a3 + a3 * b), a * (b - 1.0)),
    }
    for name in ("F", "K", "D", "N"):
        pts[name + "-1"] = _branch_t1plus_inverse(a, b, *pts[name])
    return {k: Point(*v) for k, v in pts.items()}


def centered_points(a: float, b: float) -> dict:
    """Labeled points in the frame centred at the fixed point."""
    g = gamma_coeff(a, b)
    a2, a4 = a * a, a**4
    pts = {
        "P": (0.0, 0.0), "P'": (-2.0, 0.0), "Q": (-1.0, 1.0), "M": (-1.0, 0.0), "H1": (-1.0, -1.0),
        "H": (-1.0 / a, 1.0 / a), "K": (-1.0, 1.0 / a),
        "Htilde": (-g / (2.0 * a2), g / (2.0 * a2)), "Ktilde": (-1.0, g / a2 - 1.0),
        "Htilde4": (-a2 * g / 2.0, a2 * g / 2.0), "Ktilde4": (-a4, a2 * g - a4), "M4": (-a4, 0.0),
        "Htilde1": (-g / (2.0 * a), -g / (2.0 * a)), "J": (-1.0, 1.0 - g / a),
        "J1": (g - a, -a), "Htilde2": (g / 2.0, -g / 2.0),
    }
    return {k: Point(*v) for k, v in pts.items()}


_CENTERED_VERTS = {
    "Delta": ("P", "P'", "Q"),
    "Pi": ("P", "P'", "H1"),
    "DeltaTilde": ("P", "Htilde4", "Ktilde4", "M4"),
    "Delta0": ("P", "Htilde", "Ktilde", "M"),
    "Pi0": ("P", "Htilde1", "J", "M"),
}
_ORIGINAL_VERTS = {
    "R1": ("C1", "D1", "E1", "F1"),
    "RectP1": ("F1", "F2", "F3", "K1"),
    "RectP2": ("D1", "D2", "D3", "N1"),
}


@dataclass(frozen=True)
class NamedDomain:
    name: str
    params: Params
    polygon: PolygonDomain
    coordinate_frame: str
    centered_polygon: Optional[PolygonDomain] = None
    points: dict = field(default_factory=dict, compare=False)
    centered: dict = field(default_factory=dict, compare=False)


def _require(region: RegionId, a: float, b: float, what: str):
    if not in_region(region, a, b):
        raise RegionMismatch(f"{what} needs (a, b) in {region}; ({a}, {b}) is not")


def named_domain(name: str, prm) -> NamedDomain:
    if name not in DOMAIN_NAMES:
        raise InvalidParameters(f"unknown domain {name!r}; choose from {DOMAIN_NAMES}")
    prm = as_params(prm)
    a, b = prm
    _require(_REQUIRED[name], a, b, name)
    pts = named_points(a, b)
    if name in CENTERED:
        cpts = centered_points(a, b)
        cpoly = PolygonDomain(tuple(cpts[k] for k in _CENTERED_VERTS[name]))
        phi = AffineChart("PhiCentered", a, b).fit()
        poly = PolygonDomain(tuple(map(tuple, phi.inverse_transform(cpoly.as_array()))))
        return NamedDomain(name, prm, poly, "centered", cpoly, pts, cpts)
    poly = PolygonDomain(tuple(pts[k] for k in _ORIGINAL_VERTS[name]))
    return NamedDomain(name, prm, poly, "original", None, pts, {})


# ---------------------------------------------------------------- charts

CHART_KINDS = ("OmegaP1", "TauP2", "PhiCentered", "PhiTildeDelta", "PhiHatPi")


class AffineChart(TransformerMixin, BaseEstimator):
    """Affine change of coordinates ``X = M x + c`` built from (a, b).

    ``fit`` precomputes the forward and inverse affine pairs; ``transform``
    and ``inverse_transform`` apply them to ``(n, 2)`` arrays.
    """

    def __init__(self, kind: str = "PhiCentered", a: float = 1.2, b: float = 1.2):
        self.kind = kind
        self.a = a
        self.b = b

    def fit(self, X=None, y=None):
        if self.kind not in CHART_KINDS:
            raise InvalidParameters(f"unknown chart {self.kind!r}")
        a, b = float(self.a), float(self.b)
        if self.kind == "OmegaP1":
            x2, d = 2.0 * a / (1.0 + a), (2.0 * a + b - 2.0) / a
            dx, dy = x2 - (2.0 - b), d - x2
            _nonsingular(dx, dy)
            m = np.array([[-1.0 / dx, 1.0 / dx], [1.0 / dy, 1.0 / dy]])
            c = np.array([x2 / dx, -x2 / dy])
        elif self.kind == "TauP2":
            x2 = a * b / (1.0 + a)
            d = (a * b - 1.0) / a
            dx, dy = 1.0 - x2, x2 - d
            _nonsingular(dx, dy)
            m = np.array([[1.0 / dx, 0.0], [0.0, -1.0 / dy]])
            c = np.array([-x2 / dx, x2 / dy])
        else:
            p = fixed_point(a, b)
            s = p.x - 1.0
            _nonsingular(s)
            flip = {"PhiCentered": (1.0, 1.0), "PhiTildeDelta": (-1.0, 1.0), "PhiHatPi": (-1.0, -1.0)}[self.kind]
            m = np.diag(flip) / s
            c = -m @ np.array([p.x, p.y])
        self.matrix_ = m
        self.offset_ = c
        self.inv_matrix_ = np.linalg.inv(m)
        self.inv_offset_ = -self.inv_matrix_ @ c
        return self

    def transform(self, X):
        check_is_fitted(self, "matrix_")
        X = check_points(X)
        return X @ self.matrix_.T + self.offset_

    def inverse_transform(self, X):
        check_is_fitted(self, "matrix_")
        X = check_points(X)
        return X @ self.inv_matrix_.T + self.inv_offset_


def _nonsingular(*dens):
    for v in dens:
        if abs(v) < SINGULAR_TOL:
            raise SingularChange("a chart denominator vanishes")


def make_chart(kind: str, prm) -> AffineChart:
    a, b = as_params(prm)
    return AffineChart(kind, a, b).fit()


def change_coords(c: AffineChart, p, direction: str = "forward") -> Point:
    arr = np.array([[float(p[0]), float(p[1])]])
    if direction == "forward":
        out = c.transform(arr)
    elif direction == "inverse":
        out = c.inverse_transform(arr)
    else:
        raise InvalidParameters("direction must be 'forward' or 'inverse'")
    return Point(float(out[0, 0]), float(out[0, 1]))


# ---------------------------------------------------------------- residuals

RESIDUAL_KINDS = {
    "P1_square": ("RectP1", "OmegaP1", P1),
    "P2_square": ("RectP2", "TauP2", P2),
    "Delta_quad": ("DeltaTilde", "PhiTildeDelta", P3),
    "Pi_quad": ("Pi", "PhiHatPi", P3),
}


def _gamma_product(mu: float, pts: np.ndarray) -> np.ndarray:
    return np.where(pts <= 1.0, mu * pts, mu * (2.0 - pts))


@dataclass(frozen=True)
class Residual:
    sup: float
    mean: float
    n_used: int

    def __iter__(self):
        yield self.sup
        yield self.mean


def conjugacy_residual(kind: str, prm, n_samples: int = 10_000, rng_seed: int = 0) -> Residual:
    """Sup and mean of ``|chart(Psi^k p) - G(chart p)|`` over sampled ``p``.

    ``G`` is the tent product with slope a^2 (square kinds, k = 2) or the
    renormalized baker map (quad kinds, k = 4).
    """
    if kind not in RESIDUAL_KINDS:
        raise InvalidParameters(f"unknown residual kind {kind!r}")
    if n_samples < 1:
        raise InvalidParameters("n_samples must be at least 1")
    dom_name, chart_kind, region = RESIDUAL_KINDS[kind]
    a, b = as_params(prm)
    _require(region, a, b, kind)
    dom = named_domain(dom_name, (a, b))
    chart = AffineChart(chart_kind, a, b).fit()
    pts = np.vstack([dom.polygon.as_array(), dom.polygon.sample_array(n_samples, rng_seed)])
    X = chart.transform(pts)
    if kind.endswith("square"):
        lhs = chart.transform(psi_eval_many(a, b, pts, 2))
        rhs = _gamma_product(a * a, X)
    else:
        g = gamma_coeff(a, b)
        a_new = a**4
        b_new = g / a**2 if kind == "Delta_quad" else g / a
        if kind == "Delta_quad":
            # only chart images inside the image of the triangle are compared
            target = PolygonDomain(((0.0, 0.0), (a_new, 0.0), (a_new, a_new * (b_new - 1.0)),
                                    (a_new * b_new / 2.0, a_new * b_new / 2.0)))
            keep = target.contains_many(X, 1e-12)
            pts, X = pts[keep], X[keep]
        lhs = chart.transform(psi_eval_many(a, b, pts, 4))
        rhs = psi_eval_many(a_new, b_new, X, 1)
    err = np.hypot(*(lhs - rhs).T)
    return Residual(float(err.max()), float(err.mean()), int(len(err)))


def invariance_check(prm, domain: NamedDomain, power: int = 1, n_samples: int = 10_000, rng_seed: int = 0) -> float:
    """Largest distance by which ``Psi^power`` pushes sampled points out of the domain.

    Centered domains are measured in the centred frame they are defined in.
    """
    if power < 1:
        raise InvalidParameters("power must be at least 1")
    a, b = as_params(prm)
    pts = np.vstack([domain.polygon.as_array(), domain.polygon.sample_array(n_samples, rng_seed)])
    img = psi_eval_many(a, b, pts, power)
    if domain.centered_polygon is not None:
        phi = AffineChart("PhiCentered", a, b).fit()
        return float(domain.centered_polygon.distance_outside(phi.transform(img)).max())
    return float(domain.polygon.distance_outside(img).max())


def interior_seeds(n: int, rng_seed: int = 0, margin: float = BOUNDARY_SKIP) -> np.ndarray:
    """Uniform seeds in the triangle, skipping those within ``margin`` of its boundary."""
    out = []
    got = 0
    seed = rng_seed
    while got < n:
        cand = TRIANGLE.sample_array(max(n - got, 16), seed)
        cand = cand[TRIANGLE.edge_distances(cand).min(axis=1) > margin]
        out.append(cand)
        got += len(cand)
        seed += 7919
    return np.concatenate(out)[:n]


def capture_check(prm, target: NamedDomain, n_seeds: int = 1000, max_iters: int = 10_000, rng_seed: int = 0) -> float:
    """Fraction of interior seeds whose orbit enters ``target`` within ``max_iters``."""
    a, b = as_params(prm)
    seeds = interior_seeds(n_seeds, rng_seed)
    hits = K.first_entry(K.PSI, np.array([a, b]), seeds, int(max_iters), target.polygon.as_array())
    return float(np.mean(hits >= 0))


def homothety_residual(prm, name: str = "Delta0", n_samples: int = 1000, rng_seed: int = 0) -> float:
    """Max of ``|Psi^4(p) - P - a^4 (p - P)|`` over ``p`` in a pre-domain."""
    if name not in ("Delta0", "Pi0"):
        raise InvalidParameters("homothety holds on Delta0 or Pi0")
    a, b = as_params(prm)
    dom = named_domain(name, (a, b))
    pts = np.vstack([dom.polygon.as_array(), dom.polygon.sample_array(n_samples, rng_seed)])
    p = np.array(fixed_point(a, b))
    err = psi_eval_many(a, b, pts, 4) - p - a**4 * (pts - p)
    return float(np.hypot(*err.T).max())


def branch_disagreement(prm, n_points: int = 100, rng_seed: int = 0) -> float:
    """Largest gap between adjacent branch formulas on points built on the critical lines."""
    a, b = as_params(prm)
    rng = np.random.default_rng(rng_seed)
    f = psi_branch_formula
    gaps = []
    y = rng.uniform(0.0, b - 1.0, n_points)
    gaps.append(_gap(f(a, b, BranchId.T0minus, 1.0, y), f(a, b, BranchId.T1minus, 1.0, y)))
    y = rng.uniform(b - 1.0, 1.0, n_points)
    gaps.append(_gap(f(a, b, BranchId.T0plus, 1.0, y), f(a, b, BranchId.T1plus, 1.0, y)))
    x = rng.uniform(b / 2.0, 1.0, n_points)
    gaps.append(_gap(f(a, b, BranchId.T0minus, x, b - x), f(a, b, BranchId.T0plus, x, b - x)))
    x = rng.uniform(1.0, 1.0 + b / 2.0, n_points)
    y = x - (2.0 - b)
    gaps.append(_gap(f(a, b, BranchId.T1minus, x, y), f(a, b, BranchId.T1plus, x, y)))
    return float(max(gaps))


def _gap(p, q) -> float:
    return float(np.max(np.hypot(np.asarray(p[0]) - q[0], np.asarray(p[1]) - q[1])))
