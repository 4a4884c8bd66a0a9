"""Concrete piecewise-affine maps: tent maps, their product, the family
Lambda_t, the two-parameter baker family Psi_{a,b} and generic expanding
baker maps assembled from folds and an expanding linear part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import _kernels as K
from .exceptions import BadFold, ImageEscapesDomain, InvalidParameters, OutOfDomain
from .geometry import (
    CRITICAL_X1,
    ORIGIN,
    SQUARE,
    TOL,
    TRIANGLE,
    Line,
    Point,
    PolygonDomain,
    as_point,
    fold,
)

SQRT2 = math.sqrt(2.0)


class BranchId(str, Enum):
    T0minus = "T0minus"
    T0plus = "T0plus"
    T1minus = "T1minus"
    T1plus = "T1plus"
    T0 = "T0"
    T1 = "T1"
    left = "left"
    right = "right"


_PSI_CODES = (BranchId.T0minus, BranchId.T0plus, BranchId.T1minus, BranchId.T1plus)


@dataclass(frozen=True)
class Params:
    """A parameter pair validated against 1 < a <= 2, 1 <= b <= 2, ab <= 2."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise InvalidParameters(f"non-finite parameters ({a}, {b})")
        if not (1.0 < a <= 2.0 + TOL and 1.0 - TOL <= b <= 2.0 + TOL and a * b <= 2.0 + 1e-12):
            raise InvalidParameters(f"(a, b) = ({a}, {b}) is outside the parameter set")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __iter__(self):
        yield self.a
        yield self.b


def as_params(prm) -> Params:
    if isinstance(prm, Params):
        return prm
    return Params(*prm)


def _check_unit(name, value, lo, hi):
    value = float(value)
    if not (math.isfinite(value) and lo <= value <= hi):
        raise InvalidParameters(f"{name}={value} outside [{lo}, {hi}]")
    return value


def _snap_triangle(p) -> Point:
    p = as_point(p)
    if TRIANGLE.contains(p, TOL):
        return p
    if TRIANGLE.contains(p, 1e3 * TOL) or _near(TRIANGLE, p):
        return TRIANGLE.project(p)
    raise OutOfDomain(f"{tuple(p)} is outside the triangle")


def _near(domain: PolygonDomain, p) -> bool:
    return float(domain.distance_outside(np.array([p]))[0]) <= TOL


# ---------------------------------------------------------------- scalar API


def tent_eval(mu: float, x: float) -> float:
    mu = _check_unit("mu", mu, 0.0, 2.0)
    x = float(x)
    if not (-TOL <= x <= 2.0 + TOL):
        raise OutOfDomain(f"x={x} outside [0, 2]")
    x = min(max(x, 0.0), 2.0)
    return mu * x if x <= 1.0 else mu * (2.0 - x)


def tent_product_eval(mu: float, p) -> Point:
    p = as_point(p)
    return Point(tent_eval(mu, p.x), tent_eval(mu, p.y))


def tent_interval(mu: float) -> tuple[float, float]:
    """The invariant interval ``[mu(2-mu), mu]``."""
    return mu * (2.0 - mu), mu


def lambda_branch(p) -> BranchId:
    p = _snap_triangle(p)
    return BranchId.T0 if p.x <= 1.0 else BranchId.T1


def lambda_eval(t: float, p) -> Point:
    t = _check_unit("t", t, 0.0, 1.0)
    p = _snap_triangle(p)
    return Point(*K._lambda(t, p.x, p.y))


def lambda_matrix(t: float, branch: BranchId = BranchId.T0) -> np.ndarray:
    if branch == BranchId.T0:
        return np.array([[t, t], [t, -t]])
    return np.array([[-t, t], [-t, -t]])


def psi_branch(prm, p) -> BranchId:
    a, b = as_params(prm)
    p = _snap_triangle(p)
    return _PSI_CODES[K.psi_branch_code(a, b, p.x, p.y)]


def psi_eval(prm, p) -> Point:
    a, b = as_params(prm)
    p = _snap_triangle(p)
    return Point(*K._psi(a, b, p.x, p.y))


def psi_differential(prm, branch: BranchId) -> np.ndarray:
    a = as_params(prm).a if not isinstance(prm, (int, float)) else float(prm)
    table = {
        BranchId.T0minus: [[a, 0.0], [0.0, a]],
        BranchId.T0plus: [[0.0, -a], [-a, 0.0]],
        BranchId.T1minus: [[-a, 0.0], [0.0, a]],
        BranchId.T1plus: [[0.0, -a], [a, 0.0]],
    }
    try:
        return np.array(table[BranchId(branch)])
    except KeyError:
        raise InvalidParameters(f"{branch} is not a branch of the baker family") from None


def psi_branch_formula(a: float, b: float, branch: BranchId, x: float, y: float) -> Point:
    """Evaluate one branch formula regardless of where ``(x, y)`` lies."""
    if branch == BranchId.T0minus:
        return Point(a * x, a * y)
    if branch == BranchId.T0plus:
        return Point(a * (b - y), a * (b - x))
    if branch == BranchId.T1minus:
        return Point(a * (2.0 - x), a * y)
    if branch == BranchId.T1plus:
        return Point(a * (b - y), a * (b - 2.0 + x))
    raise InvalidParameters(f"{branch} is not a branch of the baker family")


def psi_eval_many(a: float, b: float, pts: np.ndarray, power: int = 1) -> np.ndarray:
    """Vectorized iterate without validation; for trusted inner loops."""
    return K.eval_many(K.PSI, np.array([a, b], dtype=float), np.ascontiguousarray(pts, dtype=float), power)


# ---------------------------------------------------------------- map objects


class PiecewiseMap:
    """Common surface for every map family.

    Subclasses provide ``kind``, ``kernel_params`` and ``domain``.
    """

    kind: int
    domain: PolygonDomain
    dim: int = 2

    @property
    def kernel_params(self) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, p):
        raise NotImplementedError

    def branch(self, p) -> BranchId:
        raise NotImplementedError

    def jacobian(self, p) -> np.ndarray:
        p = as_point(p) if self.dim == 2 else Point(float(p), 0.0)
        m = K.differential(self.kind, self.kernel_params, p.x, p.y)
        return np.array(m).reshape(2, 2)

    def eval_many(self, pts, power: int = 1) -> np.ndarray:
        pts = np.ascontiguousarray(np.atleast_2d(pts), dtype=float)
        return K.eval_many(self.kind, self.kernel_params, pts, int(power))

    def iterate(self, p, n: int):
        for _ in range(n):
            p = self(p)
        return p

    def seed_box(self) -> tuple[float, float, float, float]:
        return self.domain.bbox


@dataclass(frozen=True)
class TentMap(PiecewiseMap):
    mu: float
    kind = K.TENT
    dim = 1

    def __post_init__(self):
        object.__setattr__(self, "mu", _check_unit("mu", self.mu, 0.0, 2.0))

    @property
    def domain(self):
        return PolygonDomain(((0.0, 0.0), (2.0, 0.0), (2.0, 1e-9), (0.0, 1e-9)))

    @property
    def kernel_params(self):
        return np.array([self.mu])

    def __call__(self, x):
        return tent_eval(self.mu, x)

    def branch(self, x):
        return BranchId.left if float(x) <= 1.0 else BranchId.right

    def seed_box(self):
        return 0.0, 2.0, 0.0, 0.0


@dataclass(frozen=True)
class TentProduct(PiecewiseMap):
    mu: float
    kind = K.GAMMA

    def __post_init__(self):
        object.__setattr__(self, "mu", _check_unit("mu", self.mu, 0.0, 2.0))

    @property
    def domain(self):
        return SQUARE

    @property
    def kernel_params(self):
        return np.array([self.mu])

    @property
    def invariant_square(self) -> PolygonDomain:
        lo, hi = tent_interval(self.mu)
        return PolygonDomain(((lo, lo), (hi, lo), (hi, hi), (lo, hi)))

    def __call__(self, p):
        return tent_product_eval(self.mu, p)

    def branch(self, p):
        p = as_point(p)
        return (BranchId.left if p.x <= 1.0 else BranchId.right,
                BranchId.left if p.y <= 1.0 else BranchId.right)


@dataclass(frozen=True)
class LambdaMap(PiecewiseMap):
    t: float
    kind = K.LAMBDA
    domain = TRIANGLE

    def __post_init__(self):
        object.__setattr__(self, "t", _check_unit("t", self.t, 0.0, 1.0))

    @property
    def expanding(self) -> bool:
        return self.t > 1.0 / SQRT2

    @property
    def kernel_params(self):
        return np.array([self.t])

    def __call__(self, p):
        return lambda_eval(self.t, p)

    def branch(self, p):
        return lambda_branch(p)

    def as_ebm(self) -> "GenericEBM":
        return GenericEBM(TRIANGLE, (CRITICAL_X1,), ORIGIN, lambda_matrix(self.t))


@dataclass(frozen=True)
class PsiMap(PiecewiseMap):
    a: float
    b: float
    kind = K.PSI
    domain = TRIANGLE

    def __post_init__(self):
        prm = Params(self.a, self.b)
        object.__setattr__(self, "a", prm.a)
        object.__setattr__(self, "b", prm.b)

    @property
    def params(self) -> Params:
        return Params(self.a, self.b)

    @property
    def kernel_params(self):
        return np.array([self.a, self.b])

    def __call__(self, p):
        return Point(*K._psi(self.a, self.b, *_snap_triangle(p)))

    def branch(self, p):
        return psi_branch((self.a, self.b), p)

    def as_ebm(self) -> "GenericEBM":
        return GenericEBM(TRIANGLE, (CRITICAL_X1, Line(1.0, 1.0, self.b)), ORIGIN, self.a * np.eye(2))


@dataclass(frozen=True)
class GenericEBM(PiecewiseMap):
    """Folds applied in order, then ``Q -> P + A(Q - P)`` anchored at ``P``.

    Construction checks that every fold is good on the previously folded
    region and that the final image stays in the domain.
    """

    domain: PolygonDomain
    fold_lines: tuple
    anchor: Point
    linear: np.ndarray = field(compare=False)
    n_checks: int = 1000
    kind = K.EBM

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float).reshape(2, 2)
        if not np.all(np.isfinite(lin)):
            raise InvalidParameters("linear part must be finite")
        if abs(np.linalg.det(lin)) <= 1.0:
            raise InvalidParameters("linear part must expand area (|det| > 1)")
        anchor = as_point(self.anchor)
        if not self.domain.contains(anchor):
            raise InvalidParameters("anchor must lie in the domain")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "fold_lines", tuple(self.fold_lines))
        self._validate()

    def _validate(self):
        region = self.domain
        for i, line in enumerate(self.fold_lines):
            near = region.clip(line, self.anchor)
            if near is None:
                raise BadFold(f"fold {i} leaves nothing on the anchor side")
            far = _far_part(region, line, self.anchor)
            if far is not None:
                verts = np.array([fold(v, line, self.anchor) for v in far.vertices])
                pts = np.array([fold(v, line, self.anchor) for v in far.sample_array(self.n_checks, i)])
                scale = 1e-9 * max(1.0, max(map(abs, region.bbox)))
                if not near.contains_many(np.vstack([verts, pts]), scale).all():
                    raise BadFold(f"fold {i} does not map the region onto the anchor side")
            region = near
        image = self.anchor + (region.as_array() - self.anchor) @ self.linear.T
        if not self.domain.contains_many(image, 1e-9).all():
            raise ImageEscapesDomain("the expanded folded region leaves the domain")
        object.__setattr__(self, "_folded", region)

    @property
    def folded_region(self) -> PolygonDomain:
        return self._folded

    @property
    def kernel_params(self):
        vec = [float(len(self.fold_lines))]
        for line in self.fold_lines:
            side = 1.0 if line.signed_distance(self.anchor) > 0 else -1.0
            vec += [line.nx, line.ny, line.offset, side]
        vec += [self.anchor.x, self.anchor.y, *self.linear.ravel()]
        vec += list(self.domain.bbox)
        return np.array(vec)

    def __call__(self, p):
        return ebm_eval(self, p)

    def branch(self, p):
        """Tuple of booleans: which folds reflect ``p``."""
        q = as_point(p)
        out = []
        for line in self.fold_lines:
            r = fold(q, line, self.anchor)
            out.append(r != q)
            q = r
        return tuple(out)


def _far_part(region: PolygonDomain, line: Line, anchor) -> PolygonDomain | None:
    mirror = Point(anchor[0] - 2.0 * line.signed_distance(anchor) * line.nx,
                   anchor[1] - 2.0 * line.signed_distance(anchor) * line.ny)
    return region.clip(line, mirror)


def ebm_eval(e: GenericEBM, p) -> Point:
    p = as_point(p)
    if not e.domain.contains(p, TOL):
        raise OutOfDomain(f"{tuple(p)} is outside the map's domain")
    q = p
    for line in e.fold_lines:
        q = fold(q, line, e.anchor)
    d = np.array([q.x - e.anchor.x, q.y - e.anchor.y])
    out = e.linear @ d
    r = Point(e.anchor.x + float(out[0]), e.anchor.y + float(out[1]))
    if not e.domain.contains(r, 1e-9):
        raise ImageEscapesDomain(f"image {tuple(r)} leaves the domain")
    return r


def ebm_compose(domain: PolygonDomain, lines: Sequence[Line], anchor, linear) -> GenericEBM:
    return GenericEBM(domain, tuple(lines), as_point(anchor), np.asarray(linear, dtype=float))


def psi_tilde(a: float, b: float) -> GenericEBM:
    """Three-fold variant: x = 1, then y = 1/a, then x + y = b, scaled by a."""
    return ebm_compose(TRIANGLE, (CRITICAL_X1, Line.horizontal(1.0 / a), Line(1.0, 1.0, b)), ORIGIN, a * np.eye(2))


def make_map(name: str, **kw) -> PiecewiseMap:
    """Factory used by the command line: ``psi``, ``lambda``, ``gamma`` or ``tent``."""
    name = name.lower()
    if name == "psi":
        return PsiMap(kw["a"], kw["b"])
    if name == "lambda":
        return LambdaMap(kw["t"])
    if name == "gamma":
        return TentProduct(kw["mu"])
    if name == "tent":
        return TentMap(kw["mu"])
    raise InvalidParameters(f"unknown map {name!r}")
