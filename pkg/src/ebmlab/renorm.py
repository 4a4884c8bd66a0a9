"""Renormalization operators on parameter space and the cascade search
along the curve gamma0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import optimize

from .exceptions import InvalidParameters, NotFound, SingularDenominator, Unreachable
from .regions import P3, T_MAX, T_MIN, P1n, P2n, RegionId, gamma0, in_region, p1n_index

SQRT2 = math.sqrt(2.0)
FIXED_POINT = (1.0, SQRT2)
SINGULAR_TOL = 1e-14
MAX_TREE_DEPTH = 12
# the fixed point repels (eigenvalue 3+2sqrt2), so rounding alone would push
# it out of P3 after ~20 steps; points this close are treated as exact
FIXED_SNAP = 1e-14


class RenormOp(str, Enum):
    Delta = "Delta"
    Pi = "Pi"

    @property
    def symbol(self) -> str:
        return "Δ" if self is RenormOp.Delta else "Π"

    @property
    def power(self) -> int:
        return 2 if self is RenormOp.Delta else 1


def as_op(op) -> RenormOp:
    if isinstance(op, RenormOp):
        return op
    key = str(op).strip()
    for o in RenormOp:
        if key.lower() in (o.value.lower(), o.symbol):
            return o
    raise InvalidParameters(f"unknown operator {op!r}")


def gamma_coeff(a: float, b: float) -> float:
    den = 1.0 + a - a * b
    if abs(den) < SINGULAR_TOL:
        raise SingularDenominator(f"1 + a - ab vanishes at ({a}, {b})")
    return (a * b + b - 2.0) / den


def apply(op, a: float, b: float) -> tuple[float, float]:
    op = as_op(op)
    g = gamma_coeff(a, b)
    return a**4, g / a**op.power


def apply_many(op, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``apply``; singular entries come back as NaN."""
    op = as_op(op)
    den = 1.0 + a - a * b
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(np.abs(den) < SINGULAR_TOL, np.nan, (a * b + b - 2.0) / den)
    return a**4, g / a**op.power


def jacobian(op, a: float, b: float) -> np.ndarray:
    op = as_op(op)
    den = 1.0 + a - a * b
    if abs(den) < SINGULAR_TOL:
        raise SingularDenominator(f"1 + a - ab vanishes at ({a}, {b})")
    num = a * b + b - 2.0
    g = num / den
    g_a = (b * den - num * (1.0 - b)) / den**2
    g_b = (a * a + 1.0) / den**2
    k = op.power
    return np.array([
        [4.0 * a**3, 0.0],
        [g_a / a**k - k * g / a ** (k + 1), g_b / a**k],
    ])


def jacobian_det(op, a: float, b: float) -> float:
    """Closed-form determinant ``4 a^(3-k) (a^2+1) / (1+a-ab)^2`` (k = 2 or 1)."""
    op = as_op(op)
    den = 1.0 + a - a * b
    if abs(den) < SINGULAR_TOL:
        raise SingularDenominator(f"1 + a - ab vanishes at ({a}, {b})")
    return 4.0 * a ** (3 - op.power) * (a * a + 1.0) / den**2


@dataclass(frozen=True)
class SpectralData:
    fixed_point: tuple
    eigenvalues: tuple
    eigenvectors: tuple
    jacobian: np.ndarray = field(compare=False)


def spectral(op) -> SpectralData:
    op = as_op(op)
    jac = jacobian(op, *FIXED_POINT)
    vals, vecs = np.linalg.eig(jac)
    order = np.argsort(vals.real)
    vals, vecs = vals.real[order], vecs.real[:, order]
    v1 = vecs[:, 0] / vecs[0, 0]
    v2 = vecs[:, 1] / vecs[1, 1]
    return SpectralData(
        FIXED_POINT,
        (float(vals[0]), float(vals[1])),
        ((float(v1[0]), float(v1[1])), (float(v2[0]), float(v2[1]))),
        jac,
    )


def in_neighborhood_D(a: float, b: float) -> bool:
    return (0.999 < a <= 2.001 and 0.999 <= b < 2.0 and a * b < 2.0 + 1e-9
            and abs(1.0 + a - a * b) > 1e-9)


def fiber_inverse(op, a_target: float, b_target: float) -> tuple[float, float]:
    """Preimage of a target on its vertical fiber by bisection in b."""
    op = as_op(op)
    if not (a_target > 0 and math.isfinite(a_target) and math.isfinite(b_target)):
        raise InvalidParameters("fiber_inverse needs a positive finite target")
    a = a_target**0.25
    lo = 1.0
    hi = min(2.0 / a, (1.0 + a) / a - 1e-9)
    if hi <= lo:
        raise Unreachable(f"empty fiber at a={a}")

    def f(b):
        return apply(op, a, b)[1] - b_target

    flo, fhi = f(lo), f(hi)
    if abs(flo) <= 1e-15:
        return a, lo
    if abs(fhi) <= 1e-15:
        return a, hi
    if flo > 0 or fhi < 0:
        raise Unreachable(f"b={b_target} is not attained on the fiber over a={a}")
    b = optimize.bisect(f, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=60, disp=False)
    return a, float(b)


def at_fixed_point(a: float, b: float) -> bool:
    return abs(a - 1.0) <= FIXED_SNAP and abs(b - SQRT2) <= FIXED_SNAP


def in_p3_closure(a: float, b: float) -> bool:
    return in_region(P3, a, b, closed=True)


def renorm_depth(a: float, b: float, op="Delta", max_n: int = 64) -> int:
    """Number of consecutive iterates that stay in (the closure of) P3."""
    op = as_op(op)
    if max_n < 0:
        raise InvalidParameters("max_n must be non-negative")
    n = 0
    while n < max_n:
        if at_fixed_point(a, b):
            return max_n
        if not in_p3_closure(a, b):
            break
        try:
            a, b = apply(op, a, b)
        except SingularDenominator:
            return n + 1
        n += 1
    return n


@dataclass(frozen=True)
class RenormNode:
    word: str
    params: Optional[tuple]
    valid: bool

    def to_dict(self) -> dict:
        return {"word": self.word, "params": list(self.params) if self.params else None, "valid": self.valid}


def renorm_tree(a: float, b: float, depth: int) -> list[RenormNode]:
    """Breadth-first list of all words of length <= depth.

    A node is valid when its parent was valid and in P3 when the operator
    was applied; the root is valid iff it lies in P3.
    """
    if not (0 <= depth <= MAX_TREE_DEPTH):
        raise InvalidParameters(f"depth must be in [0, {MAX_TREE_DEPTH}]")
    root = RenormNode("", (float(a), float(b)), in_p3_closure(a, b))
    nodes = [root]
    level = [root]
    for _ in range(depth):
        nxt = []
        for node in level:
            ok_parent = node.params is not None and in_p3_closure(*node.params)
            for op in RenormOp:
                params = None
                if node.params is not None:
                    try:
                        params = apply(op, *node.params)
                    except SingularDenominator:
                        params = None
                nxt.append(RenormNode(node.word + op.symbol, params, node.valid and ok_parent))
        nodes += nxt
        level = nxt
    return nodes


@dataclass
class CascadeResult:
    n: int
    t_interval: tuple
    grid_interval: tuple
    k: int
    m: int
    terminal_region: RegionId
    exit_params: tuple
    grid_points: int
    op: RenormOp = RenormOp.Delta

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t_interval": list(self.t_interval),
            "grid_interval": list(self.grid_interval),
            "k": self.k,
            "m": self.m,
            "terminal_region": str(self.terminal_region),
            "exit_params": list(self.exit_params),
            "grid_points": self.grid_points,
            "op": self.op.value,
            "midpoint": 0.5 * (self.t_interval[0] + self.t_interval[1]),
        }


def _classify(t: np.ndarray, op: RenormOp, k_max: int):
    """Exit step ``k`` and exit point for each t; k = -1 if it never exits."""
    a = 16.0 * t**8
    b = 1.0 / (2.0 * t**3)
    k = np.full(t.shape, -1, dtype=np.int64)
    ea, eb = a.copy(), b.copy()
    active = np.ones(t.shape, dtype=bool)
    for step in range(k_max + 1):
        lo = (2.0 + a**2 + a**3) / (1.0 + a + a**3)
        hi = 2.0 * (1.0 + a + a**3) / (a * (2.0 + a**2 + a**3))
        hi = np.minimum(hi, 2.0 / np.where(a > 0, a, 1.0))
        inside = (a >= 1.0) & (a <= 2.0) & (b >= np.maximum(lo, 1.0)) & (b <= hi) & np.isfinite(b)
        fixed = (np.abs(a - 1.0) <= FIXED_SNAP) & (np.abs(b - SQRT2) <= FIXED_SNAP)
        active &= ~fixed
        leaving = active & ~inside
        k[leaving] = step
        ea[leaving], eb[leaving] = a[leaving], b[leaving]
        active &= inside
        if not active.any() or step == k_max:
            break
        na, nb = apply_many(op, a, b)
        a, b = np.where(active, na, a), np.where(active, nb, b)
    return k, ea, eb


def _terminal_index(op: RenormOp, a: float, b: float) -> Optional[int]:
    m = p1n_index(a)
    if m is None:
        return None
    region = P1n(m) if op is RenormOp.Delta else P2n(m)
    return m if in_region(region, a, b) else None


def _qualifies(t: float, n: int, op: RenormOp, k_max: int):
    k, ea, eb = _classify(np.array([t]), op, k_max)
    if k[0] < 0:
        return None
    m = _terminal_index(op, float(ea[0]), float(eb[0]))
    if m is None or m < n + 1:
        return None
    return int(k[0]), m


def cascade_search(n: int, t_grid: int, op="Delta", k_max: int = 60) -> CascadeResult:
    """Widest run of grid parameters on gamma0 whose first exit from P3
    lands in a region predicting at least ``2**n`` attractors.

    Run endpoints are refined by bisection against the neighbouring
    non-qualifying grid points.
    """
    op = as_op(op)
    if n < 1:
        raise InvalidParameters("n must be at least 1")
    if t_grid < 1000:
        raise InvalidParameters("t_grid must be at least 1000")
    t = T_MIN + (T_MAX - T_MIN) * np.arange(1, t_grid + 1) / t_grid
    k, ea, eb = _classify(t, op, k_max)
    tags = []
    for i in range(t_grid):
        tag = None
        if k[i] >= 0:
            m = _terminal_index(op, float(ea[i]), float(eb[i]))
            if m is not None and m >= n + 1:
                tag = (int(k[i]), m)
        tags.append(tag)

    runs = []
    i = 0
    while i < t_grid:
        if tags[i] is None:
            i += 1
            continue
        j = i
        while j + 1 < t_grid and tags[j + 1] == tags[i]:
            j += 1
        runs.append((i, j, tags[i]))
        i = j + 1
    if not runs:
        raise NotFound(f"no grid point on gamma0 predicts 2^{n} attractors at t_grid={t_grid}")

    best = None
    for i, j, tag in runs:
        lo_out = t[i - 1] if i > 0 else T_MIN
        hi_out = t[j + 1] if j + 1 < t_grid else None
        t_lo = _refine(lo_out, t[i], tag, n, op, k_max)
        t_hi = t[j] if hi_out is None else _refine(hi_out, t[j], tag, n, op, k_max)
        width = t_hi - t_lo
        if best is None or width > best[0]:
            best = (width, i, j, tag, t_lo, t_hi)
    _, i, j, (kk, m), t_lo, t_hi = best
    region = P1n(m) if op is RenormOp.Delta else P2n(m)
    mid = 0.5 * (t_lo + t_hi)
    kc, ea_m, eb_m = _classify(np.array([mid]), op, k_max)
    return CascadeResult(n, (float(t_lo), float(t_hi)), (float(t[i]), float(t[j])), kk, m, region,
                         (float(ea_m[0]), float(eb_m[0])), j - i + 1, op)


def _refine(t_out: float, t_in: float, tag, n, op, k_max, iters: int = 60) -> float:
    """Bisect towards the boundary between a failing and a qualifying t."""
    for _ in range(iters):
        mid = 0.5 * (t_out + t_in)
        if mid in (t_out, t_in):
            break
        if _qualifies(mid, n, op, k_max) == tag:
            t_in = mid
        else:
            t_out = mid
    return float(t_in)


def exit_point(t: float, op="Delta", k_max: int = 60) -> tuple[int, tuple]:
    """First step at which H^k(gamma0(t)) leaves P3, with that point."""
    op = as_op(op)
    gamma0(t)
    k, ea, eb = _classify(np.array([float(t)]), op, k_max)
    return int(k[0]), (float(ea[0]), float(eb[0]))


__all__ = [
    "RenormOp", "SpectralData", "RenormNode", "CascadeResult", "gamma_coeff", "apply", "apply_many",
    "jacobian", "jacobian_det", "spectral", "fiber_inverse", "renorm_depth", "renorm_tree",
    "cascade_search", "in_neighborhood_D", "exit_point",
]
