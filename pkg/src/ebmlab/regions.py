"""Parameter regions as vertical b-fibers over a, plus the curve gamma0."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import InvalidParameters, OutOfRange, UnsupportedRegion

T_MIN = 1.0 / math.sqrt(2.0)
T_MAX = 2.0 ** (-0.4)
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class RegionId:
    tag: str
    n: Optional[int] = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise InvalidParameters(f"unknown region {self.tag!r}")
        if self.tag in ("P1n", "P2n"):
            if self.n is None or int(self.n) < 1:
                raise InvalidParameters(f"{self.tag} needs n >= 1")
            object.__setattr__(self, "n", int(self.n))
        elif self.n is not None:
            raise InvalidParameters(f"{self.tag} takes no index")

    def __str__(self):
        return f"{self.tag}({self.n})" if self.n is not None else self.tag

    @classmethod
    def parse(cls, text: str) -> "RegionId":
        text = text.strip()
        if "(" in text:
            tag, rest = text.split("(", 1)
            return cls(tag, int(rest.rstrip(")")))
        return cls(text)


_TAGS = ("P", "P1", "P2", "PDelta", "P3", "P1n", "P2n", "HDeltaImageP3", "HPiImageP3")

P = RegionId("P")
P1 = RegionId("P1")
P2 = RegionId("P2")
PDELTA = RegionId("PDelta")
P3 = RegionId("P3")
H_DELTA_IMAGE_P3 = RegionId("HDeltaImageP3")
H_PI_IMAGE_P3 = RegionId("HPiImageP3")


def P1n(n: int) -> RegionId:
    return RegionId("P1n", n)


def P2n(n: int) -> RegionId:
    return RegionId("P2n", n)


def a_window(n: int) -> tuple[float, float]:
    """The half-open a-range ``(2^(1/2^(n+1)), 2^(1/2^n)]`` of index ``n``."""
    return 2.0 ** (1.0 / 2 ** (n + 1)), 2.0 ** (1.0 / 2**n)


def _raw_bounds(r: RegionId, a: float) -> tuple[float, float]:
    tag = r.tag
    if tag == "P":
        return 1.0, 2.0 / a
    if tag == "P1" or tag == "P1n":
        return 1.0, (2.0 + 2.0 * a) / (2.0 * a + a * a)
    if tag == "P2" or tag == "P2n":
        return (2.0 + a) / (1.0 + a), 2.0 / a
    a2, a3 = a * a, a * a * a
    if tag == "PDelta":
        return (2.0 + a2 + a3) / (1.0 + a + a3), 2.0 * (1.0 + a + a2) / (a * (2.0 + a + a2))
    if tag == "P3":
        return (2.0 + a2 + a3) / (1.0 + a + a3), 2.0 * (1.0 + a + a3) / (a * (2.0 + a2 + a3))
    if tag == "HDeltaImageP3":
        return 1.0, 2.0 * a ** -1.25
    if tag == "HPiImageP3":
        return a**0.25, 2.0 / a
    raise UnsupportedRegion(str(r))


def _a_ok(r: RegionId, a: float, closed: bool) -> bool:
    if r.tag in ("P1n", "P2n"):
        lo, hi = a_window(r.n)
        return lo < a <= hi
    return (1.0 <= a if closed else 1.0 < a) and a <= 2.0


def region_bounds(r: RegionId, a: float, closed: bool = False) -> tuple[float, float]:
    """The b-interval of the fiber at ``a``, clamped to ``1 <= b <= 2/a``.

    The interval is empty (lower > upper) when the fiber misses the region.
    ``closed`` admits ``a = 1`` for use at the closure of the parameter set.
    """
    a = float(a)
    if not math.isfinite(a) or not ((1.0 <= a if closed else 1.0 < a) and a <= 2.0):
        raise OutOfRange(f"a={a} outside (1, 2]")
    lo, hi = _raw_bounds(r, a)
    lo, hi = max(lo, 1.0), min(hi, 2.0 / a)
    if not _a_ok(r, a, closed):
        return math.inf, -math.inf
    return lo, hi


def in_region(r: RegionId, a: float, b: float, closed: bool = False) -> bool:
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    if not ((1.0 <= a if closed else 1.0 < a) and a <= 2.0):
        return False
    lo, hi = region_bounds(r, a, closed)
    return lo <= b <= hi


def p1n_index(a: float) -> Optional[int]:
    """The ``n >= 1`` with ``a`` in the window of index ``n``, if any."""
    a = float(a)
    if not (1.0 < a <= math.sqrt(2.0)):
        return None
    n = max(1, int(math.floor(-math.log2(math.log2(a)))))
    for k in (n - 1, n, n + 1):
        if k >= 1:
            lo, hi = a_window(k)
            if lo < a <= hi:
                return k
    return None


def attractor_count_prediction(r: RegionId) -> int:
    if r.tag not in ("P1n", "P2n"):
        raise UnsupportedRegion(f"no attractor count is predicted for {r}")
    return 2 ** (r.n - 1)


def gamma0(t: float) -> tuple[float, float]:
    t = float(t)
    if not (T_MIN - 1e-15 <= t <= T_MAX + 1e-15):
        raise OutOfRange(f"t={t} outside [1/sqrt(2), 2^(-2/5)]")
    return 16.0 * t**8, 1.0 / (2.0 * t**3)


def phi0(a: float) -> float:
    """gamma0 as a graph over a."""
    return math.sqrt(2.0) * a ** -0.375


@dataclass
class RegionReport:
    a: float
    b: float
    memberships: dict = field(default_factory=dict)
    boundary_b: dict = field(default_factory=dict)
    boundary_exact: dict = field(default_factory=dict)
    p1n: Optional[int] = None
    p2n: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "memberships": dict(self.memberships),
            "boundary_b": {k: {"lower": lo, "upper": hi} for k, (lo, hi) in self.boundary_b.items()},
            "boundary_exact": dict(self.boundary_exact),
            "P1n": self.p1n,
            "P2n": self.p2n,
        }


def region_report(a: float, b: float) -> RegionReport:
    rep = RegionReport(float(a), float(b))
    regions = [P, P1, P2, PDELTA, P3, H_DELTA_IMAGE_P3, H_PI_IMAGE_P3]
    n = p1n_index(a)
    if n is not None:
        regions += [P1n(n), P2n(n)]
    for r in regions:
        key = str(r)
        rep.memberships[key] = in_region(r, a, b)
        if 1.0 < a <= 2.0:
            lo, hi = region_bounds(r, a)
            if lo <= hi:
                rep.boundary_b[key] = (lo, hi)
                rep.boundary_exact[key] = abs(b - lo) <= BOUNDARY_TOL or abs(b - hi) <= BOUNDARY_TOL
    if n is not None:
        rep.p1n = n if rep.memberships[str(P1n(n))] else None
        rep.p2n = n if rep.memberships[str(P2n(n))] else None
    return rep


def a_range(r: RegionId) -> tuple[float, float]:
    """An a-interval containing every nonempty fiber of ``r``."""
    if r.tag in ("P1n", "P2n"):
        return a_window(r.n)
    if r.tag in ("P1", "P2"):
        return 1.0, math.sqrt(2.0)
    if r.tag == "PDelta":
        return 1.0, 2.0**0.25
    if r.tag == "P3":
        return 1.0, 2.0**0.2
    return 1.0, 2.0


def sample_region(r: RegionId, n: int, rng_seed: int = 0) -> np.ndarray:
    """``n`` parameter pairs in ``r``: a uniform on its range, b uniform on the fiber."""
    rng = np.random.default_rng(rng_seed)
    lo_a, hi_a = a_range(r)
    out = []
    while len(out) < n:
        a = float(rng.uniform(lo_a, hi_a))
        if a <= 1.0:
            continue
        lo, hi = region_bounds(r, a)
        if lo > hi:
            continue
        b = float(rng.uniform(lo, hi))
        if in_region(r, a, b):
            out.append((a, b))
    return np.array(out)
