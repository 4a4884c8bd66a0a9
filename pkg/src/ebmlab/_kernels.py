"""Compiled orbit kernels.

Every map is addressed by an integer ``kind`` and a flat float64 parameter
vector so one set of kernels serves all families:

- TENT  ``[mu]`` acts on x only, y is carried unchanged
- GAMMA ``[mu]``
- LAMBDA ``[t]``
- PSI ``[a, b]``
- EBM ``[n_folds, (nx, ny, off, side) * n_folds, px, py, m11, m12, m21, m22, x0, x1, y0, y1]``
  where ``side`` is the sign of the anchor's signed distance and the last
  four entries are the domain bounding box used for snapping.
"""
from __future__ import annotations

import numba as nb
import numpy as np

TENT, GAMMA, LAMBDA, PSI, EBM = 0, 1, 2, 3, 4

FOLD_TOL = 1e-12
SNAP_TOL = 1e-9

# status codes returned by orbit kernels
OK, ESCAPED = 0, 1


@nb.njit(cache=True, nogil=True)
def _tent(mu, x):
    if x <= 1.0:
        return mu * x
    return mu * (2.0 - x)


@nb.njit(cache=True, nogil=True)
def psi_branch_code(a, b, x, y):
    # 0 T0minus, 1 T0plus, 2 T1minus, 3 T1plus
    if x <= 1.0:
        return 0 if x + y <= b else 1
    return 2 if x - y >= 2.0 - b else 3


@nb.njit(cache=True, nogil=True)
def _psi(a, b, x, y):
    c = psi_branch_code(a, b, x, y)
    if c == 0:
        return a * x, a * y
    if c == 1:
        return a * (b - y), a * (b - x)
    if c == 2:
        return a * (2.0 - x), a * y
    return a * (b - y), a * (b - 2.0 + x)


@nb.njit(cache=True, nogil=True)
def _lambda(t, x, y):
    if x <= 1.0:
        return t * (x + y), t * (x - y)
    return t * (2.0 - x + y), t * (2.0 - x - y)


@nb.njit(cache=True, nogil=True)
def _ebm(prm, x, y):
    nf = int(prm[0])
    for i in range(nf):
        nx = prm[1 + 4 * i]
        ny = prm[2 + 4 * i]
        off = prm[3 + 4 * i]
        side = prm[4 + 4 * i]
        d = nx * x + ny * y - off
        if d * side < 0.0 and abs(d) > FOLD_TOL:
            x = x - 2.0 * d * nx
            y = y - 2.0 * d * ny
    k = 1 + 4 * nf
    px = prm[k]
    py = prm[k + 1]
    dx = x - px
    dy = y - py
    return px + prm[k + 2] * dx + prm[k + 3] * dy, py + prm[k + 4] * dx + prm[k + 5] * dy


@nb.njit(cache=True, nogil=True)
def step(kind, prm, x, y):
    if kind == PSI:
        return _psi(prm[0], prm[1], x, y)
    if kind == LAMBDA:
        return _lambda(prm[0], x, y)
    if kind == GAMMA:
        return _tent(prm[0], x), _tent(prm[0], y)
    if kind == TENT:
        return _tent(prm[0], x), y
    return _ebm(prm, x, y)


@nb.njit(cache=True, nogil=True)
def snap(kind, prm, x, y):
    """Project a point that drifted out of the domain back in.

    Returns ``(x, y, excess)`` where ``excess`` is the distance moved.
    """
    if kind == PSI or kind == LAMBDA:
        moved = 0.0
        if y < 0.0:
            moved = max(moved, -y)
            y = 0.0
        if y > x:
            s = 0.5 * (x + y)
            moved = max(moved, 0.7071067811865476 * (y - x))
            x = s
            y = s
        if x + y > 2.0:
            e = 0.5 * (x + y - 2.0)
            moved = max(moved, 1.4142135623730951 * e)
            x -= e
            y -= e
        if y < 0.0:
            y = 0.0
        return x, y, moved
    if kind == EBM:
        k = 1 + 4 * int(prm[0]) + 6
        moved = 0.0
        nx = min(max(x, prm[k]), prm[k + 1])
        ny = min(max(y, prm[k + 2]), prm[k + 3])
        moved = max(abs(nx - x), abs(ny - y))
        return nx, ny, moved
    nx = min(max(x, 0.0), 2.0)
    ny = min(max(y, 0.0), 2.0) if kind == GAMMA else y
    return nx, ny, max(abs(nx - x), abs(ny - y))


@nb.njit(cache=True, nogil=True)
def safe_step(kind, prm, x, y):
    x, y = step(kind, prm, x, y)
    x, y, moved = snap(kind, prm, x, y)
    return x, y, moved


@nb.njit(cache=True, nogil=True)
def differential(kind, prm, x, y):
    """Branch differential at ``(x, y)`` as ``(m11, m12, m21, m22)``."""
    if kind == PSI:
        a = prm[0]
        c = psi_branch_code(a, prm[1], x, y)
        if c == 0:
            return a, 0.0, 0.0, a
        if c == 1:
            return 0.0, -a, -a, 0.0
        if c == 2:
            return -a, 0.0, 0.0, a
        return 0.0, -a, a, 0.0
    if kind == LAMBDA:
        t = prm[0]
        if x <= 1.0:
            return t, t, t, -t
        return -t, t, -t, -t
    if kind == GAMMA:
        mu = prm[0]
        sx = mu if x <= 1.0 else -mu
        sy = mu if y <= 1.0 else -mu
        return sx, 0.0, 0.0, sy
    if kind == TENT:
        mu = prm[0]
        return (mu if x <= 1.0 else -mu), 0.0, 0.0, 1.0
    # generic EBM: product of reflections then the linear part
    nf = int(prm[0])
    r11, r12, r21, r22 = 1.0, 0.0, 0.0, 1.0
    for i in range(nf):
        nx = prm[1 + 4 * i]
        ny = prm[2 + 4 * i]
        off = prm[3 + 4 * i]
        side = prm[4 + 4 * i]
        d = nx * x + ny * y - off
        if d * side < 0.0 and abs(d) > FOLD_TOL:
            x = x - 2.0 * d * nx
            y = y - 2.0 * d * ny
            f11 = 1.0 - 2.0 * nx * nx
            f12 = -2.0 * nx * ny
            f22 = 1.0 - 2.0 * ny * ny
            r11, r12, r21, r22 = (f11 * r11 + f12 * r21, f11 * r12 + f12 * r22,
                                  f12 * r11 + f22 * r21, f12 * r12 + f22 * r22)
    k = 1 + 4 * nf + 2
    m11, m12, m21, m22 = prm[k], prm[k + 1], prm[k + 2], prm[k + 3]
    return (m11 * r11 + m12 * r21, m11 * r12 + m12 * r22,
            m21 * r11 + m22 * r21, m21 * r12 + m22 * r22)


@nb.njit(cache=True, nogil=True)
def on_critical(kind, prm, x, y):
    if kind == PSI:
        b = prm[1]
        if x == 1.0:
            return True
        if x < 1.0 and x + y == b:
            return True
        return x > 1.0 and x - y == 2.0 - b
    if kind == LAMBDA or kind == TENT:
        return x == 1.0
    if kind == GAMMA:
        return x == 1.0 or y == 1.0
    nf = int(prm[0])
    for i in range(nf):
        if prm[1 + 4 * i] * x + prm[2 + 4 * i] * y == prm[3 + 4 * i]:
            return True
    return False


@nb.njit(cache=True, nogil=True)
def eval_many(kind, prm, pts, power):
    n = pts.shape[0]
    out = np.empty((n, 2))
    for i in range(n):
        x = pts[i, 0]
        y = pts[i, 1]
        for _ in range(power):
            x, y = step(kind, prm, x, y)
        out[i, 0] = x
        out[i, 1] = y
    return out


@nb.njit(cache=True, nogil=True)
def orbit(kind, prm, x, y, burn, n):
    out = np.empty((n, 2))
    worst = 0.0
    for _ in range(burn):
        x, y, m = safe_step(kind, prm, x, y)
        worst = max(worst, m)
    for i in range(n):
        x, y, m = safe_step(kind, prm, x, y)
        worst = max(worst, m)
        out[i, 0] = x
        out[i, 1] = y
    return out, worst


@nb.njit(cache=True, nogil=True)
def lyapunov(kind, prm, x, y, burn, n, nudge):
    """QR accumulation of branch differentials.

    Returns ``(l1, l2, hits, worst_snap)``; critical-line hits are nudged by
    ``nudge`` along -x (and -y) and counted.
    """
    hits = 0
    worst = 0.0
    for _ in range(burn):
        x, y, m = safe_step(kind, prm, x, y)
        worst = max(worst, m)
    q11, q12, q21, q22 = 1.0, 0.0, 0.0, 1.0
    s1 = 0.0
    s2 = 0.0
    for _ in range(n):
        if on_critical(kind, prm, x, y):
            hits += 1
            x -= nudge
            if kind == GAMMA and y == 1.0:
                y -= nudge
            x, y, m = snap(kind, prm, x, y)
        m11, m12, m21, m22 = differential(kind, prm, x, y)
        v11 = m11 * q11 + m12 * q21
        v21 = m21 * q11 + m22 * q21
        v12 = m11 * q12 + m12 * q22
        v22 = m21 * q12 + m22 * q22
        r11 = np.sqrt(v11 * v11 + v21 * v21)
        q11 = v11 / r11
        q21 = v21 / r11
        r12 = q11 * v12 + q21 * v22
        w1 = v12 - r12 * q11
        w2 = v22 - r12 * q21
        r22 = np.sqrt(w1 * w1 + w2 * w2)
        q12 = w1 / r22
        q22 = w2 / r22
        s1 += np.log(r11)
        s2 += np.log(r22)
        x, y, m = safe_step(kind, prm, x, y)
        worst = max(worst, m)
    return s1 / n, s2 / n, hits, worst


@nb.njit(parallel=True, cache=True)
def advance(kind, prm, seeds, steps):
    out = seeds.copy()
    worst = np.zeros(seeds.shape[0])
    for s in nb.prange(seeds.shape[0]):
        x = seeds[s, 0]
        y = seeds[s, 1]
        w = 0.0
        for _ in range(steps):
            x, y, m = safe_step(kind, prm, x, y)
            w = max(w, m)
        out[s, 0] = x
        out[s, 1] = y
        worst[s] = w
    return out, worst


@nb.njit(parallel=True, cache=True)
def bbox(kind, prm, seeds, n):
    m = seeds.shape[0]
    out = np.empty((m, 4))
    for s in nb.prange(m):
        x = seeds[s, 0]
        y = seeds[s, 1]
        lx, hx, ly, hy = x, x, y, y
        for _ in range(n):
            x, y, _m = safe_step(kind, prm, x, y)
            lx = min(lx, x)
            hx = max(hx, x)
            ly = min(ly, y)
            hy = max(hy, y)
        out[s, 0] = lx
        out[s, 1] = hx
        out[s, 2] = ly
        out[s, 3] = hy
    return out


@nb.njit(parallel=True, cache=True)
def occupancy(kind, prm, seeds, n, res, x0, x1, y0, y1, power):
    """Per-seed occupancy grids of shape ``(m, res, res)`` indexed ``[iy, ix]``.

    With ``power > 1`` only every ``power``-th iterate is recorded, giving
    the occupancy of the power map.
    """
    m = seeds.shape[0]
    g = np.zeros((m, res, res), dtype=np.bool_)
    sx = res / (x1 - x0)
    sy = res / (y1 - y0)
    for s in nb.prange(m):
        x = seeds[s, 0]
        y = seeds[s, 1]
        for i in range(n):
            x, y, _m = safe_step(kind, prm, x, y)
            if (i + 1) % power != 0:
                continue
            ix = int((x - x0) * sx)
            iy = int((y - y0) * sy)
            ix = min(max(ix, 0), res - 1)
            iy = min(max(iy, 0), res - 1)
            g[s, iy, ix] = True
    return g


@nb.njit(parallel=True, cache=True)
def first_entry(kind, prm, seeds, max_iters, verts):
    """Iteration index at which each orbit enters the convex polygon ``verts``.

    ``verts`` is counterclockwise; ``-1`` marks orbits that never enter.
    """
    m = seeds.shape[0]
    nv = verts.shape[0]
    out = np.full(m, -1, dtype=np.int64)
    for s in nb.prange(m):
        x = seeds[s, 0]
        y = seeds[s, 1]
        for it in range(max_iters + 1):
            inside = True
            for k in range(nv):
                ax = verts[k, 0]
                ay = verts[k, 1]
                bx = verts[(k + 1) % nv, 0]
                by = verts[(k + 1) % nv, 1]
                ex = bx - ax
                ey = by - ay
                if (ex * (y - ay) - ey * (x - ax)) / np.sqrt(ex * ex + ey * ey) < -1e-12:
                    inside = False
                    break
            if inside:
                out[s] = it
                break
            x, y, _m = safe_step(kind, prm, x, y)
    return out
