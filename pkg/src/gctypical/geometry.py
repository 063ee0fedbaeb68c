"""Exact extremes of signed weights over geometric set systems.

Every engine takes distinct points ``x`` (shape ``(N, d)``) with signed weights
``c`` and returns ``(hi, lo)``: the largest and smallest value of
``sum(c[S])`` over all subsets ``S`` cut out by a member of the class. The
empty set is always included, so ``hi >= 0 >= lo``.

Halfspaces and balls use the extreme-ray argument: the cone of weak
separators of a fixed dichotomy is pointed once the points span the space, so
some separator passes through d affinely independent points (d + 1 lifted
points for balls). Enumerating those hyperplanes and recursing on the points
they contain covers every dichotomy.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

# combined-support limits for the exact engines
MAX_EXACT_SUPPORT = 200
MAX_BALLS_3D = 40
MAX_RECT_3D = 40
MAX_DIM = 3

_CHUNK = 4096


class EngineLimitError(ValueError):
    """Problem exceeds the exact-engine scope; use brute_force_sup or a smaller support."""


def _tol(x: np.ndarray) -> float:
    return 1e-9 * max(1.0, float(np.abs(x).max(initial=0.0)))


def _with_trivial(hi: float, lo: float, c: np.ndarray) -> tuple[float, float]:
    total = float(c.sum())
    return max(hi, 0.0, total), min(lo, 0.0, total)


# ---------------------------------------------------------------------------
# one dimension


def _sorted_1d(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    order = np.argsort(x[:, 0] if x.ndim == 2 else x, kind="stable")
    return c[order]


def halfline_extremes(x: np.ndarray, c: np.ndarray, orientation: str = "both") -> tuple[float, float]:
    cs = _sorted_1d(x, c)
    pre = np.concatenate([[0.0], np.cumsum(cs)])
    suf = np.concatenate([[0.0], np.cumsum(cs[::-1])])
    vals = []
    if orientation in ("left", "both"):
        vals.append(pre)
    if orientation in ("right", "both"):
        vals.append(suf)
    v = np.concatenate(vals)
    return float(v.max()), float(v.min())


def _kadane(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Max and min contiguous (possibly empty) sums along the last axis, batched."""
    pre = np.concatenate([np.zeros(rows.shape[:-1] + (1,)), np.cumsum(rows, axis=-1)], axis=-1)
    run_min = np.minimum.accumulate(pre, axis=-1)
    run_max = np.maximum.accumulate(pre, axis=-1)
    return (pre - run_min).max(axis=-1), (pre - run_max).min(axis=-1)


def interval_extremes(x: np.ndarray, c: np.ndarray) -> tuple[float, float]:
    hi, lo = _kadane(_sorted_1d(x, c))
    return float(hi), float(lo)


# ---------------------------------------------------------------------------
# affine helpers


def _affine_frame(x: np.ndarray) -> tuple[int, np.ndarray]:
    """Affine rank of the rows of x and coordinates of x in its affine hull."""
    if len(x) == 1:
        return 0, np.zeros((1, 0))
    y = x - x[0]
    u, s, vt = np.linalg.svd(y, full_matrices=False)
    r = int(np.sum(s > 1e-10 * max(1.0, s[0] if len(s) else 0.0)))
    return r, y @ vt[:r].T


def _hyperplanes_through(x: np.ndarray, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hyperplanes through the point subsets ``idx`` (shape (K, d)).

    Returns unit normals ``w`` (K, d), offsets ``b`` with ``w @ p + b = 0`` on the
    plane, and a validity mask (subset affinely independent).
    """
    d = x.shape[1]
    base = x[idx[:, 0]]
    if d == 1:
        w = np.ones((len(idx), 1))
        return w, -base[:, 0], np.ones(len(idx), bool)
    diffs = x[idx[:, 1:]] - base[:, None, :]  # (K, d-1, d)
    # generalized cross product: cofactors of the (d-1) x d difference matrix
    w = np.empty((len(idx), d))
    for j in range(d):
        minor = np.delete(diffs, j, axis=2)
        w[:, j] = (-1) ** j * np.linalg.det(minor) if d > 1 else 1.0
    scale = np.linalg.norm(diffs, axis=2).prod(axis=1)
    norm = np.linalg.norm(w, axis=1)
    ok = norm > 1e-10 * np.maximum(scale, 1e-300)
    w = w / np.where(ok, norm, 1.0)[:, None]
    b = -np.einsum("kd,kd->k", w, base)
    return w, b, ok


def _frame_of_plane(w: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    """Orthonormal basis (d-1, d) of the hyperplane with unit normal w."""
    u, _, _ = np.linalg.svd(np.eye(len(w)) - np.outer(w, w))
    return u[:, : len(w) - 1].T


def _combos(n: int, k: int) -> np.ndarray:
    if n < k:
        return np.empty((0, k), dtype=np.intp)
    return np.array(list(itertools.combinations(range(n), k)), dtype=np.intp).reshape(-1, k)


def _combo_chunks(n: int, k: int, size: int = _CHUNK):
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield np.array(block, dtype=np.intp)


# ---------------------------------------------------------------------------
# halfspaces


def halfspace_extremes(x: np.ndarray, c: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    keep = c != 0
    x, c = x[keep], c[keep]
    if len(c) == 0:
        return 0.0, 0.0
    d = x.shape[1]
    r, coords = _affine_frame(x)
    if r < d:
        if r == 0:
            return _with_trivial(0.0, 0.0, c)
        return halfspace_extremes(coords, c)
    if d == 1:
        return halfline_extremes(x, c, "both")

    hi, lo = 0.0, 0.0
    tol = _tol(x)
    seen_degenerate: set[bytes] = set()
    for idx in _combo_chunks(len(x), d):
        w, b, ok = _hyperplanes_through(x, idx)
        w, b, idx = w[ok], b[ok], idx[ok]
        if len(w) == 0:
            continue
        s = x @ w.T + b  # (N, K)
        pos = s > tol
        neg = s < -tol
        on = ~(pos | neg)
        spos = c @ pos
        sneg = c @ neg
        n_on = on.sum(axis=0)
        simple = n_on == d
        cp, cn = np.maximum(c, 0.0), np.minimum(c, 0.0)
        t_hi = cp @ on
        t_lo = cn @ on
        for k in np.flatnonzero(~simple):
            key = on[:, k].tobytes()
            if key in seen_degenerate:
                t_hi[k], t_lo[k] = 0.0, 0.0  # already covered
                continue
            seen_degenerate.add(key)
            sub = np.flatnonzero(on[:, k])
            frame = _frame_of_plane(w[k], x[idx[k, 0]])
            local = (x[sub] - x[idx[k, 0]]) @ frame.T
            t_hi[k], t_lo[k] = halfspace_extremes(local, c[sub])
        hi = max(hi, float(np.max(spos + t_hi)), float(np.max(sneg + t_hi)))
        lo = min(lo, float(np.min(spos + t_lo)), float(np.min(sneg + t_lo)))
    return _with_trivial(hi, lo, c)


# ---------------------------------------------------------------------------
# balls


def ball_extremes(x: np.ndarray, c: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    keep = c != 0
    x, c = x[keep], c[keep]
    if len(c) == 0:
        return 0.0, 0.0
    d = x.shape[1]
    r, coords = _affine_frame(x)
    if r < d:
        if r == 0:
            return _with_trivial(0.0, 0.0, c)
        return ball_extremes(coords, c)
    if d == 1:
        return interval_extremes(x, c)

    lifted = np.hstack([x, np.sum(x * x, axis=1, keepdims=True)])
    lr, _ = _affine_frame(lifted)
    if lr < d + 1:  # cospherical: caps are halfspace cuts
        return halfspace_extremes(x, c)

    cp, cn = np.maximum(c, 0.0), np.minimum(c, 0.0)
    hi, lo = halfspace_extremes(x, c)  # flat-ball limits (very large radius)
    tol = _tol(lifted)
    seen: set[bytes] = set()

    # spheres through d + 1 points, inside side
    for idx in _combo_chunks(len(x), d + 1):
        w, b, ok = _hyperplanes_through(lifted, idx)
        ok &= np.abs(w[:, -1]) > 1e-12
        w, b, idx = w[ok], b[ok], idx[ok]
        if len(w) == 0:
            continue
        # orient so the quadratic coefficient is negative: value >= 0 inside the ball
        sgn = np.where(w[:, -1] < 0, 1.0, -1.0)
        w, b = w * sgn[:, None], b * sgn
        s = lifted @ w.T + b
        inside = s > tol
        on = ~(inside | (s < -tol))
        sin = c @ inside
        n_on = on.sum(axis=0)
        t_hi = cp @ on
        t_lo = cn @ on
        for k in np.flatnonzero(n_on != d + 1):
            key = on[:, k].tobytes()
            if key in seen:
                t_hi[k], t_lo[k] = 0.0, 0.0
                continue
            seen.add(key)
            sub = np.flatnonzero(on[:, k])
            t_hi[k], t_lo[k] = halfspace_extremes(x[sub], c[sub])
        hi = max(hi, float(np.max(sin + t_hi)))
        lo = min(lo, float(np.min(sin + t_lo)))

    # hyperplanes through d points, both sides, balls of one dimension less on the plane
    seen_flat: set[bytes] = set()
    tolx = _tol(x)
    for idx in _combo_chunks(len(x), d):
        w, b, ok = _hyperplanes_through(x, idx)
        w, b, idx = w[ok], b[ok], idx[ok]
        if len(w) == 0:
            continue
        s = x @ w.T + b
        pos, neg = s > tolx, s < -tolx
        on = ~(pos | neg)
        spos, sneg = c @ pos, c @ neg
        n_on = on.sum(axis=0)
        t_hi = cp @ on
        t_lo = cn @ on
        for k in np.flatnonzero(n_on != d):
            key = on[:, k].tobytes()
            if key in seen_flat:
                t_hi[k], t_lo[k] = 0.0, 0.0
                continue
            seen_flat.add(key)
            sub = np.flatnonzero(on[:, k])
            frame = _frame_of_plane(w[k], x[idx[k, 0]])
            local = (x[sub] - x[idx[k, 0]]) @ frame.T
            t_hi[k], t_lo[k] = ball_extremes(local, c[sub])
        hi = max(hi, float(np.max(spos + t_hi)), float(np.max(sneg + t_hi)))
        lo = min(lo, float(np.min(spos + t_lo)), float(np.min(sneg + t_lo)))
    return _with_trivial(hi, lo, c)


# ---------------------------------------------------------------------------
# rectangles


def _box_extremes_dense(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Max/min box sums of a batch of dense grids ``t`` with shape (batch, n1, ..., nk)."""
    if t.ndim == 2:
        return _kadane(t)
    batch, n1 = t.shape[:2]
    hi = np.zeros(batch)
    lo = np.zeros(batch)
    for a in range(n1):
        strips = np.cumsum(t[:, a:], axis=1)  # (batch, n1 - a, ...)
        flat = strips.reshape((-1,) + t.shape[2:])
        h, l = _box_extremes_dense(flat)
        hi = np.maximum(hi, h.reshape(batch, -1).max(axis=1))
        lo = np.minimum(lo, l.reshape(batch, -1).min(axis=1))
    return hi, lo


def rectangle_extremes(x: np.ndarray, c: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    keep = c != 0
    x, c = x[keep], np.asarray(c, float)[keep]
    if len(c) == 0:
        return 0.0, 0.0
    ranks = []
    shape = []
    for j in range(x.shape[1]):
        vals, inv = np.unique(x[:, j], return_inverse=True)
        ranks.append(inv.ravel())
        shape.append(len(vals))
    grid = np.zeros(shape)
    np.add.at(grid, tuple(ranks), c)
    hi, lo = _box_extremes_dense(grid[None])
    return float(hi[0]), float(lo[0])


# ---------------------------------------------------------------------------
# dichotomy feasibility (used by the brute-force oracle and shatter checks)


def _lp_separable(a_pos: np.ndarray, a_neg: np.ndarray, extra_nonpos: int | None = None) -> bool:
    """Is there (v, b) with v.a + b >= 1 on a_pos and <= -1 on a_neg?

    ``extra_nonpos`` marks a coordinate of v constrained to be <= 0.
    """
    from scipy.optimize import linprog

    n_pos, n_neg = len(a_pos), len(a_neg)
    if n_pos == 0 or n_neg == 0:
        return True
    dim = (a_pos if n_pos else a_neg).shape[1]
    # variables: v (dim), b
    rows = np.vstack([
        -np.hstack([a_pos, np.ones((n_pos, 1))]),
        np.hstack([a_neg, np.ones((n_neg, 1))]),
    ])
    rhs = -np.ones(n_pos + n_neg)
    bounds = [(None, None)] * (dim + 1)
    if extra_nonpos is not None:
        bounds[extra_nonpos] = (None, 0.0)
    res = linprog(np.zeros(dim + 1), A_ub=rows, b_ub=rhs, bounds=bounds, method="highs")
    return res.status == 0


def halfspace_feasible(x: np.ndarray, mask: np.ndarray) -> bool:
    mask = np.asarray(mask, bool)
    return _lp_separable(x[mask], x[~mask])


def ball_feasible(x: np.ndarray, mask: np.ndarray) -> bool:
    mask = np.asarray(mask, bool)
    if mask.sum() <= 1:
        return True
    lifted = np.hstack([x, np.sum(x * x, axis=1, keepdims=True)])
    return _lp_separable(lifted[mask], lifted[~mask], extra_nonpos=x.shape[1])


def rectangle_feasible(x: np.ndarray, mask: np.ndarray) -> bool:
    mask = np.asarray(mask, bool)
    if not mask.any():
        return True
    lo, hi = x[mask].min(axis=0), x[mask].max(axis=0)
    inside = np.all((x >= lo) & (x <= hi), axis=1)
    return not np.any(inside & ~mask)


def halfline_feasible(x: np.ndarray, mask: np.ndarray, orientation: str = "both") -> bool:
    order = np.argsort(x[:, 0], kind="stable")
    m = np.asarray(mask, bool)[order]
    k = int(m.sum())
    left = bool(np.all(m[:k])) and not m[k:].any()
    right = bool(np.all(m[len(m) - k:])) and not m[: len(m) - k].any()
    return {"left": left, "right": right, "both": left or right}[orientation]


def interval_feasible(x: np.ndarray, mask: np.ndarray) -> bool:
    order = np.argsort(x[:, 0], kind="stable")
    m = np.asarray(mask, bool)[order]
    on = np.flatnonzero(m)
    return len(on) == 0 or bool(np.all(m[on[0]: on[-1] + 1]))


# ---------------------------------------------------------------------------
# Voronoi cells


def voronoi_search(x: np.ndarray, c: np.ndarray, m: int, budget: int = 2000, seed: int = 0) -> tuple[float, float]:
    """Best cell sums over site sets drawn from support points and midpoints.

    A lower bound on the true extremes (site placement is a continuous search).
    """
    n = len(x)
    ii, jj = np.triu_indices(n, 1)
    cand = np.vstack([x, 0.5 * (x[ii] + x[jj])])
    rng = np.random.default_rng([seed, n, m])
    hi, lo = 0.0, 0.0
    if len(cand) < m:
        return _with_trivial(hi, lo, c)
    for _ in range(budget):
        sites = cand[rng.choice(len(cand), size=m, replace=False)]
        d2 = np.sum((x[:, None, :] - sites[None]) ** 2, axis=2)
        member = d2 <= d2.min(axis=1, keepdims=True) * (1 + 1e-12) + 1e-15
        sums = c @ member
        hi = max(hi, float(sums.max()))
        lo = min(lo, float(sums.min()))
    return _with_trivial(hi, lo, c)


# ---------------------------------------------------------------------------
# continuous comparisons against a product-uniform box


def _cdf_jumps(x: np.ndarray, w: np.ndarray, low: float, high: float):
    order = np.argsort(x, kind="stable")
    xs, ws = x[order], w[order]
    cum = np.cumsum(ws)
    F = np.clip((xs - low) / (high - low), 0.0, 1.0)
    G = cum - F  # value of A(t) at t = x_k
    H = (cum - ws) - F  # left limit at x_k
    return G, H


def box_halfline_sup(x: np.ndarray, w: np.ndarray, low: float, high: float, orientation: str = "both") -> float:
    """sup_t |P_n((-inf, t]) - U((-inf, t])| for U uniform on [low, high]."""
    G, H = _cdf_jumps(x, w, low, high)
    # right half-lines [t, inf) give -(left limits) since both laws have unit mass
    return float(max(np.abs(G).max(), np.abs(H).max()))


def box_interval_sup(x: np.ndarray, w: np.ndarray, low: float, high: float) -> float:
    G, H = _cdf_jumps(x, w, low, high)
    run_min_h = np.minimum.accumulate(H)
    top = max(0.0, float(np.max(G - np.minimum(run_min_h, 0.0))))
    g_ext = np.concatenate([[0.0], G])  # G_0 = 0
    h_ext = np.concatenate([H, [0.0]])  # H_{n+1} = 0
    run_max_g = np.maximum.accumulate(g_ext)  # max over j < k of G_j
    bottom = min(0.0, float(np.min(h_ext - run_max_g)))
    return max(top, -bottom)


def _square_area_below(a: np.ndarray, b: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Area of {(u, v) in [0,1]^2 : a u + b v <= s}, vectorized."""
    a, b, s = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(s, float))
    s = s - np.minimum(a, 0) - np.minimum(b, 0)
    a, b = np.abs(a), np.abs(b)
    out = np.empty(a.shape)
    big, small = np.maximum(a, b), np.minimum(a, b)
    degenerate = small <= 1e-12 * np.maximum(big, 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        ramp2 = lambda t: np.maximum(t, 0.0) ** 2
        full = (ramp2(s) - ramp2(s - a) - ramp2(s - b) + ramp2(s - a - b)) / (2 * a * b)
        one_d = np.clip(s / big, 0.0, 1.0)
        zero = (s >= 0).astype(float)
    out = np.where(degenerate, np.where(big > 0, one_d, zero), full)
    return np.clip(out, 0.0, 1.0)


def box_halfplane_sup(x: np.ndarray, w: np.ndarray, low: np.ndarray, high: np.ndarray,
                      n_grid: int = 720) -> float:
    """sup over closed halfplanes H of |P_n(H) - U(H)|, U uniform on a rectangle.

    Candidate lines: through two atoms (every side/inclusion pattern), and through
    one atom at the angles where the atom is the chord midpoint (stationary
    points of the cut area under rotation). Assumes no three atoms collinear.
    """
    u = (x - low) / (high - low)
    if np.any(u < -1e-12) or np.any(u > 1 + 1e-12):
        raise ValueError("all atoms must lie in the box")
    n = len(u)
    best = 0.0
    # lines through pairs
    for i in range(n):
        rel = u - u[i]
        ang = np.arctan2(rel[:, 1], rel[:, 0])
        others = np.delete(np.arange(n), i)
        a_o = np.mod(ang[others], 2 * np.pi)
        order = np.argsort(a_o, kind="stable")
        a_sorted = a_o[order]
        w_sorted = w[others][order]
        a2 = np.concatenate([a_sorted, a_sorted + 2 * np.pi])
        cw = np.concatenate([[0.0], np.cumsum(np.concatenate([w_sorted, w_sorted]))])
        best = max(best, _rotation_candidates(u[i], w[i], a2, cw, a_sorted, w_sorted, True))
        best = max(best, _rotation_candidates(u[i], w[i], a2, cw, _midpoint_angles(u[i], n_grid), None, False))
    # empty set / whole box give 0
    return float(best)


def _rotation_candidates(p, wp, a2, cw, thetas, w_on, through_pair):
    """Evaluate lines through p at directions thetas (in [0, pi))."""
    if len(thetas) == 0:
        return 0.0
    thetas = np.asarray(thetas)
    # open side to the left of direction theta: angles in (theta, theta + pi)
    def open_mass(start):
        lo_i = np.searchsorted(a2, start, side="right")
        hi_i = np.searchsorted(a2, start + np.pi, side="left")
        return cw[hi_i] - cw[lo_i]

    total_others = cw[len(a2) // 2]
    m_left = open_mass(thetas)
    n_ = np.stack([-np.sin(thetas), np.cos(thetas)], axis=1)  # left normal
    # left side {z: n.(z - p) >= 0}  <=>  -n.z <= -n.p
    area_left = 1.0 - _square_area_below(n_[:, 0], n_[:, 1], n_ @ p)
    on_w = np.zeros(len(thetas)) if w_on is None else w_on
    m_right = total_others - m_left - on_w
    best = 0.0
    for mass, area in ((m_left, area_left), (m_right, 1.0 - area_left)):
        top = mass + wp + on_w - area  # closed side with both atoms on the line
        bottom = mass - area  # atoms on the line pushed out
        best = max(best, float(np.max(np.abs(top))), float(np.max(np.abs(bottom))))
        if through_pair:
            best = max(best, float(np.max(np.abs(mass + wp - area))), float(np.max(np.abs(mass + on_w - area))))
    return best


def _chord_offsets(p, thetas):
    d = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    with np.errstate(divide="ignore"):
        t1 = np.where(np.abs(d) > 1e-15, (0.0 - p) / d, -np.inf)
        t2 = np.where(np.abs(d) > 1e-15, (1.0 - p) / d, np.inf)
    lo = np.minimum(t1, t2)
    hi = np.maximum(t1, t2)
    lo = np.where(np.abs(d) > 1e-15, lo, -np.inf).max(axis=1)
    hi = np.where(np.abs(d) > 1e-15, hi, np.inf).min(axis=1)
    return lo, hi


def _midpoint_angles(p, n_grid):
    grid = np.linspace(0.0, np.pi, n_grid + 1)
    lo, hi = _chord_offsets(p, grid)
    g = lo + hi
    exact = grid[g == 0.0]
    k = np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)
    a, b, ga = grid[k], grid[k + 1], g[k]
    for _ in range(60):
        mid = 0.5 * (a + b)
        gl, gh = _chord_offsets(p, mid)
        gm = gl + gh
        same = np.sign(gm) == np.sign(ga)
        a = np.where(same, mid, a)
        ga = np.where(same, gm, ga)
        b = np.where(same, b, mid)
    return np.mod(np.concatenate([exact, 0.5 * (a + b)]), np.pi)


def check_size(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise EngineLimitError(f"{what}: combined support {n} exceeds the exact limit {limit}")


def log_count(n: int, k: int) -> float:
    return math.log(max(1, math.comb(n, k)))
