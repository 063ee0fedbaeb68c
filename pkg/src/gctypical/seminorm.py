"""The seminorm sup_{f in F} |nu(f)| for nu = lhs - rhs.

``seminorm`` returns the number; ``sup_result`` also says whether the value is
exact and, against reference samples, carries a sampling-error bound.
``brute_force_sup`` is an independent oracle for indicator classes: it walks
subset sums in decreasing |value| and stops at the first labeling the class
can realize.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .classes import (AllFunctions, Balls, BoundedLipschitz, Composed, ConvexHull,
                      FunctionClass, HalfLines, Halfspaces, IncompatibleClassError,
                      Intervals, Rectangles, VoronoiCells, vc_dimension)
from .measures import (FINITE, VECTOR, DiscreteMeasure, ModelMeasure, SignedDifference,
                       merge)

BRUTE_FORCE_LIMIT = 22
CERT_TOL = 1e-9


@dataclass(frozen=True)
class SupResult:
    value: float
    exact: bool = True
    error_bound: float = 0.0
    method: str = ""


def _split(lhs, rhs):
    if isinstance(lhs, SignedDifference):
        return lhs.lhs, lhs.rhs
    if rhs is None:
        raise TypeError("need a SignedDifference or both measures")
    SignedDifference(lhs, rhs)  # validates kinds and dimensions
    return lhs, rhs


def seminorm(F: FunctionClass, lhs, rhs=None) -> float:
    """sup_{f in F} |lhs(f) - rhs(f)|; ``lhs`` may be a SignedDifference."""
    return sup_result(F, lhs, rhs).value


def sup_result(F: FunctionClass, lhs, rhs=None) -> SupResult:
    p, q = _split(lhs, rhs)
    if isinstance(F, Composed):
        p = p.project(F.coords)
        q = q.project(F.coords)
        return sup_result(F.base, p, q)
    if isinstance(q, ModelMeasure):
        if q.kind == "pmf":
            q = q.measure
        elif q.kind == "box":
            return _against_box(F, p, q)
        else:
            return _against_reference(F, p, q)
    F.check_points(p.kind, p.dim)
    points, c = merge(p, q)
    return _discrete(F, points, c)


def _against_reference(F, p: DiscreteMeasure, q: ModelMeasure) -> SupResult:
    if isinstance(F, AllFunctions) and q.nonatomic:
        return SupResult(2.0, True, 0.0, "nonatomic")
    F.check_points(p.kind, p.dim)
    points, c = merge(p, q.measure)
    r = _discrete(F, points, c)
    v = vc_dimension(F)
    if v is None:
        v = len(points) if isinstance(F, AllFunctions) else 1
    bound = math.sqrt(v / q.measure.size)
    return SupResult(r.value, False, bound, r.method + "+reference")


def _against_box(F, p: DiscreteMeasure, q: ModelMeasure) -> SupResult:
    if isinstance(F, AllFunctions):
        return SupResult(2.0, True, 0.0, "nonatomic")
    F.check_points(p.kind, p.dim)
    if p.kind != VECTOR:
        raise IncompatibleClassError("a box model needs vector points")
    x, w = p.support, p.weights
    lo, hi = q.low, q.high
    if q.dim == 1:
        x1 = x[:, 0]
        if isinstance(F, HalfLines) or isinstance(F, Halfspaces) or (
                isinstance(F, VoronoiCells) and F.m == 2):
            orient = F.orientation if isinstance(F, HalfLines) else "both"
            return SupResult(geo.box_halfline_sup(x1, w, lo[0], hi[0], orient), True, 0.0, "cdf")
        if isinstance(F, (Intervals, Rectangles, Balls)) or (isinstance(F, VoronoiCells) and F.m >= 3):
            return SupResult(geo.box_interval_sup(x1, w, lo[0], hi[0]), True, 0.0, "cdf")
        if isinstance(F, VoronoiCells):
            return SupResult(0.0, True, 0.0, "trivial")
    if q.dim == 2 and isinstance(F, Halfspaces):
        return SupResult(geo.box_halfplane_sup(x, w, lo, hi), True, 0.0, "halfplane-sweep")
    raise IncompatibleClassError(
        f"no exact engine for {type(F).__name__} against a box in dimension {q.dim}; "
        "use a reference-sample model")


def _discrete(F, points, c) -> SupResult:
    if isinstance(F, AllFunctions):
        return SupResult(float(np.abs(c).sum()), True, 0.0, "total-variation")
    if isinstance(F, ConvexHull):
        cols = [F.column(s) for s in points]
        vals = F.table[:, cols] @ c
        return SupResult(float(np.abs(vals).max()), True, 0.0, "vertex")
    if isinstance(F, BoundedLipschitz):
        value, _ = bounded_lipschitz_lp(points, c, F.norm)
        return SupResult(value, True, 0.0, "lp")
    x = np.asarray(points, dtype=float)
    n = len(x)
    d = x.shape[1]
    if isinstance(F, HalfLines):
        hi, lo = geo.halfline_extremes(x, c, F.orientation)
        return SupResult(max(hi, -lo), True, 0.0, "threshold")
    if isinstance(F, Intervals):
        hi, lo = geo.interval_extremes(x, c)
        return SupResult(max(hi, -lo), True, 0.0, "kadane")
    if isinstance(F, VoronoiCells):
        return _voronoi(F, x, c)
    if isinstance(F, (Halfspaces, Balls, Rectangles)):
        if d > geo.MAX_DIM:
            raise geo.EngineLimitError(f"exact engines stop at dimension {geo.MAX_DIM}")
        limit = geo.MAX_EXACT_SUPPORT
        if d == 3 and isinstance(F, Balls):
            limit = geo.MAX_BALLS_3D
        if d == 3 and isinstance(F, Rectangles):
            limit = geo.MAX_RECT_3D
        geo.check_size(n, limit, type(F).__name__)
        engine = {Halfspaces: geo.halfspace_extremes, Balls: geo.ball_extremes,
                  Rectangles: geo.rectangle_extremes}[type(F)]
        hi, lo = engine(x, c)
        return SupResult(max(hi, -lo), True, 0.0, engine.__name__)
    raise IncompatibleClassError(f"no engine for {F!r}")


def _voronoi(F: VoronoiCells, x, c) -> SupResult:
    if F.m == 1:
        return SupResult(abs(float(c.sum())), True, 0.0, "whole-space")
    if F.dim == 1:
        if F.m == 2:
            hi, lo = geo.halfline_extremes(x, c, "both")
        else:
            hi, lo = geo.interval_extremes(x, c)
        return SupResult(max(hi, -lo), True, 0.0, "voronoi-1d")
    geo.check_size(len(x), geo.MAX_EXACT_SUPPORT, "VoronoiCells")
    hi, lo = geo.halfspace_extremes(x, c)
    if F.m == 2:
        return SupResult(max(hi, -lo), True, 0.0, "bisector")
    h2, l2 = geo.voronoi_search(x, c, F.m)
    return SupResult(max(hi, -lo, h2, -l2), False, 0.0, "site-search-lower-bound")


# ---------------------------------------------------------------------------
# bounded Lipschitz linear program


def bounded_lipschitz_lp(points, c, norm: str = "sum") -> tuple[float, np.ndarray]:
    """max sum_i c_i f_i over the bounded Lipschitz ball restricted to the points.

    Variables (f, a, L): |f_i| <= a, |f_i - f_j| <= L |z_i - z_j|, and either
    a + L <= 1 (``"sum"``) or a <= 1, L <= 1 (``"max"``). Any feasible table
    extends to the whole space with the same bound and constant, so the LP
    value is the seminorm. Optimality is certified by the duality gap.
    """
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix, vstack

    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    c = np.asarray(c, dtype=float)
    n = len(c)
    nv = n + 2
    ia, il = n, n + 1
    rows = []
    # f_i - a <= 0 and -f_i - a <= 0
    r = np.arange(n)
    rows.append(coo_matrix((np.r_[np.ones(n), -np.ones(n)], (np.r_[r, r], np.r_[r, np.full(n, ia)])), shape=(n, nv)))
    rows.append(coo_matrix((np.r_[-np.ones(n), -np.ones(n)], (np.r_[r, r], np.r_[r, np.full(n, ia)])), shape=(n, nv)))
    b = [np.zeros(n), np.zeros(n)]
    if n > 1:
        ii, jj = np.where(~np.eye(n, dtype=bool))
        dist = np.linalg.norm(x[ii] - x[jj], axis=1)
        m = len(ii)
        k = np.arange(m)
        rows.append(coo_matrix((np.r_[np.ones(m), -np.ones(m), -dist], (np.r_[k, k, k], np.r_[ii, jj, np.full(m, il)])),
                               shape=(m, nv)))
        b.append(np.zeros(m))
    if norm == "sum":
        rows.append(coo_matrix(([1.0, 1.0], ([0, 0], [ia, il])), shape=(1, nv)))
        b.append(np.ones(1))
        bounds = [(None, None)] * n + [(0, None), (0, None)]
    elif norm == "max":
        bounds = [(None, None)] * n + [(0, 1), (0, 1)]
    else:
        raise ValueError("norm must be 'sum' or 'max'")
    A = vstack(rows).tocsr()
    bub = np.concatenate(b)
    cost = np.r_[-c, 0.0, 0.0]
    res = linprog(cost, A_ub=A, b_ub=bub, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(f"bounded Lipschitz LP failed: {res.message}")
    primal = float(res.fun)
    dual = float(bub @ res.ineqlin.marginals)
    for (lo, hi), ml, mu in zip(bounds, res.lower.marginals, res.upper.marginals):
        if lo is not None:
            dual += lo * ml
        if hi is not None:
            dual += hi * mu
    resid = float(np.max(A @ res.x - bub, initial=0.0))
    if abs(primal - dual) > CERT_TOL or resid > CERT_TOL:
        raise RuntimeError(f"LP certificate failed: gap {abs(primal - dual):.2e}, residual {resid:.2e}")
    return -primal, res.x[:n]


# ---------------------------------------------------------------------------
# brute-force oracle


def _feasibility(F: FunctionClass, x: np.ndarray):
    if isinstance(F, HalfLines):
        return lambda m: geo.halfline_feasible(x, m, F.orientation)
    if isinstance(F, Intervals) or (isinstance(F, (Rectangles, Balls)) and x.shape[1] == 1):
        return lambda m: geo.interval_feasible(x, m)
    if isinstance(F, Rectangles):
        return lambda m: geo.rectangle_feasible(x, m)
    if isinstance(F, Halfspaces):
        return lambda m: geo.halfspace_feasible(x, m)
    if isinstance(F, Balls):
        return lambda m: geo.ball_feasible(x, m)
    if isinstance(F, VoronoiCells) and F.m == 2:
        return lambda m: geo.halfspace_feasible(x, m)
    raise IncompatibleClassError(f"brute force needs an indicator class with an exact feasibility test, got {F!r}")


def brute_force_sup(F: FunctionClass, lhs, rhs=None) -> float:
    """max |nu(A)| over labelings A of the combined support realizable by F."""
    p, q = _split(lhs, rhs)
    if isinstance(F, Composed):
        return brute_force_sup(F.base, p.project(F.coords), q.project(F.coords))
    if isinstance(q, ModelMeasure):
        if q.kind != "pmf":
            raise IncompatibleClassError("brute force needs two discrete measures")
        q = q.measure
    if not F.indicator:
        raise IncompatibleClassError("brute force needs an indicator class")
    F.check_points(p.kind, p.dim)
    points, c = merge(p, q)
    x = np.asarray(points, dtype=float)
    n = len(c)
    if n > BRUTE_FORCE_LIMIT:
        raise geo.EngineLimitError(f"brute force limited to {BRUTE_FORCE_LIMIT} points, got {n}")
    feasible = _feasibility(F, x)
    sums = np.zeros(1)
    for ci in c:  # bit i of the subset index selects point i
        sums = np.concatenate([sums, sums + ci])
    order = np.argsort(-np.abs(sums), kind="stable")
    bits = 1 << np.arange(n)
    for s in order:
        mask = (s & bits) != 0
        if feasible(mask):
            return float(abs(sums[s]))
    return 0.0
