"""Rate functions for empirical coordination on finite alphabets.

* ``coordination_rate``: inf I(Q) over Q with Q_X = P_X and
  ||Q - P_X x P_{Y|X}||_F <= Delta.
* ``wz_rate``: the side-information version, inf I(X;U) - I(Y;U) over kernels
  Q_{U|X} and decoders g(y, u), with ||Q_{g(Y,U),Y} - P_XY||_F <= Delta.
* ``multi_distortion_rate``: inf I(Q) subject to E_Q rho <= Delta_rho for a
  finite family of tabulated distortions.

F-balls of tabulated classes are polytopes, so every feasible set here is a
polytope and the convex programs are solved by away-step Frank-Wolfe whose
linear subproblems are LPs (or a closed-form knapsack for total variation).
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from .classes import (AllFunctions, Composed, ConvexHull, FunctionClass, IncompatibleClassError, class_from_json,
                      class_to_json)
from .information import JointPMF, joint_from_kernel, mutual_information
from .rng import stream

FEAS_TOL = 1e-9
LOG_FLOOR = -1000.0


class InfeasibleProblem(ValueError):
    pass


# ---------------------------------------------------------------------------
# problems


@dataclass(frozen=True, eq=False)
class CoordinationProblem:
    px: np.ndarray
    kernel: np.ndarray
    cls: FunctionClass = field(default_factory=AllFunctions)
    delta: float = 0.0

    def __post_init__(self):
        px = np.asarray(self.px, float)
        k = np.atleast_2d(np.asarray(self.kernel, float))
        if k.shape[0] != len(px):
            raise ValueError("kernel needs one row per source symbol")
        if np.any(k < 0) or np.any(np.abs(k.sum(axis=1) - 1) > 1e-9):
            raise ValueError("kernel rows must be probability vectors")
        if np.any(px < 0) or abs(px.sum() - 1) > 1e-12:
            raise ValueError("source PMF must sum to 1")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        object.__setattr__(self, "px", px)
        object.__setattr__(self, "kernel", k)

    @property
    def target(self) -> np.ndarray:
        return self.px[:, None] * self.kernel

    def with_delta(self, delta: float) -> "CoordinationProblem":
        return CoordinationProblem(self.px, self.kernel, self.cls, delta)

    def to_json(self) -> dict:
        return {"problem": "coordination", "px": self.px.tolist(), "kernel": self.kernel.tolist(),
                "class": class_to_json(self.cls), "delta": self.delta}


@dataclass(frozen=True, eq=False)
class SideInfoProblem:
    pxy: np.ndarray
    cls: FunctionClass = field(default_factory=AllFunctions)
    delta: float = 0.0
    u_size: int | None = None

    def __post_init__(self):
        t = np.asarray(self.pxy, float)
        JointPMF(t)
        if self.u_size is None or self.u_size < 1:
            raise ValueError("an auxiliary alphabet size |U| >= 1 is required")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        object.__setattr__(self, "pxy", t)

    def to_json(self) -> dict:
        return {"problem": "wz", "pxy": self.pxy.tolist(), "class": class_to_json(self.cls),
                "delta": self.delta, "u_size": self.u_size}


@dataclass(frozen=True, eq=False)
class MultiDistortionProblem:
    px: np.ndarray
    rhos: tuple
    levels: tuple

    def __post_init__(self):
        px = np.asarray(self.px, float)
        rhos = tuple(np.atleast_2d(np.asarray(r, float)) for r in self.rhos)
        if len(rhos) != len(self.levels) or not rhos:
            raise ValueError("need one level per distortion table")
        for r in rhos:
            if r.shape[0] != len(px) or np.any(r < 0) or np.any(r > 1):
                raise ValueError("distortions must be |X| x |Y| tables with entries in [0, 1]")
        if any(l < 0 for l in self.levels):
            raise ValueError("levels must be nonnegative")
        object.__setattr__(self, "px", px)
        object.__setattr__(self, "rhos", rhos)
        object.__setattr__(self, "levels", tuple(float(l) for l in self.levels))

    def to_json(self) -> dict:
        return {"problem": "multi", "px": self.px.tolist(), "rhos": [r.tolist() for r in self.rhos],
                "levels": list(self.levels)}


def problem_from_json(obj: dict):
    """Inverse of the problems' ``to_json``; ``problem`` defaults to coordination."""
    kind = obj.get("problem", "coordination")
    cls = class_from_json(obj["class"]) if obj.get("class") is not None else AllFunctions()
    if kind == "coordination":
        return CoordinationProblem(np.asarray(obj["px"], float), np.asarray(obj["kernel"], float), cls,
                                   float(obj.get("delta", 0.0)))
    if kind == "wz":
        return SideInfoProblem(np.asarray(obj["pxy"], float), cls, float(obj.get("delta", 0.0)),
                               None if obj.get("u_size") is None else int(obj["u_size"]))
    if kind == "multi":
        return MultiDistortionProblem(np.asarray(obj["px"], float), tuple(obj["rhos"]), tuple(obj["levels"]))
    raise ValueError(f"unknown problem {kind!r}")


# ---------------------------------------------------------------------------
# F-norms of signed tables


@dataclass(frozen=True, eq=False)
class TableNorm:
    """Polyhedral norm D -> ||agg @ vec(D)||, either L1 or max |tests @ .|."""

    shape: tuple
    agg: np.ndarray | None = None
    tests: np.ndarray | None = None

    def __call__(self, D: np.ndarray) -> float:
        return float(self.batch(np.asarray(D, float)[None])[0])

    def batch(self, D: np.ndarray) -> np.ndarray:
        """Norms of a stack of tables with shape (k, nx, ny)."""
        v = D.reshape(len(D), -1)
        if self.agg is not None:
            v = v @ self.agg.T
        if self.tests is None:
            return np.abs(v).sum(axis=1)
        return np.abs(v @ self.tests.T).max(axis=1)

    @property
    def is_plain_l1(self) -> bool:
        return self.agg is None and self.tests is None

    def matrix(self) -> np.ndarray:
        n = int(np.prod(self.shape))
        return np.eye(n) if self.agg is None else self.agg


def _tests_for(F: ConvexHull, symbols) -> np.ndarray:
    cols = [F.column(s) for s in symbols]
    return F.table[:, cols]


def table_norm(F: FunctionClass, shape: tuple) -> TableNorm:
    """The F-seminorm of signed tables over X x Y with symbols (x, y)."""
    nx, ny = shape
    cells = [(x, y) for x in range(nx) for y in range(ny)]
    if isinstance(F, AllFunctions):
        return TableNorm(shape)
    if isinstance(F, ConvexHull):
        return TableNorm(shape, None, _tests_for(F, cells))
    if isinstance(F, Composed):
        coords = F.coords
        if not set(coords) <= {0, 1}:
            raise IncompatibleClassError("projection coordinates must be 0 or 1")
        proj = [tuple(c[i] for i in coords) for c in cells]
        proj = [p[0] if len(p) == 1 else p for p in proj]
        keys = list(dict.fromkeys(proj))
        agg = np.zeros((len(keys), len(cells)))
        for j, p in enumerate(proj):
            agg[keys.index(p), j] = 1.0
        if isinstance(F.base, AllFunctions):
            return TableNorm(shape, agg)
        if isinstance(F.base, ConvexHull):
            return TableNorm(shape, agg, _tests_for(F.base, keys))
    raise IncompatibleClassError(f"no polyhedral table norm for {F!r}")


# ---------------------------------------------------------------------------
# polytopes and linear minimization


@dataclass
class Polytope:
    """{x >= 0 : A_eq x = b_eq, ||M x - target|| <= delta, A_ub x <= b_ub}."""

    A_eq: np.ndarray
    b_eq: np.ndarray
    M: np.ndarray | None = None
    target: np.ndarray | None = None
    norm: TableNorm | None = None
    delta: float = 0.0
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.A_eq.shape[1]

    def _lp(self, cost: np.ndarray):
        n = self.n
        rows, rhs = [], []
        n_aux = 0
        if self.norm is not None:
            G = self.norm.matrix() @ self.M  # (g, n)
            gt = self.norm.matrix() @ self.target
            if self.norm.tests is None:
                g = G.shape[0]
                n_aux = g
                I = np.eye(g)
                rows += [np.hstack([G, -I]), np.hstack([-G, -I]),
                         np.hstack([np.zeros((1, n)), np.ones((1, g))])]
                rhs += [gt, -gt, [self.delta]]
            else:
                T = self.norm.tests @ G
                tt = self.norm.tests @ gt
                rows += [T, -T]
                rhs += [self.delta + tt, self.delta - tt]
        if self.A_ub is not None:
            rows.append(self.A_ub)
            rhs.append(self.b_ub)
        rows = [np.hstack([r, np.zeros((r.shape[0], n_aux))]) if r.shape[1] == n else r for r in rows]
        A_ub = np.vstack(rows) if rows else None
        b_ub = np.concatenate([np.atleast_1d(r) for r in rhs]) if rows else None
        A_eq = np.hstack([self.A_eq, np.zeros((self.A_eq.shape[0], n_aux))])
        c = np.concatenate([cost, np.zeros(n_aux)])
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=self.b_eq,
                      bounds=[(0, None)] * (n + n_aux), method="highs")
        return res

    def lmo(self, grad: np.ndarray) -> np.ndarray:
        res = self._lp(grad)
        if res.status != 0:
            raise InfeasibleProblem(res.message)
        return np.maximum(res.x[: self.n], 0.0)

    def feasible_point(self) -> np.ndarray | None:
        res = self._lp(np.zeros(self.n))
        return np.maximum(res.x[: self.n], 0.0) if res.status == 0 else None

    def contains(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        if np.any(x < -tol) or np.any(np.abs(self.A_eq @ x - self.b_eq) > tol):
            return False
        if self.norm is not None and self.norm((self.M @ x - self.target).reshape(self.norm.shape)) > self.delta + tol:
            return False
        if self.A_ub is not None and np.any(self.A_ub @ x > self.b_ub + tol):
            return False
        return True


def _tv_knapsack_lmo(grad: np.ndarray, P: np.ndarray, delta: float) -> np.ndarray:
    """argmin <grad, Q> over {Q >= 0, rows of Q sum as in P, sum |Q - P| <= delta}.

    Moving mass m from cell (x, y) to the cheapest cell of row x costs 2m of the
    L1 budget and gains m (grad[x, y] - min_y grad[x, y]); greedy by gain is exact.
    """
    Q = P.copy()
    best = np.argmin(grad, axis=1)  # lowest index on ties
    gain = grad - grad[np.arange(len(grad)), best][:, None]
    budget = delta / 2.0
    order = np.argsort(-gain, axis=None, kind="stable")
    for flat in order:
        if budget <= 0:
            break
        x, y = divmod(int(flat), grad.shape[1])
        if gain[x, y] <= 0 or y == best[x]:
            continue
        m = min(P[x, y], budget)
        Q[x, y] -= m
        Q[x, best[x]] += m
        budget -= m
    return Q


# ---------------------------------------------------------------------------
# Frank-Wolfe


@dataclass
class FWResult:
    x: np.ndarray
    value: float
    gap: float
    iterations: int
    converged: bool


def frank_wolfe(f: Callable, grad: Callable, lmo: Callable, x0: np.ndarray,
                max_iter: int = 10_000, tol: float = 1e-6, away: bool = True) -> FWResult:
    """Away-step Frank-Wolfe with exact (bounded scalar) line search.

    The returned gap <grad, x - s> bounds f(x) - min f for convex f.
    """
    x = np.asarray(x0, float).copy()
    active = [(x.copy(), 1.0)]
    fx = f(x)
    gap = math.inf
    for it in range(1, max_iter + 1):
        g = grad(x)
        s = lmo(g)
        d_fw = s - x
        gap = float(-g @ d_fw)
        if gap <= tol:
            return FWResult(x, fx, max(gap, 0.0), it, True)
        step_away = False
        if away and len(active) > 1:
            k_away = int(np.argmax([g @ v for v, _ in active]))
            v, alpha = active[k_away]
            d_aw = x - v
            if float(-g @ d_aw) > gap and alpha < 1.0:
                step_away = True
        if step_away:
            d, gmax = d_aw, alpha / (1.0 - alpha)
        else:
            d, gmax = d_fw, 1.0
        phi = lambda t: f(x + t * d)
        r = minimize_scalar(phi, bounds=(0.0, gmax), method="bounded", options={"xatol": 1e-12})
        t, ft = float(r.x), float(r.fun)
        f_end = phi(gmax)
        if f_end <= ft:
            t, ft = gmax, f_end
        if ft > fx:  # no descent along d
            t, ft = 0.0, fx
        if t == 0.0 and not step_away:
            return FWResult(x, fx, max(gap, 0.0), it, gap <= tol)
        x = np.maximum(x + t * d, 0.0)
        fx = f(x)
        active = _update_active(active, s, t, step_away, k_away if step_away else None, gmax)
    return FWResult(x, fx, max(gap, 0.0), max_iter, gap <= tol)


def _update_active(active, s, t, step_away, k_away, gmax):
    if step_away:
        out = [(v, a * (1 + t)) for v, a in active]
        v, a = out[k_away]
        a -= t
        if t >= gmax - 1e-15 or a <= 1e-15:
            out.pop(k_away)
        else:
            out[k_away] = (v, a)
        return out
    out = [(v, a * (1 - t)) for v, a in active]
    for k, (v, a) in enumerate(out):
        if np.array_equal(v, s):
            out[k] = (v, a + t)
            break
    else:
        out.append((s.copy(), t))
    if t >= 1.0 - 1e-15:
        out = [(s.copy(), 1.0)]
    return [(v, a) for v, a in out if a > 1e-15]


# ---------------------------------------------------------------------------
# mutual information with a fixed source marginal


def _mi_table(Q: np.ndarray) -> float:
    Q = np.maximum(Q, 0.0)
    px = Q.sum(axis=1, keepdims=True)
    qy = Q.sum(axis=0, keepdims=True)
    mask = Q > 0
    return float(np.sum(Q[mask] * np.log2(Q[mask] / (px * qy)[mask])))


def _mi_grad(Q: np.ndarray, px: np.ndarray) -> np.ndarray:
    qy = Q.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.log2(Q) - np.log2(px[:, None] * qy[None, :])
        g = np.where(qy[None, :] > 0, g, -np.log2(np.where(px > 0, px, 1.0))[:, None])
    return np.clip(np.nan_to_num(g, nan=0.0, neginf=LOG_FLOOR), LOG_FLOOR, None)


@dataclass
class RateSolution:
    rate: float
    Q: np.ndarray
    gap: float
    iterations: int
    converged: bool
    feasible: bool = True

    def to_json(self) -> dict:
        return {"rate": self.rate, "Q": self.Q.tolist(), "gap": self.gap,
                "iterations": self.iterations, "converged": self.converged, "feasible": self.feasible}


def _row_constraints(px: np.ndarray, ny: int) -> tuple[np.ndarray, np.ndarray]:
    nx = len(px)
    A = np.kron(np.eye(nx), np.ones((1, ny)))
    return A, px.copy()


def _best_product(px: np.ndarray, ny: int, poly_for_q: Polytope) -> np.ndarray | None:
    q = poly_for_q.feasible_point()
    return None if q is None else px[:, None] * q[None, :] / q.sum()


def coordination_rate(p: CoordinationProblem, max_iter: int = 10_000, tol: float = 1e-6) -> RateSolution:
    """inf I(Q) over Q_X = P_X and ||Q - P_X x P_{Y|X}||_F <= Delta (bits)."""
    P = p.target
    nx, ny = P.shape
    norm = table_norm(p.cls, P.shape)
    # rate 0 whenever some product P_X x q is feasible; check P_X x P_Y first
    prod = p.px[:, None] * P.sum(axis=0)[None, :]
    if norm(prod - P) <= p.delta + FEAS_TOL:
        return RateSolution(0.0, prod, 0.0, 0, True)
    q_poly = Polytope(np.ones((1, ny)), np.ones(1), np.kron(p.px[:, None], np.eye(ny)),
                      P.ravel(), norm, p.delta)
    cand = _best_product(p.px, ny, q_poly)
    if cand is not None:
        return RateSolution(0.0, cand, 0.0, 0, True)

    if norm.is_plain_l1:
        lmo = lambda g: _tv_knapsack_lmo(g.reshape(nx, ny), P, p.delta).ravel()
    else:
        A, b = _row_constraints(p.px, ny)
        poly = Polytope(A, b, np.eye(nx * ny), P.ravel(), norm, p.delta)
        lmo = poly.lmo
    f = lambda q: _mi_table(q.reshape(nx, ny))
    grad = lambda q: _mi_grad(q.reshape(nx, ny), p.px).ravel()
    res = frank_wolfe(f, grad, lmo, P.ravel(), max_iter, tol)
    return RateSolution(max(res.value, 0.0), res.x.reshape(nx, ny), res.gap, res.iterations, res.converged)


@dataclass(frozen=True)
class CurveRow:
    delta: float
    rate: float
    gap: float
    iterations: int


def rate_curve(p: CoordinationProblem, deltas: Sequence[float], mono_tol: float = 1e-3,
               **kw) -> list[CurveRow]:
    """coordination_rate along an ascending grid; asserts the curve is nonincreasing."""
    deltas = [float(d) for d in deltas]
    if not deltas or any(b < a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta grid must be nonempty and ascending")
    rows = []
    for d in deltas:
        s = coordination_rate(p.with_delta(d), **kw)
        rows.append(CurveRow(d, s.rate, s.gap, s.iterations))
    for a, b in zip(rows, rows[1:]):
        if b.rate > a.rate + mono_tol:
            raise AssertionError(f"rate increased from {a.rate} to {b.rate} between {a.delta} and {b.delta}")
    return rows


def curve_to_csv(rows: Sequence[CurveRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delta", "rate", "solver_gap", "iterations"])
    for r in rows:
        w.writerow([repr(r.delta), repr(r.rate), repr(r.gap), r.iterations])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# several distortion constraints


def multi_distortion_rate(p: MultiDistortionProblem, max_iter: int = 10_000, tol: float = 1e-6) -> RateSolution:
    """inf I(Q) over Q_X = P_X and E_Q rho <= Delta_rho for every rho."""
    nx = len(p.px)
    ny = p.rhos[0].shape[1]
    R = np.vstack([r.ravel() for r in p.rhos])
    lv = np.asarray(p.levels)
    A, b = _row_constraints(p.px, ny)
    poly = Polytope(A, b, A_ub=R, b_ub=lv)
    start = poly.feasible_point()
    if start is None:
        return RateSolution(math.inf, np.full((nx, ny), np.nan), math.inf, 0, True, feasible=False)
    # product reproductions: E rho = sum_y q_y sum_x P_X(x) rho(x, y)
    avg = np.vstack([p.px @ r for r in p.rhos])
    qres = linprog(np.zeros(ny), A_ub=avg, b_ub=lv, A_eq=np.ones((1, ny)), b_eq=[1.0],
                   bounds=[(0, None)] * ny, method="highs")
    if qres.status == 0:
        q = np.maximum(qres.x, 0)
        return RateSolution(0.0, p.px[:, None] * q[None, :] / q.sum(), 0.0, 0, True)
    f = lambda q: _mi_table(q.reshape(nx, ny))
    grad = lambda q: _mi_grad(q.reshape(nx, ny), p.px).ravel()
    res = frank_wolfe(f, grad, poly.lmo, start, max_iter, tol)
    return RateSolution(max(res.value, 0.0), res.x.reshape(nx, ny), res.gap, res.iterations, res.converged)


# ---------------------------------------------------------------------------
# side information


@dataclass
class WZCandidate:
    g: np.ndarray
    feasible: bool
    value: float = math.inf
    kernel: np.ndarray | None = None


@dataclass
class WZSolution:
    rate: float
    kernel: np.ndarray | None
    g: np.ndarray | None
    feasible: bool
    upper_bound: bool = True  # best found over a nonconvex landscape
    per_g: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"rate": self.rate, "feasible": self.feasible, "upper_bound": self.upper_bound,
                "kernel": None if self.kernel is None else self.kernel.tolist(),
                "g": None if self.g is None else self.g.tolist(),
                "per_g": [{"g": c.g.tolist(), "feasible": c.feasible,
                           "value": c.value if c.feasible else None} for c in self.per_g]}


def wz_objective(pxy: np.ndarray, K: np.ndarray) -> float:
    """I(X;U) - I(Y;U) for Q(x, y, u) = P(x, y) K(u | x)."""
    px = pxy.sum(axis=1)
    qxu = px[:, None] * K
    qyu = pxy.T @ K
    return _mi_table(qxu) - _mi_table(qyu)


def _wz_grad(pxy: np.ndarray, K: np.ndarray) -> np.ndarray:
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    qyu = pxy.T @ K
    with np.errstate(divide="ignore", invalid="ignore"):
        logk = np.where(K > 0, np.log2(K), LOG_FLOOR)
        lratio = np.where(qyu > 0, np.log2(qyu / np.where(py > 0, py, 1.0)[:, None]), LOG_FLOOR)
    return px[:, None] * logk - pxy @ lratio


def wz_map_matrix(pxy: np.ndarray, g: np.ndarray, nu: int) -> np.ndarray:
    """Linear map vec(K) -> vec(Q_{W,Y}) for W = g(Y, U), K = Q_{U|X}."""
    nx, ny = pxy.shape
    M = np.zeros((nx * ny, nx * nu))
    for x in range(nx):
        for y in range(ny):
            for u in range(nu):
                w = int(g[y, u])
                M[w * ny + y, x * nu + u] += pxy[x, y]
    return M


def wz_rate(p: SideInfoProblem, restarts: int = 4, seed: int = 0, max_iter: int = 2000,
            tol: float = 1e-7) -> WZSolution:
    """Best-found I(X;U) - I(Y;U) over decoders g and kernels Q_{U|X} (an upper bound)."""
    pxy = p.pxy
    nx, ny = pxy.shape
    nu = p.u_size
    norm = table_norm(p.cls, (nx, ny))
    A_eq = np.kron(np.eye(nx), np.ones((1, nu)))
    b_eq = np.ones(nx)
    f = lambda k: wz_objective(pxy, k.reshape(nx, nu))
    grad = lambda k: _wz_grad(pxy, k.reshape(nx, nu)).ravel()
    best: WZCandidate | None = None
    per_g = []
    for gi, flat in enumerate(itertools.product(range(nx), repeat=ny * nu)):
        g = np.array(flat, dtype=int).reshape(ny, nu)
        poly = Polytope(A_eq, b_eq, wz_map_matrix(pxy, g, nu), pxy.ravel(), norm, p.delta)
        starts = []
        # deterministic kernels sending every x to one u
        for u in range(nu):
            k = np.zeros((nx, nu))
            k[:, u] = 1.0
            if poly.contains(k.ravel()):
                starts.append(k.ravel())
        x0 = poly.feasible_point()
        if x0 is None:
            per_g.append(WZCandidate(g, False))
            continue
        starts.append(x0)
        for r in range(restarts):
            rng = stream(seed, gi, r)
            starts.append(poly.lmo(rng.normal(size=nx * nu)))
        cand = WZCandidate(g, True)
        for s0 in starts:
            res = frank_wolfe(f, grad, poly.lmo, s0, max_iter, tol)
            if res.value < cand.value - 1e-12:
                cand.value, cand.kernel = res.value, res.x.reshape(nx, nu)
            if cand.value <= 1e-12:
                break
        per_g.append(cand)
        if best is None or cand.value < best.value - 1e-12:
            best = cand
    if best is None:
        return WZSolution(math.inf, None, None, False, True, per_g)
    return WZSolution(max(best.value, 0.0), best.kernel, best.g, True, True, per_g)
