"""VC-dimension probes, covering numbers and deviation-scaling diagnostics."""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classes import (Balls, ConvexHull, FunctionClass, HalfLines, Halfspaces, IncompatibleClassError,
                      Intervals, Rectangles, vc_dimension)
from .geometry import (ball_feasible, halfline_feasible, halfspace_feasible, interval_feasible,
                       rectangle_feasible)
from .measures import DiscreteMeasure
from .rng import stream
from .typicality import convergence_curve, summarize

MAX_SHATTER_POINTS = 20
EXACT_COVER_LIMIT = 16


def _as_array(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    return x.reshape(-1, 1) if x.ndim == 1 else x


def _class_dim(F: FunctionClass) -> int:
    return getattr(F, "dim", 1)


def _feasibility(F: FunctionClass):
    """Exact test 'some member picks out exactly the masked points'."""
    if isinstance(F, HalfLines):
        return lambda x, m: halfline_feasible(x, m, F.orientation)
    if isinstance(F, Intervals):
        return interval_feasible
    if isinstance(F, Halfspaces):
        return halfspace_feasible
    if isinstance(F, Balls):
        return ball_feasible
    if isinstance(F, Rectangles):
        return rectangle_feasible
    raise IncompatibleClassError(f"no exact labeling test for {F!r}")


def _labelings(k: int):
    for bits in range(1 << k):
        yield np.array([(bits >> i) & 1 for i in range(k)], dtype=bool)


@dataclass(frozen=True)
class ShatterResult:
    points: tuple
    cls: str
    shattered: bool
    achieved: int

    def to_json(self) -> dict:
        return {"points": [list(p) for p in self.points], "class": self.cls,
                "shattered": self.shattered, "achieved": self.achieved,
                "labelings": 2 ** len(self.points)}


def shatter_check(F: FunctionClass, points) -> ShatterResult:
    """Count the subsets of ``points`` that members of F pick out."""
    x = _as_array(points)
    if len(x) > MAX_SHATTER_POINTS:
        raise ValueError(f"at most {MAX_SHATTER_POINTS} points")
    if x.shape[1] != _class_dim(F):
        raise IncompatibleClassError("point dimension does not match the class")
    feasible = _feasibility(F)
    achieved = sum(1 for m in _labelings(len(x)) if feasible(x, m))
    pts = tuple(tuple(float(v) for v in row) for row in x)
    return ShatterResult(pts, F.id, achieved == 2 ** len(x), achieved)


def is_shattered(F: FunctionClass, points) -> bool:
    """Early-exit version of shatter_check: stops at the first impossible labeling.

    Balanced labelings go first since they are the usual obstructions.
    """
    x = _as_array(points)
    k = len(x)
    feasible = _feasibility(F)
    order = sorted(range(1 << k), key=lambda b: (abs(2 * bin(b).count("1") - k), b))
    masks = (np.array([(b >> i) & 1 for i in range(k)], dtype=bool) for b in order)
    return all(feasible(x, m) for m in masks)


def _structured_sets(F: FunctionClass, k: int) -> list[np.ndarray]:
    """Configurations known to be shattered at the classical dimension, plus near relatives."""
    d = _class_dim(F)
    out = []
    if d == 1:
        out.append(np.arange(k, dtype=float).reshape(-1, 1))
        return out
    # points on a circle (convex position), a simplex and the signed unit vectors
    ang = 2 * np.pi * np.arange(k) / k
    circle = np.zeros((k, d))
    circle[:, 0], circle[:, 1] = np.cos(ang), np.sin(ang)
    out.append(circle)
    if k == d + 1:
        out.append(np.vstack([np.zeros(d), np.eye(d)]))
    if k <= 2 * d:
        out.append(np.vstack([np.eye(d), -np.eye(d)])[:k])
    return out


@dataclass(frozen=True)
class VCProbe:
    lower_bound: int
    counterexample_evidence: int
    tested: int
    classical_dimension: int | None
    witness: tuple = ()

    def to_json(self) -> dict:
        return dict(self.__dict__, witness=[list(p) for p in self.witness])


def vc_probe(F: FunctionClass, budget: int = 10_000, seed: int = 0,
             evidence_sets: int = 1000) -> VCProbe:
    """Largest k with a found shattered k-set, and how many random (V+1)-sets fail to be shattered.

    Search order per k: structured configurations, then random points in the
    unit cube; each size gets an equal share of ``budget`` set evaluations. The evidence
    count is not a certificate: random sets say nothing about every set.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    d = _class_dim(F)
    v_classical = vc_dimension(F)
    k_max = (v_classical if v_classical is not None else 2 * d + 1) + 1
    rng = stream(seed, 0)
    per_size = max(1, budget // k_max)
    best, witness = 0, ()
    for k in range(1, k_max + 1):
        found = None
        spent = 0
        for x in _structured_sets(F, k):
            spent += 1
            if is_shattered(F, x):
                found = x
                break
        while found is None and spent < per_size:
            x = rng.random((k, d))
            spent += 1
            if is_shattered(F, x):
                found = x
        if found is None:
            break
        best, witness = k, tuple(tuple(float(v) for v in row) for row in found)
    unshattered = 0
    tested = 0
    if v_classical is not None:
        erng = stream(seed, 1)
        for _ in range(evidence_sets):
            tested += 1
            if not is_shattered(F, erng.random((v_classical + 1, d))):
                unshattered += 1
    return VCProbe(best, unshattered, tested, v_classical, witness)


# ---------------------------------------------------------------------------
# covering numbers


def tabulate(F: FunctionClass, Q: DiscreteMeasure) -> np.ndarray:
    """Rows are members' values on the support of Q.

    A convex hull is represented by its generating functions; half-lines on
    the line by one threshold per support point plus the empty and full sets.
    """
    if isinstance(F, ConvexHull):
        return np.array([[F.table[i, F.column(s)] for s in Q.support] for i in range(len(F.table))])
    if isinstance(F, HalfLines) and Q.dim == 1:
        z = np.asarray(Q.support, float).ravel()
        cuts = np.concatenate([[-np.inf], np.sort(z)])
        rows = []
        if F.orientation in ("left", "both"):
            rows += [(z <= t).astype(float) for t in cuts]
        if F.orientation in ("right", "both"):
            rows += [(z >= t).astype(float) for t in np.concatenate([np.sort(z), [np.inf]])]
        return np.unique(np.array(rows), axis=0)
    raise IncompatibleClassError(f"cannot tabulate {F!r}")


def l1_distances(table: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.abs(table[:, None, :] - table[None, :, :]) @ np.asarray(weights, float)


def _greedy_cover(close: np.ndarray) -> list[int]:
    uncovered = np.ones(len(close), bool)
    centers = []
    while uncovered.any():
        gain = (close & uncovered[None, :]).sum(axis=1)
        c = int(np.argmax(gain))
        centers.append(c)
        uncovered &= ~close[c]
    return centers


def _exact_cover(close: np.ndarray) -> int:
    n = len(close)
    masks = [int(sum(1 << j for j in np.flatnonzero(row))) for row in close]
    full = (1 << n) - 1
    for k in range(1, n + 1):
        for combo in itertools.combinations(range(n), k):
            acc = 0
            for i in combo:
                acc |= masks[i]
            if acc == full:
                return k
    return n


def covering_number(F, Q: DiscreteMeasure, eps: float, exact: bool | None = None) -> int:
    """Size of an eps-cover in L1(Q) with centers taken from the class.

    ``F`` is a FunctionClass that can be tabulated on Q's support, or an array
    of member values (one row per member). Greedy gives an upper bound; the
    exact minimum is computed by exhaustion when the class has at most 16
    members (``exact=None`` picks this automatically).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    table = np.asarray(F, float) if isinstance(F, np.ndarray) else tabulate(F, Q)
    close = l1_distances(table, Q.weights) <= eps + 1e-12
    if exact is None:
        exact = len(table) <= EXACT_COVER_LIMIT
    if exact:
        if len(table) > EXACT_COVER_LIMIT:
            raise ValueError(f"exact cover needs at most {EXACT_COVER_LIMIT} members")
        return _exact_cover(close)
    return len(_greedy_cover(close))


def packing_number(F, Q: DiscreteMeasure, eps: float) -> int:
    """Size of a maximal set of members pairwise more than eps apart (scanned in row order)."""
    table = np.asarray(F, float) if isinstance(F, np.ndarray) else tabulate(F, Q)
    dist = l1_distances(table, Q.weights)
    chosen: list[int] = []
    for i in range(len(table)):
        if all(dist[i, j] > eps + 1e-12 for j in chosen):
            chosen.append(i)
    return len(chosen)


# ---------------------------------------------------------------------------
# deviation scaling


@dataclass(frozen=True)
class ScalingRow:
    n: int
    mean: float
    mean_sqrt_n: float
    stderr: float
    tails: tuple = ()


@dataclass
class ScalingTable:
    rows: list
    cls: str
    model: str
    tail_eps: tuple = ()
    classical_dimension: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ns = [r.n for r in self.rows]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("n must be strictly increasing")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "mean", "mean_sqrt_n", "stderr"] + [f"tail_gt_{e!r}" for e in self.tail_eps])
        for r in self.rows:
            w.writerow([r.n, repr(r.mean), repr(r.mean_sqrt_n), repr(r.stderr)] + [repr(t) for t in r.tails])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"class": self.cls, "model": self.model, "classical_dimension": self.classical_dimension,
                "tail_eps": list(self.tail_eps),
                "rows": [dict(r.__dict__, tails=list(r.tails)) for r in self.rows]}


def deviation_scaling(F: FunctionClass, model, n_grid: Sequence[int], trials: int, seed: int,
                      tail_eps: Sequence[float] = (), threads: int | None = None) -> ScalingTable:
    """Monte Carlo mean deviation per n with the mean * sqrt(n) column.

    Tail columns hold raw frequencies of deviation > eps; no constant is fitted.
    """
    if vc_dimension(F) is None:
        raise IncompatibleClassError("scaling needs a class of known VC dimension")
    records = convergence_curve(model, F, list(n_grid), trials, seed, threads)
    rows = []
    for s in summarize(records):
        devs = np.array([r.deviation for r in records if r.n == s.n])
        tails = tuple(float(np.mean(devs > e)) for e in tail_eps)
        rows.append(ScalingRow(s.n, s.mean, s.mean * math.sqrt(s.n), s.stderr, tails))
    return ScalingTable(rows, F.id, records[0].model, tuple(float(e) for e in tail_eps), vc_dimension(F),
                        {"trials": trials, "seed": seed})
