"""Typical-set membership, i.i.d. sampling, convergence runs, projections and
seminorm-driven quantizer design."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .classes import (AllFunctions, Composed, ConvexHull, FunctionClass, HalfLines,
                      Halfspaces, Intervals, Rectangles)
from .measures import (FINITE, VECTOR, DiscreteMeasure, ModelMeasure, as_model, as_points,
                       empirical_measure, from_weighted_points, unique_rows)
from .rng import ordered_map, stream
from .seminorm import seminorm


@dataclass(frozen=True, eq=False)
class TypicalityQuery:
    points: Any
    model: DiscreteMeasure | ModelMeasure
    cls: FunctionClass
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if len(self.points) == 0:
            raise ValueError("empty tuple")


@dataclass(frozen=True)
class TypicalityResult:
    typical: bool
    deviation: float


def deviation(points, model, F: FunctionClass) -> float:
    """||P_{z^n} - P||_F."""
    return seminorm(F, empirical_measure(points), as_model(model))


def is_typical(q: TypicalityQuery | Any, model=None, F=None, epsilon=None) -> TypicalityResult:
    """Membership in the epsilon-typical set; strict inequality deviation < epsilon."""
    if not isinstance(q, TypicalityQuery):
        q = TypicalityQuery(q, model, F, epsilon)
    dev = deviation(q.points, q.model, q.cls)
    return TypicalityResult(dev < q.epsilon, dev)


# ---------------------------------------------------------------------------
# sampling


def sample_iid(model: DiscreteMeasure | ModelMeasure, n: int, seed) -> Any:
    """n i.i.d. draws. Finite models give a tuple of symbols, vector models an (n, d) array."""
    if n < 1:
        raise ValueError("n must be positive")
    model = as_model(model)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if model.kind == "box":
        return model.low + (model.high - model.low) * rng.random((n, len(model.low)))
    if model.kind != "pmf":
        raise ValueError("only finite PMFs and product-uniform boxes can be sampled")
    mu = model.measure
    idx = rng.choice(mu.size, size=n, p=mu.weights)
    if mu.kind == VECTOR:
        return mu.support[idx]
    return tuple(mu.support[i] for i in idx)


# ---------------------------------------------------------------------------
# convergence runs


@dataclass(frozen=True)
class DeviationRecord:
    cls: str
    model: str
    n: int
    trial: int
    deviation: float

    def __post_init__(self):
        if self.deviation < 0:
            raise ValueError("deviation must be nonnegative")


def _model_id(model) -> str:
    return as_model(model).name


def convergence_curve(model, F: FunctionClass, n_grid: Sequence[int], trials: int, seed: int,
                      threads: int | None = None) -> list[DeviationRecord]:
    """trials x len(n_grid) deviations; trial t at grid index k uses stream (seed, t, k)."""
    if trials < 1 or any(n < 1 for n in n_grid):
        raise ValueError("need trials >= 1 and every n >= 1")
    model = as_model(model)
    cid, mid = F.id, _model_id(model)
    tasks = [(k, n, t) for k, n in enumerate(n_grid) for t in range(trials)]

    def run(task):
        k, n, t = task
        z = sample_iid(model, n, stream(seed, t, k))
        return DeviationRecord(cid, mid, int(n), t, deviation(z, model, F))

    return ordered_map(run, tasks, threads)


@dataclass(frozen=True)
class CurveSummary:
    n: int
    mean: float
    std: float
    q10: float
    q50: float
    q90: float
    trials: int

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.trials)


def summarize(records: Sequence[DeviationRecord]) -> list[CurveSummary]:
    out = []
    for n in sorted({r.n for r in records}):
        v = np.array([r.deviation for r in records if r.n == n])
        q10, q50, q90 = np.quantile(v, [0.1, 0.5, 0.9])
        out.append(CurveSummary(n, float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0,
                                float(q10), float(q50), float(q90), len(v)))
    return out


def records_to_csv(records: Sequence[DeviationRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "model", "n", "trial", "deviation"])
    for r in records:
        w.writerow([r.cls, r.model, r.n, r.trial, repr(r.deviation)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# projections


def _embeds(F: FunctionClass, F_X: FunctionClass, x_coords: tuple, joint_dim: int | None) -> bool:
    """Structural check that {f o pi_X : f in F_X} is contained in F."""
    if isinstance(F, AllFunctions):
        return True
    if isinstance(F, Composed):
        return F.base == F_X and F.coords == x_coords
    if isinstance(F, Halfspaces):
        # {<w, x> + b >= 0} is the joint halfspace with normal (w, 0)
        if isinstance(F_X, Halfspaces):
            return F_X.dim == len(x_coords)
        return isinstance(F_X, HalfLines) and len(x_coords) == 1
    if isinstance(F, Rectangles):
        # boxes with unbounded sides along the other coordinates
        if isinstance(F_X, Rectangles):
            return F_X.dim == len(x_coords)
        return isinstance(F_X, (HalfLines, Intervals)) and len(x_coords) == 1
    if isinstance(F, ConvexHull) and isinstance(F_X, ConvexHull):
        # every base function of F_X, lifted, must be a (signed) base function of F
        lifted = []
        for row in F_X.table:
            vals = []
            for sym in F.alphabet:
                sub = tuple(sym[c] for c in x_coords)
                vals.append(row[F_X.column(sub[0] if len(sub) == 1 else sub)])
            lifted.append(np.array(vals))
        return all(any(np.array_equal(v, r) or np.array_equal(-v, r) for r in F.table) for v in lifted)
    return False


def project_typical(points, model, F: FunctionClass, F_X: FunctionClass, epsilon: float,
                    x_coords: Sequence[int] = (0,)) -> dict:
    """Joint and marginal typicality of a tuple over X x Y.

    Only descriptor pairs with a structural embedding of F_X o pi_X into F are
    accepted, so joint typicality provably implies marginal typicality.
    """
    x_coords = tuple(int(c) for c in x_coords)
    model = as_model(model)
    joint_mu = empirical_measure(points)
    if not _embeds(F, F_X, x_coords, joint_mu.dim):
        raise ValueError(f"cannot verify that {F_X!r} composed with the projection lies in {F!r}")
    dj = seminorm(F, joint_mu, model)
    dm = seminorm(F_X, joint_mu.project(x_coords), model.project(x_coords))
    return {"joint": dj < epsilon, "marginal": dm < epsilon,
            "joint_deviation": dj, "marginal_deviation": dm}


# ---------------------------------------------------------------------------
# quantizers


@dataclass(frozen=True, eq=False)
class Quantizer:
    """Maps X-values to codepoints.

    ``rule="nearest"``: Euclidean nearest codepoint, lowest index on ties.
    ``rule="table"``: explicit map from finite X-symbols to codepoint indices.
    """

    codepoints: tuple
    rule: str = "nearest"
    table: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(map(_key, self.codepoints))) != len(self.codepoints):
            raise ValueError("codepoints must be distinct")

    def index(self, x) -> int:
        if self.rule == "table":
            return self.table[x]
        cp = np.asarray(self.codepoints, dtype=float).reshape(len(self.codepoints), -1)
        d2 = np.sum((cp - np.atleast_1d(np.asarray(x, float))) ** 2, axis=1)
        return int(np.argmin(d2))

    def __call__(self, x):
        return self.codepoints[self.index(x)]

    def to_json(self) -> dict:
        cps = [list(c) if isinstance(c, tuple) else c for c in self.codepoints]
        out = {"rule": self.rule, "codepoints": cps}
        if self.rule == "table":
            out["table"] = [[list(k) if isinstance(k, tuple) else k, v] for k, v in self.table.items()]
        return out


def _key(c):
    return tuple(np.atleast_1d(c).tolist()) if isinstance(c, np.ndarray) else c


class _QuantizerProblem:
    """Shared bookkeeping for evaluating mu_{q(X), Y} against mu."""

    def __init__(self, mu: DiscreteMeasure, F: FunctionClass, x_coords):
        self.mu, self.F = mu, F
        if mu.kind == VECTOR:
            d = mu.dim
            self.xc = list(range(d)) if x_coords is None else list(x_coords)
            self.yc = [j for j in range(d) if j not in self.xc]
            xs = mu.support[:, self.xc]
            self.atoms, self.inv = unique_rows(xs)
        else:
            self.xc = None if x_coords is None else list(x_coords)
            xs = [self._x_of(s) for s in mu.support]
            self.atoms = list(dict.fromkeys(xs))
            pos = {a: k for k, a in enumerate(self.atoms)}
            self.inv = np.array([pos[x] for x in xs])
        self.n_atoms = len(self.atoms)
        self._cell_cache: dict = {}
        self.atom_w = np.bincount(self.inv, weights=mu.weights, minlength=self.n_atoms)

    def _x_of(self, s):
        if self.xc is None:
            return s
        sub = tuple(s[c] for c in self.xc)
        return sub[0] if len(sub) == 1 else sub

    def nearest(self, cps: list[int]) -> np.ndarray:
        cps = sorted(cps)  # same tie-break as Quantizer.index
        a = self.atoms
        d2 = np.sum((a[:, None, :] - a[cps][None]) ** 2, axis=2)
        return np.asarray(cps)[np.argmin(d2, axis=1)]

    def delta(self, assign: np.ndarray) -> float:
        """Deviation when atom k is sent to atom assign[k]."""
        every = np.ones(len(self.mu.weights), bool)
        q = from_weighted_points(self.mu.kind, self._moved(assign, every), self.mu.weights)
        return seminorm(self.F, q, self.mu)

    def _moved(self, assign: np.ndarray, sel: np.ndarray):
        """Support points with their X part replaced by assigned codepoints (rows in sel)."""
        src = assign[self.inv[sel]]
        mu = self.mu
        if mu.kind == VECTOR:
            pts = mu.support[sel].copy()
            pts[:, self.xc] = self.atoms[src]
            return pts
        pts = []
        for s, a in zip((mu.support[i] for i in np.flatnonzero(sel)), src):
            if self.xc is None:
                pts.append(self.atoms[a])
                continue
            lst = list(s)
            xa = self.atoms[a]
            xa = xa if isinstance(xa, tuple) and len(self.xc) > 1 else (xa,)
            for c, v in zip(self.xc, xa):
                lst[c] = v
            pts.append(tuple(lst))
        return pts

    def cell_deviations(self, assign: np.ndarray) -> tuple[float, ...]:
        """Deviation contributed by each codepoint's cell alone, largest first."""
        out = []
        cell_of_row = assign[self.inv]
        for j in np.unique(assign):
            sel = cell_of_row == j
            key = (int(j), np.packbits(assign == j).tobytes())
            if key in self._cell_cache:
                out.append(self._cell_cache[key])
                continue
            mass = float(self.mu.weights[sel].sum())
            if mass == 0 or np.all(self.inv[sel] == j):
                out.append(0.0)
                continue
            w = self.mu.weights[sel] / mass
            if self.mu.kind == VECTOR:
                orig = self.mu.support[sel]
            else:
                orig = [self.mu.support[i] for i in np.flatnonzero(sel)]
            a = from_weighted_points(self.mu.kind, self._moved(assign, sel), w)
            b = from_weighted_points(self.mu.kind, orig, w)
            out.append(mass * seminorm(self.F, a, b))
            self._cell_cache[key] = out[-1]
        return tuple(sorted(out, reverse=True))

    def distortion(self, assign: np.ndarray) -> float:
        if self.mu.kind == VECTOR:
            gap = np.sum((self.atoms - self.atoms[assign]) ** 2, axis=1)
        else:
            gap = (assign != np.arange(self.n_atoms)).astype(float)
        return float(self.atom_w @ gap)

    def score(self, assign: np.ndarray) -> tuple:
        return (self.delta(assign), self.cell_deviations(assign), self.distortion(assign))

    def assignment(self, cps: list[int]) -> tuple[np.ndarray, tuple[float, float]]:
        if self.mu.kind == VECTOR:
            a = self.nearest(cps)
            return a, self.score(a)
        return self._table_descent(cps)

    def _table_descent(self, cps: list[int]):
        cset = set(cps)
        assign = np.array([k if k in cset else min(cps) for k in range(self.n_atoms)])
        best = self.score(assign)
        for _ in range(20):
            improved = False
            for k in range(self.n_atoms):
                if k in cset:
                    continue
                for j in sorted(cps):
                    if j == assign[k]:
                        continue
                    trial = assign.copy()
                    trial[k] = j
                    v = self.score(trial)
                    if _better(v, best):
                        best, assign, improved = v, trial, True
            if not improved:
                break
        return assign, best

    def lloyd(self, cps: list[int], iters: int = 50) -> list[int]:
        """Weighted k-means on the X atoms from the given codepoints, snapped to atoms."""
        cps = sorted(cps)
        for _ in range(iters):
            assign = self.nearest(cps)
            nxt = []
            for j in cps:
                cell = assign == j
                centre = self.atom_w[cell] @ self.atoms[cell] / self.atom_w[cell].sum()
                k = int(np.argmin(np.sum((self.atoms - centre) ** 2, axis=1)))
                nxt.append(k)
            nxt = sorted(set(nxt))
            if nxt == cps or len(nxt) < len(cps):
                break
            cps = nxt
        return cps

    def quantile_start(self, k: int) -> list[int]:
        """Atoms at the mid-quantiles (2j - 1) / 2k of a one-dimensional X marginal."""
        cum = np.cumsum(self.atom_w)
        idx = np.searchsorted(cum, (2 * np.arange(1, k + 1) - 1) / (2 * k))
        return sorted(set(np.minimum(idx, self.n_atoms - 1).tolist()))

    def neighbours(self, j: int, cand: list[int], window: int) -> list[int]:
        if self.mu.kind != VECTOR or len(cand) <= window:
            return cand
        d2 = np.sum((self.atoms[cand] - self.atoms[j]) ** 2, axis=1)
        return [cand[i] for i in np.argsort(d2, kind="stable")[:window]]


def _better(a: tuple, b: tuple, tol: float = 1e-15) -> bool:
    """Lexicographic: deviation, then per-cell deviations (leximax), then distortion."""
    if a[0] < b[0] - tol:
        return True
    if a[0] > b[0] + tol:
        return False
    for u, v in zip(a[1], b[1]):
        if u < v - tol:
            return True
        if u > v + tol:
            return False
    if len(a[1]) != len(b[1]):
        return len(a[1]) < len(b[1])
    return a[2] < b[2] - tol


def _swap_refine(prob, cps, assign, sc, cand, window, passes):
    for _ in range(passes):
        improved = False
        for pos in range(len(cps)):
            for c in prob.neighbours(cps[pos], cand, window):
                if c in cps:
                    continue
                trial = cps[:pos] + [c] + cps[pos + 1:]
                a, v = prob.assignment(trial)
                if _better(v, sc):
                    sc, cps, assign, improved = v, trial, a, True
        if not improved:
            break
    return cps, assign, sc


def _candidates(n_atoms: int, cap: int) -> list[int]:
    if n_atoms <= cap:
        return list(range(n_atoms))
    stride = n_atoms / cap
    return sorted({int(stride * (k + 0.5)) for k in range(cap)})


def quantizer_path(mu: DiscreteMeasure, F: FunctionClass, m: int, x_coords=None,
                   candidate_cap: int = 128, swap_window: int = 8,
                   swap_passes: int = 2) -> list[tuple[Quantizer, float]]:
    """Quantizers for 1..m codepoints, each no worse than its predecessor.

    Greedy insertion from the support atoms (at most ``candidate_cap`` of them,
    evenly strided), then swaps of each codepoint with its ``swap_window``
    nearest candidates. Scores compare the deviation first and the moved
    distortion second. A step that fails to improve keeps the previous codebook.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    prob = _QuantizerProblem(mu, F, x_coords)
    cand = _candidates(prob.n_atoms, candidate_cap)
    path = []
    cur: list[int] = []
    best = None
    for k in range(1, m + 1):
        if k > prob.n_atoms:
            path.append(path[-1])
            continue
        if prob.n_atoms == k:
            cps = list(range(prob.n_atoms))
            assign, sc = prob.assignment(cps)
        else:
            sc, cps, assign = (math.inf, (), math.inf), None, None
            for c in cand:
                if c in cur:
                    continue
                a, v = prob.assignment(cur + [c])
                if _better(v, sc):
                    sc, cps, assign = v, cur + [c], a
            if cps is None:  # every candidate already used
                cps = cur + [next(j for j in range(prob.n_atoms) if j not in cur)]
                assign, sc = prob.assignment(cps)
            starts = [(cps, assign, sc)]
            if prob.mu.kind == VECTOR:
                extra = [prob.lloyd(cps)]
                if prob.atoms.shape[1] == 1:
                    extra.append(prob.quantile_start(k))
                for ec in extra:
                    if len(ec) == k and all(sorted(ec) != sorted(st[0]) for st in starts):
                        ea, esc = prob.assignment(ec)
                        starts.append((ec, ea, esc))
            refined = [_swap_refine(prob, *st, cand, swap_window, swap_passes) for st in starts]
            cps, assign, sc = refined[0]
            for r in refined[1:]:
                if _better(r[2], sc):
                    cps, assign, sc = r
        cur = cps
        if best is None or sc[0] < best[0][0]:
            best = (sc, list(cps), assign)
        path.append((_make_quantizer(prob, best[1], best[2]), float(best[0][0])))
    return path


def _make_quantizer(prob: _QuantizerProblem, cps: list[int], assign: np.ndarray) -> Quantizer:
    order = sorted(cps)
    if prob.mu.kind == VECTOR:
        pts = tuple(tuple(prob.atoms[c].tolist()) for c in order)
        if prob.atoms.shape[1] == 1:
            pts = tuple(p[0] for p in pts)
        return Quantizer(pts, "nearest")
    pos = {c: i for i, c in enumerate(order)}
    table = {prob.atoms[k]: pos[int(assign[k])] for k in range(prob.n_atoms)}
    return Quantizer(tuple(prob.atoms[c] for c in order), "table", table)


@dataclass(frozen=True)
class QuantizerDesign:
    q: Quantizer
    achieved_delta: float

    def to_json(self) -> dict:
        return {"quantizer": self.q.to_json(), "achieved_delta": self.achieved_delta}


def design_quantizer(mu: DiscreteMeasure, F: FunctionClass, m: int, x_coords=None,
                     candidate_cap: int = 128) -> QuantizerDesign:
    """At most m codepoints and the exact deviation ||mu_{q(X),Y} - mu||_F they achieve.

    ``x_coords`` selects the X part of each support point (``None``: the whole point).
    """
    q, dlt = quantizer_path(mu, F, m, x_coords, candidate_cap)[-1]
    return QuantizerDesign(q, dlt)


def quantizer_to_json(design: QuantizerDesign) -> str:
    return json.dumps(design.to_json())
