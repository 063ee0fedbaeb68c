"""Finite joint PMFs and information functionals (base-2 logarithms)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measures import FINITE, DiscreteMeasure

PMF_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class JointPMF:
    """Probability table over a product of finite alphabets {0..k-1}."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim < 1:
            raise ValueError("table needs at least one axis")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise ValueError("entries must be finite and nonnegative")
        if abs(math.fsum(t.ravel()) - 1.0) > PMF_TOL:
            raise ValueError(f"entries sum to {t.sum()!r}, not 1")
        t = np.ascontiguousarray(t)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def normalized(cls, table) -> "JointPMF":
        t = np.asarray(table, dtype=float)
        return cls(t / t.sum())

    @property
    def shape(self) -> tuple:
        return self.table.shape

    def marginal(self, axes: Sequence[int] | int) -> np.ndarray:
        axes = (axes,) if isinstance(axes, int) else tuple(axes)
        drop = tuple(a for a in range(self.table.ndim) if a not in axes)
        m = self.table.sum(axis=drop)
        # sum keeps the remaining axes in increasing order
        order = np.argsort(np.argsort(axes))
        return np.transpose(m, order) if len(axes) > 1 else m

    def conditional(self, given: int = 0) -> np.ndarray:
        """Kernel of the other axes given axis ``given`` (rows with zero mass are uniform)."""
        t = np.moveaxis(self.table, given, 0)
        rows = t.reshape(t.shape[0], -1)
        mass = rows.sum(axis=1, keepdims=True)
        k = np.where(mass > 0, rows / np.where(mass > 0, mass, 1.0), 1.0 / rows.shape[1])
        return k.reshape(t.shape)

    def to_measure(self) -> DiscreteMeasure:
        idx = np.argwhere(self.table > 0)
        sup = tuple(tuple(int(v) for v in row) for row in idx)
        return DiscreteMeasure(FINITE, sup, self.table[tuple(idx.T)] / self.table.sum())

    def to_json(self) -> dict:
        return {"shape": list(self.shape), "table": self.table.tolist()}


def product_pmf(*marginals) -> JointPMF:
    t = np.asarray(marginals[0], float)
    for m in marginals[1:]:
        t = np.multiply.outer(t, np.asarray(m, float))
    return JointPMF.normalized(t)


def joint_from_kernel(px, kernel) -> JointPMF:
    """P_X x P_{Y|X} as a table."""
    px = np.asarray(px, float)
    k = np.asarray(kernel, float)
    if np.any(np.abs(k.sum(axis=1) - 1) > 1e-9):
        raise ValueError("kernel rows must sum to 1")
    return JointPMF.normalized(px[:, None] * k)


def _xlogx_ratio(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def entropy(p) -> float:
    p = np.asarray(p, float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def binary_entropy(p: float) -> float:
    return entropy([p, 1 - p])


def divergence(p, q) -> float:
    p, q = np.asarray(p, float), np.asarray(q, float)
    if np.any((p > 0) & (q <= 0)):
        return math.inf
    return _xlogx_ratio(p, q)


def _as_table(Q) -> np.ndarray:
    return Q.table if isinstance(Q, JointPMF) else np.asarray(Q, float)


def mutual_information(Q, a: Sequence[int] = (0,), b: Sequence[int] = (1,)) -> float:
    """I(A;B) = D(Q_AB || Q_A x Q_B) in bits for axis groups a and b."""
    t = _as_table(Q)
    return conditional_mutual_information(t, a, b, ())


def conditional_mutual_information(Q, a: Sequence[int], b: Sequence[int], c: Sequence[int] = ()) -> float:
    """I(A;B|C) in bits; each argument is a group of axes of the table."""
    t = _as_table(Q)
    a, b, c = (tuple([g]) if isinstance(g, int) else tuple(g) for g in (a, b, c))
    keep = a + b + c
    drop = tuple(i for i in range(t.ndim) if i not in keep)
    t = t.sum(axis=drop) if drop else t
    # relabel remaining axes to 0..k-1 in the order of `keep`
    remaining = sorted(keep)
    t = np.transpose(t, [remaining.index(i) for i in keep])
    na, nb = len(a), len(b)
    ax_a = tuple(range(na))
    ax_b = tuple(range(na, na + nb))
    p_ac = t.sum(axis=ax_b, keepdims=True)
    p_bc = t.sum(axis=ax_a, keepdims=True)
    p_c = t.sum(axis=ax_a + ax_b, keepdims=True)
    mask = t > 0
    # log domain: products of tiny masses would underflow
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.log2(t) + np.log2(p_c) - np.log2(p_ac) - np.log2(p_bc)
    val = float(np.sum(t[mask] * ratio[mask]))
    return max(val, 0.0)


def conditional_entropy(Q, a: Sequence[int], given: Sequence[int]) -> float:
    t = _as_table(Q)
    a = (a,) if isinstance(a, int) else tuple(a)
    given = (given,) if isinstance(given, int) else tuple(given)
    pm = JointPMF.normalized(t)
    h_joint = entropy(pm.marginal(a + given))
    h_given = entropy(pm.marginal(given)) if given else 0.0
    return h_joint - h_given


def information_density(Q, v, w) -> float:
    """sum_t log2 Q(v_t, w_t) / (Q_V(v_t) Q_W(w_t)); -inf if some pair has zero probability."""
    t = _as_table(Q)
    if t.ndim != 2:
        raise ValueError("information density needs a two-axis table")
    v = np.asarray(v, dtype=np.intp)
    w = np.asarray(w, dtype=np.intp)
    if v.shape != w.shape:
        raise ValueError("tuples must have equal length")
    if np.any(v < 0) or np.any(v >= t.shape[0]) or np.any(w < 0) or np.any(w >= t.shape[1]):
        raise ValueError("symbol outside the alphabet")
    return float(density_matrix(t)[v, w].sum())


def density_matrix(t: np.ndarray) -> np.ndarray:
    """Per-letter information density log2 Q(v,w) / (Q_V(v) Q_W(w)), -inf on zero cells."""
    qv = t.sum(axis=1, keepdims=True)
    qw = t.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log2(t) - np.log2(qv * qw)
    return np.where(t > 0, out, -np.inf)
