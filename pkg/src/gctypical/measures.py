"""Discrete measures, model laws and their JSON form.

Two concrete carriers stand in for a standard Borel space:

* ``"finite"`` -- symbols from a finite alphabet (ints, strings, or tuples of
  those for product alphabets);
* ``"vector"`` -- points of R^d, stored as rows of a float array.

A :class:`DiscreteMeasure` is a finitely supported probability measure over
one carrier; the empirical measure of a tuple is the uniform special case.
A :class:`ModelMeasure` is the reference law P a tuple is compared with.
"""
from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

FINITE = "finite"
VECTOR = "vector"

WEIGHT_TOL = 1e-12


def _is_symbol_scalar(x: Any) -> bool:
    return isinstance(x, (str, bool, np.bool_)) or (
        isinstance(x, numbers.Integral) and not isinstance(x, bool)
    ) or isinstance(x, np.integer)


def _canon_symbol(x: Any) -> Any:
    """Hashable canonical form of a finite symbol (numpy ints -> int, lists -> tuples)."""
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (list, tuple, np.ndarray)):
        return tuple(_canon_symbol(v) for v in x)
    return x


def point_kind(p: Any) -> tuple[str, int | None]:
    """Classify a single point as ``("finite", None)`` or ``("vector", d)``."""
    if _is_symbol_scalar(p):
        return FINITE, None
    if isinstance(p, numbers.Real):
        return VECTOR, 1
    if isinstance(p, np.ndarray):
        if p.dtype.kind in "iub":
            return FINITE, None
        if p.dtype.kind == "f":
            return VECTOR, int(p.size)
        raise TypeError(f"unsupported point dtype {p.dtype}")
    if isinstance(p, (tuple, list)):
        if len(p) == 0:
            raise TypeError("empty point")
        if all(_is_symbol_scalar(v) or isinstance(v, (tuple, list)) for v in p):
            # tuples of ints are product-alphabet symbols
            return FINITE, None
        if all(isinstance(v, numbers.Real) for v in p):
            return VECTOR, len(p)
    raise TypeError(f"cannot interpret {p!r} as a point")


def as_points(points: Any, kind: str | None = None) -> tuple[str, Any]:
    """Normalise a tuple of points.

    Returns ``(FINITE, tuple_of_symbols)`` or ``(VECTOR, array of shape (n, d))``.
    Float arrays are vectors (1-D float arrays are points of R^1); integer
    arrays are finite symbols unless ``kind="vector"`` is forced.
    """
    if isinstance(points, np.ndarray):
        if points.size == 0:
            raise ValueError("empty tuple of points")
        if kind is None:
            kind = VECTOR if points.dtype.kind == "f" else FINITE
        if kind == VECTOR:
            arr = np.asarray(points, dtype=float)
            if arr.ndim == 1:
                arr = arr[:, None]
            if arr.ndim != 2:
                raise ValueError("vector points must form a 2-D array")
            return VECTOR, arr
        if points.ndim == 1:
            return FINITE, tuple(_canon_symbol(v) for v in points)
        return FINITE, tuple(_canon_symbol(row) for row in points)

    pts = list(points)
    if not pts:
        raise ValueError("empty tuple of points")
    if kind is None:
        kinds = {point_kind(p) for p in pts}
        if len({k for k, _ in kinds}) != 1:
            raise ValueError("mixed point kinds in one tuple")
        (kind, _), *_ = kinds
        if kind == VECTOR and len(kinds) != 1:
            raise ValueError("vector points of different dimensions")
    if kind == FINITE:
        return FINITE, tuple(_canon_symbol(p) for p in pts)
    if kind == VECTOR:
        rows = [np.atleast_1d(np.asarray(p, dtype=float)) for p in pts]
        if len({r.shape for r in rows}) != 1:
            raise ValueError("vector points of different dimensions")
        return VECTOR, np.vstack(rows)
    raise ValueError(f"unknown point kind {kind!r}")


def _sorted_symbols(symbols: Iterable[Any]) -> list:
    syms = list(dict.fromkeys(symbols))
    try:
        return sorted(syms)
    except TypeError:
        return sorted(syms, key=repr)


def unique_rows(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lexicographically sorted distinct rows and the inverse index (fast path for d = 1)."""
    if arr.shape[1] == 1:
        u, inv = np.unique(arr[:, 0], return_inverse=True)
        return u[:, None], inv.ravel()
    order = np.lexsort(arr.T[::-1])
    srt = arr[order]
    new = np.ones(len(arr), bool)
    new[1:] = np.any(srt[1:] != srt[:-1], axis=1)
    grp = np.cumsum(new) - 1
    inv = np.empty(len(arr), dtype=np.intp)
    inv[order] = grp
    return srt[new], inv


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure.

    ``support`` is a tuple of symbols (finite kind) or a ``(k, d)`` float
    array (vector kind); ``weights`` has one entry per support point.
    """

    kind: str
    support: Any
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if self.kind == FINITE:
            sup = tuple(_canon_symbol(s) for s in self.support)
            if len(set(sup)) != len(sup):
                raise ValueError("support points must be distinct")
        elif self.kind == VECTOR:
            sup = np.asarray(self.support, dtype=float)
            if sup.ndim == 1:
                sup = sup[:, None]
            if sup.ndim != 2:
                raise ValueError("vector support must be 2-D")
            if len(unique_rows(sup)[0]) != len(sup):
                raise ValueError("support points must be distinct")
            sup = _frozen(sup)
        else:
            raise ValueError(f"unknown kind {self.kind!r}")
        if len(sup) != len(w):
            raise ValueError("support and weights differ in length")
        if len(w) == 0:
            raise ValueError("empty support")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {math.fsum(w)!r}, not 1")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int | None:
        return None if self.kind == FINITE else self.support.shape[1]

    def as_dict(self) -> dict:
        if self.kind == FINITE:
            keys = self.support
        else:
            keys = [tuple(row) for row in self.support]
        return {k: float(w) for k, w in zip(keys, self.weights)}

    def mass(self, point: Any) -> float:
        if self.kind == FINITE:
            return self.as_dict().get(_canon_symbol(point), 0.0)
        p = np.atleast_1d(np.asarray(point, dtype=float))
        hit = np.all(self.support == p, axis=1)
        return float(self.weights[hit].sum())

    def project(self, coords: Sequence[int]) -> "DiscreteMeasure":
        """Marginal on the listed coordinates (tuple symbols or vector columns)."""
        coords = list(coords)
        if self.kind == VECTOR:
            return from_weighted_points(VECTOR, self.support[:, coords], self.weights)
        syms = []
        for s in self.support:
            if not isinstance(s, tuple):
                raise ValueError("projection needs product-alphabet (tuple) symbols")
            sel = tuple(s[i] for i in coords)
            syms.append(sel[0] if len(sel) == 1 else sel)
        return from_weighted_points(FINITE, syms, self.weights)

    def to_json(self) -> dict:
        if self.kind == FINITE:
            sup = [list(s) if isinstance(s, tuple) else s for s in self.support]
        else:
            sup = self.support.tolist()
        return {"kind": self.kind, "support": sup, "weights": self.weights.tolist()}

    def __repr__(self) -> str:
        return f"DiscreteMeasure(kind={self.kind!r}, size={self.size})"


def from_weighted_points(kind: str, points: Any, weights: Any) -> DiscreteMeasure:
    """Aggregate (possibly repeated) weighted points into a DiscreteMeasure."""
    w = np.asarray(weights, dtype=float).ravel()
    if kind == FINITE:
        acc: dict = {}
        for p, wi in zip(points, w):
            p = _canon_symbol(p)
            acc[p] = acc.get(p, 0.0) + wi
        keys = _sorted_symbols(acc)
        vals = np.array([acc[k] for k in keys])
        return DiscreteMeasure(FINITE, tuple(keys), vals / math.fsum(vals))
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    uniq, inv = unique_rows(arr)
    vals = np.bincount(inv, weights=w, minlength=len(uniq))
    return DiscreteMeasure(VECTOR, uniq, vals / math.fsum(vals))


def empirical_measure(z: Any, kind: str | None = None) -> DiscreteMeasure:
    """Empirical measure of a tuple: distinct points weighted by multiplicity / n."""
    kind, pts = as_points(z, kind)
    # integer counts, so each weight is count / n rounded once
    return from_weighted_points(kind, pts, np.ones(len(pts)))


def point_mass(p: Any, kind: str | None = None) -> DiscreteMeasure:
    return empirical_measure([p], kind)


def uniform_pmf(alphabet: Sequence[Any]) -> DiscreteMeasure:
    k = len(alphabet)
    return DiscreteMeasure(FINITE, tuple(alphabet), np.full(k, 1.0 / k))


def pmf(mapping: dict) -> DiscreteMeasure:
    """Finite PMF from a ``{symbol: probability}`` dict (zero entries dropped)."""
    items = [(k, v) for k, v in mapping.items() if v > 0]
    return from_weighted_points(FINITE, [k for k, _ in items], [v for _, v in items])


def merge(lhs: DiscreteMeasure, rhs: DiscreteMeasure) -> tuple[Any, np.ndarray]:
    """Common support of two measures and the signed weights of ``lhs - rhs`` on it."""
    if lhs.kind != rhs.kind:
        raise ValueError("measures live on different point kinds")
    if lhs.kind == FINITE:
        acc: dict = {}
        for s, w in zip(lhs.support, lhs.weights):
            acc[s] = acc.get(s, 0.0) + w
        for s, w in zip(rhs.support, rhs.weights):
            acc[s] = acc.get(s, 0.0) - w
        keys = _sorted_symbols(acc)
        return tuple(keys), np.array([acc[k] for k in keys])
    if lhs.dim != rhs.dim:
        raise ValueError("measures have different dimensions")
    pts = np.vstack([lhs.support, rhs.support])
    w = np.concatenate([lhs.weights, -rhs.weights])
    uniq, inv = unique_rows(pts)
    return uniq, np.bincount(inv, weights=w, minlength=len(uniq))


# ---------------------------------------------------------------------------
# model laws


@dataclass(frozen=True, eq=False)
class ModelMeasure:
    """Reference law P.

    kinds:
      ``"pmf"``       a DiscreteMeasure (finite alphabet or atoms in R^d);
      ``"box"``       product-uniform law on ``[low, high]`` in R^d (nonatomic);
      ``"reference"`` a large sample standing in for a nonatomic law.
    """

    kind: str
    measure: DiscreteMeasure | None = None
    low: np.ndarray | None = None
    high: np.ndarray | None = None
    nonatomic: bool = False
    name: str = ""

    def __post_init__(self):
        if self.kind == "pmf":
            if self.measure is None:
                raise ValueError("pmf model needs a measure")
            if self.nonatomic:
                raise ValueError("a finitely supported law cannot be nonatomic")
        elif self.kind == "box":
            lo = np.atleast_1d(np.asarray(self.low, dtype=float))
            hi = np.atleast_1d(np.asarray(self.high, dtype=float))
            if lo.shape != hi.shape or lo.ndim != 1 or np.any(hi <= lo):
                raise ValueError("box needs low < high of equal length")
            object.__setattr__(self, "low", _frozen(lo))
            object.__setattr__(self, "high", _frozen(hi))
            object.__setattr__(self, "nonatomic", True)
        elif self.kind == "reference":
            if self.measure is None:
                raise ValueError("reference model needs a sample measure")
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not self.name:
            object.__setattr__(self, "name", self._default_name())

    def _default_name(self) -> str:
        if self.kind == "box":
            return "box" + "x".join(f"[{a:g},{b:g}]" for a, b in zip(self.low, self.high))
        return f"{self.kind}{self.measure.size}"

    @property
    def point_kind(self) -> str:
        return VECTOR if self.kind == "box" else self.measure.kind

    @property
    def dim(self) -> int | None:
        return len(self.low) if self.kind == "box" else self.measure.dim

    @property
    def reference_size(self) -> int | None:
        return self.measure.size if self.kind == "reference" else None

    def project(self, coords: Sequence[int]) -> "ModelMeasure":
        coords = list(coords)
        if self.kind == "box":
            return ModelMeasure("box", low=self.low[coords], high=self.high[coords])
        return ModelMeasure(self.kind, measure=self.measure.project(coords),
                            nonatomic=self.nonatomic)

    def to_json(self) -> dict:
        if self.kind == "box":
            return {"model": "box", "low": self.low.tolist(), "high": self.high.tolist()}
        out = {"model": self.kind, "measure": self.measure.to_json()}
        if self.kind == "reference":
            out["nonatomic"] = self.nonatomic
        return out


def as_model(p: DiscreteMeasure | ModelMeasure) -> ModelMeasure:
    return p if isinstance(p, ModelMeasure) else ModelMeasure("pmf", measure=p)


def uniform_box(low: Sequence[float], high: Sequence[float], name: str = "") -> ModelMeasure:
    return ModelMeasure("box", low=np.asarray(low, float), high=np.asarray(high, float), name=name)


@dataclass(frozen=True)
class SignedDifference:
    """nu = lhs - rhs."""

    lhs: DiscreteMeasure
    rhs: DiscreteMeasure | ModelMeasure = field()

    def __post_init__(self):
        rk = self.rhs.kind if isinstance(self.rhs, DiscreteMeasure) else self.rhs.point_kind
        if self.lhs.kind != rk:
            raise ValueError("both sides must live on the same point kind")
        if self.lhs.dim != self.rhs.dim:
            raise ValueError("both sides must have the same dimension")


# ---------------------------------------------------------------------------
# JSON


def _symbol_from_json(s: Any) -> Any:
    return _canon_symbol(s) if isinstance(s, list) else s


def measure_from_json(obj: dict) -> DiscreteMeasure:
    kind = obj["kind"]
    if kind == FINITE:
        sup = tuple(_symbol_from_json(s) for s in obj["support"])
        return DiscreteMeasure(FINITE, sup, np.asarray(obj["weights"], float))
    if kind == VECTOR:
        return DiscreteMeasure(VECTOR, np.asarray(obj["support"], float),
                               np.asarray(obj["weights"], float))
    raise ValueError(f"unknown measure kind {kind!r}")


def model_from_json(obj: dict) -> ModelMeasure:
    if "model" not in obj:
        return ModelMeasure("pmf", measure=measure_from_json(obj))
    kind = obj["model"]
    name = obj.get("name", "")
    if kind == "box":
        return ModelMeasure("box", low=np.asarray(obj["low"], float),
                            high=np.asarray(obj["high"], float), name=name)
    return ModelMeasure(kind, measure=measure_from_json(obj["measure"]),
                        nonatomic=bool(obj.get("nonatomic", kind == "reference")), name=name)


def dumps(obj: DiscreteMeasure | ModelMeasure) -> str:
    # repr-precision floats keep round trips exact
    return json.dumps(obj.to_json())


def loads(text: str) -> DiscreteMeasure | ModelMeasure:
    obj = json.loads(text)
    return model_from_json(obj) if "model" in obj else measure_from_json(obj)
