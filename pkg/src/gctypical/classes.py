"""Descriptors for uniformly bounded test-function classes.

Each descriptor is a small frozen dataclass. Indicator classes take values in
{0, 1}; ``value_range`` records the range of the members so callers can tell
indicator classes from [-1, 1]-valued ones. Members are evaluated with
:func:`eval_member`; suprema live in :mod:`gctypical.seminorm`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .measures import FINITE, VECTOR, _canon_symbol


class IncompatibleClassError(ValueError):
    """The class cannot act on the given point kind or dimension."""


@dataclass(frozen=True)
class FunctionClass:
    indicator = False
    value_range = (-1.0, 1.0)
    point_kind = VECTOR

    @property
    def id(self) -> str:
        return class_to_json_str(self)

    def check_points(self, kind: str, dim: int | None) -> None:
        if kind != self.point_kind:
            raise IncompatibleClassError(f"{type(self).__name__} acts on {self.point_kind} points, got {kind}")
        want = getattr(self, "dim", None)
        if want is not None and dim != want:
            raise IncompatibleClassError(f"{type(self).__name__} needs dimension {want}, got {dim}")


@dataclass(frozen=True)
class AllFunctions(FunctionClass):
    """Every measurable f with |f| <= 1. The seminorm is total variation."""

    value_range = (-1.0, 1.0)

    def check_points(self, kind, dim):
        return None  # acts on any carrier


@dataclass(frozen=True)
class HalfLines(FunctionClass):
    """Indicators of (-inf, t] ("left"), [t, inf) ("right") or both families."""

    orientation: str = "both"
    indicator = True
    value_range = (0.0, 1.0)
    dim = 1

    def __post_init__(self):
        if self.orientation not in ("left", "right", "both"):
            raise ValueError("orientation must be left, right or both")


@dataclass(frozen=True)
class Intervals(FunctionClass):
    """Indicators of closed intervals [a, b] on the line."""

    indicator = True
    value_range = (0.0, 1.0)
    dim = 1


def _check_dim(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError("dimension must be a positive integer")


@dataclass(frozen=True)
class Halfspaces(FunctionClass):
    """Indicators of closed halfspaces {z : <w, z> + b >= 0}."""

    dim: int = 2
    indicator = True
    value_range = (0.0, 1.0)

    def __post_init__(self):
        _check_dim(self.dim)


@dataclass(frozen=True)
class Rectangles(FunctionClass):
    """Indicators of closed axis-parallel boxes."""

    dim: int = 2
    indicator = True
    value_range = (0.0, 1.0)

    def __post_init__(self):
        _check_dim(self.dim)


@dataclass(frozen=True)
class Balls(FunctionClass):
    """Indicators of closed Euclidean balls."""

    dim: int = 2
    indicator = True
    value_range = (0.0, 1.0)

    def __post_init__(self):
        _check_dim(self.dim)


@dataclass(frozen=True)
class VoronoiCells(FunctionClass):
    """Indicators of closed Voronoi cells of m-site configurations in R^d."""

    m: int = 2
    dim: int = 2
    indicator = True
    value_range = (0.0, 1.0)

    def __post_init__(self):
        _check_dim(self.dim)
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise ValueError("m must be a positive integer")


@dataclass(frozen=True)
class BoundedLipschitz(FunctionClass):
    """Bounded Lipschitz unit ball under the Euclidean metric.

    ``norm="sum"`` bounds sup|f| + Lip(f) <= 1; ``norm="max"`` bounds
    sup|f| <= 1 and Lip(f) <= 1 separately.
    """

    norm: str = "sum"
    value_range = (-1.0, 1.0)

    def __post_init__(self):
        if self.norm not in ("sum", "max"):
            raise ValueError("norm must be 'sum' or 'max'")

    def check_points(self, kind, dim):
        if kind != VECTOR:
            raise IncompatibleClassError("bounded Lipschitz functions act on vector points")


@dataclass(frozen=True, eq=False)
class ConvexHull(FunctionClass):
    """Symmetric convex hull of finitely many functions tabulated on a finite alphabet.

    ``table[i, k]`` is the value of base function i at ``alphabet[k]``.
    """

    alphabet: tuple
    table: np.ndarray
    point_kind = FINITE

    def __post_init__(self):
        alpha = tuple(_canon_symbol(a) for a in self.alphabet)
        tab = np.atleast_2d(np.asarray(self.table, dtype=float))
        if tab.shape[1] != len(alpha):
            raise ValueError("table columns must match the alphabet")
        if len(set(alpha)) != len(alpha):
            raise ValueError("alphabet symbols must be distinct")
        if tab.shape[0] < 1:
            raise ValueError("need at least one base function")
        if np.any(np.abs(tab) > 1 + 1e-12):
            raise ValueError("base functions must map into [-1, 1]")
        tab = np.ascontiguousarray(tab)
        tab.setflags(write=False)
        object.__setattr__(self, "alphabet", alpha)
        object.__setattr__(self, "table", tab)
        object.__setattr__(self, "_index", {a: k for k, a in enumerate(alpha)})

    def __eq__(self, other):
        return (isinstance(other, ConvexHull) and self.alphabet == other.alphabet
                and np.array_equal(self.table, other.table))

    def __hash__(self):
        return hash((self.alphabet, self.table.tobytes()))

    def column(self, symbol: Any) -> int:
        try:
            return self._index[_canon_symbol(symbol)]
        except KeyError:
            raise IncompatibleClassError(f"symbol {symbol!r} is not in the tabulated alphabet") from None

    @property
    def value_range(self):
        lo = float(self.table.min())
        return (min(lo, 0.0) if lo >= 0 else -1.0, 1.0)

    def check_points(self, kind, dim):
        if kind != FINITE:
            raise IncompatibleClassError("tabulated classes act on finite symbols")


@dataclass(frozen=True)
class Composed(FunctionClass):
    """f o pi for f in ``base``, pi the coordinate projection onto ``coords``."""

    base: FunctionClass
    coords: tuple = field(default=(0,))

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))
        if not self.coords:
            raise ValueError("need at least one coordinate")

    @property
    def indicator(self):
        return self.base.indicator

    @property
    def value_range(self):
        return self.base.value_range

    def check_points(self, kind, dim):
        if kind == VECTOR and dim is not None and max(self.coords) >= dim:
            raise IncompatibleClassError("projection coordinate out of range")
        self.base.check_points(kind, len(self.coords) if kind == VECTOR else None)


# Vapnik-Chervonenkis dimensions of the indicator classes
def vc_dimension(F: FunctionClass) -> int | None:
    if isinstance(F, HalfLines):
        return 1 if F.orientation != "both" else 2
    if isinstance(F, Intervals):
        return 2
    if isinstance(F, Halfspaces):
        return F.dim + 1
    if isinstance(F, Rectangles):
        return 2 * F.dim
    if isinstance(F, Balls):
        return F.dim + 1
    if isinstance(F, Composed):
        return vc_dimension(F.base)
    return None


# ---------------------------------------------------------------------------
# member evaluation


def _vec(z: Any) -> np.ndarray:
    return np.atleast_1d(np.asarray(z, dtype=float))


def eval_member(F: FunctionClass, params: Any, z: Any) -> float:
    """Value f(z) of the member of ``F`` selected by ``params``.

    Parameter conventions:
      HalfLines       ``(t, "left")`` for (-inf, t], ``(t, "right")`` for [t, inf)
      Intervals       ``(a, b)``
      Halfspaces      ``(w, b)`` for <w, z> + b >= 0
      Rectangles      ``(low, high)``
      Balls           ``(center, radius)``
      VoronoiCells    ``(sites, index)``; cells are closed
      BoundedLipschitz  a callable
      AllFunctions    a dict symbol -> value (missing symbols map to 0) or a callable
      ConvexHull      coefficients lambda with sum |lambda_i| <= 1
      Composed        parameters of the base class
    """
    if isinstance(F, Composed):
        if isinstance(z, tuple) and not all(isinstance(v, float) for v in z):
            sub = tuple(z[c] for c in F.coords)
            return eval_member(F.base, params, sub[0] if len(sub) == 1 else sub)
        return eval_member(F.base, params, _vec(z)[list(F.coords)])
    if isinstance(F, HalfLines):
        t, side = params if isinstance(params, tuple) and len(params) == 2 else (params, "left")
        if F.orientation != "both" and side != F.orientation:
            raise ValueError(f"{side} half-line is not a member")
        x = float(_vec(z)[0])
        if side == "left":
            return float(x <= t)
        if side == "right":
            return float(x >= t)
        raise ValueError("side must be left or right")
    if isinstance(F, Intervals):
        a, b = params
        x = float(_vec(z)[0])
        return float(a <= x <= b)
    if isinstance(F, Halfspaces):
        w, b = params
        w = _vec(w)
        if w.shape != (F.dim,):
            raise ValueError("normal has the wrong dimension")
        return float(w @ _vec(z) + b >= 0)
    if isinstance(F, Rectangles):
        lo, hi = map(_vec, params)
        if lo.shape != (F.dim,) or hi.shape != (F.dim,):
            raise ValueError("box corners have the wrong dimension")
        zz = _vec(z)
        return float(np.all(lo <= zz) and np.all(zz <= hi))
    if isinstance(F, Balls):
        c, r = params
        if r < 0:
            raise ValueError("radius must be nonnegative")
        c = _vec(c)
        if c.shape != (F.dim,):
            raise ValueError("center has the wrong dimension")
        return float(np.sum((_vec(z) - c) ** 2) <= r * r + 1e-15 * max(1.0, r * r))
    if isinstance(F, VoronoiCells):
        sites, idx = params
        sites = np.atleast_2d(np.asarray(sites, dtype=float))
        if sites.shape != (F.m, F.dim) or not 0 <= idx < F.m:
            raise ValueError("need m sites of dimension d and a valid cell index")
        d2 = np.sum((sites - _vec(z)) ** 2, axis=1)
        return float(d2[idx] <= d2.min())
    if isinstance(F, BoundedLipschitz):
        if not callable(params):
            raise ValueError("bounded Lipschitz members are given as callables")
        v = float(params(_vec(z)))
        if abs(v) > 1:
            raise ValueError("member exceeds the unit bound")
        return v
    if isinstance(F, AllFunctions):
        v = float(params(z)) if callable(params) else float(params.get(_canon_symbol(z), 0.0))
        if abs(v) > 1:
            raise ValueError("member exceeds the unit bound")
        return v
    if isinstance(F, ConvexHull):
        lam = np.asarray(params, dtype=float)
        if lam.shape != (F.table.shape[0],) or np.abs(lam).sum() > 1 + 1e-12:
            raise ValueError("need one coefficient per base function with sum |lambda| <= 1")
        return float(lam @ F.table[:, F.column(z)])
    raise TypeError(f"unknown class {F!r}")


# ---------------------------------------------------------------------------
# JSON


def class_to_json(F: FunctionClass) -> dict:
    if isinstance(F, AllFunctions):
        return {"class": "all"}
    if isinstance(F, HalfLines):
        return {"class": "halflines", "orientation": F.orientation}
    if isinstance(F, Intervals):
        return {"class": "intervals"}
    if isinstance(F, Halfspaces):
        return {"class": "halfspaces", "dim": F.dim}
    if isinstance(F, Rectangles):
        return {"class": "rectangles", "dim": F.dim}
    if isinstance(F, Balls):
        return {"class": "balls", "dim": F.dim}
    if isinstance(F, VoronoiCells):
        return {"class": "voronoi", "m": F.m, "dim": F.dim}
    if isinstance(F, BoundedLipschitz):
        return {"class": "bounded_lipschitz", "norm": F.norm}
    if isinstance(F, ConvexHull):
        alpha = [list(a) if isinstance(a, tuple) else a for a in F.alphabet]
        return {"class": "convex_hull", "alphabet": alpha, "functions": F.table.tolist()}
    if isinstance(F, Composed):
        return {"class": "composed", "base": class_to_json(F.base), "coords": list(F.coords)}
    raise TypeError(f"unknown class {F!r}")


def class_from_json(obj: dict) -> FunctionClass:
    tag = obj.get("class")
    if tag == "all":
        return AllFunctions()
    if tag == "halflines":
        return HalfLines(obj.get("orientation", "both"))
    if tag == "intervals":
        return Intervals()
    if tag == "halfspaces":
        return Halfspaces(int(obj["dim"]))
    if tag == "rectangles":
        return Rectangles(int(obj["dim"]))
    if tag == "balls":
        return Balls(int(obj["dim"]))
    if tag == "voronoi":
        return VoronoiCells(int(obj["m"]), int(obj["dim"]))
    if tag == "bounded_lipschitz":
        return BoundedLipschitz(obj.get("norm", "sum"))
    if tag == "convex_hull":
        alpha = tuple(_canon_symbol(a) for a in obj["alphabet"])
        return ConvexHull(alpha, np.asarray(obj["functions"], dtype=float))
    if tag == "composed":
        return Composed(class_from_json(obj["base"]), tuple(obj["coords"]))
    raise ValueError(f"unknown class tag {tag!r}")


def class_to_json_str(F: FunctionClass) -> str:
    j = class_to_json(F)
    if isinstance(F, ConvexHull):
        return f"convex_hull{F.table.shape[0]}"
    parts = [j["class"]] + [str(v) for k, v in j.items() if k != "class" and not isinstance(v, (dict, list))]
    if isinstance(F, Composed):
        parts = ["composed", class_to_json_str(F.base), "".join(map(str, F.coords))]
    return "-".join(parts)
