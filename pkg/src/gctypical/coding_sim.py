"""Monte Carlo realizations of random-codebook coordination schemes.

* Piggyback codes: codewords drawn i.i.d. from a target marginal; the encoder
  picks the codeword whose joint empirical law with the input is closest to
  the target in the class seminorm. Long blocks are split into sub-blocks with
  their own codebooks (a product code), so storage stays bounded while the
  total rate stays at most R.
* Two-node coordination built from the optimizing joint law of the rate
  function.
* The two-stage side-information scheme: a stage-1 code producing U-tuples
  followed by random binning decoded against the side information.
* Time-mixed joint laws and numerical checks of the converse chain.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classes import AllFunctions, FunctionClass
from .information import JointPMF, density_matrix, entropy, mutual_information
from .rates import (CoordinationProblem, SideInfoProblem, TableNorm, WZSolution,
                    coordination_rate, table_norm)
from .rng import ordered_map, stream

MAX_BLOCK_CODEWORDS = 4096
MAX_INDEX_SPACE = 1 << 22
MAX_NR = 40
_CODEBOOK_KEY = 1_000_003
_BIN_KEY = 1_000_033


# ---------------------------------------------------------------------------
# codebooks


@dataclass(frozen=True, eq=False)
class Codebook:
    """M tuples of length n drawn i.i.d. per symbol from ``law``; regenerable from the seed."""

    n: int
    M: int
    law: np.ndarray
    seed: int
    key: int = 0
    entries: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.M < 1 or self.n < 1:
            raise ValueError("need M >= 1 and n >= 1")
        law = np.asarray(self.law, float)
        rng = stream(self.seed, _CODEBOOK_KEY, self.key)
        ent = rng.choice(len(law), size=(self.M, self.n), p=law / law.sum())
        ent.setflags(write=False)
        object.__setattr__(self, "law", law)
        object.__setattr__(self, "entries", ent)


def _counts(v: np.ndarray, W: np.ndarray, nv: int, nw: int) -> np.ndarray:
    """Joint count tables of v against every row of W, shape (M, nv, nw)."""
    M = len(W)
    flat = v[None, :] * nw + W + (np.arange(M) * (nv * nw))[:, None]
    return np.bincount(flat.ravel(), minlength=M * nv * nw).reshape(M, nv, nw).astype(float)


def _block_lengths(n: int, R: float, max_codewords: int) -> list[int]:
    nb = max(1, int(math.floor(math.log2(max_codewords) / R))) if R > 0 else n
    nb = min(nb, n)
    out = [nb] * (n // nb)
    if n % nb:
        out.append(n % nb)
    return out


@dataclass(frozen=True, eq=False)
class PiggybackCode:
    """Product of per-block codebooks with a sequential argmin-deviation encoder.

    Block i picks the codeword that minimizes the seminorm distance between the
    joint empirical law of everything encoded so far and the target; ties go
    to the lowest index. With a single block this is the plain argmin encoder.
    """

    target: np.ndarray
    norm: TableNorm
    n: int
    R: float
    blocks: tuple

    @property
    def shape(self) -> tuple:
        return self.target.shape

    @property
    def log2_size(self) -> float:
        return float(sum(math.log2(b.M) for b in self.blocks))

    @property
    def rate(self) -> float:
        return self.log2_size / self.n

    def truncated(self, M: int) -> "PiggybackCode":
        """Same code keeping only the first M codewords of every block (nested codebooks)."""
        blocks = []
        for b in self.blocks:
            nb = Codebook.__new__(Codebook)
            for k in ("n", "law", "seed", "key"):
                object.__setattr__(nb, k, getattr(b, k))
            object.__setattr__(nb, "M", min(M, b.M))
            object.__setattr__(nb, "entries", b.entries[: min(M, b.M)])
            blocks.append(nb)
        return PiggybackCode(self.target, self.norm, self.n, self.R, tuple(blocks))

    def encode(self, v: Sequence[int]) -> tuple[tuple[int, ...], np.ndarray]:
        v = np.asarray(v, dtype=np.intp)
        if v.shape != (self.n,):
            raise ValueError(f"input must have length {self.n}")
        nv, nw = self.shape
        acc = np.zeros((nv, nw))
        out = np.empty(self.n, dtype=np.intp)
        idx = []
        pos = 0
        for b in self.blocks:
            seg = v[pos: pos + b.n]
            tabs = _counts(seg, b.entries, nv, nw)
            total = pos + b.n
            dev = self.norm.batch((acc[None] + tabs) / total - self.target[None])
            m = int(np.argmin(dev))
            idx.append(m)
            acc += tabs[m]
            out[pos: pos + b.n] = b.entries[m]
            pos = total
        return tuple(idx), out


def build_piggyback_code(Q_target, F: FunctionClass, n: int, R: float, seed: int,
                         max_codewords: int = MAX_BLOCK_CODEWORDS) -> PiggybackCode:
    """Codebook over W drawn from the W-marginal of ``Q_target`` (a V x W table)."""
    if R <= 0:
        raise ValueError("rate must be positive")
    Q = Q_target.table if isinstance(Q_target, JointPMF) else np.asarray(Q_target, float)
    norm = table_norm(F, Q.shape)
    qw = Q.sum(axis=0)
    blocks = []
    for i, nb in enumerate(_block_lengths(n, R, max_codewords)):
        if nb * R > MAX_NR:
            raise ValueError("block rate budget exceeds the storage guard")
        M = max(1, int(math.floor(2.0 ** (nb * R) + 1e-9)))
        blocks.append(Codebook(nb, M, qw, seed, i))
    return PiggybackCode(Q, norm, n, R, tuple(blocks))


# ---------------------------------------------------------------------------
# reports


def empirical_joint(a: Sequence[int], b: Sequence[int], shape: tuple) -> np.ndarray:
    a = np.asarray(a, dtype=np.intp)
    b = np.asarray(b, dtype=np.intp)
    c = np.bincount(a * shape[1] + b, minlength=shape[0] * shape[1]).reshape(shape)
    return c / len(a)


def time_mixed_joint(pairs: Sequence[tuple], shape: tuple | None = None) -> JointPMF:
    """Average over trials of the empirical joint laws, i.e. the law at a uniform random time."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one trial")
    if shape is None:
        shape = (max(int(np.max(a)) for a, _ in pairs) + 1, max(int(np.max(b)) for _, b in pairs) + 1)
    tabs = [empirical_joint(a, b, shape) for a, b in pairs]
    return JointPMF.normalized(np.mean(tabs, axis=0))


@dataclass
class SimulationReport:
    deviations: np.ndarray
    decode_errors: np.ndarray
    joints: np.ndarray  # per-trial empirical joint tables
    q_hat: JointPMF
    meta: dict = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return len(self.deviations)

    @property
    def mean(self) -> float:
        return float(np.mean(self.deviations))

    def quantiles(self, qs=(0.1, 0.5, 0.9)) -> list[float]:
        return [float(v) for v in np.quantile(self.deviations, qs)]

    @property
    def decode_error_rate(self) -> float:
        blocks = self.meta.get("blocks_per_trial", 1)
        return float(np.sum(self.decode_errors) / (blocks * self.trials))

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "mean_deviation": self.mean,
            "quantiles": dict(zip(("q10", "q50", "q90"), self.quantiles())),
            "decode_error_rate": self.decode_error_rate,
            "deviations": self.deviations.tolist(),
            "decode_errors": self.decode_errors.tolist(),
            "q_hat": self.q_hat.table.tolist(),
            "meta": self.meta,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "deviation", "decode_errors"])
        for t, (d, e) in enumerate(zip(self.deviations, self.decode_errors)):
            w.writerow([t, repr(float(d)), int(e)])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# two-node coordination


def _sample_symbols(p: np.ndarray, n: int, rng) -> np.ndarray:
    return rng.choice(len(p), size=n, p=p / p.sum())


def simulate_coordination(p: CoordinationProblem, R: float, n: int, trials: int, seed: int,
                          Q_code=None, threads: int | None = None,
                          max_codewords: int = MAX_BLOCK_CODEWORDS) -> SimulationReport:
    """Encode i.i.d. sources with a piggyback code built for the optimizing joint law.

    ``Q_code`` overrides the law the code targets (default: argmin of coordination_rate).
    The reported deviation is measured against P_X x P_{Y|X}.
    """
    if Q_code is None:
        Q_code = coordination_rate(p).Q
    code = build_piggyback_code(Q_code, p.cls, n, R, seed, max_codewords)
    target = p.target
    norm = table_norm(p.cls, target.shape)

    def run(t):
        x = _sample_symbols(p.px, n, stream(seed, t, 1))
        _, y = code.encode(x)
        joint = empirical_joint(x, y, target.shape)
        return norm(joint - target), joint, (x, y)

    results = ordered_map(run, range(trials), threads)
    devs = np.array([r[0] for r in results])
    joints = np.stack([r[1] for r in results])
    q_hat = JointPMF.normalized(joints.mean(axis=0))
    meta = {"n": n, "R": R, "code_rate": code.rate, "blocks": len(code.blocks),
            "block_length": code.blocks[0].n, "seed": seed}
    return SimulationReport(devs, np.zeros(trials, dtype=int), joints, q_hat, meta)


@dataclass(frozen=True)
class ConverseCheck:
    I_hat: float
    I_tol: float
    tv_hat: float
    tv_tol: float
    mean_deviation: float
    marginal_tv: float
    marginal_tol: float
    ok: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def converse_check(report: SimulationReport, R: float, p: CoordinationProblem) -> ConverseCheck:
    """I(Q_hat) <= R and ||Q_hat - P_X x P_{Y|X}||_F <= mean deviation, each up to 3 sigma.

    ``ok`` covers these two facts; the X-marginal distance is reported alongside.

    Sigmas come from the spread of the per-trial empirical joints: per-cell
    standard errors for the distance checks and a delta-method standard error
    for the plug-in mutual information.
    """
    J = report.joints.reshape(report.trials, -1)
    T = report.trials
    Qh = report.q_hat.table
    se = J.std(axis=0, ddof=1) / math.sqrt(T) if T > 1 else np.full(J.shape[1], 1.0)
    cov = np.cov(J, rowvar=False) / T if T > 1 else np.eye(J.shape[1])
    qx = Qh.sum(axis=1, keepdims=True)
    qy = Qh.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(Qh > 0, np.log2(Qh / (qx * qy)), 0.0).ravel()
    I_hat = mutual_information(Qh)
    I_tol = 3.0 * math.sqrt(max(float(g @ cov @ g), 0.0))
    norm = table_norm(p.cls, Qh.shape)
    tv_hat = norm(Qh - p.target)
    tv_tol = 3.0 * float(se.sum())
    marg = float(np.abs(Qh.sum(axis=1) - p.px).sum())
    se_x = J.reshape(T, *Qh.shape).sum(axis=2).std(axis=0, ddof=1) / math.sqrt(T) if T > 1 else np.ones(len(p.px))
    marg_tol = 3.0 * float(se_x.sum())
    ok = I_hat <= R + I_tol and tv_hat <= report.mean + tv_tol
    return ConverseCheck(I_hat, I_tol, tv_hat, tv_tol, report.mean, marg, marg_tol, bool(ok))


# ---------------------------------------------------------------------------
# two-stage side-information scheme


def composed_norm(F: FunctionClass, g: np.ndarray, shape_xyu: tuple) -> TableNorm:
    """Seminorm of F o g-bar on X x Y x U tables, g-bar(x, y, u) = (g(y, u), y)."""
    nx, ny, nu = shape_xyu
    base = table_norm(F, (nx, ny))
    push = np.zeros((nx * ny, nx * ny * nu))
    for x in range(nx):
        for y in range(ny):
            for u in range(nu):
                push[int(g[y, u]) * ny + y, (x * ny + y) * nu + u] = 1.0
    agg = push if base.agg is None else base.agg @ push
    return TableNorm(shape_xyu, agg, base.tests)


def _is_deterministic(K: np.ndarray) -> bool:
    return bool(np.all((np.abs(K) < 1e-12) | (np.abs(K - 1) < 1e-12)))


def _digits(idx: np.ndarray, base: int, n: int) -> np.ndarray:
    powers = base ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % base


def _encode_digits(u: np.ndarray, base: int) -> int:
    out = 0
    for s in u:
        out = out * base + int(s)
    return out


@dataclass(frozen=True, eq=False)
class BinningCode:
    """Random binning of stage-1 indices; decoding searches a bin for the best match with y."""

    index_space: int
    n_bins: int
    bins: np.ndarray
    members: tuple  # members[b] = sorted indices in bin b

    @classmethod
    def random(cls, index_space: int, n_bins: int, seed: int) -> "BinningCode":
        rng = stream(seed, _BIN_KEY)
        bins = rng.integers(0, n_bins, size=index_space)
        order = np.argsort(bins, kind="stable")
        cuts = np.searchsorted(bins[order], np.arange(n_bins + 1))
        members = tuple(order[cuts[b]: cuts[b + 1]] for b in range(n_bins))
        return cls(index_space, n_bins, bins, members)


def simulate_wz(p: SideInfoProblem, solution: WZSolution, R1: float, R_bin: float, n1: int, n2: int,
                trials: int, seed: int, decoder: str = "ml", threshold_slack: float = 0.1,
                threads: int | None = None) -> SimulationReport:
    """Stage 1 maps x-blocks of length n1 to U-blocks; stage 2 bins every U-block at
    rate R_bin and decodes it against its y-block; x-hat_i = g(y_i, u-tilde_i).

    Decoders: ``"ml"`` picks the bin member with the largest information density
    (lowest index among equals); ``"threshold"`` needs a unique member with density
    above n1 (I(U;Y) - threshold_slack).
    """
    if decoder not in ("ml", "threshold"):
        raise ValueError("decoder must be 'ml' or 'threshold'")
    pxy = p.pxy
    nx, ny = pxy.shape
    K = np.asarray(solution.kernel, float)
    g = np.asarray(solution.g, dtype=int)
    nu = K.shape[1]
    px = pxy.sum(axis=1)
    q_xu = px[:, None] * K
    q_uy = K.T @ pxy  # (nu, ny)
    dens = density_matrix(q_uy)
    I_uy = mutual_information(q_uy)
    norm = table_norm(p.cls, (nx, ny))

    deterministic = _is_deterministic(K)
    if deterministic:
        phi = np.argmax(K, axis=1)
        space = nu ** n1
        if space > MAX_INDEX_SPACE:
            raise ValueError("|U|^n1 exceeds the explicit index space")
        stage1 = None
    else:
        stage1 = build_piggyback_code(q_xu, AllFunctions(), n1, R1, seed, max_codewords=MAX_INDEX_SPACE)
        if len(stage1.blocks) != 1:
            raise ValueError("stage-1 rate budget too large for a single explicit codebook")
        space = stage1.blocks[0].M
    n_bins = max(1, int(math.floor(2.0 ** (n1 * R_bin) + 1e-9)))
    binning = BinningCode.random(space, n_bins, seed)

    def stage1_encode(xb):
        if deterministic:
            ub = phi[xb]
            return _encode_digits(ub, nu), ub
        (m,), ub = stage1.encode(xb)
        return m, ub

    def member_tuples(members):
        if deterministic:
            return _digits(members.astype(np.int64), nu, n1)
        return stage1.blocks[0].entries[members]

    # digits of an index split into chunks small enough for per-block lookup tables
    chunk = max(1, int(math.log(4096) // math.log(max(nu, 2))))
    spans = [(s, min(s + chunk, n1)) for s in range(0, n1, chunk)]

    def scores(members, yb):
        if not deterministic:
            return dens[member_tuples(members), yb[None, :]].sum(axis=1)
        total = np.zeros(len(members))
        for lo, hi in spans:
            width = hi - lo
            table = dens[_digits(np.arange(nu ** width, dtype=np.int64), nu, width), yb[None, lo:hi]].sum(axis=1)
            part = (members // nu ** (n1 - hi)) % nu ** width
            total += table[part]
        return total

    def decode(b, yb):
        members = binning.members[b]
        if len(members) == 0:
            return None
        score = scores(members, yb)
        if decoder == "ml":
            top = np.max(score)
            if not np.isfinite(top):
                return None
            # equal likelihoods go to the lowest index in the bin
            return int(members[np.flatnonzero(score >= top - 1e-9)[0]])
        ok = np.flatnonzero(score > n1 * (I_uy - threshold_slack))
        return int(members[ok[0]]) if len(ok) == 1 else None

    def run(t):
        rng = stream(seed, t, 2)
        flat = rng.choice(nx * ny, size=n1 * n2, p=pxy.ravel())
        x, y = flat // ny, flat % ny
        xhat = np.empty_like(x)
        errors = 0
        for j in range(n2):
            sl = slice(j * n1, (j + 1) * n1)
            m, ub = stage1_encode(x[sl])
            got = decode(int(binning.bins[m]), y[sl])
            if got != m:
                errors += 1
            ut = member_tuples(np.array([got]))[0] if got is not None else ub * 0
            xhat[sl] = g[y[sl], ut]
        joint = empirical_joint(xhat, y, (nx, ny))
        return norm(joint - pxy), errors, joint

    results = ordered_map(run, range(trials), threads)
    devs = np.array([r[0] for r in results])
    errs = np.array([r[1] for r in results], dtype=int)
    joints = np.stack([r[2] for r in results])
    q_hat = JointPMF.normalized(joints.mean(axis=0))
    h_u_given_y = entropy(q_uy) - entropy(q_uy.sum(axis=0))
    meta = {"n1": n1, "n2": n2, "R1": R1, "R_bin": R_bin, "bins": n_bins,
            "blocks_per_trial": n2, "decoder": decoder, "deterministic_stage1": deterministic,
            "stage1_rate": math.log2(space) / n1, "bin_rate": math.log2(n_bins) / n1,
            "H_U_given_Y": h_u_given_y, "seed": seed}
    return SimulationReport(devs, errs, joints, q_hat, meta)


def report_to_json(report: SimulationReport) -> str:
    return json.dumps(report.to_json(), sort_keys=True)
