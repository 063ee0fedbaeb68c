"""Command-line harness: JSON configs in, CSV or JSON artifacts out.

    gctypical <command> --config cfg.json --seed 0 --out result.csv [--format csv|json] [--threads k]

``--config`` takes a path or an inline JSON object. Inside a config, the keys
``class``, ``lhs``, ``rhs``, ``model`` and ``measure`` may hold a path to a
JSON file (resolved relative to the config) instead of an inline object.
Results are identical for every thread count.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classes import AllFunctions, class_from_json, class_to_json
from .coding_sim import converse_check, simulate_coordination, simulate_wz
from .concentration import deviation_scaling, shatter_check, vc_probe
from .information import mutual_information
from .measures import measure_from_json, model_from_json
from .rates import (InfeasibleProblem, WZSolution, coordination_rate, curve_to_csv, multi_distortion_rate,
                    problem_from_json, rate_curve, wz_rate)
from .rng import resolve_threads
from .seminorm import sup_result
from .typicality import convergence_curve, is_typical, quantizer_path, records_to_csv, summarize

COMMANDS = ("seminorm", "typical", "converge", "rate", "rate-curve", "simulate-coord",
            "simulate-wz", "shatter", "scaling", "quantize")
EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NONCONVERGED = 0, 2, 3, 4
_FILE_KEYS = ("class", "lhs", "rhs", "model", "measure")


class ConfigError(ValueError):
    pass


class NotConverged(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    inputs: dict
    seed: int
    output: str | None = None
    format: str = "csv"
    threads: int | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")

    def get(self, key, default=...):
        if key in self.inputs:
            val = self.inputs[key]
            if key in _FILE_KEYS and isinstance(val, str):
                try:
                    return json.loads((self.base_dir / val).read_text())
                except (OSError, json.JSONDecodeError) as exc:
                    raise ConfigError(f"cannot read {key} from {val}: {exc}") from exc
            return val
        if default is ...:
            raise ConfigError(f"config is missing {key!r}")
        return default


@dataclass
class Artifact:
    """Rendered output plus the one-line summary metric."""

    rows: list | None  # list of dicts for CSV
    payload: dict  # JSON document
    metric: str
    text: str | None = None  # preformatted CSV

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(_plain(self.payload), sort_keys=True, indent=1) + "\n"
        if self.text is not None:
            return self.text
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = list(self.rows[0].keys())
        w.writerow(keys)
        for r in self.rows:
            w.writerow([_cell(r[k]) for k in keys])
        return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_plain(v))
    return v


def _plain(obj):
    """JSON-safe copy: arrays to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# config helpers


def _class(cfg: ExperimentConfig, key: str = "class", default=None):
    obj = cfg.get(key, default)
    if obj is None:
        return AllFunctions()
    return obj if not isinstance(obj, dict) else class_from_json(obj)


def _problem(cfg: ExperimentConfig, kind: str):
    obj = dict(cfg.inputs, problem=kind)
    if "class" in obj:
        obj["class"] = cfg.get("class")
    return problem_from_json(obj)


def _solution_row(s) -> dict:
    return {"rate": float(s.rate), "solver_gap": float(s.gap), "iterations": int(s.iterations),
            "converged": bool(s.converged), "feasible": bool(s.feasible)}


# ---------------------------------------------------------------------------
# commands


def cmd_seminorm(cfg):
    F = _class(cfg)
    lhs = measure_from_json(cfg.get("lhs"))
    rhs_obj = cfg.get("rhs", None)
    rhs = None if rhs_obj is None else model_from_json(rhs_obj)
    r = sup_result(F, lhs, rhs)
    row = {"value": float(r.value), "exact": bool(r.exact), "error_bound": float(r.error_bound),
           "method": r.method}
    return Artifact([row], dict(row, **{"class": class_to_json(F)}), f"value={r.value!r}")


def cmd_typical(cfg):
    F = _class(cfg)
    model = model_from_json(cfg.get("model"))
    res = is_typical(cfg.get("points"), model, F, float(cfg.get("epsilon")))
    row = {"typical": bool(res.typical), "deviation": float(res.deviation)}
    return Artifact([row], row, f"typical={res.typical} deviation={res.deviation!r}")


def cmd_converge(cfg):
    F = _class(cfg)
    model = model_from_json(cfg.get("model"))
    recs = convergence_curve(model, F, [int(n) for n in cfg.get("n_grid")], int(cfg.get("trials")),
                             cfg.seed, cfg.threads)
    summ = summarize(recs)
    payload = {"summary": [dict(s.__dict__, stderr=s.stderr) for s in summ],
               "records": [r.__dict__ for r in recs]}
    return Artifact(None, payload, f"mean@n={summ[-1].n}={summ[-1].mean!r}", records_to_csv(recs))


def cmd_rate(cfg):
    problem = cfg.get("problem", "coordination")
    if problem == "coordination":
        p = _problem(cfg, "coordination")
        s = coordination_rate(p)
        if not s.converged:
            raise NotConverged(f"solver gap {s.gap!r} after {s.iterations} iterations")
        row = _solution_row(s)
        return Artifact([row], dict(row, Q=s.Q), f"rate={s.rate!r}")
    if problem == "multi":
        p = _problem(cfg, "multi")
        s = multi_distortion_rate(p)
        if not s.feasible:
            raise InfeasibleProblem("distortion levels cannot be met")
        if not s.converged:
            raise NotConverged(f"solver gap {s.gap!r} after {s.iterations} iterations")
        row = _solution_row(s)
        return Artifact([row], dict(row, Q=s.Q), f"rate={s.rate!r}")
    if problem == "wz":
        p = _problem(cfg, "wz")
        s = wz_rate(p, restarts=int(cfg.get("restarts", 4)), seed=cfg.seed)
        if not s.feasible:
            raise InfeasibleProblem("no decoder map meets the coordination constraint")
        row = {"rate": float(s.rate), "feasible": True, "upper_bound": bool(s.upper_bound)}
        return Artifact([row], s.to_json(), f"rate={s.rate!r}")
    raise ConfigError(f"unknown problem {problem!r}")


def cmd_rate_curve(cfg):
    p = _problem(cfg, "coordination")
    try:
        rows = rate_curve(p, cfg.get("deltas"))
    except AssertionError as exc:
        raise NotConverged(str(exc)) from exc
    payload = {"rows": [r.__dict__ for r in rows]}
    return Artifact(None, payload, f"points={len(rows)}", curve_to_csv(rows))


def cmd_simulate_coord(cfg):
    p = _problem(cfg, "coordination")
    sol = coordination_rate(p)
    R = float(cfg.get("R", sol.rate + float(cfg.get("rate_margin", 0.25))))
    rep = simulate_coordination(p, R, int(cfg.get("n")), int(cfg.get("trials")), cfg.seed,
                                Q_code=sol.Q, threads=cfg.threads)
    chk = converse_check(rep, R, p)
    payload = dict(rep.to_json(), rate_function=sol.rate, converse=chk.to_json())
    return Artifact(None, payload, f"mean_deviation={rep.mean!r}", rep.to_csv())


def cmd_simulate_wz(cfg):
    p = _problem(cfg, "wz")
    if "kernel" in cfg.inputs:
        sol = WZSolution(float("nan"), np.asarray(cfg.get("kernel"), float),
                         np.asarray(cfg.get("g"), int), True)
    else:
        sol = wz_rate(p, seed=cfg.seed)
        if not sol.feasible:
            raise InfeasibleProblem("no decoder map meets the coordination constraint")
    K = sol.kernel
    qxu = p.pxy.sum(axis=1)[:, None] * K
    R1 = float(cfg.get("R1", mutual_information(qxu) + float(cfg.get("rate_margin", 0.25))))
    rep = simulate_wz(p, sol, R1, float(cfg.get("R_bin")), int(cfg.get("n1")), int(cfg.get("n2")),
                      int(cfg.get("trials")), cfg.seed, decoder=cfg.get("decoder", "ml"),
                      threads=cfg.threads)
    payload = dict(rep.to_json(), kernel=K, g=sol.g)
    return Artifact(None, payload, f"decode_error_rate={rep.decode_error_rate!r}", rep.to_csv())


def cmd_shatter(cfg):
    F = _class(cfg)
    if "points" in cfg.inputs:
        r = shatter_check(F, cfg.get("points"))
        row = {"shattered": r.shattered, "achieved": r.achieved, "labelings": 2 ** len(r.points)}
        return Artifact([row], r.to_json(), f"shattered={r.shattered}")
    pr = vc_probe(F, int(cfg.get("budget", 10_000)), cfg.seed, int(cfg.get("evidence_sets", 1000)))
    row = {"lower_bound": pr.lower_bound, "counterexample_evidence": pr.counterexample_evidence,
           "tested": pr.tested, "classical_dimension": pr.classical_dimension}
    return Artifact([row], pr.to_json(), f"lower_bound={pr.lower_bound}")


def cmd_scaling(cfg):
    F = _class(cfg)
    model = model_from_json(cfg.get("model"))
    t = deviation_scaling(F, model, [int(n) for n in cfg.get("n_grid")], int(cfg.get("trials")), cfg.seed,
                          tuple(cfg.get("tail_eps", ())), cfg.threads)
    last = t.rows[-1]
    return Artifact(None, t.to_json(), f"mean_sqrt_n@n={last.n}={last.mean_sqrt_n!r}", t.to_csv())


def cmd_quantize(cfg):
    F = _class(cfg)
    mu = measure_from_json(cfg.get("measure"))
    xc = cfg.get("x_coords", None)
    path = quantizer_path(mu, F, int(cfg.get("m")), None if xc is None else tuple(xc))
    rows = [{"m": k + 1, "codepoints": len(q.codepoints), "delta": float(d)} for k, (q, d) in enumerate(path)]
    q, d = path[-1]
    payload = {"quantizer": q.to_json(), "achieved_delta": float(d), "path": rows}
    return Artifact(rows, payload, f"achieved_delta={d!r}")


HANDLERS = {
    "seminorm": cmd_seminorm, "typical": cmd_typical, "converge": cmd_converge, "rate": cmd_rate,
    "rate-curve": cmd_rate_curve, "simulate-coord": cmd_simulate_coord, "simulate-wz": cmd_simulate_wz,
    "shatter": cmd_shatter, "scaling": cmd_scaling, "quantize": cmd_quantize,
}


# ---------------------------------------------------------------------------
# driver


def write_atomic(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    inputs, base = {}, Path.cwd()
    if args.config:
        text = args.config.strip()
        try:
            if text.startswith("{"):
                inputs = json.loads(text)
            else:
                base = Path(args.config).resolve().parent
                inputs = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        if not isinstance(inputs, dict):
            raise ConfigError("config must be a JSON object")
    command = inputs.get("command", args.command)
    if command != args.command:
        raise ConfigError(f"config is for {command!r}, not {args.command!r}")
    seed = args.seed if args.seed is not None else inputs.get("seed")
    if seed is None:
        raise ConfigError("a seed is required (--seed or config 'seed')")
    try:
        seed = int(seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError("seed must be an integer") from exc
    out = args.out if args.out is not None else inputs.get("output")
    fmt = args.format or inputs.get("format", "csv")
    return ExperimentConfig(args.command, inputs, seed, out, fmt, resolve_threads(args.threads), base)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gctypical", description="Typicality and coordination experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file or inline JSON object")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output file (stdout when omitted)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--threads", type=int, help="worker threads; never changes results")
    return parser


def run(cfg: ExperimentConfig) -> tuple[int, str, str]:
    """Execute one command; returns (exit code, rendered output, summary line)."""
    try:
        art = HANDLERS[cfg.command](cfg)
    except ConfigError:
        raise
    except InfeasibleProblem as exc:
        return EXIT_INFEASIBLE, "", f"{cfg.command}: infeasible: {exc}"
    except NotConverged as exc:
        return EXIT_NONCONVERGED, "", f"{cfg.command}: not converged: {exc}"
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    text = art.render(cfg.format)
    return EXIT_OK, text, f"{cfg.command} {art.metric} -> {cfg.output or '<stdout>'}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        code, text, summary = run(cfg)
    except ConfigError as exc:
        print(f"{args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if code != EXIT_OK:
        print(summary, file=sys.stderr)
        return code
    if cfg.output:
        write_atomic(cfg.output, text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
