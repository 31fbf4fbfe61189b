"""Command-line harness: configure an experiment, run it reproducibly, and
emit JSON, CSV, or plain-text reports.

Output envelope: {"config": ..., "results": ..., "metadata": ...}.  The
config and results blocks are byte-reproducible for a given configuration
and seed at any worker-thread count; volatile fields (timestamp, backend,
thread count) are confined to metadata.  Matrices serialize as row-major
flat arrays with explicit dimensions.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__, kernels, oracles
from .estimators import EstimatorSpec, cross_product_stats
from .risk import (
    DominanceReport,
    ThetaScenario,
    dominance_check,
    make_theta,
    mc_matrix_risk,
    paired_risk_difference,
    tuning_sweep,
)
from .sampling import ModelSpec, SeedSpec, stein_identity_mc

COMMANDS = ("risk", "dominance", "sweep", "stein-check", "counterexample",
            "oracle-table")

DEFAULT_Z = 3.0


# -- serialization helpers -------------------------------------------------

def _mat_to_dict(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=np.float64)
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]),
            "data": [float(v) for v in m.reshape(-1)]}


def _mat_from_dict(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=np.float64).reshape(d["rows"], d["cols"])


def _vec_to_list(v: np.ndarray) -> list[float]:
    return [float(x) for x in np.asarray(v, dtype=np.float64)]


def _fmt(x: float) -> str:
    """Fixed 17-significant-digit scientific rendering for CSV cells."""
    return format(float(x), ".16e")


# -- experiment configuration ----------------------------------------------

@dataclass(eq=False)
class ExperimentConfig:
    """Everything needed to reproduce a run, minus execution details
    (thread count, output destination) which do not affect results."""

    command: str
    n: int | None = None
    p: int | None = None
    sigma2: float = 1.0
    nu: int | None = None
    sigma_cov: np.ndarray | None = None
    scenario: ThetaScenario = field(default_factory=ThetaScenario.zero)
    estimator: str = "diagonal-js"
    a: float = 1.0
    a_grid: list[float] | None = None
    lambda2_grid: list[float] | None = None
    kappa: float | None = None
    reps: int = 1_000_000
    seed: int = 42
    output_format: str = "json"

    def to_dict(self) -> dict:
        sc = self.scenario
        return {
            "command": self.command,
            "model": {
                "n": self.n, "p": self.p, "sigma2": float(self.sigma2),
                "nu": self.nu,
                "sigma_cov": None if self.sigma_cov is None
                else _mat_to_dict(self.sigma_cov),
            },
            "scenario": {
                "kind": sc.kind,
                "kappa": None if sc.kappa is None else float(sc.kappa),
                "theta_star": None if sc.theta_star is None
                else _vec_to_list(sc.theta_star),
                "scale": None if sc.scale is None else float(sc.scale),
                "seed": int(sc.seed),
                "matrix": None if sc.matrix is None else _mat_to_dict(sc.matrix),
            },
            "estimator": {"kind": self.estimator, "a": float(self.a)},
            "a_grid": None if self.a_grid is None
            else [float(a) for a in self.a_grid],
            "lambda2_grid": None if self.lambda2_grid is None
            else [float(v) for v in self.lambda2_grid],
            "kappa": None if self.kappa is None else float(self.kappa),
            "reps": int(self.reps),
            "seed": int(self.seed),
            "format": self.output_format,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        sc = d["scenario"]
        scenario = ThetaScenario(
            kind=sc["kind"],
            kappa=sc["kappa"],
            theta_star=None if sc["theta_star"] is None
            else np.asarray(sc["theta_star"], dtype=np.float64),
            scale=sc["scale"],
            seed=sc["seed"],
            matrix=None if sc["matrix"] is None else _mat_from_dict(sc["matrix"]),
        )
        model = d["model"]
        return cls(
            command=d["command"],
            n=model["n"], p=model["p"], sigma2=model["sigma2"], nu=model["nu"],
            sigma_cov=None if model["sigma_cov"] is None
            else _mat_from_dict(model["sigma_cov"]),
            scenario=scenario,
            estimator=d["estimator"]["kind"], a=d["estimator"]["a"],
            a_grid=d["a_grid"], lambda2_grid=d["lambda2_grid"],
            kappa=d["kappa"], reps=d["reps"], seed=d["seed"],
            output_format=d["format"],
        )

    def build_model(self) -> ModelSpec:
        theta = make_theta(self.scenario, self.n, self.p)
        return ModelSpec(n=self.n, p=self.p, theta=theta, sigma2=self.sigma2,
                         nu=self.nu, row_cov=self.sigma_cov)

    def build_estimator(self) -> EstimatorSpec:
        return EstimatorSpec(kind=self.estimator, a=self.a,
                             sigma_known=self.nu is None)

    def seed_spec(self) -> SeedSpec:
        return SeedSpec(self.seed)


def _dominance_dict(report: DominanceReport) -> dict:
    return {
        "diff_mean": _mat_to_dict(report.diff_mean),
        "diff_se": _mat_to_dict(report.diff_se),
        "min_eig": float(report.min_eig),
        "min_eig_dir": _vec_to_list(report.min_eig_dir),
        "projected_se": float(report.projected_se),
        "alpha_grid": [
            {"alpha": _vec_to_list(s.alpha), "value": float(s.value),
             "se": float(s.se)}
            for s in report.alpha_grid_stats
        ],
        "verdict": report.verdict,
        "z_threshold": float(report.z_threshold),
    }


# -- command runners --------------------------------------------------------

def run_risk(cfg: ExperimentConfig, threads: int = 1) -> dict:
    model = cfg.build_model()
    est = mc_matrix_risk(model, cfg.build_estimator(), cfg.reps,
                         cfg.seed_spec(), threads=threads)
    results = {
        "risk_mean": _mat_to_dict(est.mean),
        "risk_se": _mat_to_dict(est.se),
        "reps": est.reps,
        "seed": {"master_seed": est.seed.master_seed,
                 "stream_id": est.seed.stream_id},
    }
    return {"config": cfg.to_dict(), "results": results}


def run_dominance(cfg: ExperimentConfig, threads: int = 1) -> dict:
    model = cfg.build_model()
    paired = paired_risk_difference(model, cfg.build_estimator(), cfg.reps,
                                    cfg.seed_spec(), threads=threads)
    report = dominance_check(paired, DEFAULT_Z)
    results = _dominance_dict(report)
    results["reps"] = paired.reps
    results["est_risk_mean"] = _mat_to_dict(paired.est_risk.mean)
    results["est_risk_se"] = _mat_to_dict(paired.est_risk.se)
    return {"config": cfg.to_dict(), "results": results}


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> dict:
    model = cfg.build_model()
    entries = tuning_sweep(model, cfg.a_grid, cfg.reps, cfg.seed_spec(),
                           threads=threads, z_threshold=DEFAULT_Z)
    rows = []
    for entry in entries:
        uniform = entry.report.alpha_grid_stats[-1]
        rows.append({
            "a": float(entry.a),
            "uniform_value": float(uniform.value),
            "uniform_se": float(uniform.se),
            "min_eig": float(entry.report.min_eig),
            "projected_se": float(entry.report.projected_se),
            "verdict": entry.report.verdict,
        })
    return {"config": cfg.to_dict(), "results": {"entries": rows,
                                                 "reps": cfg.reps}}


def run_stein_check(cfg: ExperimentConfig, threads: int = 1) -> dict:
    if cfg.n is None or cfg.n <= 2:
        raise ValueError(
            "stein-check requires n >= 3: the inverse-norm expectation "
            "underlying the identity is infinite for n <= 2"
        )
    seed = cfg.seed_spec()
    rows = []
    flagged = False
    for lam2 in cfg.lambda2_grid:
        chk = stein_identity_mc(cfg.n, lam2, cfg.reps, seed, threads=threads)
        series = oracles.a_lambda(cfg.n, lam2)
        lhs_ok = abs(chk.lhs - series) <= 3.0 * chk.lhs_se
        rhs_ok = abs(chk.rhs - series) <= 3.0 * chk.rhs_se
        pair_ok = abs(chk.diff) <= 3.0 * chk.diff_se
        flagged = flagged or not (lhs_ok and rhs_ok and pair_ok)
        rows.append({
            "lambda2": float(lam2),
            "lhs": chk.lhs, "lhs_se": chk.lhs_se,
            "rhs": chk.rhs, "rhs_se": chk.rhs_se,
            "diff": chk.diff, "diff_se": chk.diff_se,
            "series_a": float(series),
            "lhs_ok": lhs_ok, "rhs_ok": rhs_ok, "pair_ok": pair_ok,
        })
    results = {"rows": rows, "flagged": flagged, "reps": cfg.reps}
    if cfg.nu is not None:
        unknown_rows = []
        for lam2 in cfg.lambda2_grid:
            theta = np.zeros((cfg.n, 1))
            theta[0, 0] = math.sqrt(lam2)
            model = ModelSpec(n=cfg.n, p=1, theta=theta, sigma2=cfg.sigma2,
                              nu=cfg.nu)
            spec = EstimatorSpec(kind="diagonal-js", a=1.0, sigma_known=False)
            stats = cross_product_stats(model, spec, cfg.reps, seed,
                                        threads=threads)
            gap = float(stats.delta[0] - stats.gamma[0])
            ok = abs(gap) <= 3.0 * float(stats.diff_se[0])
            flagged = flagged or not ok
            unknown_rows.append({
                "lambda2": float(lam2),
                "delta": float(stats.delta[0]),
                "delta_se": float(stats.delta_se[0]),
                "gamma": float(stats.gamma[0]),
                "gamma_se": float(stats.gamma_se[0]),
                "diff": gap, "diff_se": float(stats.diff_se[0]), "ok": ok,
            })
        results["unknown_sigma_rows"] = unknown_rows
        results["flagged"] = flagged
    return {"config": cfg.to_dict(), "results": results}


def run_counterexample(cfg: ExperimentConfig, threads: int = 1) -> dict:
    model = cfg.build_model()
    predicted = oracles.counterexample_quadratic(cfg.n, cfg.p, cfg.kappa, cfg.a)
    paired = paired_risk_difference(model, cfg.build_estimator(), cfg.reps,
                                    cfg.seed_spec(), threads=threads)
    report = dominance_check(paired, DEFAULT_Z)
    alpha = np.full(cfg.p, 1.0 / math.sqrt(cfg.p))
    mc_value, mc_se = paired.est_risk.projection(alpha)
    diff_value, diff_se = paired.projection(alpha)
    tolerance = max(4.0 * mc_se, 0.01)
    results = {
        "predicted": float(predicted),
        "mc_value": float(mc_value),
        "mc_se": float(mc_se),
        "difference": float(mc_value - predicted),
        "tolerance": float(tolerance),
        "within_tolerance": bool(abs(mc_value - predicted) <= tolerance),
        "uniform_diff_value": float(diff_value),
        "uniform_diff_se": float(diff_se),
        "verdict": report.verdict,
        "reps": cfg.reps,
    }
    return {"config": cfg.to_dict(), "results": results}


def run_oracle_table(cfg: ExperimentConfig, threads: int = 1) -> dict:
    rows = []
    for lam2 in cfg.lambda2_grid:
        a_val = oracles.a_lambda(cfg.n, lam2)
        rows.append({
            "lambda2": float(lam2),
            "a_curve": float(a_val),
            "risks": [
                {"a": float(a),
                 "risk": float(oracles.scalar_risk_exact(cfg.n, cfg.sigma2,
                                                         lam2, a))}
                for a in cfg.a_grid
            ],
        })
    return {"config": cfg.to_dict(),
            "results": {"rows": rows, "n": cfg.n, "sigma2": float(cfg.sigma2)}}


_RUNNERS = {
    "risk": run_risk,
    "dominance": run_dominance,
    "sweep": run_sweep,
    "stein-check": run_stein_check,
    "counterexample": run_counterexample,
    "oracle-table": run_oracle_table,
}


def run_command(cfg: ExperimentConfig, threads: int = 1) -> dict:
    """Dispatch a config to its runner; returns the data payload
    (config + results, no metadata)."""
    return _RUNNERS[cfg.command](cfg, threads=threads)


def canonical_data_bytes(payload: dict) -> bytes:
    """Canonical serialization of the reproducible part of a payload."""
    data = {"config": payload["config"], "results": payload["results"]}
    return json.dumps(data, sort_keys=True, indent=2).encode()


def _with_metadata(payload: dict, threads: int) -> dict:
    out = dict(payload)
    out["metadata"] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
        "backend": kernels.backend_name(),
        "threads": threads,
    }
    return out


# -- text / csv rendering ---------------------------------------------------

def _render_matrix(d: dict, indent: str = "  ") -> str:
    m = _mat_from_dict(d)
    lines = []
    for row in m:
        lines.append(indent + "  ".join(f"{v: .6e}" for v in row))
    return "\n".join(lines)


def _to_text(payload: dict) -> str:
    cfg = payload["config"]
    res = payload["results"]
    out = [f"command: {cfg['command']}"]
    cmd = cfg["command"]
    if cmd == "risk":
        out.append(f"reps: {res['reps']}")
        out.append("risk mean:")
        out.append(_render_matrix(res["risk_mean"]))
        out.append("risk se:")
        out.append(_render_matrix(res["risk_se"]))
    elif cmd == "dominance":
        out.append(f"verdict: {res['verdict']}")
        out.append(f"min eigenvalue: {res['min_eig']:.6e} "
                   f"(se {res['projected_se']:.6e})")
        out.append("risk difference (baseline minus shrinkage):")
        out.append(_render_matrix(res["diff_mean"]))
        out.append("alpha grid:")
        for s in res["alpha_grid"]:
            alpha = ", ".join(f"{v:.4f}" for v in s["alpha"])
            out.append(f"  [{alpha}]  value {s['value']: .6e}  se {s['se']:.6e}")
    elif cmd == "sweep":
        out.append(f"{'a':>10}  {'uniform':>14}  {'min_eig':>14}  verdict")
        for row in res["entries"]:
            out.append(f"{row['a']:>10.4f}  {row['uniform_value']:>14.6e}  "
                       f"{row['min_eig']:>14.6e}  {row['verdict']}")
    elif cmd == "stein-check":
        out.append(f"{'lambda2':>10}  {'lhs':>12}  {'rhs':>12}  "
                   f"{'series':>12}  ok")
        for row in res["rows"]:
            ok = row["lhs_ok"] and row["rhs_ok"] and row["pair_ok"]
            out.append(f"{row['lambda2']:>10.3f}  {row['lhs']:>12.6f}  "
                       f"{row['rhs']:>12.6f}  {row['series_a']:>12.6f}  {ok}")
        if res.get("unknown_sigma_rows"):
            out.append("unknown-sigma cross-product check (delta vs gamma):")
            for row in res["unknown_sigma_rows"]:
                out.append(f"{row['lambda2']:>10.3f}  {row['delta']:>12.6f}  "
                           f"{row['gamma']:>12.6f}  {row['ok']}")
        out.append(f"flagged: {res['flagged']}")
    elif cmd == "counterexample":
        out.append(f"predicted uniform projection: {res['predicted']:.6f}")
        out.append(f"monte carlo estimate:         {res['mc_value']:.6f} "
                   f"(se {res['mc_se']:.2e})")
        out.append(f"within tolerance {res['tolerance']:.4f}: "
                   f"{res['within_tolerance']}")
        out.append(f"verdict: {res['verdict']}")
    elif cmd == "oracle-table":
        a_list = [r["a"] for r in res["rows"][0]["risks"]]
        header = f"{'lambda2':>10}  {'A':>12}" + "".join(
            f"  {'risk@a=' + format(a, '.3g'):>14}" for a in a_list)
        out.append(header)
        for row in res["rows"]:
            line = f"{row['lambda2']:>10.3f}  {row['a_curve']:>12.8f}"
            line += "".join(f"  {r['risk']:>14.8f}" for r in row["risks"])
            out.append(line)
    return "\n".join(out) + "\n"


def _to_csv(payload: dict) -> str:
    cfg = payload["config"]
    res = payload["results"]
    cmd = cfg["command"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if cmd == "sweep":
        writer.writerow(["a", "uniform_value", "uniform_se", "min_eig",
                         "projected_se", "verdict"])
        for row in res["entries"]:
            writer.writerow([_fmt(row["a"]), _fmt(row["uniform_value"]),
                             _fmt(row["uniform_se"]), _fmt(row["min_eig"]),
                             _fmt(row["projected_se"]), row["verdict"]])
    elif cmd == "stein-check":
        writer.writerow(["lambda2", "lhs", "lhs_se", "rhs", "rhs_se",
                         "diff", "diff_se", "series_a",
                         "lhs_ok", "rhs_ok", "pair_ok"])
        for row in res["rows"]:
            writer.writerow([_fmt(row["lambda2"]), _fmt(row["lhs"]),
                             _fmt(row["lhs_se"]), _fmt(row["rhs"]),
                             _fmt(row["rhs_se"]), _fmt(row["diff"]),
                             _fmt(row["diff_se"]), _fmt(row["series_a"]),
                             row["lhs_ok"], row["rhs_ok"], row["pair_ok"]])
    elif cmd == "oracle-table":
        writer.writerow(["lambda2", "a_curve", "a", "risk"])
        for row in res["rows"]:
            for r in row["risks"]:
                writer.writerow([_fmt(row["lambda2"]), _fmt(row["a_curve"]),
                                 _fmt(r["a"]), _fmt(r["risk"])])
    elif cmd == "risk":
        writer.writerow(["kind", "row", "col", "value"])
        for kind in ("risk_mean", "risk_se"):
            m = res[kind]
            for i in range(m["rows"]):
                for j in range(m["cols"]):
                    writer.writerow([kind, i, j,
                                     _fmt(m["data"][i * m["cols"] + j])])
    elif cmd in ("dominance", "counterexample"):
        writer.writerow(["key", "value"])
        flat = {k: v for k, v in res.items()
                if isinstance(v, (int, float, bool, str))}
        for k in sorted(flat):
            v = flat[k]
            writer.writerow([k, _fmt(v) if isinstance(v, float) else v])
    return buf.getvalue()


def render(payload: dict, output_format: str) -> str:
    if output_format == "json":
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if output_format == "csv":
        return _to_csv(payload)
    if output_format == "text":
        return _to_text(payload)
    raise ValueError(f"unknown format {output_format!r}")


# -- argument parsing -------------------------------------------------------

def _float_list(text: str) -> list[float]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return [float(t) for t in items]


def _load_csv_matrix(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)


def _add_common(sub: argparse.ArgumentParser, *, model=True, scenario=True,
                estimator=True, run=True) -> None:
    if model:
        sub.add_argument("--n", type=int, help="number of rows")
        sub.add_argument("--p", type=int, help="number of columns")
        sub.add_argument("--sigma2", type=float, default=1.0,
                         help="entry variance (default 1.0)")
        sub.add_argument("--nu", type=int, default=None,
                         help="chi-square df for the unknown-variance model")
        sub.add_argument("--sigma-cov", metavar="FILE", default=None,
                         help="CSV file with the p x p row covariance")
    if scenario:
        sub.add_argument("--scenario", choices=("zero", "spike", "random",
                                                "file"), default="zero")
        sub.add_argument("--kappa", type=float, default=None,
                         help="spike magnitude for --scenario spike")
        sub.add_argument("--theta-star", metavar="FILE", default=None,
                         help="CSV file with the unit spike direction")
        sub.add_argument("--scale", type=float, default=1.0,
                         help="scale for --scenario random")
        sub.add_argument("--theta-seed", type=int, default=0,
                         help="seed for --scenario random")
        sub.add_argument("--theta-file", metavar="FILE", default=None,
                         help="CSV file with theta for --scenario file")
    if estimator:
        sub.add_argument("--estimator", choices=("mle", "diagonal-js",
                                                 "whitened-js",
                                                 "efron-morris"),
                         default="diagonal-js")
        sub.add_argument("--a", type=float, default=1.0,
                         help="tuning constant")
    if run:
        sub.add_argument("--reps", type=int, default=1_000_000)
        sub.add_argument("--seed", type=int, default=42)
        sub.add_argument("--threads", type=int, default=1,
                         help="worker threads (never affects results)")
    sub.add_argument("--format", choices=("json", "csv", "text"),
                     default="json")
    sub.add_argument("--out", metavar="PATH", default=None,
                     help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matshrink",
        description="Shrinkage estimation experiments for matrices of "
                    "normal means under matrix quadratic loss.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    risk = sub.add_parser("risk", help="Monte Carlo matrix risk of one estimator")
    _add_common(risk)

    dom = sub.add_parser("dominance",
                         help="paired risk difference vs the unbiased "
                              "estimator, with verdict")
    _add_common(dom)

    sweep = sub.add_parser("sweep", help="dominance verdicts over a grid of "
                                         "tuning constants on shared draws")
    _add_common(sweep, estimator=False)
    sweep.add_argument("--a-grid", type=_float_list, required=True,
                       metavar="A1,A2,...")

    stein = sub.add_parser("stein-check",
                           help="Monte Carlo check of the cross-product "
                                "identity against the series oracle")
    _add_common(stein, scenario=False, estimator=False)
    stein.add_argument("--lambda2-grid", type=_float_list, default=[0.0, 4.0, 25.0],
                       metavar="L1,L2,...")

    ctr = sub.add_parser("counterexample",
                         help="sharpness of the dominance interval at an "
                              "equal-column spike")
    _add_common(ctr, scenario=False)
    ctr.set_defaults(n=6, p=2)
    ctr.add_argument("--kappa", type=float, default=20.0)
    ctr.set_defaults(a=1.5)

    oracle = sub.add_parser("oracle-table",
                            help="analytic noncentrality curve and exact "
                                 "scalar risks (no sampling)")
    oracle.add_argument("--n", type=int, default=5)
    oracle.add_argument("--sigma2", type=float, default=1.0)
    oracle.add_argument("--lambda2-grid", type=_float_list,
                        default=[0.0, 1.0, 4.0, 9.0, 25.0, 100.0])
    oracle.add_argument("--a-grid", type=_float_list,
                        default=[0.0, 0.5, 1.0, 1.5, 2.0])
    _add_common(oracle, model=False, scenario=False, estimator=False, run=False)
    return parser


def _scenario_from_args(parser, args) -> ThetaScenario:
    if args.scenario == "zero":
        return ThetaScenario.zero()
    if args.scenario == "spike":
        if args.kappa is None:
            parser.error("--kappa is required for --scenario spike")
        star = None
        if args.theta_star is not None:
            star = _load_csv_matrix(args.theta_star).reshape(-1)
        return ThetaScenario.spike(args.kappa, star)
    if args.scenario == "random":
        return ThetaScenario.random_gaussian(args.scale, args.theta_seed)
    if args.scenario == "file":
        if args.theta_file is None:
            parser.error("--theta-file is required for --scenario file")
        return ThetaScenario.custom(_load_csv_matrix(args.theta_file))
    parser.error(f"unknown scenario {args.scenario!r}")


def config_from_args(parser: argparse.ArgumentParser,
                     args: argparse.Namespace) -> ExperimentConfig:
    cmd = args.command
    cfg = ExperimentConfig(command=cmd)
    cfg.output_format = args.format

    if cmd == "oracle-table":
        cfg.n = args.n
        cfg.sigma2 = args.sigma2
        cfg.lambda2_grid = args.lambda2_grid
        cfg.a_grid = args.a_grid
        if cfg.n is None or cfg.n <= 2:
            parser.error("--n must be >= 3")
        return cfg

    cfg.reps = args.reps
    cfg.seed = args.seed
    if cfg.reps < 2:
        parser.error("--reps must be >= 2")
    if not 0 <= cfg.seed < 1 << 64:
        parser.error("--seed must be an unsigned 64-bit integer")

    if cmd == "stein-check":
        cfg.n = args.n
        cfg.sigma2 = args.sigma2
        cfg.nu = args.nu
        cfg.lambda2_grid = args.lambda2_grid
        if cfg.n is None:
            parser.error("--n is required")
        if cfg.n <= 2:
            parser.error("--n must be >= 3 (the identity needs n >= 3)")
        return cfg

    if args.n is None:
        parser.error("--n is required")
    if args.p is None:
        parser.error("--p is required")
    cfg.n = args.n
    cfg.p = args.p
    cfg.sigma2 = args.sigma2
    cfg.nu = args.nu
    if args.sigma_cov is not None:
        cfg.sigma_cov = _load_csv_matrix(args.sigma_cov)

    if cmd == "counterexample":
        cfg.kappa = args.kappa
        cfg.a = args.a
        cfg.estimator = "diagonal-js"
        cfg.scenario = ThetaScenario.spike(args.kappa)
        if cfg.kappa is None or cfg.kappa <= 0:
            parser.error("--kappa must be positive")
        return cfg

    cfg.scenario = _scenario_from_args(parser, args)
    if cmd == "sweep":
        cfg.a_grid = args.a_grid
        return cfg

    cfg.estimator = args.estimator
    cfg.a = args.a
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = config_from_args(parser, args)
    threads = getattr(args, "threads", 1)
    try:
        payload = run_command(cfg, threads=threads)
    except (ValueError, RuntimeError) as exc:
        print(f"matshrink: error: {exc}", file=sys.stderr)
        return 1
    text = render(_with_metadata(payload, threads), cfg.output_format)
    if args.out is not None:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
