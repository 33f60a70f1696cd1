"""Command line front end.

Every command reads a JSON config, runs a deterministic experiment, and
writes results.csv plus summary.json into the output directory (the
rate commands also write oracle_snapshot.json describing the synthetic
ground truth).  All floating-point values in these files are rendered
with %.17g so reruns of the same config are byte-identical; wall time
appears only in summary.json.

Exit codes: 0 all verdicts pass, 1 config problem (malformed JSON,
unknown keys, out-of-regime parameters; nothing is written), 2 at least
one verdict failed, 3 numerical failure inside a computation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .bounds import (
    McTailConfig,
    make_perturbation_cases,
    mc_tail,
    operator_inequality_suite,
    perturb_check,
)
from .errors import CheckFailed, ConfigError, InvalidInput, NumericFailure
from .kernels import make_finite_rank_kernel
from .linalg import matrix_norm
from .measures import uniform_measure
from .oracle import op_jj, oracle_snapshot, proj_pop, recon_error, tail_energy
from .rates import ExperimentConfig, run_grid, transition_study
from .rng import derive_seed

__all__ = ["main"]

_COMMANDS = ("spectrum", "rates", "transition", "bounds", "concentration")


def _fnum(x: float) -> str:
    return format(float(x), ".17g")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _fnum(v)
    return str(v)


def render_json(obj, indent: int = 0) -> str:
    """JSON with floats in %.17g form; NaN and infinities become null."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  {json.dumps(str(k))}: {render_json(v, indent + 1)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        items = [f"{pad}  {render_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return "null"
        return _fnum(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise ConfigError(f"cannot serialize a {type(obj).__name__} into summary output")


def _require_keys(config: dict, allowed: set, required: set, command: str) -> None:
    unknown = set(config) - allowed
    if unknown:
        raise ConfigError(f"{command} config has unknown keys: {sorted(unknown)}")
    missing = required - set(config)
    if missing:
        raise ConfigError(f"{command} config is missing keys: {sorted(missing)}")


def _effective_seed(config: dict, override: int | None) -> int:
    if override is not None:
        return int(override)
    if "seed" not in config:
        raise ConfigError("config has no seed; set one or pass --seed")
    return int(config["seed"])


def _decay_lambdas(config: dict) -> np.ndarray:
    rank = int(config["rank"])
    if rank < 2:
        raise ConfigError(f"rank must be >= 2, got {rank}")
    i = 1.0 + np.arange(rank)
    decay = config["decay"]
    if decay == "poly":
        alpha = config.get("alpha")
        if alpha is None or not float(alpha) > 1.0:
            raise ConfigError(f"poly decay needs alpha > 1, got {alpha}")
        return i ** -float(alpha)
    if decay == "expo":
        gamma = config.get("gamma")
        if gamma is None or not float(gamma) > 0.0:
            raise ConfigError(f"expo decay needs gamma > 0, got {gamma}")
        return np.exp(-float(gamma) * i)
    raise ConfigError(f"unknown decay {decay!r}")


_EXPERIMENT_KEYS = {
    "decay", "alpha", "gamma", "theta", "tau", "n_grid", "replications",
    "atoms", "rank", "seed", "metric", "ell_fixed", "slope_tolerance",
}


def _experiment_config(config: dict, seed: int) -> ExperimentConfig:
    kwargs = dict(config)
    kwargs["seed"] = seed
    if "n_grid" in kwargs:
        kwargs["n_grid"] = tuple(int(n) for n in kwargs["n_grid"])
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad experiment config: {exc}") from exc


def _snapshot_for(cfg: ExperimentConfig) -> dict:
    from .rates import lambda_schedule

    measure = uniform_measure(cfg.atoms)
    kernel = make_finite_rank_kernel(
        measure, lambda_schedule(cfg), derive_seed(cfg.seed, "kernel")
    )
    return oracle_snapshot(kernel, measure, seed=cfg.seed)


def _cmd_spectrum(config: dict, seed: int, threads: int):
    _require_keys(
        config,
        allowed={"atoms", "rank", "decay", "alpha", "gamma", "seed", "ells"},
        required={"atoms", "rank", "decay", "ells"},
        command="spectrum",
    )
    atoms = int(config["atoms"])
    rank = int(config["rank"])
    lambdas = _decay_lambdas(config)
    ells = [int(e) for e in config["ells"]]
    if not ells or any(not 1 <= e <= rank - 1 for e in ells):
        raise ConfigError(f"ells must be nonempty and lie in 1..{rank - 1}")
    measure = uniform_measure(atoms)
    kernel = make_finite_rank_kernel(measure, lambdas, derive_seed(seed, "kernel"))
    pop = op_jj(kernel, measure)
    vals = pop.spectrum.eigenvalues
    padded = np.zeros(atoms)
    padded[:rank] = lambdas
    spec_err = float(np.max(np.abs(vals - padded)) / lambdas[0])

    header = ["ell", "eigenvalue", "tail_energy", "projector_residual", "rel_err", "agrees"]
    rows = []
    all_agree = True
    for ell in ells:
        tail = tail_energy(pop.spectrum, ell)
        resid = recon_error(pop, proj_pop(pop, ell))
        rel = abs(resid - tail) / tail
        agrees = rel <= 1e-10
        all_agree = all_agree and agrees
        rows.append([ell, float(vals[ell - 1]), tail, resid, rel, agrees])

    verdicts = [
        ("population_spectrum_matches_schedule", spec_err <= 1e-9,
         f"max |eig - schedule| / lambda_1 = {spec_err:.3e}"),
        ("reconstruction_matches_tail_energy", all_agree,
         f"{len(ells)} values of ell checked at 1e-10 relative"),
    ]
    summary = {
        "atoms": atoms,
        "rank": rank,
        "spectrum_max_err_rel_top": spec_err,
        "eigenvalues_top": [float(v) for v in vals[:rank]],
    }
    return header, rows, summary, verdicts, None


def _rate_rows(report, with_tau: float | None = None, include_tau: bool = False):
    out = []
    for r in report.rows:
        base = [r.n, r.m, r.ell, r.rep, r.metric, r.value]
        if include_tau:
            base = [with_tau] + base
        out.append(base)
    return out


def _rate_summary(report) -> dict:
    return {
        "metric": report.config.metric,
        "medians": {str(n): report.medians[n] for n in report.config.n_grid},
        "invalid_cells": {str(n): report.invalid[n] for n in report.config.n_grid},
        "slope": report.slope,
        "slope_stderr": report.slope_stderr,
        "predicted": report.predicted,
        "beta": report.beta,
        "slope_tolerance": report.config.slope_tolerance,
        "projector_swap_min_margin": report.swap_min_margin,
        "projector_swap_violations": report.swap_violations,
    }


def _cmd_rates(config: dict, seed: int, threads: int):
    _require_keys(config, allowed=_EXPERIMENT_KEYS, required={"decay", "theta", "n_grid",
                  "replications", "atoms", "rank", "metric"}, command="rates")
    cfg = _experiment_config(config, seed)
    report = run_grid(cfg, threads=threads)
    header = ["n", "m", "ell", "rep", "metric", "value"]
    rows = _rate_rows(report)
    verdicts = [
        ("slope_within_tolerance", report.verdict,
         f"fitted {report.slope:.4f} +- {report.slope_stderr:.4f}, "
         f"predicted {report.predicted:.4f}, tol {cfg.slope_tolerance:g}"),
        ("projector_swap_inequality", report.swap_violations == 0,
         f"min margin {report.swap_min_margin:.3e} over valid cells"),
    ]
    return header, rows, _rate_summary(report), verdicts, _snapshot_for(cfg)


def _cmd_transition(config: dict, seed: int, threads: int):
    _require_keys(config, allowed=_EXPERIMENT_KEYS | {"taus"},
                  required={"decay", "theta", "n_grid", "replications", "atoms",
                            "rank", "metric", "taus"}, command="transition")
    taus = [float(t) for t in config["taus"]]
    if not taus:
        raise ConfigError("transition config needs at least one tau")
    base_dict = {k: v for k, v in config.items() if k != "taus"}
    base_dict.setdefault("tau", taus[0])
    base = _experiment_config(base_dict, seed)
    study = transition_study(base, taus, threads=threads)

    header = ["tau", "n", "m", "ell", "rep", "metric", "value"]
    rows = _rate_rows(study.reports[0], include_tau=True, with_tau=None)
    for tau, rep in zip(taus, study.reports[1:]):
        rows.extend(_rate_rows(rep, include_tau=True, with_tau=tau))

    verdicts = []
    all_swap_ok = all(r.swap_violations == 0 for r in study.reports)
    for row in study.rows:
        verdicts.append((
            f"tau_{_fnum(row.tau)}_{row.regime}", row.matches,
            f"slope {row.slope:.4f} vs expected {row.expected:.4f} "
            f"(threshold {study.threshold:g})",
        ))
    verdicts.append(("projector_swap_inequality", all_swap_ok,
                     "checked on the reference run and every tau"))
    summary = {
        "threshold": study.threshold,
        "reference_slope": study.reference_slope,
        "reference_stderr": study.reference_stderr,
        "reference": _rate_summary(study.reports[0]),
        "taus": [
            {
                "tau": row.tau,
                "regime": row.regime,
                "slope": row.slope,
                "slope_stderr": row.slope_stderr,
                "expected": row.expected,
                "matches": row.matches,
            }
            for row in study.rows
        ],
    }
    return header, rows, summary, verdicts, _snapshot_for(base)


def _cmd_bounds(config: dict, seed: int, threads: int):
    _require_keys(config, allowed={"perturbation_cases", "operator_trials", "seed"},
                  required=set(), command="bounds")
    count = int(config.get("perturbation_cases", 1000))
    trials = int(config.get("operator_trials", 1000))
    if count < 1 or trials < 1:
        raise ConfigError("bounds config needs positive case and trial counts")

    header = ["case", "dim", "d", "delta_d", "b_hs", "plain_lhs", "plain_rhs",
              "plain_holds", "weighted_lhs", "weighted_rhs", "weighted_holds",
              "trivial_rhs", "sharper"]
    rows = []
    plain_bad = weighted_bad = sharper = 0
    min_plain = min_weighted = math.inf
    for i, case in enumerate(make_perturbation_cases(count, seed)):
        rep = perturb_check(case)
        plain_bad += not rep.plain.holds
        weighted_bad += not rep.weighted.holds
        sharper += rep.sharper_than_trivial
        min_plain = min(min_plain, rep.plain.margin)
        min_weighted = min(min_weighted, rep.weighted.margin)
        rows.append([
            i, case.a.shape[0], case.d, case.delta_d,
            matrix_norm(case.b, "hilbert_schmidt"),
            rep.plain.lhs, rep.plain.rhs, rep.plain.holds,
            rep.weighted.lhs, rep.weighted.rhs, rep.weighted.holds,
            rep.trivial_rhs, rep.sharper_than_trivial,
        ])
    op_report = operator_inequality_suite(trials, derive_seed(seed, "op-suite"))

    verdicts = [
        ("projector_perturbation_bound", plain_bad == 0,
         f"{count} cases, min margin {min_plain:.3e}"),
        ("weighted_projector_perturbation_bound", weighted_bad == 0,
         f"{count} cases, min margin {min_weighted:.3e}, "
         f"sharper than the operator-norm fallback in {sharper / count:.1%}"),
        ("operator_inequalities", op_report.violations == 0,
         f"{op_report.checks} checks over {trials} trials"),
    ]
    summary = {
        "perturbation_cases": count,
        "violations_plain": plain_bad,
        "violations_weighted": weighted_bad,
        "min_margin_plain": min_plain,
        "min_margin_weighted": min_weighted,
        "sharper_fraction": sharper / count,
        "operator_trials": trials,
        "operator_checks": op_report.checks,
        "operator_violations": op_report.violations,
    }
    return header, rows, summary, verdicts, None


def _cmd_concentration(config: dict, seed: int, threads: int):
    _require_keys(config, allowed={"tau", "count", "replications", "seed", "atoms",
                  "rank", "experiments"}, required={"tau", "count", "replications"},
                  command="concentration")
    experiments = config.get("experiments", ["cov_deviation", "feature_op_deviation"])
    mc_cfg = McTailConfig(
        tau=float(config["tau"]),
        count=int(config["count"]),
        replications=int(config["replications"]),
        seed=seed,
        atoms=int(config.get("atoms", 128)),
        rank=int(config.get("rank", 20)),
    )
    header = ["experiment", "tau", "count", "replications", "bound", "tail_cap",
              "exceed_count", "exceed_fraction", "max_deviation",
              "median_deviation", "holds"]
    rows = []
    verdicts = []
    summary_rows = []
    for exp in experiments:
        rep = mc_tail(exp, mc_cfg)
        rows.append([
            exp, mc_cfg.tau, mc_cfg.count, rep.replications, rep.bound, rep.cap,
            rep.exceed_count, rep.exceed_fraction, rep.max_deviation,
            rep.median_deviation, rep.holds,
        ])
        verdicts.append((
            f"{exp}_within_tail", rep.holds,
            f"exceeded {rep.exceed_count}/{rep.replications} "
            f"(cap {rep.cap:.4f}), bound {rep.bound:.4f}",
        ))
        summary_rows.append({
            "experiment": exp,
            "bound": rep.bound,
            "tail_cap": rep.cap,
            "exceed_fraction": rep.exceed_fraction,
            "max_deviation": rep.max_deviation,
            "median_deviation": rep.median_deviation,
        })
    summary = {"tau": mc_cfg.tau, "count": mc_cfg.count,
               "replications": mc_cfg.replications, "experiments": summary_rows}
    return header, rows, summary, verdicts, None


_HANDLERS = {
    "spectrum": _cmd_spectrum,
    "rates": _cmd_rates,
    "transition": _cmd_transition,
    "bounds": _cmd_bounds,
    "concentration": _cmd_concentration,
}


def _parse_threads(raw: str) -> int:
    if raw == "auto":
        return max(os.cpu_count() or 1, 1)
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"--threads takes an integer or 'auto', got {raw!r}")
    if threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {threads}")
    return threads


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kpcalab",
        description="Exact and random-feature kernel PCA against finite-support "
                    "ground truth: spectra, convergence rates, regime transitions, "
                    "perturbation bounds, concentration tails.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("spectrum", "population spectrum and tail-energy identities"),
        ("rates", "fit one metric's log-log convergence slope"),
        ("transition", "sweep tau to locate the feature/sample regime boundary"),
        ("bounds", "projector perturbation and operator inequality suites"),
        ("concentration", "Monte Carlo exceedance of the deviation bounds"),
    ):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's seed")
        p.add_argument("--threads", default="1",
                       help="worker threads for grid cells, or 'auto'")
    return parser


def _run(args) -> int:
    try:
        raw = Path(args.config).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        config = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"malformed config JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")

    seed = _effective_seed(config, args.seed)
    threads = _parse_threads(args.threads)
    digest = hashlib.sha256(raw).hexdigest()

    start = time.perf_counter()
    header, rows, body, verdicts, snapshot = _HANDLERS[args.command](config, seed, threads)
    elapsed = time.perf_counter() - start

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
    summary = {
        "tool": "kpcalab",
        "command": args.command,
        "config_sha256": digest,
        "config": config,
        "effective_seed": seed,
        "threads": threads,
        "wall_time_seconds": elapsed,
    }
    summary.update(body)
    summary["verdicts"] = {
        name: {"pass": bool(ok), "detail": detail} for name, ok, detail in verdicts
    }
    (out / "summary.json").write_text(render_json(summary) + "\n")
    if snapshot is not None:
        (out / "oracle_snapshot.json").write_text(render_json(snapshot) + "\n")

    print(f"kpcalab {args.command}: config sha256 {digest[:12]}, "
          f"wall {elapsed:.2f}s, {len(rows)} result rows")
    ok_all = True
    for name, ok, detail in verdicts:
        ok_all = ok_all and bool(ok)
        print(f"  {'PASS' if ok else 'FAIL'} {name}: {detail}")
    print(f"overall: {'PASS' if ok_all else 'FAIL'}")
    written = "results.csv, summary.json" + (", oracle_snapshot.json" if snapshot else "")
    print(f"wrote {written} in {out}")
    return 0 if ok_all else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return _run(args)
    except (ConfigError, InvalidInput) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 2
    except (NumericFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
