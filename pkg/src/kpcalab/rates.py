"""Convergence-rate experiments against the exact finite-support oracle.

An experiment fixes a synthetic spectrum (polynomial i^-alpha or
exponential e^-gamma*i), grows the sample size over a grid with the
component count ell(n) and feature count m(n) coupled to n through
exponents theta and tau, measures a reconstruction error or projector
distance per replication against exactly computed population values,
and fits a log-log slope of the per-n medians.  The fitted slope is
compared with the exponent the theory predicts for that exact coupling.

Feature draws here use the mixed finite-rank family (seeded orthogonal
recombination, uniform importance weights).  The aligned family is
degenerate for this purpose: its feature functions are the population
eigenfunctions themselves, so the feature-side operator commutes with
the population one and the feature-count error never rotates an
eigenspace, which would make the m-driven regimes unobservable.

Projection-rate predictions for polynomial decay are evaluated with
gap exponent beta = alpha + 1, the decay the synthetic half-gaps
(i^-a - (i+1)^-a)/2 actually have; every report carries the beta used.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, EigengapError, OutOfRegime, RankError
from .features import sample_finite_rank
from .kernels import Kernel, make_finite_rank_kernel
from .kpca import fit_exact, fit_rf
from .measures import DiscreteMeasure, draw_samples, uniform_measure
from .oracle import (
    PopOperator,
    ProjectionLike,
    op_aa,
    op_jj,
    proj_distance,
    proj_hat,
    proj_hat_rf,
    proj_pop,
    recon_error,
    tail_energy,
)
from .rng import derive_seed

__all__ = [
    "METRICS",
    "ExperimentConfig",
    "RateRow",
    "RateReport",
    "TransitionReport",
    "lambda_schedule",
    "ell_for",
    "m_for",
    "predicted_exponent",
    "fit_slope",
    "run_grid",
    "transition_study",
]

METRICS = (
    "recon_hat",
    "recon_rf_pop",
    "recon_rf_hat",
    "proj_hat",
    "proj_rf_pop",
    "proj_rf_hat",
)
_RF_METRICS = ("recon_rf_pop", "recon_rf_hat", "proj_rf_pop", "proj_rf_hat")
# Empirical eigenvalue divisions are only trusted this far above the
# retained-rank floor of 1e-10 * lambda_1.
_GUARD_FACTOR = 100.0
_RANK_RTOL = 1e-10
_SWAP_SLACK = 1e-8


@dataclass(frozen=True)
class ExperimentConfig:
    """Full specification of one rate experiment.

    decay/alpha/gamma: spectrum family; poly needs alpha > 1, expo needs
        gamma > 0.
    theta: component growth exponent; ell(n) = round(n^(theta/alpha)) for
        poly, round((theta/gamma) ln n) for expo, clipped below at 1.
    ell_fixed: overrides the schedule with a constant (theta must be 0,
        the constant-ell regime).
    tau: feature growth exponent in (0, 1]; m(n) = round(n^tau).
        Required by the rf metrics, forbidden meaningless otherwise.
    n_grid: strictly increasing sample sizes, at least 4 for slope fits.
    replications: independent repetitions per n, at least 5 so medians
        are meaningful.
    atoms, rank: oracle size N and spectrum length T.
    metric: one of METRICS.
    slope_tolerance: |fitted - predicted| acceptance width.
    """

    decay: str
    theta: float
    n_grid: tuple[int, ...]
    replications: int
    atoms: int
    rank: int
    seed: int
    metric: str
    alpha: float | None = None
    gamma: float | None = None
    tau: float | None = None
    ell_fixed: int | None = None
    slope_tolerance: float = 0.15

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.decay == "poly":
            if self.alpha is None or not self.alpha > 1.0:
                raise ConfigError(f"poly decay needs alpha > 1, got {self.alpha}")
            if self.gamma is not None:
                raise ConfigError("poly decay takes no gamma")
        elif self.decay == "expo":
            if self.gamma is None or not self.gamma > 0.0:
                raise ConfigError(f"expo decay needs gamma > 0, got {self.gamma}")
            if self.alpha is not None:
                raise ConfigError("expo decay takes no alpha")
        else:
            raise ConfigError(f"unknown decay {self.decay!r}")
        if self.theta < 0.0:
            raise ConfigError(f"theta must be >= 0, got {self.theta}")
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.tau is not None and not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must lie in (0, 1], got {self.tau}")
        if self.metric in _RF_METRICS and self.tau is None:
            raise ConfigError(f"metric {self.metric} needs tau")
        if len(self.n_grid) < 1 or any(n < 2 for n in self.n_grid):
            raise ConfigError("n_grid must hold sample sizes >= 2")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if self.replications < 5:
            raise ConfigError(f"need >= 5 replications, got {self.replications}")
        if self.rank < 2 or self.atoms < self.rank + 1:
            raise ConfigError(
                f"need atoms >= rank + 1 >= 3, got atoms={self.atoms} rank={self.rank}"
            )
        if self.ell_fixed is not None:
            if self.theta != 0.0:
                raise ConfigError("ell_fixed is the theta = 0 (constant ell) regime")
            if not 1 <= self.ell_fixed <= self.rank - 1:
                raise ConfigError(f"ell_fixed={self.ell_fixed} outside 1..{self.rank - 1}")


def lambda_schedule(config: ExperimentConfig) -> np.ndarray:
    """The synthetic population spectrum, length rank, strictly descending."""
    i = 1.0 + np.arange(config.rank)
    if config.decay == "poly":
        return i ** -config.alpha
    return np.exp(-config.gamma * i)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def ell_for(config: ExperimentConfig, n: int) -> int:
    """Component count at sample size n under the configured schedule."""
    if config.ell_fixed is not None:
        return config.ell_fixed
    if config.decay == "poly":
        raw = float(n) ** (config.theta / config.alpha)
    else:
        raw = (config.theta / config.gamma) * math.log(n)
    ell = _round_half_up(raw)
    if ell > config.rank - 1:
        raise ConfigError(
            f"ell({n}) = {ell} exceeds rank - 1 = {config.rank - 1}; raise rank"
        )
    return max(ell, 1)


def m_for(config: ExperimentConfig, n: int) -> int:
    """Feature count at sample size n; requires tau."""
    if config.tau is None:
        raise ConfigError("m(n) undefined without tau")
    return max(_round_half_up(float(n) ** config.tau), 1)


def _beta_for(config: ExperimentConfig, beta: float | None) -> float:
    if beta is not None:
        return beta
    return config.alpha + 1.0


def predicted_exponent(config: ExperimentConfig, beta: float | None = None,
                       improved: bool = False) -> float:
    """The theoretical log-log slope for the configured coupling.

    Returns the negated exponent (a slope, so typically negative).
    ``beta`` overrides the gap-decay exponent used by polynomial
    projection predictions (default alpha + 1, see module docstring).
    ``improved`` selects the sharper eigengap-based reconstruction rates
    available for exponential decay.  Raises OutOfRegime when the
    parameters fall outside every branch the theory covers.
    """
    theta = config.theta
    tau = config.tau
    metric = config.metric
    recon = metric.startswith("recon")
    if improved and (config.decay != "expo" or not recon):
        raise OutOfRegime("improved rates exist only for exponential-decay reconstruction")
    if metric in _RF_METRICS and tau is None:
        raise ConfigError(f"metric {metric} needs tau")

    if config.decay == "poly":
        alpha = config.alpha
        if recon:
            if not 0.0 < theta < 0.5:
                raise OutOfRegime(f"poly reconstruction rates need 0 < theta < 1/2, got {theta}")
            bias_exp = 2.0 * theta * (1.0 - 1.0 / (2.0 * alpha))
            knee = alpha / (4.0 * alpha - 1.0)
            if metric == "recon_hat":
                return -bias_exp if theta <= knee else -(0.5 - theta / (2.0 * alpha))
            if metric == "recon_rf_pop":
                return -min(tau, bias_exp)
            # recon_rf_hat
            if tau <= 2.0 * theta:
                raise OutOfRegime(
                    f"recon_rf_hat needs tau > 2 theta ({tau} <= {2.0 * theta})"
                )
            return -bias_exp if theta <= knee else -(0.5 - theta / (2.0 * alpha))
        b = _beta_for(config, beta)
        if b < alpha:
            raise OutOfRegime(f"projection rates need beta >= alpha, got beta={b}")
        if not 0.0 <= theta < alpha / (2.0 * b):
            raise OutOfRegime(
                f"poly projection rates need 0 <= theta < alpha/(2 beta), got {theta}"
            )
        knee = alpha / (2.0 * (2.0 * b - alpha))
        if metric == "proj_hat":
            return -(0.25 - theta / 2.0) if theta < knee else -(0.5 - theta * b / alpha)
        if metric == "proj_rf_pop":
            return -(tau / 2.0 - theta * b / alpha)
        # proj_rf_hat
        if tau <= 2.0 * theta * b / alpha:
            raise OutOfRegime(
                f"proj_rf_hat needs tau > 2 theta beta / alpha ({tau} too small)"
            )
        if theta < knee and tau > 0.5 + theta * (2.0 * b - alpha) / alpha:
            return -(0.25 - theta / 2.0)
        return -(tau / 2.0 - theta * b / alpha)

    # exponential decay
    if recon:
        if improved:
            if not 0.0 < theta < 0.5:
                raise OutOfRegime(f"improved expo rates need 0 < theta < 1/2, got {theta}")
            if metric == "recon_rf_pop":
                raise OutOfRegime("improved rates cover the sampled-feature estimators")
            if metric == "recon_rf_hat" and tau <= 2.0 * theta:
                raise OutOfRegime(f"recon_rf_hat needs tau > 2 theta ({tau} <= {2 * theta})")
            return -2.0 * theta if theta <= 1.0 / 3.0 else -(1.0 - theta)
        if not 0.0 < theta < 0.5:
            raise OutOfRegime(f"expo reconstruction rates need 0 < theta < 1/2, got {theta}")
        if metric == "recon_hat":
            return -2.0 * theta if theta < 0.25 else -0.5
        if metric == "recon_rf_pop":
            return -min(tau, 2.0 * theta)
        if tau <= 2.0 * theta:
            raise OutOfRegime(f"recon_rf_hat needs tau > 2 theta ({tau} <= {2 * theta})")
        return -2.0 * theta if theta < 0.25 else -0.5
    if not 0.0 <= theta < 0.5:
        raise OutOfRegime(f"expo projection rates need 0 <= theta < 1/2, got {theta}")
    if metric == "proj_hat":
        return -(0.25 - theta / 2.0)
    if metric == "proj_rf_pop":
        return -(tau / 2.0 - theta)
    # proj_rf_hat
    if tau >= 0.5 + theta:
        return -(0.25 - theta / 2.0)
    return -(tau / 2.0 - theta)


def fit_slope(ns, values) -> tuple[float, float]:
    """Least-squares slope and its standard error in log-log coordinates."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if ns.shape != values.shape or ns.size < 4:
        raise ConfigError(f"fit_slope: need >= 4 matched points, got {ns.size}")
    if np.any(ns <= 0.0) or np.any(values <= 0.0):
        raise ConfigError("fit_slope: log-log fit needs strictly positive data")
    x = np.log(ns)
    y = np.log(values)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xc
    dof = ns.size - 2
    stderr = math.sqrt(float(resid @ resid) / dof / sxx)
    return slope, stderr


@dataclass(frozen=True)
class RateRow:
    """One measured cell of the grid; value is NaN when the replication's
    random-feature model could not support ell components."""

    n: int
    m: int | None
    ell: int
    rep: int
    metric: str
    value: float


@dataclass(frozen=True)
class RateReport:
    config: ExperimentConfig
    beta: float | None
    rows: tuple[RateRow, ...]
    medians: dict
    invalid: dict
    slope: float
    slope_stderr: float
    predicted: float
    swap_min_margin: float
    swap_violations: int

    @property
    def verdict(self) -> bool:
        return abs(self.slope - self.predicted) <= self.config.slope_tolerance


def _grid_plan(config: ExperimentConfig, kernel: Kernel, pop: PopOperator) -> dict:
    """Per-n precomputation: ell, m, population projector, and bias."""
    plan = {}
    vals = pop.spectrum.eigenvalues
    floor = _GUARD_FACTOR * _RANK_RTOL * vals[0]
    for n in config.n_grid:
        ell = ell_for(config, n)
        if vals[ell - 1] < floor:
            raise ConfigError(
                f"population eigenvalue {ell} at n={n} sits below the division guard; "
                f"shrink theta or the grid"
            )
        gap_ok = ell >= vals.size or vals[ell - 1] - vals[ell] > 1e-12
        if not gap_ok:
            raise ConfigError(f"population spectrum is degenerate at ell={ell} (n={n})")
        p_pop = proj_pop(pop, ell)
        r_pop = tail_energy(pop.spectrum, ell)
        check = recon_error(pop, p_pop)
        if abs(check - r_pop) > 1e-10 * max(r_pop, 1e-300):
            raise ConfigError(
                f"oracle self-check failed at ell={ell}: tail {r_pop!r} vs "
                f"projector residual {check!r}"
            )
        m = m_for(config, n) if config.tau is not None else None
        plan[n] = (ell, m, p_pop, r_pop)
    return plan


def _empirical_guard_ok(eigvals: np.ndarray, ell: int) -> bool:
    if eigvals.shape[0] < ell:
        return False
    return eigvals[ell - 1] >= _GUARD_FACTOR * _RANK_RTOL * eigvals[0]


def _run_cell(config: ExperimentConfig, kernel: Kernel, measure: DiscreteMeasure,
              pop: PopOperator, plan: dict, n: int, rep: int,
              full_support: bool) -> tuple[RateRow, float | None]:
    """One (n, rep) measurement.  Returns the row and the swap-inequality margin
    (None when the cell is invalid)."""
    ell, m, p_pop, r_pop = plan[n]
    sigma_hs = pop.hs_norm
    if full_support:
        samples = np.asarray(measure.atoms)
    else:
        samples = draw_samples(measure, n, derive_seed(config.seed, "samples", n, rep))
    metric = config.metric
    try:
        if metric in ("recon_hat", "proj_hat"):
            model = fit_exact(kernel, samples)
            if not _empirical_guard_ok(model.eigvals, ell):
                raise ConfigError(
                    f"empirical eigenvalue {ell} fell below the division guard at "
                    f"n={n}, rep={rep}"
                )
            q = proj_hat(model, kernel, measure, ell)
            r_emp = recon_error(pop, q)
        elif metric in ("recon_rf_pop", "proj_rf_pop"):
            fs = sample_finite_rank(
                kernel, m, derive_seed(config.seed, "features", n, rep), mixed=True
            )
            q = proj_pop(op_aa(fs, measure), ell)
            r_emp = recon_error(pop, q)
        else:
            fs = sample_finite_rank(
                kernel, m, derive_seed(config.seed, "features", n, rep), mixed=True
            )
            rf_model = fit_rf(fs, samples)
            if not _empirical_guard_ok(rf_model.eigvals, ell):
                raise RankError("rf model rank below ell")
            q = proj_hat_rf(rf_model, measure, ell)
            r_emp = recon_error(pop, q)
    except (RankError, EigengapError):
        # A feature draw too degenerate to carry ell components; the
        # hypotheses of the theory exclude these, so the cell is marked
        # invalid rather than silently redrawn.
        return RateRow(n=n, m=m, ell=ell, rep=rep, metric=metric, value=math.nan), None

    dist = proj_distance(p_pop, q)
    value = dist if metric.startswith("proj") else r_emp
    margin = sigma_hs * dist + _SWAP_SLACK - abs(math.sqrt(r_emp) - math.sqrt(r_pop))
    return RateRow(n=n, m=m, ell=ell, rep=rep, metric=metric, value=value), margin


def run_grid(config: ExperimentConfig, threads: int = 1,
             full_support: bool = False) -> RateReport:
    """Measure the configured metric over the grid and fit its rate.

    Fully deterministic for a given config: every cell derives its own
    random streams from (seed, n, rep), so neither thread count nor
    execution order changes any number.  ``full_support`` is a test hook
    replacing every sample draw with the complete atom set, which removes
    all sampling error and must reproduce the pure bias values.

    Alongside the metric, every valid cell checks the projector-swap
    inequality |sqrt(R_emp) - sqrt(R_pop)| <= ||S||_HS * dist with 1e-8
    slack; the report carries the minimum margin and violation count.
    """
    lambdas = lambda_schedule(config)
    measure = uniform_measure(config.atoms)
    kernel = make_finite_rank_kernel(measure, lambdas, derive_seed(config.seed, "kernel"))
    pop = op_jj(kernel, measure)
    plan = _grid_plan(config, kernel, pop)
    coords = [(n, rep) for n in config.n_grid for rep in range(config.replications)]

    def task(coord):
        n, rep = coord
        return _run_cell(config, kernel, measure, pop, plan, n, rep, full_support)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(task, coords))
    else:
        outcomes = [task(c) for c in coords]

    rows = tuple(row for row, _ in outcomes)
    margins = [mar for _, mar in outcomes if mar is not None]
    medians = {}
    invalid = {}
    for n in config.n_grid:
        vals = [r.value for r in rows if r.n == n and not math.isnan(r.value)]
        bad = config.replications - len(vals)
        invalid[n] = bad
        if bad * 2 >= config.replications:
            raise ConfigError(
                f"{bad}/{config.replications} replications invalid at n={n} "
                f"(ell={plan[n][0]}); the feature schedule is too aggressive"
            )
        medians[n] = float(np.median(vals))
    slope, stderr = fit_slope(list(config.n_grid), [medians[n] for n in config.n_grid])
    beta = _beta_for(config, None) if (
        config.decay == "poly" and config.metric.startswith("proj")) else None
    predicted = predicted_exponent(config)
    return RateReport(
        config=config,
        beta=beta,
        rows=rows,
        medians=medians,
        invalid=invalid,
        slope=slope,
        slope_stderr=stderr,
        predicted=predicted,
        swap_min_margin=min(margins) if margins else math.nan,
        swap_violations=sum(mar < 0.0 for mar in margins),
    )


@dataclass(frozen=True)
class TransitionRow:
    tau: float
    regime: str
    slope: float
    slope_stderr: float
    expected: float
    matches: bool


@dataclass(frozen=True)
class TransitionReport:
    reference_slope: float
    reference_stderr: float
    threshold: float
    rows: tuple[TransitionRow, ...]
    reports: tuple[RateReport, ...]


def transition_study(base: ExperimentConfig, taus, threads: int = 1) -> TransitionReport:
    """Sweep tau through the m(n) = n^tau coupling and locate the regime
    boundary.

    The base config must use the proj_rf_hat metric.  A tau at or above
    the threshold (1/2 + theta for exponential decay, 1/2 + theta
    (2 beta - alpha)/alpha for polynomial) leaves the sample-size error
    dominant, so its slope must match an exact-KPCA reference run within
    the configured tolerance; below the threshold the feature error
    dominates and the slope must match the feature-driven exponent
    -(tau/2 - theta beta/alpha), resp. -(tau/2 - theta).
    """
    if base.metric != "proj_rf_hat":
        raise ConfigError(f"transition_study needs metric proj_rf_hat, got {base.metric}")
    if not taus:
        raise ConfigError("transition_study needs at least one tau")
    reference = run_grid(replace(base, tau=None, metric="proj_hat"), threads=threads)
    if base.decay == "poly":
        b = _beta_for(base, None)
        threshold = 0.5 + base.theta * (2.0 * b - base.alpha) / base.alpha
    else:
        threshold = 0.5 + base.theta
    rows = []
    reports = [reference]
    for tau in taus:
        rep = run_grid(replace(base, tau=float(tau)), threads=threads)
        reports.append(rep)
        if tau >= threshold:
            expected = reference.slope
            regime = "sample_limited"
        else:
            if base.decay == "poly":
                expected = -(tau / 2.0 - base.theta * _beta_for(base, None) / base.alpha)
            else:
                expected = -(tau / 2.0 - base.theta)
            regime = "feature_limited"
        rows.append(TransitionRow(
            tau=float(tau),
            regime=regime,
            slope=rep.slope,
            slope_stderr=rep.slope_stderr,
            expected=expected,
            matches=abs(rep.slope - expected) <= base.slope_tolerance,
        ))
    return TransitionReport(
        reference_slope=reference.slope,
        reference_stderr=reference.slope_stderr,
        threshold=threshold,
        rows=tuple(rows),
        reports=tuple(reports),
    )
