"""Monte Carlo engine: data-generating processes, replicated experiments and
table aggregation.

Two DGPs are supported, both with iid N(0, sigma^2) noise on top of group
means: a flat one (no trend, no effect) and a linear differential trend of
slope ``trend_slope`` for the treated group that continues into the post
period.  Under the trend DGP the population post coefficient equals the
slope and the trend-adjusted contrast equals zero.

The fast path draws the sufficient statistics directly -- per-period
difference-in-means ~ N(slope * t, 2 sigma^2 / N) plus independent chi-square
within-cell variance estimates -- which is distributionally identical to
estimating on a full simulated panel.  All replication-level computation is
vectorized and elementwise across replications, so results are invariant to
how replications are split into chunks or across workers; chunk RNG streams
are derived from the root seed with a splittable seed sequence keyed by
(seed, dgp, k, chunk index), and aggregation is a deterministic fold over
chunk order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .estimators import AC_ZERO_RTOL, analyze, eta_gamma
from .event_study import EstimateBundle, PanelData, estimate_event_study
from .gaussian import CovarianceMatrix, solve_tn_mean_bulk
from .pretest import critical_value

__all__ = [
    "SimConfig",
    "SimTableRow",
    "CellDraws",
    "ReplicationRecords",
    "generate_dgp",
    "simulate_cell",
    "run_table",
    "summarize_row",
    "rows_to_csv",
    "rows_to_json",
    "MIN_ACCEPTED",
]

# Cells with fewer accepted replications are flagged and their conditional
# statistics suppressed.
MIN_ACCEPTED = 500


@dataclass(frozen=True)
class SimConfig:
    """Settings for one simulation study.

    ``trend_slope`` applies to the trend DGP only; the null DGP always uses
    slope zero.  ``use_estimated_sigma`` mirrors what a practitioner can do
    (per-replication estimated covariance); switching it off isolates the
    known-covariance behaviour.  ``chunk_size`` fixes the replication
    partition regardless of ``workers``, which is what makes output
    byte-identical under any worker count.
    """

    k_max: int = 8
    n_per_cell: int = 250
    sigma_noise: float = 1.0
    trend_slope: float = 0.065
    reps: int = 100_000
    seed: int = 0
    alpha_pretest: float = 0.05
    alpha_ci: float = 0.05
    trend_order: int = 1
    fast_path: bool = True
    use_estimated_sigma: bool = True
    workers: int = 1
    chunk_size: int = 25_000

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.n_per_cell < 2:
            raise ValueError("n_per_cell must be >= 2")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if not (self.sigma_noise > 0):
            raise ValueError("sigma_noise must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")


@dataclass(frozen=True)
class SimTableRow:
    """Aggregated statistics for one (DGP, K) cell.

    ``size_*`` and ``reject_beta_post_*`` are both rejection rates at the
    true post coefficient (the published tables label them differently);
    ``reject_zero_*`` tests zero.  Conditional statistics are NaN when K = 0
    (nothing to condition on) or when the cell is degenerate.
    """

    dgp: str
    k: int
    n_accepted: int
    accept_prob: float
    degenerate: bool
    bias_traditional: float
    mean_se_traditional: float
    actual_sd_traditional: float
    size_traditional: float
    reject_beta_post_traditional: float
    reject_zero_traditional: float
    bias_efficient: float
    mean_se_efficient: float
    actual_sd_efficient: float
    size_efficient: float
    reject_beta_post_efficient: float
    reject_zero_efficient: float
    median_traditional: float
    median_tn_beta: float
    median_tn_gamma: float
    tn_reject_beta_post: float
    tn_reject_zero_gamma: float
    median_width_traditional: float
    median_width_tn_beta: float
    median_width_tn_gamma: float

    def mc_standard_errors(self) -> dict[str, float]:
        """Monte Carlo standard errors for the headline statistics."""
        n_unc = self.n_accepted / self.accept_prob if self.accept_prob > 0 else math.nan
        out = {"accept_prob": _proportion_se(self.accept_prob, n_unc)}
        n = self.n_accepted
        for name in (
            "size_traditional",
            "reject_zero_traditional",
            "size_efficient",
            "reject_zero_efficient",
            "tn_reject_beta_post",
            "tn_reject_zero_gamma",
        ):
            out[name] = _proportion_se(getattr(self, name), n)
        out["bias_traditional"] = (
            self.actual_sd_traditional / math.sqrt(n) if n > 0 else math.nan
        )
        out["bias_efficient"] = (
            self.actual_sd_efficient / math.sqrt(n) if n > 0 else math.nan
        )
        return out


def _proportion_se(p: float, n: float) -> float:
    if not (n and n > 0) or math.isnan(p):
        return math.nan
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


@dataclass(frozen=True)
class CellDraws:
    """One fast-path replication: per-period difference-in-means draws and
    estimated variances of those differences.

    ``t_values`` orders periods as (1, 0, -1, ..., -K), matching the
    coefficient layout after differencing against the reference column.
    """

    k: int
    n_per_cell: int
    t_values: np.ndarray
    delta_mean: np.ndarray
    delta_var: np.ndarray

    def to_bundle(self) -> EstimateBundle:
        beta = self.delta_mean - self.delta_mean[1]
        v0 = self.delta_var[1]
        v_coef = np.concatenate(([self.delta_var[0]], self.delta_var[2:]))
        sigma = np.full((self.k + 1, self.k + 1), v0)
        sigma[np.diag_indices(self.k + 1)] += v_coef
        return EstimateBundle(
            beta_post=float(beta[0]),
            beta_pre=beta[2:],
            sigma=CovarianceMatrix(sigma, allow_singular=True),
            k=self.k,
        )


@dataclass(eq=False)
class ReplicationRecords:
    """Per-replication results for one (DGP, K) cell; plain parallel arrays.

    TN fields are NaN for replications that failed the pretest (no
    conditional law exists there) and everywhere when K = 0.
    """

    dgp: str
    k: int
    alpha_ci: float
    beta_post: np.ndarray
    se_trad: np.ndarray
    beta_tilde: np.ndarray
    se_eff: np.ndarray
    accepted: np.ndarray
    tn_beta_est: np.ndarray
    tn_beta_lo: np.ndarray
    tn_beta_hi: np.ndarray
    tn_gamma_est: np.ndarray
    tn_gamma_lo: np.ndarray
    tn_gamma_hi: np.ndarray

    _ARRAYS = (
        "beta_post",
        "se_trad",
        "beta_tilde",
        "se_eff",
        "accepted",
        "tn_beta_est",
        "tn_beta_lo",
        "tn_beta_hi",
        "tn_gamma_est",
        "tn_gamma_lo",
        "tn_gamma_hi",
    )

    @property
    def n(self) -> int:
        return self.beta_post.shape[0]

    def subset(self, mask: np.ndarray) -> "ReplicationRecords":
        kwargs = {name: getattr(self, name)[mask] for name in self._ARRAYS}
        return ReplicationRecords(dgp=self.dgp, k=self.k, alpha_ci=self.alpha_ci, **kwargs)

    @staticmethod
    def concatenate(parts: list["ReplicationRecords"]) -> "ReplicationRecords":
        head = parts[0]
        kwargs = {
            name: np.concatenate([getattr(p, name) for p in parts])
            for name in ReplicationRecords._ARRAYS
        }
        return ReplicationRecords(dgp=head.dgp, k=head.k, alpha_ci=head.alpha_ci, **kwargs)


# --- data generation ---------------------------------------------------------


def _t_values(k: int) -> np.ndarray:
    """Periods in coefficient-aligned order (1, 0, -1, ..., -K)."""
    return np.concatenate(([1, 0], -np.arange(1, k + 1)))


def _fast_cell_draws(
    config: SimConfig, k: int, slope: float, rng: np.random.Generator, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw n replications of (difference-in-means, estimated variances)."""
    t = _t_values(k).astype(float)
    n_cell = config.n_per_cell
    sig2 = config.sigma_noise**2
    cell_var = 2.0 * sig2 / n_cell
    delta = rng.standard_normal((n, k + 2)) * math.sqrt(cell_var) + slope * t
    if config.use_estimated_sigma:
        df = n_cell - 1
        s2_t = rng.chisquare(df, (n, k + 2)) * (sig2 / df)
        s2_c = rng.chisquare(df, (n, k + 2)) * (sig2 / df)
        v = (s2_t + s2_c) / n_cell
    else:
        v = np.full((n, k + 2), cell_var)
    return delta, v


def _full_panel(
    config: SimConfig, k: int, slope: float, rng: np.random.Generator
) -> PanelData:
    """One simulated long-format panel (repeated cross-sections)."""
    t = np.arange(-k, 2)
    n_cell = config.n_per_cell
    periods = np.repeat(t, 2 * n_cell)
    treatment = np.tile(np.repeat([False, True], n_cell), k + 2)
    unit = np.array(
        [f"{'T' if d else 'C'}{i % n_cell}" for i, d in enumerate(treatment)],
        dtype=object,
    )
    mean = slope * periods * treatment
    outcome = mean + rng.standard_normal(periods.shape[0]) * config.sigma_noise
    return PanelData(unit=unit, period=periods, treatment=treatment, outcome=outcome)


def generate_dgp(config: SimConfig, k: int, rng: np.random.Generator):
    """One replication of the configured DGP.

    Returns a :class:`PanelData` on the full path and a :class:`CellDraws`
    (sufficient statistics) on the fast path.  The two paths induce the same
    distribution for the estimated coefficients.
    """
    if k > config.k_max:
        raise ValueError(f"k={k} exceeds k_max={config.k_max}")
    slope = config.trend_slope
    if config.fast_path:
        delta, v = _fast_cell_draws(config, k, slope, rng, 1)
        return CellDraws(
            k=k,
            n_per_cell=config.n_per_cell,
            t_values=_t_values(k),
            delta_mean=delta[0],
            delta_var=v[0],
        )
    if k < 1:
        raise ValueError("the full-panel path requires k >= 1")
    return _full_panel(config, k, slope, rng)


# --- vectorized replication kernel -------------------------------------------


def _truncation_window(
    beta_pre: np.ndarray,
    c_pre: np.ndarray,
    c_full_maxabs: np.ndarray,
    obs: np.ndarray,
    b: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized window endpoints for the two-sided per-coefficient event.

    For each pre coordinate j the event contributes rows +/- e_j with offset
    b_j; with z_j = beta_pre_j - c_j * obs the feasible contrast values x
    satisfy |z_j + c_j x| <= b_j, so each coordinate yields one upper and one
    lower candidate (sides swap with the sign of c_j).  Coordinates with
    |c_j| below the orthogonality tolerance do not constrain x.
    """
    z = beta_pre - c_pre * obs[:, None]
    # the pretest rows have unit infinity-norm, so the row-exclusion
    # tolerance reduces to the relative threshold times max|c|
    tol = (AC_ZERO_RTOL * c_full_maxabs)[:, None]
    pos = c_pre > tol
    neg = c_pre < -tol
    with np.errstate(divide="ignore", invalid="ignore"):
        hi_ratio = (np.where(neg, -b, b) - z) / c_pre
        lo_ratio = (np.where(neg, b, -b) - z) / c_pre
    hi_cand = np.where(pos | neg, hi_ratio, math.inf)
    lo_cand = np.where(pos | neg, lo_ratio, -math.inf)
    return lo_cand.max(axis=1), hi_cand.min(axis=1)


def _tn_triplet(
    obs: np.ndarray,
    sd: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    alpha_ci: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Median-unbiased estimate and equal-tailed interval, vectorized.

    Failed solves become infinities of the matching sign.
    """

    def solve(target: float) -> np.ndarray:
        mu, status = solve_tn_mean_bulk(obs, sd, lower, upper, np.full_like(obs, target))
        mu = np.where(status < 0, -math.inf, mu)
        mu = np.where(status > 0, math.inf, mu)
        return mu

    est = solve(0.5)
    ci_lo = solve(1.0 - alpha_ci / 2.0)
    ci_hi = solve(alpha_ci / 2.0)
    return est, ci_lo, ci_hi


def _records_from_draws(
    config: SimConfig,
    k: int,
    dgp: str,
    delta: np.ndarray,
    v: np.ndarray,
    eta_gamma_vec: np.ndarray | None,
) -> ReplicationRecords:
    """Everything the tables need, computed elementwise across replications.

    Uses only elementwise operations and per-axis reductions so that results
    do not depend on chunk boundaries.
    """
    n = delta.shape[0]
    beta = delta - delta[:, [1]]
    beta = np.delete(beta, 1, axis=1)  # coefficient order (post, -1, ..., -K)
    v0 = v[:, 1]
    v_coef = np.delete(v, 1, axis=1)
    var_trad = v0 + v_coef[:, 0]
    se_trad = np.sqrt(var_trad)

    nan = np.full(n, math.nan)
    if k == 0:
        return ReplicationRecords(
            dgp=dgp,
            k=k,
            alpha_ci=config.alpha_ci,
            beta_post=beta[:, 0],
            se_trad=se_trad,
            beta_tilde=nan.copy(),
            se_eff=nan.copy(),
            accepted=np.ones(n, dtype=bool),
            tn_beta_est=nan.copy(),
            tn_beta_lo=nan.copy(),
            tn_beta_hi=nan.copy(),
            tn_gamma_est=nan.copy(),
            tn_gamma_lo=nan.copy(),
            tn_gamma_hi=nan.copy(),
        )

    lam = v_coef[:, 1:]
    sd_pre = np.sqrt(v0[:, None] + lam)
    c_crit = critical_value(config.alpha_pretest)
    accepted = np.all(np.abs(beta[:, 1:]) <= c_crit * sd_pre, axis=1)

    # pre-period adjustment: the estimated covariance is always a rank-one
    # update of a diagonal, so the solve has a closed form
    inv_lam = 1.0 / lam
    s = inv_lam.sum(axis=1)
    shrink = v0 / (1.0 + v0 * s)
    w = shrink[:, None] * inv_lam
    beta_tilde = beta[:, 0] - (w * beta[:, 1:]).sum(axis=1)
    var_eff = var_trad - v0 * w.sum(axis=1)
    se_eff = np.sqrt(var_eff)

    tn = {name: nan.copy() for name in (
        "tn_beta_est", "tn_beta_lo", "tn_beta_hi",
        "tn_gamma_est", "tn_gamma_lo", "tn_gamma_hi",
    )}
    idx = np.flatnonzero(accepted)
    if idx.size:
        beta_a = beta[idx]
        v0_a = v0[idx]
        v_coef_a = v_coef[idx]
        b_a = c_crit * sd_pre[idx]
        e1 = np.zeros(k + 1)
        e1[0] = 1.0
        contrasts = [("tn_beta", e1)]
        if eta_gamma_vec is not None:
            contrasts.append(("tn_gamma", eta_gamma_vec))
        for name, eta in contrasts:
            eta_sum = eta.sum()
            sig_eta = v0_a[:, None] * eta_sum + v_coef_a * eta[None, :]
            var_eta = (sig_eta * eta[None, :]).sum(axis=1)
            c_full = sig_eta / var_eta[:, None]
            obs = (beta_a * eta[None, :]).sum(axis=1)
            lo, hi = _truncation_window(
                beta_a[:, 1:], c_full[:, 1:], np.abs(c_full).max(axis=1), obs, b_a
            )
            est, ci_lo, ci_hi = _tn_triplet(
                obs, np.sqrt(var_eta), lo, hi, config.alpha_ci
            )
            tn[f"{name}_est"][idx] = est
            tn[f"{name}_lo"][idx] = ci_lo
            tn[f"{name}_hi"][idx] = ci_hi

    return ReplicationRecords(
        dgp=dgp,
        k=k,
        alpha_ci=config.alpha_ci,
        beta_post=beta[:, 0],
        se_trad=se_trad,
        beta_tilde=beta_tilde,
        se_eff=se_eff,
        accepted=accepted,
        **tn,
    )


def _records_from_panels(
    config: SimConfig, k: int, dgp: str, slope: float, rng: np.random.Generator, n: int
) -> ReplicationRecords:
    """Full-panel replication loop through the scalar estimation pipeline.

    Orders of magnitude slower than the fast path; intended for smoke tests
    and path-equivalence checks at small replication counts.
    """
    cfg = replace(config, fast_path=False, trend_slope=slope)
    arrays = {name: np.full(n, math.nan) for name in ReplicationRecords._ARRAYS}
    arrays["accepted"] = np.zeros(n, dtype=bool)
    if k == 0:
        # the unconditional row has no pre-period, so there is no panel to
        # validate: reduce the two-period sample to its cells directly
        n_cell = config.n_per_cell
        sig = config.sigma_noise
        for i in range(n):
            y_ctrl = rng.standard_normal((2, n_cell)) * sig
            y_treat = rng.standard_normal((2, n_cell)) * sig + slope * np.array([[0.0], [1.0]])
            delta = y_treat.mean(axis=1) - y_ctrl.mean(axis=1)
            v = (y_treat.var(axis=1, ddof=1) + y_ctrl.var(axis=1, ddof=1)) / n_cell
            arrays["beta_post"][i] = delta[1] - delta[0]
            arrays["se_trad"][i] = math.sqrt(v[0] + v[1])
        arrays["accepted"][:] = True
        return ReplicationRecords(dgp=dgp, k=k, alpha_ci=config.alpha_ci, **arrays)
    for i in range(n):
        panel = generate_dgp(cfg, k, rng)
        bundle = estimate_event_study(panel)
        report = analyze(
            bundle,
            alpha_pretest=config.alpha_pretest,
            alpha_ci=config.alpha_ci,
            trend_order=config.trend_order,
        )
        arrays["beta_post"][i] = report.traditional.estimate
        arrays["se_trad"][i] = report.traditional.se
        arrays["beta_tilde"][i] = report.efficient.estimate
        arrays["se_eff"][i] = report.efficient.se
        arrays["accepted"][i] = report.pretest.passed
        if report.pretest.passed:
            arrays["tn_beta_est"][i] = report.median_unbiased_beta.estimate
            arrays["tn_beta_lo"][i] = report.median_unbiased_beta.ci_lower
            arrays["tn_beta_hi"][i] = report.median_unbiased_beta.ci_upper
            arrays["tn_gamma_est"][i] = report.median_unbiased_gamma.estimate
            arrays["tn_gamma_lo"][i] = report.median_unbiased_gamma.ci_lower
            arrays["tn_gamma_hi"][i] = report.median_unbiased_gamma.ci_upper
    return ReplicationRecords(dgp=dgp, k=k, alpha_ci=config.alpha_ci, **arrays)


# --- chunked, optionally parallel execution -----------------------------------


def _chunk_seed(config: SimConfig, slope: float, k: int, chunk_index: int):
    slope_bits = int(np.float64(slope).view(np.uint64))
    return np.random.SeedSequence([int(config.seed), slope_bits, k, chunk_index])


def _run_chunk(args) -> ReplicationRecords:
    config, k, dgp, slope, chunk_index, n = args
    rng = np.random.default_rng(_chunk_seed(config, slope, k, chunk_index))
    if config.fast_path:
        eta_vec = eta_gamma(k, config.trend_order) if k >= 1 else None
        delta, v = _fast_cell_draws(config, k, slope, rng, n)
        return _records_from_draws(config, k, dgp, delta, v, eta_vec)
    return _records_from_panels(config, k, dgp, slope, rng, n)


def simulate_cell(config: SimConfig, k: int, dgp: str) -> ReplicationRecords:
    """All replications for one (DGP, K) cell, reduced in chunk order."""
    slope = 0.0 if dgp == "null" else config.trend_slope
    sizes = []
    remaining = config.reps
    while remaining > 0:
        take = min(config.chunk_size, remaining)
        sizes.append(take)
        remaining -= take
    args = [
        (config, k, dgp, slope, i, size) for i, size in enumerate(sizes)
    ]
    if config.workers <= 1 or len(args) == 1:
        parts = [_run_chunk(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_run_chunk, args))
    return ReplicationRecords.concatenate(parts)


# --- aggregation --------------------------------------------------------------


def _mean(x: np.ndarray) -> float:
    return float(np.mean(x)) if x.size else math.nan


def _sd(x: np.ndarray) -> float:
    if x.size < 2:
        return math.nan
    return float(np.std(x, ddof=1))


def _median(x: np.ndarray) -> float:
    return float(np.median(x)) if x.size else math.nan


def _reject_rate(estimate, se, z, value) -> float:
    if estimate.size == 0:
        return math.nan
    return float(np.mean(np.abs(estimate - value) > z * se))


def _ci_reject_rate(lo, hi, value) -> float:
    if lo.size == 0:
        return math.nan
    return float(np.mean((lo > value) | (hi < value)))


def _widths(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        w = hi - lo
    # both endpoints diverged the same way (observed value essentially on a
    # window edge): the interval is unusable, count its width as infinite
    return np.where(np.isnan(w), math.inf, w)


def summarize_row(
    accepted: ReplicationRecords,
    unconditional: ReplicationRecords,
    truth: tuple[float, float],
) -> SimTableRow:
    """Aggregate one (DGP, K) cell into a table row.

    ``truth`` is (post coefficient, trend-adjusted coefficient).  Statistics
    run over the accepted replications (the K = 0 cell accepts everything);
    infinite interval widths participate in medians as infinities, and a
    single accepted replication yields NaN standard deviations rather than a
    crash.
    """
    if unconditional.n == 0:
        raise ValueError("no replication records")
    truth_beta, truth_gamma = truth
    k = unconditional.k
    z = critical_value(unconditional.alpha_ci)
    n_acc = accepted.n
    degenerate = k >= 1 and n_acc < MIN_ACCEPTED

    width_trad = 2.0 * z * accepted.se_trad
    row = {
        "dgp": unconditional.dgp,
        "k": k,
        "n_accepted": n_acc,
        "accept_prob": n_acc / unconditional.n,
        "degenerate": degenerate,
        "bias_traditional": _mean(accepted.beta_post) - truth_beta,
        "mean_se_traditional": _mean(accepted.se_trad),
        "actual_sd_traditional": _sd(accepted.beta_post),
        "size_traditional": _reject_rate(accepted.beta_post, accepted.se_trad, z, truth_beta),
        "reject_beta_post_traditional": _reject_rate(
            accepted.beta_post, accepted.se_trad, z, truth_beta
        ),
        "reject_zero_traditional": _reject_rate(accepted.beta_post, accepted.se_trad, z, 0.0),
        "median_traditional": _median(accepted.beta_post),
        "median_width_traditional": _median(width_trad),
    }
    if k == 0:
        eff = {name: math.nan for name in (
            "bias_efficient", "mean_se_efficient", "actual_sd_efficient",
            "size_efficient", "reject_beta_post_efficient", "reject_zero_efficient",
            "median_tn_beta", "median_tn_gamma", "tn_reject_beta_post",
            "tn_reject_zero_gamma", "median_width_tn_beta", "median_width_tn_gamma",
        )}
        return SimTableRow(**row, **eff)

    row.update(
        bias_efficient=_mean(accepted.beta_tilde) - truth_beta,
        mean_se_efficient=_mean(accepted.se_eff),
        actual_sd_efficient=_sd(accepted.beta_tilde),
        size_efficient=_reject_rate(accepted.beta_tilde, accepted.se_eff, z, truth_beta),
        reject_beta_post_efficient=_reject_rate(
            accepted.beta_tilde, accepted.se_eff, z, truth_beta
        ),
        reject_zero_efficient=_reject_rate(accepted.beta_tilde, accepted.se_eff, z, 0.0),
        median_tn_beta=_median(accepted.tn_beta_est),
        median_tn_gamma=_median(accepted.tn_gamma_est),
        tn_reject_beta_post=_ci_reject_rate(
            accepted.tn_beta_lo, accepted.tn_beta_hi, truth_beta
        ),
        tn_reject_zero_gamma=_ci_reject_rate(
            accepted.tn_gamma_lo, accepted.tn_gamma_hi, truth_gamma
        ),
        median_width_tn_beta=_median(_widths(accepted.tn_beta_lo, accepted.tn_beta_hi)),
        median_width_tn_gamma=_median(_widths(accepted.tn_gamma_lo, accepted.tn_gamma_hi)),
    )
    if degenerate:
        keep = {"dgp", "k", "n_accepted", "accept_prob", "degenerate"}
        row = {
            name: (value if name in keep else math.nan)
            for name, value in row.items()
        }
    return SimTableRow(**row)


# --- table drivers ------------------------------------------------------------

TABLE_SPECS = {
    1: (("null",), 0),
    2: (("trend",), 0),
    3: (("null", "trend"), 1),
    4: (("null", "trend"), 1),
}


def run_table(config: SimConfig, table_id: int) -> list[SimTableRow]:
    """Simulate and aggregate every row of one published table.

    Tables 1 and 2 include the unconditional K = 0 row; tables 3 and 4 run
    both DGPs.  Cells with too few accepted replications are flagged
    degenerate rather than failing the run.
    """
    if table_id not in TABLE_SPECS:
        raise ValueError(f"table_id must be one of {sorted(TABLE_SPECS)}")
    dgps, k_lo = TABLE_SPECS[table_id]
    rows = []
    for dgp in dgps:
        truth_beta = 0.0 if dgp == "null" else config.trend_slope
        for k in range(k_lo, config.k_max + 1):
            records = simulate_cell(config, k, dgp)
            accepted = records.subset(records.accepted)
            rows.append(summarize_row(accepted, records, (truth_beta, 0.0)))
    return rows


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[SimTableRow]) -> str:
    """One row per line, header matching the field names, full-precision floats."""
    names = [f.name for f in fields(SimTableRow)]
    lines = [",".join(names)]
    for row in rows:
        lines.append(",".join(_format_value(getattr(row, name)) for name in names))
    return "\n".join(lines) + "\n"


def _json_safe(value):
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


def rows_to_json(rows: list[SimTableRow]) -> str:
    """JSON array of row objects; infinities as "inf"/"-inf", NaN as null."""
    import json

    names = [f.name for f in fields(SimTableRow)]
    payload = [
        {name: _json_safe(getattr(row, name)) for name in names} for row in rows
    ]
    return json.dumps(payload, indent=2) + "\n"
