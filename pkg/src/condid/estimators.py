"""Inference for event-study contrasts conditional on a polyhedral event.

The machinery: any linear contrast eta'beta_hat, conditioned on the event
{A beta_hat <= b} and on the residual Z = (I - c eta') beta_hat with
c = Sigma eta / (eta' Sigma eta), follows a univariate truncated normal with
untruncated mean eta'beta, untruncated variance eta'Sigma eta, and window

    V- = max over {j : (Ac)_j < 0} of (b_j - (AZ)_j) / (Ac)_j,
    V+ = min over {j : (Ac)_j > 0} of (b_j - (AZ)_j) / (Ac)_j,

with empty index sets giving -inf / +inf.  Quantile-unbiased point estimates
and equal-tailed intervals then come from solving the truncated-normal mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    ConstraintViolatedError,
    DegenerateAcceptanceError,
    NoBracketError,
    RankDeficientError,
    SingularMatrixError,
    UnboundedEstimateError,
    ZeroContrastError,
)
from .event_study import EstimateBundle
from .gaussian import CovarianceMatrix, TruncatedNormalSpec, solve_tn_mean
from .pretest import PolyhedralConstraint, build_ns_polyhedron, critical_value, passes_pretest

__all__ = [
    "ConditionalLaw",
    "EstimatorBlock",
    "ConditionalBlock",
    "PretestResult",
    "InferenceReport",
    "efficient_estimator",
    "condition_contrast",
    "quantile_unbiased_estimate",
    "conditional_ci",
    "eta_gamma",
    "analyze",
    "conditional_moment_oracle",
]

# rows with |(Ac)_j| below this relative threshold are treated as orthogonal
# to the contrast and excluded from the window competition
AC_ZERO_RTOL = 1e-10


def efficient_estimator(bundle: EstimateBundle) -> tuple[float, float]:
    """Pre-period-adjusted point estimate and its variance.

    Returns ``beta_post - w' beta_pre`` with ``w = Sigma22^-1 Sigma21`` and
    variance ``Sigma11 - Sigma12 w``, both via a Cholesky solve of the pre
    block (no explicit inverse).

    Raises
    ------
    SingularMatrixError
        When the pre-coefficient covariance block is not positive definite.
    """
    sigma = bundle.sigma
    if sigma.k == 0:
        raise ValueError("bundle has no pre-period coefficients")
    try:
        factor = cho_factor(sigma.sigma22, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("pre-coefficient covariance block is singular") from exc
    weights = cho_solve(factor, sigma.sigma12)
    estimate = bundle.beta_post - float(weights @ bundle.beta_pre)
    variance = sigma.sigma11 - float(sigma.sigma12 @ weights)
    return estimate, variance


def adjustment_weights(sigma: CovarianceMatrix) -> np.ndarray:
    """The weight vector Sigma22^-1 Sigma21 applied to beta_pre."""
    try:
        factor = cho_factor(sigma.sigma22, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("pre-coefficient covariance block is singular") from exc
    return cho_solve(factor, sigma.sigma12)


@dataclass(frozen=True, eq=False)
class ConditionalLaw:
    """Truncated-normal law of one contrast, conditional on the event.

    ``spec.mu`` stores the observed contrast as a reference point only: the
    mean is the free parameter in every downstream solve.  ``z_vector`` and
    ``c_vector`` satisfy ``beta_hat = z_vector + c_vector * observed``.
    """

    spec: TruncatedNormalSpec
    observed: float
    z_vector: np.ndarray
    c_vector: np.ndarray
    eta: np.ndarray

    @property
    def window(self) -> tuple[float, float]:
        return self.spec.lower, self.spec.upper


def condition_contrast(
    bundle: EstimateBundle,
    eta,
    constraint: PolyhedralConstraint,
) -> ConditionalLaw:
    """Conditional law of ``eta' beta_hat`` given ``A beta_hat <= b`` and Z.

    Preconditions: ``eta`` nonzero, the observed coefficients satisfy the
    constraint, and ``eta' Sigma eta > 0``.

    Raises
    ------
    ZeroContrastError
        ``eta`` is zero (or has zero variance under a singular covariance).
    ConstraintViolatedError
        The observed coefficient vector is outside the polyhedron.
    """
    eta = np.asarray(eta, dtype=float)
    beta = bundle.beta
    if eta.shape != beta.shape:
        raise ValueError(f"eta has shape {eta.shape}, expected {beta.shape}")
    if not np.any(eta != 0.0):
        raise ZeroContrastError("contrast vector is zero")
    if constraint.dim != beta.shape[0]:
        raise ValueError("constraint dimension does not match bundle")
    if not constraint.holds_at(beta):
        raise ConstraintViolatedError(
            "observed coefficients violate the conditioning event; "
            "condition_contrast requires a bundle that passed it"
        )

    sigma_eta = bundle.sigma.entries @ eta
    var = float(eta @ sigma_eta)
    if var <= 0.0:
        raise ZeroContrastError("contrast has zero variance under sigma")
    c = sigma_eta / var
    observed = float(eta @ beta)
    z = beta - c * observed

    a = constraint.a_matrix
    b = constraint.b_vector
    ac = a @ c
    az = a @ z
    tol = AC_ZERO_RTOL * float(np.abs(a).sum(axis=1).max(initial=0.0)) * float(
        np.abs(c).max()
    )
    neg = ac < -tol
    pos = ac > tol
    with np.errstate(divide="ignore"):
        lower = float(np.max((b[neg] - az[neg]) / ac[neg])) if neg.any() else -math.inf
        upper = float(np.min((b[pos] - az[pos]) / ac[pos])) if pos.any() else math.inf
    # float dust can place the observed value epsilon outside its window
    observed = min(max(observed, lower), upper)
    spec = TruncatedNormalSpec(mu=observed, var=var, lower=lower, upper=upper)
    return ConditionalLaw(spec=spec, observed=observed, z_vector=z, c_vector=c, eta=eta)


def quantile_unbiased_estimate(law: ConditionalLaw, target: float = 0.5) -> float:
    """The mean parameter placing the observed contrast at quantile ``target``.

    ``target=0.5`` gives the median-unbiased point estimate.

    Raises
    ------
    UnboundedEstimateError
        The solve ran off ``observed +/- 40 sd``; the estimate is reported as
        an infinite interval endpoint by callers, never silently clamped.
    """
    try:
        return solve_tn_mean(
            law.observed, law.spec.var, law.spec.lower, law.spec.upper, target
        )
    except NoBracketError as exc:
        raise UnboundedEstimateError(str(exc), side=exc.side) from exc


def conditional_ci(law: ConditionalLaw, alpha: float = 0.05) -> tuple[float, float]:
    """Equal-tailed 1-alpha interval for the contrast mean.

    The CDF at the observed value is decreasing in the mean, so the lower
    endpoint solves for quantile ``1 - alpha/2`` and the upper endpoint for
    ``alpha/2``; a failed solve yields an infinite endpoint on that side.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie strictly inside (0, 1)")
    try:
        lower = quantile_unbiased_estimate(law, 1.0 - alpha / 2.0)
    except UnboundedEstimateError as exc:
        lower = math.copysign(math.inf, exc.side)
    try:
        upper = quantile_unbiased_estimate(law, alpha / 2.0)
    except UnboundedEstimateError as exc:
        upper = math.copysign(math.inf, exc.side)
    return lower, upper


def eta_gamma(k: int, p: int = 1, m: int = 1) -> np.ndarray:
    """Contrast whose value equals the trend-adjusted post coefficient.

    Fitting a degree-``p`` polynomial through the points
    ``(0, 0), (-1, beta_-1), ..., (-K, beta_-K)`` and extrapolating it to
    period ``m`` gives the adjustment; the returned vector eta (length K+1,
    ordered post-first) satisfies

        eta' beta = beta_m - [extrapolated trend at m].

    A pure polynomial trend of degree <= p therefore maps to exactly zero.

    Raises
    ------
    RankDeficientError
        Defensive: the Vandermonde basis on distinct periods with p <= k is
        always full rank.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not (1 <= p <= k):
        raise ValueError(f"trend order p={p} must satisfy 1 <= p <= k={k}")
    if m < 1:
        raise ValueError("m must be >= 1")
    t = -np.arange(k + 1, dtype=float)  # 0, -1, ..., -K
    x = np.vander(t, p + 1, increasing=True)  # rows (t^0, ..., t^p)
    pinv, _, rank, _ = np.linalg.lstsq(x, np.eye(k + 1), rcond=None)
    if rank < p + 1:
        raise RankDeficientError(f"trend basis rank {rank} < {p + 1}")
    m_powers = float(m) ** np.arange(p + 1)
    # drop the t=0 column: beta_0 is identically zero
    weights = m_powers @ pinv[:, 1:]
    return np.concatenate(([1.0], -weights))


@dataclass(frozen=True)
class EstimatorBlock:
    """Point estimate with standard error and a Wald interval."""

    estimate: float
    se: float
    ci_lower: float
    ci_upper: float


@dataclass(frozen=True)
class ConditionalBlock:
    """Median-unbiased estimate with its conditional interval and the
    truncation window it was computed under."""

    estimate: float
    ci_lower: float
    ci_upper: float
    window_lower: float
    window_upper: float
    trend_order: int | None = None


@dataclass(frozen=True)
class PretestResult:
    alpha: float
    passed: bool


@dataclass(frozen=True)
class InferenceReport:
    """Everything :func:`analyze` produces for one dataset.

    The conditional blocks are ``None`` when the pretest failed: the
    truncated-normal corrections are defined only on the acceptance event.
    """

    k: int
    pretest: PretestResult
    traditional: EstimatorBlock
    efficient: EstimatorBlock
    median_unbiased_beta: ConditionalBlock | None
    median_unbiased_gamma: ConditionalBlock | None


def _wald_block(estimate: float, variance: float, alpha: float) -> EstimatorBlock:
    se = math.sqrt(variance)
    z = critical_value(alpha)
    return EstimatorBlock(
        estimate=estimate, se=se, ci_lower=estimate - z * se, ci_upper=estimate + z * se
    )


def _conditional_block(
    bundle: EstimateBundle,
    eta: np.ndarray,
    constraint: PolyhedralConstraint,
    alpha: float,
    trend_order: int | None = None,
) -> ConditionalBlock:
    law = condition_contrast(bundle, eta, constraint)
    try:
        estimate = quantile_unbiased_estimate(law, 0.5)
    except UnboundedEstimateError as exc:
        estimate = math.copysign(math.inf, exc.side)
    lower, upper = conditional_ci(law, alpha)
    return ConditionalBlock(
        estimate=estimate,
        ci_lower=lower,
        ci_upper=upper,
        window_lower=law.spec.lower,
        window_upper=law.spec.upper,
        trend_order=trend_order,
    )


def analyze(
    bundle: EstimateBundle,
    alpha_pretest: float = 0.05,
    alpha_ci: float = 0.05,
    trend_order: int = 1,
) -> InferenceReport:
    """Run the full inference pipeline on one estimated bundle.

    Always reports the traditional and pre-period-adjusted estimators; when
    the pretest passes, adds median-unbiased conditional estimates and
    intervals for the post coefficient and for the trend-adjusted contrast.
    """
    k = bundle.k
    traditional = _wald_block(bundle.beta_post, bundle.sigma.sigma11, alpha_ci)
    eff_est, eff_var = efficient_estimator(bundle)
    efficient = _wald_block(eff_est, eff_var, alpha_ci)
    passed = passes_pretest(bundle, alpha_pretest)
    beta_block = None
    gamma_block = None
    if passed:
        constraint = build_ns_polyhedron(bundle.sigma, alpha_pretest)
        e1 = np.zeros(k + 1)
        e1[0] = 1.0
        beta_block = _conditional_block(bundle, e1, constraint, alpha_ci)
        gamma_block = _conditional_block(
            bundle, eta_gamma(k, trend_order), constraint, alpha_ci, trend_order=trend_order
        )
    return InferenceReport(
        k=k,
        pretest=PretestResult(alpha=alpha_pretest, passed=passed),
        traditional=traditional,
        efficient=efficient,
        median_unbiased_beta=beta_block,
        median_unbiased_gamma=gamma_block,
    )


def conditional_moment_oracle(
    true_beta,
    sigma: CovarianceMatrix,
    constraint: PolyhedralConstraint,
    reps: int,
    rng: np.random.Generator,
    *,
    batch_size: int = 65536,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Rejection-sampled conditional moments of beta_hat given the event.

    Draws ``reps`` proposals from N(true_beta, sigma), keeps those inside
    the polyhedron and returns their sample mean, sample covariance (ddof=1)
    and the acceptance fraction.  This is a test oracle: the multivariate
    truncated-normal mean has no closed form.

    Raises
    ------
    DegenerateAcceptanceError
        Fewer than 100 draws landed inside the event.
    """
    if reps < 10_000:
        raise ValueError("the oracle needs reps >= 10_000 to be meaningful")
    true_beta = np.asarray(true_beta, dtype=float)
    chol = sigma.cholesky()
    a = constraint.a_matrix
    b = constraint.b_vector
    kept = []
    n_drawn = 0
    while n_drawn < reps:
        n = min(batch_size, reps - n_drawn)
        draws = true_beta + rng.standard_normal((n, sigma.dim)) @ chol.T
        inside = np.all(draws @ a.T <= b, axis=1)
        if inside.any():
            kept.append(draws[inside])
        n_drawn += n
    accepted = np.concatenate(kept) if kept else np.empty((0, sigma.dim))
    if accepted.shape[0] < 100:
        raise DegenerateAcceptanceError(
            f"only {accepted.shape[0]} of {reps} draws satisfied the event"
        )
    mean = accepted.mean(axis=0)
    cov = np.cov(accepted, rowvar=False, ddof=1)
    return mean, np.atleast_2d(cov), accepted.shape[0] / reps
