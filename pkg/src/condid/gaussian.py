"""Gaussian numerics: small dense covariance objects, equicorrelated
closed-form inverses, a tail-stable truncated-normal CDF, and the monotone
mean solve that underlies quantile-unbiased estimation.

All truncated-normal computations run in log space throughout, so windows
many standard deviations out in a tail keep full relative accuracy.
Truncation bounds are IEEE infinities used as explicit sentinels; wherever a
bound enters an expression, an ``isinf`` selection keeps the infinite value
out of the finite-float path (an infinite bound standardizes to the infinite
z-value directly, never to an overflowed intermediate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import (
    CholeskyError,
    DegenerateWindowError,
    NoBracketError,
    SingularMatrixError,
)

__all__ = [
    "CovarianceMatrix",
    "EquicorrelatedSpec",
    "TruncatedNormalSpec",
    "equicorrelated_matrix",
    "equicorrelated_inverse",
    "tn_cdf",
    "solve_tn_mean",
    "solve_tn_mean_bulk",
    "mvn_sample",
]

# Window mass below exp(LOG_MASS_FLOOR) cannot be represented even as a
# subnormal double; tn_cdf refuses such windows rather than returning noise.
LOG_MASS_FLOOR = -740.0

_SYM_RTOL = 1e-12


class CovarianceMatrix:
    """Symmetric positive-definite covariance over (post, pre) coordinates.

    The first coordinate is the post-period coefficient; the remaining K
    coordinates are the pre-period coefficients ordered (-1, -2, ..., -K).
    Block views follow that partition.

    Parameters
    ----------
    entries : array_like, shape (d, d)
        Symmetric matrix (checked to relative tolerance 1e-12).
    allow_singular : bool
        When False (default) the matrix must be positive definite; a failed
        Cholesky factorization raises :class:`CholeskyError` at construction.
        When True, positive definiteness is checked lazily, on first use of
        :meth:`cholesky`.  Estimated covariances from degenerate samples
        (zero within-cell variance) need this escape hatch.
    """

    __slots__ = ("entries", "_chol")

    def __init__(self, entries, *, allow_singular: bool = False):
        arr = np.array(entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError(f"covariance must be a square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("covariance entries must be finite")
        scale = max(1.0, float(np.abs(arr).max()))
        if np.abs(arr - arr.T).max() > _SYM_RTOL * scale:
            raise ValueError("covariance is not symmetric within 1e-12 relative tolerance")
        arr = 0.5 * (arr + arr.T)
        arr.flags.writeable = False
        self.entries = arr
        self._chol = None
        if not allow_singular:
            self._chol = self._factor()

    def _factor(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.entries)
        except np.linalg.LinAlgError as exc:
            raise CholeskyError("covariance is not positive definite") from exc

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def k(self) -> int:
        """Number of pre-period coordinates."""
        return self.dim - 1

    @property
    def sigma11(self) -> float:
        """Variance of the post coefficient."""
        return float(self.entries[0, 0])

    @property
    def sigma12(self) -> np.ndarray:
        """Covariances between the post and pre coefficients, shape (K,)."""
        return self.entries[0, 1:]

    @property
    def sigma22(self) -> np.ndarray:
        """Covariance block of the pre coefficients, shape (K, K)."""
        return self.entries[1:, 1:]

    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor; raises :class:`CholeskyError` if not PD."""
        if self._chol is None:
            self._chol = self._factor()
        return self._chol

    def __repr__(self) -> str:  # pragma: no cover
        return f"CovarianceMatrix(dim={self.dim})"


@dataclass(frozen=True)
class EquicorrelatedSpec:
    """A dim x dim matrix with ``diag`` on the diagonal and ``offdiag`` off it."""

    dim: int
    diag: float
    offdiag: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (self.diag > 0):
            raise ValueError("diagonal (variance) must be positive")

    def has_positive_equicorrelation(self) -> bool:
        """True when the off-diagonal is strictly positive and strictly below
        the diagonal -- the structure produced by repeated cross-sections."""
        return self.offdiag > 0 and self.diag > self.offdiag


def equicorrelated_matrix(spec: EquicorrelatedSpec) -> CovarianceMatrix:
    """Materialize the spec as a dense :class:`CovarianceMatrix`."""
    n = spec.dim
    m = np.full((n, n), spec.offdiag)
    np.fill_diagonal(m, spec.diag)
    return CovarianceMatrix(m)


def equicorrelated_inverse(spec: EquicorrelatedSpec) -> CovarianceMatrix:
    """Closed-form inverse of an equicorrelated matrix.

    For S = (d - r) I + r 11' the rank-one update formula gives

        S^-1 = (d - r)^-1 I - [r (d - r)^-2 / (1 + n r (d - r)^-1)] 11'.

    Raises
    ------
    SingularMatrixError
        When ``d <= r`` or ``1 + n r / (d - r) <= 0`` (the matrix is not
        positive definite and the closed form degenerates).
    """
    n, d, r = spec.dim, spec.diag, spec.offdiag
    if n == 1:
        # scalar case: the off-diagonal is irrelevant
        return CovarianceMatrix([[1.0 / d]])
    base = d - r
    if base <= 0:
        raise SingularMatrixError(
            f"off-diagonal {r} must be strictly below diagonal {d} for inversion"
        )
    denom = 1.0 + n * r / base
    if denom <= 0:
        raise SingularMatrixError(
            f"equicorrelated matrix with dim={n}, diag={d}, offdiag={r} is singular"
        )
    coeff = r / (base * base) / denom
    inv = np.full((n, n), -coeff)
    np.fill_diagonal(inv, 1.0 / base - coeff)
    return CovarianceMatrix(inv)


@dataclass(frozen=True)
class TruncatedNormalSpec:
    """Parameters of a univariate truncated normal law.

    ``mu`` and ``var`` are the *untruncated* mean and variance; ``lower`` and
    ``upper`` may be ``-inf`` / ``+inf``.  Equal bounds are rejected at
    construction.
    """

    mu: float
    var: float
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        if not (self.var > 0) or not math.isfinite(self.var):
            raise ValueError("var must be positive and finite")
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValueError("truncation bounds must not be NaN")
        if not (self.lower < self.upper):
            raise ValueError(f"lower bound {self.lower} must be strictly below upper {self.upper}")

    @property
    def sd(self) -> float:
        return math.sqrt(self.var)


def _log1mexp(d: np.ndarray) -> np.ndarray:
    """log(1 - exp(d)) for d <= 0, elementwise, accurate near both ends."""
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = d < -math.log(2.0)
        out = np.where(small, np.log1p(-np.exp(d)), np.log(-np.expm1(d)))
    return out


def _window_log_mass(zlo, zhi) -> np.ndarray:
    """log(Phi(zhi) - Phi(zlo)) elementwise, stable in either tail.

    Both-in-left-tail windows use the CDF difference in log space; both-in-
    right-tail windows use the survival function via symmetry; windows that
    straddle zero carry O(1) mass and use the direct difference.  Empty or
    inverted windows map to -inf.
    """
    zlo = np.asarray(zlo, dtype=float)
    zhi = np.asarray(zhi, dtype=float)
    zlo, zhi = np.broadcast_arrays(zlo, zhi)
    out = np.full(zlo.shape, -math.inf)

    valid = zhi > zlo
    left = valid & (zhi <= 0)
    right = valid & (zlo >= 0)
    mid = valid & ~left & ~right

    if left.any():
        a = log_ndtr(zhi[left])
        b = log_ndtr(zlo[left])
        out[left] = a + _log1mexp(b - a)
    if right.any():
        a = log_ndtr(-zlo[right])
        b = log_ndtr(-zhi[right])
        out[right] = a + _log1mexp(b - a)
    if mid.any():
        with np.errstate(divide="ignore"):
            out[mid] = np.log(ndtr(zhi[mid]) - ndtr(zlo[mid]))
    return out


def _tn_cdf_core(x, mu, sd, lower, upper):
    """Vectorized truncated-normal CDF evaluated in log space.

    Returns ``(cdf, log_denominator)``; callers that care about representable
    window mass inspect the denominator.  ``x`` outside the window clamps to
    0/1.  All arguments broadcast.
    """
    x, mu, sd, lower, upper = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (x, mu, sd, lower, upper))
    )
    shape = x.shape
    x, mu, sd, lower, upper = (np.ravel(a) for a in (x, mu, sd, lower, upper))
    with np.errstate(invalid="ignore"):
        zx = (x - mu) / sd
        zlo = np.where(np.isinf(lower), lower, (lower - mu) / sd)
        zhi = np.where(np.isinf(upper), upper, (upper - mu) / sd)
    log_den = _window_log_mass(zlo, zhi)
    log_num = _window_log_mass(zlo, np.minimum(zx, zhi))
    with np.errstate(invalid="ignore"):
        cdf = np.exp(log_num - log_den)
    cdf = np.clip(cdf, 0.0, 1.0)
    cdf = np.where(x <= lower, 0.0, cdf)
    cdf = np.where(x >= upper, 1.0, cdf)
    return cdf.reshape(shape), log_den.reshape(shape)


def tn_cdf(spec: TruncatedNormalSpec, x: float) -> float:
    """CDF of the truncated normal law at ``x``.

    Values of ``x`` outside ``[lower, upper]`` clamp to 0 and 1.

    Raises
    ------
    DegenerateWindowError
        When the window mass is below exp(-740), i.e. zero even as a
        subnormal double.
    """
    cdf, log_den = _tn_cdf_core(x, spec.mu, spec.sd, spec.lower, spec.upper)
    if float(log_den) < LOG_MASS_FLOOR:
        raise DegenerateWindowError(
            f"truncation window [{spec.lower}, {spec.upper}] carries log-mass "
            f"{float(log_den):.1f} < {LOG_MASS_FLOOR} under mu={spec.mu}, var={spec.var}"
        )
    return float(cdf)


def _tn_cdf_at_mean(mu, observed, sd, lower, upper) -> np.ndarray:
    """CDF at the fixed point ``observed`` as a function of the mean ``mu``.

    Used by the mean solve; works directly off log masses so that windows
    with unrepresentably small mass still yield a meaningful ratio.
    """
    cdf, _ = _tn_cdf_core(observed, mu, sd, lower, upper)
    return cdf


def solve_tn_mean_bulk(
    observed,
    sd,
    lower,
    upper,
    target,
    *,
    cdf_tol: float = 1e-8,
    max_radius: float = 40.0,
    max_iter: int = 200,
):
    """Vectorized monotone solve for the truncated-normal mean.

    For each element, finds ``mu`` such that the CDF of TN(mu, sd^2, [lower,
    upper]) evaluated at ``observed`` equals ``target``.  The CDF is strictly
    decreasing in ``mu``; a bracket expands geometrically from
    ``observed +/- sd`` (capped at ``max_radius * sd``) and bisection then
    drives the CDF within ``cdf_tol`` of the target.

    Returns
    -------
    (mu, status) : tuple of ndarray
        ``status`` is 0 where the solve succeeded, -1 where the root lies
        below ``observed - max_radius*sd`` and +1 where it lies above
        ``observed + max_radius*sd`` (``mu`` is meaningless there).
    """
    observed, sd, lower, upper, target = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (observed, sd, lower, upper, target))
    )
    shape = observed.shape
    observed = observed.ravel().copy()
    sd = sd.ravel()
    lower = lower.ravel()
    upper = upper.ravel()
    target = target.ravel()
    n = observed.size

    # absorb float dust: the observed value is inside its window by
    # construction whenever the conditioning event held
    observed = np.minimum(np.maximum(observed, lower), upper)

    lo = observed - sd
    hi = observed + sd
    f_lo = _tn_cdf_at_mean(lo, observed, sd, lower, upper)
    f_hi = _tn_cdf_at_mean(hi, observed, sd, lower, upper)

    radius = np.ones(n)
    # F is decreasing in mu: the bracket straddles once F(lo) >= target >= F(hi)
    while True:
        need_lo = f_lo < target
        need_hi = f_hi > target
        need = (need_lo | need_hi) & (radius < max_radius)
        if not need.any():
            break
        radius = np.where(need, np.minimum(radius * 2.0, max_radius), radius)
        grow_lo = need & need_lo
        grow_hi = need & need_hi
        if grow_lo.any():
            lo[grow_lo] = observed[grow_lo] - radius[grow_lo] * sd[grow_lo]
            f_lo[grow_lo] = _tn_cdf_at_mean(
                lo[grow_lo], observed[grow_lo], sd[grow_lo], lower[grow_lo], upper[grow_lo]
            )
        if grow_hi.any():
            hi[grow_hi] = observed[grow_hi] + radius[grow_hi] * sd[grow_hi]
            f_hi[grow_hi] = _tn_cdf_at_mean(
                hi[grow_hi], observed[grow_hi], sd[grow_hi], lower[grow_hi], upper[grow_hi]
            )

    status = np.zeros(n, dtype=np.int8)
    status[f_lo < target] = -1
    status[f_hi > target] = 1

    # converge both the CDF value and the mean itself: where the CDF is very
    # flat in mu, the CDF tolerance alone leaves the mean poorly pinned
    mu_tol = 1e-8 * np.maximum(sd, 1.0)
    mu = 0.5 * (lo + hi)
    active = np.flatnonzero(status == 0)
    for _ in range(max_iter):
        if active.size == 0:
            break
        mid = 0.5 * (lo[active] + hi[active])
        f_mid = _tn_cdf_at_mean(
            mid, observed[active], sd[active], lower[active], upper[active]
        )
        mu[active] = mid
        done = (np.abs(f_mid - target[active]) <= cdf_tol) & (
            hi[active] - lo[active] <= mu_tol[active]
        )
        go_right = f_mid > target[active]
        lo[active[go_right]] = mid[go_right]
        hi[active[~go_right]] = mid[~go_right]
        active = active[~done]

    return mu.reshape(shape), status.reshape(shape)


def solve_tn_mean(
    observed: float,
    var: float,
    lower: float,
    upper: float,
    target: float,
) -> float:
    """Mean of the truncated normal that places ``observed`` at quantile ``target``.

    Parameters
    ----------
    observed : float
        Point at which the CDF is pinned; must lie in ``[lower, upper]``.
    var : float
        Untruncated variance (> 0).
    lower, upper : float
        Truncation bounds, ``-inf``/``+inf`` allowed.
    target : float
        Desired CDF value, strictly inside (0, 1).

    Returns
    -------
    float
        ``mu`` with ``|tn_cdf((mu, var, lower, upper), observed) - target| <= 1e-8``.

    Raises
    ------
    NoBracketError
        When the root lies outside ``observed +/- 40*sqrt(var)``; the caller
        should surface this as an unbounded interval endpoint.
    """
    if not (var > 0):
        raise ValueError("var must be positive")
    if not (0.0 < target < 1.0):
        raise ValueError("target must lie strictly inside (0, 1)")
    if math.isnan(lower) or math.isnan(upper) or not lower < upper:
        raise ValueError("bounds must satisfy lower < upper")
    if not (lower <= observed <= upper):
        raise ValueError(f"observed {observed} outside window [{lower}, {upper}]")
    sd = math.sqrt(var)
    mu, status = solve_tn_mean_bulk(
        np.array([observed]), np.array([sd]), np.array([lower]),
        np.array([upper]), np.array([target]),
    )
    side = int(status[0])
    if side != 0:
        direction = "below" if side < 0 else "above"
        raise NoBracketError(
            f"mean solving CDF({observed})={target} lies {direction} "
            f"observed {'-' if side < 0 else '+'} 40*sd (sd={sd:g})",
            side=side,
        )
    return float(mu[0])


def mvn_sample(mean, cov, rng: np.random.Generator) -> np.ndarray:
    """One multivariate normal draw via the Cholesky factor.

    ``cov`` may be a :class:`CovarianceMatrix` or a raw symmetric array;
    non-positive-definite input raises :class:`CholeskyError`.  Deterministic
    for a fixed generator state.
    """
    mean = np.asarray(mean, dtype=float)
    if isinstance(cov, CovarianceMatrix):
        if cov.dim != mean.shape[0]:
            raise ValueError("mean and covariance dimensions disagree")
        chol = cov.cholesky()
    else:
        arr = np.asarray(cov, dtype=float)
        if arr.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError("mean and covariance dimensions disagree")
        try:
            chol = np.linalg.cholesky(arr)
        except np.linalg.LinAlgError as exc:
            raise CholeskyError("covariance is not positive definite") from exc
    z = rng.standard_normal(mean.shape[0])
    return mean + chol @ z
