"""Event-study estimation from long-format two-group data.

The design is saturated (period effects, a main treatment effect, and one
treatment interaction per non-reference period), so the interaction
coefficients reduce exactly to differences of cell means:

    beta_t = (mean_T[t] - mean_C[t]) - (mean_T[0] - mean_C[0]),  t != 0.

Estimation therefore runs on cell means in O(rows); the dummy-regression
normal equations exist only as a test oracle.  Coefficients are ordered
(post, -1, -2, ..., -K) everywhere.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientDataError,
    NonContiguousPeriodsError,
    PanelParseError,
    PanelValidationError,
)
from .gaussian import CovarianceMatrix

__all__ = [
    "PanelData",
    "EstimateBundle",
    "CellStats",
    "estimate_event_study",
    "estimate_covariance",
    "load_panel",
    "write_panel",
    "PANEL_HEADER",
]

PANEL_HEADER = ("unit", "period", "treatment", "outcome")


@dataclass(frozen=True, eq=False)
class PanelData:
    """Long-format observations for one treated and one control group.

    Validated at construction: periods must form a contiguous set
    {-K, ..., 0, 1} with K >= 1, every (group, period) cell needs at least
    two observations, and (unit, period) pairs must be unique.
    """

    unit: np.ndarray
    period: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray

    def __post_init__(self):
        unit = np.asarray(self.unit)
        period = np.asarray(self.period, dtype=int)
        treatment = np.asarray(self.treatment, dtype=bool)
        outcome = np.asarray(self.outcome, dtype=float)
        n = unit.shape[0]
        if not (period.shape[0] == treatment.shape[0] == outcome.shape[0] == n):
            raise PanelValidationError("panel columns have unequal lengths")
        if n == 0:
            raise InsufficientDataError("panel contains no observations")
        if not np.all(np.isfinite(outcome)):
            raise PanelValidationError("outcome contains non-finite values")
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "period", period)
        object.__setattr__(self, "treatment", treatment)
        object.__setattr__(self, "outcome", outcome)

        periods = np.unique(period)
        lo, hi = int(periods[0]), int(periods[-1])
        if hi != 1 or lo > -1 or not np.array_equal(periods, np.arange(lo, 2)):
            raise NonContiguousPeriodsError(
                f"periods must form a contiguous set {{-K,...,0,1}} with K >= 1, "
                f"got {periods.tolist()}"
            )

        pairs = {}
        for u, t in zip(unit.tolist(), period.tolist()):
            key = (u, t)
            if key in pairs:
                raise PanelValidationError(f"duplicate (unit, period) row: {key}")
            pairs[key] = True

        for t in range(lo, 2):
            in_t = period == t
            n_treat = int(np.count_nonzero(in_t & treatment))
            n_ctrl = int(np.count_nonzero(in_t & ~treatment))
            if n_treat < 2 or n_ctrl < 2:
                raise InsufficientDataError(
                    f"period {t} needs >= 2 observations per group, "
                    f"got treatment={n_treat}, control={n_ctrl}"
                )

    @property
    def k(self) -> int:
        """Number of pre-periods strictly before the reference period 0."""
        return -int(self.period.min())

    @property
    def n_rows(self) -> int:
        return self.outcome.shape[0]


@dataclass(frozen=True)
class CellStats:
    """Per-period cell means, within-cell variances and counts.

    Arrays are indexed by period offset: position j corresponds to period
    ``j - K`` for ``j = 0..K+1`` (ascending order -K, ..., 0, 1).
    """

    k: int
    mean_treat: np.ndarray
    mean_ctrl: np.ndarray
    var_treat: np.ndarray
    var_ctrl: np.ndarray
    n_treat: np.ndarray
    n_ctrl: np.ndarray

    def delta_mean(self) -> np.ndarray:
        return self.mean_treat - self.mean_ctrl

    def delta_variance(self) -> np.ndarray:
        """Estimated Var(delta-mean) per period: s2_T/n_T + s2_C/n_C."""
        return self.var_treat / self.n_treat + self.var_ctrl / self.n_ctrl


@dataclass(frozen=True, eq=False)
class EstimateBundle:
    """Estimated coefficients (post first, then pre in -1..-K order) with
    their covariance."""

    beta_post: float
    beta_pre: np.ndarray
    sigma: CovarianceMatrix
    k: int = field(default=-1)

    def __post_init__(self):
        beta_pre = np.asarray(self.beta_pre, dtype=float)
        object.__setattr__(self, "beta_pre", beta_pre)
        k = self.k if self.k >= 0 else beta_pre.shape[0]
        object.__setattr__(self, "k", k)
        if beta_pre.shape != (k,):
            raise ValueError(f"beta_pre must have length k={k}")
        if self.sigma.dim != k + 1:
            raise ValueError(
                f"sigma dimension {self.sigma.dim} does not match k + 1 = {k + 1}"
            )

    @property
    def beta(self) -> np.ndarray:
        """Full coefficient vector (beta_post, beta_-1, ..., beta_-K)."""
        return np.concatenate(([self.beta_post], self.beta_pre))


def cell_statistics(data: PanelData) -> CellStats:
    """Means, variances (ddof=1) and counts per (group, period) cell."""
    k = data.k
    idx = data.period + k  # 0..k+1
    code = idx * 2 + data.treatment.astype(int)
    n_cells = 2 * (k + 2)
    counts = np.bincount(code, minlength=n_cells).astype(float)
    sums = np.bincount(code, weights=data.outcome, minlength=n_cells)
    means = sums / counts
    resid = data.outcome - means[code]
    ss = np.bincount(code, weights=resid * resid, minlength=n_cells)
    variances = ss / (counts - 1.0)
    return CellStats(
        k=k,
        mean_treat=means[1::2],
        mean_ctrl=means[0::2],
        var_treat=variances[1::2],
        var_ctrl=variances[0::2],
        n_treat=counts[1::2],
        n_ctrl=counts[0::2],
    )


def _coefficients_from_cells(cells: CellStats) -> tuple[float, np.ndarray]:
    delta = cells.delta_mean()
    ref = delta[cells.k]  # period 0
    beta_post = float(delta[cells.k + 1] - ref)
    # pre coefficients ordered (-1, -2, ..., -K)
    beta_pre = delta[cells.k - 1 :: -1] - ref
    return beta_post, beta_pre


def _covariance_from_cells(cells: CellStats) -> CovarianceMatrix:
    v = cells.delta_variance()
    v0 = v[cells.k]
    # coefficient order (post, -1, ..., -K)
    v_coef = np.concatenate(([v[cells.k + 1]], v[cells.k - 1 :: -1]))
    sigma = np.full((cells.k + 1, cells.k + 1), v0)
    sigma[np.diag_indices(cells.k + 1)] += v_coef
    return CovarianceMatrix(sigma, allow_singular=True)


def estimate_event_study(data: PanelData) -> EstimateBundle:
    """Estimate the event-study coefficients and their covariance.

    Returns
    -------
    EstimateBundle
        ``beta_post`` and ``beta_pre`` from cell-mean differencing (exactly
        the saturated-regression OLS coefficients), with covariance from
        :func:`estimate_covariance`.
    """
    cells = cell_statistics(data)
    beta_post, beta_pre = _coefficients_from_cells(cells)
    sigma = _covariance_from_cells(cells)
    return EstimateBundle(beta_post=beta_post, beta_pre=beta_pre, sigma=sigma, k=data.k)


def estimate_covariance(data: PanelData) -> CovarianceMatrix:
    """Coefficient covariance under cross-period independence.

    Each period contributes ``v_t = s2_T/n_T + s2_C/n_C``; every coefficient
    shares the reference-period term, so off-diagonal entries all equal
    ``v_0`` and the diagonal is ``v_0 + v_t``.  Panels with serially
    correlated errors are outside this estimator's scope.
    """
    return _covariance_from_cells(cell_statistics(data))


def load_panel(path) -> PanelData:
    """Read and validate a panel CSV.

    Expected header: ``unit,period,treatment,outcome`` with ``treatment`` in
    {0, 1}, integer ``period`` and dot-decimal ``outcome``.

    Raises
    ------
    PanelParseError
        Malformed CSV content; the message carries the 1-based line number.
    PanelValidationError
        Structural violations (duplicates, missing periods, thin cells).
    """
    units: list[str] = []
    periods: list[int] = []
    treatments: list[bool] = []
    outcomes: list[float] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelParseError("empty file", line=1) from None
        if tuple(h.strip() for h in header) != PANEL_HEADER:
            raise PanelParseError(
                f"expected header {','.join(PANEL_HEADER)!r}, got {','.join(header)!r}",
                line=1,
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise PanelParseError(f"expected 4 fields, got {len(row)}", line=lineno)
            unit, period_s, treat_s, outcome_s = (f.strip() for f in row)
            try:
                period = int(period_s)
            except ValueError:
                raise PanelParseError(f"period {period_s!r} is not an integer", line=lineno) from None
            if treat_s not in ("0", "1"):
                raise PanelParseError(f"treatment {treat_s!r} must be 0 or 1", line=lineno)
            try:
                outcome = float(outcome_s)
            except ValueError:
                raise PanelParseError(f"outcome {outcome_s!r} is not a number", line=lineno) from None
            units.append(unit)
            periods.append(period)
            treatments.append(treat_s == "1")
            outcomes.append(outcome)
    if not units:
        raise InsufficientDataError("panel contains no observations")
    return PanelData(
        unit=np.array(units, dtype=object),
        period=np.array(periods, dtype=int),
        treatment=np.array(treatments, dtype=bool),
        outcome=np.array(outcomes, dtype=float),
    )


def write_panel(path, data: PanelData) -> None:
    """Write a panel back to CSV in the canonical column order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PANEL_HEADER)
        for u, t, d, y in zip(data.unit, data.period, data.treatment, data.outcome):
            writer.writerow([u, int(t), int(d), repr(float(y))])
