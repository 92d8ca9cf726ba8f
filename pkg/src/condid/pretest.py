"""Pre-trends acceptance: the no-individually-significant-coefficient rule
and its polyhedral representation in (post, pre) coefficient space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .event_study import EstimateBundle
from .gaussian import CovarianceMatrix

__all__ = [
    "PolyhedralConstraint",
    "build_ns_polyhedron",
    "passes_pretest",
    "critical_value",
]


@dataclass(frozen=True, eq=False)
class PolyhedralConstraint:
    """A conditioning event {beta : A beta <= b}.

    Columns of ``a_matrix`` follow the (post, -1, ..., -K) coefficient order.
    """

    a_matrix: np.ndarray
    b_vector: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a_matrix, dtype=float))
        b = np.asarray(self.b_vector, dtype=float).ravel()
        if a.shape[0] != b.shape[0]:
            raise ValueError(
                f"constraint rows ({a.shape[0]}) and offsets ({b.shape[0]}) disagree"
            )
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "b_vector", b)

    @property
    def dim(self) -> int:
        return self.a_matrix.shape[1]

    def holds_at(self, beta: np.ndarray, rtol: float = 1e-12) -> bool:
        """Weak elementwise check of A beta <= b (tiny slack for float noise)."""
        slack = rtol * max(1.0, float(np.abs(self.b_vector).max(initial=0.0)))
        return bool(np.all(self.a_matrix @ beta <= self.b_vector + slack))


def critical_value(alpha: float) -> float:
    """Two-sided standard-normal critical value (1.959964... at alpha=0.05)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie strictly inside (0, 1)")
    return float(ndtri(1.0 - alpha / 2.0))


def build_ns_polyhedron(sigma: CovarianceMatrix, alpha: float = 0.05) -> PolyhedralConstraint:
    """The no-significant-pre-coefficient event as a polyhedron.

    2K rows: for each pre coefficient j, ``+beta_pre_j <= c * sd_j`` followed
    by the block of ``-beta_pre_j <= c * sd_j``, where ``sd_j`` is the
    coefficient's own standard error and ``c`` the two-sided critical value.
    The post coordinate gets zero weight in every row.
    """
    c = critical_value(alpha)
    k = sigma.k
    pre_sd = np.sqrt(np.diag(sigma.entries)[1:])
    eye = np.eye(k)
    zeros = np.zeros((k, 1))
    a = np.block([[zeros, eye], [zeros, -eye]])
    b = np.concatenate([c * pre_sd, c * pre_sd])
    return PolyhedralConstraint(a_matrix=a, b_vector=b)


def passes_pretest(bundle: EstimateBundle, alpha: float = 0.05) -> bool:
    """True when every pre coefficient is individually insignificant.

    Uses weak inequalities, so a coefficient sitting exactly on the critical
    boundary passes.
    """
    c = critical_value(alpha)
    pre_sd = np.sqrt(np.diag(bundle.sigma.entries)[1:])
    return bool(np.all(np.abs(bundle.beta_pre) <= c * pre_sd))
