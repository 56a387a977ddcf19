"""Numeric rank and condition numbers of a Jacobian from its singular values.

The numeric rank counts singular values above ``k * eps * sigma_1`` where
``eps`` is the double-precision unit roundoff gap and ``k`` the number of
columns. Singular values are always sorted in descending order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class JacobianReport:
    k: int
    r: int
    sigma: np.ndarray
    kappa: float
    kappa_r: float
    tolerance: float

    @property
    def redundant(self) -> int:
        return self.k - self.r


def _jacobi_svd(A: np.ndarray) -> np.ndarray:
    """Singular values by LAPACK's preconditioned one-sided Jacobi (``dgejsv``).

    Requires rows >= columns. Falls back to ``gesdd`` if the driver reports
    failure.
    """
    # joba=0 ('C'): high relative accuracy and no licence to zero out small values;
    # jobr=0 ('N'): no range restriction;
    # jobp=0 ('N'): no perturbation, so exact zeros stay zero
    sva, _, _, work, _, info = lapack.dgejsv(A, joba=0, jobu=3, jobv=3, jobr=0, jobt=0, jobp=0)
    if info != 0:
        return np.linalg.svd(A, compute_uv=False)
    return np.sort(sva * (work[0] / work[1]))[::-1]


def singular_values(J, method: str = "jacobi") -> np.ndarray:
    """All ``k`` singular values of an ``n x k`` matrix, descending.

    When ``n < k`` the missing values are exact zeros. ``method`` is
    ``"jacobi"`` (high relative accuracy for tiny values) or ``"gesdd"``.
    """
    J = np.asarray(J, dtype=float)
    if J.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {J.shape}")
    if not np.all(np.isfinite(J)):
        raise ValueError("Jacobian contains non-finite entries")
    n, k = J.shape
    if k == 0:
        return np.empty(0)
    if n == 0 or not np.any(J):
        return np.zeros(k)
    A = J if n >= k else J.T
    if method == "jacobi":
        sigma = _jacobi_svd(np.asfortranarray(A))
    elif method == "gesdd":
        sigma = np.linalg.svd(A, compute_uv=False)
    else:
        raise ValueError(f"unknown method {method!r}")
    sigma = np.maximum(sigma, 0.0)
    if len(sigma) < k:
        sigma = np.concatenate([sigma, np.zeros(k - len(sigma))])
    return sigma


def numeric_rank(sigma, k: int | None = None) -> int:
    sigma = np.asarray(sigma, dtype=float)
    k = len(sigma) if k is None else k
    if len(sigma) == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > k * EPS * sigma[0]))


def condition_numbers(sigma, r: int) -> tuple[float, float]:
    """``(sigma_1 / sigma_k, sigma_1 / sigma_r)``; a zero denominator gives ``inf``."""
    sigma = np.asarray(sigma, dtype=float)
    if len(sigma) == 0 or r == 0:
        return math.inf, math.inf
    s1 = sigma[0]
    with np.errstate(over="ignore"):
        kappa = math.inf if sigma[-1] == 0.0 else float(s1 / sigma[-1])
        kappa_r = float(s1 / sigma[r - 1])
    if r == len(sigma):
        kappa = kappa_r
    return kappa, kappa_r


def analyze(J, method: str = "jacobi") -> JacobianReport:
    sigma = singular_values(J, method)
    k = len(sigma)
    r = numeric_rank(sigma, k)
    kappa, kappa_r = condition_numbers(sigma, r)
    tol = k * EPS * sigma[0] if k else 0.0
    return JacobianReport(k=k, r=r, sigma=sigma, kappa=kappa, kappa_r=kappa_r, tolerance=float(tol))
