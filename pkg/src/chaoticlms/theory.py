"""Closed-form LMS analysis for logistic-map drive signals.

``m`` is the filter order throughout: a filter of order ``m`` has ``m + 1``
taps, and all matrices here are ``(m+1) x (m+1)``.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.linalg

from .stats import centered_moment, theoretical_autocorr


@dataclass(frozen=True)
class CorrelationMatrix:
    order: int
    entries: np.ndarray
    centered: bool = False

    @property
    def size(self) -> int:
        return self.order + 1


@dataclass(frozen=True)
class SpectrumSummary:
    eigenvalues: tuple[Fraction, ...]  # descending
    lambda_max: Fraction
    lambda_min: Fraction
    sigma: Fraction


def _check_order(m: int) -> None:
    if m < 0:
        raise ValueError("filter order m must be >= 0")


def build_correlation_matrix(m: int, centered: bool = False) -> CorrelationMatrix:
    """``E[x x^T]`` for windows of ``m + 1`` consecutive f4 samples.

    Toeplitz in the lag-autocorrelation: raw drive gives 3/8 on the diagonal
    and 1/4 elsewhere, the centered drive gives ``I / 8``.
    """
    _check_order(m)
    lags = [float(theoretical_autocorr(k, centered)) for k in range(m + 1)]
    return CorrelationMatrix(m, scipy.linalg.toeplitz(lags), centered)


def analytic_spectrum(m: int, centered: bool = False) -> SpectrumSummary:
    _check_order(m)
    eighth = Fraction(1, 8)
    if centered:
        eig = (eighth,) * (m + 1)
    else:
        # 3/8 + m/4 on the all-ones vector, 3/8 - 1/4 on its complement
        eig = (Fraction(2 * m + 3, 8),) + (eighth,) * m
    return SpectrumSummary(eig, eig[0], eig[-1], eig[0] / eig[-1])


def mu_bound_mean(m: int, centered: bool = False) -> float:
    """Mean-convergence limit ``2 / lambda_max``."""
    return float(2 / analytic_spectrum(m, centered).lambda_max)


def mu_bound_fluctuation(m: int) -> float:
    """Step size ``16 / (3 + 2m)`` minimizing the fluctuation decay factor.

    Derived for the zero-mean drive only.
    """
    _check_order(m)
    return 16.0 / (3 + 2 * m)


def fourth_moment_coefficient(m: int) -> Fraction:
    """Diagonal value ``3/128 + m/64`` of ``E[(x^T x) x x^T]``, centered drive."""
    _check_order(m)
    return centered_moment(4) + m * centered_moment(2) ** 2


def fluctuation_decay_factor(mu: float, m: int) -> float:
    """``|1 - mu/4 + (3/128 + m/64) mu**2|``; below 1 iff ``0 < mu < 32/(3+2m)``."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    c = float(fourth_moment_coefficient(m))
    return abs(1.0 - mu / 4.0 + c * mu * mu)


def fourth_moment_matrix(m: int) -> CorrelationMatrix:
    c = float(fourth_moment_coefficient(m))
    return CorrelationMatrix(m, c * np.eye(m + 1), centered=True)


def wiener_solution(b, R: CorrelationMatrix | np.ndarray, rho) -> np.ndarray:
    """Optimal taps ``b + R^{-1} rho``."""
    mat = R.entries if isinstance(R, CorrelationMatrix) else np.asarray(R, dtype=float)
    b = np.asarray(b, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if mat.shape != (b.size, b.size) or rho.shape != b.shape:
        raise ValueError("dimension mismatch between b, R and rho")
    try:
        with warnings.catch_warnings():
            # a zero pivot is reported below as an error
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(mat, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise np.linalg.LinAlgError(str(exc)) from exc
    if np.any(np.diag(lu[0]) == 0.0):
        raise np.linalg.LinAlgError("correlation matrix is singular")
    return b + scipy.linalg.lu_solve(lu, rho)


def bounds_row(m: int, centered: bool) -> dict:
    spec = analytic_spectrum(m, centered)
    mu_f = mu_bound_fluctuation(m)
    return {
        "m": m,
        "centered": int(centered),
        "lambda_max": float(spec.lambda_max),
        "lambda_min": float(spec.lambda_min),
        "sigma": float(spec.sigma),
        "mu_mean_bound": mu_bound_mean(m, centered),
        "mu_fluct_bound": mu_f,
        "decay_at_mu_max": fluctuation_decay_factor(mu_f, m),
    }


SPECTRUM_FIELDS = ["m", "centered", "lambda_max", "lambda_min", "sigma",
                   "mu_mean_bound", "mu_fluct_bound"]


def write_spectrum_csv(path: str | Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SPECTRUM_FIELDS)
        for row in rows:
            w.writerow([row[k] if isinstance(row[k], int) else format(row[k], ".17g")
                        for k in SPECTRUM_FIELDS])
