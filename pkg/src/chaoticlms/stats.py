"""Statistics of the ergodic logistic map ``f4(x) = 4x(1-x)``.

Closed forms are exact :class:`fractions.Fraction` values.  The quadrature
routines integrate against the arcsine density after substituting
``x = sin(theta)**2``, which turns the singular weight
``dx / (pi * sqrt(x(1-x)))`` into the flat measure ``(2/pi) d(theta)`` on
``[0, pi/2]``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

KUMMER_MAX_TERMS = 10_000

# Gauss-Legendre rule used on every panel
_GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)
_CHUNK_PANELS = 1 << 14


class ConvergenceError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# Invariant density
# --------------------------------------------------------------------------

def invariant_density(x: float) -> float:
    if not (0.0 < x < 1.0):
        raise ValueError("density is singular outside the open interval (0, 1)")
    return 1.0 / (math.pi * math.sqrt(x * (1.0 - x)))


def invariant_cdf(x: float) -> float:
    if not (0.0 <= x <= 1.0):
        raise ValueError("cdf argument must lie in [0, 1]")
    return 2.0 / math.pi * math.asin(math.sqrt(x))


# --------------------------------------------------------------------------
# Exact moments
# --------------------------------------------------------------------------

def theoretical_moment(nu: int) -> Fraction:
    """``E[x**nu]`` under the invariant density: ``(2nu-1)!! / (2**nu nu!)``."""
    if nu < 0:
        raise ValueError("nu must be >= 0")
    odd = math.prod(range(1, 2 * nu, 2))
    return Fraction(odd, 2 ** nu * math.factorial(nu))


def centered_moment(nu: int) -> Fraction:
    """``E[(x - 1/2)**nu]`` by binomial expansion of the raw moments."""
    if nu < 0:
        raise ValueError("nu must be >= 0")
    half = Fraction(-1, 2)
    return sum((math.comb(nu, k) * half ** (nu - k) * theoretical_moment(k)
                for k in range(nu + 1)), Fraction(0))


def pochhammer(a, r: int):
    """Rising factorial ``a (a+1) ... (a+r-1)``; exact for Fraction/int input."""
    out = a ** 0 if not isinstance(a, float) else 1.0
    for j in range(r):
        out *= a + j
    return out


def kummer_moment(nu: int) -> Fraction:
    """Moment read off the Kummer-series derivative chain, ``(1/2)_nu / (1)_nu``."""
    return pochhammer(Fraction(1, 2), nu) / pochhammer(Fraction(1), nu)


@dataclass(frozen=True)
class MomentTable:
    max_order: int
    raw: tuple[Fraction, ...]
    centered: tuple[Fraction, ...]


def moment_table(max_order: int) -> MomentTable:
    return MomentTable(
        max_order,
        tuple(theoretical_moment(k) for k in range(max_order + 1)),
        tuple(centered_moment(k) for k in range(max_order + 1)),
    )


def kummer_series(a: float, b: float, xi: float, tol: float = 1e-15) -> float:
    """Confluent hypergeometric series ``sum (a)_r / ((b)_r r!) xi**r``.

    Summation stops once the next term is smaller than ``tol`` in magnitude.
    """
    if b <= 0 and float(b).is_integer():
        raise ValueError("b must not be a nonpositive integer")
    if tol <= 0:
        raise ValueError("tol must be positive")
    term = 1.0
    total = 0.0
    for r in range(KUMMER_MAX_TERMS):
        total += term
        term *= (a + r) / ((b + r) * (r + 1)) * xi
        if abs(term) < tol:
            return total
    raise ConvergenceError(f"Kummer series did not reach tol={tol} in "
                           f"{KUMMER_MAX_TERMS} terms")


# --------------------------------------------------------------------------
# Quadrature over the arcsine measure
# --------------------------------------------------------------------------

def _panel_sum(func: Callable[[np.ndarray], np.ndarray], panels: int) -> float:
    """Composite Gauss-Legendre of ``func`` over [0, pi/2] with ``panels`` panels.

    Panels are processed in fixed-size chunks; chunk partials are combined
    with ``math.fsum`` so the result does not depend on the chunking.
    """
    h = (math.pi / 2) / panels
    half = 0.5 * h
    offs = half * (_GL_NODES + 1.0)
    partials = []
    for start in range(0, panels, _CHUNK_PANELS):
        stop = min(start + _CHUNK_PANELS, panels)
        left = np.arange(start, stop)[:, None] * h
        theta = left + offs[None, :]
        partials.append(float(np.sum(func(theta) @ _GL_WEIGHTS)) * half)
    return math.fsum(partials)


def theta_quadrature(func: Callable[[np.ndarray], np.ndarray], *,
                     tol: float, start_panels: int = 4,
                     max_panels: int = 1 << 22) -> float:
    """``(2/pi) * integral_0^{pi/2} func(theta) d(theta)`` with panel doubling.

    Refinement stops once two successive estimates differ by less than ``tol``.
    """
    panels = start_panels
    prev = _panel_sum(func, panels) * 2 / math.pi
    while panels < max_panels:
        panels *= 2
        cur = _panel_sum(func, panels) * 2 / math.pi
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise ConvergenceError(f"quadrature not converged at {max_panels} panels")


def quadrature_moment(nu: int) -> float:
    """Numerical ``E[x**nu]``, i.e. ``(2/pi) * integral sin(t)**(2 nu) dt``."""
    if nu < 0:
        raise ValueError("nu must be >= 0")
    return theta_quadrature(lambda t: np.sin(t) ** (2 * nu), tol=1e-13)


def iterate_f4(x: np.ndarray, m: int) -> np.ndarray:
    for _ in range(m):
        x = 4.0 * x * (1.0 - x)
    return x


def quadrature_autocorr(m: int, tol: float = 1e-8) -> float:
    """Numerical ``E[x * f4^m(x)]`` with ``f4^m`` applied by repeated evaluation."""
    if not (0 <= m <= 20):
        raise ValueError("lag must satisfy 0 <= m <= 20")

    def integrand(t):
        x = np.sin(t) ** 2
        return x * iterate_f4(x, m)

    # f4^m(sin^2 t) oscillates 2^m times over the range; starting coarser
    # than that risks two aliased estimates agreeing by accident
    start = max(4, 1 << max(m - 1, 0))
    return theta_quadrature(integrand, tol=tol, start_panels=start)


def theoretical_autocorr(m: int, centered: bool = False) -> Fraction:
    if m < 0:
        raise ValueError("lag must be >= 0")
    spike = Fraction(1, 8) if m == 0 else Fraction(0)
    return spike if centered else Fraction(1, 4) + spike


# --------------------------------------------------------------------------
# Empirical estimators
# --------------------------------------------------------------------------

def empirical_moments(samples: Sequence[float], max_nu: int) -> list[float]:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample sequence")
    out = [1.0]
    p = np.ones_like(x)
    for _ in range(max_nu):
        p = p * x
        out.append(float(np.mean(p)))
    return out


@dataclass(frozen=True)
class AutocorrEstimate:
    max_lag: int
    values: np.ndarray
    sample_count: int


def empirical_autocorr(samples: Sequence[float], max_lag: int) -> AutocorrEstimate:
    """``C(m) = mean(x[i] * x[i+m])``, no mean removal."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if max_lag < 0 or n <= max_lag:
        raise ValueError(f"need more than {max_lag} samples, got {n}")
    vals = np.array([np.dot(x[: n - k], x[k:]) / (n - k) for k in range(max_lag + 1)])
    return AutocorrEstimate(max_lag, vals, n)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int
    expected: np.ndarray | None = None

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def expected_bin_probability(lo: float, hi: float) -> float:
    """Invariant-density mass of ``[lo, hi]`` (clipped to [0, 1])."""
    lo, hi = max(lo, 0.0), min(hi, 1.0)
    if hi <= lo:
        return 0.0
    return invariant_cdf(hi) - invariant_cdf(lo)


def histogram(samples: Sequence[float], bins: int,
              range: tuple[float, float] = (0.0, 1.0),
              compare_invariant: bool = True) -> Histogram:
    """Equal-width bin counts; out-of-range samples are tallied separately."""
    lo, hi = range
    if bins < 1 or not lo < hi:
        raise ValueError("need bins >= 1 and lo < hi")
    x = np.asarray(samples, dtype=float)
    under = int(np.count_nonzero(x < lo))
    over = int(np.count_nonzero(x > hi))
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    expected = None
    if compare_invariant:
        expected = np.array([expected_bin_probability(a, b)
                             for a, b in zip(edges[:-1], edges[1:])])
    return Histogram(edges, counts, under, over, expected)


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------

def _g(v) -> str:
    return format(float(v), ".17g")


def write_comparison_csv(path: str | Path, theoretical: Sequence,
                         empirical: Sequence[float]) -> None:
    """CSV ``order_or_lag,theoretical,empirical,abs_error``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["order_or_lag", "theoretical", "empirical", "abs_error"])
        for k, (t, e) in enumerate(zip(theoretical, empirical)):
            w.writerow([k, _g(t), _g(e), _g(abs(float(t) - float(e)))])


def write_histogram_csv(path: str | Path, hist: Histogram) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "count", "expected_probability"])
        exp = hist.expected if hist.expected is not None else [float("nan")] * hist.counts.size
        for a, b, c, p in zip(hist.edges[:-1], hist.edges[1:], hist.counts, exp):
            w.writerow([_g(a), _g(b), int(c), _g(p)])
