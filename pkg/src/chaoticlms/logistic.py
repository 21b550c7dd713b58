"""Logistic-map orbit generation.

Orbits of ``x -> lam * x * (1 - x)`` under constant, switched or
signal-modulated bifurcation-parameter schedules, zero-mean centering and
bifurcation-diagram scans.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_X0 = 0.123456789
DEFAULT_BURN_IN = 1000
MEAN = 0.5  # mean of the invariant density at lam = 4

# stagnation detection for measure-zero initial conditions
_STALL_EPS = 1e-15
_STALL_RUN = 100


class DegenerateOrbitWarning(UserWarning):
    """The orbit collapsed onto a fixed point of the map."""


def _check_lambda(lam: float) -> None:
    if not (0.0 < lam <= 4.0):
        raise ValueError(f"lambda must lie in (0, 4], got {lam!r}")


def iterate_map(lam: float, x: float) -> float:
    """One application of the logistic map, ``lam * x * (1 - x)``."""
    _check_lambda(lam)
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    return lam * x * (1.0 - x)


@dataclass(frozen=True)
class LogisticParams:
    x0: float = DEFAULT_X0
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        if not (0.0 < self.x0 < 1.0):
            raise ValueError(f"x0 must lie in (0, 1), got {self.x0!r}")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")


# --------------------------------------------------------------------------
# Schedules
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    lam: float = 4.0

    def __post_init__(self):
        _check_lambda(self.lam)

    def lambdas(self, n: int) -> np.ndarray:
        return np.full(n, float(self.lam))

    def to_dict(self) -> dict:
        return {"kind": "constant", "lambda": self.lam}


@dataclass(frozen=True)
class Switched:
    """Piecewise-constant schedule; ``segments`` holds ``(start_index, lam)``.

    Each lambda takes effect exactly at its start index.
    """

    segments: tuple[tuple[int, float], ...]

    def __post_init__(self):
        segs = tuple((int(s), float(lam)) for s, lam in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs or segs[0][0] != 0:
            raise ValueError("first segment must start at index 0")
        starts = [s for s, _ in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment start indices must be strictly increasing")
        for _, lam in segs:
            _check_lambda(lam)

    def lambdas(self, n: int) -> np.ndarray:
        out = np.empty(n)
        for k, (start, lam) in enumerate(self.segments):
            stop = self.segments[k + 1][0] if k + 1 < len(self.segments) else n
            out[min(start, n):min(stop, n)] = lam
        return out

    def to_dict(self) -> dict:
        return {"kind": "switched", "segments": [list(s) for s in self.segments]}


@dataclass(frozen=True)
class Modulated:
    """``lam_i = base + gain * signal[i]`` with ``|signal| <= 1``."""

    base: float
    gain: float
    signal: np.ndarray = field(repr=False)

    def __post_init__(self):
        sig = np.asarray(self.signal, dtype=float)
        object.__setattr__(self, "signal", sig)
        if sig.ndim != 1 or sig.size == 0:
            raise ValueError("modulation signal must be a non-empty 1-D sequence")
        if np.max(np.abs(sig)) > 1.0:
            raise ValueError("modulation signal must satisfy |s| <= 1")
        if self.base + abs(self.gain) > 4.0 or self.base - abs(self.gain) <= 0.0:
            raise ValueError("base +/- gain must stay inside (0, 4]")

    def lambdas(self, n: int) -> np.ndarray:
        if n > self.signal.size:
            raise ValueError(
                f"modulation signal has {self.signal.size} samples, {n} needed")
        return self.base + self.gain * self.signal[:n]

    def to_dict(self) -> dict:
        return {"kind": "modulated", "base": self.base, "gain": self.gain,
                "signal_length": int(self.signal.size)}


LambdaSchedule = Constant | Switched | Modulated


# --------------------------------------------------------------------------
# Orbits
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Orbit:
    """Finite orbit plus the parameter that maps sample ``i`` to sample ``i+1``.

    The uncentered values are always stored; a centered orbit only exposes
    them shifted by -1/2, so un-centering restores them bit for bit.
    """

    raw: np.ndarray
    lambdas: np.ndarray
    schedule: LambdaSchedule
    centered: bool = False
    burn_in: int = 0
    x0: float | None = None

    def __len__(self) -> int:
        return self.raw.size

    @property
    def samples(self) -> np.ndarray:
        return self.raw - MEAN if self.centered else self.raw

    def recurrence_residual(self) -> float:
        """Largest violation of the map recurrence along the stored orbit."""
        u = self.raw
        if u.size < 2:
            return 0.0
        pred = self.lambdas[:-1] * u[:-1] * (1.0 - u[:-1])
        return float(np.max(np.abs(u[1:] - pred)))


def generate_orbit(params: LogisticParams, n: int,
                   schedule: LambdaSchedule | None = None) -> Orbit:
    """Iterate the map, discard ``params.burn_in`` iterates, keep ``n``.

    Burn-in iterations use the schedule's first lambda.  Emits
    :class:`DegenerateOrbitWarning` when the orbit stalls on a fixed point
    while lambda = 4.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    schedule = Constant(4.0) if schedule is None else schedule
    lams = schedule.lambdas(n)
    lam_list = lams.tolist()

    x = params.x0
    lam0 = lam_list[0]
    stall = 0
    steps = 0
    for _ in range(params.burn_in):
        nxt = lam0 * x * (1.0 - x)
        if lam0 == 4.0 and abs(nxt - x) < _STALL_EPS:
            stall += 1
        else:
            stall = 0
        x = nxt
        steps += 1

    out = [0.0] * n
    for i in range(n):
        out[i] = x
        lam = lam_list[i]
        nxt = lam * x * (1.0 - x)
        if lam == 4.0 and abs(nxt - x) < _STALL_EPS:
            stall += 1
        else:
            stall = 0
        x = nxt
        steps += 1

    # short orbits cannot show 100 stalled steps; any full stall counts then
    if stall >= min(_STALL_RUN, steps):
        warnings.warn(
            f"orbit from x0={params.x0!r} collapsed onto a fixed point "
            "(measure-zero initial condition)",
            DegenerateOrbitWarning, stacklevel=2)

    return Orbit(np.asarray(out), lams, schedule, centered=False,
                 burn_in=params.burn_in, x0=params.x0)


def center(orbit: Orbit) -> Orbit:
    """Shift an orbit to zero mean by subtracting 1/2."""
    if orbit.centered:
        raise ValueError("orbit is already centered")
    return replace(orbit, centered=True)


def uncenter(orbit: Orbit) -> Orbit:
    if not orbit.centered:
        raise ValueError("orbit is not centered")
    return replace(orbit, centered=False)


def bifurcation_scan(lambda_min: float, lambda_max: float, lambda_steps: int,
                     settle: int = 1000, keep: int = 100,
                     x0: float = DEFAULT_X0) -> tuple[np.ndarray, np.ndarray]:
    """Points ``(lam, x)`` of the bifurcation diagram.

    Every lambda on the grid starts from the same ``x0``, iterates ``settle``
    times and then records ``keep`` successive iterates.  All grid values are
    iterated together as one vector.
    """
    if not (0.0 < lambda_min < lambda_max <= 4.0):
        raise ValueError("need 0 < lambda_min < lambda_max <= 4")
    if lambda_steps < 1 or settle < 1 or keep < 1:
        raise ValueError("lambda_steps, settle and keep must be >= 1")
    if lambda_steps == 1:
        grid = np.array([lambda_max])
    else:
        grid = np.linspace(lambda_min, lambda_max, lambda_steps)
    x = np.full(grid.size, float(x0))
    for _ in range(settle):
        x = grid * x * (1.0 - x)
    pts = np.empty((keep, grid.size))
    for k in range(keep):
        x = grid * x * (1.0 - x)
        pts[k] = x
    lam = np.broadcast_to(grid, pts.shape)
    return lam.T.ravel().copy(), pts.T.ravel()


def write_orbit_csv(orbit: Orbit, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "lambda", "sample"])
        for i, (lam, s) in enumerate(zip(orbit.lambdas.tolist(),
                                         orbit.samples.tolist())):
            w.writerow([i, format(lam, ".17g"), format(s, ".17g")])


def lambdas_from_dict(spec: dict, signal: Sequence[float] | None = None) -> LambdaSchedule:
    """Build a schedule from its config-table form."""
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return Constant(float(spec.get("lambda", 4.0)))
    if kind == "switched":
        return Switched(tuple(tuple(s) for s in spec["segments"]))
    if kind == "modulated":
        if signal is None:
            raise ValueError("modulated schedule needs a signal")
        return Modulated(float(spec["base"]), float(spec["gain"]), np.asarray(signal))
    raise ValueError(f"unknown schedule kind {kind!r}")
