"""Time-domain LMS channel estimation.

A drive sequence passes through an IIR reference channel.  An FIR adaptive
filter of order ``m`` is adapted by LMS against the channel output, and the
model misadjustment ``||a_i - b||**2`` is recorded per step, where ``b`` is
the channel impulse response truncated to ``m + 1`` taps.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import scipy.signal

from .logistic import LambdaSchedule, LogisticParams, Constant, generate_orbit, MEAN
from .rng import derive_seed, gaussian_source, initial_condition
from .theory import mu_bound_fluctuation

DIVERGENCE_NORM = 1e12
SAMPLE_RATE = 8000


class DivergenceError(ArithmeticError):
    """Tap-weight norm left the range of any converging run."""

    def __init__(self, state: "LmsState", message: str):
        super().__init__(message)
        self.state = state


# --------------------------------------------------------------------------
# Channel
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IirChannel:
    """``H(z) = (sum ff[k] z^-k) / (1 + sum fb[k] z^-(k+1))``."""

    feedback: tuple[float, ...] = ()
    feedforward: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "feedback", tuple(float(c) for c in self.feedback))
        object.__setattr__(self, "feedforward", tuple(float(c) for c in self.feedforward))
        if not self.feedforward:
            raise ValueError("feedforward coefficients must not be empty")
        poles = self.poles()
        if poles.size and np.max(np.abs(poles)) >= 1.0:
            raise ValueError(f"unstable channel: pole magnitudes {np.abs(poles)}")

    @property
    def denominator(self) -> np.ndarray:
        return np.r_[1.0, self.feedback]

    @property
    def numerator(self) -> np.ndarray:
        return np.asarray(self.feedforward)

    def poles(self) -> np.ndarray:
        if not self.feedback:
            return np.empty(0)
        return np.roots(self.denominator)


# 1 / (1 - 0.2 z^-1 + 0.49 z^-2 + 0.292 z^-3)
REFERENCE_CHANNEL = IirChannel(feedback=(-0.2, 0.49, 0.292))


def impulse_response(channel: IirChannel, length: int) -> np.ndarray:
    """First ``length`` samples of the impulse response, by direct recursion."""
    if length < 1:
        raise ValueError("length must be >= 1")
    ff = channel.feedforward
    fb = channel.feedback
    h = [0.0] * length
    for n in range(length):
        acc = ff[n] if n < len(ff) else 0.0
        for k, a in enumerate(fb, start=1):
            if n - k >= 0:
                acc -= a * h[n - k]
        h[n] = acc
    return np.asarray(h)


def channel_output(channel: IirChannel, x: Sequence[float], noise_std: float = 0.0,
                   seed: int = 0) -> np.ndarray:
    """Full IIR response to ``x`` (from rest) plus white Gaussian noise."""
    y = scipy.signal.lfilter(channel.numerator, channel.denominator,
                             np.asarray(x, dtype=float))
    if noise_std > 0:
        y = y + gaussian_source(seed, y.size, noise_std)
    return y


# --------------------------------------------------------------------------
# LMS
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LmsState:
    taps: np.ndarray
    mu: float
    window: np.ndarray  # most recent sample first
    step: int = 0

    def __post_init__(self):
        if self.taps.shape != self.window.shape:
            raise ValueError("taps and window must have equal length")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")

    @classmethod
    def zeros(cls, m: int, mu: float) -> "LmsState":
        return cls(np.zeros(m + 1), mu, np.zeros(m + 1))


def lms_step(state: LmsState, x_new: float, r: float,
             mu: float | None = None) -> tuple[LmsState, float]:
    """Shift ``x_new`` into the window and apply ``a += mu * e * x``.

    ``mu`` overrides the state's step size for this step only.
    Raises :class:`DivergenceError` once ``||a||`` exceeds 1e12.
    """
    window = np.empty_like(state.window)
    window[0] = x_new
    window[1:] = state.window[:-1]
    e = r - float(state.taps @ window)
    step_mu = state.mu if mu is None else mu
    taps = state.taps + (step_mu * e) * window
    new = LmsState(taps, state.mu, window, state.step + 1)
    norm = float(np.linalg.norm(taps))
    if not norm <= DIVERGENCE_NORM:
        raise DivergenceError(new, f"tap norm {norm:.3g} exceeds {DIVERGENCE_NORM:g} "
                                   f"at step {new.step}")
    return new, e


# --------------------------------------------------------------------------
# Drive sources
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ChaoticDrive:
    """Logistic-map samples, optionally centered by subtracting 1/2.

    Without explicit ``params`` the initial condition is drawn from the run
    seed and the default burn-in is used.
    """

    schedule: LambdaSchedule = field(default_factory=lambda: Constant(4.0))
    centered: bool = True
    params: LogisticParams | None = None
    burn_in: int = 1000

    @property
    def kind(self) -> str:
        return "chaotic_centered" if self.centered else "chaotic"

    def samples(self, n: int, seed: int) -> np.ndarray:
        params = self.params or LogisticParams(initial_condition(seed), self.burn_in)
        x = generate_orbit(params, n, self.schedule).samples
        return x - MEAN if self.centered else x


@dataclass(frozen=True)
class GaussianDrive:
    std: float = math.sqrt(1 / 8)  # power of the centered f4 drive
    seed: int | None = None

    kind = "gaussian"

    def samples(self, n: int, seed: int) -> np.ndarray:
        return gaussian_source(seed if self.seed is None else self.seed, n, self.std)


@dataclass(frozen=True)
class ExternalDrive:
    signal: np.ndarray = field(repr=False)
    source: str = "external"

    kind = "external"

    def __post_init__(self):
        sig = np.asarray(self.signal, dtype=float)
        object.__setattr__(self, "signal", sig)
        if sig.size == 0 or np.max(np.abs(sig)) > 1.0:
            raise ValueError("external drive must be non-empty with |s| <= 1")

    def samples(self, n: int, seed: int) -> np.ndarray:
        if n > self.signal.size:
            raise ValueError(f"external signal has {self.signal.size} samples, {n} needed")
        return self.signal[:n].copy()


DriveSource = Union[ChaoticDrive, GaussianDrive, ExternalDrive]


def synthetic_speech(n: int = SAMPLE_RATE, rate: int = SAMPLE_RATE) -> np.ndarray:
    """Speech stand-in: three incommensurate tones under a syllable envelope.

    Normalized so that ``max |s| == 1`` exactly.
    """
    t = np.arange(n) / rate
    tones = (np.sin(2 * np.pi * 170.0 * t)
             + 0.6 * np.sin(2 * np.pi * 170.0 * math.sqrt(2) * t + 0.7)
             + 0.35 * np.sin(2 * np.pi * 170.0 * math.pi * t + 1.9))
    envelope = 0.15 + np.sin(np.pi * 3.1 * t) ** 2 * (0.6 + 0.4 * np.cos(2 * np.pi * 0.7 * t))
    s = tones * envelope
    return s / np.max(np.abs(s))


def load_external_signal(path: str | Path, expected_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Read one sample per line and rescale to ``max |s| = 1``.

    Lines starting with ``#`` are comments; ``# rate: N`` declares the
    sample rate, which must then match ``expected_rate``.
    """
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                key, _, val = text[1:].partition(":")
                if key.strip().lower() == "rate" and int(val) != expected_rate:
                    raise ValueError(f"{path}: rate {int(val)} != expected {expected_rate}")
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: cannot parse {text!r}") from None
    if not values:
        raise ValueError(f"{path}: no samples")
    s = np.asarray(values)
    if not np.all(np.isfinite(s)):
        raise ValueError(f"{path}: non-finite sample")
    peak = np.max(np.abs(s))
    if peak == 0:
        raise ValueError(f"{path}: all samples are zero, cannot normalize")
    return s / peak


# --------------------------------------------------------------------------
# Estimation runs
# --------------------------------------------------------------------------

@dataclass
class MmaTrace:
    """``mma[i] = ||a_i - b||**2`` for ``i = 0..steps``; ``mma[0] = ||b||**2``."""

    mma: np.ndarray
    config: dict
    diverged: bool = False

    @property
    def mma_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.mma / self.mma[0])

    def at(self, step: int) -> float:
        return float(self.mma[step]) if step < self.mma.size else math.inf


def resolve_mu(mu: float | str, m: int) -> float | str:
    if mu == "max":
        return mu_bound_fluctuation(m)
    if mu == "normalized":
        return mu
    mu = float(mu)
    if not mu > 0:
        raise ValueError("mu must be positive")
    return mu


def run_estimation(drive: DriveSource, channel: IirChannel, m: int,
                   mu: float | str, n_steps: int, noise_std: float = 0.0,
                   seed: int = 0) -> MmaTrace:
    """Adapt an order-``m`` FIR filter from zero taps for ``n_steps`` steps.

    ``mu`` is a number, ``"max"`` for ``16/(3+2m)``, or ``"normalized"`` for
    a per-step ``1/||x_i||**2``.  The drive and the measurement noise use
    independent streams derived from ``seed``.  A divergence stops the run
    and the trace is returned up to that point with ``diverged`` set.
    """
    if m < 0 or n_steps < 1:
        raise ValueError("need m >= 0 and n_steps >= 1")
    mu_val = resolve_mu(mu, m)
    normalized = mu_val == "normalized"

    x = drive.samples(n_steps, derive_seed(seed, 0))
    r = channel_output(channel, x, noise_std, derive_seed(seed, 1))
    b = impulse_response(channel, m + 1)

    config = {
        "drive": drive.kind,
        "mu": mu if isinstance(mu, str) else float(mu),
        "mu_value": None if normalized else mu_val,
        "m": m,
        "steps": n_steps,
        "noise_std": noise_std,
        "seed": seed,
    }
    state = LmsState.zeros(m, 0.0 if normalized else mu_val)
    mma = np.empty(n_steps + 1)
    mma[0] = float(b @ b)
    diverged = False
    count = n_steps
    for i in range(n_steps):
        step_mu = None
        if normalized:
            power = float(state.window[:-1] @ state.window[:-1]) + x[i] * x[i]
            step_mu = 1.0 / power if power > 0 else 0.0
        try:
            state, _ = lms_step(state, x[i], r[i], step_mu)
        except DivergenceError as exc:
            d = exc.state.taps - b
            mma[i + 1] = float(d @ d)
            diverged = True
            count = i + 1
            break
        d = state.taps - b
        mma[i + 1] = float(d @ d)
    return MmaTrace(mma[: count + 1].copy(), config, diverged)


def write_trace_csv(path: str | Path, trace: MmaTrace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "mma", "mma_db"])
        for i, (v, db) in enumerate(zip(trace.mma.tolist(), trace.mma_db.tolist())):
            w.writerow([i, format(v, ".17g"), format(db, ".17g")])


def fourth_moment_estimate(samples: Sequence[float], m: int) -> np.ndarray:
    """Sample mean of ``(x^T x) x x^T`` over all length-``m+1`` windows."""
    x = np.asarray(samples, dtype=float)
    win = np.lib.stride_tricks.sliding_window_view(x, m + 1)[:, ::-1]
    energy = np.einsum("ij,ij->i", win, win)
    return np.einsum("i,ij,ik->jk", energy, win, win) / win.shape[0]
