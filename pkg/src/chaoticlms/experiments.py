"""Experiment configs, presets and reproducible output writing.

Config files are TOML.  Top-level keys are defaults shared by every run::

    name = "fig3"
    master_seed = 20130101
    m = 128
    steps = 3000
    noise_std = 0.0
    repeats = 1          # runs averaged (linear MMA) per configured run
    burn_in = 1000
    plot = true

    [channel]
    feedback = [-0.2, 0.49, 0.292]    # denominator after the implicit 1
    feedforward = [1.0]

    [[runs]]
    label = "centered f4"
    drive = "chaotic_centered"        # chaotic | chaotic_centered | gaussian | external
    mu = "max"                        # number | "max" | "normalized"
    mu_scale = 1.0                    # multiplies the resolved numeric mu
    schedule = { kind = "switched", segments = [[0, 4.0], [400, 3.95]] }
    stream = 0                        # seed stream; defaults to the run index

Any top-level default (``m``, ``steps``, ``noise_std``, ``repeats``,
``burn_in``) may be overridden inside a run.  Gaussian drives take ``std``;
external drives and modulated schedules take ``signal`` which is either
``"synthetic"`` or a path to a one-sample-per-line text file (relative to
the config file).  ``x0`` pins a chaotic run's initial condition.

Stats presets set ``command = "stats"`` and carry a ``[stats]`` table whose
keys mirror the ``stats`` command-line flags.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .logistic import LogisticParams, lambdas_from_dict
from .rng import derive_seed
from .sim import (ChaoticDrive, ExternalDrive, GaussianDrive, IirChannel, MmaTrace,
                  load_external_signal, resolve_mu, run_estimation, synthetic_speech,
                  write_trace_csv)
from .svg import line_plot

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SEED_ENV = "CHAOTICLMS_SEED"
PRESETS = ("fig3", "fig4", "fig6", "table1", "table2")
DRIVES = ("chaotic", "chaotic_centered", "gaussian", "external")
_RUN_DEFAULTS = ("m", "steps", "noise_std", "repeats", "burn_in")
_RUN_KEYS = {"label", "drive", "mu", "mu_scale", "schedule", "std", "signal",
             "stream", "x0", *_RUN_DEFAULTS}
_TOP_KEYS = {"name", "description", "command", "master_seed", "plot", "channel",
             "runs", "stats", *_RUN_DEFAULTS}


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# Config model
# --------------------------------------------------------------------------

@dataclass
class RunSpec:
    label: str
    drive: str
    mu: float | str
    mu_scale: float
    m: int
    steps: int
    noise_std: float
    repeats: int
    burn_in: int
    stream: int
    std: float | None = None
    schedule: dict | None = None
    signal: str | None = None
    x0: float | None = None


@dataclass
class ExperimentConfig:
    name: str
    master_seed: int
    channel: IirChannel
    runs: list[RunSpec]
    plot: bool = True
    description: str = ""
    base_dir: Path = field(default_factory=Path.cwd)
    raw: dict = field(default_factory=dict)


def load_preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return (resources.files("chaoticlms") / "presets" / f"{name}.toml").read_text()


def parse_toml(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None


def env_seed() -> int | None:
    val = os.environ.get(SEED_ENV)
    if val is None or val == "":
        return None
    try:
        return int(val)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {val!r}") from None


def _num(value, key: str, kind=float, minimum=None, strict=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if kind is int and (not float(value).is_integer()):
        raise ConfigError(f"{key} must be an integer")
    value = kind(value)
    if minimum is not None and (value <= minimum if strict else value < minimum):
        raise ConfigError(f"{key} must be {'>' if strict else '>='} {minimum}")
    return value


def build_config(data: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Validate a parsed estimate config; raises :class:`ConfigError`."""
    if not data:
        raise ConfigError("empty config")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if data.get("command", "estimate") != "estimate":
        raise ConfigError(f"config is for the {data['command']!r} command")
    runs_in = data.get("runs")
    if not runs_in or not isinstance(runs_in, list):
        raise ConfigError("config needs at least one [[runs]] entry")

    seed = env_seed()
    master = seed if seed is not None else _num(data.get("master_seed", 0), "master_seed", int, 0)
    defaults = {
        "m": _num(data.get("m", 128), "m", int, 0),
        "steps": _num(data.get("steps", 3000), "steps", int, 1),
        "noise_std": _num(data.get("noise_std", 0.0), "noise_std", float, 0),
        "repeats": _num(data.get("repeats", 1), "repeats", int, 1),
        "burn_in": _num(data.get("burn_in", 1000), "burn_in", int, 0),
    }
    ch = data.get("channel", {})
    if not isinstance(ch, dict) or set(ch) - {"feedback", "feedforward"}:
        raise ConfigError("[channel] takes only feedback and feedforward lists")
    try:
        channel = IirChannel(tuple(ch.get("feedback", (-0.2, 0.49, 0.292))),
                             tuple(ch.get("feedforward", (1.0,))))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"channel: {exc}") from None

    runs = []
    for idx, r in enumerate(runs_in):
        where = f"runs[{idx}]"
        if not isinstance(r, dict):
            raise ConfigError(f"{where} must be a table")
        unknown = set(r) - _RUN_KEYS
        if unknown:
            raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
        drive = r.get("drive")
        if drive not in DRIVES:
            raise ConfigError(f"{where}: drive must be one of {DRIVES}")
        mu = r.get("mu", "max")
        if isinstance(mu, str):
            if mu not in ("max", "normalized"):
                raise ConfigError(f"{where}: mu must be a number, 'max' or 'normalized'")
        else:
            mu = _num(mu, f"{where}.mu", float, 0, strict=True)
        vals = {k: r.get(k, defaults[k]) for k in _RUN_DEFAULTS}
        spec = RunSpec(
            label=str(r.get("label", f"run{idx}")),
            drive=drive,
            mu=mu,
            mu_scale=_num(r.get("mu_scale", 1.0), f"{where}.mu_scale", float, 0, strict=True),
            m=_num(vals["m"], f"{where}.m", int, 0),
            steps=_num(vals["steps"], f"{where}.steps", int, 1),
            noise_std=_num(vals["noise_std"], f"{where}.noise_std", float, 0),
            repeats=_num(vals["repeats"], f"{where}.repeats", int, 1),
            burn_in=_num(vals["burn_in"], f"{where}.burn_in", int, 0),
            stream=_num(r.get("stream", idx), f"{where}.stream", int, 0),
            std=None if "std" not in r else _num(r["std"], f"{where}.std", float, 0, strict=True),
            schedule=r.get("schedule"),
            signal=r.get("signal"),
            x0=None if "x0" not in r else _num(r["x0"], f"{where}.x0"),
        )
        if spec.mu == "normalized" and spec.mu_scale != 1.0:
            raise ConfigError(f"{where}: mu_scale applies to numeric or 'max' mu only")
        if drive == "external" and spec.signal is None:
            raise ConfigError(f"{where}: external drive needs signal")
        if spec.schedule is not None and drive not in ("chaotic", "chaotic_centered"):
            raise ConfigError(f"{where}: schedule only applies to chaotic drives")
        if spec.x0 is not None and not 0 < spec.x0 < 1:
            raise ConfigError(f"{where}: x0 must lie in (0, 1)")
        runs.append(spec)

    labels = [_slug(r.label) for r in runs]
    if len(set(labels)) != len(labels):
        raise ConfigError("run labels must be distinct")

    cfg = ExperimentConfig(
        name=str(data.get("name", "experiment")),
        master_seed=master,
        channel=channel,
        runs=runs,
        plot=bool(data.get("plot", True)),
        description=str(data.get("description", "")),
        base_dir=base_dir or Path.cwd(),
        raw=data,
    )
    # construct every drive once so schedule/signal errors surface before any run
    for spec in runs:
        make_drive(spec, cfg)
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return build_config(parse_toml(text), path.parent)


def load_preset(name: str) -> ExperimentConfig:
    return build_config(parse_toml(load_preset_text(name)))


# --------------------------------------------------------------------------
# Running
# --------------------------------------------------------------------------

def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_").lower() or "run"


def _signal(ref: str, cfg: ExperimentConfig, n: int) -> np.ndarray:
    if ref == "synthetic":
        return synthetic_speech(max(n, 8000))
    path = Path(ref)
    if not path.is_absolute():
        path = cfg.base_dir / path
    try:
        sig = load_external_signal(path)
    except OSError as exc:
        raise ConfigError(f"cannot read signal {path}: {exc}") from None
    if sig.size < n:
        raise ConfigError(f"signal {path} has {sig.size} samples, run needs {n}")
    return sig


def make_drive(spec: RunSpec, cfg: ExperimentConfig):
    try:
        if spec.drive == "gaussian":
            return GaussianDrive() if spec.std is None else GaussianDrive(spec.std)
        if spec.drive == "external":
            return ExternalDrive(_signal(spec.signal, cfg, spec.steps), source=spec.signal)
        sched = spec.schedule or {"kind": "constant", "lambda": 4.0}
        signal = None
        if sched.get("kind") == "modulated":
            signal = _signal(sched.get("signal", "synthetic"), cfg, spec.steps)
        schedule = lambdas_from_dict(sched, signal)
        params = None if spec.x0 is None else LogisticParams(spec.x0, spec.burn_in)
        return ChaoticDrive(schedule, centered=spec.drive == "chaotic_centered",
                            params=params, burn_in=spec.burn_in)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"run {spec.label!r}: {exc}") from None


def run_spec(spec: RunSpec, cfg: ExperimentConfig) -> MmaTrace:
    """Run one configured entry, averaging linear MMA over its repeats."""
    drive = make_drive(spec, cfg)
    mu = resolve_mu(spec.mu, spec.m)
    if mu != "normalized":
        mu *= spec.mu_scale
    traces = [run_estimation(drive, cfg.channel, spec.m, mu, spec.steps, spec.noise_std,
                             derive_seed(cfg.master_seed, spec.stream, k))
              for k in range(spec.repeats)]
    length = min(t.mma.size for t in traces)
    mean = np.mean([t.mma[:length] for t in traces], axis=0)
    config = dict(traces[0].config, label=spec.label, repeats=spec.repeats,
                  mu_scale=spec.mu_scale, stream=spec.stream, seed=cfg.master_seed)
    return MmaTrace(mean, config, any(t.diverged for t in traces))


def atomic_write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_writer(path: Path, writer, *args) -> None:
    """Call ``writer(tmp_path, *args)`` then move the file into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp, *args)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, config: Any, artifacts: list[Path],
                   extra: dict | None = None) -> Path:
    manifest = {
        "command": command,
        "config": config,
        "artifacts": [{"file": p.name, "sha256": sha256(p)} for p in artifacts],
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass
class ExperimentResult:
    traces: dict[str, MmaTrace]
    artifacts: list[Path]

    @property
    def diverged(self) -> list[str]:
        return [k for k, t in self.traces.items() if t.diverged]


def run_experiment(cfg: ExperimentConfig, out: Path, plot: bool | None = None) -> ExperimentResult:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    traces: dict[str, MmaTrace] = {}
    artifacts: list[Path] = []
    for spec in cfg.runs:
        trace = run_spec(spec, cfg)
        traces[spec.label] = trace
        path = out / f"{cfg.name}_{_slug(spec.label)}.csv"
        atomic_writer(path, write_trace_csv, trace)
        artifacts.append(path)

    if cfg.plot if plot is None else plot:
        series = [(label, np.arange(t.mma.size), t.mma_db) for label, t in traces.items()]
        doc = line_plot(series, title=f"{cfg.name}: model misadjustment",
                        xlabel="iteration", ylabel="MMA [dB]")
        svg_path = out / f"{cfg.name}.svg"
        atomic_write(svg_path, doc)
        artifacts.append(svg_path)

    runs_meta = {label: t.config | {"diverged": t.diverged,
                                    "final_mma_db": _finite_or_none(t.mma_db[-1])}
                 for label, t in traces.items()}
    write_manifest(out, "estimate", cfg.raw | {"master_seed": cfg.master_seed}, artifacts,
                   {"runs": runs_meta})
    return ExperimentResult(traces, artifacts)


def _finite_or_none(v: float):
    return float(v) if math.isfinite(v) else None
