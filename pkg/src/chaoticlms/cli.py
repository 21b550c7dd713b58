"""Command-line entry point.

Exit codes: 0 success, 1 self-check mismatch, 2 usage or config error,
3 an estimation run diverged.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import stats, theory
from .experiments import (ConfigError, atomic_write, atomic_writer, env_seed, load_config,
                          load_preset, load_preset_text, parse_toml, run_experiment,
                          write_manifest)
from .logistic import (DEFAULT_X0, Constant, LogisticParams, bifurcation_scan, center,
                       generate_orbit)
from .rng import derive_seed, initial_condition
from .svg import line_plot, scatter_plot

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

# self-check tolerances
TOL_MOMENT = 0.01
TOL_AUTOCORR = 0.005
TOL_QUAD_MOMENT = 1e-9
TOL_QUAD_AUTOCORR = 1e-7
TOL_HIST_REL = 0.15

_STATS_KEYS = {"moments", "autocorr", "centered", "histogram", "lam", "bifurcation",
               "lambda_min", "lambda_max", "lambda_steps", "settle", "keep",
               "samples", "seed", "burn_in", "check"}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chaoticlms",
                                description="Logistic-map statistics and chaotic LMS experiments")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stats", help="moments, autocorrelation, histograms, bifurcation")
    s.add_argument("--preset", choices=["table1", "table2"])
    s.add_argument("--moments", type=int, metavar="N", help="report moments of order 0..N")
    s.add_argument("--autocorr", type=int, metavar="L", help="report lags 0..L")
    s.add_argument("--centered", action="store_true", default=None,
                   help="use the zero-mean sequence")
    s.add_argument("--histogram", type=int, metavar="BINS")
    s.add_argument("--lambda", dest="lam", type=float, help="map parameter (default 4)")
    s.add_argument("--bifurcation", action="store_true", default=None)
    s.add_argument("--lambda-min", type=float)
    s.add_argument("--lambda-max", type=float)
    s.add_argument("--lambda-steps", type=int)
    s.add_argument("--settle", type=int)
    s.add_argument("--keep", type=int)
    s.add_argument("--samples", type=int, metavar="N")
    s.add_argument("--seed", type=int, metavar="S")
    s.add_argument("--burn-in", type=int)
    s.add_argument("--check", action="store_true", default=None,
                   help="compare against closed forms and exit 1 on mismatch")
    s.add_argument("--no-plot", action="store_true")
    s.add_argument("--out", type=Path, default=Path("out"), metavar="DIR")

    e = sub.add_parser("estimate", help="run LMS channel-estimation experiments")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("config", nargs="?", type=Path, help="TOML experiment config")
    src.add_argument("--preset", choices=["fig3", "fig4", "fig6"])
    e.add_argument("--out", type=Path, default=Path("out"), metavar="DIR")
    e.add_argument("--no-plot", action="store_true")
    e.add_argument("--expect-divergence", action="store_true",
                   help="do not treat diverged runs as failure")

    b = sub.add_parser("bounds", help="closed-form spectrum and step-size bounds")
    b.add_argument("--m", type=int, required=True, help="filter order (m + 1 taps)")
    b.add_argument("--centered", action="store_true")
    b.add_argument("--out", type=Path, metavar="DIR", help="also write spectrum.csv here")
    return p


# --------------------------------------------------------------------------
# stats
# --------------------------------------------------------------------------

_STATS_DEFAULTS = dict(moments=None, autocorr=None, centered=False, histogram=None, lam=4.0,
                       bifurcation=False, lambda_min=3.4, lambda_max=4.0, lambda_steps=600,
                       settle=1000, keep=100, samples=1_000_000, seed=None, burn_in=1000,
                       check=False)


def _stats_options(args) -> dict:
    opts = dict(_STATS_DEFAULTS)
    if args.preset:
        table = parse_toml(load_preset_text(args.preset)).get("stats", {})
        unknown = set(table) - _STATS_KEYS
        if unknown:
            raise ConfigError(f"preset {args.preset}: unknown stats keys {sorted(unknown)}")
        opts.update(table)
    for key in _STATS_KEYS:
        val = getattr(args, key)
        if val is not None:
            opts[key] = val
    if opts["seed"] is None:
        opts["seed"] = env_seed()
    for key in ("moments", "autocorr", "histogram"):
        if opts[key] is not None and opts[key] < 0:
            raise ConfigError(f"--{key} must be >= 0")
    if opts["histogram"] == 0:
        raise ConfigError("--histogram needs at least one bin")
    if opts["samples"] < 1 or opts["burn_in"] < 0:
        raise ConfigError("--samples must be >= 1 and --burn-in >= 0")
    if opts["autocorr"] is not None and opts["autocorr"] >= opts["samples"]:
        raise ConfigError("--autocorr must be smaller than --samples")
    if not 0 < opts["lam"] <= 4:
        raise ConfigError("--lambda must lie in (0, 4]")
    if not any(opts[k] is not None for k in ("moments", "autocorr", "histogram")) \
            and not opts["bifurcation"]:
        raise ConfigError("nothing to do: pass --moments, --autocorr, --histogram "
                          "or --bifurcation")
    return opts


def cmd_stats(args) -> int:
    opts = _stats_options(args)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    artifacts: list[Path] = []
    failures: list[str] = []
    centered = bool(opts["centered"])
    suffix = "_centered" if centered else ""

    orbit = None
    if any(opts[k] is not None for k in ("moments", "autocorr", "histogram")):
        x0 = DEFAULT_X0 if opts["seed"] is None else initial_condition(derive_seed(opts["seed"], 0))
        orbit = generate_orbit(LogisticParams(x0, opts["burn_in"]), opts["samples"],
                               Constant(opts["lam"]))
        if centered:
            orbit = center(orbit)
    ergodic = opts["lam"] == 4.0

    if opts["moments"] is not None:
        n = opts["moments"]
        theo = [stats.centered_moment(k) if centered else stats.theoretical_moment(k)
                for k in range(n + 1)]
        emp = stats.empirical_moments(orbit.samples, n)
        path = out / f"moments{suffix}.csv"
        atomic_writer(path, stats.write_comparison_csv, theo, emp)
        artifacts.append(path)
        if opts["check"]:
            for k, (t, e) in enumerate(zip(theo, emp)):
                if ergodic and abs(float(t) - e) > TOL_MOMENT:
                    failures.append(f"moment {k}: empirical {e:.6g} vs {t}")
                if not centered and k <= 10:
                    q = stats.quadrature_moment(k)
                    if abs(q - float(t)) > TOL_QUAD_MOMENT:
                        failures.append(f"moment {k}: quadrature {q!r} vs {t}")

    if opts["autocorr"] is not None:
        lags = opts["autocorr"]
        theo = [stats.theoretical_autocorr(k, centered) for k in range(lags + 1)]
        est = stats.empirical_autocorr(orbit.samples, lags)
        path = out / f"autocorr{suffix}.csv"
        atomic_writer(path, stats.write_comparison_csv, theo, est.values)
        artifacts.append(path)
        if opts["check"]:
            for k, (t, e) in enumerate(zip(theo, est.values)):
                if ergodic and abs(float(t) - e) > TOL_AUTOCORR:
                    failures.append(f"autocorr lag {k}: empirical {e:.6g} vs {t}")
                if k <= 10:
                    q = stats.quadrature_autocorr(k) - (0.25 if centered else 0.0)
                    if abs(q - float(t)) > TOL_QUAD_AUTOCORR:
                        failures.append(f"autocorr lag {k}: quadrature {q!r} vs {t}")

    if opts["histogram"] is not None:
        rng = (-0.5, 0.5) if centered else (0.0, 1.0)
        hist = stats.histogram(orbit.raw, opts["histogram"], (0.0, 1.0),
                               compare_invariant=ergodic)
        if centered:
            hist = stats.Histogram(hist.edges - 0.5, hist.counts, hist.underflow,
                                   hist.overflow, hist.expected)
        path = out / f"histogram{suffix}.csv"
        atomic_writer(path, stats.write_histogram_csv, hist)
        artifacts.append(path)
        if hist.underflow or hist.overflow:
            print(f"histogram: {hist.underflow} samples below and {hist.overflow} "
                  f"above {rng}", file=sys.stderr)
        if not args.no_plot:
            mids = 0.5 * (hist.edges[:-1] + hist.edges[1:])
            series = [("empirical", mids, hist.counts / hist.total)]
            if hist.expected is not None:
                series.append(("invariant density", mids, hist.expected))
            svg = out / f"histogram{suffix}.svg"
            atomic_write(svg, line_plot(series, title=f"histogram, lambda={opts['lam']}",
                                        xlabel="x", ylabel="bin probability"))
            artifacts.append(svg)
        if opts["check"] and hist.expected is not None:
            rel = np.abs(hist.counts / hist.total - hist.expected) / hist.expected
            if np.max(rel) >= TOL_HIST_REL:
                failures.append(f"histogram: max relative bin deviation {np.max(rel):.3f}")

    if opts["bifurcation"]:
        lam, x = bifurcation_scan(opts["lambda_min"], opts["lambda_max"], opts["lambda_steps"],
                                  opts["settle"], opts["keep"])
        path = out / "bifurcation.csv"

        def _write(p):
            with open(p, "w", newline="") as fh:
                fh.write("lambda,x\n")
                for a, v in zip(lam.tolist(), x.tolist()):
                    fh.write(f"{a:.17g},{v:.17g}\n")

        atomic_writer(path, _write)
        artifacts.append(path)
        if not args.no_plot:
            svg = out / "bifurcation.svg"
            atomic_write(svg, scatter_plot(lam, x, title="bifurcation diagram",
                                           xlabel="lambda", ylabel="x", radius=0.4))
            artifacts.append(svg)

    write_manifest(out, "stats", opts, artifacts,
                   {"self_check": None if not opts["check"] else {"failures": failures}})
    for line in failures:
        print(f"MISMATCH {line}", file=sys.stderr)
    for p in artifacts:
        print(p)
    return EXIT_MISMATCH if failures else EXIT_OK


# --------------------------------------------------------------------------
# estimate / bounds
# --------------------------------------------------------------------------

def cmd_estimate(args) -> int:
    cfg = load_preset(args.preset) if args.preset else load_config(args.config)
    result = run_experiment(cfg, args.out, plot=False if args.no_plot else None)
    for label, trace in result.traces.items():
        final = trace.mma_db[-1]
        note = " DIVERGED" if trace.diverged else ""
        print(f"{label:<28s} steps={trace.mma.size - 1:<6d} final MMA {final:9.2f} dB{note}")
    for p in result.artifacts:
        print(p)
    if result.diverged and not args.expect_divergence:
        print(f"diverged runs: {', '.join(result.diverged)}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_bounds(args) -> int:
    if args.m < 0:
        raise ConfigError("--m must be >= 0")
    row = theory.bounds_row(args.m, args.centered)
    names = [("lambda_max", "lambda_max"), ("lambda_min", "lambda_min"),
             ("sigma", "eigenvalue spread"), ("mu_mean_bound", "2/lambda_max"),
             ("mu_fluct_bound", "16/(3+2m)"), ("decay_at_mu_max", "decay factor at 16/(3+2m)")]
    print(f"m = {args.m} ({args.m + 1} taps), {'centered' if args.centered else 'raw'} drive")
    for key, label in names:
        print(f"  {label:<28s} {row[key]:.10g}")
    if args.out:
        path = args.out / "spectrum.csv"
        atomic_writer(path, theory.write_spectrum_csv, [row])
        print(path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)  # exits 2 on bad flags
    handler = {"stats": cmd_stats, "estimate": cmd_estimate, "bounds": cmd_bounds}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"chaoticlms: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
