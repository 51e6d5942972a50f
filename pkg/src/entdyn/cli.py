"""Command-line front end.

Every run resolves its full configuration (flags, defaults, environment),
executes one pipeline, and writes a manifest next to its outputs. Rerunning
from that manifest, or rerunning the same command line, reproduces the
delimited outputs byte for byte. Exit codes: 0 success, 2 configuration,
3 numerical failure, 4 I/O.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .complexity import GAMMA_DEFAULT
from .dynamics import (
    dyson_evolve,
    dyson_init,
    evolve_block,
    langevin_profile,
    separable_block,
    trajectory_rows,
)
from .ensembles import PROTOCOLS, build_profile, sample_c
from .errors import (
    ConfigError,
    EntdynError,
    FitFailureError,
    NumericalError,
    ParameterDomainError,
)
from .measures import batch_measures
from .plots import plot_conditional, plot_growth, plot_scaling
from .seeds import DYSON, LANGEVIN, SAMPLE, stream
from .stats import (
    aggregate_measures,
    conditional_by_trace,
    fit_growth_arrays,
    profile_spectra,
    read_sweep_csv,
    scaling_fit,
    spectra_block,
    stationary_spectra,
    sweep,
    write_conditional_csv,
    write_samples_csv,
    write_scaling_csv,
    write_sweep_csv,
    write_trajectory_csv,
)

OUTPUT_ROOT_VAR = "ENTDYN_OUTPUT_ROOT"
MEASURE_CHOICES = ("R1", "R2")
SCALING_CHOICES = ("R0", "invS2", "both")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number in list: {exc}")
    if not values:
        raise argparse.ArgumentTypeError("list is empty")
    return values


def _int_list(text: str) -> list[int]:
    return [int(v) for v in _float_list(text)]


def _add_ensemble_args(p: argparse.ArgumentParser) -> None:
    named = sorted(p for p in PROTOCOLS if p != "custom")
    p.add_argument("--protocol", choices=named, default="EB")
    p.add_argument("--mu", type=float, default=1.0, help="EB interpolation parameter")
    p.add_argument("--a", type=float, default=1.0, help="column decay scale")
    p.add_argument("--b", type=float, default=1.0, help="row decay scale")
    p.add_argument("--N", type=int, default=16, dest="n")
    p.add_argument("--nu0", type=int, default=0)
    p.add_argument("--beta", type=int, choices=(1, 2), default=1)


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, default=GAMMA_DEFAULT)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument(
        "--from-manifest",
        type=str,
        default=None,
        help="replay a previously written manifest",
    )


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="entdyn",
        description="Monte Carlo toolkit for entanglement growth in "
        "variance-profiled Gaussian ensembles",
    )
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("sample", help="per-sample entropy measures at one point")
    _add_ensemble_args(p)
    _add_run_args(p)
    p.add_argument(
        "--stationary",
        action="store_true",
        help="sample the ergodic endpoint ensemble instead of a profile",
    )

    p = sub.add_parser("sweep", help="measure averages along a parameter grid")
    _add_ensemble_args(p)
    _add_run_args(p)
    p.add_argument(
        "--grid",
        type=_float_list,
        default=None,
        help="comma list of protocol scales: mu values for EB, the common "
        "a=b value otherwise; required unless replaying a manifest",
    )
    p.add_argument("--y-from", choices=("closed", "general"), default="closed")

    p = sub.add_parser("langevin", help="matrix-route trajectories from separable")
    _add_ensemble_args(p)
    _add_run_args(p)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--v2", type=float, default=0.25)
    p.add_argument("--checkpoints", type=_float_list, default=[0.1, 0.25, 0.5, 1.0])

    p = sub.add_parser("dyson", help="eigenvalue-route trajectories")
    _add_ensemble_args(p)
    _add_run_args(p)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--v2", type=float, default=0.25)
    p.add_argument("--y-start", type=float, default=0.1)
    p.add_argument("--checkpoints", type=_float_list, default=[0.25, 0.5, 1.0])
    p.add_argument("--base-dt", type=float, default=None)

    p = sub.add_parser("conditional", help="trace-binned conditional entropies")
    _add_ensemble_args(p)
    _add_run_args(p)
    p.add_argument("--bins", type=int, default=25)

    p = sub.add_parser("fit", help="saturation-model fit of a sweep CSV")
    _add_run_args(p)
    p.add_argument("--input", type=str, default=None, help="sweep CSV path")
    p.add_argument("--measure", choices=MEASURE_CHOICES + ("both",), default="both")
    p.add_argument("--protocol", default=None, help="restrict to one protocol")

    p = sub.add_parser("scaling", help="deep-regime measure vs N log2 N")
    _add_ensemble_args(p)
    _add_run_args(p)
    p.add_argument("--measure", choices=SCALING_CHOICES, default="both")
    p.add_argument("--n-grid", type=_int_list, default=[32, 64, 128, 256])

    p = sub.add_parser("report", help="render figures for an artifact directory")
    p.add_argument("--dir", type=str, default=None, help="artifact directory")
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--from-manifest", type=str, default=None)

    return top


def _protocol_params(args: argparse.Namespace) -> dict[str, float]:
    if args.protocol == "EB":
        return {"mu": args.mu}
    return {"a": args.a, "b": args.b}


def _resolve_outdir(args: argparse.Namespace) -> Path:
    if getattr(args, "out", None):
        out = Path(args.out)
    else:
        root = os.environ.get(OUTPUT_ROOT_VAR, ".")
        out = Path(root) / args.subcommand
    out.mkdir(parents=True, exist_ok=True)
    return out


class _Outputs:
    """Tracks files written by one run so failures can clean up."""

    def __init__(self, outdir: Path):
        self.outdir = outdir
        self.paths: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.outdir / name
        self.paths.append(p)
        return p

    def discard(self) -> None:
        for p in self.paths:
            if p.exists():
                p.unlink()

    def names(self) -> list[str]:
        return [p.name for p in self.paths]


def _write_manifest(out: _Outputs, args: argparse.Namespace) -> None:
    config = {
        k: v
        for k, v in vars(args).items()
        if k not in ("subcommand", "from_manifest")
    }
    manifest = {
        "subcommand": args.subcommand,
        "version": __version__,
        "config": config,
        "outputs": out.names(),
    }
    path = out.outdir / f"manifest_{args.subcommand}.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _apply_manifest(args: argparse.Namespace) -> argparse.Namespace:
    path = Path(args.from_manifest)
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest {path}: line {exc.lineno}: {exc.msg}")
    stored = manifest.get("subcommand")
    if stored != args.subcommand:
        raise ConfigError(
            f"manifest {path} was written by subcommand {stored!r}, "
            f"not {args.subcommand!r}"
        )
    override_out = getattr(args, "out", None)
    for key, value in manifest.get("config", {}).items():
        setattr(args, key, value)
    if override_out is not None:
        args.out = override_out
    args.from_manifest = None
    return args


def _validate_common(args: argparse.Namespace) -> None:
    if getattr(args, "gamma", GAMMA_DEFAULT) <= 0:
        raise ConfigError("gamma must be positive")
    if getattr(args, "samples", 2) < 2:
        raise ConfigError("samples must be at least 2")
    if getattr(args, "workers", 1) < 1:
        raise ConfigError("workers must be at least 1")
    if getattr(args, "n", 2) < 2:
        raise ConfigError("N must be at least 2")
    if getattr(args, "nu0", 0) < 0:
        raise ConfigError("nu0 must be nonnegative")
    if getattr(args, "seed", 0) < 0:
        raise ConfigError("seed must be nonnegative")


# ---------------------------------------------------------------- subcommands


def _run_sample(args, out: _Outputs) -> None:
    if args.stationary:
        lam = stationary_spectra(
            args.n,
            args.nu0,
            args.beta,
            args.gamma,
            args.samples,
            args.seed,
            workers=args.workers,
        )
    else:
        profile = build_profile(
            args.protocol, _protocol_params(args), args.n, args.nu0, args.beta
        )
        lam = profile_spectra(
            profile, args.samples, args.seed, (SAMPLE,), args.workers
        )
    write_samples_csv(out.path("samples.csv"), batch_measures(lam))


def _run_sweep(args, out: _Outputs) -> None:
    if not args.grid:
        raise ConfigError("sweep needs --grid or a manifest providing one")
    if args.protocol == "EB":
        grid = [{"mu": v} for v in args.grid]
    else:
        grid = [{"a": v, "b": v} for v in args.grid]
    curve = sweep(
        args.protocol,
        grid,
        args.n,
        args.nu0,
        args.beta,
        args.gamma,
        args.samples,
        args.seed,
        args.workers,
        args.y_from,
    )
    write_sweep_csv(out.path("sweep.csv"), [curve])


def _checkpoint_spectra(block: np.ndarray) -> np.ndarray:
    sv = np.linalg.svd(block, compute_uv=False)
    lam = sv * sv
    return lam / np.sum(lam, axis=1, keepdims=True)


def _run_langevin(args, out: _Outputs) -> None:
    if args.paths < 1:
        raise ConfigError("paths must be at least 1")
    checkpoints = sorted(args.checkpoints)
    if checkpoints[0] <= 0:
        raise ConfigError("checkpoints must be positive")
    rng = stream(args.seed, LANGEVIN, 0)
    block = separable_block(args.paths, args.n, args.nu0, args.beta, rng)
    current = 0.0
    by_y = []
    for y in checkpoints:
        block = evolve_block(
            block, y - current, args.beta, rng, args.gamma, args.v2
        )
        current = y
        by_y.append((y, _checkpoint_spectra(block)))
    write_trajectory_csv(out.path("langevin_trajectories.csv"), trajectory_rows(by_y))


def _run_dyson(args, out: _Outputs) -> None:
    if args.paths < 1:
        raise ConfigError("paths must be at least 1")
    checkpoints = sorted(args.checkpoints)
    if checkpoints[0] <= args.y_start:
        raise ConfigError("checkpoints must come after y-start")
    start_profile = langevin_profile(
        args.y_start, args.n, args.nu0, args.beta, args.gamma, args.v2
    )
    init = spectra_block(
        lambda rng: sample_c(start_profile, rng).entries,
        args.paths,
        args.seed,
        (DYSON, 1),
        args.n,
        args.workers,
    )
    state = dyson_init(
        init,
        args.y_start,
        args.beta,
        args.nu0,
        args.gamma,
        args.v2,
        args.base_dt,
    )
    rng = stream(args.seed, DYSON, 0)
    by_y = [(args.y_start, init / np.sum(init, axis=1, keepdims=True))]
    for y in checkpoints:
        state = dyson_evolve(state, y, rng)
        lam = state.lambdas
        by_y.append((y, lam / np.sum(lam, axis=1, keepdims=True)))
    write_trajectory_csv(out.path("dyson_trajectories.csv"), trajectory_rows(by_y))


def _run_conditional(args, out: _Outputs) -> None:
    curve = conditional_by_trace(
        args.n,
        args.beta,
        args.gamma,
        args.samples,
        args.bins,
        args.seed,
        args.nu0,
        args.workers,
    )
    write_conditional_csv(out.path("conditional.csv"), curve)
    lin1, lin1_se = curve.linear_slope("R1")
    lin2, lin2_se = curve.linear_slope("R2")
    summary = {
        "r1_at_1": curve.r1_at_1,
        "r2_at_1": curve.r2_at_1,
        "g_slope_r1": curve.g_slope_r1,
        "g_slope_r1_se": curve.g_slope_r1_se,
        "g_slope_r2": curve.g_slope_r2,
        "g_slope_r2_se": curve.g_slope_r2_se,
        "g0_slope": curve.g0_slope,
        "linear_slope_r1": lin1,
        "linear_slope_r1_se": lin1_se,
        "linear_slope_r2": lin2,
        "linear_slope_r2_se": lin2_se,
        "n_total": curve.n_total,
        "n_used": curve.n_used,
    }
    with open(out.path("conditional_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_fit(args, out: _Outputs) -> None:
    src = Path(args.input) if args.input else out.outdir / "sweep.csv"
    if not src.exists():
        raise ConfigError(f"sweep CSV not found: {src}")
    rows = read_sweep_csv(src)
    if args.protocol:
        rows = [r for r in rows if r["protocol"] == args.protocol]
    groups = {(r["protocol"], r["N"], r["beta"]) for r in rows}
    if len(groups) != 1:
        raise ConfigError(
            f"fit input must hold exactly one ensemble, found {sorted(groups)}; "
            "use --protocol to select one"
        )
    rows = sorted(rows, key=lambda r: r["Y"])
    y = np.array([r["Y"] for r in rows])
    measures = MEASURE_CHOICES if args.measure == "both" else (args.measure,)
    result = {}
    for m in measures:
        fit = fit_growth_arrays(
            y,
            np.array([r[m] for r in rows]),
            np.array([r[f"{m}_se"] for r in rows]),
        )
        result[m] = {
            "params": fit.params,
            "stderrs": fit.stderrs(),
            "residual": fit.residual,
            "degenerate": fit.degenerate,
            "n_points": fit.n_points,
        }
    with open(out.path("fit.json"), "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_scaling(args, out: _Outputs) -> None:
    measures = ("R0", "invS2") if args.measure == "both" else (args.measure,)
    params = _protocol_params(args)
    reports = [
        scaling_fit(
            m,
            args.n_grid,
            args.protocol,
            params,
            args.nu0,
            args.beta,
            args.gamma,
            args.samples,
            args.seed,
            args.workers,
        )
        for m in measures
    ]
    write_scaling_csv(out.path("scaling.csv"), reports)


def _run_report(args, out: _Outputs) -> None:
    src = Path(args.dir) if args.dir else out.outdir
    if not src.is_dir():
        raise ConfigError(f"artifact directory not found: {src}")
    rendered = 0
    sweep_path = src / "sweep.csv"
    if sweep_path.exists():
        rows = read_sweep_csv(sweep_path)
        fits = None
        fit_path = src / "fit.json"
        if fit_path.exists():
            with open(fit_path) as fh:
                stored = json.load(fh)
            fits = {m: entry["params"] for m, entry in stored.items()}
        plot_growth(rows, out.path("growth.svg"), fits)
        rendered += 1
    scaling_path = src / "scaling.csv"
    if scaling_path.exists():
        with open(scaling_path) as fh:
            header = fh.readline().strip().split(",")
            rows = []
            for line in fh:
                parts = line.strip().split(",")
                row = dict(zip(header, parts))
                row["N"] = int(row["N"])
                row["value"] = float(row["value"])
                row["se"] = float(row["se"])
                rows.append(row)
        plot_scaling(rows, out.path("scaling.svg"))
        rendered += 1
    cond_path = src / "conditional.csv"
    if cond_path.exists():
        with open(cond_path) as fh:
            header = fh.readline().strip().split(",")
            rows = []
            for line in fh:
                parts = line.strip().split(",")
                row = {k: float(v) for k, v in zip(header, parts)}
                rows.append(row)
        plot_conditional(rows, out.path("conditional.svg"))
        rendered += 1
    if rendered == 0:
        raise ConfigError(
            f"nothing to render: {src} holds no sweep.csv, scaling.csv, "
            "or conditional.csv"
        )


_RUNNERS = {
    "sample": _run_sample,
    "sweep": _run_sweep,
    "langevin": _run_langevin,
    "dyson": _run_dyson,
    "conditional": _run_conditional,
    "fit": _run_fit,
    "scaling": _run_scaling,
    "report": _run_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = None
    try:
        if getattr(args, "from_manifest", None):
            args = _apply_manifest(args)
        _validate_common(args)
        out = _Outputs(_resolve_outdir(args))
        _RUNNERS[args.subcommand](args, out)
        if args.subcommand != "report":
            _write_manifest(out, args)
    except (ConfigError, ParameterDomainError) as exc:
        print(f"entdyn: config error: {exc}", file=sys.stderr)
        if out is not None:
            out.discard()
        return 2
    except (NumericalError, FitFailureError, EntdynError) as exc:
        print(f"entdyn: numerical error: {exc}", file=sys.stderr)
        if out is not None:
            out.discard()
        return 3
    except OSError as exc:
        print(f"entdyn: io error: {exc}", file=sys.stderr)
        if out is not None:
            out.discard()
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
