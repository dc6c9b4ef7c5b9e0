"""Command-line front end.

Every command writes one dataset (CSV or JSON) whose header records the
parameters, method, tolerances and code version.  The header also carries the
full run configuration as one JSON line, so ``--config <previous output>``
reruns it.  Exit status: 0 on success, 1 on a solver or tolerance failure,
2 on a configuration error.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .lattice import (
    ResonanceSearchError,
    SolverError,
    find_resonance,
    resonance_array,
    solve_continued_fraction,
    solve_functional_equation,
)
from .observables import (
    InconsistencyError,
    StabilizationError,
    spectrum_finite_time,
    spectrum_infinite_time,
    survival_curve,
    theta_bromwich,
    unitarity,
)
from .params import ModelParams
from .volterra import ConvergenceError, solve_phi, theta_from_phi
from .wavefunction import LaplaceField, asymptotic_ray, invert_moderate, spectral_reconstruct

__all__ = ["main", "build_parser", "parse_time", "run", "reproduce_figure", "validate"]

SOLVER_ERRORS = (
    SolverError,
    ResonanceSearchError,
    ConvergenceError,
    InconsistencyError,
    StabilizationError,
    FloatingPointError,
)

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6")

# Fig. 1 is drawn about the resonance centre quoted for it
FIG1_K2 = 0.1999489220447


class ConfigError(ValueError):
    """Invalid run configuration (exit status 2)."""


class ToleranceFailure(RuntimeError):
    """A validation check missed its tolerance (exit status 1)."""


# -- parsing ------------------------------------------------------------------


def parse_time(token):
    """Time token: a real ``t >= 0``, ``<x>T`` (multiples of the period) or ``inf``."""
    s = str(token).strip()
    if s.lower() == "inf":
        return ("inf", None)
    try:
        if s.endswith("T"):
            value = float(s[:-1])
            kind = "periods"
        else:
            value = float(s)
            kind = "abs"
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid time {token!r}") from exc
    if not math.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError(f"time must be finite and >= 0, got {token!r}")
    return (kind, value)


def resolve_time(spec, params):
    kind, value = spec
    if kind == "inf":
        return math.inf
    return value * params.period if kind == "periods" else value


def _time_token(spec):
    kind, value = spec
    if kind == "inf":
        return "inf"
    return f"{value!r}T" if kind == "periods" else repr(value)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _common(p):
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", default="-", help="output path ('-' for stdout)")


def build_parser():
    parser = _Parser(prog="deltaion", allow_abbrev=False,
                     description="Ionization of a delta well with an oscillating strength.")
    parser.add_argument("--version", action="version", version=f"deltaion {__version__}")
    parser.add_argument("--config", help="JSON config, or a previous output file to rerun")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("spectrum", allow_abbrev=False, help="Theta(k, t) on a k grid")
    _common(p)
    p.add_argument("--t", type=parse_time, default=("inf", None), dest="t_spec")
    p.add_argument("--k-min", type=float, default=0.0)
    p.add_argument("--k-max", type=float, default=2.5)
    p.add_argument("--k-points", type=int, default=2001)

    p = sub.add_parser("survival", allow_abbrev=False, help="theta(t) on a t grid")
    _common(p)
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--t-points", type=int, default=2001)
    p.add_argument("--route", choices=("auto", "oracle", "laplace"), default="auto")
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("wavefunction", allow_abbrev=False, help="psi(x, t) on an x grid")
    _common(p)
    p.add_argument("--t", type=parse_time, required=True, dest="t_spec")
    p.add_argument("--x-min", type=float, default=-40.0)
    p.add_argument("--x-max", type=float, default=40.0)
    p.add_argument("--x-points", type=int, default=801)
    p.add_argument("--method", choices=("inversion", "spectral", "ray"), default="inversion")

    p = sub.add_parser("resonance", allow_abbrev=False, help="resonance poles and residues")
    _common(p)

    p = sub.add_parser("validate", allow_abbrev=False, help="run the invariant checks")
    _common(p)

    p = sub.add_parser("reproduce-figure", allow_abbrev=False,
                       help="datasets and a gnuplot script for one figure")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--output-dir", default=".")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _grid(lo, hi, n, name, positive=False):
    if n < 2:
        raise ConfigError(f"--{name}-points must be >= 2")
    if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
        raise ConfigError(f"--{name}-max must exceed --{name}-min")
    if positive and lo < 0:
        raise ConfigError(f"--{name}-min must be >= 0")
    return np.linspace(lo, hi, n)


def _load_config(path):
    """Option dict from a JSON config or from the header of a previous output."""
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        obj = json.loads(text)
        return obj["meta"]["config"] if "meta" in obj else obj
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    raise ConfigError(f"no configuration found in {path}")


def _config_argv(cfg, parser):
    """Translate a config dict into argv, rejecting unknown keys."""
    cfg = dict(cfg)
    try:
        command = cfg.pop("command")
    except KeyError as exc:
        raise ConfigError("config lacks 'command'") from exc
    sub = parser._subparsers._group_actions[0].choices.get(command)
    if sub is None:
        raise ConfigError(f"unknown command {command!r}")
    known = {a.dest: a for a in sub._actions if a.option_strings}
    argv = [command]
    if command == "reproduce-figure":
        argv.append(str(cfg.pop("figure", "")))
    for key, value in cfg.items():
        action = known.get(key)
        if action is None or key == "help":
            raise ConfigError(f"unknown config key {key!r}")
        argv += [action.option_strings[-1] if key != "t_spec" else "--t", str(value)]
    return argv


def _canonical(args):
    """JSON-ready config of a parsed namespace (inverse of :func:`_config_argv`)."""
    out = {"command": args.command}
    for key, value in vars(args).items():
        if key in ("command", "config", "output", "output_dir"):
            continue
        if key == "t_spec":
            value = _time_token(value)
        out[key] = value
    return out


# -- output -------------------------------------------------------------------


def _fmt(x):
    return format(float(x), ".17g")


def _meta(args, params, method, tolerances, extra=None):
    meta = {
        "code_version": __version__,
        "command": args.command,
        "alpha": params.alpha,
        "omega": params.omega,
        "method": method,
        "tolerances": tolerances,
    }
    if extra:
        meta.update(extra)
    meta["config"] = _canonical(args)
    return meta


def write_table(path, fmt, meta, columns, data, blocks=None):
    """Write columns of real data with a metadata header.

    ``blocks`` (CSV only) inserts a blank line after each listed row index so
    gnuplot reads a surface.
    """
    data = [np.asarray(c, float) for c in data]
    for name, col in zip(columns, data):
        if not np.all(np.isfinite(col)):
            raise FloatingPointError(f"non-finite values in column {name!r}")
    if fmt == "json":
        obj = {"meta": meta, "data": {c: [float(v) for v in col] for c, col in zip(columns, data)}}
        text = json.dumps(obj, indent=1) + "\n"
    else:
        lines = []
        for key, value in meta.items():
            if key == "config":
                continue
            lines.append(f"# {key}: {json.dumps(value)}")
        lines.append(f"# config: {json.dumps(meta['config'])}")
        lines.append(",".join(columns))
        breaks = set(blocks or ())
        for i, row in enumerate(zip(*data)):
            lines.append(",".join(_fmt(v) for v in row))
            if i in breaks:
                lines.append("")
        text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _threads():
    raw = os.environ.get("DELTAION_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"DELTAION_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"DELTAION_THREADS must be a positive integer, got {raw!r}")
    return n


def _chunked(fn, grid, threads, size=512):
    """Evaluate ``fn`` on chunks of ``grid``, possibly in parallel; order is preserved."""
    pieces = [grid[i : i + size] for i in range(0, grid.size, size)]
    if threads == 1 or len(pieces) == 1:
        return np.concatenate([fn(p) for p in pieces])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.concatenate(list(pool.map(fn, pieces)))


# -- commands -----------------------------------------------------------------


def _params(args):
    try:
        return ModelParams(args.alpha, args.omega)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _spectrum(params, k, t, threads):
    if math.isinf(t):
        amp = _chunked(lambda kk: spectrum_infinite_time(params, kk).amplitude, k, threads)
        return amp, "laplace-boundary"
    sl = spectrum_finite_time(params, k, t)
    return sl.amplitude, sl.method


def cmd_spectrum(args):
    params = _params(args)
    k = _grid(args.k_min, args.k_max, args.k_points, "k", positive=True)
    t = resolve_time(args.t_spec, params)
    amp, method = _spectrum(params, k, t, _threads())
    meta = _meta(args, params, method, {"volterra": 1e-8}, {"t": _time_token(args.t_spec)})
    write_table(args.output, args.format, meta, ["k", "re_Theta", "im_Theta", "abs_Theta_sq"],
                [k, amp.real, amp.imag, np.abs(amp) ** 2])


def cmd_survival(args):
    params = _params(args)
    if args.tol <= 0:
        raise ConfigError("--tol must be positive")
    t = _grid(args.t_min, args.t_max, args.t_points, "t", positive=True)
    curve = survival_curve(params, t, route=args.route, tol=args.tol)
    meta = _meta(args, params, f"survival/{args.route}", {"volterra": args.tol, "overlap": 1e-6})
    write_table(args.output, args.format, meta, ["t", "re_theta", "im_theta", "abs_theta_sq"],
                [t, curve.theta.real, curve.theta.imag, curve.survival])


def _psi(params, t, x, method, threads):
    field = LaplaceField(params)
    if method == "inversion":
        return _chunked(lambda xx: invert_moderate(field, t, xx).psi, x, threads), "contour-inversion"
    if method == "spectral":
        return spectral_reconstruct(params, t, x).psi, "spectral-reconstruction"
    if np.any(x == 0):
        raise ConfigError("the ray form needs x != 0")
    return asymptotic_ray(field, x / t, t), "stationary-phase"


def cmd_wavefunction(args):
    params = _params(args)
    x = _grid(args.x_min, args.x_max, args.x_points, "x")
    t = resolve_time(args.t_spec, params)
    if math.isinf(t):
        raise ConfigError("psi is not defined at t = inf")
    if args.method == "ray" and t == 0:
        raise ConfigError("the ray form needs t > 0")
    psi, method = _psi(params, t, x, args.method, _threads())
    meta = _meta(args, params, method, {"alias": 24.0}, {"t": _time_token(args.t_spec)})
    write_table(args.output, args.format, meta, ["x", "re_psi", "im_psi", "abs_psi_sq"],
                [x, psi.real, psi.imag, np.abs(psi) ** 2])


def cmd_resonance(args):
    params = _params(args)
    poles = resonance_array(params, find_resonance(params))
    q = np.array([r.q_pole for r in poles])
    res = np.array([r.residue for r in poles])
    meta = _meta(args, params, "newton-on-inverse-Phi", {"newton": 1e-14})
    write_table(args.output, args.format, meta,
                ["re_q", "im_q", "re_residue", "im_residue", "rate"],
                [q.real, q.imag, res.real, res.imag, 2 * np.abs(q.imag)])


# -- validation -----------------------------------------------------------------


def validate(params):
    """Invariant checks at one parameter point: ``[(name, measured, tolerance), ...]``."""
    T = params.period
    checks = []
    for t in (T, 10 * T):
        rep = unitarity(params, t)
        checks.append((f"unitarity t={t / T:g}T", rep.defect, 1e-6))
    ts = np.linspace(0, 50, 26)
    if params.alpha == 0:
        gap = float(np.max(np.abs(theta_bromwich(params, ts) - 1)))
    else:
        phi = solve_phi(params, 50.0, tol=1e-10)
        gap = float(np.max(np.abs(theta_from_phi(phi, ts) - theta_bromwich(params, ts))))
    checks.append(("theta oracle vs laplace t<=50", gap, 1e-6))
    worst, resid = 0.0, 0.0
    for frac in (0.0, 0.25, 0.5, 0.75):
        for im in (1e-3, 0.5):
            sigma = complex(frac * params.omega, im)
            a = solve_functional_equation(params, sigma)
            b = solve_continued_fraction(params, sigma)
            lo, hi = max(a.n_min, b.n_min), min(a.n_max, b.n_max)
            ga = np.array([a[n] for n in range(lo, hi + 1)])
            gb = np.array([b[n] for n in range(lo, hi + 1)])
            worst = max(worst, float(np.max(np.abs(ga - gb))))
            resid = max(resid, a.residual_norm, b.residual_norm)
    checks.append(("lattice doubling vs continued fraction", worst, 1e-11))
    checks.append(("lattice recurrence residual", resid, 1e-12))
    if params.alpha == 0:
        k = np.linspace(0.01, 3, 50)
        big = float(np.max(np.abs(spectrum_infinite_time(params, k).amplitude)))
        checks.append(("Theta identically zero", big, 0.0))
    return checks


def cmd_validate(args):
    params = _params(args)
    checks = validate(params)
    ok = [m <= tol for _, m, tol in checks]
    meta = _meta(args, params, "invariant-suite", {name: tol for name, _, tol in checks},
                 {"checks": [name for name, _, _ in checks]})
    write_table(args.output, args.format, meta, ["check", "measured", "tolerance", "passed"],
                [np.arange(len(checks)), [m for _, m, _ in checks],
                 [tol for _, _, tol in checks], np.array(ok, float)])
    for (name, m, tol), good in zip(checks, ok):
        print(f"{'PASS' if good else 'FAIL'}  {name}: {m:.3e} (tol {tol:.0e})", file=sys.stderr)
    if not all(ok):
        raise ToleranceFailure("validation failed")


# -- figures --------------------------------------------------------------------


def _gnuplot(figure, files, columns, logscale=False, surface=False, xlabel="k", ylabel=""):
    lines = [f"# {figure}", "set datafile separator ','", "set key autotitle columnhead",
             f"set xlabel '{xlabel}'", f"set ylabel '{ylabel}'"]
    if logscale:
        lines.append("set logscale y")
    if surface:
        lines += ["set pm3d map", f"splot '{files[0]}' using {columns}"]
    else:
        plots = [f"'{f}' using {columns} with lines" for f in files]
        lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def reproduce_figure(figure, output_dir, fmt="csv", threads=1):
    """Write the datasets and a gnuplot script for one figure; returns the paths written."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = "json" if fmt == "json" else "csv"
    written = []

    def spectrum_file(name, params, k, t_spec, t, note):
        amp, method = _spectrum(params, k, t, threads)
        args = argparse.Namespace(command="spectrum", alpha=params.alpha, omega=params.omega,
                                  format=fmt, t_spec=t_spec, k_min=float(k[0]), k_max=float(k[-1]),
                                  k_points=int(k.size))
        meta = _meta(args, params, method, {"volterra": 1e-8}, {"figure": figure, "note": note,
                                                                  "t": _time_token(t_spec)})
        path = out / f"{name}.{ext}"
        write_table(str(path), fmt, meta, ["k", "re_Theta", "im_Theta", "abs_Theta_sq"],
                    [k, amp.real, amp.imag, np.abs(amp) ** 2])
        written.append(path)
        return path.name

    if figure == "fig1":
        p = ModelParams(0.01, 0.4)
        k = np.sqrt(FIG1_K2 + np.linspace(-2e-11, 2e-11, 801))
        name = spectrum_file("fig1", p, k, ("inf", None), math.inf,
                             "|Theta(k, inf)| about k^2 = 0.1999489220447")
        script = _gnuplot(figure, [name], f"($1**2-{FIG1_K2}):(sqrt($4))",
                          xlabel="k^2 - 0.1999489220447", ylabel="|Theta(k,inf)|")
    elif figure == "fig2":
        p = ModelParams(1.0, 0.51)
        name = spectrum_file("fig2", p, np.linspace(0.0, 3.0, 3001), ("inf", None), math.inf,
                             "|Theta(k, inf)|")
        script = _gnuplot(figure, [name], "1:(sqrt($4))", ylabel="|Theta(k,inf)|")
    elif figure == "fig3":
        names = [spectrum_file(f"fig3_alpha{a:g}", ModelParams(a, 0.4),
                               np.linspace(0.0, 3.0, 3001), ("inf", None), math.inf,
                               "log |Theta(k, inf)|") for a in (0.5, 1.0, 2.0)]
        script = _gnuplot(figure, names, "1:(sqrt($4))", logscale=True, ylabel="|Theta(k,inf)|")
    elif figure == "fig4":
        p = ModelParams(0.5, 1.51)
        k = np.linspace(0.0, 2.0, 2001)
        names = [spectrum_file(f"fig4_t{tag}", p, k, spec, resolve_time(spec, p), "|Theta(k,t)|^2")
                 for tag, spec in (("5T", ("periods", 5.0)), ("10T", ("periods", 10.0)),
                                   ("inf", ("inf", None)))]
        script = _gnuplot(figure, names, "1:4", ylabel="|Theta(k,t)|^2")
    elif figure == "fig5":
        names = []
        t = np.linspace(0.0, 200.0, 2001)
        for a in (0.5, 0.98, 1.3):
            p = ModelParams(a, 1.51)
            curve = survival_curve(p, t)
            args = argparse.Namespace(command="survival", alpha=a, omega=1.51, format=fmt,
                                      t_min=0.0, t_max=200.0, t_points=2001, route="auto",
                                      tol=1e-8)
            meta = _meta(args, p, "survival/auto", {"volterra": 1e-8, "overlap": 1e-6},
                         {"figure": figure})
            path = out / f"fig5_alpha{a:g}.{ext}"
            write_table(str(path), fmt, meta, ["t", "re_theta", "im_theta", "abs_theta_sq"],
                        [t, curve.theta.real, curve.theta.imag, curve.survival])
            written.append(path)
            names.append(path.name)
        script = _gnuplot(figure, names, "1:4", logscale=True, xlabel="t", ylabel="|theta(t)|^2")
    else:
        p = ModelParams(1.5, 1.52)
        field = LaplaceField(p)
        ts = np.linspace(1.0, 40.0, 40)
        x = np.linspace(-100.0, 100.0, 401)
        cols = [[], [], [], [], []]
        for t in ts:
            psi = invert_moderate(field, t, x).psi
            for c, v in zip(cols, (np.full(x.shape, t), x, psi.real, psi.imag, np.abs(psi) ** 2)):
                c.append(v)
        cols = [np.concatenate(c) for c in cols]
        args = argparse.Namespace(command="wavefunction", alpha=1.5, omega=1.52, format=fmt)
        meta = _meta(args, p, "contour-inversion", {"alias": 24.0},
                     {"figure": figure, "t_grid": [float(t) for t in ts]})
        path = out / f"fig6.{ext}"
        blocks = [(i + 1) * x.size - 1 for i in range(ts.size)]
        write_table(str(path), fmt, meta, ["t", "x", "re_psi", "im_psi", "abs_psi_sq"], cols,
                    blocks=blocks)
        written.append(path)
        script = _gnuplot(figure, [path.name], "2:1:5", surface=True, xlabel="x", ylabel="t")
    if fmt == "csv":
        gp = out / f"{figure}.gp"
        gp.write_text(script, encoding="utf-8")
        written.append(gp)
    return written


def cmd_reproduce(args):
    for path in reproduce_figure(args.figure, args.output_dir, args.format, _threads()):
        print(path, file=sys.stderr)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "survival": cmd_survival,
    "wavefunction": cmd_wavefunction,
    "resonance": cmd_resonance,
    "validate": cmd_validate,
    "reproduce-figure": cmd_reproduce,
}


def run(argv):
    """Parse ``argv`` and run it; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            if args.command:
                raise ConfigError("--config cannot be combined with a command")
            args = parser.parse_args(_config_argv(_load_config(args.config), parser))
        if not args.command:
            raise ConfigError("no command given")
        COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"deltaion: configuration error: {exc}", file=sys.stderr)
        return 2
    except ToleranceFailure as exc:
        print(f"deltaion: {exc}", file=sys.stderr)
        return 1
    except SOLVER_ERRORS as exc:
        print(f"deltaion: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
