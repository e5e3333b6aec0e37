"""``spinres`` command line.

Exit codes: 0 success, 2 config/argument error, 3 data error, 4 fit did not
converge, 5 I/O error.  Errors are reported on stderr as a single line
``E_CODE: message``; ``SPINRES_NO_COLOR`` turns off the ANSI colouring of
the code.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cavity_model import s21_trace, total_linewidth
from .config import example_config_text, load_config, parse_config
from .constants import MU_B_MHZ_PER_T
from .errors import ConfigError, ConvergenceError, OutputError, SpinresError
from .fitting import fit, initial_guess
from .spin_hamiltonian import diagonalize, build_hamiltonian, effective_g, transitions
from .svgplot import Series, gnuplot_script, line_plot
from .sweepfile import SweepFile, fmt, read_sweep_file, write_sweep_file, write_text
from .thermal import extrapolate_zero_T, g_coll_at_temperature, polarization


class UsageError(ConfigError):
    code = "E_ARGS"


def _use_color(stream):
    return not os.environ.get("SPINRES_NO_COLOR") and hasattr(stream, "isatty") and stream.isatty()


def _report_error(code, message, stream=None):
    stream = stream or sys.stderr
    if _use_color(stream):
        code = f"\033[31m{code}\033[0m"
    print(f"{code}: {message}", file=stream)


def _load(args):
    if args.config is None:
        return parse_config(example_config_text(), path="<example er_yso.cfg>")
    return load_config(args.config)


def _out_dir(args, cfg):
    return Path(args.out or (cfg.output_dir if cfg is not None else None) or ".")


def _quantity(text, units, name):
    """'37.7 mT' / '37.7mT' / '0.0377' (base unit) -> float."""
    s = text.strip().replace(" ", "")
    for unit in sorted(units, key=len, reverse=True):
        if unit and s.endswith(unit):
            s, scale = s[: -len(unit)], units[unit]
            break
    else:
        scale = units[""]
    try:
        return float(s) * scale
    except ValueError:
        raise UsageError(f"cannot parse {name} {text!r}") from None


FIELD_UNITS = {"": 1.0, "T": 1.0, "mT": 1e-3, "uT": 1e-6}
TEMP_UNITS = {"": 1.0, "K": 1.0, "mK": 1e-3}


def cmd_spectrum(args):
    cfg = _load(args)
    cfg.require("site")
    if args.field is None:
        raise UsageError("spectrum needs --field (e.g. --field '37.7 mT')")
    b = _quantity(args.field, FIELD_UNITS, "field")
    if b < 0:
        raise UsageError("field magnitude must be non-negative")
    n = cfg.sweep.direction
    f_r = cfg.cavity.f_r_mhz
    lines = [
        f"# field = {1e3 * b:.6g} mT along ({', '.join(f'{x:.6g}' for x in n)}) in (D1, D2, b)",
        f"# f_r = {f_r:.6g} MHz; field step = {1e3 * cfg.sweep.B_step:.6g} mT",
        "# site lower upper frequency_MHz strength flag",
    ]
    for sys_ in cfg.spin_systems():
        eig = diagonalize(build_hamiltonian(sys_, b * n))
        table = transitions(sys_, b * n, cfg.sweep.drive, args.floor, eig=eig)
        geff = effective_g(sys_.g, n)
        tol = geff * MU_B_MHZ_PER_T * cfg.sweep.B_step
        lines.append(f"# site {sys_.label}: g_eff = {geff:.6g}, transitions = {len(table)}")
        for t in table:
            flag = "resonant" if abs(t.frequency - f_r) <= tol else "-"
            lines.append(f"{sys_.label} {t.lower} {t.upper} {fmt(t.frequency)} {fmt(t.strength)} {flag}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        write_text(Path(args.out) / "spectrum.txt", text)
    return 0


def _sweep_meta(cfg, source):
    meta = {
        "field_unit": "T",
        "fwhm_unit": "MHz",
        "f_r": f"{fmt(cfg.cavity.f_r)} GHz",
        "kappa": f"{fmt(cfg.cavity.kappa)} MHz",
        "lines": " ".join(t.label for t in cfg.lines) or "none",
        "source": source,
    }
    if cfg.sweep.temperature is not None:
        meta["temperature"] = f"{fmt(cfg.sweep.temperature)} K"
    return meta


def _plot_sweep(out, stem, b, series, args, ylabel="FWHM (MHz)"):
    svg = line_plot(series, xlabel="B (mT)", ylabel=ylabel)
    write_text(out / f"{stem}.svg", svg)
    if args.gnuplot:
        write_text(out / f"{stem}.gp", gnuplot_script(f"{stem}.csv", [("($1*1e3)", 2)], "B (mT)", ylabel, f"{stem}_gnuplot.svg"))


def _simulate(cfg):
    b = cfg.sweep.grid()
    return b, total_linewidth(cfg.cavity, cfg.lines, b)


def cmd_sweep(args):
    cfg = _load(args)
    out = _out_dir(args, cfg)
    b, y = _simulate(cfg)
    sf = SweepFile("fwhm", np.column_stack([b, y]), _sweep_meta(cfg, "sweep"))
    write_sweep_file(out / "sweep.csv", sf)
    _plot_sweep(out, "sweep", b, [Series(1e3 * b, y, "model")], args)
    if args.s21:
        span = cfg.sweep.probe_span or 10.0 * cfg.cavity.kappa
        probe = cfg.cavity.f_r + 1e-3 * span * np.linspace(-0.5, 0.5, cfg.sweep.probe_points)
        rows = []
        for bi in b:
            mag, ph = s21_trace(cfg.cavity, cfg.lines, bi, probe, cfg.db_offset)
            rows.append(np.column_stack([np.full(probe.size, bi), probe, mag, ph]))
        meta = {"field_unit": "T", "f_unit": "GHz", "db_offset": f"{fmt(cfg.db_offset)} dB"}
        write_sweep_file(out / "s21.csv", SweepFile("s21", np.vstack(rows), meta))
    print(f"wrote {out / 'sweep.csv'} ({b.size} points)")
    return 0


def cmd_synth(args):
    if args.noise < 0:
        raise UsageError(f"noise must be non-negative, got {args.noise}")
    cfg = _load(args)
    out = _out_dir(args, cfg)
    b, clean = _simulate(cfg)
    rng = np.random.default_rng(args.seed)
    y = clean * (1.0 + args.noise * rng.standard_normal(b.size)) if args.noise > 0 else clean
    meta = _sweep_meta(cfg, "synth")
    meta["noise"] = fmt(args.noise)
    meta["seed"] = str(args.seed)
    write_sweep_file(out / "synth.csv", SweepFile("fwhm", np.column_stack([b, y]), meta))
    _plot_sweep(out, "synth", b, [Series(1e3 * b, y, "synthetic", "points"), Series(1e3 * b, clean, "model")], args)
    print(f"wrote {out / 'synth.csv'} ({b.size} points, noise {args.noise}, seed {args.seed})")
    return 0


def _parse_fix(items):
    fixed = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--fix expects name=value, got {item!r}")
        name, value = item.split("=", 1)
        try:
            fixed[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--fix {name}: cannot parse value {value!r}") from None
    return fixed


def format_report(result, source=None, notes=()):
    lines = ["# spinres fit report", "# units: kappa, gamma, g_coll in MHz; g dimensionless"]
    if source:
        lines.append(f"# source = {source}")
    lines.extend(f"# {n}" for n in notes)
    unc = result.uncertainties
    for name in result.names:
        value = fmt(result.value(name))
        if name in unc:
            lines.append(f"{name} = {value} ± {fmt(unc[name])}")
        else:
            lines.append(f"{name} = {value} (fixed)")
    lines.append(f"converged = {'true' if result.converged else 'false'}")
    lines.append(f"rms_residual = {fmt(result.rms_residual)}")
    lines.append(f"iterations = {result.iterations}")
    return "\n".join(lines) + "\n"


def cmd_fit(args):
    if args.sweep is None:
        raise UsageError("fit needs a sweep file")
    sf = read_sweep_file(args.sweep)
    sweep = sf.to_field_sweep()
    cfg = _load(args) if args.config is not None else None
    f_r = sf.f_r_ghz() or (cfg.cavity.f_r if cfg else None)
    if f_r is None:
        raise UsageError("cavity frequency unknown: add f_r to the sweep header or pass --config")
    if args.peaks is not None:
        labels = [f"p{k + 1}" for k in range(args.peaks)]
    else:
        if cfg is None:
            cfg = _load(args)
        lo, hi = sweep.field[0], sweep.field[-1]
        inside = [t for t in cfg.lines if lo <= t.resonance_field(f_r) <= hi]
        inside.sort(key=lambda t: t.resonance_field(f_r))
        labels = [t.label for t in inside]
        if not labels:
            raise UsageError("no configured line resonates inside the sweep range; use --peaks N")
    spec = initial_guess(sweep, len(labels), f_r, labels)
    fixed = _parse_fix(args.fix)
    if fixed:
        spec = spec.with_fixed(**fixed)
    result = fit(sweep, spec, max_iter=args.max_iter)
    notes = []
    if sweep.sigma is None:
        notes.append("no sigma column: uncertainties assume sigma = 1 MHz per point")
    report = format_report(result, source=str(args.sweep), notes=notes)
    out = _out_dir(args, cfg)
    write_text(out / "fit_report.txt", report)
    b = sweep.field
    dense = np.linspace(b[0], b[-1], max(400, b.size))
    model = total_linewidth(result.cavity, result.transitions, dense)
    write_text(
        out / "fit.svg",
        line_plot([Series(1e3 * b, sweep.fwhm, "data", "points"), Series(1e3 * dense, model, "fit")],
                  xlabel="B (mT)", ylabel="FWHM (MHz)"),
    )
    sys.stdout.write(report)
    if not result.converged and not args.allow_nonconverged:
        raise ConvergenceError(f"fit did not converge in {result.iterations} iterations")
    return 0


def cmd_polarization(args):
    cfg = None
    f = args.frequency
    if f is None:
        cfg = _load(args)
        f = cfg.cavity.f_r
    if not f > 0:
        raise UsageError("frequency must be positive")
    out = Path(args.out) if args.out else None
    if args.points:
        pts = read_sweep_file(args.points).to_thermal_points()
        g0, rms = extrapolate_zero_T(pts, f)
        temps = np.array([p.temperature for p in pts])
        meas = np.array([p.g_coll_measured for p in pts])
        lines = [f"# f = {fmt(f)} GHz", f"g0 = {fmt(g0)}", f"rms_residual = {fmt(rms)}"]
        dense = np.linspace(temps.min(), temps.max(), 200)
        series = [Series(1e3 * temps, meas, "measured", "points"),
                  Series(1e3 * dense, g_coll_at_temperature(g0, f, dense), "model")]
        ylabel = "g_coll (MHz)"
    else:
        if not args.temperatures:
            raise UsageError("polarization needs --temperatures or --points")
        temps = np.array([_quantity(t, TEMP_UNITS, "temperature") for t in args.temperatures.split(",")])
        if np.any(~(temps > 0)):
            raise UsageError("temperatures must be positive")
        pol = np.atleast_1d(polarization(f, temps))
        header = "T_K polarization" + (" g_coll_MHz" if args.g0 is not None else "")
        lines = [f"# f = {fmt(f)} GHz", f"# {header}"]
        for k, t in enumerate(temps):
            row = f"{fmt(t)} {fmt(pol[k])}"
            if args.g0 is not None:
                row += f" {fmt(args.g0 * np.sqrt(pol[k]))}"
            lines.append(row)
        if args.g0 is not None:
            series = [Series(1e3 * temps, args.g0 * np.sqrt(pol), "g_coll")]
            ylabel = "g_coll (MHz)"
        else:
            series = [Series(1e3 * temps, pol, "polarization")]
            ylabel = "polarization"
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out is not None:
        write_text(out / "polarization.txt", text)
        write_text(out / "polarization.svg", line_plot(series, xlabel="T (mK)", ylabel=ylabel))
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "fit": cmd_fit,
    "polarization": cmd_polarization,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (default: bundled Er:YSO example)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")

    p = _Parser(prog="spinres", description="Spin ensemble / resonator simulation and fitting")
    p.add_argument("--version", action="version", version=f"spinres {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("spectrum", parents=[common], help="transition table at one field")
    s.add_argument("--field", help="field magnitude, e.g. '37.7 mT'")
    s.add_argument("--floor", type=float, default=1e-6, help="minimum dipole strength")

    s = sub.add_parser("sweep", parents=[common], help="simulate FWHM vs field")
    s.add_argument("--s21", action="store_true", help="also write S21 traces (schema=s21)")

    s = sub.add_parser("synth", parents=[common], help="simulated sweep with noise")
    s.add_argument("--noise", type=float, default=0.01, help="relative Gaussian noise")
    s.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("fit", parents=[common], help="fit a FWHM sweep")
    s.add_argument("sweep", nargs="?", help="schema=fwhm sweep file")
    s.add_argument("--fix", action="append", metavar="NAME=VALUE")
    s.add_argument("--peaks", type=int, help="number of lines (default: configured lines in range)")
    s.add_argument("--allow-nonconverged", action="store_true")
    s.add_argument("--max-iter", type=int, default=200)

    s = sub.add_parser("polarization", parents=[common], help="thermal polarization / g_coll(T)")
    s.add_argument("--frequency", type=float, help="transition frequency in GHz (default: cavity f_r)")
    s.add_argument("--temperatures", help="comma-separated, e.g. '70mK,100mK,0.5'")
    s.add_argument("--g0", type=float, help="zero-temperature g_coll in MHz")
    s.add_argument("--points", help="schema=thermal file to extrapolate g0 from")
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except SpinresError as e:
        _report_error(e.code, str(e))
        return e.exit_code
    except OSError as e:
        _report_error(OutputError.code, str(e))
        return OutputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
