"""Command-line front end.

Subcommands: spectrum, tp, fit-s21, reset, readout. Every run writes a
`resolved-config.json` next to the primary output so that re-running with
`--config resolved-config.json` reproduces the outputs bit-identically.

Exit codes: 0 success, 2 input error, 3 numerical non-convergence or
unreachable target.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import filter_model, network, plotting, reset, spectrum, touchstone
from .readout import IQShotSet, MalformedShotFileError, assignment_matrix, error_breakdown, fit_blobs

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class CliInputError(Exception):
    pass


def _parse_band(text: str):
    """'<ghz>:<ghz>' -> (f_lo_hz, f_hi_hz)."""
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError:
        raise CliInputError(f"band must look like '4.5:5.5' (GHz), got {text!r}")
    if not hi > lo:
        raise CliInputError(f"band must be ascending, got {text!r}")
    return lo * 1e9, hi * 1e9


def _write_resolved_config(out_path: Path, command: str, args: dict):
    config = {"command": command}
    config.update(
        {
            k: v
            for k, v in sorted(args.items())
            if v is not None and k not in ("func", "command", "config")
        }
    )
    path = out_path.parent / "resolved-config.json"
    with open(path, "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_geometry(args):
    if getattr(args, "geometry", None):
        return filter_model.load_geometry(args.geometry)
    return filter_model.preset(args.preset)


def _figure_path(out_path: Path, fmt: str) -> Path:
    ext = ".svg" if fmt == "svg" else ".png"
    return out_path.with_suffix(ext)


def cmd_spectrum(args) -> int:
    band = _parse_band(args.band)
    if args.points < 1:
        raise CliInputError("--points must be >= 1")
    if args.netlist:
        netlist = network.load_netlist(args.netlist)
    else:
        geom = _resolve_geometry(args)
        netlist = filter_model.build_netlist(geom, args.variant, terminated=False)
    if getattr(args, "spacing", "linear") == "log":
        freqs = np.geomspace(band[0], band[1], args.points)
    else:
        freqs = np.linspace(band[0], band[1], args.points)
    out_path = Path(args.out)
    port_names = [p.name for p in netlist.ports]
    if "1" not in port_names or "2" not in port_names:
        raise CliInputError("netlist must declare ports '1' and '2' for S21")
    i1, i2 = port_names.index("1"), port_names.index("2")

    warnings = 0
    rows = []
    s_mats = []
    for f in freqs:
        try:
            s = network.s_parameters(netlist, f)
            s21 = s[i2, i1]
            rows.append((f, s21.real, s21.imag, 20 * np.log10(max(abs(s21), 1e-300))))
            s_mats.append(s)
        except network.SingularFrequencyError:
            rows.append((f, float("nan"), float("nan"), float("nan")))
            s_mats.append(np.full((len(port_names), len(port_names)), np.nan + 0j))
            warnings += 1

    with open(out_path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["f_hz", "s21_re", "s21_im", "s21_db"])
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    if args.format == "touchstone":
        touchstone.write_touchstone(out_path.with_suffix(f".s{len(port_names)}p"), freqs, s_mats)
    if args.figure:
        plotting.plot_spectrum(freqs, [r[3] for r in rows], _figure_path(out_path, args.format))
    _write_resolved_config(out_path, "spectrum", vars(args))
    if warnings:
        print(f"warning: {warnings} singular frequency points flagged", file=sys.stderr)
    return EXIT_OK


def cmd_tp(args) -> int:
    band = _parse_band(args.band)
    if args.points < 1:
        raise CliInputError("--points must be >= 1")
    geom = _resolve_geometry(args)
    out_path = Path(args.out)
    variants = ["with_stub", "without_stub"] if args.variant == "both" else [args.variant]
    curves = []
    for variant in variants:
        curve = filter_model.tp_curve(geom, variant, band, args.points, args.method)
        curves.append(curve)
        target = out_path if len(variants) == 1 else out_path.with_stem(
            f"{out_path.stem}-{variant}"
        )
        curve.to_csv(target)
    if args.figure:
        plotting.plot_tp(curves, _figure_path(out_path, "png"))
    _write_resolved_config(out_path, "tp", vars(args))
    return EXIT_OK


def _load_spectrum_data(path: str) -> spectrum.SpectrumData:
    if path.endswith((".s1p", ".s2p")):
        freqs, mats = touchstone.read_touchstone(path)
        s21 = np.array([m[1, 0] if m.shape[0] > 1 else m[0, 0] for m in mats])
        return spectrum.SpectrumData(freqs, 20 * np.log10(np.abs(s21)))
    return spectrum.SpectrumData.from_csv(path)


def cmd_fit_s21(args) -> int:
    data = _load_spectrum_data(args.data)
    if args.window:
        data = data.window(*_parse_band(args.window))
    if data.frequencies.size < 10:
        raise CliInputError("fewer than 10 data points in the fit window")
    initial = spectrum.auto_initial_guess(data, args.resonators)
    result = spectrum.fit_s21(data, initial)
    out_path = Path(args.out)
    with open(out_path, "w") as fh:
        json.dump(result.to_dict(), fh, indent=2)
        fh.write("\n")
    if args.figure:
        fit_db = spectrum.s21_db_with_background(result.params, data.frequencies)
        plotting.plot_spectrum(
            data.frequencies, data.s21_db, _figure_path(out_path, "png"), fit_db=fit_db
        )
    _write_resolved_config(out_path, "fit-s21", vars(args))
    if not result.converged:
        print("warning: fit did not converge", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _reset_params(args, prefix: str) -> reset.ResetParams:
    g = getattr(args, f"{prefix}_g")
    kappa = getattr(args, f"{prefix}_kappa")
    floor = getattr(args, f"{prefix}_floor")
    if g is None or kappa is None:
        raise CliInputError(f"--{prefix}-g and --{prefix}-kappa are required for this mode")
    return reset.ResetParams(g, kappa, floor)


def cmd_reset(args) -> int:
    out_path = Path(args.out)
    if args.mode == "evaluate":
        params = _reset_params(args, "eg")
        times = np.linspace(0.0, args.t_max, args.points)
        p_e = reset.residual_excitation(params, times)
        reset.save_curve_csv(out_path, times, p_e)
        payload = {}
        if args.threshold is not None:
            try:
                payload["time_to_threshold_s"] = reset.time_to_threshold(params, args.threshold)
            except reset.UnreachableThresholdError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_NUMERIC
        if args.figure:
            plotting.plot_reset_curve(
                times, p_e, _figure_path(out_path, "png"), threshold=args.threshold
            )
        if payload:
            with open(out_path.with_suffix(".json"), "w") as fh:
                json.dump(payload, fh, indent=2)
                fh.write("\n")
    elif args.mode == "fit":
        if not args.curve:
            raise CliInputError("--curve is required for fit mode")
        times, p_e = reset.load_curve_csv(args.curve)
        result = reset.fit_reset_curve(times, p_e)
        with open(out_path, "w") as fh:
            json.dump(result.to_dict(), fh, indent=2)
            fh.write("\n")
        if args.figure:
            plotting.plot_reset_curve(times, p_e, _figure_path(out_path, "png"), fit=result.params)
        if not result.converged:
            print("warning: reset-curve fit did not converge", file=sys.stderr)
            return EXIT_NUMERIC
    else:  # cascade or lru
        fe = _reset_params(args, "fe")
        eg = _reset_params(args, "eg")
        t_rst_e = 0.0 if args.mode == "lru" else args.t_rst_e
        schedule = reset.CascadeSchedule(args.t_rst_f, t_rst_e, 0.0, 0.0)
        result = reset.cascade_evaluate(schedule, fe, eg, args.initial_state)
        with open(out_path, "w") as fh:
            json.dump(result.to_dict(), fh, indent=2)
            fh.write("\n")
    _write_resolved_config(out_path, "reset", vars(args))
    return EXIT_OK


def cmd_readout(args) -> int:
    shots = IQShotSet.from_csv(args.shots)
    shots.validate(min_shots=args.min_shots)
    blobs = fit_blobs(shots)
    matrix = assignment_matrix(shots, blobs)
    breakdown = error_breakdown(shots, blobs)
    out_path = Path(args.out)
    payload = {
        "assignment": matrix.to_dict(),
        "errors": breakdown.to_dict(),
        "blobs": {
            label: {
                "mean": blob.mean.tolist(),
                "covariance": blob.covariance.tolist(),
                "weight": blob.weight,
            }
            for label, blob in blobs.items()
        },
    }
    with open(out_path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    if args.figure:
        plotting.plot_iq_blobs(shots, blobs, _figure_path(out_path, args.format))
    _write_resolved_config(out_path, "readout", vars(args))
    return EXIT_OK


def _add_common(parser):
    parser.add_argument("--out", required=True, help="primary output file path")
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--seed", type=int, default=0, help="seed recorded for reproducibility")
    parser.add_argument(
        "--figure", action=argparse.BooleanOptionalAction, default=True,
        help="also render a figure next to the output",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="purcellkit",
        description="Microwave-network analysis toolkit for multi-mode Purcell filters",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="S21 sweep of a netlist or filter preset")
    p.add_argument("--netlist", help="netlist JSON file")
    p.add_argument("--preset", default="default", help="geometry preset name")
    p.add_argument("--geometry", help="geometry JSON file (overrides --preset)")
    p.add_argument("--variant", default="with_stub", choices=filter_model.VARIANTS)
    p.add_argument("--band", default="3:7", help="frequency band '<ghz>:<ghz>'")
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--spacing", default="linear", choices=["linear", "log"])
    p.add_argument("--format", default="csv", choices=["csv", "touchstone", "svg"])
    _add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("tp", help="Purcell-limited relaxation time sweep")
    p.add_argument("--preset", default="default")
    p.add_argument("--geometry", help="geometry JSON file (overrides --preset)")
    p.add_argument("--variant", default="with_stub", choices=list(filter_model.VARIANTS) + ["both"])
    p.add_argument("--band", default="4:6")
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--method", default="full_admittance", choices=["full_admittance", "output_power"])
    _add_common(p)
    p.set_defaults(func=cmd_tp)

    p = sub.add_parser("fit-s21", help="fit a transmission spectrum")
    p.add_argument("--data", required=True, help="CSV (f_hz, s21_db) or touchstone file")
    p.add_argument("--window", help="fit window '<ghz>:<ghz>'")
    p.add_argument("--resonators", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_fit_s21)

    p = sub.add_parser("reset", help="reset dynamics: evaluate, fit, cascade, lru")
    p.add_argument("--mode", required=True, choices=["evaluate", "fit", "cascade", "lru"])
    p.add_argument("--curve", help="input curve CSV for fit mode")
    p.add_argument("--eg-g", type=float, help="e-g coupling g_qf (Hz)")
    p.add_argument("--eg-kappa", type=float, help="e-g filter linewidth (Hz)")
    p.add_argument("--eg-floor", type=float, default=0.0)
    p.add_argument("--fe-g", type=float, help="f-e coupling (Hz)")
    p.add_argument("--fe-kappa", type=float, help="f-e filter linewidth (Hz)")
    p.add_argument("--fe-floor", type=float, default=0.0)
    p.add_argument("--t-rst-f", type=float, default=0.0, help="f-e stage duration (s)")
    p.add_argument("--t-rst-e", type=float, default=0.0, help="e-g stage duration (s)")
    p.add_argument("--t-max", type=float, default=500e-9, help="curve duration for evaluate (s)")
    p.add_argument("--points", type=int, default=501)
    p.add_argument("--threshold", type=float, help="report last crossing of this residual")
    p.add_argument("--initial-state", default="f", choices=["g", "e", "f"])
    _add_common(p)
    p.set_defaults(func=cmd_reset)

    p = sub.add_parser("readout", help="IQ shot analysis and error budget")
    p.add_argument("--shots", required=True, help="CSV with columns label,i,q")
    p.add_argument("--min-shots", type=int, default=100)
    p.add_argument("--format", default="csv", choices=["csv", "svg"])
    _add_common(p)
    p.set_defaults(func=cmd_readout)
    return parser


def _apply_config_file(argv):
    """Merge a --config JSON file under the explicit flags."""
    idx = argv.index("--config")
    try:
        config_path = argv[idx + 1]
    except IndexError:
        raise CliInputError("--config requires a file path")
    with open(config_path) as fh:
        config = json.load(fh)
    rest = [arg for i, arg in enumerate(argv) if i not in (idx, idx + 1)]
    command = config.pop("command", None)
    if rest and not rest[0].startswith("-"):
        command = rest.pop(0)
    if command is None:
        raise CliInputError("config file does not name a command")
    merged = [command]
    for key, value in config.items():
        if key in ("func", "config"):
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            merged.append(flag if value else f"--no-{key.replace('_', '-')}")
        else:
            merged.extend([flag, str(value)])
    # explicit flags go last so they override config-file values
    merged.extend(rest)
    return merged


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if "--config" in argv:
            argv = _apply_config_file(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (
        CliInputError,
        FileNotFoundError,
        MalformedShotFileError,
        network.NetlistError,
        ValueError,
        json.JSONDecodeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
