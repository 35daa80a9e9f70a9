"""Command-line front-end.

Every subcommand reads the TOML config (``--config`` or ``$TOPDC_CONFIG``),
applies trailing ``key=value`` overrides and writes artifacts named
``<scenario>.<artifact>.{csv,json}`` into ``--output-dir``. CSV artifacts
get a ``.meta.json`` sidecar holding the effective configuration; JSON
artifacts embed it under ``metadata``. Failures print a JSON error record
to stderr and exit with status 2.
"""

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .config import ENV_VAR, load_config
from .constants import default_constants
from .dispersion import Polarization, effective_index, group_velocity
from .errors import ConfigInvalid, TopdcError
from .rates import RegimeWarning
from .scenarios import (ORIENTATION_CSV_HEADER, SPECTRUM_CSV_HEADER, ScenarioConfig,
                        contour_csv_text, csv_text, metadata_json, run_contour,
                        run_count_rate_table, run_orientation_scan, run_seeded_spectrum,
                        run_unseeded_spectrum)

SUBCOMMANDS = ("dispersion", "contour", "orientation-scan", "spectrum", "seeded-spectrum",
               "rates", "figures")

FIGURE_FILES = ("fig2_contour.csv", "fig3_orientation.csv", "fig4_spectrum.csv",
                "fig5_seeded_spectrum.csv", "fig6_rates.json")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"TOML config file (default: ${ENV_VAR})")
    common.add_argument("--output-dir", default=".", help="directory for artifacts")
    common.add_argument("--scenario", default="default", help="scenario name used in file names")
    common.add_argument("overrides", nargs="*", metavar="key=value",
                        help="config overrides, e.g. pump.power_mW=200")

    p = argparse.ArgumentParser(prog="topdc",
                                description="Third-order down-conversion rate calculator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, metavar="subcommand")

    d = sub.add_parser("dispersion", parents=[common], help="index and group velocity as JSON")
    d.add_argument("--lambda-nm", type=float, required=True)
    d.add_argument("--pol", choices=[x.value for x in Polarization], default="ordinary")
    d.add_argument("--angle-deg", type=float, default=None,
                   help="angle to the optic axis (default: crystal orientation)")

    c = sub.add_parser("contour", parents=[common], help="mode-2 contours at fixed mode 3")
    c.add_argument("--orientation-deg", type=float, nargs="+", default=None)
    sub.add_parser("orientation-scan", parents=[common], help="singles density versus orientation")
    sub.add_parser("spectrum", parents=[common], help="unseeded mode-3 spectrum map")
    sub.add_parser("seeded-spectrum", parents=[common], help="seeded mode-2 spectrum map")
    sub.add_parser("rates", parents=[common], help="count-rate table as JSON")
    sub.add_parser("figures", parents=[common], help="all figure artifacts with fixed names")
    return p


def _metadata(args, cfg, subcommand):
    return {"subcommand": subcommand, "scenario": args.scenario,
            "config_path": args.config or os.environ.get(ENV_VAR),
            "overrides": list(args.overrides), "version": __version__, "config": cfg}


def _write(out_dir, name, text):
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _write_csv(out_dir, name, text, meta):
    paths = [_write(out_dir, name, text)]
    paths.append(_write(out_dir, name[:-4] + ".meta.json", metadata_json(meta) + "\n"))
    return paths


def _json_with_meta(payload, meta):
    payload = dict(payload)
    payload["metadata"] = meta
    return metadata_json(payload) + "\n"


def _dispersion(args, cfg, meta):
    sc = ScenarioConfig.from_config(cfg, args.scenario)
    cr = sc.crystal
    if not args.lambda_nm > 0:
        raise ConfigInvalid("--lambda-nm must be positive")
    omega = 2 * np.pi * default_constants().c / (args.lambda_nm * 1e-9)
    psi = cr.orientation_theta_c if args.angle_deg is None else np.radians(args.angle_deg)
    n = effective_index(cr, args.pol, psi, omega)
    vg = group_velocity(cr, args.pol, psi, omega)
    out = {"lambda_nm": args.lambda_nm, "pol": args.pol, "angle_to_axis_deg": float(np.degrees(psi)),
           "n": n, "group_velocity_m_per_s": vg, "group_index": default_constants().c / vg}
    sys.stdout.write(_json_with_meta(out, meta))
    return []


def _run(args, cfg, meta):
    sc = ScenarioConfig.from_config(cfg, args.scenario)
    out = args.output_dir
    name = args.scenario
    written = []
    cmd = args.subcommand
    if cmd == "contour":
        written += _write_csv(out, f"{name}.contour.csv",
                              contour_csv_text(run_contour(sc, args.orientation_deg)), meta)
    elif cmd == "orientation-scan":
        r = run_orientation_scan(sc)
        written += _write_csv(out, f"{name}.orientation.csv",
                              csv_text(ORIENTATION_CSV_HEADER, r.csv_rows()), meta)
        print(json.dumps({"argmax_deg": r.argmax_deg}))
    elif cmd == "spectrum":
        m = run_unseeded_spectrum(sc)
        written += _write_csv(out, f"{name}.spectrum.csv",
                              csv_text(SPECTRUM_CSV_HEADER, m.csv_rows()), meta)
    elif cmd == "seeded-spectrum":
        m = run_seeded_spectrum(sc)
        written += _write_csv(out, f"{name}.seeded_spectrum.csv",
                              csv_text(SPECTRUM_CSV_HEADER, m.csv_rows()), meta)
    elif cmd == "rates":
        written.append(_write(out, f"{name}.rates.json",
                              _json_with_meta(run_count_rate_table(sc).to_dict(), meta)))
    elif cmd == "figures":
        written += _write_csv(out, FIGURE_FILES[0], contour_csv_text(run_contour(sc)), meta)
        r = run_orientation_scan(sc)
        written += _write_csv(out, FIGURE_FILES[1],
                              csv_text(ORIENTATION_CSV_HEADER, r.csv_rows()), meta)
        written += _write_csv(out, FIGURE_FILES[2], csv_text(
            SPECTRUM_CSV_HEADER, run_unseeded_spectrum(sc).csv_rows()), meta)
        written += _write_csv(out, FIGURE_FILES[3], csv_text(
            SPECTRUM_CSV_HEADER, run_seeded_spectrum(sc).csv_rows()), meta)
        written.append(_write(out, FIGURE_FILES[4],
                              _json_with_meta(run_count_rate_table(sc).to_dict(), meta)))
    return written


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        meta = _metadata(args, cfg, args.subcommand)
        if args.subcommand == "dispersion":
            _dispersion(args, cfg, meta)
            return 0
        os.makedirs(args.output_dir, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            for path in _run(args, cfg, meta):
                print(path, file=sys.stderr)
    except TopdcError as exc:
        print(json.dumps(exc.record()), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
