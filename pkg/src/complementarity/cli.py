"""Command-line interface.

Exit codes: 0 success, 1 computation failure, 2 usage error.
"""

import argparse
import logging
import os
import sys

from . import REFERENCE_SETUP
from .config import ConfigError, build_config, emit_config, parse_config_values
from .experiment import MODES, generate_intensity_map, run_campaign
from .export import (
    ANALYTIC_HEADER,
    CAMPAIGN_SERIES_HEADER,
    campaign_payload,
    campaign_series_rows,
    ensure_dir,
    fit_summary,
    fmt,
    width_tag,
    write_fit_series,
    write_json,
    write_map_csv,
    write_rows,
    write_scan_csv,
)
from .photon_stats import (
    FitError,
    calibrate_background,
    derive_seed,
    expected_alpha,
    fit_visibility,
    simulate_hbt,
    simulate_scan,
)
from .units import UnitError, parse_angle, parse_frequency, parse_length, parse_time
from .wave_optics import analytic_record

def _typed(parse):
    def convert(text):
        try:
            return parse(text)
        except (UnitError, ValueError) as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    convert.__name__ = parse.__name__
    return convert


# flag dest -> (section, key) in the config schema
OVERRIDES = {
    "wavelength": ("setup", "wavelength"),
    "index": ("setup", "index"),
    "beta": ("setup", "beta"),
    "period_override": ("setup", "period_override"),
    "slit_width": ("grating", "slit_widths"),
    "slit_count": ("grating", "slit_count"),
    "x_step": ("scan", "x_step"),
    "bin_time": ("scan", "bin_time"),
    "periods": ("scan", "periods"),
    "rep_rate": ("source", "repetition_rate"),
    "emission_probability": ("source", "emission_probability"),
    "background_mean": ("source", "background_mean"),
    "collection_efficiency": ("source", "collection_efficiency"),
    "dark_rate": ("detector", "dark_rate"),
    "quantum_efficiency": ("detector", "quantum_efficiency"),
    "seed": ("run", "seed"),
    "mode": ("run", "mode"),
    "out": ("run", "output_dir"),
    "triggers": ("run", "hbt_triggers"),
}


def _common(p, physics=True):
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--seed", type=int, help="random seed (unsigned 64-bit)")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="count", default=0)
    if physics:
        p.add_argument("--wavelength", type=_typed(parse_length), help="e.g. 670nm")
        p.add_argument("--index", type=float, help="biprism refractive index")
        p.add_argument("--beta", type=_typed(parse_angle), help="summit angle, rad by default")
        p.add_argument("--period-override", type=_typed(parse_length),
                       help="grating period differing from the interfringe")
        p.add_argument("--slit-width", type=_typed(parse_length), action="append",
                       help="slit width, repeatable (e.g. 20um)")
        p.add_argument("--slit-count", type=int)


def _scan_flags(p):
    p.add_argument("--x-step", type=_typed(parse_length))
    p.add_argument("--bin-time", type=_typed(parse_time))
    p.add_argument("--periods", type=float, help="scan extent in interference periods")
    p.add_argument("--dark-rate", type=_typed(parse_frequency))
    p.add_argument("--quantum-efficiency", type=float)
    _source_flags(p)


def _source_flags(p):
    p.add_argument("--rep-rate", type=_typed(parse_frequency))
    p.add_argument("--emission-probability", type=float)
    p.add_argument("--background-mean", type=float)
    p.add_argument("--collection-efficiency", type=float)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="complementarity",
        description="Visibility and which-path distinguishability behind a grating.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form V and D per slit width")
    _common(p)

    p = sub.add_parser("scan", help="simulate grating translation scans and fit visibility")
    _common(p)
    _scan_flags(p)
    p.add_argument("--no-grating", action="store_true",
                   help="add a control run with slits as wide as the period")
    p.add_argument("--max-reduced-chi2", type=float)

    p = sub.add_parser("campaign", help="full campaign over slit widths")
    _common(p)
    _scan_flags(p)
    p.add_argument("--mode", choices=MODES)

    p = sub.add_parser("hbt", help="anticorrelation (alpha) measurement")
    _common(p, physics=False)
    _source_flags(p)
    p.add_argument("--quantum-efficiency", type=float)
    p.add_argument("--triggers", type=int)
    p.add_argument("--target-alpha", type=float,
                   help="calibrate the background mean to this expected alpha")

    p = sub.add_parser("map", help="intensity versus (u, x) grid")
    _common(p)
    p.add_argument("--n-u", type=int, default=241)
    p.add_argument("--n-x", type=int, default=161)
    return parser


def resolve_config(args, parser, need_setup=True):
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values = parse_config_values(fh.read())
        except OSError as exc:
            parser.error(f"cannot read config: {exc}")
        except ConfigError as exc:
            parser.error(f"invalid config: {exc}")
    for dest, key in OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        values[key] = tuple(value) if dest == "slit_width" else value
    if not need_setup:
        # hbt does not use the optics; the reference geometry fills the schema
        values.setdefault(("setup", "wavelength"), REFERENCE_SETUP["wavelength"])
        values.setdefault(("setup", "index"), REFERENCE_SETUP["n"])
        values.setdefault(("setup", "beta"), REFERENCE_SETUP["beta"])
    missing = [f"--{k}" for s, k in (("setup", "wavelength"), ("setup", "index"),
                                      ("setup", "beta")) if (s, k) not in values]
    if missing:
        parser.error(f"missing {', '.join(missing)} (give the flags or --config)")
    try:
        config = build_config(values)
    except ConfigError as exc:
        parser.error(str(exc))
    return config, ("run", "output_dir") in values


def _table(header, rows):
    lines = ["  ".join(f"{h:>14}" for h in header)]
    lines += ["  ".join(f"{fmt(v):>14}" for v in row) for row in rows]
    return "\n".join(lines)


def cmd_analytic(args, config, write):
    c = config.campaign
    allow = c.period_override_m is not None
    rows = []
    for a in c.slit_widths_m:
        rec = analytic_record(c.setup, c.grating(a), allow_mismatch=allow)
        rows.append((a, rec.visibility, rec.distinguishability, rec.visibility**2,
                     rec.distinguishability**2, rec.sum_of_squares))
    print(f"interfringe = {fmt(c.setup.interfringe_m)} m, u0 = {fmt(c.setup.spatial_frequency)} 1/m")
    print(_table(ANALYTIC_HEADER, rows))
    if write:
        out = ensure_dir(config.output_dir)
        write_rows(os.path.join(out, "analytic.csv"), ANALYTIC_HEADER, rows)
    return 0


def cmd_scan(args, config, write):
    c = config.campaign
    widths = list(c.slit_widths_m)
    if args.no_grating:
        widths.append(c.period_m)
    out = ensure_dir(config.output_dir) if write else None
    summaries = []
    for i, a in enumerate(widths):
        grating = c.grating(a)
        scan = simulate_scan(c.setup, grating, c.source, c.detectors, 0.0, c.x_step_m,
                             c.n_points, c.bin_time_s, derive_seed(c.seed, i))
        fits = [fit_visibility(scan, c.period_m, det, args.max_reduced_chi2) for det in (1, 2)]
        v_th = analytic_record(c.setup, grating, allow_mismatch=c.period_override_m is not None)
        summaries.append(fit_summary(a, scan, fits, v_th.visibility))
        print(f"a = {fmt(a)} m: V_fit(P1) = {fits[0].visibility:.5f} +- {fits[0].stderr:.5f}, "
              f"V_fit(P2) = {fits[1].visibility:.5f} +- {fits[1].stderr:.5f}, "
              f"V_analytic = {v_th.visibility:.5f}")
        if out:
            tag = width_tag(a)
            write_scan_csv(os.path.join(out, f"scan_{tag}.csv"), scan)
            write_fit_series(os.path.join(out, f"scan_fit_{tag}.csv"), scan, fits, c.period_m)
    if out:
        write_json(os.path.join(out, "fit_summary.json"),
                   {"schema_version": 1, "scans": summaries})
    return 0


def cmd_campaign(args, config, write):
    report = run_campaign(config.campaign)
    rows = list(campaign_series_rows(report))
    print(_table(CAMPAIGN_SERIES_HEADER, rows))
    print(f"mean V^2 + D^2 = {report.mean_sum_sq:.5f} +- {report.mean_sum_sq_err:.5f}")
    if write:
        out = ensure_dir(config.output_dir)
        text = emit_config(config)
        write_json(os.path.join(out, "campaign_report.json"), campaign_payload(report, text))
        write_rows(os.path.join(out, "campaign_series.csv"), CAMPAIGN_SERIES_HEADER, rows)
        with open(os.path.join(out, "campaign.ini"), "w", encoding="utf-8") as fh:
            fh.write(text)
        for w in report.widths:
            if w.scan is not None:
                write_scan_csv(os.path.join(out, f"scan_{width_tag(w.slit_width_m)}.csv"), w.scan)
    return 0


def cmd_hbt(args, config, write):
    c = config.campaign
    source = c.source
    if args.target_alpha is not None:
        source = calibrate_background(args.target_alpha, source.emission_probability,
                                      source.collection_efficiency,
                                      c.detectors.quantum_efficiency, source.repetition_rate_hz)
        print(f"calibrated background_mean = {source.background_mean:.9g}")
    result = simulate_hbt(source, c.detectors, config.hbt_triggers, c.seed)
    expected = expected_alpha(source, c.detectors)
    print(f"N_T = {result.n_triggers}")
    print(f"N_1 = {result.n1}")
    print(f"N_2 = {result.n2}")
    print(f"N_C = {result.n_coincidence}")
    print(f"alpha = {result.alpha:.5f} +- {result.alpha_err:.5f} (expected {expected:.5f})")
    if write:
        out = ensure_dir(config.output_dir)
        write_json(os.path.join(out, "hbt.json"), {
            "schema_version": 1, "n_triggers": result.n_triggers, "n1": result.n1,
            "n2": result.n2, "n_coincidence": result.n_coincidence, "alpha": result.alpha,
            "alpha_err": result.alpha_err, "alpha_expected": expected,
            "emission_probability": source.emission_probability,
            "background_mean": source.background_mean, "seed": c.seed,
        })
    return 0


def cmd_map(args, config, write):
    c = config.campaign
    out = ensure_dir(config.output_dir)
    for a in c.slit_widths_m:
        grid = generate_intensity_map(c.setup, a, args.n_u, args.n_x, c.slit_count)
        path = os.path.join(out, f"map_{width_tag(a)}.csv")
        write_map_csv(path, grid)
        print(f"wrote {path}")
    return 0


COMMANDS = {"analytic": cmd_analytic, "scan": cmd_scan, "campaign": cmd_campaign,
            "hbt": cmd_hbt, "map": cmd_map}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    config, explicit_out = resolve_config(args, parser, need_setup=args.command != "hbt")
    # files are written when --out (or output_dir in the config) is given; maps always
    write = explicit_out or args.command == "map"
    try:
        return COMMANDS[args.command](args, config, write)
    except (FitError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
