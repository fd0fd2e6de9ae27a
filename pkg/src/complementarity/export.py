"""File formats written by the command-line tools.

Numbers are written with 9 significant digits (``format(v, ".9g")``) and
'.' as decimal separator; counts are written as integers. Headers and JSON
keys are pinned by ``SCHEMA_VERSION`` and by golden-file tests.

Scan CSV::

    x_m,counts_p1,counts_p2,expected_rate_p1,expected_rate_p2

Scan fit series CSV (plot data)::

    x_m,signal_p1,fit_p1,signal_p2,fit_p2

Campaign series CSV::

    slit_width_m,V2,D2,sum_sq,V2_analytic,D2_analytic

Analytic table CSV::

    slit_width_m,V,D,V2,D2,sum_sq

Intensity map CSV: first row ``slit_width_m,<a>``, second row
``x_m\\u_per_m,<u_1>,...,<u_n>``, then one row per grating position,
``<x>,<I(u_1)>,...,<I(u_n)>``.
"""

import csv
import json
import os

import numpy as np

SCHEMA_VERSION = 1
SCAN_HEADER = ("x_m", "counts_p1", "counts_p2", "expected_rate_p1", "expected_rate_p2")
FIT_SERIES_HEADER = ("x_m", "signal_p1", "fit_p1", "signal_p2", "fit_p2")
CAMPAIGN_SERIES_HEADER = ("slit_width_m", "V2", "D2", "sum_sq", "V2_analytic", "D2_analytic")
ANALYTIC_HEADER = ("slit_width_m", "V", "D", "V2", "D2", "sum_sq")
WIDTH_KEYS = ("slit_width_m", "V", "V_err", "D", "D_err", "sum_sq", "sum_sq_err")


def fmt(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".9g")


def _fmt_count(value):
    value = float(value)
    return str(int(value)) if value == int(value) else fmt(value)


def width_tag(slit_width_m):
    """File-name fragment such as ``a20um``."""
    return "a" + format(slit_width_m * 1e6, ".6g").replace(".", "p") + "um"


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def write_rows(path, header, rows):
    fh, w = _writer(path)
    with fh:
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_scan_csv(path, scan):
    fh, w = _writer(path)
    with fh:
        w.writerow(SCAN_HEADER)
        for i, x in enumerate(scan.positions_m):
            w.writerow([fmt(x), _fmt_count(scan.counts_p1[i]), _fmt_count(scan.counts_p2[i]),
                        fmt(scan.expected_rate_p1[i]), fmt(scan.expected_rate_p2[i])])


def read_scan_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != SCAN_HEADER:
        raise ValueError(f"unexpected scan header {rows[0]}")
    data = np.array(rows[1:], dtype=float)
    return {name: data[:, i] for i, name in enumerate(SCAN_HEADER)}


def fit_curve(x, fit, period):
    """Dark-subtracted model counts ``A + |B| cos(2 pi x / period + phi)``."""
    return fit.offset + fit.amplitude * np.cos(2 * np.pi * np.asarray(x) / period + fit.phase)


def write_fit_series(path, scan, fits, period):
    dark = scan.dark_estimate_hz * scan.bin_time_s
    rows = zip(scan.positions_m,
               np.asarray(scan.counts_p1, dtype=float) - dark,
               fit_curve(scan.positions_m, fits[0], period),
               np.asarray(scan.counts_p2, dtype=float) - dark,
               fit_curve(scan.positions_m, fits[1], period))
    write_rows(path, FIT_SERIES_HEADER, rows)


def fit_summary(slit_width_m, scan, fits, analytic_visibility):
    out = {
        "slit_width_m": slit_width_m,
        "V_analytic": analytic_visibility,
        "bin_time_s": scan.bin_time_s,
        "dark_estimate_hz": scan.dark_estimate_hz,
        "n_points": int(len(scan.positions_m)),
        "seed": int(scan.rng_seed),
    }
    for det, fit in zip((1, 2), fits):
        out[f"p{det}"] = {
            "V": fit.visibility,
            "V_err": fit.stderr,
            "phase_rad": fit.phase,
            "offset_counts": fit.offset,
            "reduced_chi2": fit.reduced_chi2,
        }
    return out


def width_entry(width):
    rec = width.record
    entry = {
        "slit_width_m": width.slit_width_m,
        "V": rec.visibility,
        "V_err": rec.visibility_err,
        "D": rec.distinguishability,
        "D_err": rec.distinguishability_err,
        "sum_sq": rec.sum_of_squares,
        "sum_sq_err": rec.sum_of_squares_err,
        "d1": rec.d1,
        "d1_err": rec.d1_err,
        "d2": rec.d2,
        "d2_err": rec.d2_err,
        "V_clamped": rec.clamped_visibility,
        "D_clamped": rec.clamped_distinguishability,
        "V_analytic": width.analytic.visibility,
        "D_analytic": width.analytic.distinguishability,
        "source": "monte_carlo" if width.estimated is not None else "analytic",
    }
    return entry


def campaign_payload(report, config_text=None):
    payload = {
        "schema_version": SCHEMA_VERSION,
        "widths": [width_entry(w) for w in report.widths],
        "aggregate": {
            "mean_sum_sq": report.mean_sum_sq,
            "mean_sum_sq_err": report.mean_sum_sq_err,
            "n_widths": len(report.widths),
        },
        "provenance": dict(report.provenance),
    }
    if config_text is not None:
        payload["provenance"]["config"] = config_text
    return payload


def dumps(payload):
    return json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(payload))


def campaign_series_rows(report):
    for w in report.widths:
        rec = w.record
        yield (w.slit_width_m, rec.visibility**2, rec.distinguishability**2, rec.sum_of_squares,
               w.analytic.visibility**2, w.analytic.distinguishability**2)


def write_map_csv(path, intensity_map):
    fh, w = _writer(path)
    with fh:
        w.writerow(["slit_width_m", fmt(intensity_map.slit_width_m)])
        w.writerow(["x_m\\u_per_m"] + [fmt(u) for u in intensity_map.u])
        for x, row in zip(intensity_map.x, intensity_map.intensity):
            w.writerow([fmt(x)] + [fmt(v) for v in row])


def read_map_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    slit_width = float(rows[0][1])
    u = np.array(rows[1][1:], dtype=float)
    body = np.array(rows[2:], dtype=float)
    return slit_width, u, body[:, 0], body[:, 1:]


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
