"""Command-line interface: ``mbvlgc analyze | decompose | generate | bench``.

Exit codes: 0 success (whatever the verdict), 2 malformed input, 3 invalid configuration.
"""
import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import bench, filters, synth
from .errors import (
    DegenerateSignal,
    InputMismatch,
    InsufficientData,
    InvalidArgument,
    InvalidBand,
    InvalidBandConfig,
    MBVLGCError,
    PipelineFailure,
)
from .pipeline import AnalysisConfig, mb_vlgc_analyze
from .timeseries import BandSpec

SCHEMA = "mbvlgc-report/1"
EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 2, 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def read_csv_columns(path, x_col="x", y_col="y", time_col="t"):
    """Return ``(x, y, t_or_None)`` from a headed CSV file."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            rows = [r for r in reader if r and any(c.strip() for c in r)]
    except FileNotFoundError:
        raise CliError(f"input file not found: {path}", EXIT_INPUT)
    except (OSError, StopIteration, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_INPUT)
    for col in (x_col, y_col):
        if col not in header:
            raise CliError(f"column {col!r} missing from header {header} (see --x-col/--y-col)",
                           EXIT_INPUT)
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise CliError(f"non-numeric value in {path}: {exc}", EXIT_INPUT)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != len(header):
        raise CliError(f"{path} needs at least two complete rows", EXIT_INPUT)
    if not np.all(np.isfinite(data)):
        raise CliError(f"{path} contains NaN or infinite values", EXIT_INPUT)
    col = {h: i for i, h in enumerate(header)}
    t = data[:, col[time_col]] if time_col in col else None
    return data[:, col[x_col]], data[:, col[y_col]], t


def resolve_fs(fs, t):
    if fs is not None:
        if not fs > 0:
            raise CliError(f"--fs must be positive, got {fs}", EXIT_CONFIG)
        return float(fs)
    if t is None:
        raise CliError("sampling rate unknown: pass --fs or include a time column", EXIT_INPUT)
    dt = np.diff(t)
    if dt.size == 0 or not np.all(dt > 0):
        raise CliError("time column must be strictly increasing; pass --fs instead", EXIT_INPUT)
    step = float(np.median(dt))
    if np.max(np.abs(dt - step)) > 1e-6 * step:
        raise CliError("time column is not uniformly sampled; pass --fs instead", EXIT_INPUT)
    return 1.0 / step


def parse_bands(text, fs):
    """Preset name or ``lo-hi,lo-hi,...``. High edges past 0.99 * Nyquist are clamped."""
    try:
        if any(ch.isdigit() for ch in text.split(",")[0][:1]):
            bands = []
            for part in text.split(","):
                lo, hi = part.strip().split("-")
                bands.append((float(lo), float(hi)))
        else:
            bands = [(b.low, b.high) for b in filters.band_preset(text, fs)]
    except (ValueError, InvalidBandConfig) as exc:
        raise CliError(f"cannot parse --bands {text!r}: {exc}", EXIT_CONFIG)
    limit = 0.99 * fs / 2.0
    out = []
    for lo, hi in bands:
        if hi > limit:
            _warn(f"band {lo:g}-{hi:g} Hz clamped to {lo:g}-{limit:g} Hz (fs={fs:g})")
            hi = limit
        try:
            out.append(BandSpec(lo, hi))
        except InvalidBand as exc:
            raise CliError(f"invalid band {lo:g}-{hi:g}: {exc}", EXIT_CONFIG)
    return tuple(out)


def build_config(args, fs):
    bands = parse_bands(args.bands, fs)
    try:
        return AnalysisConfig(
            bands=bands,
            delta_max=args.max_lag,
            alpha=args.alpha,
            gamma_threshold=args.gamma,
            combination=args.combination,
            filter_order=args.filter_order,
            dtw_window=args.dtw_window,
            selection_window=args.selection_window,
            threads=args.threads,
        )
    except MBVLGCError as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_CONFIG)


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if np.isfinite(v) else None


def band_record(b):
    rec = {
        "band": b.band.label(),
        "low": b.band.low,
        "high": b.band.high,
        "valid": b.valid,
        "energy_fraction": _num(b.energy_fraction),
        "error": b.error,
        "tau_cc": None,
        "lag_mean": None,
        "lag_sd": None,
    }
    if b.lag_stats:
        rec.update({k: (_num(v) if k != "tau_cc" else v) for k, v in b.lag_stats.items()})
    r = b.result
    for key in ("var_r_y", "var_r_yx", "var_r_vl", "p_f", "p_fixed", "gamma", "significant_lag"):
        rec[key] = _num(getattr(r, key)) if r is not None else None
    rec["decision"] = bool(r.decision) if r is not None else None
    return rec


def report_dict(rep, direction):
    return {
        "direction": direction,
        "overall_decision": rep.overall_decision,
        "combined_p": _num(rep.combined_p),
        "combination_method": rep.combination_method,
        "combined_decision": rep.combined_decision,
        "band_decision": rep.band_decision,
        "fisher_chi2": _num(rep.fisher_chi2),
        "dominant_band": rep.dominant_band.label() if rep.dominant_band else None,
        "diagnostics": list(rep.diagnostics),
        "bands": [band_record(b) for b in rep.bands],
    }


def config_dict(cfg, fs):
    return {
        "fs": fs,
        "bands": [[b.low, b.high] for b in cfg.bands],
        "max_lag": cfg.delta_max,
        "alpha": cfg.alpha,
        "gamma": cfg.gamma_threshold,
        "combination": cfg.combination,
        "filter_order": cfg.filter_order,
        "dtw_window": cfg.dtw_window if cfg.dtw_window is not None else 2 * cfg.delta_max,
        "selection_window": (cfg.selection_window if cfg.selection_window is not None
                             else 2 * cfg.delta_max + 1),
    }


BAND_COLUMNS = ["direction", "band", "low", "high", "valid", "energy_fraction", "p_f", "p_fixed",
                "gamma", "decision", "var_r_y", "var_r_yx", "var_r_vl", "tau_cc", "lag_mean",
                "lag_sd", "significant_lag", "error"]


def render_report(doc, fmt):
    if fmt == "json":
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BAND_COLUMNS)
        for res in doc["results"]:
            for b in res["bands"]:
                w.writerow([res["direction"]] + ["" if b.get(c) is None else b[c]
                                                 for c in BAND_COLUMNS[1:]])
        return buf.getvalue()
    for res in doc["results"]:
        buf.write(f"direction {res['direction']}: causal={str(res['overall_decision']).lower()} "
                  f"combined_p={res['combined_p']:.4g} ({res['combination_method']})\n")
        for b in res["bands"]:
            if b["p_f"] is None:
                buf.write(f"  {b['band']:>14}  invalid ({b['error'] or 'low energy'})\n")
            else:
                buf.write(f"  {b['band']:>14}  p={b['p_f']:.3g} gamma={b['gamma']:.3f} "
                          f"decision={str(b['decision']).lower()} lag={b['lag_mean']:.2f}"
                          f"±{b['lag_sd']:.2f}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_analyze(args):
    x, y, t = read_csv_columns(args.input, args.x_col, args.y_col, args.time_col)
    fs = resolve_fs(args.fs, t)
    cfg = build_config(args, fs)
    directions = {"x->y": [("x->y", x, y)], "y->x": [("y->x", y, x)],
                  "both": [("x->y", x, y), ("y->x", y, x)]}[args.direction]
    results = []
    for name, cause, effect in directions:
        try:
            rep = mb_vlgc_analyze(cause, effect, cfg, fs=fs)
        except (InsufficientData, DegenerateSignal, InputMismatch, PipelineFailure) as exc:
            raise CliError(f"cannot analyze {args.input}: {exc}", EXIT_INPUT)
        except (InvalidArgument, InvalidBandConfig, InvalidBand) as exc:
            raise CliError(f"invalid configuration: {exc}", EXIT_CONFIG)
        results.append(report_dict(rep, name))
    doc = {"schema": SCHEMA, "config": config_dict(cfg, fs), "n_samples": int(x.size),
           "results": results}
    text = render_report(doc, args.format)
    verdict_stream = sys.stdout
    if args.output in (None, "-"):
        sys.stdout.write(text)
        verdict_stream = sys.stderr
    else:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    for res in results:
        print(f"VERDICT {res['direction']} {str(res['overall_decision']).lower()} "
              f"p={res['combined_p']:.6g}", file=verdict_stream)
    return EXIT_OK


def cmd_decompose(args):
    x, y, t = read_csv_columns(args.input, args.x_col, args.y_col, args.time_col)
    fs = resolve_fs(args.fs, t)
    bands = parse_bands(args.bands, fs)
    try:
        filters.validate_bands(bands, fs)
        comps = {"x": filters.decompose(x, bands, fs, args.filter_order),
                 "y": filters.decompose(y, bands, fs, args.filter_order)}
    except InsufficientData as exc:
        raise CliError(f"cannot decompose {args.input}: {exc}", EXIT_INPUT)
    except MBVLGCError as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_CONFIG)
    os.makedirs(args.out, exist_ok=True)
    tt = np.arange(x.size) / fs
    written = []
    for channel, parts in comps.items():
        for band, values in zip(bands, parts):
            path = os.path.join(args.out, f"{channel}_{band.label()}.csv")
            np.savetxt(path, np.column_stack([tt, values]), fmt="%.17g", delimiter=",",
                       header=f"t,{channel}", comments="")
            written.append(path)
    print(f"wrote {len(written)} band files to {args.out}")
    return EXIT_OK


def cmd_generate(args):
    try:
        manifest = synth.gen_corpus(args.seed, args.out)
    except OSError as exc:
        raise CliError(f"cannot write corpus to {args.out}: {exc}", EXIT_INPUT)
    counts = {}
    for e in manifest:
        counts[e["kind"]] = counts.get(e["kind"], 0) + 1
    summary = ", ".join(f"{k}={v}" for k, v in counts.items())
    print(f"wrote {len(manifest)} files to {args.out} ({summary})")
    return EXIT_OK


def cmd_bench(args):
    if args.demo == "prop21":
        raw, diff = bench.prop21_demo(args.seeds)
        print(f"prop21 spurious_rate_raw={raw:.3f} spurious_rate_differenced={diff:.3f} "
              f"seeds={args.seeds}")
        return EXIT_OK
    if args.corpus is None:
        raise CliError("bench needs --corpus (or --demo prop21)", EXIT_CONFIG)
    try:
        entries, _ = bench.load_manifest(args.corpus)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read manifest under {args.corpus}: {exc}", EXIT_INPUT)
    fs = float(entries[0].get("fs", synth.FS)) if entries else synth.FS
    cfg = build_config(args, fs)
    methods = list(bench.METHODS) if args.method == "all" else [args.method]
    tables, extra = {}, {}
    out = args.out or args.corpus
    os.makedirs(out, exist_ok=True)
    for method in methods:
        records = bench.run_corpus(args.corpus, method, cfg, threads=args.threads)
        bench.write_records_csv(os.path.join(out, f"records_{method}.csv"), records)
        if records:
            tables[method] = bench.compute_metrics(records)
        if method == "mb_vlgc":
            try:
                extra["lag_errors"] = bench.lag_error_stats(records, args.corpus)
            except MBVLGCError:
                pass
    if not tables:
        print("no records")
        return EXIT_OK
    bench.write_metrics_csv(os.path.join(out, "metrics.csv"), tables)
    bench.write_metrics_json(os.path.join(out, "metrics.json"), tables, extra)
    table = bench.format_table(tables)
    if "lag_errors" in extra:
        table += "\n" + bench.format_lag_table(extra["lag_errors"])
    with open(os.path.join(out, "table.txt"), "w") as fh:
        fh.write(table)
    sys.stdout.write(table)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------


def _add_analysis_flags(p, with_io=True):
    p.add_argument("--bands", default="two-band",
                   help="preset (single, two-band, eeg) or 'lo-hi,lo-hi,...' in Hz")
    p.add_argument("--max-lag", type=int, default=25, help="maximum lag in samples")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--gamma", type=float, default=0.6, help="BIC difference ratio threshold")
    p.add_argument("--combination", default="fisher", choices=["fisher", "stouffer", "bonferroni"])
    p.add_argument("--filter-order", type=int, default=4)
    p.add_argument("--dtw-window", type=int, default=None, help="default: 2 * max-lag")
    p.add_argument("--selection-window", type=int, default=None,
                   help="lag-choice smoothing span; default: 2 * max-lag + 1")
    p.add_argument("--threads", type=int, default=None, help="default: $MBVLGC_THREADS or 1")


def _add_input_flags(p):
    p.add_argument("--input", required=True, help="CSV with a header row")
    p.add_argument("--fs", type=float, default=None, help="sampling rate in Hz")
    p.add_argument("--x-col", default="x")
    p.add_argument("--y-col", default="y")
    p.add_argument("--time-col", default="t")


def build_parser():
    parser = argparse.ArgumentParser(prog="mbvlgc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="test a pair for multi-band causality")
    _add_input_flags(p)
    _add_analysis_flags(p)
    p.add_argument("--direction", default="x->y", choices=["x->y", "y->x", "both"])
    p.add_argument("--both-directions", dest="direction", action="store_const", const="both")
    p.add_argument("--format", default="json", choices=["json", "csv", "text"])
    p.add_argument("--output", default="-", help="report path; '-' writes to stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("decompose", help="write one CSV per band and channel")
    _add_input_flags(p)
    p.add_argument("--bands", default="eeg")
    p.add_argument("--filter-order", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("generate", help="write the synthetic benchmark corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="score methods on a generated corpus")
    p.add_argument("--corpus", default=None, help="corpus directory or manifest.json")
    p.add_argument("--method", default="mb_vlgc", choices=list(bench.METHODS) + ["all"])
    p.add_argument("--out", default=None, help="output directory (default: the corpus)")
    p.add_argument("--demo", choices=["prop21"], default=None)
    p.add_argument("--seeds", type=int, default=100, help="seed count for --demo")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which doubles as "malformed input"
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
