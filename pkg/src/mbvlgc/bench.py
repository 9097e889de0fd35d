"""Run causality methods over a corpus and tabulate detection metrics."""
import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidArgument, MBVLGCError, NoRecords
from .granger import granger_fixed_pvalue
from .pipeline import AnalysisConfig, mb_vlgc_analyze
from .synth import KINDS

METHODS = ("mb_vlgc", "vlgc_single", "gc_fixed")
FILE_TIMEOUT = 60.0


@dataclass(frozen=True)
class EvalRecord:
    file: str
    method: str
    predicted: bool
    truth: bool
    kind: str = ""
    per_band_lags: Optional[list] = None
    wall_time: float = 0.0
    error: Optional[str] = None


@dataclass(frozen=True)
class MetricsTable:
    accuracy: dict
    precision: float
    recall: float
    f1: float
    counts: dict = field(default_factory=dict)


def load_manifest(manifest):
    """Accept a manifest path, a corpus directory, or an already loaded list.

    Returns ``(entries, base_dir)``.
    """
    if isinstance(manifest, (list, tuple)):
        return list(manifest), None
    path = str(manifest)
    if os.path.isdir(path):
        path = os.path.join(path, "manifest.json")
    with open(path) as fh:
        return json.load(fh), os.path.dirname(os.path.abspath(path))


def read_pair(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 1], data[:, 2]


def _evaluate(entry, base_dir, method, cfg, timeout):
    name = entry["file"]
    truth = bool(entry["ground_truth"])
    kind = entry.get("kind", "")
    t0 = time.perf_counter()
    lags, error, predicted = None, None, False
    try:
        x, y = read_pair(os.path.join(base_dir or "", name))
        fs = float(entry.get("fs", 250.0))
        if method == "gc_fixed":
            predicted = granger_fixed_pvalue(x, y, cfg.delta_max) <= cfg.alpha
        else:
            run_cfg = replace(cfg, bands="single") if method == "vlgc_single" else cfg
            rep = mb_vlgc_analyze(x, y, run_cfg, fs=fs)
            predicted = rep.overall_decision
            lags = [
                dict(d, low=b.band.low, high=b.band.high, valid=b.valid)
                for d, b in zip(rep.per_band_lags, rep.bands)
            ]
    except (MBVLGCError, OSError, ValueError) as exc:
        error = f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - t0
    if wall > timeout:
        # checked after the fact; threads cannot be interrupted
        predicted, error = False, f"timeout after {wall:.1f}s"
    if error is not None:
        predicted = False
    return EvalRecord(name, method, bool(predicted), truth, kind, lags, wall, error)


def run_corpus(manifest, method="mb_vlgc", cfg=None, *, threads=None, timeout=FILE_TIMEOUT):
    """One record per manifest entry. Per-file failures are recorded, never raised."""
    if method not in METHODS:
        raise InvalidArgument(f"unknown method {method!r}")
    cfg = cfg or AnalysisConfig()
    entries, base_dir = load_manifest(manifest)
    if threads is None:
        env = os.environ.get("MBVLGC_THREADS", "")
        threads = int(env) if env.isdigit() and int(env) > 0 else 1
    run = lambda e: _evaluate(e, base_dir, method, cfg, timeout)  # noqa: E731
    if threads <= 1 or len(entries) <= 1:
        return [run(e) for e in entries]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, entries))


def compute_metrics(records):
    """Per-kind accuracy plus precision, recall and F1 for the positive class."""
    records = list(records)
    if not records:
        raise NoRecords("no records to score")
    by_kind = {}
    for r in records:
        by_kind.setdefault(r.kind or "all", []).append(r.predicted == r.truth)
    order = [k for k in KINDS if k in by_kind] + sorted(k for k in by_kind if k not in KINDS)
    accuracy = {k: float(np.mean(by_kind[k])) for k in order}
    tp = sum(r.predicted and r.truth for r in records)
    fp = sum(r.predicted and not r.truth for r in records)
    fn = sum(not r.predicted and r.truth for r in records)
    tn = len(records) - tp - fp - fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    counts = {"n": len(records), "tp": tp, "fp": fp, "tn": tn, "fn": fn,
              "errors": sum(r.error is not None for r in records)}
    return MetricsTable(accuracy, precision, recall, f1, counts)


def lag_error_stats(records, manifest):
    """Inferred-lag and absolute-error summaries for each multifreq component.

    Each component is matched to the analysed band containing its frequency;
    the per-file inferred value is that band's mean selected lag.
    """
    entries, _ = load_manifest(manifest)
    truth = {e["file"]: e["true_lags"] for e in entries if e.get("kind") == "multifreq"}
    samples = {}
    for r in records:
        if r.file not in truth or not r.per_band_lags:
            continue
        for comp, lag in truth[r.file].items():
            f = float(comp)
            for b in r.per_band_lags:
                if b["low"] <= f <= b["high"] and b.get("lag_mean") is not None:
                    key = (f, b["band"])
                    samples.setdefault(key, (lag, []))[1].append(b["lag_mean"])
                    break
    if not samples:
        raise NoRecords("no multifreq records with band lags")
    out = []
    for (f, band), (lag, vals) in sorted(samples.items()):
        v = np.asarray(vals, dtype=float)
        err = np.abs(v - lag)
        sd = lambda a: float(a.std(ddof=1)) if a.size > 1 else 0.0  # noqa: E731
        out.append({
            "component_hz": f, "band": band, "true_lag": lag, "n": int(v.size),
            "inferred_mean": float(v.mean()), "inferred_sd": sd(v),
            "error_mean": float(err.mean()), "error_sd": sd(err),
        })
    return out


def prop21_demo(n_seeds=100, length=2000, delta_max=1, alpha=0.01, seed=2024, y_kind="random_walk"):
    """Spurious fixed-lag detections of ``y -> x`` where ``x`` is a random walk and
    ``y`` is independent of it, on raw levels and after first differencing.

    ``y_kind`` is ``"random_walk"`` (an independent second walk) or ``"white"``.
    Returns ``(rate_raw, rate_differenced)``.
    """
    if n_seeds < 20:
        raise InvalidArgument("prop21_demo needs at least 20 seeds")
    if y_kind not in ("random_walk", "white"):
        raise InvalidArgument(f"unknown y_kind {y_kind!r}")
    raw = diff = 0
    for child in np.random.SeedSequence(seed).spawn(n_seeds):
        rng = np.random.Generator(np.random.PCG64(child))
        x = np.cumsum(rng.normal(size=length))
        y = rng.normal(size=length)
        if y_kind == "random_walk":
            y = np.cumsum(y)
        raw += granger_fixed_pvalue(y, x, delta_max) <= alpha
        diff += granger_fixed_pvalue(np.diff(y), np.diff(x), delta_max) <= alpha
    return raw / n_seeds, diff / n_seeds


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def metrics_rows(tables):
    """Long-form rows ``(method, metric, value)`` for a ``{method: MetricsTable}`` map."""
    rows = []
    for method, t in tables.items():
        for kind, acc in t.accuracy.items():
            rows.append((method, f"accuracy_{kind}", acc))
        rows += [(method, "precision", t.precision), (method, "recall", t.recall),
                 (method, "f1", t.f1)]
    return rows


def write_metrics_csv(path, tables):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "metric", "value"])
        for method, metric, value in metrics_rows(tables):
            w.writerow([method, metric, repr(float(value))])


def write_metrics_json(path, tables, extra=None):
    payload = {m: asdict(t) for m, t in tables.items()}
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_records_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["file", "kind", "method", "truth", "predicted", "wall_time", "error"])
        for r in records:
            w.writerow([r.file, r.kind, r.method, int(r.truth), int(r.predicted),
                        f"{r.wall_time:.4f}", r.error or ""])


def format_table(tables):
    """Plain-text accuracy table: one row per data kind, one column per method."""
    methods = list(tables)
    kinds = []
    for t in tables.values():
        kinds += [k for k in t.accuracy if k not in kinds]
    width = max([len(k) for k in kinds] + [len("Overall F1")])
    buf = io.StringIO()
    buf.write("Dataset".ljust(width) + "".join(f"  {m:>12}" for m in methods) + "\n")
    buf.write("-" * (width + 14 * len(methods)) + "\n")
    for k in kinds:
        cells = []
        for m in methods:
            acc = tables[m].accuracy.get(k)
            cells.append(f"  {'-' if acc is None or math.isnan(acc) else f'{acc:.3f}':>12}")
        buf.write(k.ljust(width) + "".join(cells) + "\n")
    buf.write("Overall F1".ljust(width) + "".join(f"  {tables[m].f1:>12.3f}" for m in methods) + "\n")
    return buf.getvalue()


def format_lag_table(stats):
    buf = io.StringIO()
    buf.write(f"{'band':>12} {'true':>5} {'inferred':>15} {'error':>15} {'n':>4}\n")
    for s in stats:
        buf.write(
            f"{s['band']:>12} {s['true_lag']:>5} "
            f"{s['inferred_mean']:>7.2f} ± {s['inferred_sd']:<5.2f} "
            f"{s['error_mean']:>7.2f} ± {s['error_sd']:<5.2f} {s['n']:>4}\n"
        )
    return buf.getvalue()
