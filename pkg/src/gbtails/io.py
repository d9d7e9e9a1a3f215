"""Sample files, JSON report fragments and CSV plot data."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import GB2Params, GBParams
from .empirical import SortedSample
from .errors import ParseError, SchemaError
from .fitting import FitResult, FractionOfMax, ManualExclude, TailFit

SCHEMA_VERSION = 1
REPORT_KEYS = {"schema_version", "kind", "software_version", "seed", "dataset", "ci_level",
               "fits", "tails", "utests", "fit_config", "plot_files"}
FIT_KEYS = {"family", "params", "log_likelihood", "ks_stat", "converged", "iterations",
            "ccdf_slope", "pdf_slope", "message"}
TAIL_KEYS = {"policy", "slope", "intercept", "slope_stderr", "slope_ci95", "tail_start_rank",
             "x_start", "n_points", "excluded_ranks"}
UTEST_KEYS = {"model", "tail_region", "tail_end_window", "thresholds", "counts", "flagged",
              "ci_level", "band_around", "m_tested"}


# --- samples ---------------------------------------------------------------

def read_sample(path, column=None, label=None) -> SortedSample:
    """One value per line (``#`` comments allowed), or a named column of a
    delimited file when ``column`` is given."""
    path = Path(path)
    text = path.read_text(encoding="utf-8-sig")
    vals = []
    if column is None:
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals.append(float(line.split(",")[0]))
            except ValueError:
                if not vals and lineno <= 2:
                    continue  # tolerate a header line
                raise ParseError(f"{path}:{lineno}: not a number: {line!r}") from None
    else:
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        delim = "\t" if lines[0].count("\t") > lines[0].count(",") else ","
        rows = csv.reader(lines, delimiter=delim)
        header = [h.strip() for h in next(rows)]
        if column not in header:
            raise SchemaError(f"{path}: column {column!r} not in {header}")
        j = header.index(column)
        for lineno, row in enumerate(rows, start=2):
            try:
                vals.append(float(row[j]))
            except (ValueError, IndexError):
                raise ParseError(f"{path}:{lineno}: bad value in column {column!r}") from None
    if not vals:
        raise ParseError(f"{path}: no values")
    return SortedSample(np.array(vals), label=label or path.stem)


def write_sample(path, sample: SortedSample, header: dict | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in (header or {}).items():
            fh.write(f"# {k}: {v}\n")
        for v in sample.values:
            fh.write(f"{float(v)!r}\n")


def dataset_descriptor(sample: SortedSample) -> dict:
    digest = hashlib.sha256(np.ascontiguousarray(sample.values, dtype="<f8").tobytes()).hexdigest()
    return {"label": sample.label, "m": sample.m, "sha256": digest,
            "min": float(sample.values[0]), "max": float(sample.values[-1])}


# --- report fragments --------------------------------------------------------

def _finite(obj, where="report"):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise SchemaError(f"non-finite number in {where}")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _finite(v, f"{where}.{k}")
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _finite(v, where)


def new_report(kind: str, sample: SortedSample, seed: int) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, "software_version": __version__,
            "seed": int(seed), "dataset": dataset_descriptor(sample)}


def _finite_or_none(v):
    return float(v) if math.isfinite(v) else None


def fit_to_dict(fit: FitResult) -> dict:
    d = {"family": fit.family, "params": {k: float(v) for k, v in fit.params.as_dict().items()},
         "log_likelihood": _finite_or_none(fit.log_likelihood), "ks_stat": float(fit.ks_stat),
         "converged": bool(fit.converged), "iterations": int(fit.iterations),
         "ccdf_slope": float(fit.params.ccdf_slope), "message": fit.message}
    if fit.family == "GB2":
        d["pdf_slope"] = float(fit.params.pdf_slope)
    return d


def params_from_dict(d: dict):
    unknown = set(d) - FIT_KEYS
    if unknown:
        raise SchemaError(f"unknown fit fields: {sorted(unknown)}")
    p = d["params"]
    if d["family"] == "GB2":
        return GB2Params(p["alpha"], p["beta2"], p["p"], p["q"])
    if d["family"] == "mGB":
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return GBParams(p["alpha"], p["beta1"], p["beta2"], p["p"], p["q"])
    raise SchemaError(f"unknown family {d['family']!r}")


def tail_to_dict(t: TailFit) -> dict:
    lo, hi = t.slope_ci(0.95)
    return {"policy": t.policy.describe(), "slope": t.slope, "intercept": t.intercept,
            "slope_stderr": t.slope_stderr, "slope_ci95": [float(lo), float(hi)],
            "tail_start_rank": t.tail_start_rank, "x_start": t.x_start, "n_points": t.n_points,
            "excluded_ranks": sorted(t.excluded)}


def tail_from_dict(d: dict) -> TailFit:
    unknown = set(d) - TAIL_KEYS
    if unknown:
        raise SchemaError(f"unknown tail fields: {sorted(unknown)}")
    pol = d["policy"]
    if pol["policy"] == "ManualExclude":
        policy = ManualExclude(int(pol["n_points"]))
    elif pol["policy"] == "FractionOfMax":
        policy = FractionOfMax(float(pol["fraction"]))
    else:
        raise SchemaError(f"unknown policy {pol!r}")
    return TailFit(slope=d["slope"], intercept=d["intercept"], policy=policy,
                   tail_start_rank=d["tail_start_rank"], excluded=frozenset(d["excluded_ranks"]),
                   slope_stderr=d["slope_stderr"], n_points=d["n_points"], x_start=d["x_start"])


def dump_report(report: dict, path):
    _finite(report)
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_report(path) -> dict:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None
    unknown = set(d) - REPORT_KEYS
    if unknown:
        raise SchemaError(f"{path}: unknown report fields {sorted(unknown)}")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported schema_version {d.get('schema_version')!r}")
    for f in d.get("fits", {}).values():
        params_from_dict(f)
    for t in d.get("tails", {}).values():
        tail_from_dict(t)
    for u in d.get("utests", {}).values():
        unknown = set(u) - UTEST_KEYS
        if unknown:
            raise SchemaError(f"{path}: unknown utest fields {sorted(unknown)}")
    return d


def write_csv(path, columns: dict):
    """Write equal-length columns; NaN cells are left empty."""
    names = list(columns)
    n = len(next(iter(columns.values())))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(n):
            row = []
            for name in names:
                v = columns[name][i]
                if isinstance(v, (float, np.floating)):
                    row.append("" if not np.isfinite(v) else repr(float(v)))
                else:
                    row.append(str(v))
            w.writerow(row)
