"""Command-line pipeline: ingest -> fit -> tail -> utest -> report.

Every command is deterministic given its inputs, flags and ``--seed``
(default 42).  Exit codes: 0 ok, 2 usage, 3 parse/schema, 4 fit did not
converge (report still written), 5 domain error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io
from .distributions import (GB2Params, gb2_ccdf, gb2_cdf, gb2_pdf, mgb_ccdf, mgb_cdf, mgb_pdf,
                            GBParams)
from .distributions import sample_gb2, sample_mgb
from .dragonking import classify, default_tail_end_window, u_test_pvalues
from .empirical import (CcdfCurve, SortedSample, build_ccdf, ci_band, empirical_ccdf_at,
                        log_binned_pdf)
from .errors import DomainError, FitError, ParseError, SchemaError
from .fitting import (FAMILIES, FitConfig, FractionOfMax, ManualExclude, default_tail_start_rank,
                      fit_mle, tail_linear_fit)
from .ingest import HpiSchema, PriceSchema, deflate, read_deflator, read_hpi, read_prices, select_hpi

log = logging.getLogger("gbtails")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_CONVERGENCE, EXIT_DOMAIN = 0, 2, 3, 4, 5
DEFAULT_SEED = 42


class UsageError(Exception):
    pass


# --- model evaluation helpers -------------------------------------------------

def _fit_model(fit_dict):
    params = io.params_from_dict(fit_dict)
    if isinstance(params, GB2Params):
        return params, (lambda x: gb2_cdf(x, params)), (lambda x: gb2_ccdf(x, params)), \
            (lambda x: gb2_pdf(x, params))
    return params, (lambda x: mgb_cdf(x, params)), (lambda x: mgb_ccdf(x, params)), \
        (lambda x: mgb_pdf(x, params))


def _region_start(m, tail_fraction):
    return max(1, m - math.ceil(tail_fraction * m) + 1)


def run_utest(sample, model, fits, tails, window=None, ci_level=0.95, band_around="model",
              tail_fraction=0.1, all_ranks=False):
    """U-test one model against ``sample``; returns (summary dict, plot columns)."""
    m = sample.m
    if window is not None and window < 1:
        raise UsageError("--window must be >= 1")
    if window is None:
        window = default_tail_end_window(m)
    if model in fits:
        _, cdf, ccdf, _ = _fit_model(fits[model])
        xs = sample.values
        pv = u_test_pvalues(sample, cdf, ccdf)
        region = (_region_start(m, tail_fraction), m)
        rep = classify(pv, region, window)
        model_ccdf = ccdf
        m_tested = m
    elif model in tails:
        tf = io.tail_from_dict(tails[model])
        # draws above the anchor are iid from the conditional power law
        tail_vals = sample.values[sample.values > tf.x_start]
        tail_sample = SortedSample(tail_vals, label=f"{sample.label} tail")
        xs = tail_sample.values
        pv = u_test_pvalues(tail_sample, tf.conditional_cdf, tf.conditional_ccdf)
        rep = classify(pv, None, min(window, tail_sample.m))
        region = rep.tail_region
        model_ccdf = lambda x: np.clip(tf.line(x), 0.0, 1.0)  # noqa: E731
        m_tested = tail_sample.m
    else:
        raise UsageError(f"model {model!r} not found; available: {sorted(fits) + sorted(tails)}")

    lo = 0 if all_ranks else region[0] - 1
    hi = region[1]
    x_rows = xs[lo:hi]
    emp = empirical_ccdf_at(sample, x_rows)
    curve = CcdfCurve(x=x_rows, s=emp)
    band = ci_band(curve, m, ci_level, model_ccdf if band_around == "model" else None)
    cls = [c.value for c in rep.classifications[lo:hi]]
    columns = {"x": x_rows, "empirical_ccdf": emp, "model_ccdf": np.asarray(model_ccdf(x_rows), float),
               "ci_lower": band.lower, "ci_upper": band.upper, "pvalue": pv[lo:hi],
               "classification": cls}
    flagged = [{"rank": int(k + 1), "x": float(xs[k]), "pvalue": float(pv[k]),
                "flag": rep.classifications[k].value}
               for k in range(len(xs)) if rep.classifications[k].value != "none"]
    summary = {"model": model, "tail_region": [int(region[0]), int(region[1])],
               "tail_end_window": int(rep.tail_end_window), "thresholds": list(rep.thresholds),
               "counts": rep.counts(), "flagged": flagged, "ci_level": float(ci_level),
               "band_around": band_around, "m_tested": int(m_tested)}
    return summary, columns


# --- commands ---------------------------------------------------------------

def _load_sample(args):
    return io.read_sample(args.sample, column=getattr(args, "column", None))


def _fit_config(args) -> FitConfig:
    kw = {}
    if args.max_iter is not None:
        kw["max_iter"] = args.max_iter
    if args.alpha_starts:
        kw["alpha_starts"] = tuple(args.alpha_starts)
    if args.no_profile:
        kw["profile"] = False
    if args.prior_bounds:
        kw["prior_bounds"] = json.loads(args.prior_bounds)
    return FitConfig(**kw)


def cmd_synth(args):
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    try:
        if args.family == "GB2":
            params = GB2Params(args.alpha, args.beta2, args.p, args.q)
            sample = sample_gb2(params, args.n, args.seed)
        else:
            if args.beta1 is None:
                raise UsageError("mGB requires --beta1")
            params = GBParams(args.alpha, args.beta1, args.beta2, args.p, args.q)
            sample = sample_mgb(params, args.n, args.seed)
    except DomainError as e:
        raise UsageError(str(e)) from None
    header = {"family": args.family, "params": json.dumps(params.as_dict(), sort_keys=True),
              "n": args.n, "seed": args.seed}
    io.write_sample(args.out, sample, header)
    return EXIT_OK


def cmd_fit(args):
    sample = _load_sample(args)
    cfg = _fit_config(args)
    report = io.new_report("fit", sample, args.seed)
    report["fits"] = {}
    report["fit_config"] = {"max_iter": cfg.max_iter, "alpha_starts": list(cfg.alpha_starts),
                            "profile": cfg.profile, "prior_bounds": cfg.prior_bounds}
    failed = []
    for fam in args.family:
        res = fit_mle(sample, fam, cfg)
        report["fits"][fam] = io.fit_to_dict(res)
        if not res.converged:
            failed.append(fam)
    io.dump_report(report, args.out)
    if failed:
        print(f"fit did not converge for: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def _tail_start(curve, args):
    if args.tail_start_rank is not None:
        return args.tail_start_rank
    return default_tail_start_rank(curve, args.tail_fraction)


def cmd_tail(args):
    sample = _load_sample(args)
    curve = build_ccdf(sample)
    start = _tail_start(curve, args)
    report = io.new_report("tail", sample, args.seed)
    report["tails"] = {}
    if "lf1" in args.policy:
        report["tails"]["LF-1"] = io.tail_to_dict(
            tail_linear_fit(curve, start, ManualExclude(args.lf1_exclude)))
    if "lf2" in args.policy:
        report["tails"]["LF-2"] = io.tail_to_dict(
            tail_linear_fit(curve, start, FractionOfMax(args.lf2_fraction)))
    io.dump_report(report, args.out)
    return EXIT_OK


def _gather(paths, sample):
    desc = io.dataset_descriptor(sample)
    fits, tails, utests = {}, {}, {}
    seed = None
    for p in paths or []:
        rep = io.load_report(p)
        if rep["dataset"] != desc:
            raise SchemaError(f"{p}: dataset descriptor does not match the sample")
        fits.update(rep.get("fits", {}))
        tails.update(rep.get("tails", {}))
        utests.update(rep.get("utests", {}))
        seed = rep.get("seed", seed)
    return fits, tails, utests, seed


def cmd_utest(args):
    sample = _load_sample(args)
    fits, tails, _, _ = _gather(args.source, sample)
    if not fits and not tails:
        raise UsageError("utest needs a fitted model: pass --from FIT_OR_TAIL_REPORT")
    summary, cols = run_utest(sample, args.model, fits, tails, args.window, args.ci_level,
                              args.band_around, args.tail_fraction, args.all_ranks)
    report = io.new_report("utest", sample, args.seed)
    report["utests"] = {args.model: summary}
    if args.plot_data:
        io.write_csv(args.plot_data, cols)
        report["plot_files"] = [Path(args.plot_data).name]
    io.dump_report(report, args.out)
    return EXIT_OK


def _safe_name(model):
    return model.replace("-", "").lower()


def cmd_report(args):
    sample = _load_sample(args)
    fits, tails, utests, seed = _gather(args.fragments, sample)
    if not args.fragments:
        raise UsageError("report needs at least one fragment")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = io.new_report("report", sample, seed if seed is not None else args.seed)
    report.update(fits=fits, tails=tails, ci_level=args.ci_level)
    files = []

    # PDF panel
    hist = log_binned_pdf(sample, args.bins_per_decade)
    cols = {"x_center": hist[:, 0], "empirical_density": hist[:, 1]}
    for fam, fd in sorted(fits.items()):
        _, _, _, pdf = _fit_model(fd)
        with np.errstate(all="ignore"):
            cols[f"{fam}_pdf"] = np.asarray(pdf(hist[:, 0]), float)
    io.write_csv(out / "pdf.csv", cols)
    files.append("pdf.csv")

    # CCDF panel
    curve = build_ccdf(sample)
    cols = {"x": curve.x, "empirical_ccdf": curve.s}
    for fam, fd in sorted(fits.items()):
        _, _, ccdf, _ = _fit_model(fd)
        cols[f"{fam}_ccdf"] = np.asarray(ccdf(curve.x), float)
    for name, td in sorted(tails.items()):
        tf = io.tail_from_dict(td)
        line = tf.line(curve.x)
        cols[f"{name}_line"] = np.where(curve.x >= tf.x_start, line, np.nan)
    io.write_csv(out / "ccdf.csv", cols)
    files.append("ccdf.csv")

    # p-value panel and per-model tail panels with CI
    summaries = dict(utests)
    pcols = {}
    for model in sorted(fits) + sorted(tails):
        summary, tcols = run_utest(sample, model, fits, tails, args.window, args.ci_level,
                                   "model", args.tail_fraction)
        summaries[model] = summary
        fname = f"tail_{_safe_name(model)}.csv"
        io.write_csv(out / fname, tcols)
        files.append(fname)
        pcols[model] = (tcols["x"], tcols["pvalue"], tcols["classification"])
    if pcols:
        rows = {"model": [], "x": [], "pvalue": [], "classification": []}
        for model, (x, p, c) in pcols.items():
            rows["model"] += [model] * len(x)
            rows["x"] += list(map(float, x))
            rows["pvalue"] += list(map(float, p))
            rows["classification"] += list(c)
        io.write_csv(out / "pvalues.csv", rows)
        files.append("pvalues.csv")
    report["utests"] = summaries
    report["plot_files"] = files
    io.dump_report(report, out / "report.json")
    return EXIT_OK


def cmd_ingest_hp(args):
    schema = PriceSchema(price=args.price_col, year=args.year_col, property_class=args.class_col,
                         keep_classes=frozenset(args.keep_class) if args.keep_class else None)
    res = read_prices(args.input, schema)
    table = read_deflator(args.deflator)
    if args.base_year is not None:
        from .ingest import DeflatorTable
        table = DeflatorTable(table.factors, args.base_year)
    sample = deflate(res.records, table)
    io.write_sample(args.out, sample, {"source": Path(args.input).name, "rows": res.total_rows,
                                       "accepted": len(res), "skipped": len(res.skipped),
                                       "base_year": table.base_year})
    print(f"accepted {len(res)} of {res.total_rows} rows; skipped {dict(res.skip_reasons)}",
          file=sys.stderr)
    return EXIT_OK


def _parse_years(spec):
    years = set()
    for part in spec.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-")
            years.update(range(int(a), int(b) + 1))
        elif part:
            years.add(int(part))
    return years


def cmd_ingest_hpi(args):
    schema = HpiSchema(zip=args.zip_col, year=args.year_col, hpi=args.hpi_col)
    res = read_hpi(args.input, schema)
    years = _parse_years(args.years)
    sample = select_hpi(res.records, years)
    io.write_sample(args.out, sample, {"source": Path(args.input).name, "years": args.years,
                                       "records": sample.m})
    print(f"selected {sample.m} HPI values; skipped {dict(res.skip_reasons)}", file=sys.stderr)
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="gbtails", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sample=True):
        p.add_argument("--config", help="JSON file of option defaults (flags win)")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        if sample:
            p.add_argument("sample", help="sample file: one value per line")
            p.add_argument("--column", help="read this column of a delimited file instead")

    p = sub.add_parser("synth", help="write synthetic draws")
    common(p, sample=False)
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta1", type=float)
    p.add_argument("--beta2", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="maximum-likelihood mGB / GB2 fits")
    common(p)
    p.add_argument("--family", nargs="+", choices=FAMILIES, default=list(FAMILIES))
    p.add_argument("--max-iter", type=int)
    p.add_argument("--alpha-starts", type=float, nargs="+")
    p.add_argument("--no-profile", action="store_true",
                   help="simplex over all parameters instead of profiling p, q")
    p.add_argument("--prior-bounds", help='JSON, e.g. {"alpha": [0.1, 10]}')
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("tail", help="log-log linear fits of the CCDF tail")
    common(p)
    p.add_argument("--policy", nargs="+", choices=("lf1", "lf2"), default=["lf1", "lf2"])
    p.add_argument("--lf1-exclude", type=int, default=0, help="LF-1: drop this many top points")
    p.add_argument("--lf2-fraction", type=float, default=0.9,
                   help="LF-2: drop points above this fraction of the maximum")
    p.add_argument("--tail-start-rank", type=int)
    p.add_argument("--tail-fraction", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tail)

    p = sub.add_parser("utest", help="U-test p-values, DK/nDK/pDK flags and CI plot data")
    common(p)
    p.add_argument("--model", required=True, help="mGB, GB2, LF-1 or LF-2")
    p.add_argument("--from", dest="source", nargs="+", help="fit/tail report fragments")
    p.add_argument("--window", type=int, help="tail-end window in ranks")
    p.add_argument("--tail-fraction", type=float, default=0.1)
    p.add_argument("--ci-level", type=float, default=0.95)
    p.add_argument("--band-around", choices=("model", "empirical"), default="model")
    p.add_argument("--all-ranks", action="store_true")
    p.add_argument("--plot-data")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_utest)

    p = sub.add_parser("report", help="merge fragments and write the plot-data bundle")
    common(p)
    p.add_argument("fragments", nargs="*")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ci-level", type=float, default=0.95)
    p.add_argument("--window", type=int)
    p.add_argument("--tail-fraction", type=float, default=0.1)
    p.add_argument("--bins-per-decade", type=int, default=10)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("ingest-hp", help="house-price table -> deflated sample file")
    common(p, sample=False)
    p.add_argument("input")
    p.add_argument("--deflator", required=True, help="year,factor file")
    p.add_argument("--base-year", type=int)
    p.add_argument("--price-col", default="price")
    p.add_argument("--year-col", default="year")
    p.add_argument("--class-col")
    p.add_argument("--keep-class", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest_hp)

    p = sub.add_parser("ingest-hpi", help="FHFA ZIP5 HPI table -> pooled sample file")
    common(p, sample=False)
    p.add_argument("input")
    p.add_argument("--years", required=True, help="e.g. 2019 or 2000-2022")
    p.add_argument("--zip-col", default=HpiSchema.zip)
    p.add_argument("--year-col", default=HpiSchema.year)
    p.add_argument("--hpi-col", default=HpiSchema.hpi)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest_hpi)
    return ap


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"config {args.config}: {e}") from None
    # either flat option names or a section per subcommand
    section = cfg.get(args.command, cfg) if isinstance(cfg.get(args.command), dict) else cfg
    sub = next(a for a in parser._subparsers._group_actions[0].choices.values()
               if a.prog.endswith(" " + args.command))
    dests = {a.dest for a in sub._actions}
    defaults = {}
    for k, v in section.items():
        key = k.replace("-", "_")
        if key not in dests:
            raise UsageError(f"config {args.config}: unknown option {k!r}")
        defaults[key] = v
    for action in sub._actions:
        if action.dest in defaults:
            action.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, SchemaError, FileNotFoundError) as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (DomainError, FitError, ArithmeticError) as e:
        print(f"domain error: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
