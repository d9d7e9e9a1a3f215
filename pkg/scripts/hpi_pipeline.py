#!/usr/bin/env python3
"""Full CLI pipeline on the FHFA ZIP5 annual HPI file.

Builds the 2019 cross-section and the 2000-2022 pool, fits mGB and GB2,
runs both tail-fit policies, U-tests every model and writes a report bundle
per dataset under ``--out-dir``.
"""
import argparse
import sys
from pathlib import Path

from gbtails.cli import main as gbtails

DATASETS = {"hpi2019": "2019", "hpi2000_2022": "2000-2022"}


def run(argv):
    print("gbtails " + " ".join(argv))
    code = gbtails(argv)
    if code not in (0, 4):
        sys.exit(code)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("hpi_csv")
    ap.add_argument("--out-dir", default="hpi_out")
    ap.add_argument("--lf1-exclude", type=int, default=3)
    args = ap.parse_args()
    for name, years in DATASETS.items():
        d = Path(args.out_dir) / name
        d.mkdir(parents=True, exist_ok=True)
        sample = str(d / "sample.txt")
        run(["ingest-hpi", args.hpi_csv, "--years", years, "--out", sample])
        run(["fit", sample, "--out", str(d / "fit.json")])
        run(["tail", sample, "--lf1-exclude", str(args.lf1_exclude), "--out", str(d / "tail.json")])
        frags = [str(d / "fit.json"), str(d / "tail.json")]
        for model, src in (("mGB", "fit.json"), ("GB2", "fit.json"), ("LF-1", "tail.json"),
                           ("LF-2", "tail.json")):
            out = str(d / f"utest_{model}.json")
            run(["utest", sample, "--model", model, "--from", str(d / src), "--out", out])
            frags.append(out)
        run(["report", sample, *frags, "--out-dir", str(d / "report")])


if __name__ == "__main__":
    main()
