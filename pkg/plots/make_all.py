#!/usr/bin/env python3
"""Walk a directory of expsing runs and emit every applicable figure.

Each subdirectory holding a report.json is treated as one run: radial runs
(profile.csv) get slope and decay figures, critical-branch runs a critical
figure, 2-d runs (field.csv) a residual heatmap.  Figures land next to
their inputs as <kind>.png.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from make_figure import FigureError, FigureSpec, make_figure


def figures_for_run(run_dir: Path) -> list[FigureSpec]:
    report = run_dir / "report.json"
    if not report.exists():
        return []
    with open(report, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    specs = []
    profile = run_dir / "profile.csv"
    field = run_dir / "field.csv"
    if field.exists():
        specs.append(FigureSpec(kind="heatmap", out=run_dir / "heatmap.png", field=field))
    if profile.exists() and doc.get("fits"):
        specs.append(FigureSpec(kind="slope", out=run_dir / "slope.png",
                                profile=profile, report=report))
        if doc["fits"].get("loglog_coefficient") is not None:
            specs.append(FigureSpec(kind="critical", out=run_dir / "critical.png",
                                    profile=profile, report=report))
        if doc["fits"].get("beta_hat") is not None:
            specs.append(FigureSpec(kind="decay", out=run_dir / "decay.png",
                                    profile=profile, report=report))
    return specs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("directory", help="directory holding run subdirectories")
    args = parser.parse_args(argv)
    root = Path(args.directory)
    if not root.is_dir():
        print(f"error: {root} is not a directory", file=sys.stderr)
        return 1
    made = []
    for run_dir in sorted(p.parent for p in root.glob("**/report.json")):
        for spec in figures_for_run(run_dir):
            try:
                meta = make_figure(spec)
            except FigureError as exc:
                print(f"error: {run_dir}: {exc}", file=sys.stderr)
                return 1
            made.append(meta["out"])
    if not made:
        print("error: no runs found", file=sys.stderr)
        return 1
    for path in made:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
