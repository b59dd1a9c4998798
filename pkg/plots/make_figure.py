#!/usr/bin/env python3
"""Static figures from expsing run outputs.

Reads the documented CSV/JSON formats of the solver CLI and never
recomputes physics: every fitted number shown on a figure is taken verbatim
from the run's report JSON.  Four figure kinds:

  slope     u against ln(1/r) with the fitted line and gamma_hat/ell_hat
            annotation (annotation digits are exactly the report's values)
  critical  log-log-corrected profile u + (2/b)*t against ln(1 - t),
            annotated with the fitted additive constant
  decay     semilog |w(t) - ell_hat| with the fitted rate line
  heatmap   residual field of a 2-d run on the (t, theta) grid

Usage:
  python make_figure.py --kind slope --profile run/profile.csv \
      --report run/report.json --out slope.png
  python make_figure.py --kind heatmap --field run/field.csv --out h.png
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PROFILE_COLUMNS = ["t", "r", "w", "w_t", "u", "u_r"]
FIELD_COLUMNS = ["t", "theta", "w", "u", "residual"]

KINDS = ("slope", "critical", "decay", "heatmap")


class FigureError(RuntimeError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    out: Path
    profile: Path | None = None
    field: Path | None = None
    report: Path | None = None
    window: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(f"kind must be one of {KINDS}, got {self.kind!r}")
        needs_field = self.kind == "heatmap"
        if needs_field and self.field is None:
            raise FigureError("heatmap needs --field")
        if not needs_field and self.profile is None:
            raise FigureError(f"{self.kind} needs --profile")
        if self.kind in ("slope", "critical", "decay") and self.report is None:
            raise FigureError(f"{self.kind} needs --report")


def _read_csv(path: Path, columns) -> dict:
    if not Path(path).exists():
        raise FigureError(f"input file {path} does not exist")
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != columns:
            raise FigureError(f"{path}: expected header {columns}, got {header}")
        rows = [[float(x) for x in row] for row in reader]
    if not rows:
        raise FigureError(f"{path}: no data rows")
    data = np.asarray(rows)
    return {name: data[:, i] for i, name in enumerate(columns)}


def _read_report(path: Path) -> dict:
    if not Path(path).exists():
        raise FigureError(f"report {path} does not exist")
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "fits" not in doc or doc["fits"] is None:
        raise FigureError(f"report {path} carries no fits")
    return doc


def _fig_slope(spec: FigureSpec):
    prof = _read_csv(spec.profile, PROFILE_COLUMNS)
    report = _read_report(spec.report)
    gamma_hat = report["fits"]["gamma_hat"]
    ell_hat = report["fits"]["ell_hat"]
    x = -prof["t"]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(x, prof["u"], lw=1.2, label="computed profile")
    ax.plot(x, gamma_hat * x + ell_hat, "--", lw=1.0,
            label="fitted line from report")
    annotation = f"gamma_hat = {gamma_hat!r}, ell_hat = {ell_hat!r}"
    ax.annotate(annotation, xy=(0.04, 0.92), xycoords="axes fraction", fontsize=8)
    ax.set_xlabel("ln(1/r)")
    ax.set_ylabel("u")
    ax.legend(loc="lower right", fontsize=8)
    ax.set_title("singular slope")
    return fig, {"annotation": annotation, "gamma_hat": gamma_hat, "ell_hat": ell_hat}


def _fig_critical(spec: FigureSpec):
    prof = _read_csv(spec.profile, PROFILE_COLUMNS)
    report = _read_report(spec.report)
    ell_hat = report["fits"]["ell_hat"]
    b = report["config_echo"]["params"]["b"]
    t = prof["t"]
    corrected = prof["u"] + (2.0 / b) * t
    x = np.log1p(-t)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(x, corrected, lw=1.2, label="u - gamma*ln(1/r)")
    ax.plot(x, -(2.0 / b) * x + ell_hat, "--", lw=1.0,
            label="log-log correction from report")
    annotation = f"ell_hat = {ell_hat!r}"
    ax.annotate(annotation, xy=(0.04, 0.92), xycoords="axes fraction", fontsize=8)
    ax.set_xlabel("ln(1 - t)")
    ax.set_ylabel("shifted profile")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("maximal-singularity correction")
    return fig, {"annotation": annotation, "ell_hat": ell_hat}


def _fig_decay(spec: FigureSpec):
    prof = _read_csv(spec.profile, PROFILE_COLUMNS)
    report = _read_report(spec.report)
    fits = report["fits"]
    ell_hat = fits["ell_hat"]
    beta_hat = fits.get("beta_hat")
    t = prof["t"]
    dev = np.abs(prof["w"] - ell_hat)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    positive = dev > 0
    ax.semilogy(t[positive], dev[positive], lw=1.2, label="|w(t) - ell_hat|")
    annotation = f"beta_hat = {beta_hat!r}"
    if beta_hat is not None:
        anchor = int(np.argmax(positive))
        ref = dev[positive][len(dev[positive]) // 2]
        t_mid = t[positive][len(dev[positive]) // 2]
        ax.semilogy(t, ref * np.exp(beta_hat * (t - t_mid)), "--", lw=1.0,
                    label="fitted rate from report")
    ax.annotate(annotation, xy=(0.04, 0.92), xycoords="axes fraction", fontsize=8)
    ax.set_xlabel("t = ln r")
    ax.set_ylabel("deviation from the limit")
    ax.legend(loc="lower right", fontsize=8)
    ax.set_title("decay toward the asymptote")
    return fig, {"annotation": annotation, "beta_hat": beta_hat}


def _fig_heatmap(spec: FigureSpec):
    fld = _read_csv(spec.field, FIELD_COLUMNS)
    t = np.unique(fld["t"])
    theta = np.unique(fld["theta"])
    res = fld["residual"].reshape(t.size, theta.size)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    mesh = ax.pcolormesh(theta, t, res, shading="nearest", cmap="RdBu_r")
    fig.colorbar(mesh, ax=ax, label="discrete residual")
    ax.set_xlabel("theta")
    ax.set_ylabel("t = ln r")
    ax.set_title("2-d residual")
    return fig, {"max_abs_residual": float(np.max(np.abs(res)))}


_RENDERERS = {
    "slope": _fig_slope,
    "critical": _fig_critical,
    "decay": _fig_decay,
    "heatmap": _fig_heatmap,
}


def make_figure(spec: FigureSpec) -> dict:
    """Render one figure; returns the metadata drawn on it."""
    fig, meta = _RENDERERS[spec.kind](spec)
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    # empty metadata keeps the PNG byte-stable across runs
    fig.savefig(out, dpi=130, metadata={"Software": None})
    plt.close(fig)
    meta["out"] = str(out)
    return meta


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True)
    parser.add_argument("--profile")
    parser.add_argument("--field")
    parser.add_argument("--report")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=args.kind,
            out=Path(args.out),
            profile=None if args.profile is None else Path(args.profile),
            field=None if args.field is None else Path(args.field),
            report=None if args.report is None else Path(args.report),
        )
        meta = make_figure(spec)
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(meta, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
