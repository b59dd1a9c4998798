#!/usr/bin/env python3
"""End-to-end reproduction of the classification experiments.

Runs the canonical parameter points through the CLI (so everything flows
through the documented config/CSV/JSON interfaces), then regenerates every
figure via the plotting layer.  Output lands in --out (default ./runs).

  subcritical strengths gamma in {0.5, 1.0, 1.5} at q = 1.5, m = a = b = 1
  the maximal singularity gamma = 2 (and the exactly-solvable a*b = 2 slice)
  the supercritical dichotomy at q = 3: singular branch near the eikonal
  plateau and the bounded branch
  a non-radial run with first-harmonic boundary data
"""
import argparse
import json
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def run(config: dict, out: Path, allow_fail: bool = False):
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(config, indent=1, sort_keys=True))
    cmd = [sys.executable, "-m", "expsing.cli", "solve",
           "--config", str(cfg_path), "--out", str(out)]
    proc = subprocess.run(cmd)
    if proc.returncode != 0 and not allow_fail:
        raise SystemExit(f"run {out.name} failed with exit code {proc.returncode}")
    return proc.returncode


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="runs")
    parser.add_argument("--n-points", type=int, default=4096)
    parser.add_argument("--figures", action="store_true",
                        help="also regenerate the figures (needs matplotlib)")
    args = parser.parse_args()
    root = Path(args.out)
    solver = {"n_points": args.n_points}

    for gamma in (0.5, 1.0, 1.5):
        run({"params": {"m": 1.0, "a": 1.0, "b": 1.0, "q": 1.5, "gamma": gamma},
             "branch": "subcritical", "boundary": 0.0, "solver": solver},
            root / f"subcritical_gamma_{gamma:g}")
    run({"params": {"m": 1.0, "a": 1.0, "b": 1.0, "q": 1.5, "gamma": 2.0},
         "branch": "critical", "boundary": 0.0, "solver": solver},
        root / "critical")
    run({"params": {"m": 1.0, "a": 1.0, "b": 2.0, "q": 1.5, "gamma": 1.0},
         "branch": "critical", "boundary": 0.0, "solver": solver},
        root / "critical_ab2")
    run({"params": {"m": 1.0, "a": 1.0, "b": 1.0, "q": 3.0},
         "branch": "supercritical_singular", "boundary": None, "solver": solver},
        root / "supercritical_singular")
    run({"params": {"m": 1.0, "a": 1.0, "b": 1.0, "q": 3.0},
         "branch": "regular", "boundary": 0.0, "solver": solver},
        root / "supercritical_regular")
    n_theta = 64
    import math

    theta = [2.0 * math.pi * j / n_theta for j in range(n_theta)]
    run({"params": {"m": 1.0, "a": 1.0, "b": 1.0, "q": 1.5, "gamma": 1.0},
         "branch": "nonradial", "n_theta": n_theta,
         "boundary": {"theta": theta, "values": [0.3 * math.cos(th) for th in theta]},
         "solver": solver},
        root / "nonradial_cosine")

    sweep_cfg = root / "sweep_config.json"
    sweep_cfg.write_text(json.dumps({
        "params": {"m": 1.0, "a": 1.0, "b": 1.0, "q": 1.5},
        "branch": "subcritical", "boundary": 0.0, "solver": solver,
        "sweep": {"gamma": [0.5, 1.0, 1.5, 2.0]},
    }))
    subprocess.run([sys.executable, "-m", "expsing.cli", "sweep",
                    "--config", str(sweep_cfg), "--out", str(root / "sweep"),
                    "--jobs", "2"], check=True)
    subprocess.run([sys.executable, "-m", "expsing.cli", "oracle",
                    "--out", str(root / "oracle")], check=True)

    if args.figures:
        subprocess.run([sys.executable, str(ROOT / "plots" / "make_all.py"),
                        str(root)], check=True)
    print(f"all runs complete under {root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
