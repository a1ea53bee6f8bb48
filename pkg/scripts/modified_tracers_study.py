#!/usr/bin/env python3
"""Modified passive tracers against the full inertial model at sigma = sqrt(tau).

Compares the effective diffusivity of the small-inertia model (drift
correction -tau (grad v) v) with the inertial particles model and with the
uncorrected passive tracers, all driven by the same noise streams.
"""

import argparse
import math
from pathlib import Path

from splitflow.config import ExperimentConfig
from splitflow.reports import write_run_outputs
from splitflow.runner import run_simulation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/modified_tracers"))
    ap.add_argument("--horizon", type=float, default=6e3)
    ap.add_argument("--paths", type=int, default=800)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    print("tau      K11 modified  K11 inertial  K11 passive")
    for tau in (0.01, 0.05, 0.1):
        sigma = math.sqrt(tau)
        base = dict(field="taylor-green", dt=1e-2, horizon=args.horizon,
                    n_paths=args.paths, seed=args.seed)
        rows = {}
        for label, cfg in (
            ("modified", ExperimentConfig(model="modified", tau=tau, **base)),
            ("inertial", ExperimentConfig(model="inertial", sigma=sigma, tau=tau, **base)),
            ("passive", ExperimentConfig(model="passive", sigma=sigma, **base)),
        ):
            res = run_simulation(cfg, workers=args.workers)
            write_run_outputs(res, args.out / f"tau_{tau:g}" / label)
            rows[label] = res.estimate.K[0, 0]
        print(f"{tau:<8g} {rows['modified']:<13.4f} {rows['inertial']:<13.4f} "
              f"{rows['passive']:.4f}")


if __name__ == "__main__":
    main()
