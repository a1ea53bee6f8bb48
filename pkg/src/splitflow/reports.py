"""Serialization of run results: summary.json and CSV tables.

Every emitted byte is a pure function of (config, seed); no timestamps,
no environment echoes.  Floats are rendered with repr for exact
round-tripping.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

from .config import ExperimentConfig
from .estimators import DiffusivityEstimate, PowerLawFit, RunningSeries
from .runner import SimulationResult, SlopeReport, SweepResult


def config_payload(cfg: ExperimentConfig) -> dict:
    out = asdict(cfg)
    return {k: v for k, v in out.items() if v is not None}


def estimate_payload(est: DiffusivityEstimate) -> dict:
    return {
        "K": est.K.tolist(),
        "stderr": est.stderr.tolist(),
        "n_paths": est.n_paths,
        "horizon": est.horizon,
    }


def fit_payload(fit: PowerLawFit) -> dict:
    return {"exponent": fit.exponent, "prefactor": fit.prefactor,
            "r_squared": fit.r_squared}


def result_payload(result: SimulationResult) -> dict:
    return {
        "config": config_payload(result.config),
        "diffusivity": estimate_payload(result.estimate),
    }


def sweep_payload(sweep: SweepResult) -> dict:
    return {
        "parameter": sweep.parameter,
        "values": list(sweep.values),
        "fit_entry": sweep.fit_entry,
        "fit": fit_payload(sweep.fit),
        "runs": [result_payload(r) for r in sweep.runs],
    }


def slope_payload(report: SlopeReport) -> dict:
    return {
        "parameter": report.parameter,
        "values": list(report.values),
        "errors": list(report.errors),
        "slope": report.slope,
        "r_squared": report.r_squared,
    }


def summary_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def series_csv(series: RunningSeries) -> str:
    lines = ["t,value,stderr"]
    for t, v, s in zip(series.times, series.values, series.stderr):
        lines.append(f"{float(t)!r},{float(v)!r},{float(s)!r}")
    return "\n".join(lines) + "\n"


def sweep_csv(sweep: SweepResult) -> str:
    lines = ["parameter,K11,K22,stderr11,stderr22"]
    for value, run in zip(sweep.values, sweep.runs):
        k, err = run.estimate.K, run.estimate.stderr
        lines.append(f"{float(value)!r},{float(k[0, 0])!r},{float(k[1, 1])!r},"
                     f"{float(err[0, 0])!r},{float(err[1, 1])!r}")
    return "\n".join(lines) + "\n"


def write_run_outputs(result: SimulationResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(summary_json(result_payload(result)))
    (out_dir / "series.csv").write_text(series_csv(result.running))
    if result.psi is not None:
        (out_dir / "psi_series.csv").write_text(series_csv(result.psi))


def write_sweep_outputs(sweep: SweepResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(summary_json(sweep_payload(sweep)))
    (out_dir / "sweep.csv").write_text(sweep_csv(sweep))
    for value, run in zip(sweep.values, sweep.runs):
        write_run_outputs(run, out_dir / f"{sweep.parameter}_{value:g}")
