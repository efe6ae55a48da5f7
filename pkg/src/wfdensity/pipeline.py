"""Orchestration: simulate, evaluate densities, fit the ADE, compare, report.

Every artifact lands in the config's output directory with a resolved-config
copy written first, so a run is reproducible from its own outputs.  Cell
seeds are derived from the master seed by hashing stable tags, which keeps
results identical no matter how cells would be scheduled.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, write_resolved_config
from .errors import ConfigError, WfdensityError
from .kde import BetaKernelEstimate, default_b_grid, default_eval_grid, lepski_select_b, write_kde_estimate
from .metrics import DistanceRecord, grid_spec_label, hellinger, l2_distance
from .models import DensityModel, density_grid, evaluate_model, write_grid_density
from .simulate import TrajectoryEnsemble, load_ensemble, marginal_at, save_ensemble, simulate_ensemble

CSV_SCHEMA_DISTANCES = "wfdensity.distances.v1"
CSV_SCHEMA_HEATMAP = "wfdensity.heatmap.v1"


def derive_seed(master: int, *tags) -> int:
    """Stable 63-bit sub-seed from the master seed and a tag tuple."""
    text = "wfdensity:" + str(int(master)) + ":" + ":".join(str(t) for t in tags)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass
class CellFailure:
    x0: float
    t: float
    model: str
    error: str


@dataclass
class ComparisonReport:
    records: list[DistanceRecord]
    failures: list[CellFailure]
    config_hash: str
    seed: int
    code_version: str = __version__

    def to_json_dict(self) -> dict:
        return {
            "schema": "wfdensity.report.v1",
            "provenance": {
                "config_hash": self.config_hash,
                "seed": self.seed,
                "code_version": self.code_version,
            },
            "n_records": len(self.records),
            "failures": [
                {"x0": f.x0, "t": f.t, "model": f.model, "error": f.error}
                for f in self.failures
            ],
        }


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def ensemble_path(outdir: Path, x0: float) -> Path:
    return outdir / f"ensemble_x0_{x0:.4g}.wfens"


def run_simulate(cfg: ExperimentConfig, outdir: Path | None = None) -> list[Path]:
    """One ensemble file per x0, plus a manifest listing the outputs."""
    outdir = cfg.resolved_output_dir() if outdir is None else Path(outdir)
    write_resolved_config(cfg, outdir)
    paths = []
    for i, x0 in enumerate(cfg.x0_values):
        ens = simulate_ensemble(
            cfg.two_n, cfg.n_gen, x0, cfg.n_traj, seed=derive_seed(cfg.seed, "simulate", i)
        )
        paths.append(save_ensemble(ens, ensemble_path(outdir, x0)))
    manifest = {
        "schema": "wfdensity.manifest.v1",
        "config_hash": cfg.config_hash(),
        "ensembles": [p.name for p in paths],
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths


def load_or_simulate(cfg: ExperimentConfig, outdir: Path, x0: float, index: int) -> TrajectoryEnsemble:
    path = ensemble_path(outdir, x0)
    if path.exists():
        ens = load_ensemble(path)
        if ens.two_n == cfg.two_n and ens.n_gen == cfg.n_gen and ens.n_traj == cfg.n_traj:
            return ens
    ens = simulate_ensemble(
        cfg.two_n, cfg.n_gen, x0, cfg.n_traj, seed=derive_seed(cfg.seed, "simulate", index)
    )
    save_ensemble(ens, path)
    return ens


def fit_ade(cfg: ExperimentConfig, sample) -> BetaKernelEstimate:
    return lepski_select_b(
        sample,
        b_grid=default_b_grid(cfg.kde_b_max, cfg.kde_b_levels),
        c=cfg.kde_c,
        grid=default_eval_grid(cfg.kde_points),
    )


def run_density(
    cfg: ExperimentConfig,
    model: DensityModel,
    x0: float,
    t: float,
    outdir: Path | None = None,
) -> Path:
    """Evaluate + normalize one model and write its CSV/JSON pair."""
    outdir = cfg.resolved_output_dir() if outdir is None else Path(outdir)
    write_resolved_config(cfg, outdir)
    seed = derive_seed(cfg.seed, "density", model.kind, _fmt(x0), _fmt(t))
    gd = evaluate_model(
        model, cfg.spec, x0, t, density_grid(cfg.eps, cfg.grid_points),
        n_paths=cfg.n_paths, k_steps=cfg.k_steps, seed=seed,
    )
    name = f"density_{model.kind}_x0_{x0:.4g}_t_{t:.4g}.csv"
    return write_grid_density(gd, outdir / name, seed=seed)


def run_compare(cfg: ExperimentConfig, outdir: Path | None = None) -> tuple[ComparisonReport, Path]:
    """Full (x0 x t x model) comparison against the adaptive estimate.

    Per-cell failures are recorded and the run continues; the report, the
    distances CSV and both heatmap CSVs are always written.
    """
    outdir = cfg.resolved_output_dir() if outdir is None else Path(outdir)
    write_resolved_config(cfg, outdir)
    ade_dir = outdir / "ade"
    ade_dir.mkdir(parents=True, exist_ok=True)
    records: list[DistanceRecord] = []
    failures: list[CellFailure] = []
    grid = density_grid(cfg.eps, cfg.grid_points)
    for i, x0 in enumerate(cfg.x0_values):
        ensemble = load_or_simulate(cfg, outdir, x0, i)
        for t in cfg.times:
            try:
                sample = marginal_at(ensemble, t)
                ade = fit_ade(cfg, sample)
                # the smoothing-selection table goes out with every cell for audit
                write_kde_estimate(
                    ade,
                    ade_dir / f"ade_x0_{x0:.4g}_t_{t:.6g}.csv",
                    meta={"x0": x0, "t": t, "n_traj": cfg.n_traj},
                )
            except WfdensityError as exc:
                failures.extend(
                    CellFailure(x0, t, m.kind, f"ADE fit failed: {exc}") for m in cfg.models
                )
                continue
            for model in cfg.models:
                try:
                    seed = derive_seed(cfg.seed, "density", model.kind, _fmt(x0), _fmt(t))
                    gd = evaluate_model(
                        model, cfg.spec, x0, t, grid,
                        n_paths=cfg.n_paths, k_steps=cfg.k_steps, seed=seed,
                    )
                    records.append(
                        DistanceRecord(
                            x0=x0,
                            t=t,
                            model=model.kind,
                            hellinger=hellinger(ade, gd, eps=cfg.distance_eps),
                            l2=l2_distance(ade, gd, eps=cfg.distance_eps),
                            grid_spec=grid_spec_label(ade, gd, eps=cfg.distance_eps),
                        )
                    )
                except WfdensityError as exc:
                    failures.append(CellFailure(x0, t, model.kind, str(exc)))
    report = ComparisonReport(
        records=records, failures=failures, config_hash=cfg.config_hash(), seed=cfg.seed
    )
    write_distances_csv(records, outdir / "distances.csv")
    write_heatmap_csv(records, outdir / "heatmap_hellinger.csv", "neg_log10_hellinger")
    write_heatmap_csv(records, outdir / "heatmap_l2.csv", "log10_l2_squared")
    (outdir / "report.json").write_text(
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"
    )
    return report, outdir


def write_distances_csv(records: list[DistanceRecord], path: Path) -> Path:
    with open(path, "w") as fh:
        fh.write(f"# schema={CSV_SCHEMA_DISTANCES}\n")
        fh.write("x0,t,model,hellinger,l2\n")
        for r in records:
            fh.write(f"{_fmt(r.x0)},{_fmt(r.t)},{r.model},{_fmt(r.hellinger)},{_fmt(r.l2)}\n")
    return path


def write_heatmap_csv(records: list[DistanceRecord], path: Path, transform: str) -> Path:
    """Long-format heatmap values in the color scales the report figures use.

    `transform` is 'neg_log10_hellinger' (-log10 H) or 'log10_l2_squared'
    (log10 of the squared L2 norm).
    """
    with open(path, "w") as fh:
        fh.write(f"# schema={CSV_SCHEMA_HEATMAP}\n")
        fh.write(f"model,x0,t,{transform}\n")
        for r in records:
            if transform == "neg_log10_hellinger":
                val = -np.log10(r.hellinger) if r.hellinger > 0 else np.inf
            elif transform == "log10_l2_squared":
                val = np.log10(r.l2**2) if r.l2 > 0 else -np.inf
            else:
                raise ConfigError(f"unknown heatmap transform {transform}")
            fh.write(f"{r.model},{_fmt(r.x0)},{_fmt(r.t)},{_fmt(val)}\n")
    return path


def read_distances_csv(path: Path) -> list[DistanceRecord]:
    records = []
    with open(path) as fh:
        header = fh.readline()
        if CSV_SCHEMA_DISTANCES not in header:
            raise ConfigError(f"{path} is not a distances CSV (missing schema header)")
        fh.readline()  # column header
        for line in fh:
            x0, t, model, h, l2 = line.strip().split(",")
            records.append(
                DistanceRecord(
                    x0=float(x0), t=float(t), model=model,
                    hellinger=float(h), l2=float(l2), grid_spec="",
                )
            )
    return records
