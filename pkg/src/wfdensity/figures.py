"""Figure rendering: density-vs-histogram overlays and distance heatmaps.

All figures are written as SVG next to the CSV artifacts.  Output is
deterministic: the SVG hash salt is pinned and the creation-date metadata is
suppressed, so identical inputs give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError
from .metrics import DistanceRecord
from .models import DensityModel, density_grid, evaluate_model
from .pipeline import derive_seed, ensemble_path, fit_ade
from .simulate import load_ensemble, marginal_at

matplotlib.rcParams["svg.hashsalt"] = "wfdensity"

_MODEL_STYLE = {
    "ADE": dict(color="tab:blue", lw=1.8),
    "AE": dict(color="tab:red", lw=1.5),
    "AECorrected": dict(color="tab:pink", lw=1.5),
    "GaussA": dict(color="tab:green", lw=1.5),
    "GaussianMoment": dict(color="tab:orange", lw=1.5),
    "BetaMoment": dict(color="tab:purple", lw=1.5),
    "ExactMC": dict(color="tab:red", lw=1.8),
    "MutationAE": dict(color="tab:brown", lw=1.5),
    "SelectionAE": dict(color="tab:olive", lw=1.5),
}


def _load_existing(cfg: ExperimentConfig, outdir: Path, x0: float):
    path = ensemble_path(outdir, x0)
    if not path.exists():
        raise ConfigError(f"missing ensemble file {path}; run simulate first")
    return load_ensemble(path)


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def comparison_grid_figure(
    cfg: ExperimentConfig,
    outdir: Path,
    x0s=(0.1, 0.3, 0.5),
    ts=(0.1, 0.25, 0.45),
    filename: str = "comparison_grid.svg",
) -> Path:
    """Panel grid: histogram of the simulated marginal plus all model curves."""
    grid = density_grid(cfg.eps, cfg.grid_points)
    fig, axes = plt.subplots(
        len(x0s), len(ts), figsize=(4.2 * len(ts), 3.2 * len(x0s)), squeeze=False
    )
    x0_index = {x0: i for i, x0 in enumerate(cfg.x0_values)}
    for r, x0 in enumerate(x0s):
        if x0 not in x0_index:
            raise ConfigError(f"figure x0={x0} is not in protocol.x0")
        ensemble = _load_existing(cfg, outdir, x0)
        for c, t in enumerate(ts):
            ax = axes[r][c]
            sample = marginal_at(ensemble, t)
            ax.hist(
                sample, bins=cfg.histogram_bins, range=(0.0, 1.0), density=True,
                color="0.8", edgecolor="0.6", lw=0.3, label="simulated",
            )
            ade = fit_ade(cfg, sample)
            ax.plot(ade.grid, ade.values, label="ADE", **_MODEL_STYLE["ADE"])
            for model in cfg.models:
                seed = derive_seed(cfg.seed, "density", model.kind, f"{x0:.12g}", f"{t:.12g}")
                gd = evaluate_model(
                    model, cfg.spec, x0, t, grid,
                    n_paths=cfg.n_paths, k_steps=cfg.k_steps, seed=seed,
                )
                style = _MODEL_STYLE.get(model.kind) or {}
                ax.plot(gd.grid, gd.values, label=model.kind, **style)
            ax.set_xlim(0, 1)
            ax.set_ylim(bottom=0)
            ax.set_title(f"x0={x0:g}, t={t:g}", fontsize=10)
            if r == len(x0s) - 1:
                ax.set_xlabel("allele frequency")
            if c == 0:
                ax.set_ylabel("density")
    handles, labels = axes[0][0].get_legend_handles_labels()
    fig.legend(handles, labels, loc="upper center", ncol=len(labels), frameon=False, fontsize=9)
    fig.tight_layout(rect=(0, 0, 1, 0.94))
    return _save(fig, outdir / filename)


def exactmc_overlay_figure(
    cfg: ExperimentConfig,
    outdir: Path,
    x0: float = 0.5,
    t: float = 0.1,
) -> Path:
    """Histogram of the marginal with the Monte Carlo density and its CI band."""
    x0_index = {v: i for i, v in enumerate(cfg.x0_values)}
    if x0 not in x0_index:
        raise ConfigError(f"figure x0={x0} is not in protocol.x0")
    ensemble = _load_existing(cfg, outdir, x0)
    sample = marginal_at(ensemble, t)
    grid = density_grid(cfg.eps, cfg.grid_points)
    seed = derive_seed(cfg.seed, "density", "ExactMC", f"{x0:.12g}", f"{t:.12g}")
    gd = evaluate_model(
        DensityModel("ExactMC"), cfg.spec, x0, t, grid,
        n_paths=cfg.n_paths, k_steps=cfg.k_steps, seed=seed,
    )
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.hist(
        sample, bins=cfg.histogram_bins, range=(0.0, 1.0), density=True,
        color="0.8", edgecolor="0.6", lw=0.3, label="simulated",
    )
    ax.plot(gd.grid, gd.values, label="exact (MC)", **_MODEL_STYLE["ExactMC"])
    if gd.std_error is not None:
        half = 1.96 * gd.std_error
        ax.fill_between(
            gd.grid, np.maximum(0.0, gd.values - half), gd.values + half,
            color="tab:red", alpha=0.25, lw=0, label="95% CI",
        )
    ax.set_xlim(0, 1)
    ax.set_ylim(bottom=0)
    ax.set_xlabel("allele frequency")
    ax.set_ylabel("density")
    ax.set_title(f"x0={x0:g}, t={t:g} ({cfg.n_paths} bridge paths)")
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    return _save(fig, outdir / f"exactmc_x0_{x0:.4g}_t_{t:.4g}.svg")


def _cell_edges(centers: list[float]) -> np.ndarray:
    """Midpoint cell edges so unevenly spaced grids render without distortion."""
    c = np.asarray(centers, dtype=float)
    if c.size == 1:
        pad = 0.5 * abs(c[0]) if c[0] else 0.5
        return np.array([c[0] - pad, c[0] + pad])
    mids = 0.5 * (c[:-1] + c[1:])
    return np.concatenate([[c[0] - (mids[0] - c[0])], mids, [c[-1] + (c[-1] - mids[-1])]])


def heatmap_figure(
    records: list[DistanceRecord],
    outdir: Path,
    metric: str = "hellinger",
) -> Path:
    """One panel per model of -log10(H) (or log10(L^2)) over the (t, x0) grid."""
    if not records:
        raise ConfigError("no distance records: nothing to plot")
    models = sorted({r.model for r in records})
    x0s = sorted({r.x0 for r in records})
    ts = sorted({r.t for r in records})
    xi = {v: i for i, v in enumerate(x0s)}
    ti = {v: i for i, v in enumerate(ts)}
    fig, axes = plt.subplots(
        1, len(models), figsize=(3.6 * len(models), 3.4), squeeze=False, sharey=True
    )
    ims = []
    for k, model in enumerate(models):
        mat = np.full((len(x0s), len(ts)), np.nan)
        for r in records:
            if r.model != model:
                continue
            if metric == "hellinger":
                mat[xi[r.x0], ti[r.t]] = -np.log10(r.hellinger) if r.hellinger > 0 else np.nan
            else:
                mat[xi[r.x0], ti[r.t]] = np.log10(r.l2**2) if r.l2 > 0 else np.nan
        ax = axes[0][k]
        im = ax.pcolormesh(_cell_edges(ts), _cell_edges(x0s), mat, cmap="viridis")
        ims.append(im)
        ax.set_title(model, fontsize=10)
        ax.set_xlabel("t")
        if k == 0:
            ax.set_ylabel("x0")
    finite = [im.get_array()[np.isfinite(im.get_array())] for im in ims]
    lo = min(arr.min() for arr in finite if arr.size)
    hi = max(arr.max() for arr in finite if arr.size)
    for im in ims:
        im.set_clim(lo, hi)
    label = "-log10(Hellinger)" if metric == "hellinger" else "log10(L2^2)"
    fig.colorbar(ims[-1], ax=[axes[0][k] for k in range(len(models))], label=label, shrink=0.9)
    name = "heatmap_hellinger.svg" if metric == "hellinger" else "heatmap_l2.svg"
    return _save(fig, outdir / name)
