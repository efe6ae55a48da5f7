"""Command-line front end.

Subcommands: simulate | density | compare | figures | all.  Any config field
can be overridden with repeated `--set path.to.field=value` flags; the
WFDENSITY_OUTPUT_ROOT environment variable re-roots relative output
directories.  Exit codes: 0 success, 2 config error, 3 numeric failure,
4 partial success (some comparison cells failed).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config
from .errors import ConfigError, WfdensityError
from .models import MODEL_KINDS, DensityModel
from .pipeline import read_distances_csv, run_compare, run_density, run_simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_PARTIAL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wfdensity",
        description="Simulate the discrete chain, evaluate transition-density models, "
        "and compare them against an adaptive kernel estimate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", type=Path, default=None, help="JSON config file")
        p.add_argument(
            "--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE",
            help="override a config field, e.g. --set protocol.n_traj=1000",
        )
        p.add_argument("-o", "--output-dir", type=Path, default=None, help="output directory")
        p.add_argument(
            "--variance-form", choices=["derived", "paper-literal"], default=None,
            help="moment-matched variance: the derived (1-e^-t)x0(1-x0) or the "
            "printed e^-t x0(1-x0) for comparison",
        )

    p_sim = sub.add_parser("simulate", help="write one trajectory-ensemble file per x0")
    common(p_sim)

    p_den = sub.add_parser("density", help="evaluate and normalize one density model")
    common(p_den)
    p_den.add_argument("--model", required=True, choices=MODEL_KINDS)
    p_den.add_argument("--x0", type=float, required=True)
    p_den.add_argument("--t", type=float, required=True)

    p_cmp = sub.add_parser("compare", help="distances of every model to the adaptive estimate")
    common(p_cmp)

    p_fig = sub.add_parser("figures", help="render SVG figures from run artifacts")
    common(p_fig)

    p_all = sub.add_parser("all", help="simulate, compare, then render figures")
    common(p_all)
    return parser


def _resolve_outdir(cfg: ExperimentConfig, args) -> Path:
    if args.output_dir is not None:
        return Path(args.output_dir)
    return cfg.resolved_output_dir()


def _cmd_simulate(cfg, outdir) -> int:
    paths = run_simulate(cfg, outdir)
    print(f"wrote {len(paths)} ensemble files to {outdir}")
    return EXIT_OK


def _cmd_density(cfg, outdir, args) -> int:
    model = next((m for m in cfg.models if m.kind == args.model), None)
    if model is None:
        model = DensityModel(args.model, variance_form=cfg.variance_form)
    path = run_density(cfg, model, args.x0, args.t, outdir)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_compare(cfg, outdir) -> int:
    report, outdir = run_compare(cfg, outdir)
    n_cells = len(cfg.x0_values) * len(cfg.times) * len(cfg.models)
    print(
        f"compare: {len(report.records)}/{n_cells} cells ok, "
        f"{len(report.failures)} failed; outputs in {outdir}"
    )
    for f in report.failures[:10]:
        print(f"  failed: x0={f.x0:g} t={f.t:g} {f.model}: {f.error}", file=sys.stderr)
    return EXIT_PARTIAL if report.failures else EXIT_OK


def _cmd_figures(cfg, outdir) -> int:
    from .config import write_resolved_config
    from .figures import comparison_grid_figure, exactmc_overlay_figure, heatmap_figure

    write_resolved_config(cfg, outdir)
    made = []
    distances = outdir / "distances.csv"
    if distances.exists():
        records = read_distances_csv(distances)
        if not records:
            print("distances.csv contains no records; nothing to plot", file=sys.stderr)
            return EXIT_NUMERIC
        made.append(heatmap_figure(records, outdir, metric="hellinger"))
        made.append(heatmap_figure(records, outdir, metric="l2"))
    panel_x0 = [v for v in (0.1, 0.3, 0.5) if v in cfg.x0_values]
    panel_t = [t for t in (0.1, 0.25, 0.45) if round(t * cfg.two_n) <= cfg.n_gen]
    if panel_x0 and panel_t:
        made.append(comparison_grid_figure(cfg, outdir, x0s=panel_x0, ts=panel_t))
    mid = 0.5 if 0.5 in cfg.x0_values else cfg.x0_values[len(cfg.x0_values) // 2]
    for t in (0.1, 0.3, 0.5):
        if round(t * cfg.two_n) <= cfg.n_gen:
            made.append(exactmc_overlay_figure(cfg, outdir, x0=mid, t=t))
    if not made:
        print("no figure inputs found (run simulate/compare first)", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {len(made)} figures to {outdir}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = list(args.overrides)
        if getattr(args, "variance_form", None):
            overrides.append(f"variance_form={args.variance_form}")
        cfg = load_config(args.config, overrides)
        outdir = _resolve_outdir(cfg, args)
        if args.command == "simulate":
            return _cmd_simulate(cfg, outdir)
        if args.command == "density":
            return _cmd_density(cfg, outdir, args)
        if args.command == "compare":
            return _cmd_compare(cfg, outdir)
        if args.command == "figures":
            return _cmd_figures(cfg, outdir)
        if args.command == "all":
            code = _cmd_simulate(cfg, outdir)
            if code != EXIT_OK:
                return code
            code = _cmd_compare(cfg, outdir)
            fig_code = _cmd_figures(cfg, outdir)
            return code if code != EXIT_OK else fig_code
        raise ConfigError(f"unknown command {args.command}")  # pragma: no cover
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WfdensityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
