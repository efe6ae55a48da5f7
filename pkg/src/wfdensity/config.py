"""Experiment configuration: JSON round-trip, dotted-path overrides, hashing.

A config file is a JSON object with the groups `spec`, `protocol`, `times`,
`models`, `mc`, `kde`, `quadrature`, `metrics`, plus `variance_form`, `seed`
and `output_dir`.  Every group and field is optional; defaults reproduce the
desk-scale protocol (2N = 1000, 500 generations, x0 = 0.1..0.9, 100
trajectories, 50 log-spaced times in [0.001, 0.5]).
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diffusion import DiffusionSpec
from .errors import ConfigError, ParameterError
from .kde import DEFAULT_B_LEVELS, DEFAULT_B_MAX, DEFAULT_EVAL_POINTS, DEFAULT_LEPSKI_C
from .metrics import DEFAULT_CLIP_EPS
from .models import DEFAULT_EPS, DEFAULT_GRID_POINTS, DensityModel, VARIANCE_FORMS

ENV_OUTPUT_ROOT = "WFDENSITY_OUTPUT_ROOT"

DEFAULT_X0 = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DEFAULT_MODELS = ("BetaMoment", "GaussianMoment", "AE", "GaussA")


def default_times(n: int = 50, lo: float = 0.001, hi: float = 0.5) -> tuple[float, ...]:
    return tuple(float(t) for t in np.geomspace(lo, hi, n))


@dataclass
class ExperimentConfig:
    spec: DiffusionSpec = field(default_factory=DiffusionSpec.neutral)
    two_n: int = 1000
    n_gen: int = 500
    x0_values: tuple[float, ...] = DEFAULT_X0
    n_traj: int = 100
    times: tuple[float, ...] = field(default_factory=default_times)
    models: tuple[DensityModel, ...] = ()
    n_paths: int = 500
    k_steps: int = 100
    kde_b_max: float = DEFAULT_B_MAX
    kde_b_levels: int = DEFAULT_B_LEVELS
    kde_c: float = DEFAULT_LEPSKI_C
    kde_points: int = DEFAULT_EVAL_POINTS
    eps: float = DEFAULT_EPS
    grid_points: int = DEFAULT_GRID_POINTS
    distance_eps: float = DEFAULT_CLIP_EPS
    variance_form: str = "derived"
    histogram_bins: int = 50
    seed: int = 20260809
    output_dir: str = "wfdensity-out"

    def __post_init__(self):
        if not self.models:
            self.models = tuple(
                DensityModel(kind, variance_form=self.variance_form) for kind in DEFAULT_MODELS
            )
        self.validate()

    def validate(self):
        checks = [
            (self.two_n >= 2, "protocol.two_n", "must be >= 2"),
            (self.n_gen >= 1, "protocol.n_gen", "must be >= 1"),
            (self.n_traj >= 1, "protocol.n_traj", "must be >= 1"),
            (len(self.x0_values) >= 1, "protocol.x0", "must be non-empty"),
            (all(0.0 < v < 1.0 for v in self.x0_values), "protocol.x0", "entries must lie in (0,1)"),
            (len(self.times) >= 1, "times", "must be non-empty"),
            (all(t > 0.0 for t in self.times), "times", "entries must be positive"),
            (self.n_paths >= 2, "mc.n_paths", "must be >= 2"),
            (self.k_steps >= 2, "mc.k_steps", "must be >= 2"),
            (self.kde_b_max > 0.0, "kde.b_max", "must be > 0"),
            (self.kde_b_levels >= 1, "kde.b_levels", "must be >= 1"),
            (self.kde_c > 0.0, "kde.c", "must be > 0"),
            (self.kde_points >= 16, "kde.eval_points", "must be >= 16"),
            (0.0 < self.eps < 0.5, "quadrature.epsilon", "must lie in (0, 0.5)"),
            (self.grid_points >= 3, "quadrature.grid_points", "must be >= 3"),
            (0.0 < self.distance_eps < 0.5, "metrics.epsilon", "must lie in (0, 0.5)"),
            (self.variance_form in VARIANCE_FORMS, "variance_form", f"must be one of {VARIANCE_FORMS}"),
            (self.histogram_bins >= 2, "figures.histogram_bins", "must be >= 2"),
        ]
        for ok, fieldpath, msg in checks:
            if not ok:
                raise ConfigError(f"{fieldpath}: {msg}")
        for t in self.times:
            if round(t * self.two_n) > self.n_gen:
                raise ConfigError(
                    f"times: t={t} maps to generation {round(t * self.two_n)} > n_gen={self.n_gen}"
                )

    # -- JSON layout ---------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "schema": "wfdensity.config.v1",
            "spec": {
                "a": self.spec.a,
                "b": self.spec.b,
                "alpha": self.spec.alpha,
                "h": self.spec.h,
                "beta1": self.spec.beta1,
                "beta2": self.spec.beta2,
            },
            "protocol": {
                "two_n": self.two_n,
                "n_gen": self.n_gen,
                "x0": list(self.x0_values),
                "n_traj": self.n_traj,
            },
            "times": list(self.times),
            "models": [_model_to_json(m) for m in self.models],
            "mc": {"n_paths": self.n_paths, "k_steps": self.k_steps},
            "kde": {
                "b_max": self.kde_b_max,
                "b_levels": self.kde_b_levels,
                "c": self.kde_c,
                "eval_points": self.kde_points,
            },
            "quadrature": {"epsilon": self.eps, "grid_points": self.grid_points},
            "metrics": {"epsilon": self.distance_eps},
            "figures": {"histogram_bins": self.histogram_bins},
            "variance_form": self.variance_form,
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        known = {
            "schema", "spec", "protocol", "times", "models", "mc", "kde",
            "quadrature", "metrics", "figures", "variance_form", "seed", "output_dir",
        }
        for key in data:
            if key not in known:
                raise ConfigError(f"{key}: unknown config section")
        spec_d = data.get("spec", {})
        proto = data.get("protocol", {})
        mc = data.get("mc", {})
        kde = data.get("kde", {})
        quad = data.get("quadrature", {})
        metrics = data.get("metrics", {})
        figures = data.get("figures", {})
        variance_form = data.get("variance_form", "derived")
        try:
            spec = DiffusionSpec(
                a=float(spec_d.get("a", 0.5)),
                b=float(spec_d.get("b", 0.5)),
                alpha=float(spec_d.get("alpha", 0.0)),
                h=float(spec_d.get("h", 0.0)),
                beta1=float(spec_d.get("beta1", 0.0)),
                beta2=float(spec_d.get("beta2", 0.0)),
            )
        except ParameterError as exc:
            raise ConfigError(f"spec: {exc}") from exc
        models = tuple(
            _model_from_json(m, variance_form) for m in data.get("models", [])
        )
        kwargs = dict(
            spec=spec,
            two_n=_as_int(proto.get("two_n", 1000), "protocol.two_n"),
            n_gen=_as_int(proto.get("n_gen", 500), "protocol.n_gen"),
            x0_values=tuple(float(v) for v in proto.get("x0", DEFAULT_X0)),
            n_traj=_as_int(proto.get("n_traj", 100), "protocol.n_traj"),
            times=tuple(float(t) for t in data.get("times", default_times())),
            models=models,
            n_paths=_as_int(mc.get("n_paths", 500), "mc.n_paths"),
            k_steps=_as_int(mc.get("k_steps", 100), "mc.k_steps"),
            kde_b_max=float(kde.get("b_max", DEFAULT_B_MAX)),
            kde_b_levels=_as_int(kde.get("b_levels", DEFAULT_B_LEVELS), "kde.b_levels"),
            kde_c=float(kde.get("c", DEFAULT_LEPSKI_C)),
            kde_points=_as_int(kde.get("eval_points", DEFAULT_EVAL_POINTS), "kde.eval_points"),
            eps=float(quad.get("epsilon", DEFAULT_EPS)),
            grid_points=_as_int(quad.get("grid_points", DEFAULT_GRID_POINTS), "quadrature.grid_points"),
            distance_eps=float(metrics.get("epsilon", DEFAULT_CLIP_EPS)),
            variance_form=variance_form,
            histogram_bins=_as_int(figures.get("histogram_bins", 50), "figures.histogram_bins"),
            seed=_as_int(data.get("seed", 20260809), "seed"),
            output_dir=str(data.get("output_dir", "wfdensity-out")),
        )
        try:
            return cls(**kwargs)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc

    def config_hash(self) -> str:
        canon = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def resolved_output_dir(self) -> Path:
        root = os.environ.get(ENV_OUTPUT_ROOT)
        out = Path(self.output_dir)
        if root and not out.is_absolute():
            out = Path(root) / out
        return out


def _as_int(value, fieldpath: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
        raise ConfigError(f"{fieldpath}: expected an integer, got {value!r}")
    return int(value)


def _model_to_json(m: DensityModel):
    extra = {
        k: v
        for k, v in (
            ("beta1", m.beta1), ("beta2", m.beta2), ("alpha", m.alpha), ("h", m.h),
        )
        if v is not None
    }
    if m.variance_form != "derived":
        extra["variance_form"] = m.variance_form
    if m.validity_c != 5.0:
        extra["validity_c"] = m.validity_c
    if not extra:
        return m.kind
    return {"kind": m.kind, **extra}


def _model_from_json(entry, variance_form: str) -> DensityModel:
    try:
        if isinstance(entry, str):
            return DensityModel(entry, variance_form=variance_form)
        if isinstance(entry, dict):
            d = dict(entry)
            kind = d.pop("kind", None)
            if kind is None:
                raise ConfigError("models: model objects need a 'kind' field")
            kwargs = {}
            for key in ("beta1", "beta2", "alpha", "h", "validity_c"):
                if key in d:
                    kwargs[key] = float(d.pop(key))
            kwargs["variance_form"] = str(d.pop("variance_form", variance_form))
            if d:
                raise ConfigError(f"models: unknown model fields {sorted(d)}")
            return DensityModel(kind, **kwargs)
    except ParameterError as exc:
        raise ConfigError(f"models: {exc}") from exc
    raise ConfigError(f"models: entries must be strings or objects, got {entry!r}")


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Load a config file (or defaults) and apply `--set path.to.field=value` pairs."""
    if path is None:
        data = {}
    else:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    base = ExperimentConfig.from_json_dict(data).to_json_dict()
    for pair in overrides or []:
        base = apply_override(base, pair)
    return ExperimentConfig.from_json_dict(base)


def apply_override(data: dict, pair: str) -> dict:
    """Apply one `path.to.field=value` override; values parse as JSON when possible."""
    if "=" not in pair:
        raise ConfigError(f"--set expects path.to.field=value, got {pair!r}")
    dotted, raw = pair.split("=", 1)
    keys = [k for k in dotted.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"--set has an empty field path in {pair!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    out = copy.deepcopy(data)
    node = out
    for k in keys[:-1]:
        nxt = node.get(k)
        if not isinstance(nxt, dict):
            nxt = {}
            node[k] = nxt
        node = nxt
    node[keys[-1]] = value
    return out


def write_resolved_config(cfg: ExperimentConfig, outdir: Path) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "config_resolved.json"
    payload = cfg.to_json_dict()
    payload["config_hash"] = cfg.config_hash()
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path
