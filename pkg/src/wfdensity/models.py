"""Closed-form candidate transition densities and Simpson normalization.

Every density here is for the square-root volatility case (a = b = 1/2)
where the transform is F(x) = 2 arcsin(sqrt(x)).  The raw closed forms are
not proper densities; `normalize` divides by a Simpson-rule constant on a
grid clipped away from the boundary so the integrable (x(1-x))^(-3/4)
singularities cause no trouble.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .diffusion import DiffusionSpec, lamperti_forward, nu
from .errors import DomainError, ParameterError

MODEL_KINDS = (
    "ExactMC",
    "AE",
    "AECorrected",
    "GaussA",
    "GaussianMoment",
    "BetaMoment",
    "MutationAE",
    "SelectionAE",
)

#: Normalization domain is [EPS, 1-EPS]; config-exposed, these are defaults.
DEFAULT_EPS = 1e-4
DEFAULT_GRID_POINTS = 2001

#: Nodes of the composite Simpson rule used for the chord average of nu.
_CHORD_NODES = 65

VARIANCE_FORMS = ("derived", "paper-literal")


@dataclass(frozen=True)
class DensityModel:
    """Identifier plus parameters selecting one candidate density.

    `kind` decides which parameters are read: mutation kinds read (beta1,
    beta2), selection kinds read (alpha, h), the moment-matched kinds read
    `variance_form`, and GaussA reads `validity_c`.  Parameters left as None
    fall back to the diffusion spec at evaluation time.
    """

    kind: str
    beta1: float | None = None
    beta2: float | None = None
    alpha: float | None = None
    h: float | None = None
    variance_form: str = "derived"
    validity_c: float = 5.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ParameterError(f"unknown density model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.variance_form not in VARIANCE_FORMS:
            raise ParameterError(f"variance_form must be one of {VARIANCE_FORMS}")

    @property
    def label(self) -> str:
        return self.kind


@dataclass
class GridDensity:
    """A density given by values on a finite grid of (0,1).

    After `normalize`, Simpson integration of `values` over `grid` is 1 up
    to roundoff and `norm_constant` records the raw-density mass that was
    divided out.
    """

    grid: np.ndarray
    values: np.ndarray
    norm_constant: float
    model: DensityModel
    x0: float
    t: float
    spec: DiffusionSpec
    std_error: np.ndarray | None = None
    extras: dict = field(default_factory=dict)


def density_grid(eps: float = DEFAULT_EPS, n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Default uniform evaluation grid on [eps, 1-eps]."""
    if not (0.0 < eps < 0.5):
        raise ParameterError(f"eps must lie in (0, 0.5), got {eps}")
    if n_points < 3:
        raise ParameterError("need at least 3 grid points")
    return np.linspace(eps, 1.0 - eps, n_points)


def _check_args(x0, x, t):
    xarr = np.asarray(x, dtype=float)
    if not (0.0 < x0 < 1.0):
        raise DomainError(f"x0 must lie strictly inside (0,1), got {x0}")
    if np.any(xarr <= 0.0) or np.any(xarr >= 1.0):
        raise DomainError("x must lie strictly inside (0,1)")
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    return xarr


_WF = DiffusionSpec.neutral()


def _ae_family(x0, x, t, e_x0, e_1mx0, e_x, e_1mx):
    # Shared kernel so that the mutation/selection variants reduce to the
    # plain expansion bitwise when their drift parameters are zero.
    x = _check_args(x0, x, t)
    dy = lamperti_forward(_WF, x) - lamperti_forward(_WF, x0)
    pref = (x0**e_x0 * (1.0 - x0) ** e_1mx0) / (x**e_x * (1.0 - x) ** e_1mx)
    with np.errstate(under="ignore"):
        out = pref * np.exp(-dy * dy / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)
    return out


def ae_density(x0, x, t):
    """Small-time expansion without the first-order correction.

    (2 pi t)^(-1/2) (x0(1-x0))^(1/4) / (x(1-x))^(3/4) * exp(-(F(x)-F(x0))^2 / 2t)
    """
    return _ae_family(x0, x, t, 0.25, 0.25, 0.75, 0.75)


def chord_mean_nu(x0, x):
    """Average of nu over the transformed-coordinate chord from F(x0) to F(x).

    Composite Simpson with 64 subintervals; parametrized as
    int_0^1 nu(y0 + s (y-y0)) ds, which degenerates gracefully to nu(y0)
    when x == x0.
    """
    x = np.asarray(x, dtype=float)
    y0 = lamperti_forward(_WF, np.asarray(x0, dtype=float))
    y1 = lamperti_forward(_WF, x)
    s = np.linspace(0.0, 1.0, _CHORD_NODES)
    ys = y0 + np.multiply.outer(s, y1 - y0)
    return integrate.simpson(nu(_WF, ys), x=s, axis=0)


def ae_corrected_density(x0, x, t):
    """Expansion including the first-order factor, clamped below at 0.

    The factor is 1 - t/2 * (chord average of nu); it can go negative for
    large t, where the expansion is invalid anyway.
    """
    base = ae_density(x0, x, t)
    factor = np.maximum(0.0, 1.0 - 0.5 * t * chord_mean_nu(x0, x))
    return base * factor


def gauss_approx_density(x0, x, t):
    """Gaussian with mean x0 and variance t*x0*(1-x0) (small-t, |x-x0|=O(t))."""
    x = _check_args(x0, x, t)
    v = t * x0 * (1.0 - x0)
    with np.errstate(under="ignore"):
        out = np.exp(-((x - x0) ** 2) / (2.0 * v)) / math.sqrt(2.0 * math.pi * v)
    return out


def gauss_approx_outside_validity(x0, x, t, c: float = 5.0):
    """Mask of evaluations outside the |x-x0| <= c*t application range."""
    return np.abs(np.asarray(x, dtype=float) - x0) > c * t


def moment_variance(x0: float, t: float, variance_form: str = "derived") -> float:
    """Time-t variance of the rescaled discrete chain.

    'derived' uses (1 - e^-t) x0 (1-x0), the limit of the exact binomial
    chain variance; 'paper-literal' reproduces the printed e^-t x0 (1-x0)
    for comparison.
    """
    if variance_form == "derived":
        return -math.expm1(-t) * x0 * (1.0 - x0)
    if variance_form == "paper-literal":
        return math.exp(-t) * x0 * (1.0 - x0)
    raise ParameterError(f"variance_form must be one of {VARIANCE_FORMS}")


def gaussian_moment_density(x0, x, t, variance_form: str = "derived"):
    """Gaussian with the chain's mean x0 and moment-matched variance."""
    x = _check_args(x0, x, t)
    v = moment_variance(x0, t, variance_form)
    with np.errstate(under="ignore"):
        out = np.exp(-((x - x0) ** 2) / (2.0 * v)) / math.sqrt(2.0 * math.pi * v)
    return out


def beta_moment_params(x0: float, t: float, variance_form: str = "derived") -> tuple[float, float]:
    """Moment-matched Beta parameters, computed by the two-step recipe.

    alpha_t = (E(1-E)/Var) E and beta_t = (E(1-E)/Var)(1-E) with E = x0; no
    algebraic simplification is applied.  Requires Var < E(1-E).
    """
    mean = x0
    var = moment_variance(x0, t, variance_form)
    bound = mean * (1.0 - mean)
    if not var < bound:
        raise ParameterError(
            f"moment-matched Beta needs Var < E(1-E): Var={var:.6g} >= {bound:.6g} (t={t})"
        )
    scale = bound / var
    return scale * mean, scale * (1.0 - mean)


def beta_moment_density(x0, x, t, variance_form: str = "derived"):
    """Beta pdf with the moment-matched parameters."""
    x = _check_args(x0, x, t)
    a_t, b_t = beta_moment_params(x0, t, variance_form)
    with np.errstate(under="ignore"):
        logpdf = (
            (a_t - 1.0) * np.log(x)
            + (b_t - 1.0) * np.log1p(-x)
            - special.betaln(a_t, b_t)
        )
        out = np.exp(logpdf)
    return out


def mutation_ae_density(x0, x, t, beta1: float, beta2: float):
    """Expansion under the pure-mutation drift: exponents shift by the rates."""
    if beta1 < 0.0 or beta2 < 0.0:
        raise ParameterError("mutation rates must be >= 0")
    return _ae_family(x0, x, t, 0.25 - beta2, 0.25 - beta1, 0.75 - beta2, 0.75 - beta1)


def selection_ae_density(x0, x, t, alpha: float, h: float):
    """Expansion under the pure-selection drift."""
    return _ae_family(x0, x, t, 0.25 - h, 0.25 + alpha - h, 0.75 - h, 0.75 + alpha - h)


def normalize(
    grid: np.ndarray,
    values: np.ndarray,
    model: DensityModel,
    x0: float,
    t: float,
    spec: DiffusionSpec | None = None,
    std_error: np.ndarray | None = None,
    extras: dict | None = None,
) -> GridDensity:
    """Divide raw values by their Simpson integral over the grid."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.shape != values.shape:
        raise ParameterError("grid and values must be 1-d arrays of equal length")
    if np.any(np.diff(grid) <= 0.0):
        raise ParameterError("grid must be strictly increasing")
    if not np.all(np.isfinite(values)):
        raise ParameterError("density values must be finite")
    if np.any(values < 0.0):
        raise ParameterError("density values must be nonnegative")
    constant = float(integrate.simpson(values, x=grid))
    if not math.isfinite(constant) or constant <= 0.0:
        raise ParameterError(f"normalization constant must be positive and finite, got {constant}")
    return GridDensity(
        grid=grid,
        values=values / constant,
        norm_constant=constant,
        model=model,
        x0=float(x0),
        t=float(t),
        spec=spec if spec is not None else _WF,
        std_error=None if std_error is None else np.asarray(std_error, dtype=float) / constant,
        extras=dict(extras or {}),
    )


def evaluate_model(
    model: DensityModel,
    spec: DiffusionSpec,
    x0: float,
    t: float,
    grid: np.ndarray,
    n_paths: int = 500,
    k_steps: int = 100,
    seed: int = 0,
) -> GridDensity:
    """Evaluate one candidate model on a grid and normalize it."""
    grid = np.asarray(grid, dtype=float)
    std_error = None
    extras: dict = {}
    kind = model.kind
    if kind == "ExactMC":
        from .bridge import exact_density_grid  # local import to avoid a cycle

        values, std_error, clamped = exact_density_grid(
            spec, x0, grid, t, n_paths=n_paths, k_steps=k_steps, seed=seed
        )
        extras["clamped_fraction"] = clamped
        extras["n_paths"] = n_paths
        extras["k_steps"] = k_steps
        extras["seed"] = seed
    elif kind == "AE":
        values = ae_density(x0, grid, t)
    elif kind == "AECorrected":
        values = ae_corrected_density(x0, grid, t)
    elif kind == "GaussA":
        values = gauss_approx_density(x0, grid, t)
        outside = gauss_approx_outside_validity(x0, grid, t, model.validity_c)
        extras["validity_c"] = model.validity_c
        extras["fraction_outside_validity"] = float(np.mean(outside))
    elif kind == "GaussianMoment":
        values = gaussian_moment_density(x0, grid, t, model.variance_form)
        extras["variance_form"] = model.variance_form
    elif kind == "BetaMoment":
        values = beta_moment_density(x0, grid, t, model.variance_form)
        extras["variance_form"] = model.variance_form
    elif kind == "MutationAE":
        b1 = spec.beta1 if model.beta1 is None else model.beta1
        b2 = spec.beta2 if model.beta2 is None else model.beta2
        values = mutation_ae_density(x0, grid, t, b1, b2)
        extras.update(beta1=b1, beta2=b2)
    elif kind == "SelectionAE":
        al = spec.alpha if model.alpha is None else model.alpha
        hh = spec.h if model.h is None else model.h
        values = selection_ae_density(x0, grid, t, al, hh)
        extras.update(alpha=al, h=hh)
    else:  # pragma: no cover - guarded by DensityModel
        raise ParameterError(f"unhandled model kind {kind}")
    return normalize(grid, values, model, x0, t, spec, std_error=std_error, extras=extras)


# ---------------------------------------------------------------------------
# Serialization: CSV with a schema header plus a JSON sidecar.

CSV_SCHEMA_GRID = "wfdensity.grid-density.v1"


def write_grid_density(gd: GridDensity, csv_path: str | Path, seed: int | None = None) -> Path:
    """Write `x,density[,std_error,ci_low,ci_high]` CSV plus a JSON sidecar."""
    csv_path = Path(csv_path)
    cols = ["x", "density"]
    data = [gd.grid, gd.values]
    if gd.std_error is not None:
        cols += ["std_error", "ci_low", "ci_high"]
        half = 1.96 * gd.std_error
        data += [gd.std_error, np.maximum(0.0, gd.values - half), gd.values + half]
    with open(csv_path, "w") as fh:
        fh.write(f"# schema={CSV_SCHEMA_GRID}\n")
        fh.write(",".join(cols) + "\n")
        for row in zip(*data):
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
    sidecar = {
        "schema": CSV_SCHEMA_GRID,
        "model": {
            "kind": gd.model.kind,
            "beta1": gd.model.beta1,
            "beta2": gd.model.beta2,
            "alpha": gd.model.alpha,
            "h": gd.model.h,
            "variance_form": gd.model.variance_form,
            "validity_c": gd.model.validity_c,
        },
        "x0": gd.x0,
        "t": gd.t,
        "spec": {
            "a": gd.spec.a,
            "b": gd.spec.b,
            "alpha": gd.spec.alpha,
            "h": gd.spec.h,
            "beta1": gd.spec.beta1,
            "beta2": gd.spec.beta2,
        },
        "norm_constant": gd.norm_constant,
        "grid": {"lo": float(gd.grid[0]), "hi": float(gd.grid[-1]), "n": int(gd.grid.size)},
        "seed": seed,
        "extras": gd.extras,
    }
    sidecar_path = csv_path.with_suffix(".json")
    sidecar_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return csv_path


def read_grid_density_csv(csv_path: str | Path):
    """Read back (grid, values) from a grid-density CSV."""
    rows = np.loadtxt(csv_path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    # skiprows=2 drops the schema line and the header
    return rows[:, 0], rows[:, 1]
