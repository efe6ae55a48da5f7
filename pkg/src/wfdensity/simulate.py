"""Discrete Wright-Fisher binomial-chain simulator.

Each generation resamples allele counts as Binomial(2N, previous/2N), so 0
and 2N are absorbing.  Time is rescaled as t = n/2N when extracting
marginals.  Ensembles persist to a compact binary format (u16 counts) and
export to CSV for interoperability.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ParameterError

_MAGIC = b"WFENS\x00"
_VERSION = 1


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Seeded set of discrete allele-count paths.

    data has shape (n_traj, n_gen + 1) with uint16 counts in [0, 2N]; column
    0 is round(x0 * 2N) everywhere.
    """

    two_n: int
    n_gen: int
    x0: float
    n_traj: int
    seed: int
    data: np.ndarray

    @property
    def x0_count(self) -> int:
        return int(round(self.x0 * self.two_n))


def simulate_ensemble(two_n: int, n_gen: int, x0: float, n_traj: int, seed: int) -> TrajectoryEnsemble:
    """Simulate n_traj binomial-resampling trajectories; deterministic given seed."""
    if two_n < 2:
        raise ParameterError(f"population size 2N must be >= 2, got {two_n}")
    if two_n > np.iinfo(np.uint16).max:
        raise ParameterError(f"2N must fit in uint16 storage (<= 65535), got {two_n}")
    if n_gen < 0:
        raise ParameterError(f"n_gen must be >= 0, got {n_gen}")
    if n_traj < 1:
        raise ParameterError(f"n_traj must be >= 1, got {n_traj}")
    if not (0.0 <= x0 <= 1.0):
        raise DomainError(f"x0 must lie in [0,1], got {x0}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    data = np.empty((n_traj, n_gen + 1), dtype=np.uint16)
    start = int(round(x0 * two_n))
    data[:, 0] = start
    current = np.full(n_traj, start, dtype=np.int64)
    for gen in range(1, n_gen + 1):
        # Generator.binomial switches between inversion and BTPE internally,
        # so the draw is exact for any (2N, p).
        current = rng.binomial(two_n, current / two_n)
        data[:, gen] = current
    return TrajectoryEnsemble(
        two_n=two_n, n_gen=n_gen, x0=float(x0), n_traj=n_traj, seed=seed, data=data
    )


def _generation_index(ensemble: TrajectoryEnsemble, t: float) -> int:
    gen = int(round(t * ensemble.two_n))
    if gen < 0 or gen > ensemble.n_gen:
        raise DomainError(
            f"t={t} maps to generation {gen}, outside [0, {ensemble.n_gen}]"
        )
    return gen


def marginal_at(ensemble: TrajectoryEnsemble, t: float) -> np.ndarray:
    """Allele frequencies X_n / 2N at generation n = round(t * 2N)."""
    gen = _generation_index(ensemble, t)
    return ensemble.data[:, gen].astype(float) / ensemble.two_n


def fixation_stats(ensemble: TrajectoryEnsemble, t: float) -> tuple[float, float]:
    """(fraction absorbed at 0, fraction absorbed at 2N) at time t."""
    gen = _generation_index(ensemble, t)
    col = ensemble.data[:, gen]
    n = ensemble.n_traj
    return float(np.count_nonzero(col == 0)) / n, float(np.count_nonzero(col == ensemble.two_n)) / n


def exact_marginal_variance(two_n: int, x0: float, gen: int) -> float:
    """Exact chain variance (1 - (1 - 1/2N)^n) x0 (1-x0)."""
    return (1.0 - (1.0 - 1.0 / two_n) ** gen) * x0 * (1.0 - x0)


def save_ensemble(ensemble: TrajectoryEnsemble, path: str | Path) -> Path:
    """Binary layout: magic, u16 version, u32 metadata length, metadata JSON, u16 counts."""
    path = Path(path)
    meta = json.dumps(
        {
            "two_n": ensemble.two_n,
            "n_gen": ensemble.n_gen,
            "x0": ensemble.x0,
            "x0_count": ensemble.x0_count,
            "n_traj": ensemble.n_traj,
            "seed": ensemble.seed,
        },
        sort_keys=True,
    ).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HI", _VERSION, len(meta)))
        fh.write(meta)
        fh.write(np.ascontiguousarray(ensemble.data, dtype="<u2").tobytes())
    return path


def load_ensemble(path: str | Path) -> TrajectoryEnsemble:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ParameterError(f"{path} is not an ensemble file (bad magic {magic!r})")
        version, meta_len = struct.unpack("<HI", fh.read(6))
        if version != _VERSION:
            raise ParameterError(f"unsupported ensemble file version {version}")
        meta = json.loads(fh.read(meta_len).decode())
        data = np.frombuffer(fh.read(), dtype="<u2").reshape(
            meta["n_traj"], meta["n_gen"] + 1
        )
    return TrajectoryEnsemble(
        two_n=meta["two_n"],
        n_gen=meta["n_gen"],
        x0=meta["x0"],
        n_traj=meta["n_traj"],
        seed=meta["seed"],
        data=np.array(data, dtype=np.uint16),
    )


CSV_SCHEMA_TRAJ = "wfdensity.trajectories.v1"


def export_csv(ensemble: TrajectoryEnsemble, path: str | Path) -> Path:
    """Long-format `trajectory,generation,count` export."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"# schema={CSV_SCHEMA_TRAJ}\n")
        fh.write("trajectory,generation,count\n")
        for i in range(ensemble.n_traj):
            row = ensemble.data[i]
            for gen in range(ensemble.n_gen + 1):
                fh.write(f"{i},{gen},{row[gen]}\n")
    return path
