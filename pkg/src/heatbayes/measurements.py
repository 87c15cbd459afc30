"""Synthetic measurement generation and measurement-file I/O.

A measurement set stacks the time series of every sensor into one long data
vector: the first M entries are the series at the first sensor position (in
time order), the next M the second sensor, and so on.  Noise is additive
Gaussian with a standard deviation proportional to the noiseless signal,
sigma_j = relative_sigma * T_j (1% by default), and sigma is stored with the
data because the likelihood treats it as known.

File format: CSV with header ``time_index,sensor_X,T_noiseless,D,sigma``
(T_noiseless optional on load, since real data has no noiseless truth), plus
a JSON sidecar ``<name>.manifest.json`` holding dtau, sensor positions, seed
and noise settings.  time_index is 1-based: tau_m = m * dtau.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .forward import DimensionlessProblem, Mesh, TimeGrid, solve_forward

__all__ = [
    "MeasurementSet",
    "generate_synthetic",
    "save_measurements",
    "load_measurements",
]

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class MeasurementSet:
    """Noisy sensor data plus everything the likelihood needs about it."""

    sensor_positions: np.ndarray  # (S,)
    times: np.ndarray  # (M,) dimensionless
    d: np.ndarray  # (S*M,) noisy data, sensor-major
    sigma: np.ndarray  # (S*M,) known noise std, > 0
    t_noiseless: np.ndarray | None = None  # (S*M,) synthetic truth, if available
    seed: int | None = None

    def __post_init__(self):
        self.sensor_positions = np.asarray(self.sensor_positions, dtype=float).ravel()
        self.times = np.asarray(self.times, dtype=float).ravel()
        self.d = np.asarray(self.d, dtype=float).ravel()
        self.sigma = np.asarray(self.sigma, dtype=float).ravel()
        if self.t_noiseless is not None:
            self.t_noiseless = np.asarray(self.t_noiseless, dtype=float).ravel()
        u = self.n_sensors * self.n_times
        if self.d.size != u:
            raise ConfigError(f"expected {u} data values, got {self.d.size}")
        if self.sigma.size != u:
            raise ConfigError(f"expected {u} sigma values, got {self.sigma.size}")
        if self.t_noiseless is not None and self.t_noiseless.size != u:
            raise ConfigError(f"expected {u} noiseless values, got {self.t_noiseless.size}")
        if np.any(self.sigma <= 0.0) or not np.all(np.isfinite(self.sigma)):
            raise ConfigError("every sigma must be finite and > 0")
        if not np.all(np.isfinite(self.d)):
            raise ConfigError("data contains non-finite entries")

    @property
    def n_sensors(self) -> int:
        return self.sensor_positions.size

    @property
    def n_times(self) -> int:
        return self.times.size

    @property
    def size(self) -> int:
        return self.d.size

    def series(self, sensor_index: int) -> np.ndarray:
        """The data slice belonging to one sensor, in time order."""
        m = self.n_times
        return self.d[sensor_index * m : (sensor_index + 1) * m]


def generate_synthetic(
    problem: DimensionlessProblem,
    mesh: Mesh,
    grid: TimeGrid,
    truth_model,
    seed: int,
    sensor_positions=(0.0, 1.0),
    relative_sigma: float = 0.01,
    noise_scale: float = 1.0,
) -> MeasurementSet:
    """Run the forward model for a known conductivity and add noise.

    ``noise_scale`` scales only the drawn perturbation (0 disables noise for
    tests while keeping sigma = relative_sigma * T stored and positive).
    """
    if relative_sigma <= 0.0:
        raise ConfigError(f"relative_sigma must be positive, got {relative_sigma}")
    if noise_scale < 0.0:
        raise ConfigError(f"noise_scale must be >= 0, got {noise_scale}")
    history = solve_forward(problem, mesh, grid, truth_model, sensor_positions)
    t_clean = np.concatenate([history[:, j] for j in range(history.shape[1])])
    if np.any(t_clean <= 0.0):
        raise ConfigError("noiseless temperatures must stay positive for relative noise")
    sigma = relative_sigma * t_clean
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(t_clean.size) * sigma * noise_scale
    return MeasurementSet(
        sensor_positions=np.asarray(sensor_positions, dtype=float),
        times=grid.times,
        d=t_clean + noise,
        sigma=sigma,
        t_noiseless=t_clean,
        seed=int(seed),
    )


def _manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def save_measurements(ms: MeasurementSet, path) -> Path:
    """Write the CSV plus its JSON sidecar; returns the sidecar path.

    Floats are written with shortest round-trip precision.
    """
    path = Path(path)
    m = ms.n_times
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_index", "sensor_X", "T_noiseless", "D", "sigma"])
        for j, pos in enumerate(ms.sensor_positions):
            for i in range(m):
                flat = j * m + i
                clean = "" if ms.t_noiseless is None else repr(float(ms.t_noiseless[flat]))
                writer.writerow(
                    [
                        i + 1,
                        repr(float(pos)),
                        clean,
                        repr(float(ms.d[flat])),
                        repr(float(ms.sigma[flat])),
                    ]
                )
    dtau = float(ms.times[0]) if m == 1 else float(ms.times[1] - ms.times[0])
    manifest = {
        "format": "heatbayes-measurements",
        "dtau": dtau,
        "n_times": m,
        "sensor_positions": ms.sensor_positions.tolist(),
        "seed": ms.seed,
    }
    sidecar = _manifest_path(path)
    with open(sidecar, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar


def _parse_float(text, row_number, column):
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(
            f"row {row_number}, column '{column}': could not parse {text!r} as a number"
        ) from exc


def load_measurements(path) -> MeasurementSet:
    """Read a measurement CSV (and its sidecar manifest when present).

    Without a sidecar, times fall back to the raw 1-based index (dtau = 1)
    and the seed is unknown; a warning is logged because dimensionless times
    then no longer match the original experiment.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"measurement file not found: {path}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ConfigError(f"{path}: file is empty")
        expected = ["time_index", "sensor_X", "T_noiseless", "D", "sigma"]
        if [c.strip() for c in header] != expected:
            raise ConfigError(f"{path}: header must be {','.join(expected)}, got {','.join(header)}")
        for number, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 5:
                raise ConfigError(f"{path}: row {number} has {len(row)} fields, expected 5")
            rows.append((number, row))
    if not rows:
        raise ConfigError(f"{path}: no data rows")

    has_clean = any(row[2].strip() for _, row in rows)
    positions = []
    series = {}  # position -> list of (index, clean, d, sigma)
    for number, row in rows:
        idx = int(_parse_float(row[0], number, "time_index"))
        pos = _parse_float(row[1], number, "sensor_X")
        clean = _parse_float(row[2], number, "T_noiseless") if row[2].strip() else None
        if has_clean and clean is None:
            raise ConfigError(f"{path}: row {number}: T_noiseless present in some rows but not all")
        d = _parse_float(row[3], number, "D")
        sigma = _parse_float(row[4], number, "sigma")
        if pos not in series:
            positions.append(pos)
            series[pos] = []
        series[pos].append((idx, clean, d, sigma))

    m = len(series[positions[0]])
    for pos in positions:
        entries = series[pos]
        if len(entries) != m:
            raise ConfigError(f"{path}: sensor {pos} has {len(entries)} rows, expected {m}")
        indices = [e[0] for e in entries]
        if indices != list(range(1, m + 1)):
            raise ConfigError(f"{path}: sensor {pos} rows must be time_index 1..{m} in order")

    d = np.array([e[2] for pos in positions for e in series[pos]])
    sigma = np.array([e[3] for pos in positions for e in series[pos]])
    clean = (
        np.array([e[1] for pos in positions for e in series[pos]]) if has_clean else None
    )

    sidecar = _manifest_path(path)
    seed = None
    dtau = None
    if sidecar.exists():
        with open(sidecar) as fh:
            manifest = json.load(fh)
        seed = manifest.get("seed")
        dtau = manifest.get("dtau")
        manifest_pos = manifest.get("sensor_positions")
        if manifest_pos is not None and list(map(float, manifest_pos)) != positions:
            raise ConfigError(
                f"{path}: sensor positions in CSV {positions} disagree with manifest {manifest_pos}"
            )
    if dtau is None:
        logger.warning("%s: no sidecar manifest; using time_index as dimensionless time", path)
        dtau = 1.0
    times = dtau * np.arange(1, m + 1)

    return MeasurementSet(
        sensor_positions=np.asarray(positions, dtype=float),
        times=times,
        d=d,
        sigma=sigma,
        t_noiseless=clean,
        seed=seed,
    )
