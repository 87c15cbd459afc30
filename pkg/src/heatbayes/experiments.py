"""Run orchestration: resolve a config into concrete objects, execute the
forward/sensitivity/inference pipelines, and write the output artifacts.

Every run directory receives a ``manifest.json`` carrying the merged config,
its hash, the resolved quantities (temperature range, prior vectors, seeds,
budgets) and library versions - enough to reproduce the outputs bit for bit.
Nothing here embeds timestamps, so rerunning a config rewrites identical
files.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_hash
from .conductivity import (
    CubicByCoefficients,
    CubicByValues,
    PiecewiseLinear,
    TemperatureRange,
    evaluate,
    model_from_dict,
    values_to_coefficients,
)
from .diagnostics import credible_band, save_band_csv, summarize
from .errors import ConfigError
from .forward import (
    Mesh,
    PhysicalConfig,
    TimeGrid,
    nondimensionalize,
    solve_forward,
    solve_forward_full,
    write_field_csv,
)
from .inference import (
    PARAM_COEFFICIENTS,
    PARAM_PIECEWISE,
    PARAM_VALUES,
    GMRFPrior,
    LikelihoodContext,
    PositivityDomain,
    TruncatedNormal,
    TruncatedUniformImproper,
    attach_derived_coefficients,
    load_chain,
    run_adaptive,
    run_mh,
    save_chain,
)
from .measurements import generate_synthetic, load_measurements, save_measurements
from .sensitivity import identifiability_summary, sensitivity_matrix

__all__ = [
    "ResolvedRun",
    "prepare_physics",
    "prepare_run",
    "apply_scale",
    "run_simulate",
    "run_generate",
    "run_sensitivity",
    "run_infer",
    "run_report",
]

logger = logging.getLogger(__name__)

_CONFIG_TO_PARAM = {
    "coefficients": PARAM_COEFFICIENTS,
    "conductivity_values": PARAM_VALUES,
    "piecewise": PARAM_PIECEWISE,
}


def _versions() -> dict:
    import numba

    return {
        "heatbayes": __version__,
        "numpy": np.__version__,
        "numba": numba.__version__,
        "python": platform.python_version(),
    }


def write_manifest(out_dir, payload: dict) -> Path:
    path = Path(out_dir) / "manifest.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(out_dir) -> dict:
    path = Path(out_dir) / "manifest.json"
    if not path.exists():
        raise ConfigError(f"no manifest.json under {out_dir}")
    with open(path) as fh:
        return json.load(fh)


def prepare_physics(config: dict):
    """(PhysicalConfig, DimensionlessProblem, Mesh, TimeGrid) from a config."""
    physical = PhysicalConfig(**config["physical"])
    problem, grid = nondimensionalize(physical)
    mesh = Mesh(config["mesh"]["n_elements"])
    return physical, problem, mesh, grid


def _truth_model(config: dict):
    if config["truth"] is None:
        return None
    return model_from_dict(config["truth"])


def apply_scale(config: dict, scale: str) -> dict:
    """'full' keeps budgets; 'desk' divides sampler budgets by 10."""
    if scale == "full":
        return config
    if scale != "desk":
        raise ConfigError(f"scale must be 'full' or 'desk', got {scale!r}")
    scaled = json.loads(json.dumps(config))  # deep copy via JSON round-trip
    sampler = scaled["sampler"]
    sampler["n_adapt"] = max(1, sampler["n_adapt"] // 10)
    sampler["n_steps"] = max(1, sampler["n_steps"] // 10)
    sampler["burn_in"] = min(sampler["burn_in"] // 10, sampler["n_steps"] - 1)
    return scaled


def _obtain_measurements(config, problem, mesh, grid, truth):
    data = config["data"]
    if data["path"] is not None:
        ms = load_measurements(data["path"])
        if ms.n_times != grid.n_steps:
            raise ConfigError(
                f"loaded data has {ms.n_times} times per sensor, config expects {grid.n_steps}"
            )
        return ms
    if truth is None:
        raise ConfigError("synthetic data generation needs a 'truth' conductivity model")
    return generate_synthetic(
        problem,
        mesh,
        grid,
        truth,
        seed=data["seed"],
        sensor_positions=tuple(config["sensors"]),
        relative_sigma=config["noise"]["relative_sigma"],
        noise_scale=config["noise"]["scale"],
    )


def _truth_average(truth, temperature_range: TemperatureRange) -> float:
    """Average of the ground-truth curve over the measured range."""
    grid = np.linspace(temperature_range.theta_min, temperature_range.theta_max, 10001)
    return float(np.trapezoid(evaluate(truth, grid), grid) / temperature_range.width)


def _truth_parameters(truth, parametrization, theta_nodes, knot_grid):
    if truth is None:
        return None
    if parametrization == PARAM_COEFFICIENTS:
        if isinstance(truth, CubicByCoefficients):
            return truth.coefficients.copy()
        if isinstance(truth, CubicByValues):
            return truth.coefficients()
        return None  # no exact coefficients for a piecewise truth
    if parametrization == PARAM_VALUES:
        return np.asarray(evaluate(truth, theta_nodes), dtype=float)
    return np.asarray(evaluate(truth, knot_grid), dtype=float)


def _init_vector(config, parametrization, n_parameters, prior=None, level=None) -> np.ndarray:
    init = config["init"]
    if init == "prior-shape":
        # Integrate the prior's target differences and anchor the mean at the
        # data-implied conductivity level.  Starting 100 knots from a flat
        # curve makes the walk spend its whole budget crossing the prior;
        # starting at the prior's own shape leaves only the likelihood
        # corrections to find.
        qbar = getattr(prior, "qbar", None)
        if qbar is None or level is None:
            raise ConfigError("init 'prior-shape' needs a gmrf prior and a ground truth")
        shape = np.concatenate([[0.0], np.cumsum(qbar)])
        if shape.size != n_parameters:
            raise ConfigError(
                f"prior qbar implies {shape.size} parameters, parametrization needs {n_parameters}"
            )
        return shape - shape.mean() + level
    if isinstance(init, str):
        levels = {"ones": 1.0, "twos": 2.0}
        level = levels[init]
        if parametrization == PARAM_COEFFICIENTS:
            return np.array([0.0, 0.0, 0.0, level])
        return np.full(n_parameters, level)
    vector = np.asarray(init, dtype=float)
    if vector.size != n_parameters:
        raise ConfigError(f"init has {vector.size} entries, parametrization needs {n_parameters}")
    return vector


@dataclass(eq=False)
class ResolvedRun:
    """A config turned into live objects, ready to sample."""

    config: dict
    physical: PhysicalConfig
    problem: object
    mesh: Mesh
    grid: TimeGrid
    truth: object | None
    measurements: object
    temperature_range: TemperatureRange
    parametrization: str
    theta_nodes: np.ndarray | None
    knot_grid: np.ndarray | None
    ctx: LikelihoodContext
    prior: object
    init: np.ndarray
    truth_params: np.ndarray | None
    prior_info: dict

    @property
    def n_parameters(self) -> int:
        return self.ctx.n_parameters

    def resolved_info(self) -> dict:
        info = {
            "h": self.problem.h,
            "theta_inf": self.problem.theta_inf,
            "dtau": self.grid.dtau,
            "n_steps": self.grid.n_steps,
            "n_elements": self.mesh.n_elements,
            "theta_min": self.temperature_range.theta_min,
            "theta_max": self.temperature_range.theta_max,
            "parametrization": self.parametrization,
            "n_parameters": self.n_parameters,
            "theta_nodes": None if self.theta_nodes is None else self.theta_nodes.tolist(),
            "knot_grid": None if self.knot_grid is None else self.knot_grid.tolist(),
            "truth_params": None if self.truth_params is None else self.truth_params.tolist(),
            "init": self.init.tolist(),
            "prior": self.prior_info,
            "data_seed": self.measurements.seed,
        }
        return info


def _resolve_prior(config, parametrization, domain, truth, temperature_range, theta_nodes, knot_grid):
    """Build the prior object plus a JSON description of what was resolved."""
    spec = config["prior"]
    kind = spec["kind"]
    n = 4 if parametrization != PARAM_PIECEWISE else int(config["n_knots"])

    if kind == "uniform":
        return TruncatedUniformImproper(domain), {"kind": "uniform"}

    if kind == "normal":
        mean_spec = spec.get("mean")
        mu = None
        if mean_spec == "truth-average":
            mu = _truth_average(truth, temperature_range)
            mean = np.full(n, mu)
        elif mean_spec == "truth-average-intercept":
            mu = _truth_average(truth, temperature_range)
            mean = np.array([0.0, 0.0, 0.0, mu])
        else:
            mean = np.asarray(mean_spec, dtype=float)
        if spec.get("std") is not None:
            std = np.asarray(spec["std"], dtype=float)
        else:
            if mu is None:
                raise ConfigError("prior.rel_std needs a truth-average mean mode")
            std = np.full(n, spec["rel_std"] * mu)
        prior = TruncatedNormal(mean=mean, std=std, domain=domain)
        info = {
            "kind": "normal",
            "mean": mean.tolist(),
            "std": std.tolist(),
            "mu_reference": mu,
            "rel_std": spec.get("rel_std"),
        }
        return prior, info

    # GMRF
    qbar_spec = spec.get("qbar", "zero")
    grid = theta_nodes if parametrization == PARAM_VALUES else knot_grid
    if isinstance(qbar_spec, str):
        if qbar_spec == "zero":
            qbar = np.zeros(n - 1)
        else:
            truth_values = np.asarray(evaluate(truth, grid), dtype=float)
            qbar = np.diff(truth_values)
            if qbar_spec == "negated-exact":
                qbar = -qbar
    else:
        qbar = np.asarray(qbar_spec, dtype=float)
    prior = GMRFPrior(qbar=qbar, gamma2=float(spec["gamma2"]))
    info = {
        "kind": "gmrf",
        "gamma2": float(spec["gamma2"]),
        "qbar_mode": qbar_spec if isinstance(qbar_spec, str) else "explicit",
        "qbar": qbar.tolist(),
    }
    return prior, info


def prepare_run(config: dict, measurements_override=None) -> ResolvedRun:
    """Resolve a validated config into a ready-to-sample bundle.

    ``measurements_override`` short-circuits data generation with an existing
    file (used so concurrent chains share one bit-identical data set).
    """
    physical, problem, mesh, grid = prepare_physics(config)
    truth = _truth_model(config)
    if measurements_override is not None:
        measurements = load_measurements(measurements_override)
    else:
        measurements = _obtain_measurements(config, problem, mesh, grid, truth)

    temperature_range = TemperatureRange.from_measurements(measurements.d)
    parametrization = _CONFIG_TO_PARAM[config["parametrization"]]

    theta_nodes = None
    knot_grid = None
    if parametrization == PARAM_VALUES:
        theta_nodes = temperature_range.nodes(4)
    elif parametrization == PARAM_PIECEWISE:
        knot_grid = temperature_range.nodes(int(config["n_knots"]))

    ctx = LikelihoodContext(
        problem=problem,
        mesh=mesh,
        grid=grid,
        measurements=measurements,
        parametrization=parametrization,
        theta_nodes=theta_nodes,
        knot_grid=knot_grid,
    )
    domain = PositivityDomain(
        parametrization=parametrization,
        temperature_range=temperature_range,
        theta_nodes=theta_nodes,
    )
    prior, prior_info = _resolve_prior(
        config, parametrization, domain, truth, temperature_range, theta_nodes, knot_grid
    )
    anchor = _truth_average(truth, temperature_range) if truth is not None else None
    init = _init_vector(config, parametrization, ctx.n_parameters, prior=prior, level=anchor)
    truth_params = _truth_parameters(truth, parametrization, theta_nodes, knot_grid)

    return ResolvedRun(
        config=config,
        physical=physical,
        problem=problem,
        mesh=mesh,
        grid=grid,
        truth=truth,
        measurements=measurements,
        temperature_range=temperature_range,
        parametrization=parametrization,
        theta_nodes=theta_nodes,
        knot_grid=knot_grid,
        ctx=ctx,
        prior=prior,
        init=init,
        truth_params=truth_params,
        prior_info=prior_info,
    )


# --- simulate ----------------------------------------------------------------


def run_simulate(config: dict, out_dir, full_field: bool = False) -> dict:
    """Forward solve with the configured truth model; writes sensor CSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    physical, problem, mesh, grid = prepare_physics(config)
    truth = _truth_model(config)
    if truth is None:
        raise ConfigError("simulate needs a 'truth' conductivity model")

    sensors = tuple(config["sensors"])
    history = solve_forward(problem, mesh, grid, truth, sensors)
    sensors_path = out_dir / "sensors.csv"
    times = grid.times
    with open(sensors_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau"] + [f"X={pos:g}" for pos in sensors])
        for m in range(history.shape[0]):
            writer.writerow([repr(float(times[m]))] + [repr(float(v)) for v in history[m]])

    outputs = {"sensors": str(sensors_path)}
    if full_field:
        field = solve_forward_full(problem, mesh, grid, truth)
        field_path = out_dir / "field.csv"
        write_field_csv(field_path, grid, field)
        outputs["field"] = str(field_path)

    payload = {
        "command": "simulate",
        "config": config,
        "config_hash": config_hash(config),
        "versions": _versions(),
        "resolved": {
            "h": problem.h,
            "theta_inf": problem.theta_inf,
            "dtau": grid.dtau,
            "n_steps": grid.n_steps,
            "n_elements": mesh.n_elements,
            "sensors": list(sensors),
            "theta_max_noiseless": float(history.max()),
        },
        "outputs": outputs,
    }
    write_manifest(out_dir, payload)
    return payload


# --- generate-data -----------------------------------------------------------


def run_generate(config: dict, out_dir) -> dict:
    """Synthesize a noisy measurement set and write it with its sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    physical, problem, mesh, grid = prepare_physics(config)
    truth = _truth_model(config)
    measurements = _obtain_measurements(config, problem, mesh, grid, truth)
    csv_path = out_dir / "measurements.csv"
    save_measurements(measurements, csv_path)

    payload = {
        "command": "generate-data",
        "config": config,
        "config_hash": config_hash(config),
        "versions": _versions(),
        "resolved": {
            "h": problem.h,
            "theta_inf": problem.theta_inf,
            "dtau": grid.dtau,
            "n_steps": grid.n_steps,
            "data_seed": measurements.seed,
            "relative_sigma": config["noise"]["relative_sigma"],
            "noise_scale": config["noise"]["scale"],
            "theta_min": float(measurements.d.min()),
            "theta_max": float(measurements.d.max()),
        },
        "outputs": {"measurements": str(csv_path)},
    }
    write_manifest(out_dir, payload)
    return payload


# --- sensitivity ---------------------------------------------------------------


def _model_builder(parametrization, theta_nodes, knot_grid):
    if parametrization == PARAM_COEFFICIENTS:
        return lambda p: CubicByCoefficients(p)
    if parametrization == PARAM_VALUES:
        return lambda p: CubicByCoefficients(values_to_coefficients(theta_nodes, p))
    return lambda p: PiecewiseLinear(knot_grid, p)


def run_sensitivity(
    config: dict,
    out_dir,
    reference=None,
    epsilon: float | None = None,
    dump_matrix: bool = False,
) -> dict:
    """Finite-difference identifiability report around a reference vector.

    ``reference`` and ``epsilon`` default to the config's sensitivity section.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if reference is None:
        reference = config["sensitivity"]["reference"]
    if epsilon is None:
        epsilon = config["sensitivity"]["epsilon"]
    run = prepare_run(config)

    if isinstance(reference, str):
        if reference == "truth":
            if run.truth_params is None:
                raise ConfigError("reference 'truth' needs a truth model in the config")
            p_ref = run.truth_params
        elif reference == "ones":
            p_ref = np.ones(run.n_parameters)
        else:
            raise ConfigError(f"reference must be 'truth', 'ones', or a number list, got {reference!r}")
    else:
        p_ref = np.asarray(reference, dtype=float)

    domain = PositivityDomain(
        parametrization=run.parametrization,
        temperature_range=run.temperature_range,
        theta_nodes=run.theta_nodes,
    )
    report = sensitivity_matrix(
        p_ref,
        _model_builder(run.parametrization, run.theta_nodes, run.knot_grid),
        run.problem,
        run.mesh,
        run.grid,
        sensor_positions=tuple(config["sensors"]),
        epsilon=epsilon,
        support=domain,
    )
    summary = identifiability_summary(report)
    summary["reference_mode"] = reference if isinstance(reference, str) else "explicit"
    summary["parametrization"] = run.parametrization

    summary_path = out_dir / "sensitivity.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = {"sensitivity": str(summary_path)}

    if dump_matrix:
        matrix_path = out_dir / "jacobian.csv"
        with open(matrix_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"p{j}" for j in range(report.matrix.shape[1])])
            for row in report.matrix:
                writer.writerow([repr(float(v)) for v in row])
        outputs["jacobian"] = str(matrix_path)

    payload = {
        "command": "sensitivity",
        "config": config,
        "config_hash": config_hash(config),
        "versions": _versions(),
        "resolved": dict(run.resolved_info(), epsilon=epsilon),
        "outputs": outputs,
    }
    write_manifest(out_dir, payload)
    return payload


# --- infer ---------------------------------------------------------------------


def _chain_seeds(sampler_seed: int, n_chains: int):
    """Two integer seeds (adaptive, mh) per chain, spawned deterministically."""
    children = np.random.SeedSequence(sampler_seed).spawn(n_chains)
    return [tuple(int(v) for v in child.generate_state(2, np.uint64)) for child in children]


def _execute_chain(run: ResolvedRun, seeds, chain_dir) -> dict:
    """Adaptive phase, frozen-covariance MH phase, summaries, band."""
    chain_dir = Path(chain_dir)
    chain_dir.mkdir(parents=True, exist_ok=True)
    sampler = run.config["sampler"]
    adaptive_seed, mh_seed = seeds

    covariance, adaptive_chain = run_adaptive(
        run.init,
        run.prior,
        run.ctx,
        n_adapt=sampler["n_adapt"],
        seed=adaptive_seed,
        parametrization=run.parametrization,
    )
    chain = run_mh(
        adaptive_chain.samples[-1],
        covariance,
        run.prior,
        run.ctx,
        n_steps=sampler["n_steps"],
        seed=mh_seed,
        burn_in=sampler["burn_in"],
        parametrization=run.parametrization,
    )
    if run.parametrization == PARAM_VALUES:
        attach_derived_coefficients(chain, run.theta_nodes)
    save_chain(chain, chain_dir)

    summary = summarize(chain, truth=run.truth_params)
    band = credible_band(
        chain,
        run.parametrization,
        level=run.config["band"]["level"],
        theta_nodes=run.theta_nodes,
        knot_grid=run.knot_grid,
        temperature_range=run.temperature_range,
        grid_points=run.config["band"]["grid_points"],
    )
    summary_dict = summary.to_dict()
    summary_dict["acceptance_ratio_adaptive"] = adaptive_chain.acceptance_ratio
    summary_dict["acceptance_ratio_mh"] = chain.acceptance_ratio
    with open(chain_dir / "summary.json", "w") as fh:
        json.dump(summary_dict, fh, indent=2, sort_keys=True)
        fh.write("\n")
    save_band_csv(band, chain_dir / "band.csv")

    context = dict(run.resolved_info())
    context["band"] = dict(run.config["band"])
    context["burn_in"] = sampler["burn_in"]
    context["seeds"] = {"adaptive": adaptive_seed, "mh": mh_seed}
    with open(chain_dir / "context.json", "w") as fh:
        json.dump(context, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return {
        "dir": str(chain_dir),
        "seeds": {"adaptive": adaptive_seed, "mh": mh_seed},
        "acceptance_ratio_adaptive": adaptive_chain.acceptance_ratio,
        "acceptance_ratio_mh": chain.acceptance_ratio,
        "converged": summary.converged,
    }


def _chain_worker(args):
    config, measurements_path, seeds, chain_dir = args
    run = prepare_run(config, measurements_override=measurements_path)
    return _execute_chain(run, seeds, chain_dir)


def run_infer(config: dict, out_dir, n_chains: int = 1, workers: int | None = None) -> dict:
    """Full inference: data, adaptive phase, MH phase, summaries, bands.

    Chains are statistically independent (spawned seeds) and share one
    measurement file; with ``workers`` > 1 they run in separate processes.
    """
    if n_chains < 1:
        raise ConfigError(f"n_chains must be >= 1, got {n_chains}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    run = prepare_run(config)
    measurements_path = out_dir / "measurements.csv"
    save_measurements(run.measurements, measurements_path)

    seeds = _chain_seeds(config["sampler"]["seed"], n_chains)
    chain_dirs = [out_dir / f"chain-{i:02d}" for i in range(n_chains)]

    if workers is None:
        workers = min(n_chains, os.cpu_count() or 1)
    workers = max(1, min(workers, n_chains))

    if n_chains == 1 or workers == 1:
        results = [
            _chain_worker((config, str(measurements_path), seeds[i], str(chain_dirs[i])))
            for i in range(n_chains)
        ]
    else:
        args = [
            (config, str(measurements_path), seeds[i], str(chain_dirs[i]))
            for i in range(n_chains)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chain_worker, args))

    payload = {
        "command": "infer",
        "config": config,
        "config_hash": config_hash(config),
        "versions": _versions(),
        "resolved": run.resolved_info(),
        "sampler": dict(config["sampler"]),
        "chains": results,
        "outputs": {
            "measurements": str(measurements_path),
            "chain_dirs": [str(d) for d in chain_dirs],
        },
    }
    write_manifest(out_dir, payload)
    return payload


# --- report --------------------------------------------------------------------


def run_report(
    chain_dir,
    out_dir=None,
    level: float | None = None,
    grid_points: int | None = None,
    burn_in: int | None = None,
) -> dict:
    """Re-derive summary and band from a stored chain (optionally overriding
    burn-in, band level, or grid resolution)."""
    chain_dir = Path(chain_dir)
    context_path = chain_dir / "context.json"
    if not context_path.exists():
        raise ConfigError(f"{chain_dir} does not look like a chain directory (no context.json)")
    with open(context_path) as fh:
        context = json.load(fh)
    chain = load_chain(chain_dir)
    out_dir = chain_dir if out_dir is None else Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if burn_in is not None:
        if not 0 <= burn_in < chain.samples.shape[0]:
            raise ConfigError(
                f"burn_in {burn_in} outside [0, {chain.samples.shape[0]}) for this chain"
            )
        chain.burn_in = burn_in
    effective_level = context["band"]["level"] if level is None else level
    effective_points = context["band"]["grid_points"] if grid_points is None else grid_points

    truth_params = context.get("truth_params")
    if truth_params is not None:
        truth_params = np.asarray(truth_params, dtype=float)
    summary = summarize(chain, truth=truth_params)
    temperature_range = TemperatureRange(context["theta_min"], context["theta_max"])
    theta_nodes = context.get("theta_nodes")
    knot_grid = context.get("knot_grid")
    band = credible_band(
        chain,
        context["parametrization"],
        level=effective_level,
        theta_nodes=None if theta_nodes is None else np.asarray(theta_nodes, dtype=float),
        knot_grid=None if knot_grid is None else np.asarray(knot_grid, dtype=float),
        temperature_range=temperature_range,
        grid_points=effective_points,
    )
    summary_dict = summary.to_dict()
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary_dict, fh, indent=2, sort_keys=True)
        fh.write("\n")
    save_band_csv(band, out_dir / "band.csv")

    payload = {
        "command": "report",
        "source_chain": str(chain_dir),
        "versions": _versions(),
        "overrides": {"level": level, "grid_points": grid_points, "burn_in": burn_in},
        "outputs": {
            "summary": str(out_dir / "summary.json"),
            "band": str(out_dir / "band.csv"),
        },
    }
    if out_dir != chain_dir:
        write_manifest(out_dir, payload)
    return payload
