"""Experiment configuration: JSON schema, presets, merging, hashing.

A configuration is a JSON object; every field has a default, so a config file
only needs the fields it wants to change.  Precedence is
command-line flags > config file > defaults.

Schema (defaults shown):

    {
      "name": null,                      # used for default output locations
      "physical": {                      # dimensional setup, SI units
        "length": 0.01, "t0": 300.0, "flux": 5e5, "h": 600.0,
        "t_inf": 300.0, "rho": 7870.0, "cp": 486.0,
        "dt": 0.2, "duration": 600.0
      },
      "mesh": {"n_elements": 5},
      "sensors": [0.0, 1.0],             # must coincide with mesh nodes
      "truth": null,                     # conductivity model object (see below)
      "noise": {"relative_sigma": 0.01, "scale": 1.0},
      "data": {"seed": 42, "path": null},# generate synthetically, or load CSV
      "parametrization": "conductivity_values",
      "n_knots": 100,                    # piecewise parametrization only
      "sensitivity": {"reference": "truth", "epsilon": 1e-5},
      "prior": {"kind": "uniform"},
      "sampler": {"n_adapt": 20000, "n_steps": 5000, "burn_in": 1000, "seed": 7},
      "init": "ones",                    # "ones" | "twos" | "prior-shape" | [numbers]
      "band": {"level": 0.99, "grid_points": 200}
    }

Conductivity model objects: {"kind": "cubic_coeffs", "coefficients": [...]},
{"kind": "cubic_values", "theta_nodes": [...], "kappa_nodes": [...]}, or
{"kind": "piecewise", "theta_grid": [...], "kappa_values": [...]}.

Priors:
    {"kind": "uniform"}
    {"kind": "normal", "mean": "truth-average" | "truth-average-intercept" | [...],
     "rel_std": 0.1 | null, "std": [...] | null}
    {"kind": "gmrf", "gamma2": 2e-4, "qbar": "exact" | "zero" | "negated-exact" | [...]}

"truth-average" sets every prior mean to mu, the average of the ground-truth
curve over the measured temperature range (conductivity_values only);
"truth-average-intercept" sets the mean to (0, 0, 0, mu) (coefficients only).
With those modes ``rel_std`` expresses the std as a fraction of mu; an
explicit numeric mean requires an explicit ``std`` list.  GMRF "exact" uses
the first differences of the ground-truth values at the knots.

The init modes describe the starting curve: "ones" starts at kappa == 1
("twos" at 2), realized per parametrization (all-ones values/knots, or
coefficients (0, 0, 0, 1)).  "prior-shape" (GMRF priors only) integrates the
prior's target differences and anchors the level at the average of the
ground-truth curve over the measured range — the prior's own idea of the
curve shape at the scale the data implies, so the sampler starts its walk
from a state the prior will not immediately fight.
"""

from __future__ import annotations

import hashlib
import json
from copy import deepcopy
from importlib import resources
from pathlib import Path

from .errors import ConfigError

__all__ = [
    "DEFAULT_CONFIG",
    "deep_merge",
    "load_config_file",
    "load_preset",
    "available_presets",
    "build_config",
    "validate_config",
    "config_hash",
]

DEFAULT_CONFIG = {
    "name": None,
    "physical": {
        "length": 0.01,
        "t0": 300.0,
        "flux": 5.0e5,
        "h": 600.0,
        "t_inf": 300.0,
        "rho": 7870.0,
        "cp": 486.0,
        "dt": 0.2,
        "duration": 600.0,
    },
    "mesh": {"n_elements": 5},
    "sensors": [0.0, 1.0],
    "truth": None,
    "noise": {"relative_sigma": 0.01, "scale": 1.0},
    "data": {"seed": 42, "path": None},
    "parametrization": "conductivity_values",
    "n_knots": 100,
    "sensitivity": {"reference": "truth", "epsilon": 1e-5},
    "prior": {"kind": "uniform"},
    "sampler": {"n_adapt": 20000, "n_steps": 5000, "burn_in": 1000, "seed": 7},
    "init": "ones",
    "band": {"level": 0.99, "grid_points": 200},
}

_PRIOR_KINDS = ("uniform", "normal", "gmrf")
_PARAMETRIZATIONS = ("coefficients", "conductivity_values", "piecewise")


def deep_merge(base: dict, overrides: dict) -> dict:
    """Recursive dict merge; scalar and list values replace wholesale."""
    merged = deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = deepcopy(value)
    return merged


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return data


def available_presets() -> list[str]:
    root = resources.files("heatbayes").joinpath("presets")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    root = resources.files("heatbayes").joinpath("presets")
    candidate = root.joinpath(f"{name}.json")
    if not candidate.is_file():
        raise ConfigError(
            f"unknown preset '{name}'; available: {', '.join(available_presets())}"
        )
    data = json.loads(candidate.read_text())
    data.setdefault("name", name)
    return data


def build_config(preset=None, config_file=None, overrides=None) -> dict:
    """defaults <- preset <- config file <- overrides, left to right."""
    merged = deepcopy(DEFAULT_CONFIG)
    if preset is not None:
        merged = deep_merge(merged, load_preset(preset))
    if config_file is not None:
        file_data = load_config_file(config_file)
        merged = deep_merge(merged, file_data)
        if merged.get("name") is None:
            merged["name"] = Path(config_file).stem
    if overrides:
        merged = deep_merge(merged, overrides)
    validate_config(merged)
    return merged


def _require(condition, message):
    if not condition:
        raise ConfigError(message)


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_number_list(value):
    return isinstance(value, list) and len(value) > 0 and all(_is_number(v) for v in value)


def validate_config(config: dict) -> None:
    """Schema and cross-field checks; raises ConfigError with a field path."""
    unknown = set(config) - set(DEFAULT_CONFIG)
    _require(not unknown, f"unknown config field(s): {', '.join(sorted(unknown))}")

    for section in ("physical", "mesh", "noise", "data", "sensitivity", "sampler", "band"):
        _require(isinstance(config[section], dict), f"'{section}' must be an object")
        unknown = set(config[section]) - set(DEFAULT_CONFIG[section])
        _require(
            not unknown, f"unknown field(s) in '{section}': {', '.join(sorted(unknown))}"
        )

    phys = config["physical"]
    for key in DEFAULT_CONFIG["physical"]:
        _require(_is_number(phys.get(key)), f"physical.{key} must be a number")

    _require(
        isinstance(config["mesh"]["n_elements"], int) and config["mesh"]["n_elements"] >= 1,
        "mesh.n_elements must be a positive integer",
    )
    _require(_is_number_list(config["sensors"]), "sensors must be a non-empty number list")

    _require(
        config["parametrization"] in _PARAMETRIZATIONS,
        f"parametrization must be one of {_PARAMETRIZATIONS}, got {config['parametrization']!r}",
    )
    _require(
        isinstance(config["n_knots"], int) and config["n_knots"] >= 2,
        "n_knots must be an integer >= 2",
    )

    noise = config["noise"]
    _require(
        _is_number(noise["relative_sigma"]) and noise["relative_sigma"] > 0,
        "noise.relative_sigma must be a positive number",
    )
    _require(
        _is_number(noise["scale"]) and noise["scale"] >= 0,
        "noise.scale must be a number >= 0",
    )

    data = config["data"]
    _require(
        data["path"] is None or isinstance(data["path"], str),
        "data.path must be null or a string",
    )
    _require(
        isinstance(data["seed"], int) and not isinstance(data["seed"], bool),
        "data.seed must be an integer",
    )

    sampler = config["sampler"]
    for key in ("n_adapt", "n_steps", "burn_in", "seed"):
        _require(
            isinstance(sampler[key], int) and not isinstance(sampler[key], bool),
            f"sampler.{key} must be an integer",
        )
    _require(sampler["n_adapt"] >= 1, "sampler.n_adapt must be >= 1")
    _require(sampler["n_steps"] >= 1, "sampler.n_steps must be >= 1")
    _require(
        0 <= sampler["burn_in"] < sampler["n_steps"],
        f"sampler.burn_in must be in [0, n_steps), got {sampler['burn_in']}",
    )

    init = config["init"]
    _require(
        init in ("ones", "twos", "prior-shape") or _is_number_list(init),
        "init must be 'ones', 'twos', 'prior-shape', or a number list",
    )
    if init == "prior-shape":
        _require(
            config["prior"]["kind"] == "gmrf",
            "init 'prior-shape' needs a gmrf prior (it integrates prior.qbar)",
        )

    sens = config["sensitivity"]
    _require(
        sens["reference"] in ("truth", "ones") or _is_number_list(sens["reference"]),
        "sensitivity.reference must be 'truth', 'ones', or a number list",
    )
    _require(
        _is_number(sens["epsilon"]) and sens["epsilon"] > 0,
        "sensitivity.epsilon must be a positive number",
    )

    band = config["band"]
    _require(
        _is_number(band["level"]) and 0 < band["level"] < 1,
        "band.level must be a number in (0, 1)",
    )
    _require(
        isinstance(band["grid_points"], int) and band["grid_points"] >= 2,
        "band.grid_points must be an integer >= 2",
    )

    _validate_prior(config)

    if config["truth"] is not None:
        _require(isinstance(config["truth"], dict), "truth must be a model object or null")


def _validate_prior(config: dict) -> None:
    prior = config["prior"]
    _require(isinstance(prior, dict) and "kind" in prior, "prior must be an object with 'kind'")
    kind = prior["kind"]
    _require(kind in _PRIOR_KINDS, f"prior.kind must be one of {_PRIOR_KINDS}, got {kind!r}")
    parametrization = config["parametrization"]
    n = config["n_knots"] if parametrization == "piecewise" else 4

    if kind == "uniform":
        unknown = set(prior) - {"kind"}
        _require(not unknown, f"uniform prior takes no field(s): {', '.join(sorted(unknown))}")

    elif kind == "normal":
        unknown = set(prior) - {"kind", "mean", "rel_std", "std"}
        _require(not unknown, f"unknown normal-prior field(s): {', '.join(sorted(unknown))}")
        mean = prior.get("mean")
        std = prior.get("std")
        rel_std = prior.get("rel_std")
        if mean == "truth-average":
            _require(
                parametrization in ("conductivity_values", "piecewise"),
                "'truth-average' prior mean needs a value-type parametrization",
            )
            _require(config["truth"] is not None, "'truth-average' prior mean needs a truth model")
        elif mean == "truth-average-intercept":
            _require(
                parametrization == "coefficients",
                "'truth-average-intercept' prior mean is for the coefficients parametrization",
            )
            _require(config["truth"] is not None, "'truth-average-intercept' needs a truth model")
        elif _is_number_list(mean):
            _require(
                len(mean) == n,
                f"prior.mean has {len(mean)} entries; parametrization needs {n}",
            )
            _require(
                _is_number_list(std) and len(std) == n,
                "an explicit prior.mean requires an explicit prior.std of the same length",
            )
        else:
            raise ConfigError(
                "prior.mean must be 'truth-average', 'truth-average-intercept', or a number list"
            )
        if std is not None:
            _require(
                _is_number_list(std) and len(std) == n and all(v > 0 for v in std),
                f"prior.std must be {n} positive numbers",
            )
            _require(rel_std is None, "give prior.std or prior.rel_std, not both")
        else:
            _require(
                _is_number(rel_std) and rel_std > 0,
                "normal prior needs prior.std or a positive prior.rel_std",
            )

    elif kind == "gmrf":
        unknown = set(prior) - {"kind", "gamma2", "qbar"}
        _require(not unknown, f"unknown gmrf-prior field(s): {', '.join(sorted(unknown))}")
        _require(
            parametrization in ("conductivity_values", "piecewise"),
            "gmrf prior needs a value-type parametrization (its support is min(P) > 0)",
        )
        _require(
            _is_number(prior.get("gamma2")) and prior["gamma2"] > 0,
            "prior.gamma2 must be a positive number",
        )
        qbar = prior.get("qbar", "zero")
        if isinstance(qbar, str):
            _require(
                qbar in ("exact", "zero", "negated-exact"),
                "prior.qbar must be 'exact', 'zero', 'negated-exact', or a number list",
            )
            if qbar in ("exact", "negated-exact"):
                _require(config["truth"] is not None, f"qbar '{qbar}' needs a truth model")
        else:
            _require(
                _is_number_list(qbar) and len(qbar) == n - 1,
                f"prior.qbar must have {n - 1} entries for {n} parameters",
            )


def config_hash(config: dict) -> str:
    """Stable short hash of a config (output location excluded by design)."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]
