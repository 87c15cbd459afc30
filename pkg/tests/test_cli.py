"""End-to-end command line runs with tiny budgets.

Each test drives ``heatbayes.cli.main`` in process (argparse and all); one
smoke test goes through the installed console script to prove the entry
point is wired.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from heatbayes.cli import main
from heatbayes.diagnostics import load_band_csv
from heatbayes.forward import read_field_csv
from heatbayes.measurements import load_measurements

FAST = ["--dt", "0.2", "--duration", "60.0"]  # 300 time steps per solve
TINY_SAMPLER = ["--n-adapt", "800", "--n-steps", "200", "--burn-in", "50"]


def test_list_presets(capsys):
    assert main(["--list-presets"]) == 0
    out = capsys.readouterr().out.split()
    assert len(out) == 14
    assert "cubic-uniform" in out
    assert out == sorted(out)


def test_no_command_prints_help(capsys):
    assert main([]) == 2
    assert "simulate" in capsys.readouterr().out


def test_console_script_installed():
    proc = subprocess.run(
        [sys.executable, "-c", "from heatbayes.cli import console_main; console_main()", "--list-presets"],
        capture_output=True,
        text=True,
    )
    # console_main exits via sys.exit(main())
    assert proc.returncode == 0
    assert "paper-forward" in proc.stdout


# --- simulate ----------------------------------------------------------------


def test_simulate_writes_sensor_csv(tmp_path, capsys):
    out = tmp_path / "sim"
    code = main(["simulate", "--preset", "paper-forward", *FAST, "--output", str(out)])
    assert code == 0
    lines = (out / "sensors.csv").read_text().splitlines()
    assert lines[0] == "tau,X=0,X=1"
    assert len(lines) == 1 + 300
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["resolved"]["n_steps"] == 300
    assert str(out) in capsys.readouterr().out


def test_simulate_full_field_respects_elements(tmp_path):
    out = tmp_path / "field-run"
    code = main(
        ["simulate", "--preset", "paper-forward", *FAST, "--elements", "10",
         "--full-field", "--output", str(out)]
    )
    assert code == 0
    times, field = read_field_csv(out / "field.csv")
    assert field.shape[1] == 11  # 10 elements -> 11 nodes
    assert times.size == field.shape[0]


def test_simulate_without_truth_is_a_config_error(tmp_path, capsys):
    code = main(["simulate", *FAST, "--output", str(tmp_path / "x")])
    assert code == 2
    assert "truth" in capsys.readouterr().err


def test_simulate_negative_conductivity_is_a_numerical_failure(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"truth": {"kind": "cubic_coeffs", "coefficients": [0, 0, 0, -1.0]}}))
    code = main(["simulate", "--config", str(cfg), *FAST, "--output", str(tmp_path / "x")])
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    code = main(["simulate", "--config", str(tmp_path / "ghost.json"), "--output", str(tmp_path / "x")])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_refuses_nonempty_output_without_force(tmp_path, capsys):
    out = tmp_path / "busy"
    out.mkdir()
    (out / "junk.txt").write_text("hi")
    code = main(["simulate", "--preset", "paper-forward", *FAST, "--output", str(out)])
    assert code == 2
    assert "--force" in capsys.readouterr().err
    code = main(["simulate", "--preset", "paper-forward", *FAST, "--output", str(out), "--force"])
    assert code == 0


def test_output_root_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("HEATBAYES_OUTPUT_ROOT", str(tmp_path))
    code = main(["generate-data", "--preset", "cubic-uniform", *FAST])
    assert code == 0
    assert (tmp_path / "cubic-uniform-generate-data" / "measurements.csv").exists()


# --- generate-data ----------------------------------------------------------------


def test_generate_data_deterministic_in_seed(tmp_path):
    args = ["generate-data", "--preset", "cubic-uniform", *FAST, "--data-seed", "42"]
    assert main([*args, "--output", str(tmp_path / "a")]) == 0
    assert main([*args, "--output", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "measurements.csv").read_bytes()
    b = (tmp_path / "b" / "measurements.csv").read_bytes()
    assert a == b

    assert main(["generate-data", "--preset", "cubic-uniform", *FAST,
                 "--data-seed", "43", "--output", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "measurements.csv").read_bytes() != a


def test_generate_data_noise_off_gives_clean_data(tmp_path):
    out = tmp_path / "clean"
    code = main(["generate-data", "--preset", "cubic-uniform", *FAST,
                 "--noise-off", "--output", str(out)])
    assert code == 0
    ms = load_measurements(out / "measurements.csv")
    assert np.array_equal(ms.d, ms.t_noiseless)
    assert np.all(ms.sigma > 0)


# --- sensitivity -------------------------------------------------------------------


def test_sensitivity_report_and_matrix_dump(tmp_path):
    out = tmp_path / "sens"
    code = main(["sensitivity", "--preset", "cubic-uniform", *FAST,
                 "--dump-matrix", "--output", str(out)])
    assert code == 0
    summary = json.loads((out / "sensitivity.json").read_text())
    assert summary["det_jtj"] > 0
    assert sorted(summary["ranking_most_to_least_informed"]) == [0, 1, 2, 3]
    assert summary["reference_mode"] == "truth"
    matrix = (out / "jacobian.csv").read_text().splitlines()
    assert matrix[0] == "p0,p1,p2,p3"
    assert len(matrix) == 1 + 600  # two sensors x 300 steps


def test_sensitivity_explicit_reference(tmp_path):
    out = tmp_path / "sens-ref"
    code = main(["sensitivity", "--preset", "cubic-uniform", *FAST,
                 "--reference", "2.0,2.0,2.0,2.0", "--epsilon", "1e-4",
                 "--output", str(out)])
    assert code == 0
    summary = json.loads((out / "sensitivity.json").read_text())
    assert summary["reference"] == [2.0, 2.0, 2.0, 2.0]
    assert summary["epsilon"] == 1e-4
    assert summary["reference_mode"] == "explicit"


# --- infer + report -----------------------------------------------------------------


@pytest.fixture(scope="module")
def infer_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "infer"
    code = main(["infer", "--preset", "cubic-uniform", *FAST, *TINY_SAMPLER,
                 "--seed", "42", "--output", str(out)])
    assert code == 0
    return out


def test_infer_writes_chain_artifacts(infer_dir):
    assert (infer_dir / "measurements.csv").exists()
    chain_dir = infer_dir / "chain-00"
    for name in ("chain.csv", "chain.manifest.json", "summary.json", "band.csv", "context.json"):
        assert (chain_dir / name).exists(), name

    summary = json.loads((chain_dir / "summary.json").read_text())
    assert 0.0 < summary["acceptance_ratio_mh"] < 1.0
    assert len(summary["mean"]) == 4
    band = load_band_csv(chain_dir / "band.csv")
    assert np.all(band.lower <= band.upper)

    manifest = json.loads((infer_dir / "manifest.json").read_text())
    assert manifest["command"] == "infer"
    assert len(manifest["chains"]) == 1


def test_infer_deterministic_in_seed(tmp_path, infer_dir):
    out = tmp_path / "again"
    code = main(["infer", "--preset", "cubic-uniform", *FAST, *TINY_SAMPLER,
                 "--seed", "42", "--output", str(out)])
    assert code == 0
    first = (infer_dir / "chain-00" / "chain.csv").read_bytes()
    again = (out / "chain-00" / "chain.csv").read_bytes()
    assert first == again


def test_infer_multiple_chains_distinct_seeds(tmp_path):
    out = tmp_path / "pair"
    code = main(["infer", "--preset", "cubic-uniform", *FAST, *TINY_SAMPLER,
                 "--chains", "2", "--seed", "9", "--output", str(out)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    seeds = [tuple(c["seeds"].values()) for c in manifest["chains"]]
    assert len(set(seeds)) == 2
    a = (out / "chain-00" / "chain.csv").read_bytes()
    b = (out / "chain-01" / "chain.csv").read_bytes()
    assert a != b


def test_infer_desk_scale_divides_budgets(tmp_path):
    out = tmp_path / "desk"
    code = main(["infer", "--preset", "cubic-uniform", *FAST,
                 "--n-adapt", "2000", "--n-steps", "500", "--burn-in", "100",
                 "--scale", "desk", "--output", str(out)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["sampler"]["n_adapt"] == 200
    assert manifest["sampler"]["n_steps"] == 50
    assert manifest["sampler"]["burn_in"] == 10


def test_infer_rejects_bad_init_argument():
    with pytest.raises(SystemExit) as excinfo:
        main(["infer", "--init", "a,b"])
    assert excinfo.value.code == 2


def test_report_recomputes_band(infer_dir, tmp_path):
    out = tmp_path / "rep"
    code = main(["report", str(infer_dir / "chain-00"),
                 "--level", "0.5", "--grid-points", "20", "--output", str(out)])
    assert code == 0
    band = load_band_csv(out / "band.csv", level=0.5)
    assert band.theta.size == 20
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["mean"]) == 4


def test_report_on_non_chain_dir(tmp_path, capsys):
    code = main(["report", str(tmp_path)])
    assert code == 2
    assert "context.json" in capsys.readouterr().err
