import json

import pytest

from uqemu.cli import main
from uqemu.errors import ConfigError
from uqemu.experiments import (
    CSV_HEADER,
    EXPERIMENTS,
    ResultRow,
    check_relation,
    emit_results,
    format_results,
    parse_config,
    read_jsonl,
    row_relation,
    run_experiment,
    splitmix64,
    trial_seed,
)
from uqemu.instances import EmulationProblem


def test_minimal_config_takes_defaults():
    cfg = parse_config('{"experiment": "theorem1"}')
    assert cfg.mode == "EXACT"
    assert cfg.trials == 100
    assert cfg.T == (1, 2, 3, 4, 5)
    assert cfg.seed == 0


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"experiment": "theorem1", "trials": 0}, "trials"),
        ({"experiment": "theorem1", "T": []}, "T"),
        ({"experiment": "theorem1", "T": [0]}, "T"),
        ({"experiment": "theorem1", "dims": [2, 3, 4]}, "dims"),
        ({"experiment": "theorem1", "mode": "fast"}, "mode"),
        ({"experiment": "theorem1", "seed": -1}, "seed"),
        ({"experiment": "nope"}, "experiment"),
    ],
)
def test_invalid_fields_are_named(doc, field):
    with pytest.raises(ConfigError, match=f"'{field}'"):
        parse_config(json.dumps(doc))


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="colour"):
        parse_config('{"experiment": "theorem1", "colour": 3}')


def test_malformed_json_reports_line():
    text = '{\n  "experiment": "theorem1",\n  "trials": 5,,\n}'
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    msg = str(info.value)
    assert "line 3" in msg
    assert '"trials": 5,,' in msg


def test_config_round_trip():
    cfg = parse_config('{"experiment": "dme_scaling", "seed": 17, "dims": [4, 2, 3]}')
    assert parse_config(cfg.to_json()) == cfg


def test_trial_seeds_are_stable():
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert trial_seed(5, 3) == trial_seed(5, 3)
    assert len({trial_seed(1, i) for i in range(1000)}) == 1000


def test_theorem1_rows_all_pass():
    cfg = parse_config('{"experiment": "theorem1", "trials": 20, "seed": 3}')
    rows = run_experiment(cfg)
    assert len(rows) == 20
    assert all(r.passed for r in rows)


def test_dme_scaling_has_slope_row():
    rows = run_experiment(parse_config('{"experiment": "dme_scaling", "trials": 1}'))
    slope = [r for r in rows if r.params["check"] == "slope"]
    assert len(slope) == 1
    assert slope[0].measured == pytest.approx(-1, abs=0.15)


def test_identical_config_gives_identical_bytes():
    cfg = parse_config('{"experiment": "theorem1", "trials": 6, "seed": 99, "mode": "MC", "samples": 200}')
    a = format_results(run_experiment(cfg))
    b = format_results(run_experiment(cfg))
    assert a == b


def test_extra_trials_do_not_change_earlier_rows():
    short = run_experiment(parse_config('{"experiment": "conjugate_exactness", "trials": 3, "seed": 4}'))
    long = run_experiment(parse_config('{"experiment": "conjugate_exactness", "trials": 6, "seed": 4}'))
    assert format_results(short) == format_results(long[:3])


def make_row(**kw):
    base = dict(experiment="theorem1", params={"D": 4, "T": 2}, measured=0.1234567890123456, bound=0.0, passed=True)
    base.update(kw)
    return ResultRow(**base)


def test_csv_shapes():
    assert format_results([]) == ",".join(CSV_HEADER) + "\n"
    lines = format_results([make_row(stderr=0.01, wall_ms=3.5)]).splitlines()
    assert len(lines) == 2
    assert lines[1].split(",")[2] == "0.123456789012"
    assert lines[1].split(",")[6] == ""
    timed = format_results([make_row(wall_ms=3.5)], timing=True).splitlines()[1]
    assert timed.split(",")[6] == "3.5"


def test_jsonl_round_trip():
    rows = [make_row(), make_row(measured=2.0, passed=False, notes={"tol": 1e-9})]
    assert read_jsonl(format_results(rows, "jsonl", timing=True)) == rows


def test_emit_io_error_names_path(tmp_path):
    bad = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        emit_results([make_row()], path=str(bad))
    good = tmp_path / "out.csv"
    emit_results([make_row()], path=str(good))
    assert good.read_text().startswith("experiment,")


def test_pass_flags_match_relation():
    for name in ("pauli_erase", "dme_scaling", "conjugate_exactness", "projective_bound"):
        rows = run_experiment(parse_config(json.dumps({"experiment": name, "trials": 2})))
        for r in rows:
            assert r.passed == check_relation(row_relation(r), r.measured, r.bound, r.notes["tol"])


def test_every_criterion_has_an_experiment():
    required = {
        "theorem1",
        "theorem2_T_bound",
        "lambda_perp_bound",
        "pauli_erase",
        "dme_scaling",
        "rus_success",
        "projective_bound",
        "conjugate_exactness",
        "delta_robustness",
        "representation_equivalence",
        "error_budget",
        "controlled_unitary",
    }
    assert required <= set(EXPERIMENTS)


def test_cli_run_and_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"experiment": "pauli_erase", "T": [1, 2, 3]}')
    out = tmp_path / "r.csv"
    assert main(["run", str(cfg), "--out", str(out), "--seed", "2"]) == 0
    assert len(out.read_text().splitlines()) == 4
    assert main(["run", str(cfg), "--format", "jsonl"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3
    cfg.write_text('{"experiment": "pauli_erase", "trials": 0}')
    assert main(["run", str(cfg)]) == 2
    assert "trials" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "absent.json")]) == 2


def test_cli_exit_one_on_failure(tmp_path, monkeypatch):
    import uqemu.cli as cli

    monkeypatch.setattr(cli, "run_experiment", lambda cfg: [make_row(passed=False)])
    cfg = tmp_path / "c.json"
    cfg.write_text('{"experiment": "theorem1"}')
    assert main(["run", str(cfg)]) == 1


def test_cli_list_and_gen_instance(tmp_path, capsys):
    assert main(["list-experiments"]) == 0
    listed = capsys.readouterr().out
    assert all(name in listed for name in EXPERIMENTS)
    assert main(["gen-instance", "4", "2", "3", "7"]) == 0
    p = EmulationProblem.from_json(capsys.readouterr().out)
    assert p.samples.dim_subspace == 2 and p.samples.K == 3
    dest = tmp_path / "inst.json"
    assert main(["gen-instance", "4", "2", "3", "7", "--out", str(dest)]) == 0
    assert EmulationProblem.from_json(dest.read_text()).to_json() == p.to_json()
    assert main(["gen-instance", "2", "3", "3", "7"]) == 2
