import json
import time

import jsonschema
import numpy as np
import pytest

from skim.cli import main
from skim.events import EventStream, read_continuous, read_events, write_events
from skim.modelfile import load_model
from skim.network import forward

SMALL = {
    "scenario": {"n_steps": 6000, "seed": 2},
    "model": {"n_hidden": 60, "train_steps": 8000, "test_steps": 5000},
    "strf": {"n_steps": 20000},
}

NUM = {"type": ["number", "null"]}
RATE = {"type": ["number", "null"], "minimum": 0, "maximum": 1}
TRIAL_SCHEMA = {
    "type": "object",
    "required": ["scenario", "model", "train", "test", "confusion", "strf"],
    "properties": {
        "scenario": {"type": "object", "required": ["n_event_channels", "noise_rate", "seed"]},
        "model": {"type": "object", "required": ["n_hidden", "families", "seed"]},
        "train": {
            "type": "object",
            "required": ["train_residual", "zero_residual", "theta", "noise_fraction"],
            "properties": {"train_residual": {"type": "number", "minimum": 0},
                           "theta": {"type": "array", "items": NUM}},
        },
        "test": {
            "type": "object",
            "required": ["attended_hit_rate", "unattended_hit_rate", "false_alarms",
                         "false_alarm_per_1000", "hit_rate_A|+", "hit_rate_B|-"],
            "properties": {"attended_hit_rate": RATE, "unattended_hit_rate": RATE,
                           "false_alarms": {"type": "integer", "minimum": 0}},
        },
        "confusion": {
            "type": "object",
            "required": ["correct_zero_lag", "incorrect_zero_lag", "summary", "flags"],
            "properties": {
                "correct_zero_lag": {"type": "object", "additionalProperties": {"type": "number"}},
                "incorrect_zero_lag": {"type": "object", "additionalProperties": {"type": "number"}},
                "summary": NUM,
                "flags": {"type": "array", "items": {"type": "string"}},
            },
        },
        "strf": {"type": "object", "required": ["attention+", "attention-"]},
    },
}
REPORT_SCHEMA = {
    "type": "object",
    "required": ["trials", "median"],
    "additionalProperties": False,
    "properties": {
        "trials": {"type": "array", "minItems": 1, "items": TRIAL_SCHEMA},
        "median": {
            "type": "object",
            "required": ["attended_hit_rate", "unattended_hit_rate", "false_alarm_per_1000",
                         "confusion_summary"],
            "additionalProperties": NUM,
        },
    },
}


def write_cfg(path, cfg):
    path.write_text(json.dumps(cfg))
    return str(path)


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_gen_outputs_and_determinism(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", SMALL)
    for d in ("a", "b"):
        assert main(["gen", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    fa, fb = files(tmp_path / "a"), files(tmp_path / "b")
    assert set(fa) == {"inputs.csv", "attention.csv", "targets.csv", "scenario.json"}
    assert fa == fb
    ev = read_events(tmp_path / "a" / "inputs.csv")
    att = read_continuous(tmp_path / "a" / "attention.csv")
    assert ev.n_steps == att.n_steps == 6000 and ev.n_channels == 5


def test_seed_override_changes_output(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", SMALL)
    main(["gen", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["gen", "--config", cfg, "--seed", "99", "--out", str(tmp_path / "b")])
    assert files(tmp_path / "a")["inputs.csv"] != files(tmp_path / "b")["inputs.csv"]


@pytest.mark.parametrize(
    "cfg, field",
    [
        ({"scenario": {"noise_rate": 1.5}}, "noise_rate"),
        ({"scenario": {"colour": 1}}, "scenario.colour"),
        ({"model": {"n_hidden": 0}}, "n_hidden"),
        ({"strf": {"noise_rate": 0}}, "strf.noise_rate"),
        ({"trials": 0}, "trials"),
    ],
)
def test_bad_config_exit_2(tmp_path, capsys, cfg, field):
    path = write_cfg(tmp_path / "c.json", cfg)
    assert main(["gen", "--config", path, "--out", str(tmp_path / "o")]) == 2
    assert field in capsys.readouterr().err


def test_train_run_roundtrip_bitwise(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", SMALL)
    data, mdir, rdir = tmp_path / "data", tmp_path / "m", tmp_path / "r"
    assert main(["gen", "--config", cfg, "--out", str(data)]) == 0
    assert main(["train", "--config", cfg, "--data", str(data), "--out", str(mdir)]) == 0
    rep = json.loads((mdir / "report.json").read_text())
    assert rep["train_residual"] < rep["zero_residual"]
    assert main(["run", "--model", str(mdir / "model.json"), "--data", str(data),
                 "--out", str(rdir)]) == 0

    # in-memory forward with the reloaded model agrees bit for bit with the files
    model = load_model(mdir / "model.json")
    tr = forward(model, read_events(data / "inputs.csv"), read_continuous(data / "attention.csv"))
    assert np.array_equal(read_continuous(rdir / "outputs.csv").values, tr.y)
    assert read_events(rdir / "events_out.csv") == tr.z

    # and retraining gives the identical model file
    assert main(["train", "--config", cfg, "--data", str(data), "--out", str(tmp_path / "m2")]) == 0
    assert (mdir / "model.json").read_bytes() == (tmp_path / "m2" / "model.json").read_bytes()


def test_train_zero_targets(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", SMALL)
    data = tmp_path / "data"
    main(["gen", "--config", cfg, "--out", str(data)])
    write_events(EventStream.empty(1, 6000), data / "targets.csv")
    assert main(["train", "--config", cfg, "--data", str(data), "--out", str(tmp_path / "m")]) == 0
    assert not np.any(load_model(tmp_path / "m" / "model.json").w2)


def test_shape_mismatch_exit_3(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", SMALL)
    data = tmp_path / "data"
    main(["gen", "--config", cfg, "--out", str(data)])
    write_events(EventStream.empty(1, 100), data / "targets.csv")
    assert main(["train", "--config", cfg, "--data", str(data), "--out", str(tmp_path / "m")]) == 3


def test_malformed_events_exit_3(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.json", SMALL)
    data = tmp_path / "data"
    main(["gen", "--config", cfg, "--out", str(data)])
    with open(data / "inputs.csv", "a") as f:
        f.write("oops\n")
    assert main(["train", "--config", cfg, "--data", str(data), "--out", str(tmp_path / "m")]) == 3
    assert "line" in capsys.readouterr().err


def test_strf_command(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", SMALL)
    data, mdir = tmp_path / "data", tmp_path / "m"
    main(["gen", "--config", cfg, "--out", str(data)])
    main(["train", "--config", cfg, "--data", str(data), "--out", str(mdir)])
    out = tmp_path / "s"
    assert main(["strf", "--model", str(mdir / "model.json"), "--steps", "5000", "--lags", "20",
                 "--attention", "1", "--out", str(out)]) == 0
    meta = json.loads((out / "strf.json").read_text())
    assert len(meta["n_trigger_events"]) == 1
    rows = (out / "strf_out0.csv").read_text().splitlines()
    assert len(rows) == 1 + 5


def test_bench_schema_and_determinism(tmp_path):
    cfg = dict(SMALL, trials=2)
    path = write_cfg(tmp_path / "c.json", cfg)
    assert main(["bench", "--config", path, "--out", str(tmp_path / "a"), "--jobs", "2"]) == 0
    assert main(["bench", "--config", path, "--out", str(tmp_path / "b")]) == 0
    a, b = files(tmp_path / "a"), files(tmp_path / "b")
    jsonschema.validate(json.loads(a["report.json"]), REPORT_SCHEMA)
    for name in a:
        if name != "timing.json":
            assert a[name] == b[name], name
    assert a["plots.svg"].startswith(b"<?xml")


@pytest.mark.slow
def test_bench_desk_scale_under_two_minutes(tmp_path):
    t0 = time.perf_counter()
    assert main(["bench", "--out", str(tmp_path / "o")]) == 0
    assert time.perf_counter() - t0 < 120
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    jsonschema.validate(rep, REPORT_SCHEMA)
    t = rep["trials"][0]
    assert t["train"]["train_residual"] < t["train"]["zero_residual"]
