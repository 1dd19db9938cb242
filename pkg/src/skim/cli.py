"""Command-line front end: ``skim gen|train|run|strf|bench``.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
import json
import logging
import os
from pathlib import Path
import statistics
import sys

import numpy as np

from . import analysis, bench, network, trainer
from .errors import FormatError, NumericError, ParameterError, ShapeError, SkimError
from .events import (
    ContinuousSignal,
    EventStream,
    read_continuous,
    read_events,
    to_dense,
    write_continuous,
    write_events,
)
from .modelfile import jsonable, load_model, save_model

log = logging.getLogger("skim")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class ConfigError(SkimError, ValueError):
    pass


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class StrfParams:
    noise_rate: float = 0.05
    n_steps: int = 100000
    n_lags: int = 110


@dataclass
class RunConfig:
    scenario: bench.ScenarioConfig = field(default_factory=bench.ScenarioConfig)
    model: bench.ModelParams = field(default_factory=bench.ModelParams)
    strf: StrfParams = field(default_factory=StrfParams)
    trials: int = 1
    max_lag: int = 50
    plots: bool = True


def _section(cls, data, prefix: str, convert=None):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix}: expected an object")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{prefix}.{unknown[0]}: unknown field")
    kw = {}
    for k, v in data.items():
        if convert and k in convert:
            try:
                v = convert[k](v)
            except (KeyError, TypeError, ValueError) as e:
                raise ConfigError(f"{prefix}.{k}: {e}") from None
        kw[k] = v
    try:
        obj = cls(**kw)
        if hasattr(obj, "validate"):
            obj.validate()
    except ParameterError as e:
        raise ConfigError(f"{prefix}.{e}") from None
    except TypeError as e:
        raise ConfigError(f"{prefix}: {e}") from None
    return obj


def _word(d):
    return None if d is None else bench.WordPattern.from_dict(d)


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    top = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - top)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown field")
    cfg = RunConfig(
        scenario=_section(bench.ScenarioConfig, data.get("scenario"), "scenario",
                          {"word_a": _word, "word_b": _word}),
        model=_section(bench.ModelParams, data.get("model"), "model"),
        strf=_section(StrfParams, data.get("strf"), "strf"),
    )
    for k in ("trials", "max_lag"):
        if k in data:
            if not isinstance(data[k], int) or data[k] < 1:
                raise ConfigError(f"{k}: must be a positive integer")
            setattr(cfg, k, data[k])
    if "plots" in data:
        cfg.plots = bool(data["plots"])
    if not 0.0 < cfg.strf.noise_rate < 1.0:
        raise ConfigError("strf.noise_rate: must lie in (0, 1)")
    return cfg


def load_config(path, seed=None) -> RunConfig:
    if path is None:
        data = {}
    else:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config: invalid JSON ({e})") from None
    cfg = parse_config(data)
    if seed is not None:
        cfg.scenario.seed = seed
        cfg.model.seed = seed
    return cfg


# ---------------------------------------------------------------------------
# helpers


def _write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _write_matrix_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(str(v) if isinstance(v, (int, str)) else repr(float(v)) for v in row)
              for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_data(data_dir: Path):
    inputs = read_events(data_dir / "inputs.csv")
    att_path = data_dir / "attention.csv"
    cont = read_continuous(att_path) if att_path.exists() else ContinuousSignal.empty(inputs.n_steps)
    if cont.n_steps != inputs.n_steps:
        raise ShapeError(f"attention spans {cont.n_steps} steps, inputs span {inputs.n_steps}")
    return inputs, cont


def write_strf(strf: analysis.Strf, path) -> None:
    header = ["channel"] + [f"lag{l}" for l in range(strf.n_lags)]
    rows = [[c] + strf.field[c].tolist() for c in range(strf.n_channels)]
    _write_matrix_csv(path, header, rows)


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    cfg = load_config(args.config, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scn = bench.build_scenario(cfg.scenario)
    write_events(scn.inputs, out / "inputs.csv")
    write_continuous(scn.attention, out / "attention.csv")
    write_events(scn.composite_target, out / "targets.csv")
    _write_json({
        "config": cfg.scenario.to_dict(),
        "word_log": [list(w) for w in scn.word_log],
        "word_targets": scn.targets.pairs(),
        "n_word_events": scn.word_events,
        "noise_fraction": scn.noise_fraction(),
    }, out / "scenario.json")
    log.info("wrote scenario with %d words to %s", len(scn.word_log), out)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_config(args.config, args.seed)
    data = Path(args.data)
    inputs, cont = _read_data(data)
    targets = read_events(data / "targets.csv")
    if targets.n_steps != inputs.n_steps:
        raise ShapeError(f"targets span {targets.n_steps} steps, inputs span {inputs.n_steps}")
    p = cfg.model
    hidden = bench.make_hidden(p, inputs.n_channels, cont.n_channels)
    model, rep = trainer.train(hidden, inputs, cont if cont.n_channels else None,
                               trainer.TargetSpec(targets, p.widen, p.amplitude), p.eps)
    model.meta.update({"seed": p.seed, "widen": p.widen})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    _write_json(rep.to_dict(), out / "report.json")
    log.info("trained: residual %.4f (zero-weight baseline %.4f)", rep.train_residual,
             rep.zero_residual)
    return EXIT_OK


def cmd_run(args) -> int:
    model = load_model(args.model)
    inputs, cont = _read_data(Path(args.data))
    trace = network.forward(model, inputs, cont if cont.n_channels else None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_continuous(ContinuousSignal(trace.y), out / "outputs.csv")
    write_events(trace.z, out / "events_out.csv")
    return EXIT_OK


def cmd_strf(args) -> int:
    model = load_model(args.model)
    att = args.attention
    strfs = analysis.estimate_strf(model, args.noise_rate, args.steps, args.lags, att,
                                   seed=args.seed if args.seed is not None else 0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for s in strfs:
        write_strf(s, out / f"strf_out{s.output}.csv")
    _write_json({"n_trigger_events": [s.n_trigger_events for s in strfs],
                 "baseline": strfs[0].baseline if strfs else []}, out / "strf.json")
    return EXIT_OK


def _trial(cfg: RunConfig, index: int):
    scn = bench._replace_cfg(cfg.scenario, seed=cfg.scenario.seed + index)
    params = bench.ModelParams(**{f.name: getattr(cfg.model, f.name) for f in fields(cfg.model)})
    params.seed = cfg.model.seed + index
    res = bench.run_experiment(scn, params, cfg.max_lag)
    strfs = {}
    for level in (1.0, -1.0):
        strfs[level] = analysis.estimate_strf(
            res.model, cfg.strf.noise_rate, cfg.strf.n_steps, cfg.strf.n_lags, level,
            seed=scn.seed + 7919,
        )[0]
    wa, wb = res.test.words
    res.report["strf"] = {
        "attention+": {"n_trigger_events": strfs[1.0].n_trigger_events,
                       "footprint_corr": strf_footprint_corr(strfs[1.0], wa)},
        "attention-": {"n_trigger_events": strfs[-1.0].n_trigger_events,
                       "footprint_corr": strf_footprint_corr(strfs[-1.0], wb)},
    }
    return res, strfs


def strf_footprint_corr(strf: analysis.Strf, word: bench.WordPattern) -> float | None:
    """Pearson correlation between a field and the word raster, aligned so the
    word's last timestep sits at lag 0."""
    fp = np.zeros_like(strf.field)
    for t, c in word.events:
        lag = word.duration - 1 - t
        if lag < fp.shape[1]:
            fp[c, lag] = 1.0
    if strf.n_trigger_events == 0 or np.std(strf.field) == 0:
        return None
    return float(np.corrcoef(strf.field.ravel(), fp.ravel())[0, 1])


def _median(vals):
    vals = [v for v in vals if v is not None]
    return statistics.median(vals) if vals else None


def cmd_bench(args) -> int:
    cfg = load_config(args.config, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = max(1, int(args.jobs or 1))
    if jobs > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_trial, [cfg] * cfg.trials, range(cfg.trials)))
    else:
        results = [_trial(cfg, i) for i in range(cfg.trials)]

    trials = [r.report for r, _ in results]
    keys = ("attended_hit_rate", "unattended_hit_rate", "false_alarm_per_1000")
    summary = {k: _median([t["test"][k] for t in trials]) for k in keys}
    summary["confusion_summary"] = _median([t["confusion"]["summary"] for t in trials])
    _write_json({"trials": trials, "median": summary}, out / "report.json")
    _write_json({"wall_time_s": [r.wall_time_s for r, _ in results]}, out / "timing.json")

    rows = []
    for i, (res, _) in enumerate(results):
        for name, group in (("", res.confusion.curves), ("ideal ", res.confusion.references)):
            for key, curve in group.items():
                rows += [[i, name + key, int(l), v] for l, v in zip(curve.lags, curve.values)]
    _write_matrix_csv(out / "curves.csv", ["trial", "curve", "lag", "value"], rows)
    for i, (_, strfs) in enumerate(results):
        for level, s in strfs.items():
            write_strf(s, out / f"strf_trial{i}_att{'pos' if level > 0 else 'neg'}.csv")
    if cfg.plots:
        from .plotting import benchmark_figure, save_svg

        res, strfs = results[0]
        save_svg(benchmark_figure(res, strfs), out / "plots.svg")
    log.info("bench: median attended hit rate %s", summary["attended_hit_rate"])
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="override scenario and model seeds")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes (bench only)")

    sp = sub.add_parser("gen", help="generate a benchmark scenario")
    common(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("train", help="train a model on scenario files")
    common(sp)
    sp.add_argument("--data", required=True, help="directory with inputs/attention/targets CSVs")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("run", help="run a saved model over input files")
    common(sp, config=False)
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("strf", help="estimate receptive fields of a saved model")
    common(sp, config=False)
    sp.add_argument("--model", required=True)
    sp.add_argument("--noise-rate", type=float, default=0.05)
    sp.add_argument("--lags", type=int, default=110)
    sp.add_argument("--steps", type=int, default=100000)
    sp.add_argument("--attention", type=float, default=None,
                    help="fixed level for continuous channels")
    sp.set_defaults(func=cmd_strf)

    sp = sub.add_parser("bench", help="run the attentional-switching benchmark")
    common(sp)
    sp.set_defaults(func=cmd_bench)
    return p


def _setup_logging() -> None:
    level = os.environ.get("SKIM_LOG", "warn").upper()
    level = {"WARN": "WARNING"}.get(level, level)
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"skim: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as e:
        print(f"skim: numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ShapeError, FormatError, ParameterError, FileNotFoundError) as e:
        print(f"skim: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
