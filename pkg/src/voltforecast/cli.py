"""Command-line entry point: ``voltforecast {synth,train,compare,cv,stages}``.

Exit codes: 0 success, 2 configuration/input error, 3 numerical divergence,
4 every compared model failed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from . import reports
from .config import RunConfig, load_config
from .dataset import RawTable, impute_missing, load_csv, make_windows, write_csv
from .errors import ConfigError, DivergenceError, VoltForecastError
from .evaluation import (
    compare_models,
    cross_validate,
    fit_and_score,
    fit_to_json,
    run_stages,
)
from .metrics import bundle
from .synthgen import TaperProfile, inject_missing, simulate_charge_cycles

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_ALL_FAILED = 0, 2, 3, 4


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- data


def synth_table(cfg: RunConfig) -> RawTable:
    block = cfg.synth
    seeds = cfg.derived_seeds()
    cur = block.current
    profile = cur["constant"] if "constant" in cur else TaperProfile(**cur)
    battery = block.battery.__class__(**{**asdict(block.battery), "seed": seeds["synth"]})
    table = simulate_charge_cycles(battery, block.n_cycles, block.dt_s, profile, block.max_steps)
    if block.missing_fraction > 0:
        table = inject_missing(table, block.missing_fraction, seed=seeds["missing"])
    return table


def load_table(cfg: RunConfig) -> RawTable:
    if cfg.data_path is not None:
        if not Path(cfg.data_path).exists():
            raise CommandError(f"data file not found: {cfg.data_path}", EXIT_CONFIG)
        return load_csv(cfg.data_path)
    return synth_table(cfg)


def build_series(cfg: RunConfig, table: RawTable):
    clean = impute_missing(table, cfg.data.impute)
    return make_windows(clean, cfg.data.window_length, cfg.data.horizon, cfg.data.features)


def table_fingerprint(table: RawTable) -> dict:
    h = hashlib.sha256()
    h.update(",".join(table.columns).encode())
    h.update(table.values.tobytes())
    h.update(table.mask.tobytes())
    return {"rows": len(table), "columns": list(table.columns), "sha256": h.hexdigest()}


# ------------------------------------------------------------- commands


class Run:
    """Bookkeeping shared by every command: output dir, files, manifest."""

    def __init__(self, command: str, cfg: RunConfig, timestamp: bool):
        self.command = command
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds") if timestamp else None
        self.started = time.perf_counter()
        self.fingerprint: Optional[dict] = None
        self.extra: dict = {}

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    def manifest(self, status: int, error: Optional[str] = None) -> None:
        doc = {
            "command": self.command,
            "exit_status": status,
            "error": error,
            "config": self.cfg.raw,
            "seed": self.cfg.seed,
            "derived_seeds": self.cfg.derived_seeds(),
            "seed_derivation": "sha256('<seed>:<label>...')[:8] as big-endian u64",
            "input": self.fingerprint,
            "files": [f for f in self.files if (self.out / f).exists()],
            "duration_s": round(time.perf_counter() - self.started, 3),
            **self.extra,
        }
        (self.out / "manifest.json").write_text(json.dumps(doc, indent=2, default=str) + "\n")


def cmd_synth(run: Run, args) -> int:
    if run.cfg.synth is None:
        raise ConfigError("synth command needs a data.synth block", key="data.synth")
    table = synth_table(run.cfg)
    run.fingerprint = table_fingerprint(table)
    write_csv(table, run.path("dataset.csv"))
    run.extra["truncated_cycles"] = table.metadata.get("truncated_cycles", [])
    return EXIT_OK


def cmd_train(run: Run, args) -> int:
    cfg = run.cfg
    spec = cfg.model(args.model)
    table = load_table(cfg)
    run.fingerprint = table_fingerprint(table)
    from .dataset import split

    series = build_series(cfg, table)
    train, test = split(series, cfg.split_spec())
    seed = cfg.derived_seeds()["train"]
    result = fit_and_score(spec, train, test, seed=seed, zero_policy=cfg.evaluation.zero_policy)
    stem = _slug(spec.name)
    with run.path(f"model_{stem}.json").open("w", encoding="utf-8") as fh:
        json.dump(fit_to_json(result, seed), fh)
    trace = getattr(result.predictor, "trace", None)
    if trace is not None:
        reports.write_trace_csv(trace, run.path(f"trace_{stem}.csv"))
    pre = result.preprocessor
    tr = train.subset(pre.train_keep)
    train_pred = pre.inverse_target(result.predictor.predict(pre.transform(tr)))
    run.extra["train_metrics"] = asdict(bundle(tr.y, train_pred, cfg.evaluation.zero_policy))
    run.extra["test_metrics"] = asdict(result.bundle)
    return EXIT_OK


def cmd_compare(run: Run, args) -> int:
    cfg = run.cfg
    if not cfg.models:
        raise ConfigError("compare needs at least one model in 'models'", key="models")
    table = load_table(cfg)
    run.fingerprint = table_fingerprint(table)
    from .dataset import split

    train, test = split(build_series(cfg, table), cfg.split_spec())
    report = compare_models(cfg.models, train, test, seed=cfg.derived_seeds()["compare"],
                            zero_policy=cfg.evaluation.zero_policy)
    reports.write_metrics_csv(report, run.path("metrics.csv"))
    reports.write_text(reports.metrics_markdown(report, "Model comparison", run.timestamp), run.path("report.md"))
    if all(r.failed for r in report.rows):
        raise CommandError("every model failed; see report.md", EXIT_ALL_FAILED)
    return EXIT_OK


def cmd_cv(run: Run, args) -> int:
    cfg = run.cfg
    spec = cfg.model(args.model)
    K = cfg.evaluation.k if args.k is None else args.k
    if K < 2:
        raise ConfigError(f"K must be >= 2, got {K}", key="evaluation.k")
    table = load_table(cfg)
    run.fingerprint = table_fingerprint(table)
    series = build_series(cfg, table)
    if K > len(series):
        raise ConfigError(f"K={K} exceeds the {len(series)} available windows", key="evaluation.k")
    report = cross_validate(spec, series, K, seed=cfg.derived_seeds()["cv"], zero_policy=cfg.evaluation.zero_policy)
    reports.write_cv_csv(report, run.path("cv_report.csv"))
    reports.write_text(reports.cv_markdown(report, f"{K}-fold cross-validation: {spec.name}", run.timestamp),
                       run.path("cv_report.md"))
    return EXIT_OK


def cmd_stages(run: Run, args) -> int:
    cfg = run.cfg
    plan = cfg.evaluation.stages
    if plan is None:
        raise ConfigError("stages command needs an evaluation.stages block", key="evaluation.stages")
    table = load_table(cfg)
    run.fingerprint = table_fingerprint(table)
    series = build_series(cfg, table)
    report = run_stages(plan, series, cfg.split_spec(), seed=cfg.seed, zero_policy=cfg.evaluation.zero_policy)
    reports.write_metrics_csv(report, run.path("stages_report.csv"))
    reports.write_text(reports.metrics_markdown(report, "LSTM optimization stages", run.timestamp),
                       run.path("stages_report.md"))
    run.extra["stage_details"] = {r.name: r.details for r in report.rows}
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "compare": cmd_compare,
    "cv": cmd_cv,
    "stages": cmd_stages,
}


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name).strip("_").lower() or "model"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voltforecast", description="Battery charging-voltage forecasting")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, default=None, help="global seed override (u64)")
        p.add_argument("--no-timestamp", action="store_true", help="omit timestamps from Markdown reports")
        if name in ("train", "cv"):
            p.add_argument("--model", required=True, help="model name from the config's models list")
        if name == "cv":
            p.add_argument("--k", type=int, default=None, help="fold count (overrides evaluation.k)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run = None
    try:
        cfg = load_config(args.config).with_overrides(args.seed, args.out)
        run = Run(args.command, cfg, timestamp=not args.no_timestamp)
        code = COMMANDS[args.command](run, args)
        run.manifest(code)
        return code
    except CommandError as exc:
        return _fail(run, exc.code, str(exc))
    except DivergenceError as exc:
        return _fail(run, EXIT_DIVERGED, f"diverged at epoch {exc.epoch}: {exc}")
    except ConfigError as exc:
        key = f" [{exc.key}]" if exc.key else ""
        return _fail(run, EXIT_CONFIG, f"config error{key}: {exc}")
    except (VoltForecastError, OSError) as exc:
        return _fail(run, EXIT_CONFIG, f"{type(exc).__name__}: {exc}")


def _fail(run: Optional[Run], code: int, message: str) -> int:
    print(f"voltforecast: {message}".replace("\n", " "), file=sys.stderr)
    if run is not None:
        run.manifest(code, message)
    return code


if __name__ == "__main__":
    sys.exit(main())
