"""``deeptrend`` command-line entry point.

Subcommands::

    deeptrend generate SPEC.ini OUT.csv [--seed S]
    deeptrend detrend IN.csv STATION OUT_PREFIX [--weeks D]
    deeptrend train    --config EXP.ini [--seed S] [--jobs J] [--out DIR]
    deeptrend evaluate --config EXP.ini [--seed S] [--out DIR]
    deeptrend compare  --config EXP.ini [--seed S] [--jobs J] [--out DIR]

Every written file starts with a ``# seed=... config_sha256=...`` line (the
checkpoint format carries it on its ``provenance`` line). On failure the
process exits with status 1 and prints one line ``error: <Type>: <message>``
to stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ConfigError, ExperimentConfig, read_config, read_synthetic_spec
from .dataio import FlowTable, generate_synthetic, load_csv, save_csv
from .detrend import compute_residual, compute_trend, impute_missing, write_series_csv
from .evaluation import (
    format_summary,
    normalized_cdfs,
    summary_table,
    write_cdf_csv,
    write_metrics_csv,
    write_summary_csv,
)
from .experiment import build_model, fit_model, predict_test, prepare_station, score, station_seed
from .models import DISPLAY_NAMES

log = logging.getLogger("deeptrend")


def _checkpoint_path(out: Path, station: str, kind: str) -> Path:
    return out / "checkpoints" / station / f"{kind}.ckpt"


def _history_path(out: Path, station: str, kind: str) -> Path:
    return out / "histories" / station / f"{kind}.csv"


def _write_history(path: Path, history, header: str) -> None:
    if isinstance(history, dict):
        rows = [(phase, k + 1, loss) for phase, losses in history.items() for k, loss in enumerate(losses)]
    else:
        rows = [("train", k + 1, loss) for k, loss in enumerate(history)]
    with open(path, "w", newline="") as fh:
        fh.write(f"# {header}\n")
        w = csv.writer(fh)
        w.writerow(["phase", "epoch", "loss"])
        for phase, epoch, loss in rows:
            w.writerow([phase, epoch, repr(float(loss))])


def _train_job(cfg: ExperimentConfig, table: FlowTable, index: int, station: str, kind: str) -> str:
    data = prepare_station(table, station, cfg.window, cfg.train_weeks, cfg.max_missing)
    model = build_model(kind, cfg.model_params.get(kind), station_seed(cfg.seed, index))
    fit_model(model, data)
    out = cfg.output_dir
    ckpt = _checkpoint_path(out, station, kind)
    hist = _history_path(out, station, kind)
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    hist.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, ckpt, cfg.provenance)
    _write_history(hist, model.history_, cfg.provenance)
    log.info("trained %s/%s", station, kind)
    return str(ckpt)


def run_train(cfg: ExperimentConfig, jobs: int = 1) -> list[str]:
    table = cfg.load_table()
    stations = cfg.station_list(table)
    tasks = [
        (cfg, table, table.stations.index(st), st, kind) for st in stations for kind in cfg.models
    ]
    if jobs <= 1:
        return [_train_job(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_train_job, *t) for t in tasks]
        return [f.result() for f in futures]


def run_evaluate(cfg: ExperimentConfig) -> dict:
    table = cfg.load_table()
    out = cfg.output_dir
    reports = []
    for station in cfg.station_list(table):
        data = prepare_station(table, station, cfg.window, cfg.train_weeks, cfg.max_missing)
        for kind in cfg.models:
            path = _checkpoint_path(out, station, kind)
            if not path.exists():
                raise FileNotFoundError(f"checkpoint {str(path)!r} missing; run train first")
            reports.append(score(kind, data, predict_test(load_checkpoint(path), data)))
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(out / "metrics.csv", reports, cfg.provenance)
    if len(cfg.models) >= 2:
        for metric in ("mse", "mae"):
            for kind, table_ in normalized_cdfs(reports, metric).items():
                write_cdf_csv(out / f"cdf_{metric}_{kind}.csv", table_, cfg.provenance)
    else:
        log.warning("one model only; skipping normalized CDF tables")
    summary = summary_table(reports, list(cfg.models))
    names = [DISPLAY_NAMES[k] for k in cfg.models]
    shown = {m: {DISPLAY_NAMES[k]: v for k, v in row.items()} for m, row in summary.items()}
    write_summary_csv(out / "summary.csv", shown, names, cfg.provenance)
    return {"reports": reports, "summary": shown, "names": names}


def _digest(settings: dict) -> str:
    return hashlib.sha256(json.dumps(settings, sort_keys=True).encode()).hexdigest()[:16]


def _experiment(args) -> ExperimentConfig:
    return read_config(args.config).with_overrides(seed=args.seed, output=args.out)


def cmd_generate(args) -> None:
    spec = read_synthetic_spec(args.spec, args.seed)
    header = f"seed={spec.seed} config_sha256={_digest(dataclasses.asdict(spec))}"
    save_csv(generate_synthetic(spec), args.output, header)


def cmd_detrend(args) -> None:
    src = Path(args.input)
    table = load_csv(src)
    if args.station not in table.stations:
        raise ConfigError(f"station {args.station!r} not in {src}; have {list(table.stations)}")
    series = impute_missing(table.series(args.station), args.max_missing)
    trend = compute_trend(series, args.weeks)
    resid = compute_residual(series, trend)
    settings = {
        "input_sha256": hashlib.sha256(src.read_bytes()).hexdigest(),
        "station": args.station,
        "weeks": trend.weeks,
        "max_missing": args.max_missing,
    }
    header = f"seed=none config_sha256={_digest(settings)} station={args.station} weeks={trend.weeks}"
    trend.to_csv(f"{args.prefix}_trend.csv", header)
    write_series_csv(f"{args.prefix}_residual.csv", "residual", resid.values, header=header)


def cmd_train(args) -> None:
    run_train(_experiment(args), args.jobs)


def cmd_evaluate(args) -> None:
    result = run_evaluate(_experiment(args))
    print(format_summary(result["summary"], result["names"]))


def cmd_compare(args) -> None:
    cfg = _experiment(args)
    run_train(cfg, args.jobs)
    result = run_evaluate(cfg)
    print(format_summary(result["summary"], result["names"]))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"error: UsageError: {message} (see {self.prog} --help)\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="deeptrend", description="Trend-aware traffic flow forecasting.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic flow table")
    p.add_argument("spec", help="INI file with a [synthetic] section")
    p.add_argument("output", help="CSV file to write")
    p.add_argument("--seed", type=int, help="override the generator seed")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detrend", help="weekly trend and residual of one station")
    p.add_argument("input", help="flow CSV")
    p.add_argument("station")
    p.add_argument("prefix", help="writes PREFIX_trend.csv and PREFIX_residual.csv")
    p.add_argument("--weeks", type=int, help="average the last D complete weeks (default all)")
    p.add_argument("--max-missing", type=float, default=0.01)
    p.set_defaults(func=cmd_detrend)

    for name, func, text in (
        ("train", cmd_train, "train every configured model on every station"),
        ("evaluate", cmd_evaluate, "score saved checkpoints on the test weeks"),
        ("compare", cmd_compare, "train, evaluate and print the summary table"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="experiment INI file")
        p.add_argument("--seed", type=int, help="override [experiment] seed")
        p.add_argument("--out", help="override [experiment] output directory")
        if name != "evaluate":
            p.add_argument("--jobs", type=int, default=1, help="parallel station x model jobs")
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - reported as a single line
        message = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
