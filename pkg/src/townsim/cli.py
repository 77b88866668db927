"""Command-line interface: ``townsim run | analyze | sweep``."""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
import warnings
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from . import __version__
from .config import ConfigError, ScenarioConfig, parse_config, serialize
from .network import InvalidParameter, read_edge_list, write_edge_list
from .output import (MalformedInput, RunManifest, read_timeseries, write_aic, write_ccf,
                     write_csv, write_dose_log, write_outside, write_proportions,
                     write_summary, write_timeseries)
from .runner import build_network, run_replicates, run_scenario
from .stats import DegenerateSeries, InvalidDof, SingularDesign, hub_analysis
from .travel import OutsideCity, outside_trajectory
from .vaccination import DoseLog

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_ANALYSIS = 0, 2, 3, 4

log = logging.getLogger("townsim")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def preset_names() -> list[str]:
    files = resources.files("townsim").joinpath("presets").iterdir()
    return sorted(p.name[:-4] for p in files if p.name.endswith(".cfg"))


def load_preset(name: str) -> str:
    path = resources.files("townsim").joinpath("presets", f"{name}.cfg")
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(preset_names())}")
    return path.read_text()


def resolve_config(args) -> ScenarioConfig:
    cfg = ScenarioConfig()
    if getattr(args, "preset", None):
        cfg = parse_config(load_preset(args.preset), cfg)
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        cfg = parse_config(text, cfg)
    overrides = {}
    seed = args.seed
    if seed is None and os.environ.get("TOWNSIM_SEED"):
        try:
            seed = int(os.environ["TOWNSIM_SEED"])
        except ValueError:
            raise ConfigError("TOWNSIM_SEED must be an integer") from None
    if seed is not None:
        overrides["rng_seed"] = seed
    if getattr(args, "replicates", None) is not None:
        overrides["replicates"] = args.replicates
    if getattr(args, "doses", None) is not None:
        overrides["max_doses"] = args.doses
    if getattr(args, "immunity", None) is not None:
        overrides["immunity_mode"] = args.immunity
    return cfg.replace(**overrides) if overrides else cfg


def _simulate(cfg: ScenarioConfig, out: Path, args, manifest: RunManifest) -> None:
    outputs = manifest.outputs
    if args.network_file:
        net = read_edge_list(args.network_file, n=cfg.n)
    else:
        net = build_network(cfg)
    if args.export_network:
        outputs.append(str(write_edge_list_path(net, out / "network.edges")))
    if args.dump_outside:
        traj = outside_trajectory(OutsideCity.from_config(cfg), cfg.days)
        outputs.append(str(write_outside(traj, out / "outside.csv")))

    if cfg.replicates == 1:
        dose_log = DoseLog() if args.log_doses else None
        ts = run_scenario(cfg, network=net, dose_log=dose_log)
        outputs.append(str(write_timeseries(ts, out / "timeseries.csv")))
        outputs.append(str(write_proportions(ts, out / "proportions.csv")))
        if dose_log is not None:
            outputs.append(str(write_dose_log(dose_log, out / "doses.csv")))
        manifest.seeds = [cfg.rng_seed]
        return

    rs = run_replicates(cfg, network=net, jobs=args.jobs)
    width = max(3, len(str(cfg.replicates - 1)))
    for r, ts in enumerate(rs.runs):
        outputs.append(str(write_timeseries(ts, out / f"timeseries_{r:0{width}d}.csv")))
    outputs.append(str(write_summary(rs.summary, out / "summary.csv")))
    if args.log_doses:
        # dose logs are per replicate; rerun replicate 0 with logging enabled
        dose_log = DoseLog()
        run_scenario(cfg, network=net, dose_log=dose_log)
        outputs.append(str(write_dose_log(dose_log, out / "doses.csv")))
    manifest.seeds = rs.seeds


def write_edge_list_path(net, path: Path) -> Path:
    write_edge_list(net, path)
    return path


def cmd_run(args) -> int:
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command="run", config_hash=cfg.digest(), seeds=[cfg.rng_seed],
                           started=_now(), version=__version__)
    (out / "config.cfg").write_text(serialize(cfg))
    manifest.outputs.append(str(out / "config.cfg"))
    code = EXIT_OK
    try:
        _simulate(cfg, out, args, manifest)
        manifest.status = "ok"
    except (ValueError, RuntimeError, OSError) as exc:
        manifest.status, manifest.message = "error", str(exc)
        print(f"runtime error: {exc}", file=sys.stderr)
        code = EXIT_RUNTIME
    finally:
        manifest.finished = _now()
        manifest.write(out / "manifest.json")
    return code


def granger_report(analysis, source: str, max_lag: int) -> str:
    g, c = analysis.granger, analysis.ccf
    verdict = "significant at 0.05" if g.significant(0.05) else "not significant at 0.05"
    lines = [
        f"source: {source}",
        f"days analysed: {analysis.days.size} (dropped {analysis.n_dropped} infection-free days)",
        f"max lag searched: {max_lag}",
        f"aic chosen lag: {g.p}",
        f"lead time: {g.lead}",
        f"F statistic: {g.f_statistic!r}",
        f"degrees of freedom: {g.df_num}, {g.df_den}",
        f"p-value: {g.p_value!r}",
        f"verdict: {verdict}",
        f"ccf best negative lag: {c.best_negative_lag}",
        f"ccf best rho: {c.best_rho!r}",
    ]
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    out = Path(args.out)
    try:
        ts = read_timeseries(args.timeseries)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            analysis = hub_analysis(ts.infected, ts.hub_degree, max_lag=args.max_lag,
                                    ccf_window=args.ccf_window)
    except OSError as exc:
        print(f"analysis input error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except (MalformedInput, DegenerateSeries, SingularDesign, InvalidDof, ValueError) as exc:
        print(f"analysis input error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    out.mkdir(parents=True, exist_ok=True)
    write_ccf(analysis.ccf, out / "ccf.csv")
    write_aic(analysis.granger.aic_by_lag, out / "aic.csv")
    write_csv(out / "hub_vs_infected.csv", ("day", "k_I", "I"),
              zip(ts["day"], ts.hub_degree, ts.infected))
    (out / "granger.txt").write_text(granger_report(analysis, Path(args.timeseries).name,
                                                    args.max_lag))
    g = analysis.granger
    print(f"lag {g.lead}, p = {g.p_value:.3g}, "
          f"{'significant' if g.significant() else 'not significant'} at 0.05")
    return EXIT_OK


def _parse_param(item: str):
    key, sep, values = item.partition("=")
    if not sep or not values:
        raise ConfigError(f"--param expects key=v1,v2,..., got {item!r}")
    return key.strip(), [v.strip() for v in values.split(",") if v.strip()]


def cmd_sweep(args) -> int:
    try:
        base = resolve_config(args)
        params = [_parse_param(p) for p in args.param]
        combos = []
        for values in itertools.product(*(v for _, v in params)):
            text = "".join(f"{k} = {v}\n" for (k, _), v in zip(params, values))
            combos.append((dict(zip((k for k, _ in params), values)), parse_config(text, base)))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command="sweep", config_hash=base.digest(), seeds=[],
                           started=_now(), version=__version__)
    rows = []
    code = EXIT_OK
    try:
        for i, (values, cfg) in enumerate(combos):
            sub = out / f"run_{i:03d}"
            sub.mkdir(exist_ok=True)
            (sub / "config.cfg").write_text(serialize(cfg))
            rs = run_replicates(cfg, network=build_network(cfg), jobs=args.jobs)
            for r, ts in enumerate(rs.runs):
                manifest.outputs.append(str(write_timeseries(ts, sub / f"timeseries_{r:03d}.csv")))
            manifest.outputs.append(str(write_summary(rs.summary, sub / "summary.csv")))
            manifest.seeds.extend(rs.seeds)
            mean = rs.summary["I_mean"]
            rows.append([i] + list(values.values()) + [cfg.digest()[:12], float(mean.max()),
                                                       int(mean.argmax())])
        header = ["run"] + [k for k, _ in params] + ["config_hash", "peak_I_mean", "peak_day"]
        with open(out / "sweep.csv", "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
        manifest.outputs.append(str(out / "sweep.csv"))
        manifest.status = "ok"
    except (ValueError, RuntimeError, OSError) as exc:
        manifest.status, manifest.message = "error", str(exc)
        print(f"runtime error: {exc}", file=sys.stderr)
        code = EXIT_RUNTIME
    finally:
        manifest.finished = _now()
        manifest.write(out / "manifest.json")
    return code


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value scenario file")
    p.add_argument("--preset", help="shipped scenario preset, applied before --config")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, help="RNG seed (fallback: $TOWNSIM_SEED)")
    p.add_argument("--replicates", type=int)
    p.add_argument("--doses", type=int, choices=range(4), help="maximum doses per person")
    p.add_argument("--immunity", choices=("homogeneous", "rulebased"))
    p.add_argument("--jobs", type=int, default=1, help="worker processes for replicates")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="townsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario")
    _add_config_flags(run)
    run.add_argument("--export-network", action="store_true",
                     help="write the contact network as network.edges")
    run.add_argument("--network-file", help="use this edge list instead of generating one")
    run.add_argument("--log-doses", action="store_true", help="write per-dose events to doses.csv")
    run.add_argument("--dump-outside", action="store_true",
                     help="write the outside-city trajectory to outside.csv")
    run.set_defaults(func=cmd_run)

    an = sub.add_parser("analyze", help="lead-lag analysis of a timeseries.csv")
    an.add_argument("timeseries")
    an.add_argument("--out", default="analysis")
    an.add_argument("--max-lag", type=int, default=60, help="largest VAR lag tried by AIC")
    an.add_argument("--ccf-window", type=int, default=60, help="largest |lag| for the CCF")
    an.set_defaults(func=cmd_analyze)

    sw = sub.add_parser("sweep", help="run every combination of parameter values")
    _add_config_flags(sw)
    sw.add_argument("--param", action="append", default=[], metavar="KEY=V1,V2",
                    help="parameter values to sweep (repeatable)")
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
