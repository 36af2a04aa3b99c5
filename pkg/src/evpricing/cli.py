"""``evpricing`` command line: ingest, forecast, train and compare."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataio, evaluation, evdemand, forecast
from .agents import training
from .config import RunConfig, load_config
from .errors import ConfigError, DataError, EvPricingError, MissingModel
from .evdemand import CommuteDistribution
from .pricing import ScenarioConfig, World, run_scenario, tou_schedule, world_from_hourly
from .seeding import derive_seed

log = logging.getLogger("evpricing")

EXIT_OK, EXIT_DATA, EXIT_MODEL, EXIT_CONFIG = 0, 2, 3, 4
TRAIN_STRATEGIES = ("PV", "PVB")


# -- shared plumbing ------------------------------------------------------------

def _out(cfg: RunConfig) -> Path:
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _ingest_records(cfg: RunConfig, synthetic: int | None = None) -> list[dataio.HourlyRecord]:
    if synthetic is not None:
        raw = dataio.synth_tetouan_like(synthetic, derive_seed(cfg.seed, "feeder"))
    elif cfg.dataset is not None:
        cfg.check_paths()
        raw = dataio.read_raw_csv(cfg.dataset)
    else:
        raw = dataio.synth_tetouan_like(cfg.synthetic_days, derive_seed(cfg.seed, "feeder"))
    return dataio.downsample_hourly(raw)


def _hourly(cfg: RunConfig) -> list[dataio.HourlyRecord]:
    """Hourly records from a previous ``ingest`` in the output dir, else ingested afresh."""
    path = Path(cfg.out) / "hourly.csv"
    if path.is_file():
        return dataio.read_hourly_csv(path)
    return _ingest_records(cfg)


def _commute(cfg: RunConfig) -> CommuteDistribution:
    base = evdemand.default_commute()
    res = base.rho_res if cfg.rho_res is None else np.asarray(cfg.rho_res, dtype=float)
    com = base.rho_com if cfg.rho_com is None else np.asarray(cfg.rho_com, dtype=float)
    try:
        return CommuteDistribution(res, com)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _world(cfg: RunConfig) -> World:
    return world_from_hourly(_hourly(cfg), cfg.seed, capacities=cfg.capacities, dist=_commute(cfg),
                             params_res=cfg.demand_res, params_com=cfg.demand_com)


def _writer(path: Path):
    fh = path.open("w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


# -- commands -------------------------------------------------------------------

def cmd_ingest(cfg: RunConfig, synthetic: int | None = None) -> dict:
    records = _ingest_records(cfg, synthetic)
    out = _out(cfg)
    dataio.write_hourly_csv(records, out / "hourly.csv")
    fh, w = _writer(out / "pcc.csv")
    with fh:
        w.writerow(("feature", "pcc"))
        for name, r in dataio.pcc_report(records).items():
            w.writerow((name, repr(float(r))))
    log.info("ingested %d hourly records", len(records))
    return {"records": len(records)}


def cmd_forecast(cfg: RunConfig, algos: tuple[str, ...] = forecast.ALGORITHMS) -> dict:
    out = _out(cfg)
    models = out / "models"
    models.mkdir(exist_ok=True)
    records = _hourly(cfg)
    n_train = len(records) - int(round(cfg.forecast.split_fraction * len(records)))
    # Scale weather with training rows only; the held-out tail reuses those parameters.
    _, _, scaler = dataio.engineer_features(records[:n_train])
    feats, power, _ = dataio.engineer_features(records, scaler)
    compact = dataio.numeric_features(records, scaler)
    results = []
    for algo in algos:
        X = compact if algo == "poly" else feats
        grid = cfg.forecast.grids.get(algo)
        if grid is None:
            raise ConfigError(f"no grid configured for {algo}")
        res = forecast.grid_search(algo, grid, X.values, power, cfg.forecast.split_fraction,
                                   seed=derive_seed(cfg.seed, f"forecast:{algo}"))
        results.append(res)
        best = res.best
        forecast.dump_model(res.best_model, models / f"load_{algo}.json", best.params, scaler, X.columns)
        log.info("%s best %s r2=%.4f", algo, best.params, best.metrics.r2)
    forecast.write_metrics_csv(results, out / "metrics.csv")
    summary = {r.algorithm: r.best.metrics.r2 for r in results}
    if "poly" in algos:
        summary.update(_ev_forecast(cfg, models, out))
    return summary


def _ev_forecast(cfg: RunConfig, models: Path, out: Path) -> dict:
    s = cfg.forecast
    rng = np.random.default_rng(derive_seed(cfg.seed, "ev_prices"))
    prices = evdemand.random_price_days(s.ev_days, tou_schedule(), rng, cfg.price_scale)
    ds = evdemand.synth_ev_dataset(s.ev_days, prices, _commute(cfg), cfg.demand_res, cfg.demand_com,
                                   derive_seed(cfg.seed, "ev_demand"))
    ds.to_csv(out / "ev_dataset.csv")
    tr, va = evdemand.split_by_day(ds, s.ev_train_fraction)
    fh, w = _writer(out / "ev_metrics.csv")
    summary = {}
    with fh:
        w.writerow(("area", "degree", "rmse", "r2"))
        for area in ("res", "com"):
            model = forecast.fit_poly(tr.features(area), tr.target(area), s.ev_degree)
            m = forecast.metrics(va.target(area), model.predict(va.features(area)))
            forecast.dump_model(model, models / f"ev_poly_{area}.json", {"degree": s.ev_degree},
                                columns=list(evdemand.EV_FEATURES))
            w.writerow((area, s.ev_degree, repr(m.rmse), repr(m.r2)))
            summary[f"ev_{area}"] = m.r2
    return summary


def _agents_path(out: Path, algo: str, strategy: str) -> Path:
    return out / "agents" / f"{algo.lower()}_{strategy.lower()}.json"


def cmd_train(cfg: RunConfig, algos: tuple[str, ...], strategies: tuple[str, ...] = TRAIN_STRATEGIES,
              episodes: int | None = None, resume: bool = False) -> dict:
    out = _out(cfg)
    for sub in ("agents", "traces", "checkpoints"):
        (out / sub).mkdir(exist_ok=True)
    world = _world(cfg)
    n_ep = episodes or cfg.training.episodes
    summary = {}
    for strategy in strategies:
        for algo in algos:
            agent_cfg = cfg.agent_config(algo)
            overrides = {"weights": cfg.weights} if strategy == "PVB" else {}
            env = world.env(strategy, tuple(cfg.training.levels), price_scale=cfg.price_scale, **overrides)
            tag = f"{algo.lower()}_{strategy.lower()}"
            ckpt = out / "checkpoints" / f"{tag}.pkl"
            if resume and not ckpt.is_file():
                raise MissingModel(f"no checkpoint to resume at {ckpt}")
            result = training.train(
                env, (agent_cfg, agent_cfg), n_ep, seed=derive_seed(cfg.seed, f"train:{strategy}"),
                checkpoint=ckpt, checkpoint_every=cfg.training.checkpoint_every,
                resume=ckpt if resume else None,
            )
            result.write_trace(out / "traces" / f"train_{tag}.csv")
            training.save_agents(result.agents, _agents_path(out, algo, strategy),
                                 {"strategy": strategy, "episodes": n_ep, "seed": cfg.seed,
                                  "levels": list(cfg.training.levels)})
            summary[tag] = result.window_mean(0.1)
            log.info("%s final-window reward %.3f", tag, summary[tag])
    return summary


def cmd_compare(cfg: RunConfig, algo: str | None = None) -> dict:
    out = _out(cfg)
    cdir = out / "compare"
    cdir.mkdir(exist_ok=True)
    world = _world(cfg)
    algo = (algo or cfg.training.algorithm).lower()

    agents = {}
    for strategy in cfg.scenarios:
        if strategy != "TOU":
            agents[strategy] = training.load_agents(_agents_path(out, algo, strategy),
                                                    seed=derive_seed(cfg.seed, "load"))

    def scenario(strategy: str, level: float):
        sc = ScenarioConfig(strategy, weights=cfg.weights, penetration=level, price_scale=cfg.price_scale,
                            calibration=cfg.calibration)
        return run_scenario(sc, agents.get(strategy), world, seed=derive_seed(cfg.seed, "scenario"))

    results = {s: scenario(s, cfg.compare_level) for s in cfg.scenarios}
    caps = cfg.capacities
    curves, summary = {}, {}
    fh, w = _writer(cdir / "gap_report.csv")
    with fh:
        w.writerow(("scenario", "gap", "std_res", "std_com", "mean_res", "mean_com", "ev_fraction_res",
                    "ev_fraction_com"))
        for s, r in results.items():
            r.write_csv(cdir / f"scenario_{s.lower()}.csv")
            gap = evaluation.utilization_gap(r.total("res"), caps[0], r.total("com"), caps[1])
            st = [evaluation.load_stats(r.total(n), caps[k]) for k, n in enumerate(("res", "com"))]
            w.writerow((s, repr(gap), repr(st[0].std), repr(st[1].std), repr(st[0].mean), repr(st[1].mean),
                        repr(r.ev_fraction("res")), repr(r.ev_fraction("com"))))
            summary[s] = {"gap": gap, "std": [st[0].std, st[1].std]}
            for net in ("res", "com"):
                curves[(s, net)] = evaluation.kde(r.total(net))

    evaluation.write_kde_csv(curves, cdir / "kde.csv")
    fh, w = _writer(cdir / "profile.csv")
    with fh:
        w.writerow(("scenario", "network", "hour", "mean_total_kwh"))
        for s, r in results.items():
            for net in ("res", "com"):
                for h, v in enumerate(evaluation.hourly_profile(r.traces[net]["total_kwh"])):
                    w.writerow((s, net, h, repr(float(v))))

    if "PVB" in cfg.scenarios:
        rows = evaluation.penetration_sweep(cfg.levels, lambda lvl: scenario("PVB", lvl))
        evaluation.write_sweep_csv(rows, cdir / "sweep.csv")
        summary["sweep"] = [(r.level, r.network, r.stats.std, r.stats.mean) for r in rows]
    return summary


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evpricing", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run-config JSON file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", type=Path, help="override the output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="downsample the feeder data to hourly records")
    s.add_argument("--synthetic", type=int, metavar="DAYS", help="generate DAYS synthetic days instead")

    s = sub.add_parser("forecast", parents=[common], help="grid-search the load regressors")
    s.add_argument("--algo", choices=("gbt", "poly", "mlp", "all"), default="all")

    s = sub.add_parser("train", parents=[common], help="train the pricing agents")
    s.add_argument("--algo", choices=("ddpg", "sac", "ppo", "all"))
    s.add_argument("--strategy", choices=("pv", "pvb", "both"), default="both")
    s.add_argument("--episodes", type=int)
    s.add_argument("--resume", action="store_true", help="continue from the saved checkpoint")

    s = sub.add_parser("compare", parents=[common], help="run the ToU/PV/PVB scenarios and the sweep")
    s.add_argument("--algo", choices=("ddpg", "sac", "ppo"))
    return p


def _config(args) -> RunConfig:
    if args.config is not None:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
    elif args.seed is not None:
        cfg = RunConfig(seed=args.seed)
    else:
        raise ConfigError("a seed is required: pass --config with a seed or --seed")
    if args.out is not None:
        cfg = replace(cfg, out=str(args.out))
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        if args.command == "ingest":
            if args.synthetic is not None and args.synthetic < 1:
                raise ConfigError("--synthetic needs a positive day count")
            cmd_ingest(cfg, args.synthetic)
        elif args.command == "forecast":
            cmd_forecast(cfg, forecast.ALGORITHMS if args.algo == "all" else (args.algo,))
        elif args.command == "train":
            algo = args.algo or cfg.training.algorithm.lower()
            algos = ("DDPG", "SAC", "PPO") if algo == "all" else (algo.upper(),)
            strategies = TRAIN_STRATEGIES if args.strategy == "both" else (args.strategy.upper(),)
            if args.episodes is not None and args.episodes < 1:
                raise ConfigError("--episodes must be positive")
            cmd_train(cfg, algos, strategies, args.episodes, args.resume)
        else:
            cmd_compare(cfg, args.algo)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingModel as exc:
        print(f"missing model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EvPricingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())


__all__ = ["RunConfig", "build_parser", "cmd_compare", "cmd_forecast", "cmd_ingest",
           "cmd_train", "main", "run"]
