"""Command-line entry point.

Subcommands: ``simulate`` (write a scenario's world, map, and logs),
``build-textmap`` (learn tag regions from a training log), ``localize``
(one filter run over a log), ``benchmark`` (sweep a configuration matrix
into CSV + plot data). Every command is deterministic given an explicit
seed. Flags override config-file values, which override defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import evaluate
from .config import Config, load_config, parse_value
from .gridmap import load_map, save_map
from .seqlog import load_seqlog, save_seqlog
from .simulator import (
    SCENARIO_KINDS,
    generate_scenario,
    world_summary,
)
from .strategies import load_seed_file
from .textmap import load_textmap


def _build_config(args) -> Config:
    cfg = Config()
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "particles", None) is not None:
        overrides["particles"] = args.particles
    if getattr(args, "strategy", None) is not None:
        overrides["strategy"] = args.strategy
    if getattr(args, "set", None):
        for item in args.set:
            if "=" not in item:
                raise ValueError(f"--set expects key=value, got {item!r}")
            key, _, raw = item.partition("=")
            overrides[key.strip()] = parse_value(key.strip(), raw)
    return dataclasses.replace(cfg, **overrides)


def cmd_simulate(args) -> int:
    cfg = _build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bundle = generate_scenario(args.kind, cfg.seed)
    with open(out / "world.json", "w", encoding="utf-8") as fh:
        json.dump(world_summary(bundle.world, bundle.config), fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    save_map(bundle.base_map, out / "map.gridmap")
    save_seqlog(bundle.training_log, out / "training.seqlog")
    save_seqlog(bundle.eval_log, out / "eval.seqlog")
    print(f"wrote world.json, map.gridmap, training.seqlog, eval.seqlog to {out}")
    return 0


def cmd_build_textmap(args) -> int:
    cfg = _build_config(args)
    log = load_seqlog(args.training_log)
    grid = load_map(args.map)
    tmap = evaluate.build_textmap_from_log(
        log, grid, tau=cfg.tau, cell_size=cfg.cell_size
    )
    tmap.save(args.out)
    print(f"wrote {len(tmap.regions)} tag regions to {args.out}")
    return 0


def cmd_localize(args) -> int:
    cfg = _build_config(args)
    log = load_seqlog(args.log)
    grid = load_map(args.map)
    tmap = load_textmap(args.textmap) if args.textmap else None
    seeds = load_seed_file(args.seeds) if args.seeds else None
    if cfg.strategy == "seed_locations" and seeds is None:
        raise ValueError("strategy seed_locations requires --seeds FILE")
    strategy = cfg.strategy_config(seeds)
    result = evaluate.run(
        log,
        grid,
        tmap,
        strategy,
        cfg.filter_params(),
        cfg.seed,
        scenario_id=Path(args.log).stem,
    )
    if args.trajectory:
        with open(args.trajectory, "w", encoding="utf-8") as fh:
            for t, x, y, theta in result.estimates:
                fh.write(f"{t!r} EST {x!r} {y!r} {theta!r}\n")
    r = result.report
    print(evaluate.CSV_HEADER)
    print(r.csv_row())
    if r.degeneracy_events:
        print(f"# degeneracy events: {r.degeneracy_events}", file=sys.stderr)
    return 0


def _parse_matrix(path) -> dict:
    """Benchmark matrix: flat key = value lines with whitespace-separated
    lists (scenarios, methods, particles, seeds)."""
    spec = {
        "scenarios": ["corridor_closed"],
        "methods": ["none", "inject_first"],
        "particles": [300],
        "seeds": [0],
    }
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = values'")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            values = raw.split()
            if key not in spec:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            if not values:
                raise ValueError(f"{path}:{lineno}: no values for {key!r}")
            try:
                if key in ("particles", "seeds"):
                    spec[key] = [int(v) for v in values]
                else:
                    spec[key] = values
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    for kind in spec["scenarios"]:
        if kind not in SCENARIO_KINDS:
            raise ValueError(f"{path}: unknown scenario {kind!r}")
    return spec


def cmd_benchmark(args) -> int:
    cfg = _build_config(args)
    spec = _parse_matrix(args.matrix)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = evaluate.sweep(
        spec["scenarios"],
        spec["methods"],
        spec["particles"],
        spec["seeds"],
        params=cfg.filter_params(),
        csv_path=out / "report.csv",
        plot_path=out / "report.dat",
        progress=not args.quiet,
    )
    print(f"wrote {len(reports)} runs to {out / 'report.csv'} and {out / 'report.dat'}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textmcl",
        description="Monte Carlo localization with text-cue particle injection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--particles", type=int, help="particle count")
        p.add_argument("--strategy", help="text-cue strategy mode")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config key")

    p = sub.add_parser("simulate", help="generate a synthetic scenario")
    p.add_argument("kind", choices=SCENARIO_KINDS)
    p.add_argument("--out", required=True, help="output directory")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("build-textmap", help="learn tag regions from a training log")
    p.add_argument("training_log")
    p.add_argument("map")
    p.add_argument("--out", required=True, help="output .textmap file")
    common(p)
    p.set_defaults(func=cmd_build_textmap)

    p = sub.add_parser("localize", help="run the filter over a log")
    p.add_argument("log")
    p.add_argument("map")
    p.add_argument("--textmap", help=".textmap file (required by text strategies)")
    p.add_argument("--seeds", help="seed-location file for strategy seed_locations")
    p.add_argument("--trajectory", help="write per-correction estimates here")
    common(p)
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("benchmark", help="sweep a configuration matrix")
    p.add_argument("matrix", help="matrix file: scenarios/methods/particles/seeds")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--quiet", action="store_true")
    common(p)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
