"""Command-line entry point: generate / summarize / cluster / simulate / bench.

Every subcommand takes an optional JSON config file plus flag overrides
(flags win), rejects unknown config keys, and echoes its fully resolved
config next to the output so any run can be reproduced exactly from the
echo alone. Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import fdsm
from .clustering import dbscan, kmeans
from .datamodel import EMBEDDED, RAW, PopulationModel, PopulationSpec, ValidationError
from .embedder import make_embedder
from .report import render_report, save_figures
from .simulate import SimConfig, default_profiles, run_simulation, selection_coverage
from .summary import CONDITIONAL, ENCODER, LABEL, conditional_summary, encoder_summary, label_summary
from .util import ordered_map


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse must not sys.exit(2) on bad flags
        raise ConfigError(message)


POPULATION_SCHEMA = {
    "clients": 100,
    "classes": 10,
    "feature_dim": 64,
    "samples_mean": 109.0,
    "samples_std": 211.63,
    "samples_max": 6709,
    "groups": 5,
    "alpha": 0.1,
    "seed": 0,
}


def population_spec(cfg: dict) -> PopulationSpec:
    return PopulationSpec(
        num_clients=cfg["clients"],
        num_classes=cfg["classes"],
        feature_dim=cfg["feature_dim"],
        samples_mean=cfg["samples_mean"],
        samples_std=cfg["samples_std"],
        samples_max=cfg["samples_max"],
        group_count=cfg["groups"],
        dirichlet_alpha=cfg["alpha"],
        seed=cfg["seed"],
    )


def _resolve(args, schema: dict, nested: dict | None = None) -> dict:
    """Defaults <- config file <- explicit flags; unknown keys rejected."""
    cfg = {k: (dict(v) if isinstance(v, dict) else v) for k, v in schema.items()}
    if nested:
        for name, sub in nested.items():
            cfg[name] = dict(sub)
    if args.config:
        with open(args.config) as f:
            file_cfg = json.load(f)
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in file_cfg.items():
            if nested and key in nested:
                unknown = set(value) - set(nested[key])
                if unknown:
                    raise ConfigError(f"unknown config key {key}.{sorted(unknown)[0]!r}")
                cfg[key].update(value)
            elif key in schema:
                cfg[key] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
    for key in schema:
        if nested and key in nested:
            continue
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            cfg[key] = value
    if nested:
        for name, sub in nested.items():
            for key in sub:
                value = getattr(args, f"{name}_{key}", None)
                if value is not None:
                    cfg[name][key] = value
    return cfg


def _require(cfg: dict, key: str) -> None:
    if cfg.get(key) is None:
        raise ConfigError(f"missing required option {key!r}")


def _echo_config(cfg: dict, out: Path, name: str) -> None:
    path = out / f"{name}.config.json" if out.is_dir() else out.with_suffix(out.suffix + ".config.json")
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------------ generate

def cmd_generate(args) -> int:
    schema = dict(POPULATION_SCHEMA, out=None)
    cfg = _resolve(args, schema)
    _require(cfg, "out")
    spec = population_spec(cfg)
    spec.validate()
    model = PopulationModel(spec)

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    ground_truth = {}
    for i in range(spec.num_clients):
        ds = model.draw_client(i)
        fdsm.write_dataset(out / f"{ds.client_id}.fdsm", ds)
        ground_truth[ds.client_id] = model.group_of(i)
    (out / "ground_truth.json").write_text(
        json.dumps(ground_truth, indent=2, sort_keys=True) + "\n"
    )
    _echo_config(cfg, out, "generate")
    print(f"wrote {spec.num_clients} client datasets to {out}", file=sys.stderr)
    return 0


# ----------------------------------------------------------------- summarize

def cmd_summarize(args) -> int:
    schema = {
        "in": None, "out": None, "method": ENCODER, "coreset_k": 128,
        "embedder": "randproj", "embed_dim": 64, "embed_seed": 0,
        "bins": 8, "lo": 0.0, "hi": 1.0, "seed": 0, "input_kind": RAW,
    }
    cfg = _resolve(args, schema)
    _require(cfg, "in")
    _require(cfg, "out")
    if cfg["method"] not in (ENCODER, LABEL, CONDITIONAL):
        raise ConfigError(f"unknown summary method {cfg['method']!r}")
    if cfg["input_kind"] not in (RAW, EMBEDDED):
        raise ConfigError(f"unknown input kind {cfg['input_kind']!r}")

    src = Path(cfg["in"])
    paths = sorted(src.glob("*.fdsm")) if src.is_dir() else [src]
    if not paths:
        raise ValidationError(f"no .fdsm files under {src}")

    def summarize_one(item):
        idx, path = item
        ds = fdsm.read_dataset(path, kind=cfg["input_kind"])
        if cfg["method"] == LABEL:
            return label_summary(ds)
        if cfg["method"] == CONDITIONAL:
            return conditional_summary(ds, cfg["bins"], cfg["lo"], cfg["hi"])
        if ds.kind == EMBEDDED:
            provider = make_embedder("identity", ds.feature_dim)
        else:
            provider = make_embedder(
                cfg["embedder"], ds.feature_dim, cfg["embed_dim"], seed=cfg["embed_seed"]
            )
        coreset_seed = int(np.random.SeedSequence([cfg["seed"], idx]).generate_state(1)[0])
        return encoder_summary(ds, cfg["coreset_k"], provider, seed=coreset_seed)

    summaries = ordered_map(summarize_one, enumerate(paths), args.threads)
    out = Path(cfg["out"])
    fdsm.write_summaries(out, summaries)
    _echo_config(cfg, out, "summarize")
    print(f"wrote {len(summaries)} {cfg['method']} summaries to {out}", file=sys.stderr)
    return 0


# ------------------------------------------------------------------- cluster

def cmd_cluster(args) -> int:
    schema = {
        "in": None, "out": None, "method": "kmeans", "k": 5, "eps": 0.5,
        "min_pts": 5, "seed": 0, "max_iters": 100, "n_init": 10,
    }
    cfg = _resolve(args, schema)
    _require(cfg, "in")
    _require(cfg, "out")

    summaries = fdsm.read_summaries(cfg["in"])
    if not summaries:
        raise ValidationError(f"no summary records in {cfg['in']}")
    client_ids = [s.client_id for s in summaries]
    vectors = np.stack([
        s.values if hasattr(s, "values") else s.flatten() for s in summaries
    ])

    if cfg["method"] == "kmeans":
        model = kmeans(
            vectors, cfg["k"], max_iters=cfg["max_iters"],
            seed=cfg["seed"], n_init=cfg["n_init"],
        )
    elif cfg["method"] == "dbscan":
        model = dbscan(vectors, cfg["eps"], cfg["min_pts"])
    else:
        raise ConfigError(f"unknown clustering method {cfg['method']!r}")

    result = {
        "method": model.method,
        "assignments": {cid: int(lab) for cid, lab in zip(client_ids, model.labels)},
        "objective": model.objective,
        "iterations": model.iterations,
        "num_clusters": model.num_clusters(),
    }
    out = Path(cfg["out"])
    out.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    _echo_config(cfg, out, "cluster")
    print(f"clustered {len(client_ids)} clients into {result['num_clusters']} clusters", file=sys.stderr)
    return 0


# ------------------------------------------------------------------ simulate

SIM_SCHEMA = {
    "rounds": 50,
    "clients_per_round": 10,
    "resummarize_every": 1,
    "drift_round": None,
    "drift_fraction": 0.0,
    "policy": "cluster-roundrobin",
    "cluster_k": None,
    "coreset_k": 64,
    "embedder": "randproj",
    "embed_dim": 32,
    "seed": 0,
    "out": None,
    "coverage": False,
}


def cmd_simulate(args) -> int:
    cfg = _resolve(args, dict(SIM_SCHEMA), nested={"population": POPULATION_SCHEMA})
    _require(cfg, "out")
    spec = population_spec(cfg["population"])
    model = PopulationModel(spec)
    sim_cfg = SimConfig(
        rounds=cfg["rounds"],
        clients_per_round=cfg["clients_per_round"],
        resummarize_every=cfg["resummarize_every"],
        drift_round=cfg["drift_round"],
        drift_fraction=cfg["drift_fraction"],
        policy=cfg["policy"],
        cluster_k=cfg["cluster_k"],
        coreset_k=cfg["coreset_k"],
        embedder=cfg["embedder"],
        embed_dim=cfg["embed_dim"],
        seed=cfg["seed"],
    )
    profiles = default_profiles(model)
    logs = run_simulation(model, profiles, sim_cfg, threads=args.threads)

    out = Path(cfg["out"])
    with open(out, "w") as f:
        for log in logs:
            f.write(json.dumps(dataclasses.asdict(log), sort_keys=True) + "\n")
    _echo_config(cfg, out, "simulate")

    if cfg["coverage"]:
        group_of = {model.client_id(i): model.group_of(i) for i in range(spec.num_clients)}
        table = selection_coverage(logs, group_of)
        print(json.dumps({str(g): f for g, f in table.items()}, indent=2))
    print(f"simulated {len(logs)} rounds -> {out}", file=sys.stderr)
    return 0


# --------------------------------------------------------------------- bench

BENCH_SCHEMA = {
    "coreset_k": 128,
    "embed_dim": 64,
    "embedder": "randproj",
    "bins": 8,
    "lo": 0.0,
    "hi": 1.0,
    "cluster_k": None,
    "eps": 0.5,
    "min_pts": 5,
    "summary_budget": 60.0,
    "clustering_budget": 60.0,
    "kmeans_restarts": 1,
    "baseline_kmeans": False,
    "weighted_variant": False,
    "seed": 0,
    "out": None,
    "figures": True,
}


def cmd_bench(args) -> int:
    cfg = _resolve(args, dict(BENCH_SCHEMA), nested={"population": POPULATION_SCHEMA})
    _require(cfg, "out")
    spec = population_spec(cfg["population"])
    bench_cfg = bench_mod.BenchConfig(
        coreset_k=cfg["coreset_k"],
        embed_dim=cfg["embed_dim"],
        embedder=cfg["embedder"],
        bins=cfg["bins"],
        lo=cfg["lo"],
        hi=cfg["hi"],
        cluster_k=cfg["cluster_k"],
        eps=cfg["eps"],
        min_pts=cfg["min_pts"],
        summary_budget=cfg["summary_budget"],
        clustering_budget=cfg["clustering_budget"],
        kmeans_restarts=cfg["kmeans_restarts"],
        baseline_kmeans=cfg["baseline_kmeans"],
        weighted_variant=cfg["weighted_variant"],
        seed=cfg["seed"],
    )
    report = bench_mod.run_bench(spec, bench_cfg, threads=args.threads)

    out = Path(cfg["out"])
    out.write_text(render_report(report, "csv"))
    _echo_config(cfg, out, "bench")
    print(render_report(report, "table"), file=sys.stderr)
    if cfg["figures"]:
        for path in save_figures(report, out.parent):
            print(f"figure: {path}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------- main

def build_parser() -> _Parser:
    parser = _Parser(prog="fedsummary", description=__doc__)
    parser.add_argument("--threads", type=int, default=1, help="worker thread cap")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--seed", type=int)

    def add_population_flags(p, prefix=""):
        p.add_argument("--clients", type=int, dest=f"{prefix}clients")
        p.add_argument("--classes", type=int, dest=f"{prefix}classes")
        p.add_argument("--feature-dim", type=int, dest=f"{prefix}feature_dim")
        p.add_argument("--samples-mean", type=float, dest=f"{prefix}samples_mean")
        p.add_argument("--samples-std", type=float, dest=f"{prefix}samples_std")
        p.add_argument("--samples-max", type=int, dest=f"{prefix}samples_max")
        p.add_argument("--groups", type=int, dest=f"{prefix}groups")
        p.add_argument("--alpha", type=float, dest=f"{prefix}alpha")

    p = sub.add_parser("generate", help="generate a synthetic client population")
    add_common(p)
    add_population_flags(p)
    p.add_argument("--out", "-o", help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("summarize", help="compute per-client distribution summaries")
    add_common(p)
    p.add_argument("--in", dest="in", help="dataset file or directory of .fdsm files")
    p.add_argument("--out", "-o", help="output summaries file")
    p.add_argument("--method", choices=[ENCODER, LABEL, CONDITIONAL])
    p.add_argument("--coreset-k", type=int, dest="coreset_k")
    p.add_argument("--embedder", choices=["identity", "randproj", "precomputed"])
    p.add_argument("--embed-dim", type=int, dest="embed_dim")
    p.add_argument("--embed-seed", type=int, dest="embed_seed")
    p.add_argument("--bins", type=int)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--input-kind", choices=[RAW, EMBEDDED], dest="input_kind")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("cluster", help="cluster client summaries")
    add_common(p)
    p.add_argument("--in", dest="in", help="summaries .fdsm file")
    p.add_argument("--out", "-o", help="output clusters JSON")
    p.add_argument("--method", choices=["kmeans", "dbscan"])
    p.add_argument("--k", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--min-pts", type=int, dest="min_pts")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--n-init", type=int, dest="n_init")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("simulate", help="run the client-selection simulator")
    add_common(p)
    add_population_flags(p, "population_")
    p.add_argument("--out", "-o", help="output round log (JSON lines)")
    p.add_argument("--rounds", type=int)
    p.add_argument("--clients-per-round", type=int, dest="clients_per_round")
    p.add_argument("--resummarize-every", type=int, dest="resummarize_every")
    p.add_argument("--drift-round", type=int, dest="drift_round")
    p.add_argument("--drift-fraction", type=float, dest="drift_fraction")
    p.add_argument("--cluster-k", type=int, dest="cluster_k")
    p.add_argument("--coreset-k", type=int, dest="coreset_k")
    p.add_argument("--embedder", choices=["identity", "randproj"])
    p.add_argument("--embed-dim", type=int, dest="embed_dim")
    p.add_argument("--coverage", action="store_const", const=True,
                   help="print the per-group selection-frequency table")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="benchmark summary and clustering overhead")
    add_common(p)
    add_population_flags(p, "population_")
    p.add_argument("--out", "-o", help="output CSV report")
    p.add_argument("--coreset-k", type=int, dest="coreset_k")
    p.add_argument("--embed-dim", type=int, dest="embed_dim")
    p.add_argument("--embedder", choices=["identity", "randproj"])
    p.add_argument("--bins", type=int)
    p.add_argument("--cluster-k", type=int, dest="cluster_k")
    p.add_argument("--eps", type=float)
    p.add_argument("--min-pts", type=int, dest="min_pts")
    p.add_argument("--summary-budget", type=float, dest="summary_budget")
    p.add_argument("--clustering-budget", type=float, dest="clustering_budget")
    p.add_argument("--kmeans-restarts", type=int, dest="kmeans_restarts")
    p.add_argument("--baseline-kmeans", action="store_const", const=True, dest="baseline_kmeans")
    p.add_argument("--weighted-variant", action="store_const", const=True, dest="weighted_variant")
    p.add_argument("--no-figures", action="store_const", const=False, dest="figures")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (ConfigError, ValidationError, fdsm.FormatError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
