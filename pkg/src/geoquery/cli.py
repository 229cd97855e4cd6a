"""Command-line driver for ingestion, proxy construction, alignment scoring,
querying, evaluation, serving, and synthetic-world generation.

Exit codes: 0 success, 1 usage error, 2 data error, 3 provider error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .alignment import PromptCandidate, make_pair_sample, rank_prompts
from .corpus import (
    DescribeOracle,
    describe_and_embed,
    key_from_text,
    load_proxy,
    sample_proxy,
    save_proxy,
)
from .embedding import ProviderConfig
from .engine import Engine
from .errors import (
    ConfigError,
    GeoQueryError,
    InputError,
    ProviderUnavailable,
)
from .eval import format_report, load_queries, run_ablation
from .geo import GridSpec, Season, TileId, TileKey
from .index import Index, IndexParams
from .search import PRESETS, query_result_to_dict, resolve_config, similar_by_tile
from .service import ServiceConfig, serve
from .synth import generate_world, write_world

USAGE_ERROR, DATA_ERROR, PROVIDER_ERROR = 1, 2, 3


def _provider_from_args(args) -> ProviderConfig:
    if getattr(args, "provider_url", None):
        return ProviderConfig(kind="remote", dim=args.dim,
                              endpoint_url=args.provider_url)
    return ProviderConfig(kind="synthetic", dim=args.dim, seed=args.seed)


def _index_params(args) -> IndexParams:
    if getattr(args, "backend", "exact") == "pruned":
        return IndexParams("pruned_clusters", args.n_clusters, args.n_probe)
    return IndexParams("exact")


def _add_provider_flags(p: argparse.ArgumentParser):
    p.add_argument("--dim", type=int, default=64, help="embedding dimension (default 64)")
    p.add_argument("--seed", type=int, default=0, help="synthetic provider seed (default 0)")
    p.add_argument("--provider-url", default=None,
                   help="remote embedding endpoint; omit for the synthetic provider")


def cmd_ingest(args) -> int:
    index = corpus_mod.ingest_visual(args.manifest, _index_params(args))
    index.save(args.out)
    print(json.dumps({"count": len(index), "dim": index.dim,
                      "backend": index.params.backend, "out": args.out}))
    return 0


def cmd_sample_proxy(args) -> int:
    index = Index.load(args.index)
    keys = index.keys()
    sampled = sample_proxy(keys, args.n, args.seed)
    with open(args.out, "w", encoding="utf-8") as f:
        for k in sampled:
            f.write(corpus_mod.key_to_text(k) + "\n")
    print(json.dumps({"sampled": len(sampled), "out": args.out}))
    return 0


def cmd_describe(args) -> int:
    with open(args.keys, "r", encoding="utf-8") as f:
        keys = [key_from_text(line.strip()) for line in f if line.strip()]
    if args.fixtures:
        oracle = DescribeOracle(kind="fixture", fixture_path=args.fixtures)
    else:
        oracle = DescribeOracle(kind="remote", endpoint_url=args.oracle_url)
    provider = _provider_from_args(args)
    records, errors = describe_and_embed(keys, oracle, provider)
    save_proxy(args.out, records, provider=provider.kind)
    print(json.dumps({
        "described": len(records),
        "failed": [corpus_mod.key_to_text(k) for k, _ in errors],
        "out": args.out,
    }))
    return 0


def cmd_align(args) -> int:
    with open(args.candidates, "r", encoding="utf-8") as f:
        raw = json.load(f)
    candidates = [PromptCandidate(c["id"], c["prompt_text"]) for c in raw["candidates"]]
    visual_index = Index.load(args.index)
    with open(args.keys, "r", encoding="utf-8") as f:
        keys = [key_from_text(line.strip()) for line in f if line.strip()]
    visual_vecs = []
    for k in keys:
        v = visual_index.get_vector(k)
        if v is None:
            raise InputError(f"key {k} missing from visual index")
        visual_vecs.append(v)
    provider = _provider_from_args(args)
    sample = make_pair_sample(len(keys), seed=args.seed)
    fixtures_dir = Path(args.fixtures)

    def oracle_for(cand: PromptCandidate) -> DescribeOracle:
        return DescribeOracle(kind="fixture",
                              fixture_path=str(fixtures_dir / f"{cand.id}.json"))

    ranking, failures = rank_prompts(candidates, keys, oracle_for, provider,
                                     visual_vecs, sample)
    print(json.dumps({
        "ranking": [{"id": cid, "rho": s.rho, "n_pairs": s.n_pairs}
                    for cid, s in ranking],
        "failed": {cid: str(err) for cid, err in failures.items()},
    }, indent=1))
    return 0


def _load_engine(args) -> Engine:
    return Engine.load(args.index, args.proxy, grid=GridSpec(args.tile_size),
                       provider=_provider_from_args(args))


def _add_engine_flags(p: argparse.ArgumentParser):
    p.add_argument("--index", required=True, help="visual index file (GQIX)")
    p.add_argument("--proxy", required=True, help="proxy corpus file (NDJSON)")
    p.add_argument("--tile-size", type=float, default=0.046, dest="tile_size",
                   help="grid cell size in degrees (default 0.046)")
    _add_provider_flags(p)


def cmd_query(args) -> int:
    engine = _load_engine(args)
    config = resolve_config(args.config)
    season = Season(args.season) if args.season else None
    result = engine.query(args.text, config, season=season)
    print(json.dumps(query_result_to_dict(result, grid=engine.grid), indent=1))
    return 0


def cmd_similar(args) -> int:
    engine = _load_engine(args)
    key = TileKey(TileId(args.col, args.row), Season(args.season))
    neighbours = similar_by_tile(key, args.k, engine.visual_index)
    print(json.dumps([
        {"col": nb.key.tile.col, "row": nb.key.tile.row,
         "season": nb.key.season.value, "score": nb.score}
        for nb in neighbours
    ], indent=1))
    return 0


def cmd_eval(args) -> int:
    engine = _load_engine(args)
    queries = load_queries(args.queries)
    if args.configs == "all":
        configs = list(PRESETS.values())
    else:
        configs = [resolve_config(n) for n in args.configs.split(",")]
    report = run_ablation(queries, configs, engine.query, engine.grid,
                          top_n=args.top_n)
    text = format_report(report, style=args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_serve(args) -> int:
    if args.config_file:
        cfg = ServiceConfig.from_file(args.config_file)
    else:
        cfg = ServiceConfig(
            listen_addr=args.listen,
            visual_index_path=args.index,
            proxy_path=args.proxy,
            grid=GridSpec(args.tile_size),
            provider=_provider_from_args(args),
        ).with_env_overrides()
    serve(cfg)
    return 0


def cmd_synth_world(args) -> int:
    world = generate_world(args.tiles, args.dim, args.clusters, args.seed,
                           proxy_fraction=args.proxy_fraction)
    paths = write_world(world, args.out, n_queries=args.queries, seed=args.seed)
    print(json.dumps(paths, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoquery",
                                     description="Two-stage cross-modal geospatial retrieval")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a visual index from an NDJSON manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=["exact", "pruned"], default="exact")
    p.add_argument("--n-clusters", type=int, default=None)
    p.add_argument("--n-probe", type=int, default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("sample-proxy", help="sample tile keys for the proxy subset")
    p.add_argument("--index", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample_proxy)

    p = sub.add_parser("describe", help="describe sampled tiles and embed the texts")
    p.add_argument("--keys", required=True, help="file of col:row:season lines")
    p.add_argument("--fixtures", default=None, help="fixture JSON of key -> description")
    p.add_argument("--oracle-url", default=None, help="remote describe endpoint")
    p.add_argument("--out", required=True)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("align", help="rank prompt candidates by the alignment objective")
    p.add_argument("--candidates", required=True, help="JSON file of prompt candidates")
    p.add_argument("--fixtures", required=True, help="directory of <id>.json fixtures")
    p.add_argument("--index", required=True, help="visual index file")
    p.add_argument("--keys", required=True, help="file of col:row:season lines")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("query", help="run a two-stage natural-language query")
    p.add_argument("--text", required=True)
    p.add_argument("--config", default="balanced_large")
    p.add_argument("--season", default=None)
    _add_engine_flags(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("similar", help="visual neighbours of a stored tile")
    p.add_argument("--col", type=int, required=True)
    p.add_argument("--row", type=int, required=True)
    p.add_argument("--season", default="Q1")
    p.add_argument("--k", type=int, default=10)
    _add_engine_flags(p)
    p.set_defaults(func=cmd_similar)

    p = sub.add_parser("eval", help="run the geolocation evaluation ablation")
    p.add_argument("--queries", required=True)
    p.add_argument("--configs", default="all", help='"all" or comma-separated names')
    p.add_argument("--top-n", type=int, default=10, dest="top_n")
    p.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")
    p.add_argument("--out", default=None)
    _add_engine_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="serve the HTTP API over loaded corpora")
    p.add_argument("--config-file", default=None, help="service config JSON")
    p.add_argument("--listen", default="127.0.0.1:8000")
    p.add_argument("--index", default=None)
    p.add_argument("--proxy", default=None)
    p.add_argument("--tile-size", type=float, default=0.046, dest="tile_size")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth-world", help="generate the planted-cluster test world")
    p.add_argument("--tiles", type=int, default=10_000)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--clusters", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--queries", type=int, default=50)
    p.add_argument("--proxy-fraction", type=float, default=0.1, dest="proxy_fraction")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_world)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (InputError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except ProviderUnavailable as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return PROVIDER_ERROR
    except (GeoQueryError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
