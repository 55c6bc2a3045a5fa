"""Command line interface.

Exit codes: 0 success, 1 configuration or usage error, 2 data error.
The log level comes from ``ORIENT_SELECT_LOG`` (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from .errors import ConfigError, DataError, OrientSelectError, PipelineError
from .geo import LocalProjection
from .ingest import load_map
from .netgraph import build_graph, route_between
from .pipeline import _route_lonlat, dump_json, load_config, run_pipeline

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _lonlat(text: str) -> tuple[float, float]:
    try:
        lon, lat = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lon,lat, got {text!r}") from None
    return lon, lat


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="orient-select", description="Select and rank orientation information along a route.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the full pipeline")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--output", type=Path, help="output directory (overrides the config)")

    route = sub.add_parser("route", help="compute a route only and print it as GeoJSON")
    route.add_argument("--from", dest="start", required=True, type=_lonlat, metavar="LON,LAT")
    route.add_argument("--to", dest="end", required=True, type=_lonlat, metavar="LON,LAT")
    src = route.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help=".osm or network .json file")
    src.add_argument("--config", type=Path, help="take the data file from this config")

    score = sub.add_parser("score", help="print the ranked candidates of one context")
    score.add_argument("--config", required=True, type=Path)
    score.add_argument("--context", required=True)
    score.add_argument("--top", type=int, default=10)

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", required=True, type=Path)
    return p


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    res = run_pipeline(cfg, output_dir=args.output)
    out = args.output or cfg.output_dir
    print(f"wrote {len(res.contexts)} context(s) to {out}")
    return EXIT_OK


def _cmd_route(args) -> int:
    data = load_config(args.config).data if args.config else args.data
    mapdata = load_map(data)
    proj = LocalProjection((args.start[0] + args.end[0]) / 2, (args.start[1] + args.end[1]) / 2)
    graph = build_graph(mapdata.ways, proj)
    route = route_between(graph, args.start, args.end)
    doc = {
        "type": "Feature",
        "geometry": {"type": "LineString", "coordinates": [list(p) for p in _route_lonlat(route, graph)]},
        "properties": {
            "start": route.s,
            "destination": route.t,
            "length_m": round(route.length, 3),
            "edges": [e.id for e in route.edges],
        },
    }
    sys.stdout.write(dump_json(doc))
    return EXIT_OK


def _cmd_score(args) -> int:
    if args.top < 1:
        raise ConfigError("--top must be >= 1")
    cfg = load_config(args.config)
    res = run_pipeline(cfg, only=[args.context], write=False)
    ranked = res.contexts[args.context].ranked[: args.top]
    cols = ("rank", "id", "category", "type", "S_f", "B", "S_c", "R", "U_c", "D_f", "O", "name")
    print("\t".join(cols))
    for i, (c, br) in enumerate(ranked, start=1):
        row = (
            i, c.id, c.category, c.feature_type, f"{br.total:.4f}", br.buffer, f"{br.category:.2f}",
            f"{br.relation:.1f}", f"{br.uniqueness:.3f}", f"{br.distance:.3f}", f"{br.direction:.1f}", c.name or "",
        )
        print("\t".join(str(v) for v in row))
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    if not cfg.data.exists():
        raise ConfigError(f"data file {cfg.data} does not exist")
    for p in (cfg.tag_rules, cfg.route_file):
        if p is not None and not p.exists():
            raise ConfigError(f"{p} does not exist")
    if cfg.tag_rules is not None:
        from .ingest import load_tag_rules

        load_tag_rules(cfg.tag_rules)
    print(f"{args.config}: ok ({len(cfg.contexts)} context(s), {len(cfg.scales)} scale(s))")
    return EXIT_OK


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, PipelineError):
        exc = exc.cause
    return EXIT_CONFIG if isinstance(exc, ConfigError) else EXIT_DATA


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("ORIENT_SELECT_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "route": _cmd_route, "score": _cmd_score, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except (OrientSelectError, OSError, ValueError) as exc:
        print(f"orient-select: {exc}", file=sys.stderr)
        return _exit_code(exc)


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
