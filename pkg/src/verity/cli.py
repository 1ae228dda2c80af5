"""Command-line entry point.

Subcommands: build-kg, detect, evaluate, sequential-run, replay. Backend
selection: live (chat-completion HTTP endpoint, API key from VERITY_API_KEY),
replay (recorded transcript), or oracle (rule-based fact table).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .dataset import load_dataset, split_subsets
from .errors import VerityError
from .gateway import (Gateway, HttpChatBackend, RecordingBackend,
                      ReplayBackend)
from .kg_builder import SourceDocument, build_graph
from .kg_store import KnowledgeGraph
from .mcts import EngineConfig
from .metrics import compute_metrics, format_metrics
from .oracle import FactTable, RuleBasedOracle
from .run import format_cells, run_detection, run_sequential
from .verdict import Verdict

API_KEY_ENV = "VERITY_API_KEY"

CONFIG_KEYS = ("model", "base_url", "temperature", "timeout", "seed",
               "n", "height", "branch", "alpha", "topk",
               "max_retries", "max_in_flight", "min_interval")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    unknown = set(config) - set(CONFIG_KEYS)
    if unknown:
        raise VerityError(f"unknown config keys: {sorted(unknown)}")
    return config


def _engine_config(args, config: dict) -> EngineConfig:
    def pick(flag, key, default):
        value = getattr(args, flag, None)
        return value if value is not None else config.get(key, default)

    return EngineConfig(
        n=int(pick("n", "n", 5)),
        h=int(pick("height", "height", 5)),
        b=int(pick("branch", "branch", 2)),
        alpha=float(pick("alpha", "alpha", 2.0)),
        top_k=int(pick("topk", "topk", 5)),
        seed=int(pick("seed", "seed", 0)),
    )


def _build_backend(args, config: dict):
    backend_name = getattr(args, "backend", None) or "live"
    if backend_name == "oracle":
        if not getattr(args, "facts", None):
            raise VerityError("--facts is required with the oracle backend")
        backend = RuleBasedOracle(FactTable.from_path(args.facts))
    elif backend_name == "replay":
        if not getattr(args, "transcript", None):
            raise VerityError("--transcript is required with the replay backend")
        backend = ReplayBackend.from_path(args.transcript)
    else:
        backend = HttpChatBackend(
            base_url=config.get("base_url", "https://api.openai.com"),
            model=config.get("model", "gpt-4o-mini"),
            api_key=os.environ.get(API_KEY_ENV, ""),
            timeout=float(config.get("timeout", 60.0)),
        )
    if getattr(args, "record", None):
        backend = RecordingBackend(backend, args.record)
    return Gateway(backend,
                   max_retries=int(config.get("max_retries", 3)),
                   max_in_flight=int(config.get("max_in_flight", 4)),
                   min_interval=float(config.get("min_interval", 0.0)))


def _load_corpus(path: str) -> list[SourceDocument]:
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            record = json.loads(line)
            docs.append(SourceDocument(id=str(record["id"]),
                                       body=record["body"],
                                       trusted=bool(record.get("trusted", True))))
    return docs


def _add_backend_args(sub):
    sub.add_argument("--backend", choices=("live", "replay", "oracle"),
                     default="live")
    sub.add_argument("--facts", help="fact table JSON for the oracle backend")
    sub.add_argument("--transcript", help="transcript file for the replay backend")
    sub.add_argument("--record", help="record all requests to this transcript file")
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--seed", type=int)


def _add_engine_args(sub):
    sub.add_argument("--n", type=int, help="search iterations per claim")
    sub.add_argument("--height", type=int, help="tree height limit")
    sub.add_argument("--branch", type=int, help="children per expansion")
    sub.add_argument("--alpha", type=float, help="exploration constant")
    sub.add_argument("--topk", type=int, help="retrieval cutoff")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="verity",
                                     description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("build-kg", help="build a knowledge graph from a corpus")
    p.add_argument("--corpus", required=True, help="JSONL corpus: id, body, trusted")
    p.add_argument("--out", required=True, help="output KG file")
    p.add_argument("--report", help="build report JSON (default: <out>.report.json)")
    _add_backend_args(p)

    p = commands.add_parser("detect", help="run detection over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", choices=("native", "hover", "feverous"),
                   default="native")
    p.add_argument("--kg", required=True, help="knowledge graph file")
    p.add_argument("--updates", choices=("on", "off"), default="on")
    p.add_argument("--out", help="run record output (JSONL)")
    p.add_argument("--kg-out", help="write the updated graph here")
    p.add_argument("--metrics-out", help="metrics JSON output")
    _add_backend_args(p)
    _add_engine_args(p)

    p = commands.add_parser("evaluate", help="metrics for a saved run record")
    p.add_argument("--run", required=True, help="run record JSONL from detect")

    p = commands.add_parser("sequential-run",
                            help="subset-by-subset carry-over evaluation")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", choices=("native", "hover", "feverous"),
                   default="native")
    p.add_argument("--subsets", type=int, default=3)
    p.add_argument("--updates", choices=("on", "off"), default="on")
    p.add_argument("--out", help="machine-readable cell table (JSON)")
    _add_backend_args(p)
    _add_engine_args(p)

    p = commands.add_parser("replay", help="detect with a recorded transcript")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", choices=("native", "hover", "feverous"),
                   default="native")
    p.add_argument("--kg", required=True)
    p.add_argument("--updates", choices=("on", "off"), default="on")
    p.add_argument("--transcript", required=True)
    p.add_argument("--out")
    p.add_argument("--kg-out")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    _add_engine_args(p)

    return parser


def _cmd_build_kg(args) -> int:
    config = _load_config(args.config)
    gateway = _build_backend(args, config)
    corpus = _load_corpus(args.corpus)
    graph, report = build_graph(corpus, gateway)
    graph.save(args.out)
    report.save(args.report or args.out + ".report.json")
    print(f"built graph with {len(graph)} triples from "
          f"{report.docs_processed} documents "
          f"({len(report.docs_failed)} failed)")
    return 0


def _cmd_detect(args) -> int:
    config = _load_config(args.config)
    gateway = _build_backend(args, config)
    engine_config = _engine_config(args, config)
    report = load_dataset(args.dataset, args.format)
    if report.dropped:
        print(f"dropped {report.dropped} items with non-sentence evidence",
              file=sys.stderr)
    graph = KnowledgeGraph.load(args.kg)
    record, metrics, out_graph = run_detection(
        report.items, graph, engine_config, gateway,
        updates=args.updates == "on")
    if args.out:
        record.save(args.out)
    if args.kg_out:
        out_graph.save(args.kg_out)
    print(f"run digest: {record.digest()}")
    if record.exclusions:
        print(f"excluded {record.exclusions} claims due to detection errors")
    if metrics:
        print(format_metrics(metrics,
                             population=len(record.results) - record.exclusions))
        if args.metrics_out:
            with open(args.metrics_out, "w", encoding="utf-8") as fh:
                json.dump(metrics.as_dict(), fh, indent=2)
    return 0


def _cmd_evaluate(args) -> int:
    predictions, golds = [], []
    with open(args.run, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if record.get("error") or record.get("gold") is None:
                continue
            predictions.append(Verdict(record["verdict"]))
            golds.append(Verdict(record["gold"]))
    if not predictions:
        print("no scoreable records in run file", file=sys.stderr)
        return 1
    print(format_metrics(compute_metrics(predictions, golds),
                         population=len(predictions)))
    return 0


def _cmd_sequential(args) -> int:
    config = _load_config(args.config)
    gateway = _build_backend(args, config)
    engine_config = _engine_config(args, config)
    report = load_dataset(args.dataset, args.format)
    split = split_subsets(report.items, args.subsets, seed=engine_config.seed)
    base_graph, _ = build_graph(split.corpora[0], gateway)
    cells = run_sequential(split.subsets, base_graph, engine_config, gateway,
                           updates=args.updates == "on")
    print(format_cells(cells))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump([{"setting": c.setting, "accuracy": c.accuracy,
                        "population": c.population} for c in cells], fh,
                      indent=2)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "replay":
        args.backend = "replay"
        args.facts = None
        args.record = None
        args.metrics_out = None
    handler = {
        "build-kg": _cmd_build_kg,
        "detect": _cmd_detect,
        "evaluate": _cmd_evaluate,
        "sequential-run": _cmd_sequential,
        "replay": _cmd_detect,
    }[args.command]
    try:
        return handler(args)
    except VerityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
