"""Detection runs: per-claim search, online knowledge updates, and the
sequential carry-over protocol where the graph updated on earlier subsets
assists later ones."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Optional

from .dataset import NewsItem
from .errors import GatewayHardError
from .gateway import Gateway
from .kg_store import KnowledgeGraph
from .knowledge_update import apply_update, extract_new_knowledge
from .mcts import EngineConfig, SearchEngine, paths_digest
from .metrics import MetricsReport, compute_metrics
from .verdict import Verdict

log = logging.getLogger(__name__)


@dataclass
class ClaimResult:
    id: str
    verdict: Optional[Verdict] = None
    gold: Optional[Verdict] = None
    error: Optional[str] = None
    paths_digest: str = ""
    triples_added: list[dict] = field(default_factory=list)
    duplicates: int = 0

    def as_record(self) -> dict:
        return {
            "id": self.id,
            "verdict": self.verdict.value if self.verdict else None,
            "gold": self.gold.value if self.gold else None,
            "error": self.error,
            "paths_digest": self.paths_digest,
            "triples_added": self.triples_added,
            "duplicates": self.duplicates,
        }


@dataclass
class RunRecord:
    results: list[ClaimResult] = field(default_factory=list)
    config_digest: str = ""
    kg_before: str = ""
    kg_after: str = ""
    exclusions: int = 0

    def digest(self) -> str:
        payload = json.dumps({
            "results": [r.as_record() for r in self.results],
            "config": self.config_digest,
            "kg_before": self.kg_before,
            "kg_after": self.kg_after,
        }, ensure_ascii=False, sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for result in self.results:
                fh.write(json.dumps(result.as_record(), ensure_ascii=False)
                         + "\n")


def _graph_digest(graph: KnowledgeGraph) -> str:
    payload = "\n".join(graph.content_digest_lines())
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _config_digest(config: EngineConfig, updates: bool) -> str:
    payload = json.dumps({"n": config.n, "h": config.h, "b": config.b,
                          "alpha": config.alpha, "top_k": config.top_k,
                          "seed": config.seed, "updates": updates},
                         sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def run_detection(items: list[NewsItem], graph: KnowledgeGraph,
                  config: EngineConfig, gateway: Gateway,
                  updates: bool = True,
                  ) -> tuple[RunRecord, Optional[MetricsReport], KnowledgeGraph]:
    """Sequentially detect each claim, committing KG updates between claims.

    Claims that hit a hard gateway failure are recorded as errors and
    excluded from metrics; the exclusion count is reported on the record.
    """
    graph = graph.copy()
    engine = SearchEngine(gateway, config)
    record = RunRecord(config_digest=_config_digest(config, updates),
                       kg_before=_graph_digest(graph))
    for item in items:
        result = ClaimResult(id=item.id, gold=item.gold)
        try:
            verdict, paths, _tree = engine.search(item.claim, graph,
                                                  claim_id=item.id)
            result.verdict = verdict
            result.paths_digest = paths_digest(paths)
            if updates and verdict == Verdict.REAL:
                new_triples = extract_new_knowledge(item.id, item.claim, paths,
                                                    gateway)
                stats = apply_update(graph, new_triples, claim_id=item.id)
                result.duplicates = stats.duplicates
                # Only the actually-inserted triples land in the record.
                result.triples_added = [
                    t.as_record() for t in graph.triples[-stats.added:]
                ] if stats.added else []
        except GatewayHardError as exc:
            log.warning("claim %s failed: %s", item.id, exc)
            result.error = str(exc)
            record.exclusions += 1
        record.results.append(result)
    record.kg_after = _graph_digest(graph)
    scored = [r for r in record.results if r.error is None and r.gold is not None]
    report = None
    if scored:
        report = compute_metrics([r.verdict for r in scored],
                                 [r.gold for r in scored])
    return record, report, graph


@dataclass
class SequentialCell:
    setting: str
    accuracy: float
    population: int
    record: RunRecord


def run_sequential(subsets: list[list[NewsItem]], base_graph: KnowledgeGraph,
                   config: EngineConfig, gateway: Gateway,
                   updates: bool = True) -> list[SequentialCell]:
    """Evaluate each subset pristine and with the carried-over updated graph.

    Subset 1 runs once (producing the first updated graph); every later
    subset i runs both against the pristine base graph and against the graph
    updated during subsets 1..i-1.
    """
    if not subsets or any(not s for s in subsets):
        raise GatewayHardError("run_sequential requires non-empty subsets")

    cells: list[SequentialCell] = []

    def cell(setting: str, items: list[NewsItem], graph: KnowledgeGraph,
             with_updates: bool) -> KnowledgeGraph:
        record, report, out_graph = run_detection(items, graph, config, gateway,
                                                  updates=with_updates)
        accuracy = report.accuracy if report else 0.0
        population = sum(1 for r in record.results
                         if r.error is None and r.gold is not None)
        cells.append(SequentialCell(setting, accuracy, population, record))
        return out_graph

    carried = cell("subset1", subsets[0], base_graph, updates)
    for i, subset in enumerate(subsets[1:], start=2):
        cell(f"subset{i}", subset, base_graph, False)
        carry_tag = "kg1" if i == 2 else "kg1&" + "&".join(
            str(j) for j in range(2, i))
        carried = cell(f"subset{i}+{carry_tag}", subset, carried, updates)
    return cells


def format_cells(cells: list[SequentialCell]) -> str:
    lines = [f"{'setting':<20}{'accuracy':>10}{'population':>12}"]
    for c in cells:
        lines.append(f"{c.setting:<20}{c.accuracy:>10.4f}{c.population:>12}")
    return "\n".join(lines)
