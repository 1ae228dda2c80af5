"""Harvests new triples from claims judged Real and merges them into the graph.

Extraction reuses both modes from :mod:`verity.kg_builder` over a composed
text: the claim plus the Q&A steps of the reasoning paths that agreed with
the Real verdict. Paths that concluded Fake are excluded so contradicted
reasoning is not reintroduced.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .gateway import Gateway
from .kg_builder import SourceDocument, extract_document
from .kg_store import KnowledgeGraph, Triple
from .mcts import ActionKind, ReasoningPath
from .verdict import Verdict

log = logging.getLogger(__name__)


@dataclass
class UpdateStats:
    added: int = 0
    duplicates: int = 0
    rejected: int = 0


def extract_new_knowledge(claim_id: str, claim: str, paths: list[ReasoningPath],
                          gateway: Gateway) -> list[Triple]:
    """Triples extracted from the claim text plus agreeing-path transcripts.

    Callers invoke this only for claims whose final verdict is Real; an empty
    agreeing-path set degrades to extraction from the claim text alone.
    """
    parts = [claim]
    for path in paths:
        if path.verdict != Verdict.REAL:
            continue
        for action, text in path.steps:
            if action in (ActionKind.A1, ActionKind.A2):
                parts.append(text)
    doc = SourceDocument(id=claim_id, body="\n".join(parts), trusted=True)
    triples, dropped = extract_document(doc, gateway)
    if dropped:
        log.warning("claim %s: %d extraction drops during knowledge update",
                    claim_id, dropped)
    return triples


def apply_update(graph: KnowledgeGraph, new_triples: list[Triple],
                 claim_id: str = "") -> UpdateStats:
    """Insert each triple; dedup keeps the graph strictly monotone."""
    stats = UpdateStats()
    for triple in new_triples:
        try:
            inserted = graph.add(triple.subject.surface, triple.relation,
                                 triple.object.surface,
                                 source_id=claim_id or triple.source_id)
        except Exception:
            stats.rejected += 1
            continue
        if inserted:
            stats.added += 1
        else:
            stats.duplicates += 1
    return stats
