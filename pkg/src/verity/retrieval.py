"""Top-K knowledge retrieval for a sub-question.

Pipeline: extract the question's entities, match them exactly against the
graph, take the one-hop subgraph, and when the candidate set exceeds the
budget ask the model to rank candidate indices (never to regenerate triples)
before truncating to K.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import ValidationError
from .gateway import Gateway, LLMRequest, PromptKind
from .kg_store import KnowledgeGraph, Triple, normalize_entity

log = logging.getLogger(__name__)

# The ranking prompt is capped to keep it inside a model context budget.
RANK_CANDIDATE_CAP = 50


@dataclass
class RetrievalResult:
    question: str
    matched_keys: set[str] = field(default_factory=set)
    candidates: list[Triple] = field(default_factory=list)
    selected: list[Triple] = field(default_factory=list)
    ranked_by_llm: bool = False


def render_triples(triples: list[Triple]) -> str:
    if not triples:
        return "(none)"
    return "\n".join(f"({t.subject.surface}; {t.relation}; {t.object.surface})"
                     for t in triples)


def render_candidates(triples: list[Triple]) -> str:
    return "\n".join(
        f"{i}: ({t.subject.surface}; {t.relation}; {t.object.surface})"
        for i, t in enumerate(triples))


def question_entities(question: str, gateway: Gateway) -> set[str]:
    """Normalized, deduplicated entity keys mentioned by the question."""
    if not question.strip():
        return set()
    resp = gateway.complete(LLMRequest(PromptKind.EXTRACT_ENTITIES,
                                       {"document": question}))
    if not resp.parse_ok:
        return set()
    return {key for key in (normalize_entity(e) for e in resp.parsed) if key}


def retrieve_context(question: str, graph: KnowledgeGraph, k: int,
                     gateway: Gateway) -> RetrievalResult:
    if k < 1:
        raise ValidationError("retrieval cutoff K must be >= 1")
    keys = question_entities(question, gateway)
    matched = graph.match_entities(keys)
    candidates = graph.one_hop_subgraph(matched)
    result = RetrievalResult(question, matched, candidates)
    if len(candidates) <= k:
        result.selected = list(candidates)
        return result
    pool = candidates[:RANK_CANDIDATE_CAP]
    resp = gateway.complete(LLMRequest(
        PromptKind.RANK_TRIPLES,
        {"question": question, "candidates": render_candidates(pool)}))
    order = resp.parsed if resp.parse_ok else None
    if order is not None and sorted(order) == list(range(len(pool))):
        result.selected = [pool[i] for i in order[:k]]
        result.ranked_by_llm = True
    else:
        log.warning("ranking output unusable; falling back to insertion order")
        result.selected = candidates[:k]
    return result
