"""Indexed, persistent triple store for the news-domain knowledge graph.

Entities are matched exactly on a normalized key (lowercase, trimmed,
internal whitespace collapsed). Relation strings are stored verbatim but
normalized for the dedup identity. Each triple carries provenance: the id
of the source it came from plus a monotonically increasing sequence number.

File format: one JSON object per line with fields subject, relation,
object, source_id, seq. Lines starting with '#' are ignored.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable

from .errors import KGFormatError, ValidationError

_WS_RUN = re.compile(r"\s+")


def normalize_entity(surface: str) -> str:
    """Lowercase, strip, and collapse runs of whitespace to one space."""
    return _WS_RUN.sub(" ", surface.strip()).lower()


@dataclass(frozen=True)
class Entity:
    surface: str

    @property
    def key(self) -> str:
        return normalize_entity(self.surface)


@dataclass(frozen=True)
class Triple:
    subject: Entity
    relation: str
    object: Entity
    source_id: str = ""
    seq: int = 0

    @property
    def identity(self) -> tuple[str, str, str]:
        """Dedup identity: normalized subject, relation, and object."""
        return (self.subject.key, normalize_entity(self.relation), self.object.key)

    def validate(self) -> None:
        if not self.subject.key:
            raise ValidationError("triple has an empty subject key")
        if not self.object.key:
            raise ValidationError("triple has an empty object key")
        if not self.relation.strip():
            raise ValidationError("triple has an empty relation")

    def as_record(self) -> dict:
        return {
            "subject": self.subject.surface,
            "relation": self.relation,
            "object": self.object.surface,
            "source_id": self.source_id,
            "seq": self.seq,
        }


def make_triple(subject: str, relation: str, object: str,
                source_id: str = "", seq: int = 0) -> Triple:
    return Triple(Entity(subject), relation, Entity(object), source_id, seq)


class KnowledgeGraph:
    """Ordered triple collection with an entity index for one-hop lookups.

    Concurrent reads are safe; callers serialize writes. ``copy()`` gives a
    cheap snapshot so a detection run can read a consistent graph while a
    previous claim's updates commit elsewhere.
    """

    def __init__(self) -> None:
        self.triples: list[Triple] = []
        self._identities: set[tuple[str, str, str]] = set()
        self._entity_index: dict[str, set[int]] = {}
        self._next_seq = 0

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple.identity in self._identities

    def entity_keys(self) -> set[str]:
        return set(self._entity_index)

    def insert_triple(self, triple: Triple) -> bool:
        """Insert unless the dedup identity is already present.

        Returns True when the triple was appended. Rejects empty-key or
        empty-relation triples with :class:`ValidationError`.
        """
        triple.validate()
        if triple.identity in self._identities:
            return False
        idx = len(self.triples)
        self.triples.append(triple)
        self._identities.add(triple.identity)
        self._entity_index.setdefault(triple.subject.key, set()).add(idx)
        self._entity_index.setdefault(triple.object.key, set()).add(idx)
        self._next_seq = max(self._next_seq, triple.seq + 1)
        return True

    def add(self, subject: str, relation: str, object: str, source_id: str = "") -> bool:
        """Build a triple with the next sequence number and insert it."""
        return self.insert_triple(
            make_triple(subject, relation, object, source_id, self._next_seq))

    def match_entities(self, query_keys: Iterable[str]) -> set[str]:
        """Exact intersection of normalized query keys with indexed keys."""
        return {k for k in query_keys if k in self._entity_index}

    def one_hop_subgraph(self, keys: Iterable[str]) -> list[Triple]:
        """All triples whose subject or object key is in ``keys``, in insertion order."""
        hit: set[int] = set()
        for key in keys:
            hit.update(self._entity_index.get(key, ()))
        return [self.triples[i] for i in sorted(hit)]

    def copy(self) -> "KnowledgeGraph":
        snap = KnowledgeGraph()
        snap.triples = list(self.triples)
        snap._identities = set(self._identities)
        snap._entity_index = {k: set(v) for k, v in self._entity_index.items()}
        snap._next_seq = self._next_seq
        return snap

    def content_digest_lines(self) -> list[str]:
        return [json.dumps(t.as_record(), ensure_ascii=False, sort_keys=True)
                for t in self.triples]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for triple in self.triples:
                fh.write(json.dumps(triple.as_record(), ensure_ascii=False,
                                    sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str) -> "KnowledgeGraph":
        graph = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    record = json.loads(line)
                    triple = make_triple(
                        record["subject"], record["relation"], record["object"],
                        record.get("source_id", ""), int(record.get("seq", 0)))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise KGFormatError(lineno, f"bad record: {exc}") from exc
                try:
                    graph.insert_triple(triple)
                except ValidationError as exc:
                    raise KGFormatError(lineno, str(exc)) from exc
        return graph
