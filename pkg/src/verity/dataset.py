"""Claim dataset loading, label normalization, and sequential-subset splits.

Native format: one JSON object per line with fields id, claim, label
(optional), evidence (optional list of sentence texts), group (optional).
Hover- and Feverous-style files are normalized into the same shape;
Feverous-style items carrying non-sentence evidence (tables, cells) are
dropped, with the drop count reported.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .errors import DatasetError, ValidationError
from .kg_builder import SourceDocument
from .verdict import Verdict

_REAL_TOKENS = {"real", "true", "supported", "supports"}
_FAKE_TOKENS = {"fake", "false", "refuted", "refutes", "not_supported",
                "not supported"}


def parse_label(token: str) -> Verdict:
    norm = token.strip().lower()
    if norm in _REAL_TOKENS:
        return Verdict.REAL
    if norm in _FAKE_TOKENS:
        return Verdict.FAKE
    raise ValueError(f"unknown label token: {token!r}")


@dataclass
class NewsItem:
    id: str
    claim: str
    gold: Optional[Verdict] = None
    evidence: list[str] = field(default_factory=list)
    group: Optional[str] = None
    subset: Optional[int] = None

    def as_record(self) -> dict:
        record: dict = {"id": self.id, "claim": self.claim}
        if self.gold is not None:
            record["label"] = self.gold.value
        if self.evidence:
            record["evidence"] = self.evidence
        if self.group is not None:
            record["group"] = self.group
        return record


@dataclass
class LoadReport:
    items: list[NewsItem]
    dropped: int = 0


@dataclass
class DatasetSplit:
    subsets: list[list[NewsItem]]
    corpora: list[list[SourceDocument]]


def _sentence_evidence(raw_evidence, fmt: str) -> tuple[list[str], bool]:
    """Normalize one record's evidence; False means non-sentence evidence."""
    sentences: list[str] = []
    for item in raw_evidence or []:
        if isinstance(item, str):
            sentences.append(item)
        elif isinstance(item, dict):
            if fmt == "feverous" and item.get("type", "sentence") != "sentence":
                return [], False
            text = item.get("text", "")
            if text:
                sentences.append(text)
        else:
            return [], False
    return sentences, True


def load_dataset(path: str, fmt: str = "native") -> LoadReport:
    if fmt not in ("native", "hover", "feverous"):
        raise ValidationError(f"unknown dataset format: {fmt}")
    items: list[NewsItem] = []
    dropped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(lineno, f"bad JSON: {exc}") from exc
            claim = record.get("claim", "")
            if not isinstance(claim, str) or not claim.strip():
                raise DatasetError(lineno, "missing or empty claim")
            gold = None
            if record.get("label") is not None:
                try:
                    gold = parse_label(str(record["label"]))
                except ValueError as exc:
                    raise DatasetError(lineno, str(exc)) from exc
            evidence, ok = _sentence_evidence(record.get("evidence"), fmt)
            if not ok:
                dropped += 1
                continue
            items.append(NewsItem(
                id=str(record.get("id", f"item-{lineno}")),
                claim=claim,
                gold=gold,
                evidence=evidence,
                group=record.get("group"),
            ))
    return LoadReport(items, dropped)


def save_dataset(items: list[NewsItem], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item.as_record(), ensure_ascii=False) + "\n")


def split_subsets(items: list[NewsItem], k: int, seed: int = 0) -> DatasetSplit:
    """Seeded split into k near-equal subsets.

    Items sharing a group key stay together; groups are shuffled and then
    assigned greedily to the currently smallest subset (ties to the lowest
    index), which gives near-equal sizes when groups are singletons.
    """
    if k < 1:
        raise ValidationError("subset count must be >= 1")
    if k > len(items):
        raise ValidationError(f"cannot split {len(items)} items into {k} subsets")
    groups: dict[str, list[NewsItem]] = {}
    for item in items:
        groups.setdefault(item.group if item.group is not None else f"~{item.id}",
                          []).append(item)
    keys = list(groups)
    random.Random(seed).shuffle(keys)
    subsets: list[list[NewsItem]] = [[] for _ in range(k)]
    for key in keys:
        target = min(range(k), key=lambda i: (len(subsets[i]), i))
        subsets[target].extend(groups[key])
    corpora: list[list[SourceDocument]] = [[] for _ in range(k)]
    for idx, subset in enumerate(subsets):
        for item in subset:
            item.subset = idx
            if item.evidence:
                corpora[idx].append(SourceDocument(
                    id=f"{item.id}-evidence",
                    body="\n".join(item.evidence),
                    trusted=True))
    return DatasetSplit(subsets, corpora)
