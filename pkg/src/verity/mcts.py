"""Per-claim search tree over decomposition steps.

Three edge kinds: generate a sub-question (A1), answer it (A2), emit a final
verdict (A3). A2 only follows A1; A3 only follows the root or A2. Each
search iteration is one select -> expand -> back-propagate round; leaves
register reasoning paths, rewards follow the majority of completed-path
verdicts, and the final verdict is a majority vote with ties broken to Fake.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import ValidationError
from .gateway import Gateway, LLMRequest, PromptKind
from .kg_store import KnowledgeGraph
from .retrieval import render_triples, retrieve_context
from .verdict import Verdict


class ActionKind(Enum):
    A1 = "subquestion"
    A2 = "answer"
    A3 = "verdict"


# Tie order when choosing which legal action to expand next.
_ACTION_ORDER = {ActionKind.A1: 0, ActionKind.A2: 1, ActionKind.A3: 2}


@dataclass
class SearchNode:
    id: int
    parent: Optional[int]
    action: Optional[ActionKind]
    text: str
    depth: int
    q: float = 0.0
    v: int = 0
    children: list[int] = field(default_factory=list)
    verdict: Optional[Verdict] = None
    terminal: bool = False


@dataclass
class ReasoningPath:
    steps: list[tuple[ActionKind, str]]
    verdict: Verdict
    node_ids: list[int]  # root inclusive, for bookkeeping

    def digest_record(self) -> dict:
        return {
            "steps": [(a.name, t) for a, t in self.steps],
            "verdict": self.verdict.value,
        }


@dataclass
class EngineConfig:
    n: int = 5            # search iterations
    h: int = 5            # tree height limit (9 suits long, multi-fact claims)
    b: int = 2            # children generated per expansion
    alpha: float = 2.0    # exploration constant
    top_k: int = 5        # retrieval cutoff
    seed: int = 0

    def validate(self) -> None:
        if min(self.n, self.b, self.top_k) < 1 or self.alpha < 0:
            raise ValidationError("engine parameters must be positive")
        if self.h < 2:
            raise ValidationError("height limit must be >= 2")


class SearchTree:
    def __init__(self, claim: str, config: EngineConfig):
        config.validate()
        self.claim = claim
        self.config = config
        self.nodes: list[SearchNode] = [
            SearchNode(id=0, parent=None, action=None, text=claim, depth=0)]
        self.root_id = 0
        self.completed_paths: list[ReasoningPath] = []

    @property
    def root(self) -> SearchNode:
        return self.nodes[self.root_id]

    def node(self, node_id: int) -> SearchNode:
        return self.nodes[node_id]

    def add_child(self, parent: SearchNode, action: ActionKind,
                  text: str) -> SearchNode:
        child = SearchNode(id=len(self.nodes), parent=parent.id, action=action,
                           text=text, depth=parent.depth + 1)
        self.nodes.append(child)
        parent.children.append(child.id)
        return child

    def path_to(self, node: SearchNode) -> list[SearchNode]:
        """Nodes from root (inclusive) down to ``node``."""
        chain = []
        cur: Optional[SearchNode] = node
        while cur is not None:
            chain.append(cur)
            cur = self.node(cur.parent) if cur.parent is not None else None
        return list(reversed(chain))

    def dump(self) -> list[dict]:
        """Per-node debug records."""
        return [{
            "id": n.id,
            "parent": n.parent,
            "action": n.action.name if n.action else None,
            "depth": n.depth,
            "q": round(n.q, 6),
            "v": n.v,
            "verdict": n.verdict.value if n.verdict else None,
            "text_digest": hashlib.sha256(n.text.encode("utf-8")).hexdigest()[:12],
        } for n in self.nodes]


def legal_actions(tree: SearchTree, node: SearchNode) -> set[ActionKind]:
    """Action precedence: A2 after A1; A3 after the root or A2."""
    if node.terminal or node.depth >= tree.config.h:
        return set()
    if node.action is None:
        base = {ActionKind.A1, ActionKind.A3}
    elif node.action == ActionKind.A1:
        base = {ActionKind.A2}
    elif node.action == ActionKind.A2:
        base = {ActionKind.A1, ActionKind.A3}
    else:
        return set()
    if node.depth == tree.config.h - 1 and ActionKind.A3 in base:
        return {ActionKind.A3}
    return base


def uct_score(q: float, v: int, v_parent: int, alpha: float) -> float:
    """Exploitation mean plus exploration bonus; defined only for visited nodes."""
    if v < 1 or v_parent < 1:
        raise ValidationError("uct_score requires visit counts >= 1")
    return q / v + alpha * math.sqrt(math.log(v_parent) / v)


def path_reward(p_major: int, p_minor: int) -> float:
    """Majority share of completed-path verdicts; always in [0.5, 1]."""
    if p_major < p_minor or p_minor < 0 or p_major + p_minor < 1:
        raise ValidationError("invalid majority/minority counts")
    return p_major / (p_major + p_minor)


def _child_count(tree: SearchTree, node: SearchNode, action: ActionKind) -> int:
    return sum(1 for cid in node.children if tree.node(cid).action == action)


def expansion_kinds(tree: SearchTree, node: SearchNode) -> list[ActionKind]:
    """Legal actions that still have unexpanded child capacity."""
    return [a for a in legal_actions(tree, node)
            if _child_count(tree, node, a) < tree.config.b]


def has_capacity(tree: SearchTree, node: SearchNode) -> bool:
    return bool(expansion_kinds(tree, node))


def subtree_expandable(tree: SearchTree, node: SearchNode) -> bool:
    if has_capacity(tree, node):
        return True
    return any(subtree_expandable(tree, tree.node(cid)) for cid in node.children)


def select(tree: SearchTree, rng: random.Random) -> Optional[SearchNode]:
    """Descend from the root to the first node with expansion capacity.

    Unvisited children are chosen uniformly at random; otherwise the child
    maximizing the UCT score wins, ties broken by lowest child index.
    """
    node = tree.root
    while True:
        if has_capacity(tree, node):
            return node
        options = [tree.node(cid) for cid in node.children
                   if subtree_expandable(tree, tree.node(cid))]
        if not options:
            return None
        unvisited = [c for c in options if c.v == 0]
        if unvisited:
            node = rng.choice(unvisited)
        else:
            node = max(options,
                       key=lambda c: (uct_score(c.q, c.v, node.v,
                                                tree.config.alpha), -c.id))


def backpropagate(tree: SearchTree, leaf: SearchNode) -> None:
    """Apply the majority-agreement reward to the new leaf's path.

    The majority is recomputed over all completed paths including the new
    one. An agreeing (or tie-completing) leaf adds the reward to Q on every
    path node except the root; visit counts increment root included.
    """
    counts = {Verdict.REAL: 0, Verdict.FAKE: 0}
    for path in tree.completed_paths:
        counts[path.verdict] += 1
    p_major = max(counts.values())
    p_minor = min(counts.values())
    reward = path_reward(p_major, p_minor)
    agrees = counts[leaf.verdict] == p_major
    for node in tree.path_to(leaf):
        if agrees and node.id != tree.root_id:
            node.q += reward
        node.v += 1


def _render_transcript(path: list[SearchNode]) -> str:
    lines = []
    for node in path:
        if node.action == ActionKind.A1:
            lines.append(f"Q: {node.text}")
        elif node.action == ActionKind.A2:
            lines.append(f"A: {node.text}")
    return "\n".join(lines) if lines else "(none)"


class SearchEngine:
    """Runs the select/expand/back-propagate loop for one claim at a time."""

    def __init__(self, gateway: Gateway, config: Optional[EngineConfig] = None):
        self.gateway = gateway
        self.config = config or EngineConfig()
        self.config.validate()

    def _rng_for(self, claim_id: str) -> random.Random:
        digest = hashlib.sha256(
            f"{self.config.seed}:{claim_id}".encode("utf-8")).hexdigest()
        return random.Random(int(digest[:16], 16))

    def _complete_leaf(self, tree: SearchTree, leaf: SearchNode,
                       verdict: Verdict) -> None:
        leaf.verdict = verdict
        leaf.terminal = True
        chain = tree.path_to(leaf)
        tree.completed_paths.append(ReasoningPath(
            steps=[(n.action, n.text) for n in chain if n.action is not None],
            verdict=verdict,
            node_ids=[n.id for n in chain]))
        backpropagate(tree, leaf)

    def _ask_verdict(self, tree: SearchTree,
                     path: list[SearchNode]) -> tuple[Verdict, str]:
        resp = self.gateway.complete(LLMRequest(PromptKind.FINAL_VERDICT, {
            "claim": tree.claim,
            "transcript": _render_transcript(path),
        }, seed=self.config.seed))
        if resp.parse_ok:
            return resp.parsed, resp.raw
        # Unparseable verdicts default to Fake: insufficient information.
        return Verdict.FAKE, resp.raw

    def _generate_text(self, kind: PromptKind, context: dict[str, str]) -> Optional[str]:
        # One retry for unparseable A1/A2 generations, then give up on the child.
        for _ in range(2):
            resp = self.gateway.complete(
                LLMRequest(kind, context, seed=self.config.seed))
            if resp.parse_ok:
                return resp.parsed
        return None

    def expand(self, tree: SearchTree, node: SearchNode,
               graph: KnowledgeGraph) -> list[SearchNode]:
        kinds = expansion_kinds(tree, node)
        if not kinds:
            raise ValidationError("node has no expansion capacity")
        action = min(kinds,
                     key=lambda a: (_child_count(tree, node, a), _ACTION_ORDER[a]))
        parent_path = tree.path_to(node)
        transcript = _render_transcript(parent_path)
        created: list[SearchNode] = []
        retrieved: Optional[str] = None
        if action == ActionKind.A2:
            # One retrieval serves every sibling: the question is the same.
            result = retrieve_context(node.text, graph, self.config.top_k,
                                      self.gateway)
            retrieved = render_triples(result.selected)
        existing = _child_count(tree, node, action)
        for branch in range(existing, tree.config.b):
            if action == ActionKind.A3:
                verdict, raw = self._ask_verdict(tree, parent_path)
                child = tree.add_child(node, ActionKind.A3, raw)
                self._complete_leaf(tree, child, verdict)
                created.append(child)
                continue
            if action == ActionKind.A1:
                text = self._generate_text(PromptKind.GENERATE_SUBQUESTION, {
                    "claim": tree.claim,
                    "transcript": transcript,
                    "branch": str(branch),
                })
            else:  # A2: answer with retrieved knowledge in context
                text = self._generate_text(PromptKind.ANSWER_SUBQUESTION, {
                    "claim": tree.claim,
                    "transcript": transcript,
                    "triples": retrieved or "(none)",
                    "question": node.text,
                })
            if text is None:
                continue
            child = tree.add_child(node, action, text)
            created.append(child)
            if child.depth == tree.config.h:
                # Forced termination: a depth-limit child carries a verdict.
                verdict, _ = self._ask_verdict(tree, tree.path_to(child))
                self._complete_leaf(tree, child, verdict)
        return created

    def search(self, claim: str, graph: KnowledgeGraph,
               claim_id: str = "") -> tuple[Verdict, list[ReasoningPath], SearchTree]:
        if not claim.strip():
            raise ValidationError("claim must be non-empty")
        tree = SearchTree(claim, self.config)
        rng = self._rng_for(claim_id or claim)
        for _ in range(self.config.n):
            node = select(tree, rng)
            if node is None:
                break
            self.expand(tree, node, graph)
        return (majority_verdict(tree.completed_paths), tree.completed_paths, tree)


def majority_verdict(paths: list[ReasoningPath]) -> Verdict:
    """Majority vote over leaf verdicts; ties and the empty case go to Fake."""
    real = sum(1 for p in paths if p.verdict == Verdict.REAL)
    fake = len(paths) - real
    return Verdict.REAL if real > fake else Verdict.FAKE


def paths_digest(paths: list[ReasoningPath]) -> str:
    payload = json.dumps([p.digest_record() for p in paths],
                         ensure_ascii=False, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
