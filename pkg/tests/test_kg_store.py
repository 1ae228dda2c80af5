import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from verity.errors import KGFormatError, ValidationError
from verity.kg_store import KnowledgeGraph, make_triple, normalize_entity


def brute_force_one_hop(graph, keys):
    return [t for t in graph.triples
            if t.subject.key in keys or t.object.key in keys]


class TestNormalizeEntity:
    def test_collapses_and_lowercases(self):
        assert normalize_entity("Dwight  D. Eisenhower ") == "dwight d. eisenhower"

    def test_identity_case(self):
        assert normalize_entity("abc") == "abc"

    def test_tabs_collapse(self):
        assert normalize_entity("WORLD WAR\tII") == "world war ii"

    def test_empty(self):
        assert normalize_entity("   ") == ""


class TestInsert:
    def test_insert_into_empty(self):
        g = KnowledgeGraph()
        assert g.insert_triple(make_triple("eisenhower", "superior of", "anderson"))
        assert len(g) == 1

    def test_duplicate_rejected(self):
        g = KnowledgeGraph()
        t = make_triple("eisenhower", "superior of", "anderson")
        assert g.insert_triple(t)
        assert not g.insert_triple(t)
        assert len(g) == 1

    def test_distinct_relation_distinct_identity(self):
        g = KnowledgeGraph()
        g.insert_triple(make_triple("eisenhower", "superior of", "anderson"))
        assert g.insert_triple(make_triple("eisenhower", "commanded", "anderson"))
        assert len(g) == 2

    def test_dedup_is_normalized(self):
        g = KnowledgeGraph()
        g.insert_triple(make_triple("Eisenhower", "Superior Of", "ANDERSON"))
        assert not g.insert_triple(make_triple("eisenhower ", "superior  of", "anderson"))

    @pytest.mark.parametrize("s,r,o", [
        ("", "r", "b"), ("a", "", "b"), ("a", "r", ""), ("  ", "r", "b"),
    ])
    def test_invalid_triples_rejected(self, s, r, o):
        g = KnowledgeGraph()
        with pytest.raises(ValidationError):
            g.insert_triple(make_triple(s, r, o))


class TestQueries:
    def test_match_entities_is_intersection(self):
        g = KnowledgeGraph()
        g.add("a", "r1", "b")
        g.add("b", "r2", "c")
        assert g.match_entities({"b", "d"}) == {"b"}
        assert g.match_entities(set()) == set()
        assert g.match_entities({"a", "b", "c"}) == {"a", "b", "c"}

    def test_one_hop_examples(self):
        g = KnowledgeGraph()
        g.add("a", "r1", "b")
        g.add("b", "r2", "c")
        g.add("c", "r3", "d")
        hop = g.one_hop_subgraph({"b"})
        assert [(t.subject.key, t.object.key) for t in hop] == [("a", "b"), ("b", "c")]
        assert g.one_hop_subgraph(set()) == []
        assert [(t.subject.key, t.object.key) for t in g.one_hop_subgraph({"d"})] \
            == [("c", "d")]

    @given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 5),
                              st.integers(0, 30)), max_size=60),
           st.sets(st.integers(0, 30), max_size=8))
    @settings(max_examples=60, deadline=None)
    def test_one_hop_equals_brute_force(self, raw, raw_keys):
        g = KnowledgeGraph()
        for s, r, o in raw:
            g.insert_triple(make_triple(f"e{s}", f"r{r}", f"e{o}"))
        keys = {f"e{k}" for k in raw_keys}
        assert g.one_hop_subgraph(keys) == brute_force_one_hop(g, keys)

    @given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 3),
                              st.integers(0, 20)), max_size=50))
    @settings(max_examples=60, deadline=None)
    def test_insert_idempotent_and_index_consistent(self, raw):
        g = KnowledgeGraph()
        for s, r, o in raw:
            t = make_triple(f"e{s}", f"r{r}", f"e{o}")
            g.insert_triple(t)
            size = len(g)
            assert not g.insert_triple(t)
            assert len(g) == size
        # Rebuilt-from-scratch index equals the incrementally maintained one.
        rebuilt = KnowledgeGraph()
        for t in g.triples:
            rebuilt.insert_triple(t)
        assert rebuilt._entity_index == g._entity_index
        for key in g.entity_keys():
            assert any(key in (t.subject.key, t.object.key)
                       for t in g.one_hop_subgraph({key}))


class TestPersistence:
    def test_round_trip(self, tmp_path):
        g = KnowledgeGraph()
        g.add("Eisenhower", "superior of", "Anderson", "doc-1")
        g.add("Anderson", "fought in", "Tunisia", "doc-1")
        g.add("The Landing", "occurred in", "November 1942", "doc-2")
        path = tmp_path / "kg.jsonl"
        g.save(str(path))
        loaded = KnowledgeGraph.load(str(path))
        assert loaded.triples == g.triples

    def test_round_trip_random(self, tmp_path):
        rng = random.Random(7)
        g = KnowledgeGraph()
        for i in range(500):
            g.add(f"e{rng.randrange(200)}", f"rel {rng.randrange(20)}",
                  f"e{rng.randrange(200)}", source_id=f"src{i % 13}")
        path = tmp_path / "kg.jsonl"
        g.save(str(path))
        assert KnowledgeGraph.load(str(path)).triples == g.triples

    def test_load_empty_file(self, tmp_path):
        path = tmp_path / "kg.jsonl"
        path.write_text("")
        assert len(KnowledgeGraph.load(str(path))) == 0

    def test_comments_ignored(self, tmp_path):
        path = tmp_path / "kg.jsonl"
        path.write_text('# header\n{"subject": "a", "relation": "r", '
                        '"object": "b", "source_id": "", "seq": 0}\n')
        assert len(KnowledgeGraph.load(str(path))) == 1

    def test_truncated_record_reports_line(self, tmp_path):
        path = tmp_path / "kg.jsonl"
        path.write_text('{"subject": "a", "relation": "r", "object": "b", '
                        '"source_id": "", "seq": 0}\n{"subject": "a"\n')
        with pytest.raises(KGFormatError) as err:
            KnowledgeGraph.load(str(path))
        assert err.value.line == 2

    def test_missing_file_is_not_found(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            KnowledgeGraph.load(str(tmp_path / "absent.jsonl"))


def test_copy_is_independent():
    g = KnowledgeGraph()
    g.add("a", "r", "b")
    snap = g.copy()
    g.add("c", "r", "d")
    assert len(snap) == 1
    assert len(g) == 2
    assert snap.match_entities({"c"}) == set()
