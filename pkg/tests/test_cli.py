import json

from synth import tabled_world

from verity.cli import main
from verity.dataset import save_dataset
from verity.kg_store import KnowledgeGraph


def write_facts(path, table):
    path.write_text(json.dumps({
        "entities": table.entities,
        "facts": [list(f) for f in table.facts],
        "extraction_facts": [list(f) for f in table.extraction_facts],
        "event_facts": [list(f) for f in table.event_facts],
        "relations": table.relations,
    }))


def write_corpus(path, docs):
    path.write_text("\n".join(json.dumps(d) for d in docs) + "\n")


class TestBuildKg:
    def test_builds_graph_file(self, tmp_path, capsys):
        table, _ = tabled_world(num_real=2, num_fake=0)
        facts = tmp_path / "facts.json"
        write_facts(facts, table)
        corpus = tmp_path / "corpus.jsonl"
        write_corpus(corpus, [
            {"id": "d1", "body": "Alpha0 commanded Gamma0."},
            {"id": "d2", "body": "Beta1 served in Gamma1."},
        ])
        out = tmp_path / "kg.jsonl"
        code = main(["build-kg", "--corpus", str(corpus), "--out", str(out),
                     "--backend", "oracle", "--facts", str(facts)])
        assert code == 0
        graph = KnowledgeGraph.load(str(out))
        assert len(graph) == 2
        assert (tmp_path / "kg.jsonl.report.json").exists()
        assert "built graph with 2 triples" in capsys.readouterr().out

    def test_oracle_requires_facts(self, tmp_path, capsys):
        corpus = tmp_path / "corpus.jsonl"
        write_corpus(corpus, [{"id": "d", "body": "x"}])
        code = main(["build-kg", "--corpus", str(corpus),
                     "--out", str(tmp_path / "kg.jsonl"),
                     "--backend", "oracle"])
        assert code == 2
        assert "facts" in capsys.readouterr().err


class TestDetect:
    def _setup(self, tmp_path):
        table, items = tabled_world(num_real=2, num_fake=2)
        facts = tmp_path / "facts.json"
        write_facts(facts, table)
        dataset = tmp_path / "claims.jsonl"
        save_dataset(items, str(dataset))
        kg = tmp_path / "kg.jsonl"
        KnowledgeGraph().save(str(kg))
        return facts, dataset, kg

    def test_detect_reports_metrics(self, tmp_path, capsys):
        facts, dataset, kg = self._setup(tmp_path)
        out = tmp_path / "run.jsonl"
        code = main(["detect", "--dataset", str(dataset), "--kg", str(kg),
                     "--backend", "oracle", "--facts", str(facts),
                     "--n", "3", "--height", "3", "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "run digest:" in printed
        assert "accuracy" in printed
        assert len(out.read_text().strip().splitlines()) == 4

    def test_evaluate_saved_run(self, tmp_path, capsys):
        facts, dataset, kg = self._setup(tmp_path)
        out = tmp_path / "run.jsonl"
        main(["detect", "--dataset", str(dataset), "--kg", str(kg),
              "--backend", "oracle", "--facts", str(facts),
              "--n", "3", "--height", "3", "--out", str(out)])
        capsys.readouterr()
        assert main(["evaluate", "--run", str(out)]) == 0
        assert "accuracy" in capsys.readouterr().out

    def test_record_then_replay_same_digest(self, tmp_path, capsys):
        facts, dataset, kg = self._setup(tmp_path)
        transcript = tmp_path / "transcript.jsonl"
        main(["detect", "--dataset", str(dataset), "--kg", str(kg),
              "--backend", "oracle", "--facts", str(facts),
              "--n", "3", "--height", "3", "--record", str(transcript)])
        first = capsys.readouterr().out
        code = main(["replay", "--dataset", str(dataset), "--kg", str(kg),
                     "--transcript", str(transcript),
                     "--n", "3", "--height", "3"])
        assert code == 0
        second = capsys.readouterr().out
        digest = [l for l in first.splitlines() if l.startswith("run digest")]
        assert digest == \
            [l for l in second.splitlines() if l.startswith("run digest")]

    def test_missing_kg_file(self, tmp_path, capsys):
        facts, dataset, _ = self._setup(tmp_path)
        code = main(["detect", "--dataset", str(dataset),
                     "--kg", str(tmp_path / "absent.jsonl"),
                     "--backend", "oracle", "--facts", str(facts)])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_config_file_with_unknown_key(self, tmp_path, capsys):
        facts, dataset, kg = self._setup(tmp_path)
        config = tmp_path / "config.json"
        config.write_text('{"temperture": 0.5}')
        code = main(["detect", "--dataset", str(dataset), "--kg", str(kg),
                     "--backend", "oracle", "--facts", str(facts),
                     "--config", str(config)])
        assert code == 2
        assert "unknown config keys" in capsys.readouterr().err


class TestSequentialRun:
    def test_cell_table_printed(self, tmp_path, capsys):
        table, items = tabled_world(num_real=4, num_fake=2)
        facts = tmp_path / "facts.json"
        write_facts(facts, table)
        for item in items:
            item.evidence = [item.claim]
        dataset = tmp_path / "claims.jsonl"
        save_dataset(items, str(dataset))
        out = tmp_path / "cells.json"
        code = main(["sequential-run", "--dataset", str(dataset),
                     "--subsets", "2", "--backend", "oracle",
                     "--facts", str(facts), "--n", "3", "--height", "3",
                     "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "subset2+kg1" in printed
        cells = json.loads(out.read_text())
        assert [c["setting"] for c in cells] == \
            ["subset1", "subset2", "subset2+kg1"]
