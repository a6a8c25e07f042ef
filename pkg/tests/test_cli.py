import json

import pytest
from helpers import write_corpus, write_embeddings

from textdiv import (
    MetricSpec,
    harmonic_mean_p,
    load_corpus,
    pairwise_matrix,
    trm_statistic,
)
from textdiv.cli import main

RECORDS = [
    {
        "id": "i1",
        "candidates": ["a man runs", "a man walks"],
        "references": ["a man is running", "a person runs"],
    },
    {
        "id": "i2",
        "candidates": ["the sun sets", "the sun rises"],
        "references": ["the sun is setting", "sunset over water"],
    },
]

ALL_TEXTS = sorted({t for r in RECORDS for t in r["candidates"] + r["references"]})


@pytest.fixture
def corpus_path(tmp_path):
    return write_corpus(tmp_path / "corpus.jsonl", RECORDS)


@pytest.fixture
def embeddings_path(tmp_path):
    return write_embeddings(tmp_path / "emb.ndjson", ALL_TEXTS)


class TestValidate:
    def test_corpus_only(self, corpus_path, capsys):
        assert main(["validate", "--corpus", corpus_path]) == 0
        out = capsys.readouterr().out
        assert "instances: 2" in out

    def test_with_complete_embeddings(self, corpus_path, embeddings_path, capsys):
        rc = main(["validate", "--corpus", corpus_path, "--embeddings", embeddings_path])
        assert rc == 0
        assert "all corpus texts have embeddings" in capsys.readouterr().out

    def test_missing_embeddings_fail(self, corpus_path, tmp_path, capsys):
        partial = write_embeddings(tmp_path / "partial.ndjson", ALL_TEXTS[:3])
        rc = main(["validate", "--corpus", corpus_path, "--embeddings", partial])
        assert rc == 1
        assert "missing embeddings" in capsys.readouterr().err

    def test_malformed_corpus(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "a"}\n')
        rc = main(["validate", "--corpus", str(bad)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_absent_file(self, tmp_path, capsys):
        rc = main(["validate", "--corpus", str(tmp_path / "nope.jsonl")])
        assert rc == 1


class TestScore:
    def test_values_match_library(self, corpus_path, tmp_path, capsys):
        out = tmp_path / "report.json"
        rc = main(
            [
                "score",
                "--corpus", corpus_path,
                "--statistic", "trm",
                "--metric", "meteor_lite",
                "--out", str(out),
            ]
        )
        assert rc == 0
        report = json.loads(out.read_text())
        corpus = load_corpus(corpus_path)
        spec = MetricSpec(kind="meteor_lite")
        for inst, row in zip(corpus, report["instances"]):
            assert row["id"] == inst.instance_id
            expected = trm_statistic(pairwise_matrix(inst, spec)).q
            assert row["value"] == pytest.approx(expected, rel=1e-12)
        values = [row["value"] for row in report["instances"]]
        assert report["aggregates"]["mean_value"] == pytest.approx(
            sum(values) / len(values)
        )
        # wall-clock info goes to stderr, never into the report
        assert "wall_seconds" in capsys.readouterr().err
        assert "wall_seconds" not in out.read_text()

    def test_config_echo_excludes_scheduling_knobs(self, corpus_path, tmp_path):
        out = tmp_path / "report.json"
        main(
            [
                "score",
                "--corpus", corpus_path,
                "--statistic", "trm",
                "--metric", "meteor_lite",
                "--threads", "3",
                "--out", str(out),
            ]
        )
        config = json.loads(out.read_text())["config"]
        assert "threads" not in config
        assert "out" not in config
        assert config["statistic"] == "trm"
        assert config["metric"] == "meteor_lite"

    def test_thread_count_does_not_change_bytes(self, corpus_path, tmp_path):
        outs = []
        for threads in ("1", "4"):
            out = tmp_path / f"report_{threads}.json"
            rc = main(
                [
                    "score",
                    "--corpus", corpus_path,
                    "--statistic", "trm",
                    "--metric", "meteor_lite",
                    "--threads", threads,
                    "--out", str(out),
                ]
            )
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_stdout_report_is_pure_json(self, corpus_path, capsys):
        rc = main(
            [
                "score",
                "--corpus", corpus_path,
                "--statistic", "mean_agg",
                "--metric", "rouge_l",
            ]
        )
        assert rc == 0
        captured = capsys.readouterr()
        report = json.loads(captured.out)
        assert len(report["instances"]) == 2

    def test_embedding_statistic_requires_embeddings(self, corpus_path, capsys):
        rc = main(
            ["score", "--corpus", corpus_path, "--statistic", "frechet"]
        )
        assert rc == 1
        assert "requires --embeddings" in capsys.readouterr().err

    def test_frechet_runs_with_embeddings(self, corpus_path, embeddings_path, tmp_path):
        out = tmp_path / "report.json"
        rc = main(
            [
                "score",
                "--corpus", corpus_path,
                "--statistic", "frechet",
                "--embeddings", embeddings_path,
                "--out", str(out),
            ]
        )
        assert rc == 0
        report = json.loads(out.read_text())
        assert all(row["value"] >= 0.0 for row in report["instances"])


class TestPvalue:
    def run_pvalue(self, corpus_path, out, extra=()):
        return main(
            [
                "pvalue",
                "--corpus", corpus_path,
                "--statistic", "trm",
                "--metric", "meteor_lite",
                "--out", str(out),
                *extra,
            ]
        )

    def test_exact_report_shape(self, corpus_path, tmp_path):
        out = tmp_path / "report.json"
        assert self.run_pvalue(corpus_path, out) == 0
        report = json.loads(out.read_text())
        rows = report["instances"]
        assert [r["id"] for r in rows] == ["i1", "i2"]
        for row in rows:
            assert 0.0 < row["p"] <= 1.0
            assert row["mode"] == "exact"
            assert row["evaluations"] == 6  # C(4, 2)
        assert report["aggregates"]["hmp"] == pytest.approx(
            harmonic_mean_p([r["p"] for r in rows]), rel=1e-12
        )
        assert report["config"]["mode"] == "exact"
        assert report["config"]["seed"] == 0

    def test_repeat_runs_are_byte_identical(self, corpus_path, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        self.run_pvalue(corpus_path, a)
        self.run_pvalue(corpus_path, b, extra=("--threads", "4"))
        assert a.read_bytes() == b.read_bytes()

    def test_montecarlo_seed_in_echo_and_reproducible(self, corpus_path, tmp_path):
        a, b, c = (tmp_path / n for n in ("a.json", "b.json", "c.json"))
        mc = ("--mode", "montecarlo", "--samples", "300", "--seed", "5")
        self.run_pvalue(corpus_path, a, extra=mc)
        self.run_pvalue(corpus_path, b, extra=mc)
        self.run_pvalue(corpus_path, c, extra=("--mode", "montecarlo", "--samples", "300", "--seed", "6"))
        assert a.read_bytes() == b.read_bytes()
        assert json.loads(a.read_text())["config"]["seed"] == 5
        assert json.loads(c.read_text())["config"]["seed"] == 6

    def test_exact_limit_exceeded_suggests_montecarlo(self, tmp_path, capsys):
        recs = [
            {
                "id": "big",
                "candidates": [f"cand number {i} ok" for i in range(5)],
                "references": [f"ref number {i} ok" for i in range(5)],
            }
        ]
        path = write_corpus(tmp_path / "big.jsonl", recs)
        rc = main(
            [
                "pvalue",
                "--corpus", path,
                "--statistic", "trm",
                "--metric", "meteor_lite",
                "--exact-limit", "100",
            ]
        )
        assert rc == 1
        assert "montecarlo" in capsys.readouterr().err

    def test_metric_flag_validation(self, corpus_path, capsys):
        rc = main(
            ["pvalue", "--corpus", corpus_path, "--statistic", "trm"]
        )
        assert rc == 1
        assert "requires --metric" in capsys.readouterr().err
        rc = main(
            [
                "pvalue",
                "--corpus", corpus_path,
                "--statistic", "mmd",
                "--metric", "bleu",
            ]
        )
        assert rc == 1
        assert "does not apply" in capsys.readouterr().err


class TestSensitivity:
    def test_curve_csv(self, corpus_path, tmp_path):
        out = tmp_path / "curve.csv"
        rc = main(
            [
                "sensitivity",
                "--corpus", corpus_path,
                "--statistic", "trm",
                "--metric", "meteor_lite",
                "--k-max", "2",
                "--out", str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "k,hmp,log10_hmp"
        assert len(lines) == 3
        assert lines[1].startswith("1,")
        assert lines[2].startswith("2,")

    def test_k_max_too_large(self, corpus_path, capsys):
        rc = main(
            [
                "sensitivity",
                "--corpus", corpus_path,
                "--statistic", "trm",
                "--metric", "meteor_lite",
                "--k-max", "9",
            ]
        )
        assert rc == 1
        assert "fewer than k_max" in capsys.readouterr().err


class TestDistances:
    def test_matrix_csv(self, corpus_path, tmp_path):
        out = tmp_path / "mat.csv"
        rc = main(
            [
                "distances",
                "--corpus", corpus_path,
                "--metric", "rouge_l",
                "--instance", "i1",
                "--out", str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith(",a man runs,")
        assert len(lines) == 5  # header + 4 joint texts

    def test_unknown_instance(self, corpus_path, capsys):
        rc = main(
            [
                "distances",
                "--corpus", corpus_path,
                "--metric", "rouge_l",
                "--instance", "missing",
            ]
        )
        assert rc == 1
        assert "missing" in capsys.readouterr().err

    def test_embedding_metric_needs_table(self, corpus_path, capsys):
        rc = main(
            [
                "distances",
                "--corpus", corpus_path,
                "--metric", "embedding_cosine",
                "--instance", "i1",
            ]
        )
        assert rc == 1
        assert "--embeddings" in capsys.readouterr().err


class TestTopLevel:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.strip()

    def test_missing_subcommand(self, capsys):
        with pytest.raises(SystemExit):
            main([])
