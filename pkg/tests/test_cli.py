"""CLI smoke tests via click's runner."""

import json

from click.testing import CliRunner

from annobench.cli import main
from annobench.corpus_io import load_model, serialize_corpus
from annobench.demo import build_demo_corpus


def _write_corpus(path):
    path.write_bytes(serialize_corpus(build_demo_corpus()))
    return str(path)


def test_train_writes_loadable_archive(tmp_path):
    corpus = _write_corpus(tmp_path / "demo.export")
    model = tmp_path / "models.json"
    result = CliRunner().invoke(main, ["train", "--corpus", corpus,
                                       "--model", str(model)])
    assert result.exit_code == 0, result.output
    archive = load_model(model.read_bytes())
    assert set(archive.models) == {"AP", "NP", "PP", "S", "VP"}


def test_tag_functions_emits_tsv(tmp_path):
    corpus = _write_corpus(tmp_path / "demo.export")
    model = tmp_path / "models.json"
    runner = CliRunner()
    runner.invoke(main, ["train", "--corpus", corpus, "--model", str(model)])
    result = runner.invoke(main, ["tag-functions", "--corpus", corpus,
                                  "--model", str(model)])
    assert result.exit_code == 0, result.output
    rows = [line.split("\t") for line in result.output.splitlines() if line]
    assert all(len(r) == 8 for r in rows)
    grades = {r[6] for r in rows}
    assert grades <= {"reliable", "marked", "unreliable"}


def test_tag_phrase_emits_tsv(tmp_path):
    corpus = _write_corpus(tmp_path / "demo.export")
    model = tmp_path / "models.json"
    runner = CliRunner()
    runner.invoke(main, ["train", "--corpus", corpus, "--model", str(model)])
    result = runner.invoke(main, ["tag-phrase", "--corpus", corpus,
                                  "--model", str(model)])
    assert result.exit_code == 0, result.output
    rows = [line.split("\t") for line in result.output.splitlines() if line]
    assert all(len(r) == 7 for r in rows)
    # gold and predicted categories agree on this easy corpus
    assert all(r[2] == r[3] for r in rows)


def test_eval_renders_tables_and_json(tmp_path):
    corpus = _write_corpus(tmp_path / "demo.export")
    runner = CliRunner()
    result = runner.invoke(main, ["eval", "--corpus", corpus,
                                  "--task", "functions", "--folds", "3",
                                  "--seed", "1"])
    assert result.exit_code == 0, result.output
    assert "overall" in result.output
    as_json = runner.invoke(main, ["eval", "--corpus", corpus,
                                   "--task", "both", "--folds", "3",
                                   "--seed", "1", "--json"])
    docs = json.loads(as_json.output)
    assert [d["task"] for d in docs] == ["functions", "phrases"]


def test_demo_corpus_round_trips(tmp_path):
    out = tmp_path / "demo.export"
    result = CliRunner().invoke(main, ["demo-corpus", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert out.read_bytes() == serialize_corpus(build_demo_corpus())


def test_missing_corpus_is_a_clean_error(tmp_path):
    result = CliRunner().invoke(main, ["train", "--corpus",
                                       str(tmp_path / "nope.export"),
                                       "--model", str(tmp_path / "m.json")])
    assert result.exit_code != 0
    assert "cannot read corpus" in result.output
