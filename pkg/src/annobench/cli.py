"""Command-line interface: train, tag, evaluate, serve."""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import corpus_io
from .demo import build_demo_corpus
from .evaluation import (
    cross_validate_functions,
    cross_validate_phrases,
    make_fold_plan,
    render_report,
    report_to_dict,
)
from .phrase import decode_phrase
from .service import Workbench, create_app
from .tagger import DEFAULT_THETA1, DEFAULT_THETA2, decode, train
from .treebank import ordered_daughters


def _load_corpus(path: str):
    try:
        return corpus_io.parse_corpus(Path(path).read_bytes())
    except (OSError, corpus_io.CorpusIOError) as exc:
        raise click.ClickException(f"cannot read corpus {path}: {exc}")


def _load_models(path: str):
    try:
        return corpus_io.load_model(Path(path).read_bytes())
    except (OSError, corpus_io.CorpusIOError) as exc:
        raise click.ClickException(f"cannot read model archive {path}: {exc}")


theta1_option = click.option("--theta1", default=DEFAULT_THETA1,
                             show_default=True,
                             help="reliable/marked boundary ratio")
theta2_option = click.option("--theta2", default=DEFAULT_THETA2,
                             show_default=True,
                             help="marked/unreliable boundary ratio")


@click.group()
def main():
    """Treebank annotation workbench."""


@main.command("train")
@click.option("--corpus", required=True, help="corpus file to train on")
@click.option("--model", required=True, help="where to write the archive")
def train_command(corpus, model):
    """Train per-category models and write a model archive."""
    data = _load_corpus(corpus)
    models = train(data)
    archive = corpus_io.make_archive(models, data.tagsets, data)
    Path(model).write_bytes(corpus_io.save_model(archive))
    click.echo(f"trained {len(models)} category models "
               f"({', '.join(sorted(models))}) -> {model}")


@main.command("tag-functions")
@click.option("--corpus", required=True, help="corpus with gold structure")
@click.option("--model", required=True, help="trained model archive")
@theta1_option
@theta2_option
def tag_functions_command(corpus, model, theta1, theta2):
    """Re-tag every phrase's functions given gold category and daughters.

    One TSV line per daughter: sentence, node, category, daughter label,
    gold function, predicted function, grade, ratio.
    """
    data = _load_corpus(corpus)
    archive = _load_models(model)
    for sentence in data.sentences:
        tree = sentence.tree
        for node in tree.nodes:
            labels, gold = ordered_daughters(node, tree)
            m = archive.models.get(node.category)
            if m is None:
                click.echo(f"# sentence {sentence.id} node {node.id}: "
                           f"no model for {node.category}", err=True)
                continue
            prediction = decode(m, labels, theta1, theta2)
            for label, g, outcome in zip(labels, gold, prediction.positions):
                ratio = "inf" if outcome.ratio == float("inf") \
                    else f"{outcome.ratio:.3f}"
                click.echo("\t".join([
                    str(sentence.id), str(node.id), node.category, label,
                    g, outcome.label, outcome.grade.value, ratio]))


@main.command("tag-phrase")
@click.option("--corpus", required=True, help="corpus with gold structure")
@click.option("--model", required=True, help="trained model archive")
@theta1_option
@theta2_option
def tag_phrase_command(corpus, model, theta1, theta2):
    """Re-tag every phrase's category given its gold daughters.

    One TSV line per phrase: sentence, node, gold category, predicted
    category, grade, ratio, functions.
    """
    data = _load_corpus(corpus)
    archive = _load_models(model)
    for sentence in data.sentences:
        tree = sentence.tree
        for node in tree.nodes:
            labels, _gold = ordered_daughters(node, tree)
            prediction = decode_phrase(archive.models, labels, theta1, theta2)
            ratio = "inf" if prediction.category_ratio == float("inf") \
                else f"{prediction.category_ratio:.3f}"
            click.echo("\t".join([
                str(sentence.id), str(node.id), node.category,
                prediction.category, prediction.category_grade.value, ratio,
                " ".join(prediction.functions)]))


@main.command("eval")
@click.option("--corpus", required=True, help="corpus to cross-validate")
@click.option("--task", type=click.Choice(["functions", "phrases", "both"]),
              default="both", show_default=True)
@click.option("--folds", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@theta1_option
@theta2_option
@click.option("--json", "as_json", is_flag=True,
              help="machine-readable output")
def eval_command(corpus, task, folds, seed, theta1, theta2, as_json):
    """Cross-validate tagging accuracy and print report tables."""
    data = _load_corpus(corpus)
    plan = make_fold_plan(data, folds=folds, seed=seed)
    reports = []
    if task in ("functions", "both"):
        reports.append(cross_validate_functions(data, plan, theta1, theta2))
    if task in ("phrases", "both"):
        reports.append(cross_validate_phrases(data, plan, theta1, theta2))
    if as_json:
        click.echo(json.dumps([report_to_dict(r) for r in reports], indent=2))
    else:
        click.echo("\n".join(render_report(r) for r in reports))


@main.command("serve")
@click.option("--corpus", required=True, help="corpus file to annotate")
@click.option("--model", default=None,
              help="model archive (omit to start untrained)")
@click.option("--port", default=8765, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@theta1_option
@theta2_option
@click.option("--autosave/--no-autosave", default=True, show_default=True,
              help="write the corpus file back after every commit")
def serve_command(corpus, model, port, host, theta1, theta2, autosave):
    """Run the annotation service over HTTP."""
    import uvicorn

    data = _load_corpus(corpus)
    models = None
    if model is not None:
        archive = _load_models(model)
        if archive.tagsets != data.tagsets:
            raise click.ClickException(
                "model archive was trained against different tagsets")
        models = archive.models
    workbench = Workbench(
        data, models, theta1=theta1, theta2=theta2,
        autosave_path=Path(corpus) if autosave else None)
    app = create_app(workbench)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("demo-corpus")
@click.option("--out", required=True, help="where to write the corpus")
def demo_corpus_command(out):
    """Write the built-in demonstration corpus."""
    Path(out).write_bytes(corpus_io.serialize_corpus(build_demo_corpus()))
    click.echo(f"wrote demo corpus to {out}")


if __name__ == "__main__":
    main()
