import hashlib
from pathlib import Path

import numpy as np
import pytest
import torch

from patentminer.cli import main
from patentminer.synthetic import FIXTURE_TOPICS, RELEVANT_TOPICS

torch.set_num_threads(1)

FIXTURE = Path(__file__).parent / "fixtures" / "pipeline"
PRIMARY_OUTPUTS = (
    "section_texts.jsonl", "sections.jsonl", "vocab.tsv", "truncation.json", "bow.jsonl", "topic_sweep.tsv",
    "lda.json", "doc_topics.tsv", "keywords.tsv", "cluster_sweep.tsv", "kmeans.json", "assignments.tsv",
    "cluster_quality.tsv", "labels_template.tsv", "relevant_sections.jsonl", "ner_train.tsv", "ner_dev.tsv",
    "ner_test.tsv", "tagger.json", "ner_history.tsv", "tagging.jsonl", "ner_token_prf.tsv",
    "ner_entity_prf.tsv", "ner_confusion.tsv",
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def mark_relevant(template: Path, out: Path) -> None:
    """Stand-in for the human labeling step: flag clusters whose keywords name a relevant topic."""
    cues = {w for t in RELEVANT_TOPICS for w in FIXTURE_TOPICS[t][:3]}
    lines, keywords = [], ""
    for line in template.read_text(encoding="utf-8").splitlines():
        if line.startswith("# cluster "):
            keywords = line
        elif not line.startswith("#"):
            cid, topic, label, _ = line.split("\t")
            line = "\t".join([cid, topic, label, "1" if cues & set(keywords.split()) else "0"])
        lines.append(line)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_pipeline(out_dir: Path) -> None:
    """Every stage in order, with the labeling stand-in between label-template and filter-sections."""
    base = ["--config", str(FIXTURE / "pipeline.cfg"), "--out-dir", str(out_dir)]
    steps = [
        ["ingest", "--input", str(FIXTURE / "documents.jsonl")],
        ["build-vocab"], ["vectorize"], ["sweep-topics"], ["train-lda"], ["keywords"],
        ["sweep-clusters"], ["train-kmeans"], ["label-template"],
        None,
        ["filter-sections"],
        ["ner-train", "--annotations", str(FIXTURE / "annotations.tsv")],
        ["ner-tag"], ["ner-eval"],
    ]
    for step in steps:
        if step is None:
            mark_relevant(out_dir / "labels_template.tsv", out_dir / "labels.tsv")
            continue
        code = main(base + step)
        assert code == 0, f"{step[0]} exited with {code}"


def digests(out_dir: Path) -> dict[str, str]:
    return {name: hashlib.sha256((out_dir / name).read_bytes()).hexdigest() for name in PRIMARY_OUTPUTS}


@pytest.fixture(scope="session")
def pipeline_runs(tmp_path_factory):
    """The full fixture pipeline run twice with the same seed."""
    dirs = [tmp_path_factory.mktemp(f"run{i}") for i in range(2)]
    for d in dirs:
        run_pipeline(d)
    return dirs


_CRITERIA: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, text = mark.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        detail = getattr(item, "measured", "")
        _CRITERIA[number] = (status, text + (f" [{detail}]" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, text = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {text}")
