"""Shared fixtures and the acceptance-criteria summary reporter."""

from __future__ import annotations

from pathlib import Path

import pytest

from capsieve import (
    Lexicon,
    PipelineConfig,
    build_vocabulary,
    load_corpus,
    prepare_corpus,
)

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "capsieve" / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def lexicon() -> Lexicon:
    return Lexicon.load()


@pytest.fixture(scope="session")
def toy_corpus(data_dir):
    return load_corpus(data_dir / "toy_corpus.jsonl")


@pytest.fixture(scope="session")
def prepared_toy(toy_corpus, lexicon):
    prepared, _ = prepare_corpus(toy_corpus, lexicon, PipelineConfig())
    return prepared


@pytest.fixture(scope="session")
def toy_vocab(prepared_toy):
    return build_vocabulary(prepared_toy)


# ---------------------------------------------------------------------------
# acceptance summary: one pass/fail line per criterion at the end of the run
# ---------------------------------------------------------------------------

_STATUS_RANK = {"PASS": 0, "SKIP": 1, "FAIL": 2}
_criteria: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(cid, title): tags a test as an acceptance criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    cid, title = marker.args
    status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
    previous = _criteria.get(cid)
    if previous is None or _STATUS_RANK[status] > _STATUS_RANK[previous[0]]:
        _criteria[cid] = (status, title)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_criteria):
        status, title = _criteria[cid]
        terminalreporter.write_line(f"[{status}] {cid}: {title}")
