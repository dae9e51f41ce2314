import pathlib

import pytest

from tmkit import parse

CORPUS = pathlib.Path(__file__).resolve().parents[1] / "src" / "tmkit" / "corpus"
GOLDEN = pathlib.Path(__file__).parent / "golden"


def load(name):
    return parse((CORPUS / name).read_text(encoding="utf-8"))


@pytest.fixture
def canary():
    return load("canary.tm")


@pytest.fixture
def parcels():
    return load("parcels.tm")


@pytest.fixture
def lute():
    return load("lute.tm")


@pytest.fixture
def zeno():
    return load("zeno.tm")


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(report, "user_properties", ()))
            if "criterion" in props and report.when == "call":
                lines.append((props["criterion"], f"criterion {props['criterion']}: {outcome.upper()[:4]} {props['title']}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
