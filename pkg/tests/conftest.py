import pytest

from adaptrace.harness import corpus_script, corpus_text
from adaptrace.parser import parse_trace
from adaptrace.preprocess import prepare


def load(name):
    """Corpus script with its prepared (renamed, decorated) formula."""
    s = corpus_script(name)
    f, _ = prepare(s.formula, lint=False)
    return s, f


def trace(name, pids=()):
    return parse_trace(corpus_text(name + ".trace"), pids)


@pytest.fixture
def corpus():
    return load


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
