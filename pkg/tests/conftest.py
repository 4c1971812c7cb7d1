import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
FIXTURES = TESTS_DIR / "fixtures"

# make `import oracles` work from any invocation directory
sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def default_lexicon():
    from biascope.lexicon import load_default_lexicon

    return load_default_lexicon()


# ----- acceptance criteria report: one PASS/FAIL line per criterion ---------

_ACCEPTANCE_OUTCOMES: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        if report.passed:
            _ACCEPTANCE_OUTCOMES[name] = "PASS"
        elif report.skipped:
            _ACCEPTANCE_OUTCOMES[name] = "SKIP"
        else:
            _ACCEPTANCE_OUTCOMES[name] = "FAIL"
    elif report.when == "setup" and report.skipped:
        _ACCEPTANCE_OUTCOMES[name] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_OUTCOMES:
        return
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        CRITERIA = {}
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in sorted(_ACCEPTANCE_OUTCOMES.items()):
        label = CRITERIA.get(name, name)
        terminalreporter.write_line(f"[{outcome}] {label}")
