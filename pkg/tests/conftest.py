import pytest


@pytest.fixture()
def api_key_env(monkeypatch):
    monkeypatch.setenv("PLANNER_API_KEY", "test-key-1")
    return "test-key-1"


def _criterion_name(nodeid: str) -> str:
    test = nodeid.split("::")[-1]
    return test.removeprefix("test_").replace("_", " ")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for category, tag in (("passed", "PASS"), ("failed", "FAIL"), ("skipped", "SKIP")):
        for rep in terminalreporter.stats.get(category, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if category != "skipped" and rep.when != "call":
                continue
            lines.append((nodeid, f"{tag}  {_criterion_name(nodeid)}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
