import pytest

_LINES: list[str] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion.

    Call with the criterion label and a detail string before asserting; the
    line is finalized from the test outcome and printed in the summary.
    """
    state = {}

    def record(label: str, detail: str):
        state["label"], state["detail"] = label, detail
        print(f"{label}: {detail}")

    yield record
    if "label" in state:
        rep = getattr(request.node, "rep_call", None)
        ok = rep is not None and rep.passed
        _LINES.append(f"{'PASS' if ok else 'FAIL'} {state['label']}: {state['detail']}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
