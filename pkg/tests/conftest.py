import pytest

_ACCEPTANCE: list[tuple[int, str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call":
        return
    detail = dict(item.user_properties).get("detail", "")
    verdict = "PASS" if rep.passed else "FAIL"
    _ACCEPTANCE.append((marker.args[0], marker.args[1], verdict, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, verdict, detail in sorted(_ACCEPTANCE):
        line = f"[{num:2d}] {verdict} {title}"
        terminalreporter.write_line(line + (f" | {detail}" if detail else ""))
