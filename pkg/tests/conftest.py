import pytest

from domdedup.corpus import CorpusSpec, generate_corpus

_criteria: dict[str, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    detail = getattr(item, "criterion_detail", "")
    if call.excinfo is None:
        outcome = "PASS"
    else:
        outcome = "FAIL"
        if not detail:
            detail = call.excinfo.exconly().splitlines()[0][:160]
    _criteria[item.nodeid] = (str(number), title, f"{outcome}  {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, line in sorted(_criteria.values(), key=lambda r: (int(r[0].rstrip("ab")), r[0])):
        terminalreporter.write_line(f"[{number:>3}] {title:<34} {line}")


@pytest.fixture
def detail(request):
    """Attach a one-line result summary to the running acceptance test."""

    def set_detail(text: str) -> None:
        request.node.criterion_detail = text
        print(text)

    return set_detail


@pytest.fixture(scope="session")
def default_corpus():
    return generate_corpus(CorpusSpec(), seed=0)


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(CorpusSpec(templates=4, variants=5, min_tokens=200, max_tokens=300), seed=7)
