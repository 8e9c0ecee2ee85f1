import pytest

from rtface.synthetic import ActorSpec, PathSpec, Scenario

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion reported in the summary")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            item.user_properties.append(("acceptance", m.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "acceptance" not in props:
        return
    number, title = props["acceptance"]
    if report.when == "call" or report.failed:
        prev = _acceptance.get(number)
        ok = report.passed and (prev is None or prev[1])
        _acceptance[number] = (title, ok)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok = _acceptance[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}")


def still_actor(actor_id, x, y, size=40, age=30.0, gender="female", expression="neutral", **kw):
    return ActorSpec(
        actor_id,
        PathSpec(start=(x, y), velocity=kw.pop("velocity", (0.0, 0.0))),
        (size, size),
        age,
        gender,
        expression_timeline=((0.0, expression),),
        **kw,
    )


@pytest.fixture
def one_actor_scenario():
    return Scenario(duration=5000, actors=(still_actor("a", 100, 60),), seed=1)
