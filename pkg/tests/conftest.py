import pytest
from hypothesis import settings

from archvoids.fixtures import default_spec, generate
from archvoids.logs import LogStream, classify_all
from archvoids.soft404 import Soft404Model, amend

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

SAMPLE_LINE = ('172.17.0.1 - - [13/Nov/2020:19:01:18 +0000] "GET /favicon.ico HTTP/1.1" 200 238 '
        '"http://localhost/" "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 '
        '(KHTML, like Gecko) Chrome/87.0.4280.66 Safari/537.36"')


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    return generate(default_spec(), tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def raw_requests(corpus):
    return list(classify_all(LogStream(corpus.log_dir)))


@pytest.fixture(scope="session")
def amended_requests(raw_requests):
    stream, _ = amend(raw_requests, Soft404Model(3, 150))
    return list(stream)


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
