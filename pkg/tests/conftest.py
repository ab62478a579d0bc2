import numpy as np
import pytest

from cvtnet import _pykernels, dataset
from cvtnet.config import RunConfig
from cvtnet.pipeline import load_split

try:
    from cvtnet import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = [pytest.param(_pykernels, id="python"),
            pytest.param(_ckernels, id="cython",
                         marks=pytest.mark.skipif(_ckernels is None,
                                                  reason="compiled kernels not built"))]


@pytest.fixture(params=BACKENDS)
def kernels(request):
    return request.param


@pytest.fixture(scope="session")
def iris():
    return dataset.load_csv(dataset.iris_path(), "species")


@pytest.fixture(scope="session")
def iris_split():
    return load_split(RunConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)



# acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary
_criteria: dict[str, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion this test gates")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _criteria.setdefault(mark.args[0], []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, results in _criteria.items():
        status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  ({sum(results)}/{len(results)} checks)")
