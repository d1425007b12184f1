import numpy as np
import pytest

from ftsfa.pulse import PulseParams
from ftsfa.tdse import TdseConfig, build_basis, cep_scan_tdse, load_basis, save_basis

SCAN_CEPS = np.linspace(0, np.pi, 16, endpoint=False)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the multi-hour TDSE CEP-scan acceptance checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow suite; pass --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def pulse2():
    return PulseParams.from_intensity(1.5e14, 800, 2)


@pytest.fixture(scope="session")
def pulse3():
    return PulseParams.from_intensity(1.5e14, 800, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_basis(request):
    """Default-resolution TDSE basis, cached between sessions in the pytest cache."""
    config = TdseConfig()
    path = request.config.cache.mkdir("ftsfa") / "basis_default.npz"
    if path.exists():
        try:
            return load_basis(path, config)
        except ValueError:
            pass
    basis = build_basis(config)
    save_basis(basis, path)
    return basis


@pytest.fixture(scope="session")
def tdse_scans(default_basis):
    """16-point TDSE CEP scans over one CEP period, per pulse length."""
    scans = {}

    def get(cycles):
        if cycles not in scans:
            pulse = PulseParams.from_intensity(1.5e14, 800, cycles)
            scans[cycles] = cep_scan_tdse(TdseConfig(), pulse, SCAN_CEPS, basis=default_basis)
        return scans[cycles]
    return get
