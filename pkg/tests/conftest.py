import os

import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--acceptance-seeds", type=int,
        default=int(os.environ.get("ACCEPTANCE_SEEDS", "500")),
        help="Monte-Carlo seeds for the anchor/comparison criteria")
    parser.addoption(
        "--acceptance-workers", type=int,
        default=int(os.environ.get("ACCEPTANCE_WORKERS",
                                   str(min(2, os.cpu_count() or 1)))),
        help="Process workers for acceptance sweeps")
    parser.addoption(
        "--acceptance-out",
        default=os.environ.get("ACCEPTANCE_OUT", ""),
        help="Directory for acceptance sweep CSVs (default: a tmp dir)")


@pytest.fixture(scope="session")
def acceptance_options(request, tmp_path_factory):
    out = request.config.getoption("--acceptance-out")
    if not out:
        out = str(tmp_path_factory.mktemp("acceptance"))
    os.makedirs(out, exist_ok=True)
    return {
        "seeds": request.config.getoption("--acceptance-seeds"),
        "workers": request.config.getoption("--acceptance-workers"),
        "out_dir": out,
    }
