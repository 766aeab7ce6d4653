import sys
from pathlib import Path

import pytest

from mrrefine.analyser import preprocess
from mrrefine.arm import BACKENDS
from mrrefine.fuzz import FuzzConfig, Mode, generate
from mrrefine.harness import SutAdapter, run_campaign
from mrrefine.relations import default_mr_set

ROOT = Path(__file__).resolve().parents[1]
CALC_SH = ROOT / "scripts" / "calc.sh"
PY_CALC = f"{sys.executable} -m mrrefine.calculator_cli"

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def exhaustive_corpus():
    return generate(FuzzConfig(domain_min=0, domain_max=9, mode=Mode.EXHAUSTIVE))


@pytest.fixture(scope="session")
def mrs_k5():
    return default_mr_set(5)


@pytest.fixture(scope="session")
def calc_log(exhaustive_corpus, mrs_k5):
    return run_campaign(exhaustive_corpus, mrs_k5, SutAdapter())


@pytest.fixture(scope="session")
def clean_log(calc_log, mrs_k5):
    return preprocess(calc_log, mrs_k5)


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return request.param


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
