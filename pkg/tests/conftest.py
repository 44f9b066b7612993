import pathlib

import pytest

from symrtlo.parser import parse_file

FIXTURES = pathlib.Path(__file__).parent.parent / "fixtures"

ALL_FIXTURES = sorted(p.name for p in FIXTURES.glob("*.v"))

# raw/optimized golden pairs
GOLDEN_PAIRS = [
    ("dead_code_raw.v", "dead_code_expected.v"),
    ("subexpr_raw.v", "subexpr_expected.v"),
    ("algebraic_raw.v", "algebraic_expected.v"),
]

# data-flow fixtures where goal=area must strictly reduce cell count
STRICT_DATAFLOW = [
    "dead_code_raw.v",
    "subexpr_raw.v",
    "algebraic_raw.v",
    "const_fold.v",
    "strength_reduce.v",
    "zero_mult.v",
]


def fixture_path(name: str) -> pathlib.Path:
    return FIXTURES / name


def load(name: str):
    return parse_file(fixture_path(name))


@pytest.fixture
def fixtures_dir():
    return FIXTURES
