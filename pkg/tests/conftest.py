from __future__ import annotations

import pytest

from flowdial.graph import build_graph
from flowdial.parser import parse

from support import PAPER_FIXTURES, read_fixture


@pytest.fixture(scope="session")
def sources() -> dict[str, str]:
    names = PAPER_FIXTURES + ["mini_decision"]
    return {name: read_fixture(name) for name in names}


@pytest.fixture(scope="session")
def asts(sources):
    return {name: parse(src) for name, src in sources.items()}


@pytest.fixture(scope="session")
def graphs(asts):
    return {name: build_graph(ast) for name, ast in asts.items()}
