from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest

from graphdyn.config import DEFAULT_CONFIG
from graphdyn.config import Config
from graphdyn.constructions import b1_base
from graphdyn.constructions import tent3
from graphdyn.graphcore import Catalog
from graphdyn.graphcore import TopoGraph
from graphdyn.plmap import PLMarkovMap


@pytest.fixture
def fixture_root() -> Path:
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def config() -> Config:
    return DEFAULT_CONFIG.with_overrides(samples=200)


@pytest.fixture
def arc() -> TopoGraph:
    return Catalog.arc()


@pytest.fixture
def theta() -> TopoGraph:
    return Catalog.theta()


@pytest.fixture
def sigma() -> TopoGraph:
    return Catalog.sigma()


@pytest.fixture
def tent3_map() -> PLMarkovMap:
    return tent3().map


@pytest.fixture
def b1_map() -> PLMarkovMap:
    return b1_base().map


@pytest.fixture
def epsilon() -> Fraction:
    return Fraction(1, 10)
