import numpy as np
import pytest

from darth_pum.ace.element import AnalogComputeElement
from darth_pum.ace.noise import NoiseConfig
from darth_pum.core.costs import CostTable
from darth_pum.dce.pipeline import DigitalPipeline
from darth_pum.hct.tile import HybridComputeTile
from darth_pum.hct.trace import EventTrace
from darth_pum.report.store import ResultStore
from darth_pum.runtime.chip import Chip, ChipConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def costs():
    return CostTable()


@pytest.fixture
def trace():
    return EventTrace()


@pytest.fixture
def pipeline(costs):
    return DigitalPipeline(0, depth=64, rows=64, cols=64, costs=costs)


@pytest.fixture
def ace(costs):
    return AnalogComputeElement(arrays=64, rows=64, cols=64, costs=costs, noise=NoiseConfig.off())


@pytest.fixture
def hct(costs, trace):
    return HybridComputeTile(0, costs, NoiseConfig.off(), trace=trace)


@pytest.fixture
def small_config():
    return ChipConfig(hct_count=16)


@pytest.fixture
def chip(small_config):
    return Chip(small_config)


@pytest.fixture
def store():
    store = ResultStore()
    yield store
    store.close()
