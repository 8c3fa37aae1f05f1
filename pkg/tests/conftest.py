"""Shared fixtures.

Simulation runs are memoized per session keyed by their override list, so
module tests and the acceptance suite can share the expensive ones.
"""

import numpy as np
import pytest

from xrsim import macsim
from xrsim.config import load_config

_RUN_CACHE = {}


@pytest.fixture(scope="session")
def run_cached():
    def _run(*overrides, collect=False):
        key = (tuple(overrides), collect)
        if key not in _RUN_CACHE:
            cfg = load_config(overrides=list(overrides))
            _RUN_CACHE[key] = macsim.run(cfg, collect_events=collect)
        return _RUN_CACHE[key]

    return _run


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
