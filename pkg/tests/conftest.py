"""
Shared fixtures: a small field and a seeded random source.
"""

import random

import pytest

from dcap.config import seed_from_env
from dcap.padic import GlobalField


@pytest.fixture
def fld() -> GlobalField:
    return GlobalField(p=5, deg_cap=12, op_cap=8, n_max=4)


@pytest.fixture
def rng() -> random.Random:
    """Seeded by DCAP_SEED (default 0)."""
    return random.Random(seed_from_env())
