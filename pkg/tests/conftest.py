"""Shared fixtures for the QSBA test suite."""

import numpy as np
import pytest

from qsba.gf2hash import BitString
from qsba.keystore import KeyStore, PoolCapacities, derive_rng
from qsba.ledger import ResourceLedger
from qsba.protocol import ProtocolParams


@pytest.fixture
def rng() -> np.random.Generator:
    return derive_rng(1234)


@pytest.fixture
def ledger() -> ResourceLedger:
    return ResourceLedger()


@pytest.fixture
def small_pools() -> PoolCapacities:
    return PoolCapacities(commander_lieutenant=100_000, lieutenant_lieutenant=100_000)


@pytest.fixture
def store5(ledger, small_pools) -> KeyStore:
    return KeyStore(5, seed=7, capacities=small_pools, ledger=ledger)


@pytest.fixture
def command() -> BitString:
    return BitString.from_hex("41545441434b")


@pytest.fixture
def params52() -> ProtocolParams:
    return ProtocolParams(n=5, m=2, l=16, default_command=BitString.zeros(8))
