import pathlib

import numpy as np
import pytest

from interprofile.core import Sequence, assemble_observations

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

# acceptance results, printed once at the end of the session
ACCEPTANCE: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
            terminalreporter.write_line(ACCEPTANCE[key])


def random_sequences(rng, n_entities, n_seq, length=12, rate=0.3):
    return [Sequence(rng.integers(0, n_entities, size=length), rng.random(length) < rate)
            for _ in range(n_seq)]


def random_obs(rng, n_entities=3, n_seq=6, length=12, max_gap=4, skip_prefix=2):
    seqs = random_sequences(rng, n_entities, n_seq, length)
    return assemble_observations(seqs, max_gap, skip_prefix, n_entities)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixtures_dir():
    return FIXTURES
