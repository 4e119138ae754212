"""
Test suite for the forgery Monte Carlo
"""

import pytest

from qsba.errors import PreconditionError
from qsba.forgery import ForgeryReport, forge_once, forgery_bound, forgery_monte_carlo
from qsba.gf2hash import BitString


class TestBound:
    def test_values(self):
        assert forgery_bound(16, 8) == pytest.approx(24 / 256)
        assert forgery_bound(1000, 8) == 1.0

    def test_within_bound_allows_three_sigma(self):
        report = ForgeryReport(
            mode="full", l=8, message_bits=16, trials=100, successes=12, rate=0.12,
            bound=0.1, sigma=0.01,
        )
        assert report.within_bound
        assert not report.model_copy(update={"rate": 0.14}).within_bound


class TestForgeOnce:
    def test_unchanged_message_passes(self):
        message = BitString.from_hex("deadbeef")
        assert forge_once(message, message, 16, seed=3)

    def test_substitute_is_rejected(self):
        message = BitString.from_hex("deadbeef")
        substitute = BitString.from_hex("00000000")
        accepted = sum(forge_once(message, substitute, 16, seed=s) for s in range(20))
        assert accepted <= 1


class TestMonteCarlo:
    def test_full_mode(self):
        report = forgery_monte_carlo(8, 16, 300, seed=1)
        assert report.mode == "full"
        assert report.trials == 300
        assert report.successes == round(report.rate * 300)
        assert report.within_bound

    def test_full_mode_is_seeded(self):
        a = forgery_monte_carlo(8, 16, 50, seed=4)
        b = forgery_monte_carlo(8, 16, 50, seed=4)
        assert a == b

    def test_sparse_mode(self):
        report = forgery_monte_carlo(24, 100_000, 500, seed=2, sparse_window=32)
        assert report.mode == "sparse"
        assert report.sparse_window == 32
        assert report.within_bound

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(l=8, message_bits=16, trials=0),
            dict(l=8, message_bits=0, trials=5),
            dict(l=8, message_bits=16, trials=5, sparse_window=17),
            dict(l=8, message_bits=16, trials=5, sparse_window=0),
        ],
    )
    def test_bad_sizes(self, kwargs):
        with pytest.raises(PreconditionError):
            forgery_monte_carlo(**kwargs)
