import math

import numpy as np
import pytest

from aoisched.aoimodel import (UpdateRound, aoi_from_durations, avg_aoi, event_area, event_probability,
                               series_aoi)
from aoisched.errors import DivergentAoI
from aoisched import fblmath

# infinite series sum_k eps^(k-1) (1-eps) (k + 1/2) M, mpmath nsum at 40 digits
SERIES_TABLE = [
    (100.0, 0.3, 192.85714285714285488),
    (7.0, 0.9, 73.500000000000015543),
]


@pytest.mark.parametrize("M,eps,expected", SERIES_TABLE)
def test_closed_form_matches_series(M, eps, expected):
    assert avg_aoi(M, eps) == pytest.approx(expected, rel=1e-14)
    assert series_aoi(M, eps) == pytest.approx(expected, rel=1e-12)


def test_error_free_round_is_one_and_a_half_rounds():
    assert avg_aoi(10.0, 0.0) == 15.0
    assert series_aoi(10.0, 0.0) == 15.0


def test_half_error_probability():
    assert avg_aoi(4.0, 0.5) == pytest.approx(10.0)


def test_event_probabilities_sum_to_one():
    k = np.arange(1, 400)
    assert math.fsum(event_probability(0.9, k)) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        event_probability(0.1, 0)
    assert event_area(2.0, 1) == 6.0


def test_divergence_guard():
    with pytest.raises(DivergentAoI):
        avg_aoi(1.0, 1.0)
    with pytest.raises(DivergentAoI):
        avg_aoi(1.0, np.array([0.1, 1.0 - 1e-16]))


def test_vectorized():
    out = avg_aoi(np.array([1.0, 2.0]), np.array([0.0, 0.5]))
    assert out.tolist() == [1.5, 5.0]


def test_from_durations():
    z, mc, mr = 0.5, 300.0, 150.0
    eps = fblmath.error_probability(z * mc / mr, mr, 128)
    assert aoi_from_durations(z, mc, mr, 128) == pytest.approx(avg_aoi(450.0, eps))


def test_update_round():
    r = UpdateRound(m_c=3.0, m_r=2.0, eps=0.2)
    assert r.M == 5.0
    assert r.avg_aoi == pytest.approx(5.0 * (0.5 + 1.25))
    with pytest.raises(ValueError):
        UpdateRound(1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        UpdateRound(1.0, 1.0, 1.0)
