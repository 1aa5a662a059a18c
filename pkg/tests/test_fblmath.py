import math

import numpy as np
import pytest

from aoisched import fblmath
from aoisched.errors import DegenerateSnr
from aoisched.fblmath import FblPoint

from oracles import eps_mp, fd_hessian, q_by_quadrature

# Gaussian tail values from mpmath at 40 digits
Q_TABLE = [
    (1.0, 0.15865525393145705141),
    (3.0, 0.0013498980316300945267),
    (-2.0, 0.9772498680518207928),
    (0.5, 0.30853753872598689636),
    (8.0, 6.2209605742717841235e-16),
]

# (gamma, m_r, d) -> (omega, eps), mpmath at 40 digits
EPS_TABLE = [
    ((1.0, 200.0, 128), (4.0748565816495973011, 2.3021356787978704675e-05)),
    ((3.0, 100.0, 128), (5.154331174616243649, 1.2726887916695462856e-07)),
    ((0.5, 500.0, 128), (6.840582896544551483, 3.9435795422936772277e-12)),
]

# (z, m_c, m_r) at d=128 -> eps, (d/dm_c, d/dm_r), (cc, cr, rr); mpmath numerical derivatives
DERIV_TABLE = [
    ((1.0, 140.0, 120.0), 0.3380541005821102883,
     (-0.01720475635899395882, -0.0083799265479821806264),
     (0.00043885386949517520352, 0.00014802139373290548656, 0.00021679335890944643683)),
    ((0.2804439343254479997, 533.0, 149.5), 0.079815042006723193336,
     (-0.0019001811729842841379, -0.002241216637157287828),
     (0.000037043398911928460028, 0.000039229953810166965794, 0.000077654506983190290603)),
]


@pytest.mark.parametrize("x,expected", Q_TABLE)
def test_q_func_matches_high_precision(x, expected):
    assert fblmath.q_func(x) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("x", [-3.0, -0.7, 0.0, 0.3, 1.0, 2.5, 5.0, 7.5])
def test_q_func_matches_quadrature(x):
    assert fblmath.q_func(x) == pytest.approx(q_by_quadrature(x), rel=1e-10)


def test_q_inv_known_value_and_round_trip():
    assert fblmath.q_inv(0.1) == pytest.approx(1.281551565544600467, rel=1e-14)
    p = np.array([1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9])
    assert np.allclose(fblmath.q_func(fblmath.q_inv(p)), p, rtol=1e-12)
    assert fblmath.q_inv(0.5) == 0.0


def test_capacity_and_dispersion():
    assert fblmath.shannon_capacity(1.0) == pytest.approx(1.0)
    assert fblmath.shannon_capacity(3.0) == pytest.approx(2.0)
    assert fblmath.dispersion(1.0) == pytest.approx(0.75)
    # no cancellation at tiny SNR: 1 - (1+g)^-2 ~ 2g
    assert fblmath.dispersion(1e-12) == pytest.approx(2e-12, rel=1e-9)
    assert fblmath.normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))


@pytest.mark.parametrize("args,expected", EPS_TABLE)
def test_omega_and_eps_against_mpmath(args, expected):
    w, e = expected
    assert fblmath.omega(*args) == pytest.approx(w, rel=1e-12)
    assert fblmath.error_probability(*args) == pytest.approx(e, rel=1e-10)


@pytest.mark.parametrize("m_r,d", [(50.0, 128), (128.0, 128), (300.0, 64), (7.0, 32)])
def test_eps_is_half_on_capacity_boundary(m_r, d):
    gamma = 2.0 ** (d / m_r) - 1.0
    assert fblmath.omega(gamma, m_r, d) == pytest.approx(0.0, abs=1e-12)
    assert abs(fblmath.error_probability(gamma, m_r, d) - 0.5) <= 1e-12


def test_eps_clamped_to_open_unit_interval():
    assert fblmath.error_probability(1e6, 1e4, 8) == fblmath.EPS_FLOOR
    assert fblmath.error_probability(1e-9, 2.0, 1024) == 1.0 - fblmath.EPS_FLOOR
    assert fblmath.clamp_eps(0.0) == fblmath.EPS_FLOOR


@pytest.mark.parametrize("gamma", [0.0, -1.0])
def test_nonpositive_snr_raises(gamma):
    with pytest.raises(DegenerateSnr):
        fblmath.omega(gamma, 10.0, 128)
    with pytest.raises(DegenerateSnr):
        fblmath.error_probability(np.array([1.0, gamma]), 10.0, 128)


def test_broadcasting_and_scalar_return():
    g = np.array([0.5, 1.0, 3.0])
    out = fblmath.error_probability(g, 200.0, 128)
    assert out.shape == (3,)
    assert isinstance(fblmath.error_probability(1.0, 200.0, 128), float)
    assert np.all(np.diff(out) < 0)


def test_convexity_condition():
    # long block at moderate SNR satisfies both parts
    assert fblmath.convexity_condition(1.0, 200.0, 128)
    # rate bound fails when the coding rate is tiny and the SNR low
    bound = (16 - 18 * math.log(1.5)) / (87 - 12 * math.log(2))
    m = 128 / (0.5 * bound)
    assert not fblmath.convexity_condition(0.5, m, 128)
    assert fblmath.RATE_BOUND_AT_UNIT_SNR == pytest.approx((16 - 18 * math.log(2)) / (87 - 12 * math.log(2)))
    arr = fblmath.convexity_condition(np.array([1.0, 0.5]), np.array([200.0, m]), 128)
    assert arr.tolist() == [True, False]


@pytest.mark.parametrize("args,e,grad,hess", DERIV_TABLE)
def test_eps_derivatives_against_mpmath(args, e, grad, hess):
    z, mc, mr = args
    e_pkg, g_pkg, h_pkg = fblmath.eps_derivatives(z, mc, mr, 128)
    assert e_pkg == pytest.approx(e, rel=1e-10)
    assert np.allclose(g_pkg, grad, rtol=1e-8)
    assert np.allclose(h_pkg, hess, rtol=1e-7)


def test_eps_derivatives_against_finite_differences():
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 50:
        z = 10 ** rng.uniform(-1, 2)
        mr = 10 ** rng.uniform(1.5, 3)
        mc = mr * 10 ** rng.uniform(0, 1) / z
        if not -2.0 < fblmath.omega(z * mc / mr, mr, 128) < 6.0:
            continue
        checked += 1
        f = lambda a, b: fblmath.q_func(fblmath.omega(z * a / b, b, 128))
        _, _, h = fblmath.eps_derivatives(z, mc, mr, 128)
        fd = fd_hessian(f, mc, mr)
        scale = max(abs(v) for v in h) + 1e-300
        assert np.allclose(h, fd, rtol=1e-4, atol=1e-5 * scale)


def test_eps_matches_mpmath_on_random_points():
    rng = np.random.default_rng(11)
    for _ in range(20):
        z = 10 ** rng.uniform(-1, 1)
        mr = rng.uniform(60, 400)
        mc = rng.uniform(1, 4) * mr / z
        ref = eps_mp(z, mc, mr, 128)
        got = fblmath.q_func(fblmath.omega(z * mc / mr, mr, 128))
        assert got == pytest.approx(ref, rel=1e-9, abs=1e-300)


def test_fbl_point():
    p = FblPoint(1.0, 200.0, 128)
    assert p.rate == 0.64
    assert p.error_probability() == pytest.approx(EPS_TABLE[0][1][1], rel=1e-10)
    assert p.convexity_condition()
    with pytest.raises(DegenerateSnr):
        FblPoint(0.0, 10.0, 128)
    with pytest.raises(ValueError):
        FblPoint(1.0, -1.0, 128)
    with pytest.raises(ValueError):
        FblPoint(1.0, 10.0, 12.5)
