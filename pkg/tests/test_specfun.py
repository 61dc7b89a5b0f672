import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from services import specfun
from services.errors import DomainError, PoleError, SignedZeroError


@given(st.floats(min_value=0.0, max_value=6.0), st.floats(min_value=0.05, max_value=40.0))
def test_wronskian_holds_for_scaled_pairs(nu, x):
    pair, upper = specfun.ik_scaled(nu, x), specfun.ik_scaled(nu + 1.0, x)
    value = pair.i_scaled * upper.k_scaled + upper.i_scaled * pair.k_scaled
    assert value * x == pytest.approx(1.0, rel=1e-11)


def test_negative_order_i_uses_reflection():
    pair = specfun.ik_scaled(-0.3, 1.2)
    assert pair.i == pytest.approx(special.iv(-0.3, 1.2), rel=1e-13)
    assert pair.k == pytest.approx(special.kv(0.3, 1.2), rel=1e-13)


@pytest.mark.parametrize('x', [0.0, -1.0, np.inf, np.nan])
def test_ik_scaled_rejects_bad_arguments(x):
    with pytest.raises(DomainError):
        specfun.ik_scaled(1.0, x)


def test_log_k_survives_kve_overflow():
    # kve overflows long before K itself stops being representable in log form
    value = specfun.log_k(5.0, 1e-80)
    expected = special.gammaln(5.0) - np.log(2.0) + 5.0 * np.log(2.0e80)
    assert float(value) == pytest.approx(expected, rel=1e-12)


def test_log_k_order_zero_small_argument():
    x = 1e-300
    assert float(specfun.log_k(0.0, x)) == pytest.approx(np.log(np.log(2.0 / x) - np.euler_gamma), rel=1e-10)


@pytest.mark.parametrize('mu', [0.0, 0.4, 1.0, 2.2, 3.7])
@pytest.mark.parametrize('x', [0.01, 0.7, 3.0, 20.0])
def test_g_matches_direct_products(mu, x):
    k, i = special.kv(mu, x), special.iv(mu, x)
    direct = k * k + np.pi ** 2 * i * i + 2.0 * np.pi * np.sin(np.pi * mu) * k * i
    assert specfun.g_fun(mu, x).value == pytest.approx(direct, rel=1e-12)


def test_log_g_stays_finite_where_g_overflows():
    # G ~ pi e^{2x} / (2x) for large x
    x = 800.0
    assert specfun.g_fun(1.3, x).log_g == pytest.approx(2.0 * x - np.log(2.0 * x) + np.log(np.pi), rel=1e-5)
    inv = specfun.inv_g(1.3, np.array([100.0, 200.0]))
    assert np.all(inv > 0)
    assert inv[1] < inv[0]


def test_g_real_zero_for_signed_orders():
    x0 = specfun.g_real_zero(1.5)
    assert special.kv(1.5, x0) == pytest.approx(np.pi * special.iv(1.5, x0), rel=1e-12)
    with pytest.raises(SignedZeroError):
        specfun.g_fun(1.5, x0)
    with pytest.raises(DomainError):
        specfun.g_real_zero(2.5)


def test_g_rejects_negative_order():
    with pytest.raises(DomainError):
        specfun.g_fun(-0.5, 1.0)


@pytest.mark.parametrize('mu', [0.5, 1.5, 2.5, 4.5])
@pytest.mark.parametrize('z', [0.3, 2.0 + 1.0j, 5.0 - 4.0j])
def test_half_integer_closed_form(mu, z):
    assert specfun.k_half_integer(mu, z) == pytest.approx(complex(special.kv(mu, z)), rel=1e-12)


def test_k_complex_branch_cut():
    with pytest.raises(DomainError):
        specfun.k_complex(1.0, -2.0)
    with pytest.raises(DomainError):
        specfun.k_complex(1.0, 0.0)


def test_k_prime_matches_finite_difference():
    z, h = 1.1 + 0.6j, 1e-6
    numeric = (specfun.k_complex(2.3, z + h) - specfun.k_complex(2.3, z - h)) / (2 * h)
    assert specfun.k_prime_complex(2.3, z) == pytest.approx(numeric, rel=1e-8)


def test_continuation_across_the_cut():
    z = 0.9 * np.exp(-0.4j)
    value = specfun.continued_k(2.6, z)
    assert value == pytest.approx(complex(special.kv(2.6, np.exp(1j * np.pi) * z)), rel=1e-10)


def test_aux_poles():
    assert specfun.aux('gamma', 4.0) == pytest.approx(6.0)
    assert specfun.aux('digamma', 1.0) == pytest.approx(-np.euler_gamma)
    with pytest.raises(PoleError):
        specfun.aux('gamma', -2.0)
    with pytest.raises(PoleError):
        specfun.aux('digamma', 0.0)
    with pytest.raises(DomainError):
        specfun.aux('beta', 1.0)


def test_aux_erfcx_and_binomial():
    assert specfun.aux('erfcx', 30.0) == pytest.approx(special.erfcx(30.0))
    assert specfun.aux('binomial', 2.5, 2) == pytest.approx(2.5 * 1.5 / 2.0)


@pytest.mark.parametrize('drop', [0, 1, 2, 3])
@pytest.mark.parametrize('u', [1e-6, 0.1, 0.49, 0.51, 2.0, 30.0])
def test_erfcx_remainder_matches_definition(drop, u):
    head = sum((-u) ** n / special.gamma(1.0 + n / 2.0) for n in range(drop))
    expected = special.erfcx(u) - head
    assert float(specfun.erfcx_remainder(u, drop)) == pytest.approx(expected, rel=1e-9, abs=1e-15)


def test_erfcx_remainder_scaled_is_continuous_at_the_switch():
    below = float(specfun.erfcx_remainder_scaled(specfun.ERFCX_SERIES_RADIUS - 1e-12, 2))
    above = float(specfun.erfcx_remainder_scaled(specfun.ERFCX_SERIES_RADIUS + 1e-12, 2))
    assert below == pytest.approx(above, rel=1e-9)


def test_kappa_matches_small_argument_law():
    mu, x = 1.7, 1e-5
    assert specfun.kappa(mu) * x ** (2 * mu) == pytest.approx(float(specfun.inv_g(mu, x)), rel=1e-6)
    with pytest.raises(DomainError):
        specfun.kappa(0.0)


def test_half_integer_detection():
    assert specfun.is_half_integer(2.5)
    assert specfun.is_half_integer(-0.5)
    assert not specfun.is_half_integer(2.0)
    assert specfun.is_signed_zero_order(3.5)
    assert not specfun.is_signed_zero_order(2.5)


def test_reference_values():
    assert specfun.ik_scaled(0.5, 1.0).k_scaled == pytest.approx(np.sqrt(np.pi / 2.0), rel=1e-14)
    pair = specfun.ik_scaled(0.0, 1.0)
    assert pair.i == pytest.approx(1.266065878, rel=1e-9)
    assert pair.k == pytest.approx(0.421024438, rel=1e-9)
    assert specfun.g_fun(0.5, 1.0).value == pytest.approx(np.pi * np.e ** 2 / 2.0, rel=1e-13)


def test_derivative_reference_values():
    expected = -np.sqrt(np.pi / 2.0) * np.exp(-1.0) * 1.5
    assert specfun.k_prime_complex(0.5, 1.0) == pytest.approx(expected, rel=1e-13)
    assert specfun.k_prime_complex(0.0, 2.0) == pytest.approx(-special.kv(1.0, 2.0), rel=1e-13)


def test_k2_is_small_near_its_zero():
    assert abs(specfun.k_complex(2.0, complex(-1.28, 0.43))) < 0.05


def test_g_small_argument_order_two():
    x = 1e-3
    assert specfun.g_fun(2.0, x).value * 0.25 * x ** 4 == pytest.approx(1.0, abs=1e-2)


@pytest.mark.parametrize('mu', [0.0, 0.3, 1.0, 2.7, 5.0])
def test_large_argument_envelope(mu):
    x = np.linspace(10.0, 50.0, 41)
    scaled = np.exp(specfun.log_k(mu, x) + x) * np.sqrt(2.0 * x / np.pi)
    fitted = np.max(np.abs(scaled - 1.0) * x)
    assert fitted <= 2.0 * abs(4.0 * mu * mu - 1.0) / 8.0 + 1.0


@pytest.mark.parametrize('mu', [0.4, 1.0, 2.5])
def test_order_symmetry(mu):
    assert float(specfun.log_k(-mu, 1.7)) == float(specfun.log_k(mu, 1.7))
    assert specfun.k_complex(-mu, 1.0 + 2.0j) == pytest.approx(specfun.k_complex(mu, 1.0 + 2.0j), rel=1e-13)
