import numpy as np
import pytest
from scipy import special

from services import sausage, specfun
from services.errors import DomainError
from services.oracle.talbot import talbot


def test_params_validation():
    with pytest.raises(DomainError):
        sausage.SausageParams(d=0)
    with pytest.raises(DomainError):
        sausage.SausageParams(d=2.5)
    with pytest.raises(DomainError):
        sausage.SausageParams(d=3, r=0.0)
    params = sausage.SausageParams(d=3, r=2.0)
    assert params.nu == 0.5
    assert params.surface == pytest.approx(4.0 * np.pi)


def test_constants_order_one():
    consts = sausage.constants(1.0)
    assert consts.rho[0] == pytest.approx(1.0, abs=1e-8)


def test_constants_order_two_identities():
    consts = sausage.constants(2.0)
    assert len(consts.zeta) == 3
    assert consts.zeta[1] - consts.rho[1] == pytest.approx(0.5, abs=1e-8)
    assert consts.zeta[2] + consts.rho[2] == pytest.approx(0.0, abs=1e-8)
    assert all(abs(v) < 1e-8 for v in consts.residuals.values())


@pytest.mark.parametrize('nu, kmax', [(0.3, None), (1.0, 2), (1.2, 3), (1.5, 1), (3.5, 1)])
def test_divergent_constants(nu, kmax):
    with pytest.raises(DomainError):
        sausage.constants(nu, kmax)


def test_laplace_transform_values():
    assert sausage.laplace_L(sausage.SausageParams(d=3), 0.5) == pytest.approx(16.0 * np.pi, rel=1e-13)
    root = np.sqrt(2.0)
    expected = 2.0 * np.pi * special.kv(1.0, root) / (root * special.kv(0.0, root))
    assert sausage.laplace_L(sausage.SausageParams(d=2), 1.0) == pytest.approx(expected, rel=1e-10)
    with pytest.raises(DomainError):
        sausage.laplace_L(sausage.SausageParams(d=2), -1.0)


def test_sigma_rejects_the_negative_axis():
    with pytest.raises(DomainError):
        sausage.sigma_nu(1.0, -2.0)


def test_half_order_closed_form():
    assert sausage.t_nu(0.5, 4.0) == pytest.approx(4.0 + 4.0 / np.sqrt(np.pi), rel=1e-14)


@pytest.mark.parametrize('nu, case', [
    (0.5, 'half_integer'), (2.5, 'half_integer'), (0.0, 'below_half'), (0.3, 'below_half'),
    (1.0, 'half_to_one'), (1.2, 'one_to_three_halves'), (2.0, 'with_zeros'), (-3.0, 'with_zeros'),
])
def test_case_dispatch(nu, case):
    assert sausage.t_nu_case(nu) == case


@pytest.mark.parametrize('nu', [0.0, 1.0, 2.0, 3.0])
@pytest.mark.parametrize('t', [0.1, 1.0, 10.0, 100.0])
def test_t_nu_matches_talbot(nu, t):
    inverted = talbot(lambda lam: sausage.sigma_nu(nu, lam), t)
    assert sausage.t_nu(nu, t) == pytest.approx(inverted, rel=1e-5)


@pytest.mark.parametrize('nu', [0.3, 0.7, 1.2, 2.2, 2.5, -0.4])
def test_other_cases_match_talbot(nu):
    inverted = talbot(lambda lam: sausage.sigma_nu(nu, lam), 2.0)
    assert sausage.t_nu(nu, 2.0) == pytest.approx(inverted, rel=1e-5)


def test_low_dimensional_volumes():
    assert sausage.volume(sausage.SausageParams(d=1), 2.0) == pytest.approx(4.0 / np.sqrt(np.pi))
    assert sausage.volume(sausage.SausageParams(d=3), 1.0) == pytest.approx(2.0 * np.pi + 4.0 * np.sqrt(2.0 * np.pi))


@pytest.mark.parametrize('r', [0.5, 1.0, 1.3])
@pytest.mark.parametrize('t', [0.01, 2.0, 50.0])
def test_generic_path_matches_closed_form_in_three_dimensions(r, t):
    params = sausage.SausageParams(d=3, r=r)
    assert sausage.volume_generic(params, t) == pytest.approx(sausage.volume(params, t), rel=1e-10)


def test_four_dimensional_volume_matches_talbot():
    params = sausage.SausageParams(d=4, r=1.0)
    inverted = talbot(lambda lam: sausage.laplace_L(params, lam), 1.0)
    assert sausage.volume(params, 1.0) == pytest.approx(inverted, rel=1e-5)


def test_five_dimensional_volume_matches_talbot():
    # nu = 3/2 has its single zero at -1
    params = sausage.SausageParams(d=5, r=1.0)
    inverted = talbot(lambda lam: sausage.laplace_L(params, lam), 1.0)
    assert sausage.volume(params, 1.0) == pytest.approx(inverted, rel=1e-5)


@pytest.mark.parametrize('d', range(1, 9))
def test_volume_is_increasing(d):
    params = sausage.SausageParams(d=d, r=1.0)
    values = [sausage.volume(params, t) for t in np.geomspace(0.01, 100.0, 15)]
    assert np.all(np.diff(values) > 0)


def test_volume_excess():
    params = sausage.SausageParams(d=5, r=1.2)
    t = 3.0
    linear = params.surface * params.r ** 3 * (1.5 * t + params.r ** 2)
    assert sausage.volume_excess(params, t) == pytest.approx(sausage.volume(params, t) - linear, rel=1e-9)
    with pytest.raises(DomainError):
        sausage.volume_excess(sausage.SausageParams(d=4), 1.0)


def test_volume_rejects_bad_time():
    with pytest.raises(DomainError):
        sausage.volume(sausage.SausageParams(d=2), 0.0)


@pytest.mark.parametrize('nu, lam', [(0.0, 2.0), (0.3, 1.0), (0.7, 0.5), (1.2, 1.0)])
def test_q_nu_transform_contract(nu, lam):
    numeric, closed = sausage.q_nu_contract(nu, lam)
    assert numeric == pytest.approx(closed, rel=1e-6)


def test_q_nu_transform_rejects_signed_orders():
    with pytest.raises(DomainError):
        sausage.q_nu_transform(1.5, 1.0)


@pytest.mark.parametrize('n', [1, 2, 3])
def test_exp_remainder_integral(n):
    closed, numeric = sausage.exp_remainder_integral(n)
    assert numeric == pytest.approx(closed, rel=1e-9)


def test_asym_constants_order_two():
    consts = sausage.asym_constants(2)
    assert consts.kappa == pytest.approx(0.25)
    assert consts.b == pytest.approx((0.5,))
    assert consts.a == pytest.approx((1.0, 0.5))
    assert consts.a_log == pytest.approx(-0.125)


@pytest.mark.parametrize('m', [1, 2.5])
def test_asym_constants_need_integer_order(m):
    with pytest.raises(DomainError):
        sausage.asym_constants(m)


def test_small_argument_log_law():
    # 1/(kappa x^4 G_2) - 1 - a_1 x^2 = x^4 (a_m log(1/x) + c) + ...
    consts = sausage.asym_constants(2)

    def scaled_rest(x):
        value = float(specfun.inv_g(2, x)) / (consts.kappa * x ** 4)
        return (value - 1.0 - consts.a[1] * x * x) / x ** 4

    x1, x2 = 1e-2, 1e-3
    slope = (scaled_rest(x2) - scaled_rest(x1)) / (np.log(1.0 / x2) - np.log(1.0 / x1))
    assert slope == pytest.approx(consts.a_log, rel=1e-2)


def test_xi_index_range():
    with pytest.raises(DomainError):
        sausage.xi(2, 2)


@pytest.mark.parametrize('d', [6, 8])
def test_identity_checks(d):
    report = sausage.identity_checks(d)
    assert report.passed
    assert f'zeta_xi_{d - 1}' in report.residuals
    assert report.raw[f'zeta_{d - 1}'] + (-1.0) ** (d // 2 - 1) * report.raw['xi_0'] == pytest.approx(0.0, abs=1e-7)


def test_identity_checks_need_even_dimension():
    with pytest.raises(DomainError):
        sausage.identity_checks(7)


def test_expansion_leading_terms_six_dimensions():
    r = 1.3
    params = sausage.SausageParams(d=6, r=r)
    result = sausage.expansion(params)
    terms = dict(result.terms)
    s = params.surface
    assert terms[1.0] == pytest.approx(s * r ** 4 * 2.0, rel=1e-12)
    assert terms[0.0] == pytest.approx(s * r ** 6 / 2.0, rel=1e-12)
    assert terms[-1.0] == pytest.approx(-s * r ** 8 / 4.0, rel=1e-12)
    assert result.log_term[0] == -3.0
    assert result.log_term[1] == pytest.approx(s * r ** 12 / 8.0, rel=1e-12)


def test_expansion_log_term_eight_dimensions():
    params = sausage.SausageParams(d=8, r=1.0)
    result = sausage.expansion(params)
    assert result.log_term[0] == -5.0
    assert result.log_term[1] == pytest.approx(params.surface / 64.0, rel=1e-12)


def test_expansion_fits_the_exact_volume():
    params = sausage.SausageParams(d=6, r=1.0)
    result = sausage.expansion(params)
    ts = np.geomspace(50.0, 400.0, 25)
    polynomial = np.array([sum(c * t ** p for p, c in result.terms if p < 0) for t in ts])
    tail = np.array([sausage.volume_excess(params, t) for t in ts]) - polynomial
    design = np.column_stack([np.log(ts), np.ones_like(ts), ts ** -0.5, 1.0 / ts])
    fitted, *_ = np.linalg.lstsq(design, tail * ts ** 3, rcond=None)
    assert fitted[0] == pytest.approx(result.log_term[1], rel=2e-2)


def test_odd_dimension_expansion():
    params = sausage.SausageParams(d=5, r=1.0)
    result = sausage.expansion(params)
    assert [p for p, _ in result.terms] == [1.0, 0.0, -0.5, -1.5]
    assert result.log_term is None
    assert result.remainder_order == -2.5
    for t in (100.0, 400.0):
        exact = sausage.volume_excess(params, t)
        assert float(result.evaluate(t, below=0.0)) == pytest.approx(exact, rel=1e-3)


def test_expansion_truncation():
    params = sausage.SausageParams(d=6, r=1.0)
    result = sausage.expansion(params, n_terms=2)
    assert len(result.terms) == 2
    assert result.log_term is None
    assert result.remainder_order == -0.5
    with pytest.raises(DomainError):
        sausage.expansion(params, n_terms=0)


@pytest.mark.parametrize('d', [2, 3, 4])
def test_expansion_needs_large_dimension(d):
    with pytest.raises(DomainError):
        sausage.expansion(sausage.SausageParams(d=d))


def test_three_dimensional_hit_probability():
    assert sausage.hit_probability_3d(1.0, 1.0, 2.0) == pytest.approx(1.0)
    assert sausage.hit_probability_3d(1.0, 2.0, 1.0) == pytest.approx(0.5 * special.erfc(1.0 / np.sqrt(2.0)))
    with pytest.raises(DomainError):
        sausage.hit_probability_3d(1.0, 0.5, 1.0)
