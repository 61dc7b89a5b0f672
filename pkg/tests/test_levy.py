import numpy as np
import pytest
from scipy import special

from services import levy
from services.errors import DomainError

DOWNWARD_SPECS = [
    levy.HittingSpec(nu=0.0, a=2.0, b=1.0),
    levy.HittingSpec(nu=0.3, a=2.0, b=1.0),
    levy.HittingSpec(nu=-0.7, a=2.0, b=1.0),
    levy.HittingSpec(nu=2.0, a=2.0, b=1.0),
    levy.HittingSpec(nu=2.5, a=3.0, b=1.0),
    levy.HittingSpec(nu=-1.2, a=1.5, b=0.0),
    levy.HittingSpec(nu=-2.3, a=1.0, b=0.0),
]


def test_hitting_spec_validation():
    with pytest.raises(DomainError):
        levy.HittingSpec(nu=1.0, a=1.0, b=1.0)
    with pytest.raises(DomainError):
        levy.HittingSpec(nu=0.5, a=1.0, b=0.0)
    with pytest.raises(DomainError):
        levy.HittingSpec(nu=-1.5, a=0.0, b=1.0)
    with pytest.raises(DomainError):
        levy.HittingSpec(nu=1.0, a=-1.0, b=1.0)


def test_direction():
    assert levy.HittingSpec(nu=1.0, a=2.0, b=1.0).direction == 'downward'
    assert levy.HittingSpec(nu=1.0, a=1.0, b=2.0).direction == 'upward'


def test_bessel_j_zeros():
    table = levy.bessel_j_zeros(0.5, 5)
    assert table.zeros == pytest.approx(tuple(np.pi * np.arange(1, 6)), rel=1e-12)
    assert levy.bessel_j_zeros(0.0, 1).zeros[0] == pytest.approx(2.404826, abs=1e-6)
    assert np.all(np.diff(levy.bessel_j_zeros(2.3, 50).zeros) > 0)
    with pytest.raises(DomainError):
        levy.bessel_j_zeros(-1.0, 3)


@pytest.mark.parametrize('spec, label', [
    (levy.HittingSpec(nu=-0.5, a=1.0, b=0.0), '1'),
    (levy.HittingSpec(nu=-2.5, a=1.0, b=0.0), '2'),
    (levy.HittingSpec(nu=-0.7, a=1.0, b=0.0), '3'),
    (levy.HittingSpec(nu=-2.2, a=1.0, b=0.0), '4'),
    (levy.HittingSpec(nu=0.5, a=2.0, b=1.0), '5'),
    (levy.HittingSpec(nu=1.5, a=2.0, b=1.0), '6'),
    (levy.HittingSpec(nu=0.3, a=2.0, b=1.0), '7'),
    (levy.HittingSpec(nu=2.0, a=2.0, b=1.0), '8'),
    (levy.HittingSpec(nu=0.3, a=0.0, b=1.0), 'upward_from_zero'),
    (levy.HittingSpec(nu=0.3, a=1.0, b=2.0), 'upward'),
    (levy.HittingSpec(nu=-1.3, a=1.0, b=2.0), 'upward_reflected_index'),
])
def test_case_labels(spec, label):
    assert levy.case_label(spec) == label


def test_half_integer_densities():
    assert levy.levy_density(levy.HittingSpec(nu=0.5, a=2.0, b=1.0), 1.0) == pytest.approx(
        1.0 / np.sqrt(2.0 * np.pi), rel=1e-12)
    assert levy.levy_density(levy.HittingSpec(nu=-0.5, a=3.0, b=0.0), 4.0) == pytest.approx(
        3.0 / (8.0 * np.sqrt(2.0 * np.pi)), rel=1e-12)


def test_upward_half_order_series():
    x = 1.0
    n = np.arange(1, 200)
    expected = np.sum(np.exp(-n ** 2 * np.pi ** 2 * x / 8.0) - np.exp(-n ** 2 * np.pi ** 2 * x / 2.0)) / x
    result = levy.levy_eval(levy.HittingSpec(nu=0.5, a=1.0, b=2.0), x)
    assert result.density == pytest.approx(expected, rel=1e-10)
    assert result.truncation_bound < 1e-12


@pytest.mark.parametrize('spec', DOWNWARD_SPECS)
def test_densities_are_non_negative(spec):
    xs = np.logspace(-4, 3, 60)
    assert np.all(levy.levy_density_grid(spec, xs) > -1e-12)


def test_grid_matches_pointwise():
    spec = DOWNWARD_SPECS[3]
    xs = np.array([0.1, 1.0, 5.0])
    assert levy.levy_density_grid(spec, xs) == pytest.approx([levy.levy_density(spec, x) for x in xs])


def test_density_rejects_non_positive_x():
    with pytest.raises(DomainError):
        levy.levy_density(DOWNWARD_SPECS[0], 0.0)


@pytest.mark.parametrize('spec', DOWNWARD_SPECS)
def test_small_time_behaviour(spec):
    # the Gaussian term (a - b) / sqrt(2 pi x^3) dominates as x -> 0
    x = 1e-6
    lead = (spec.a - spec.b) / np.sqrt(2.0 * np.pi * x ** 3)
    assert levy.levy_density(spec, x) == pytest.approx(lead, rel=1e-2)


def test_hitting_probability():
    assert levy.hitting_probability(levy.HittingSpec(nu=2.0, a=2.0, b=1.0)) == pytest.approx(1.0 / 16.0)
    assert levy.hitting_probability(levy.HittingSpec(nu=-0.3, a=2.0, b=1.0)) == 1.0
    assert levy.hitting_probability(levy.HittingSpec(nu=-1.5, a=1.0, b=2.0)) == pytest.approx(0.5 ** 3.0)
    assert levy.hitting_probability(levy.HittingSpec(nu=0.3, a=1.0, b=2.0)) == 1.0


@pytest.mark.parametrize('lam', [0.5, 1.0, 3.0])
def test_half_integer_laplace(lam):
    assert levy.log_laplace(levy.HittingSpec(nu=0.5, a=2.0, b=1.0), lam) == pytest.approx(-np.sqrt(2.0 * lam))
    assert levy.log_laplace(levy.HittingSpec(nu=-0.5, a=1.0, b=0.0), lam) == pytest.approx(-np.sqrt(2.0 * lam))


def test_conditional_laplace_transform_order_two():
    spec = levy.HittingSpec(nu=2.0, a=2.0, b=1.0)
    expected = np.log(4.0 * special.kv(2.0, 2.0 * np.sqrt(2.0)) / special.kv(2.0, np.sqrt(2.0)))
    assert levy.log_laplace(spec, 1.0) == pytest.approx(expected, rel=1e-12)


def test_order_zero_difference_form_matches_ratio_form():
    spec = levy.HittingSpec(nu=0.0, a=2.0, b=1.0)
    assert levy.log_laplace(spec, 1.0) == pytest.approx(levy.log_laplace_direct(spec, 1.0), abs=1e-8)


def test_upward_transforms():
    s = np.sqrt(2.0)
    spec = levy.HittingSpec(nu=0.3, a=1.0, b=2.0)
    expected = 0.3 * np.log(2.0) + np.log(special.iv(0.3, s) / special.iv(0.3, 2.0 * s))
    assert levy.log_laplace(spec, 1.0) == pytest.approx(expected, rel=1e-12)
    from_zero = levy.HittingSpec(nu=0.3, a=0.0, b=2.0)
    expected = np.log((2.0 * s) ** 0.3 / (2.0 ** 0.3 * special.gamma(1.3) * special.iv(0.3, 2.0 * s)))
    assert levy.log_laplace(from_zero, 1.0) == pytest.approx(expected, rel=1e-12)


def test_log_laplace_needs_positive_lambda():
    with pytest.raises(DomainError):
        levy.log_laplace(DOWNWARD_SPECS[0], 0.0)


@pytest.mark.parametrize('spec, lam, tol', [
    (levy.HittingSpec(nu=0.5, a=2.0, b=1.0), 1.0, 1e-9),
    (levy.HittingSpec(nu=2.0, a=2.0, b=1.0), 0.7, 1e-5),
    (levy.HittingSpec(nu=0.0, a=3.0, b=1.0), 2.0, 1e-5),
    (levy.HittingSpec(nu=0.0, a=2.0, b=1.0), 1.0, 1e-5),
    (levy.HittingSpec(nu=0.3, a=2.0, b=1.0), 1.0, 1e-5),
    (levy.HittingSpec(nu=-1.2, a=1.5, b=0.0), 1.0, 1e-5),
    (levy.HittingSpec(nu=-2.3, a=1.0, b=0.0), 0.5, 1e-5),
    (levy.HittingSpec(nu=0.4, a=1.0, b=2.0), 1.0, 1e-5),
])
def test_levy_khintchine_check(spec, lam, tol):
    assert levy.verify_levy(spec, lam) < tol


def test_exchange_identities():
    results = levy.exchange_identities(1.0, complex(-1.3, 0.4), 2.3, 0.8)
    for name, (closed, numeric) in results.items():
        assert numeric == pytest.approx(closed, rel=1e-6, abs=1e-9), name


def test_exchange_identities_preconditions():
    with pytest.raises(DomainError):
        levy.exchange_identities(1.0, complex(0.5, 1.0), 2.3, 0.8)
    with pytest.raises(DomainError):
        levy.exchange_identities(1.0, complex(-0.5, 1.0), 0.0, 0.8)


def test_order_zero_density_far_tail():
    # x p(x) log^2 x -> 2 log(a / b), slowly
    spec = levy.HittingSpec(nu=0.0, a=2.0, b=1.0)
    xs = np.array([1e20, 1e40, 1e80])
    scaled = levy.levy_density_grid(spec, xs) * xs * np.log(xs) ** 2
    assert np.all(scaled > 0)
    assert scaled[2] == pytest.approx(2.0 * np.log(2.0), rel=5e-2)
