import logging
from dataclasses import dataclass

import numpy as np
from scipy import special

from services import specfun
from services.errors import DomainError, ZeroDenominatorError
from services.quadrature import EndpointBehavior, log_square_head, quad_semiinf
from services.zeros import find_zeros

logger = logging.getLogger('MacdonaldKit.Ratios')

NEAR_ZERO_DENOMINATOR = 1e-13


@dataclass(frozen=True)
class RatioDecomposition:
    nu: float
    w: complex
    constant_part: float
    pole_at_zero: complex
    pole_sum: complex
    integral_part: complex
    total: complex
    case: str


def _check_w(w):
    w = complex(w)
    if w == 0 or (w.imag == 0 and w.real < 0) or not np.isfinite(w):
        raise DomainError(f"w = {w} is outside |arg w| < pi")
    return w


def _hankel_series(mu, w):
    n = int(round(mu - 0.5))
    return sum(specfun.hankel_symbol(mu, k) / (2.0 * w) ** k for k in range(n + 1))


def ratio_direct(nu, w):
    """K_{nu+1}(w) / K_nu(w) from scaled values."""
    w = _check_w(w)
    upper, lower = abs(nu + 1.0), abs(nu)
    if specfun.is_half_integer(lower):
        numerator = _hankel_series(upper, w)
        denominator = _hankel_series(lower, w)
        scale = max(abs(numerator), abs(_hankel_series(abs(lower - 1.0), w)))
    else:
        numerator = complex(special.kve(upper, w))
        denominator = complex(special.kve(lower, w))
        scale = max(abs(numerator), abs(complex(special.kve(abs(lower - 1.0), w))))
    if abs(denominator) < NEAR_ZERO_DENOMINATOR * scale:
        raise ZeroDenominatorError(f"K_{nu}(w) is numerically zero at w = {w}")
    ratio = numerator / denominator
    return ratio.real if w.imag == 0 else ratio


def _case_label(mu):
    if specfun.is_half_integer(mu):
        return 'half_integer' if mu < 1.5 else 'half_integer_with_zeros'
    return 'no_zeros' if mu < 1.5 else 'with_zeros'


def tail_integral(mu, w, spec=None):
    """int_0^inf dx / (x (x + w) G_mu(x)), complex for complex w."""
    behavior = EndpointBehavior(at_zero='inverse_log_square', split=0.5, rate=2.0) if mu == 0 \
        else EndpointBehavior(rate=2.0)
    w = complex(w)
    complex_w = w.imag != 0
    if not complex_w:
        w = w.real

    def integrand(x):
        return float(specfun.inv_g(mu, x)) / (x * (x + w))

    value = quad_semiinf(integrand, behavior, spec, complex_valued=complex_w).value
    return value + log_square_head(1.0 / w) if mu == 0 else value


def ratio_decomposed(nu, w, spec=None):
    w = _check_w(w)
    mu = abs(nu)
    pole_at_zero = 2.0 * specfun.positive_part(nu) / w
    zero_set = find_zeros(mu)
    pole_sum = sum(1.0 / (z - w) for z in zero_set.zeros) if zero_set.count else 0.0
    if specfun.is_half_integer(mu):
        integral_part = 0.0
    else:
        integral_part = np.cos(np.pi * mu) * tail_integral(mu, w, spec)
    total = 1.0 + pole_at_zero + pole_sum + integral_part
    if w.imag == 0:
        pole_at_zero, pole_sum = np.real(pole_at_zero), np.real(pole_sum)
        integral_part, total = np.real(integral_part), np.real(total)
    return RatioDecomposition(
        nu=float(nu), w=w, constant_part=1.0, pole_at_zero=pole_at_zero,
        pole_sum=pole_sum, integral_part=integral_part, total=total, case=_case_label(mu),
    )


def _h_over_g(nu, rho, x):
    """H_{nu,rho}(x) / G_nu(x), every product formed in log space."""
    log_g = specfun._log_g_array(nu, x)
    lk_rho = specfun.log_k(nu + rho, x)
    lk = specfun.log_k(nu, x)
    li_rho = specfun.log_i(nu + rho, x)
    li = specfun.log_i(nu, x)
    first = -np.cos(np.pi * (nu + rho)) * np.exp(lk_rho + li - log_g)
    second = np.cos(np.pi * nu) * np.exp(li_rho + lk - log_g)
    third = np.sin(np.pi * rho) / np.pi * np.exp(lk_rho + lk - log_g)
    return first + second + third


def ratio_general(nu, rho, w, spec=None):
    """K_{nu+rho}(w) / K_nu(w) for the generic orders (nu != 2n + 3/2)."""
    if nu < 0:
        raise DomainError(f"ratio_general needs nu >= 0, got {nu}")
    if rho == 0 or rho < -nu or rho >= 1:
        raise DomainError(f"rho must lie in [-nu, 1) without 0, got rho = {rho}")
    if specfun.is_signed_zero_order(nu):
        raise DomainError(f"nu = {nu} is of the form 2n + 3/2, which needs a principal value")
    w = _check_w(w)
    zero_set = find_zeros(nu)
    poles = 0.0
    for z in zero_set.zeros:
        weight = specfun.k_complex(nu + rho, z) / specfun.k_complex(nu + 1.0, z)
        poles += weight / (z - w)

    complex_w = w.imag != 0
    if not complex_w:
        w = w.real

    def integrand(x):
        return float(_h_over_g(nu, rho, x)) / (x + w)

    behavior = EndpointBehavior(rate=2.0, split=1.0)
    integral = quad_semiinf(integrand, behavior, spec, complex_valued=complex_w).value
    total = 1.0 + poles + integral
    return np.real(total) if not complex_w else total


def ratio_general_direct(nu, rho, w):
    w = _check_w(w)
    ratio = complex(special.kve(abs(nu + rho), w)) / complex(special.kve(abs(nu), w))
    return ratio.real if w.imag == 0 else ratio


def log_xk(mu, x, spec=None):
    """log(x^mu K_mu(x)) from the zero product and the G-weighted log integral."""
    if mu <= 0:
        raise DomainError(f"log_xk needs mu > 0, got {mu}")
    specfun._check_positive(x)
    value = np.log(2.0 ** (mu - 1.0) * special.gamma(mu)) - x
    zero_set = find_zeros(mu)
    if zero_set.count:
        value += float(np.real(sum(np.log(1.0 - x / z) for z in zero_set.zeros)))
    if not specfun.is_half_integer(mu):
        integral = quad_semiinf(
            lambda y: np.log1p(x / y) / y * float(specfun.inv_g(mu, y)),
            EndpointBehavior(rate=2.0), spec,
        ).value
        value -= np.cos(np.pi * mu) * integral
    return float(value)


def log_xk_direct(mu, x):
    return float(mu * np.log(x) + specfun.log_k(mu, x))
