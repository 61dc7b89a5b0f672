"""Modified Bessel functions, the G kernel and auxiliary special functions.

Everything that touches I_mu or K_mu on the positive axis works with the
exponentially scaled pair e^{-x} I_mu(x), e^{x} K_mu(x) from scipy, and every
quantity built from G_mu is carried as log G_mu so that 1/G stays
representable far into the e^{2x} growth region.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from services.errors import DomainError, PoleError, SignedZeroError

logger = logging.getLogger('MacdonaldKit.Specfun')

HALF_INTEGER_TOL = 1e-9
SIGNED_ZERO_WINDOW = 1e-8
# erfcx remainders are summed from the series inside this radius
ERFCX_SERIES_RADIUS = 0.5
ERFCX_SERIES_TERMS = 40


@dataclass(frozen=True)
class ScaledBesselPair:
    mu: float
    x: float
    i_scaled: float
    k_scaled: float

    @property
    def i(self):
        return self.i_scaled * np.exp(self.x)

    @property
    def k(self):
        return self.k_scaled * np.exp(-self.x)


@dataclass(frozen=True)
class GValue:
    mu: float
    x: float
    log_g: float

    @property
    def value(self):
        return float(np.exp(self.log_g))

    @property
    def inverse(self):
        return float(np.exp(-self.log_g))


def is_half_integer(nu, tol=HALF_INTEGER_TOL):
    shifted = abs(nu) - 0.5
    return abs(shifted - round(shifted)) < tol


def is_integer(nu, tol=HALF_INTEGER_TOL):
    return abs(nu - round(nu)) < tol


def positive_part(nu):
    return max(nu, 0.0)


def _check_positive(x, name='x'):
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} must be finite, got {x}")
    if np.any(np.asarray(x) <= 0):
        raise DomainError(f"{name} must be > 0, got {x}")


def _check_complex_point(z):
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise DomainError(f"z must be finite, got {z}")
    if z == 0:
        raise DomainError("K_mu is singular at z = 0")
    if z.imag == 0 and z.real < 0:
        raise DomainError(f"z = {z} lies on the branch cut (-inf, 0]")
    return z


def hankel_symbol(nu, k):
    """(nu, k) = Gamma(nu+k+1/2) / (k! Gamma(nu-k+1/2)), as a product free of poles."""
    value = 1.0
    four_nu_sq = 4.0 * nu * nu
    for j in range(1, k + 1):
        value *= (four_nu_sq - (2 * j - 1) ** 2) / (4.0 * j)
    return value


def ik_scaled(mu, x):
    _check_positive(x)
    mu = float(mu)
    x = float(x)
    k_scaled = float(special.kve(abs(mu), x))
    if mu >= 0 or is_integer(mu):
        i_scaled = float(special.ive(abs(mu), x))
    else:
        # I_{-m} = I_m + (2/pi) sin(pi m) K_m
        m = -mu
        i_scaled = float(special.ive(m, x) + 2.0 / np.pi * np.sin(np.pi * m) * np.exp(-2.0 * x) * k_scaled)
    return ScaledBesselPair(mu=mu, x=x, i_scaled=i_scaled, k_scaled=k_scaled)


def log_k(mu, x):
    """log K_mu(x) for real x > 0, vectorised, finite where kve overflows."""
    mu = abs(float(mu))
    x = np.asarray(x, dtype=float)
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        k_scaled = special.kve(mu, x)
        direct = np.log(k_scaled) - x
        if mu > 0:
            leading = special.gammaln(mu) - np.log(2.0) + mu * np.log(2.0 / x)
        else:
            leading = np.log(np.log(2.0 / x) - np.euler_gamma)
    return np.where(np.isfinite(direct), direct, leading)


def log_i(mu, x):
    mu = float(mu)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide='ignore'):
        return np.log(special.ive(mu, x)) + x


def _log_g_array(mu, x):
    lk = log_k(mu, x)
    li = log_i(mu, x)
    s = np.sin(np.pi * mu)
    c = np.cos(np.pi * mu)
    with np.errstate(over='ignore', divide='ignore', invalid='ignore'):
        log_ratio = li - lk
        ratio = np.exp(np.minimum(log_ratio, 0.0))
        inv_ratio = np.exp(np.minimum(-log_ratio, 0.0)) / np.pi
        # G = K^2 [(1 + pi s r)^2 + (pi c r)^2] = (pi I)^2 [(q + s)^2 + c^2], r = I/K, q = K/(pi I)
        small = 2.0 * lk + np.log((1.0 + np.pi * s * ratio) ** 2 + (np.pi * c * ratio) ** 2)
        large = 2.0 * (li + np.log(np.pi)) + np.log((inv_ratio + s) ** 2 + c ** 2)
    return np.where(log_ratio <= 0.0, small, large)


def is_signed_zero_order(mu):
    shifted = (mu - 1.5) / 2.0
    return mu >= 1.5 and abs(shifted - round(shifted)) < HALF_INTEGER_TOL


@lru_cache(maxsize=64)
def g_real_zero(mu):
    """The positive root of K_mu(x) = pi I_mu(x) for mu = 2n + 3/2."""
    if not is_signed_zero_order(mu):
        raise DomainError(f"G_mu has no real zero for mu = {mu}")

    def gap(x):
        return float(log_k(mu, x) - log_i(mu, x) - np.log(np.pi))

    return optimize.brentq(gap, 1e-3, 60.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def g_fun(mu, x):
    if mu < 0:
        raise DomainError(f"G_mu requires mu >= 0, got {mu}")
    _check_positive(x)
    if is_signed_zero_order(mu) and abs(x - g_real_zero(mu)) < SIGNED_ZERO_WINDOW:
        raise SignedZeroError(f"G_{mu} vanishes at x = {g_real_zero(mu)}; requested x = {x}")
    return GValue(mu=float(mu), x=float(x), log_g=float(_log_g_array(mu, x)))


def inv_g(mu, y):
    """1/G_mu(y) for arrays of y > 0; used inside quadrature integrands."""
    return np.exp(-_log_g_array(mu, y))


def k_half_integer(mu, z):
    mu = abs(mu)
    n = int(round(mu - 0.5))
    z = complex(z)
    series = sum(hankel_symbol(mu, k) / (2.0 * z) ** k for k in range(n + 1))
    return np.sqrt(np.pi / (2.0 * z)) * np.exp(-z) * series


def k_complex(mu, z):
    z = _check_complex_point(z)
    mu = abs(float(mu))
    if is_half_integer(mu):
        return complex(k_half_integer(mu, z))
    return complex(special.kv(mu, z))


def k_prime_complex(mu, z):
    z = _check_complex_point(z)
    return (mu / z) * k_complex(mu, z) - k_complex(mu + 1.0, z)


def i_complex(mu, z):
    return complex(special.iv(mu, complex(z)))


def continued_k(mu, z):
    """K_mu(e^{i pi} z) from values on the principal sheet."""
    return np.exp(-1j * np.pi * mu) * k_complex(mu, z) - 1j * np.pi * i_complex(mu, z)


def _check_pole(x, kind):
    if np.isreal(x) and float(np.real(x)) <= 0 and float(np.real(x)) == round(float(np.real(x))):
        raise PoleError(f"{kind} has a pole at {x}")


def aux(kind, *args):
    if kind == 'gamma':
        _check_pole(args[0], kind)
        return special.gamma(args[0])
    if kind == 'digamma':
        _check_pole(args[0], kind)
        return special.digamma(args[0])
    if kind == 'erfcx':
        return special.erfcx(args[0])
    if kind == 'binomial':
        upper, k = args
        return special.binom(upper, k)
    raise DomainError(f"Unknown auxiliary function {kind!r}")


def _erfcx_series_coeffs(lo, hi):
    orders = np.arange(lo, hi)
    return (-1.0) ** orders / special.gamma(1.0 + orders / 2.0)


def erfcx_remainder_scaled(u, drop):
    """(erfcx(u) - sum_{n<drop} (-u)^n / Gamma(1 + n/2)) / u^drop for u >= 0.

    For small u the quotient is summed from the tail of the series, so neither
    the subtraction nor the division loses digits.
    """
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < ERFCX_SERIES_RADIUS
    tail = np.polynomial.polynomial.polyval(
        np.where(small, u, 0.0), _erfcx_series_coeffs(drop, drop + ERFCX_SERIES_TERMS)
    )
    u_big = np.where(small, 1.0, u)
    head = np.polynomial.polynomial.polyval(u_big, _erfcx_series_coeffs(0, drop)) if drop else 0.0
    direct = (special.erfcx(u_big) - head) / u_big ** drop
    return np.where(small, tail, direct)


def erfcx_remainder(u, drop):
    """erfcx(u) minus the first `drop` terms of its series sum (-u)^n / Gamma(1 + n/2)."""
    u = np.asarray(u, dtype=float)
    return u ** drop * erfcx_remainder_scaled(u, drop)


def kappa(mu):
    """Coefficient of the small-x law 1/G_mu(x) ~ kappa x^{2 mu}, mu > 0."""
    if mu <= 0:
        raise DomainError(f"kappa needs mu > 0, got {mu}")
    return float(np.exp(-2.0 * special.gammaln(mu) - (mu - 1.0) * np.log(4.0)))
