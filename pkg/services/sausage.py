"""Expected Wiener sausage volume for the closed ball of radius r in R^d.

L(t) is the expected volume swept by the ball around a Brownian path up to
time t, minus the volume of the ball. Its Laplace transform is a ratio of
Macdonald functions, so L(2 r^2 s) = S_{d-1} r^d T_nu(s) with nu = d/2 - 1,
where T_nu inverts Sigma_nu(lam) = lam^{-3/2} K_{nu+1}(sqrt lam) / K_nu(sqrt lam).
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from services import specfun
from services.errors import DomainError
from services.quadrature import (
    EndpointBehavior, log_square_head, power_head, quad_finite, quad_semiinf, semiinf_rule,
)
from services.ratios import ratio_direct
from services.zeros import find_zeros, g_moment, zero_power_sum

logger = logging.getLogger('MacdonaldKit.Sausage')

IDENTITY_TOLERANCE = 1e-7
# Q_k switches from the series form to 1/G minus its polynomial here
SERIES_SWITCH = 0.5
PSI_SERIES_TERMS = 30
EXP_SERIES_TERMS = 30
FAST_DECAY = EndpointBehavior(rate=2.0)


@dataclass(frozen=True)
class SausageParams:
    d: int
    r: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"Dimension must be an integer >= 1, got d = {self.d}")
        if not (np.isfinite(self.r) and self.r > 0):
            raise DomainError(f"Radius must be > 0, got r = {self.r}")

    @property
    def nu(self):
        return self.d / 2.0 - 1.0

    @property
    def surface(self):
        """S_{d-1}, the surface area of the unit sphere in R^d."""
        return surface_area(self.d)


@dataclass(frozen=True)
class SausageConstants:
    nu: float
    zeta: tuple
    rho: tuple
    residuals: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class AsymConstants:
    """Small-x constants of 1/G_m for integer m >= 2.

    1/G_m(x) = kappa x^{2m} (sum_{k<m} a_k x^{2k} + a_log x^{2m} log(1/x) + O(x^{2m})).
    """
    m: int
    kappa: float
    b: tuple
    compositions: dict = field(compare=False)
    a: tuple
    a_log: float

    def f_coeffs(self):
        """Coefficients in w = x^2 of F, the polynomial part of x^m K_m(x) 2^{1-m} / Gamma(m)."""
        m = self.m
        k = np.arange(m)
        return special.gamma(m - k) / (special.gamma(k + 1.0) * special.gamma(m)) * (-0.25) ** k

    def q(self, k, y):
        """Q_k(y) = 1/G_m(y) - kappa y^{2m} sum_{n<=k} a_n y^{2n}."""
        y = float(y)
        if y < SERIES_SWITCH:
            return self.kappa * y ** (2 * self.m) * self._q_scaled(k, y) * y ** (2 * k + 2)
        polynomial = sum(a_n * y ** (2 * n) for n, a_n in enumerate(self.a[:k + 1]))
        return float(specfun.inv_g(self.m, y)) - self.kappa * y ** (2 * self.m) * polynomial

    def q_over_power(self, k, y):
        """Q_k(y) / y^{2m+2+2k}, the integrand of xi_k."""
        y = float(y)
        if y < SERIES_SWITCH:
            return self.kappa * self._q_scaled(k, y)
        return self.q(k, y) / y ** (2 * self.m + 2 + 2 * k)

    def _q_scaled(self, k, y):
        # Q_k / (kappa y^{2m} y^{2k+2}) = ((1 - A F^2) + E) / (F^2 y^{2k+2}), A = sum_{n<=k} a_n w^n
        m = self.m
        w = y * y
        f = self.f_coeffs()
        f_sq = np.polynomial.polynomial.polymul(f, f)
        numerator = -np.polynomial.polynomial.polymul(self.a[:k + 1], f_sq)
        numerator[0] += 1.0
        shifted = numerator[k + 1:]
        poly_part = np.polynomial.polynomial.polyval(w, shifted)

        f_value = np.polynomial.polynomial.polyval(w, f)
        n = np.arange(PSI_SERIES_TERMS)
        psi_sum = np.sum(
            (special.digamma(n + 1.0) + special.digamma(m + n + 1.0)) * (w / 4.0) ** n
            / (special.gamma(n + 1.0) * special.gamma(m + n + 1.0))
        )
        i_m = special.iv(m, y)
        log_part = (-1.0) ** (m + 1) * np.log(y / 2.0) * i_m + (-1.0) ** m * 0.5 * (y / 2.0) ** m * psi_sum
        u = 2.0 ** (1 - m) / special.gamma(m) * y ** m * log_part / f_value
        ratio = i_m / special.kv(m, y)
        pi_r_sq = (np.pi * ratio) ** 2
        excess = (-u * (2.0 + u) / (1.0 + u) ** 2 - pi_r_sq) / (1.0 + pi_r_sq)
        return (poly_part + excess / w ** (k + 1)) / (f_value * f_value)


@dataclass(frozen=True)
class IdentityReport:
    d: int
    residuals: dict
    raw: dict
    tolerance: float = IDENTITY_TOLERANCE

    @property
    def passed(self):
        return all(abs(value) < self.tolerance for value in self.residuals.values())


@dataclass(frozen=True)
class AsymptoticExpansion:
    """Large-t expansion of L(t): sum of c t^p plus c_log t^p log t."""
    d: int
    r: float
    terms: tuple
    log_term: tuple = None
    remainder_order: float = 0.0

    def evaluate(self, t, below=None):
        """Truncated expansion at t; `below` keeps only powers strictly less than it."""
        t = np.asarray(t, dtype=float)
        value = np.zeros_like(t)
        for power, coeff in self.terms:
            if below is None or power < below:
                value = value + coeff * t ** power
        if self.log_term is not None:
            power, coeff = self.log_term
            if below is None or power < below:
                value = value + coeff * np.log(t) * t ** power
        return value


def surface_area(d):
    return float(2.0 * np.pi ** (d / 2.0) / special.gamma(d / 2.0))


def _check_time(t):
    if not (np.isfinite(t) and t > 0):
        raise DomainError(f"t must be > 0, got {t}")


def _kmax_default(mu):
    return int(np.ceil(2.0 * mu)) - 1


def _identity_residuals(mu, zeta, rho):
    c = np.cos(np.pi * mu)
    residuals = {}
    if mu > 0.5:
        residuals['order_1'] = 1.0 + (zeta[0] if mu > 1.5 else 0.0) + rho[0] * c
    if mu > 1.0 and len(rho) >= 2:
        residuals['order_2'] = (zeta[1] if mu > 1.5 else 0.0) - rho[1] * c - 0.5 / (mu - 1.0)
    if mu > 1.5 and len(rho) >= 3:
        residuals['order_3'] = zeta[2] + rho[2] * c
    return residuals


def constants(nu, kmax=None, spec=None):
    """zeta_{nu,k} = sum_j z_j^{-k} and rho_{nu,k} = int dy / (y^{k+1} G_|nu|(y)) for k = 1..kmax."""
    mu = abs(nu)
    if kmax is None:
        kmax = _kmax_default(mu)
    if kmax < 1:
        raise DomainError(f"rho_{{nu,k}} needs |nu| > k/2; no k >= 1 converges for nu = {nu}")
    if kmax >= 2.0 * mu:
        raise DomainError(f"rho_{{nu,{kmax}}} diverges: it needs |nu| > {kmax / 2}, got |nu| = {mu}")
    if specfun.is_signed_zero_order(mu):
        raise DomainError(f"G_{mu} has a real zero, so rho_{{nu,k}} diverges for nu = {nu}")

    zero_set = find_zeros(mu)
    zeta = tuple(zero_power_sum(zero_set, -k) for k in range(1, kmax + 1))
    rho = tuple(g_moment(mu, -k - 1, spec) for k in range(1, kmax + 1))
    residuals = _identity_residuals(mu, zeta, rho)
    worst = max((abs(v) for v in residuals.values()), default=0.0)
    logger.debug(f"constants(nu={nu}, kmax={kmax}): worst identity residual {worst:.3e}")
    return SausageConstants(nu=float(nu), zeta=zeta, rho=rho, residuals=residuals)


def sigma_nu(nu, lam):
    """lam^{-3/2} K_{nu+1}(sqrt lam) / K_nu(sqrt lam); complex lam off the negative axis."""
    lam = complex(lam)
    if lam.imag == 0 and lam.real <= 0:
        raise DomainError(f"lambda must lie off (-inf, 0], got {lam}")
    root = np.sqrt(lam)
    value = ratio_direct(nu, root) / (lam * root)
    return value.real if lam.imag == 0 else value


def laplace_L(params, lam):
    """int_0^inf e^{-lam t} L(t) dt."""
    lam = complex(lam)
    if lam.imag == 0 and lam.real <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    r = params.r
    root = np.sqrt(2.0 * lam)
    ratio = ratio_direct(params.nu, r * root)
    value = params.surface * r ** (params.d - 1) * ratio / (np.sqrt(2.0) * lam * np.sqrt(lam))
    return value.real if lam.imag == 0 else value


@lru_cache(maxsize=64)
def _tail_rule(mu, drop):
    """Nodes y_i and weights w_i y_i^{drop-3} / G_mu(y_i) for int f(y) / (y^3 G_mu(y)) dy."""
    rule = semiinf_rule('inverse_log_square' if mu == 0 else 'power')
    y = rule.nodes
    with np.errstate(divide='ignore'):
        log_weights = np.log(rule.weights) + (drop - 3.0) * np.log(y) - specfun._log_g_array(mu, y)
    return y, np.exp(log_weights)


def _tail_sum(mu, drop, t):
    """int R_drop(y sqrt t) / (y^3 G_mu(y)) dy, R_drop the erfcx series remainder."""
    y, weights = _tail_rule(mu, drop)
    root = np.sqrt(t)
    value = t ** (drop / 2.0) * float(weights @ specfun.erfcx_remainder_scaled(y * root, drop))
    # below the first node R_drop(u) / u^drop -> (-1)^drop / Gamma(1 + drop/2)
    leading = t ** (drop / 2.0) * (-1.0) ** drop / special.gamma(1.0 + drop / 2.0)
    if mu > 0:
        value += power_head(specfun.kappa(mu) * leading, 2.0 * mu + drop - 3.0)
    else:
        value += log_square_head(leading)
    return value


def _pole_sum(mu, t):
    """sum_j erfcx(-z_j sqrt t) / z_j^2 over the zeros of K_mu."""
    zero_set = find_zeros(mu)
    if not zero_set.count:
        return 0.0
    zeros = np.asarray(zero_set.zeros)
    return float(np.real(np.sum(special.erfcx(-zeros * np.sqrt(t)) / zeros ** 2)))


def t_nu_case(nu):
    mu = abs(nu)
    if specfun.is_half_integer(mu):
        return 'half_integer'
    if mu < 0.5:
        return 'below_half'
    if mu <= 1.0:
        return 'half_to_one'
    if mu < 1.5:
        return 'one_to_three_halves'
    return 'with_zeros'


def t_nu_excess(nu, t):
    """T_nu(t) - 2 nu^+ t - T_nu's constant term, without forming the large linear part.

    The constant is 1/(2(|nu| - 1)) for |nu| > 1 and 0 otherwise.
    """
    _check_time(t)
    mu = abs(nu)
    c = np.cos(np.pi * mu)
    case = t_nu_case(nu)
    if case == 'half_integer':
        if mu < 1.0:
            return 2.0 * np.sqrt(t / np.pi)
        return -_pole_sum(mu, t)
    if case == 'below_half':
        return 2.0 * np.sqrt(t / np.pi) + c * _tail_sum(mu, 2, t)
    if case == 'half_to_one':
        return c * _tail_sum(mu, 1, t)
    excess = c * _tail_sum(mu, 0, t)
    if case == 'with_zeros':
        excess -= _pole_sum(mu, t)
    return excess


def t_nu(nu, t):
    """Inverse Laplace transform of Sigma_nu at t > 0."""
    _check_time(t)
    mu = abs(nu)
    constant = 0.5 / (mu - 1.0) if mu > 1.0 else 0.0
    return 2.0 * specfun.positive_part(nu) * t + constant + t_nu_excess(nu, t)


def q_nu(nu, t):
    """int int (xy - 1 + e^{-xy}) / (y^3 G_|nu|(y)) p(t, x) dx dy with p(t, x) = e^{-x^2/4t} / sqrt(pi t)."""
    _check_time(t)
    return _tail_sum(abs(nu), 2, t)


def q_nu_transform(nu, lam, spec=None):
    """int dy / (lam^{3/2} (sqrt lam + y) y G_|nu|(y)), the Laplace transform of q_nu."""
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    mu = abs(nu)
    if specfun.is_signed_zero_order(mu):
        raise DomainError(f"G_{mu} has a real zero; the transform of q_nu diverges")
    root = np.sqrt(lam)
    behavior = EndpointBehavior(at_zero='inverse_log_square', split=0.5, rate=2.0) if mu == 0 \
        else EndpointBehavior(rate=2.0)
    integral = quad_semiinf(lambda y: float(specfun.inv_g(mu, y)) / ((root + y) * y), behavior, spec).value
    if mu == 0:
        integral += log_square_head(1.0 / root)
    return integral / lam ** 1.5


def q_nu_contract(nu, lam, spec=None):
    """(numeric int e^{-lam t} q_nu(t) dt, closed transform) for the same nu and lam."""
    closed = q_nu_transform(nu, lam, spec)
    behavior = EndpointBehavior(rate=lam, split=min(1.0, 1.0 / lam))
    numeric = quad_semiinf(lambda t: np.exp(-lam * t) * q_nu(nu, t), behavior, spec).value
    return numeric, closed


def volume_generic(params, t):
    """L(t) through T_nu for any d >= 1."""
    _check_time(t)
    s = t / (2.0 * params.r ** 2)
    return params.surface * params.r ** params.d * t_nu(params.nu, s)


def volume(params, t):
    """Expected sausage volume L(t); closed forms for d = 1 and d = 3."""
    _check_time(t)
    r = params.r
    if params.d == 1:
        return 2.0 * np.sqrt(2.0 * t / np.pi)
    if params.d == 3:
        return 2.0 * np.pi * r * t + 4.0 * r * r * np.sqrt(2.0 * np.pi * t)
    return volume_generic(params, t)


def volume_excess(params, t):
    """L(t) minus S_{d-1} r^{d-2} ((d-2) t / 2 + r^2 / (d-4)); d >= 5."""
    if params.d < 5:
        raise DomainError(f"volume_excess needs d >= 5, got d = {params.d}")
    _check_time(t)
    s = t / (2.0 * params.r ** 2)
    return params.surface * params.r ** params.d * t_nu_excess(params.nu, s)


def _compositions(b, m):
    """b_{k,h}: the sum over compositions k = k_1 + ... + k_h of b_{k_1} ... b_{k_h}."""
    table = {(0, 0): 1.0}
    for h in range(1, m):
        for k in range(h, m):
            table[(k, h)] = sum(b[j - 1] * table.get((k - j, h - 1), 0.0) for j in range(1, k - h + 2))
    return {key: value for key, value in table.items() if key[1] >= 1}


@lru_cache(maxsize=16)
def asym_constants(m):
    if int(m) != m or m < 2:
        raise DomainError(f"asym_constants needs an integer m >= 2, got {m}")
    m = int(m)
    gm = special.gamma(m)
    kappa = 1.0 / (4.0 ** (m - 1) * gm * gm)
    b = []
    for k in range(1, m):
        h = np.arange(k + 1)
        total = np.sum(special.gamma(m - h) * special.gamma(m - k + h) / (special.gamma(h + 1.0) * special.gamma(k - h + 1.0)))
        b.append((-1.0) ** (k + 1) / (4.0 ** k * gm * gm) * total)
    compositions = _compositions(b, m)
    a = [1.0] + [sum(compositions[(k, h)] for h in range(1, k + 1)) for k in range(1, m)]
    a_log = (-1.0) ** (m + 1) / (4.0 ** (m - 1) * m * gm * gm)
    return AsymConstants(m=m, kappa=kappa, b=tuple(b), compositions=compositions, a=tuple(a), a_log=a_log)


def xi(m, k, spec=None):
    """xi_k = int Q_k(y) / y^{2m+2+2k} dy for k = 0..m-1."""
    consts = asym_constants(m)
    if not 0 <= k < m:
        raise DomainError(f"xi_k needs 0 <= k < m = {m}, got k = {k}")
    c = SERIES_SWITCH
    head = quad_finite(lambda y: consts.q_over_power(k, y), 0.0, c, spec).value
    power = 2 * m + 2 + 2 * k
    body = quad_semiinf(
        lambda x: float(specfun.inv_g(m, c + x)) / (c + x) ** power, EndpointBehavior(rate=2.0), spec,
    ).value
    # int_c^inf y^{2n-2-2k} dy for the subtracted polynomial
    polynomial = sum(a_n * c ** (2 * n - 1 - 2 * k) / (2 * k + 1 - 2 * n) for n, a_n in enumerate(consts.a[:k + 1]))
    return head + body - consts.kappa * polynomial


@lru_cache(maxsize=16)
def _xi_table(m):
    return tuple(xi(m, k) for k in range(m))


def exp_remainder_integral(n, spec=None):
    """(closed, numeric) for int R_{n-1}(x^2) / x^{2n} dx, R_j(x) = e^{-x} - sum_{k<=j} (-x)^k / k!."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    closed = (-1.0) ** n * np.pi / (2.0 * special.gamma(n + 0.5))
    orders = np.arange(n, n + EXP_SERIES_TERMS)
    series = (-1.0) ** orders / special.gamma(orders + 1.0)

    def head_integrand(x):
        return float(np.polynomial.polynomial.polyval(x * x, series))

    head = quad_finite(head_integrand, 0.0, 1.0, spec).value
    gaussian = quad_semiinf(lambda x: np.exp(-(1.0 + x) ** 2) / (1.0 + x) ** (2 * n), FAST_DECAY, spec).value
    polynomial = sum((-1.0) ** k / special.gamma(k + 1.0) / (2 * n - 2 * k - 1) for k in range(n))
    return closed, head + gaussian - polynomial


def _even_terms_in_s(m, spec=None):
    """Expansion of T_m(s) for integer m >= 2 as ({power: coeff}, log coefficient)."""
    zero_set = find_zeros(m)
    consts = asym_constants(m)
    xis = _xi_table(m) if spec is None else (0.0,) + tuple(xi(m, k, spec) for k in range(1, m))
    sign = (-1.0) ** m
    terms = {}

    def add(power, coeff):
        terms[power] = terms.get(power, 0.0) + coeff

    add(1.0, 2.0 * m)
    add(0.0, 0.5 / (m - 1.0))
    # zeta_{2n+3} + (-1)^m rho_{2n+3} = 0 for n <= m - 2 and zeta_{2m+1} + (-1)^m xi_0 = 0
    for n in range(m):
        add(-(n + 0.5), 0.0)
    for n in range(m, 2 * m - 1):
        zeta = zero_power_sum(zero_set, -(2 * n + 3))
        add(-(n + 0.5), (-1.0) ** n * special.gamma(n + 0.5) / np.pi * zeta)
    for k in range(m):
        add(-(m + k - 1.0), sign * consts.kappa / 2.0 * (-1.0) ** (m + k - 1) * special.gamma(m + k - 1.0) * consts.a[k])
        if k:
            add(-(m + k - 0.5), sign / np.pi * (-1.0) ** (m + k - 1) * special.gamma(m + k - 0.5) * xis[k])
    log_coeff = -sign * consts.kappa * consts.a_log * special.gamma(2.0 * m - 1.0) / 4.0
    return terms, log_coeff


def _odd_terms_in_s(mu, n_max):
    zero_set = find_zeros(mu)
    terms = {1.0: 2.0 * mu, 0.0: 0.5 / (mu - 1.0)}
    for n in range(n_max + 1):
        zeta = zero_power_sum(zero_set, -(2 * n + 3))
        terms[-(n + 0.5)] = (-1.0) ** n * special.gamma(n + 0.5) / np.pi * zeta
    return terms


def expansion(params, n_terms=None, spec=None):
    """Large-t expansion of L(t) for even d >= 6 or odd d >= 5."""
    d, r = params.d, params.r
    if d < 5 or (d % 2 == 0 and d < 6):
        raise DomainError(f"expansion needs odd d >= 5 or even d >= 6, got d = {d}")
    scale = 2.0 * r * r
    prefactor = params.surface * r ** d
    if d % 2 == 0:
        m = d // 2 - 1
        terms_s, log_s = _even_terms_in_s(m, spec)
        log_power = -(2.0 * m - 1.0)
        remainder = log_power
    else:
        n_max = d - 4
        terms_s = _odd_terms_in_s(params.nu, n_max)
        log_s, log_power = None, None
        remainder = -(n_max + 1.5)

    ordered = sorted(terms_s.items(), key=lambda item: -item[0])
    terms = [(power, prefactor * coeff * scale ** (-power)) for power, coeff in ordered]
    log_term = None if log_s is None else (log_power, prefactor * log_s * scale ** (-log_power))
    if n_terms is not None and n_terms < len(terms):
        if n_terms < 1:
            raise DomainError(f"n_terms must be >= 1, got {n_terms}")
        remainder = terms[n_terms][0]
        terms = terms[:n_terms]
        log_term = None
    logger.debug(f"expansion(d={d}, r={r}): {len(terms)} terms, remainder t^{remainder}")
    return AsymptoticExpansion(d=d, r=r, terms=tuple(terms), log_term=log_term, remainder_order=remainder)


def identity_checks(d, spec=None):
    """Pole/tail cancellations behind the large-t expansion for even d >= 6."""
    if d % 2 or d < 6:
        raise DomainError(f"identity_checks needs even d >= 6, got d = {d}")
    m = d // 2 - 1
    zero_set = find_zeros(m)
    sign = (-1.0) ** m
    residuals = {}
    for n in range(m - 1):
        k = 2 * n + 3
        residuals[f'zeta_rho_{k}'] = zero_power_sum(zero_set, -k) + sign * g_moment(m, -(k + 1), spec)
    zeta_top = zero_power_sum(zero_set, -(2 * m + 1))
    xi_0 = _xi_table(m)[0] if spec is None else xi(m, 0, spec)
    residuals[f'zeta_xi_{2 * m + 1}'] = zeta_top + sign * xi_0
    raw = {f'zeta_{d - 1}': zeta_top, 'xi_0': xi_0}
    report = IdentityReport(d=d, residuals=residuals, raw=raw)
    if not report.passed:
        logger.warning(f"identity_checks(d={d}) residuals above {IDENTITY_TOLERANCE}: {residuals}")
    return report


def hit_probability_3d(r, distance, t):
    """P_x[tau <= t] for the ball of radius r in R^3 and |x| = distance >= r."""
    _check_time(t)
    if distance < r:
        raise DomainError(f"|x| = {distance} lies inside the ball of radius {r}")
    return float(r / distance * special.erfc((distance - r) / np.sqrt(2.0 * t)))
