"""Levy measures and Laplace exponents of Bessel first hitting times.

Downward hitting (0 <= b < a) uses the zero/G decomposition of K_|nu| with
every Gaussian double integral collapsed to erfcx. Upward hitting (a < b) uses
the product formula of I_mu over the positive zeros of J_mu.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from services import specfun
from services.errors import DomainError
from services.quadrature import (
    RULE_U_LOWER, EndpointBehavior, composite_gauss, log_square_head, power_head, quad_finite, quad_semiinf, semiinf_rule,
)
from services.zeros import find_zeros

logger = logging.getLogger('MacdonaldKit.Levy')

UPWARD_TAIL_TARGET = 1e-12
MAX_J_ZEROS = 6000
J_SCAN_STEP = 0.25


@dataclass(frozen=True)
class HittingSpec:
    nu: float
    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise DomainError(f"radii must be >= 0, got a={self.a}, b={self.b}")
        if self.a == self.b:
            raise DomainError(f"start and target coincide at {self.a}")
        if self.downward and self.b == 0 and self.nu >= 0:
            raise DomainError(f"0 is not reached from a={self.a} when nu={self.nu} >= 0")
        if not self.downward and self.a == 0 and self.nu <= -1:
            raise DomainError(f"a Bessel process with nu={self.nu} <= -1 cannot start at 0 and reach b")

    @property
    def downward(self):
        return self.b < self.a

    @property
    def direction(self):
        return 'downward' if self.downward else 'upward'


@dataclass(frozen=True)
class JZeroTable:
    mu: float
    zeros: tuple


@dataclass(frozen=True)
class LevyEval:
    spec: HittingSpec
    x: float
    density: float
    case: str
    truncation_bound: float = 0.0


@lru_cache(maxsize=32)
def _j_zeros(mu, count):
    found = []
    start = 1e-8
    while len(found) < count:
        stop = start + (count - len(found) + 4) * np.pi + 10.0
        grid = np.arange(start, stop, J_SCAN_STEP)
        values = special.jv(mu, grid)
        flips = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
        for i in flips:
            found.append(optimize.brentq(lambda x: special.jv(mu, x), grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15))
            if len(found) == count:
                break
        start = grid[-1]
    return tuple(found)


def bessel_j_zeros(mu, count):
    if mu <= -1:
        raise DomainError(f"J zeros are tabulated for mu > -1, got {mu}")
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    return JZeroTable(mu=float(mu), zeros=_j_zeros(float(mu), int(count)))


def case_label(spec):
    mu = abs(spec.nu)
    if not spec.downward:
        if spec.a == 0:
            return 'upward_from_zero'
        return 'upward' if spec.nu > -1 else 'upward_reflected_index'
    half = specfun.is_half_integer(mu)
    if spec.b == 0:
        if half:
            return '1' if mu < 1 else '2'
        return '3' if mu < 1.5 else '4'
    if half:
        return '5' if mu < 1 else '6'
    return '7' if mu < 1.5 else '8'


@lru_cache(maxsize=32)
def _eta_weights(mu):
    """Nodes eta_i and weights w_i / (eta_i G_mu(eta_i)) of the tail integral."""
    rule = semiinf_rule('power')
    return rule.nodes, rule.weights * specfun.inv_g(mu, rule.nodes) / rule.nodes


@lru_cache(maxsize=32)
def _shifted_log_rule(a, b, order=16):
    """Nodes v = log(eta sqrt(x/2)) with the erfcx kernel of order zero at each node.

    In v the kernel erfcx(e^v / a) - erfcx(e^v / b) is a fixed bump, so the
    same nodes resolve it for every x.
    """
    lo, hi = np.log(min(a, b)) - 40.0, np.log(max(a, b)) + 40.0
    v, weights = composite_gauss(np.linspace(lo, hi, int(hi - lo) + 1), order)
    scaled = np.exp(v)
    kernel = special.erfcx(scaled / a) - special.erfcx(scaled / b)
    return v, weights * kernel


def _downward_density(spec, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mu = abs(spec.nu)
    a, b = spec.a, spec.b
    density = (a - b) / np.sqrt(2.0 * np.pi * x ** 3)
    root = np.sqrt(x) / np.sqrt(2.0)

    zero_set = find_zeros(mu)
    if zero_set.count:
        zeros = np.asarray(zero_set.zeros)[:, None]
        poles = special.erfcx(-zeros * root / a)
        if b > 0:
            poles = poles - special.erfcx(-zeros * root / b)
        density -= np.real(poles.sum(axis=0)) / (2.0 * x)

    if mu == 0:
        v, weights = _shifted_log_rule(a, b)
        eta = np.exp(v[:, None] - np.log(root)[None, :])
        density += (weights @ specfun.inv_g(0.0, eta)) / (2.0 * x)
    elif not specfun.is_half_integer(mu):
        eta, weights = _eta_weights(mu)
        kernel = special.erfcx(eta[:, None] * root / a)
        if b > 0:
            kernel = kernel - special.erfcx(eta[:, None] * root / b)
        density += np.cos(np.pi * mu) * (weights @ kernel) / (2.0 * x)
        if b == 0 and mu > 0:
            # erfcx -> 1 below the first rule node
            density += np.cos(np.pi * mu) * power_head(specfun.kappa(mu), 2.0 * mu - 1.0) / (2.0 * x)
    return density


def _upward_index(spec):
    return spec.nu if spec.nu > -1 else -spec.nu


def _upward_density(spec, x):
    """Series over J zeros, with the geometric tail bound of the first omitted term."""
    index = _upward_index(spec)
    zeros = np.asarray(bessel_j_zeros(index, MAX_J_ZEROS).zeros)
    b2 = 2.0 * spec.b ** 2
    rate_b = zeros ** 2 / b2
    terms = np.exp(-rate_b * x)
    if spec.a > 0:
        terms = terms - np.exp(-zeros ** 2 / (2.0 * spec.a ** 2) * x)
    partial = np.cumsum(terms)
    cut = np.searchsorted(-np.exp(-rate_b * x), -UPWARD_TAIL_TARGET * max(partial[-1], 1e-300))
    cut = min(max(cut, 1), len(zeros) - 1)
    lead = np.exp(-rate_b[cut] * x)
    ratio = np.exp(-np.pi * zeros[cut] * x / spec.b ** 2)
    bound = lead / (1.0 - ratio) / x if ratio < 1 else np.inf
    return partial[cut - 1] / x, bound


def levy_eval(spec, x):
    if x <= 0:
        raise DomainError(f"x must be > 0, got {x}")
    case = case_label(spec)
    if spec.downward:
        return LevyEval(spec=spec, x=float(x), density=float(_downward_density(spec, x)[0]), case=case)
    value, bound = _upward_density(spec, x)
    if bound > UPWARD_TAIL_TARGET * max(abs(value), 1.0):
        logger.warning(f"Upward series at x={x} truncated with tail bound {bound:.3e}")
    return LevyEval(spec=spec, x=float(x), density=float(value), case=case, truncation_bound=float(bound))


def levy_density(spec, x):
    return levy_eval(spec, x).density


def levy_density_grid(spec, xs):
    """Vectorised downward densities; upward specs fall back to pointwise evaluation."""
    if spec.downward:
        return _downward_density(spec, xs)
    return np.array([levy_density(spec, x) for x in np.atleast_1d(xs)])


def hitting_probability(spec):
    """P(tau_{a,b} < inf) from the scale function s(x) = x^{-2 nu}."""
    nu = spec.nu
    if spec.downward:
        if spec.b == 0 or nu <= 0:
            return 1.0
        return (spec.b / spec.a) ** (2.0 * nu)
    if nu > -1 or spec.a == 0:
        return 1.0
    return (spec.a / spec.b) ** (-2.0 * nu)


def _log_g0_integral(a, b, s, spec=None):
    # int log((eta + a s) / (eta + b s)) / (eta G_0(eta)) d eta
    def integrand(eta):
        return np.log((eta + a * s) / (eta + b * s)) / eta * float(specfun.inv_g(0.0, eta))

    behavior = EndpointBehavior(at_zero='inverse_log_square', split=0.5, rate=2.0)
    return quad_semiinf(integrand, behavior, spec).value + log_square_head(np.log(a / b))


def log_laplace_direct(spec, lam):
    """The log-difference form of the conditional Laplace transform."""
    s = np.sqrt(2.0 * lam)
    mu = abs(spec.nu)
    if spec.downward:
        if spec.b == 0:
            return float(mu * np.log(spec.a * s) + specfun.log_k(mu, spec.a * s)
                         - (mu - 1.0) * np.log(2.0) - special.gammaln(mu))
        return float(mu * np.log(spec.a / spec.b) + specfun.log_k(mu, spec.a * s) - specfun.log_k(mu, spec.b * s))
    nu = spec.nu
    if spec.a == 0:
        return float(nu * np.log(spec.b * s) - nu * np.log(2.0) - special.gammaln(nu + 1.0)
                     - specfun.log_i(nu, spec.b * s))
    if nu > -1:
        return float(nu * np.log(spec.b / spec.a) + specfun.log_i(nu, spec.a * s) - specfun.log_i(nu, spec.b * s))
    return float(nu * np.log(spec.a / spec.b) + specfun.log_i(-nu, spec.a * s) - specfun.log_i(-nu, spec.b * s))


def log_laplace(spec, lam, quad_spec=None):
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    if spec.downward and spec.nu == 0:
        s = np.sqrt(2.0 * lam)
        return float(-(spec.a - spec.b) * s - _log_g0_integral(spec.a, spec.b, s, quad_spec))
    return log_laplace_direct(spec, lam)


def upward_log_laplace_series(spec, lam, count=MAX_J_ZEROS):
    """-sum_n log[(1 + 2 b^2 lam / j^2) / (1 + 2 a^2 lam / j^2)] with a 1/n tail correction."""
    zeros = np.asarray(bessel_j_zeros(_upward_index(spec), count).zeros)
    total = -np.sum(np.log1p(2.0 * spec.b ** 2 * lam / zeros ** 2) - np.log1p(2.0 * spec.a ** 2 * lam / zeros ** 2))
    # j_n ~ n pi, so the omitted terms sum to about 2 lam (b^2 - a^2) / (pi j_N)
    total -= 2.0 * lam * (spec.b ** 2 - spec.a ** 2) / (np.pi * zeros[-1])
    return float(total)


def laplace_check_integral(spec, lam, quad_spec=None):
    """int (e^{-lam x} - 1) p(x) dx with the x^{-3/2} leading term done in closed form."""
    lead = spec.a - spec.b
    closed = -lead * np.sqrt(2.0 * lam)

    def integrand(x):
        with np.errstate(over='ignore'):
            correction = _downward_density(spec, x)[0] - lead / np.sqrt(2.0 * np.pi * x ** 3)
        return np.expm1(-lam * x) * correction

    if spec.nu != 0:
        behavior = EndpointBehavior(at_infinity='power_decay', infinity_power=-1.5, split=1.0)
        return closed + quad_semiinf(integrand, behavior, quad_spec).value

    # order zero decays like 1/(x log^2 x); x = exp(1/u) turns the tail into a bounded integrand
    def mapped(u):
        x = np.exp(1.0 / u)
        return integrand(x) * x / (u * u)

    body = quad_finite(integrand, 0.0, np.e, quad_spec).value
    tail = quad_finite(mapped, RULE_U_LOWER, 1.0, quad_spec).value
    # linear extrapolation of the mapped integrand down to u = 0
    tail += 0.5 * RULE_U_LOWER * (3.0 * mapped(RULE_U_LOWER) - mapped(2.0 * RULE_U_LOWER))
    return closed + body + tail


def verify_levy(spec, lam, quad_spec=None):
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    if spec.downward:
        numeric = laplace_check_integral(spec, lam, quad_spec)
    else:
        numeric = upward_log_laplace_series(spec, lam)
    residual = abs(numeric - log_laplace(spec, lam, quad_spec))
    logger.info(f"verify_levy {spec} lambda={lam}: residual {residual:.3e}")
    return residual


def exchange_identities(c, z, nu, lam, quad_spec=None):
    """The three Levy-Khintchine exchanges behind the downward densities.

    Returns {name: (closed_form, numeric)} for the Gaussian term, the single
    zero term log(z / (z - c s)) and the G-weighted log integral.
    """
    if c <= 0 or lam <= 0:
        raise DomainError(f"c and lambda must be > 0, got c={c}, lambda={lam}")
    z = complex(z)
    if z.real >= 0:
        raise DomainError(f"zero term needs Re z < 0, got {z}")
    mu = abs(nu)
    if mu == 0:
        raise DomainError("the G-weighted log integral diverges for nu = 0; use the difference form")
    s = np.sqrt(2.0 * lam)
    scale = np.sqrt(2.0) * c
    power_tail = EndpointBehavior(at_infinity='power_decay', infinity_power=-1.5, split=1.0)

    gaussian = quad_semiinf(
        lambda x: np.expm1(-lam * x) * c / np.sqrt(2.0 * np.pi * x ** 3), power_tail, quad_spec
    ).value

    zero_numeric = quad_semiinf(
        lambda x: np.expm1(-lam * x) / (2.0 * x) * special.erfcx(-z * np.sqrt(x) / scale),
        power_tail, quad_spec, complex_valued=True,
    ).value

    eta, weights = _eta_weights(mu)
    g_numeric = quad_semiinf(
        lambda x: -np.expm1(-lam * x) / (2.0 * x) * float(weights @ special.erfcx(eta * np.sqrt(x) / scale)),
        power_tail, quad_spec,
    ).value
    g_closed = quad_semiinf(
        lambda y: np.log1p(c * s / y) / y * float(specfun.inv_g(mu, y)), EndpointBehavior(rate=2.0), quad_spec
    ).value

    return {
        'gaussian': (-c * s, gaussian),
        'zero': (complex(np.log(z / (z - c * s))), zero_numeric),
        'g_weighted': (g_closed, g_numeric),
    }
