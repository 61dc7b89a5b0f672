"""Complex zeros of K_nu: counting, coefficient series, Newton identities, refinement.

Two independent polynomial routes feed the root finder for non-half-integer
orders. The descending route builds power sums of the zeros from the large-x
coefficients a_n and integrals of y^k / G_nu; the ascending route builds power
sums of the reciprocals from the small-x coefficients b_n and integrals of
1 / (y^{k+1} G_nu). Both are turned into polynomials with Newton's identities.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from services import specfun
from services.errors import CrossValidationError, DomainError
from services.quadrature import EndpointBehavior, QuadSpec, log_square_head, quad_semiinf

logger = logging.getLogger('MacdonaldKit.Zeros')

ROUTE_TOLERANCE = 1e-6
ROUTE_FAILURE = 1e-4
NEWTON_MAX_ITER = 50
RESIDUAL_TARGET = 1e-10
REAL_TOL = 1e-9
MAX_NEWTON_STEP = 0.5


@dataclass(frozen=True)
class PowerSums:
    direction: str
    nu: float
    values: tuple

    def __post_init__(self):
        if self.direction not in ('descending', 'ascending'):
            raise DomainError(f"direction must be 'descending' or 'ascending', got {self.direction!r}")


@dataclass(frozen=True)
class MonicPoly:
    """Coefficients in ascending powers; coeffs[-1] == 1."""
    coeffs: tuple

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def roots(self):
        if self.degree == 0:
            return np.array([], dtype=complex)
        return np.roots(np.asarray(self.coeffs[::-1], dtype=complex))

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, np.asarray(self.coeffs))


@dataclass(frozen=True)
class SeriesCoeffs:
    kind: str
    nu: float
    values: tuple


@dataclass(frozen=True)
class ZeroSet:
    nu: float
    count: int
    zeros: tuple
    residuals: tuple
    route_agreement: float = 0.0
    routes: dict = field(default_factory=dict, compare=False)


def count_zeros(nu):
    """Number of zeros of K_nu: |nu| - 1/2 at half-integers, else the even integer nearest |nu| - 1/2."""
    shifted = abs(nu) - 0.5
    if specfun.is_half_integer(nu):
        return max(int(round(shifted)), 0)
    return int(2 * round(shifted / 2.0))


def theta(nu):
    if specfun.is_half_integer(nu) and int(round(nu - 0.5)) % 2 != 0:
        raise DomainError(f"theta is undefined when nu - 1/2 is odd, got nu = {nu}")
    return float(np.arctan2(np.cos(np.pi * nu), np.sin(np.pi * nu)))


def g_moment(nu, power, spec=None):
    """int_0^inf y^power / G_|nu|(y) dy."""
    mu = abs(nu)
    if mu == 0 and power == -1:
        behavior = EndpointBehavior(at_zero='inverse_log_square', split=0.5, rate=2.0)
        return quad_semiinf(lambda y: float(specfun.inv_g(0.0, y)) / y, behavior, spec).value + log_square_head(1.0)
    if power <= -1 - 2 * mu:
        raise DomainError(f"int y^{power}/G_{mu} diverges at 0")
    behavior = EndpointBehavior(rate=2.0)
    return quad_semiinf(lambda y: y ** power * float(specfun.inv_g(mu, y)), behavior, spec).value


def count_zeros_numeric(nu, spec=None):
    """nu - 1/2 + cos(pi nu) int dy / (y G_nu) for nu >= 0."""
    mu = abs(nu)
    return mu - 0.5 + np.cos(np.pi * mu) * g_moment(mu, -1, spec)


def _series_a(nu, order):
    # (nu+1, n)/2^n = sum_k (nu, n-k)/2^{n-k} a_k
    a = [1.0]
    for n in range(1, order + 1):
        lhs = specfun.hankel_symbol(nu + 1.0, n) / 2.0 ** n
        acc = sum(specfun.hankel_symbol(nu, n - k) / 2.0 ** (n - k) * a[k] for k in range(n))
        a.append(lhs - acc)
    return a


def small_x_band(nu):
    """The integer N >= 1 with N + 1/2 < nu < N + 3/2, or None."""
    nu = abs(nu)
    band = int(np.floor(nu - 0.5))
    if band < 1 or specfun.is_half_integer(nu):
        return None
    return band


def _series_b(nu, order):
    # b solves the convolution of the small-x expansions of K_{nu+1} and K_nu
    def coefficient(upper, n, gamma_shift):
        return special.binom(upper, n) * 2.0 ** n * special.gamma(gamma_shift - n) / special.gamma(gamma_shift)

    b = [1.0]
    for n in range(1, order + 1):
        lhs = coefficient(nu + 0.5, n, 2.0 * nu + 2.0)
        acc = sum(coefficient(nu - 0.5, n - k, 2.0 * nu) * b[k] for k in range(n))
        b.append(lhs - acc)
    return b


def series_coeffs(kind, nu, order):
    if order < 0:
        raise DomainError(f"order must be >= 0, got {order}")
    if kind == 'a_large_x':
        return SeriesCoeffs(kind=kind, nu=float(nu), values=tuple(_series_a(nu, order)))
    if kind == 'b_small_x':
        band = small_x_band(nu)
        if band is None:
            raise DomainError(f"b-coefficients need N + 1/2 < nu < N + 3/2 with N >= 1, got nu = {nu}")
        if order > 2 * band + 1:
            raise DomainError(f"b-coefficients at nu = {nu} are defined up to order {2 * band + 1}, got {order}")
        return SeriesCoeffs(kind=kind, nu=float(nu), values=tuple(_series_b(abs(nu), order)))
    raise DomainError(f"Unknown series kind {kind!r}")


def _check_power_sum_order(nu):
    mu = abs(nu)
    if mu <= 1.5 or specfun.is_half_integer(mu):
        raise DomainError(f"power sums need |nu| > 3/2 and nu - 1/2 not an integer, got nu = {nu}")


def power_sums(direction, nu, count=None, spec=None):
    """Power sums of the zeros (descending) or of their reciprocals (ascending), n = 1..count."""
    _check_power_sum_order(nu)
    mu = abs(nu)
    count = count_zeros(mu) if count is None else count
    c = np.cos(np.pi * mu)
    values = []
    if direction == 'descending':
        a = _series_a(mu, count + 1)
        for n in range(1, count + 1):
            integral = g_moment(mu, n - 1, spec)
            values.append(-a[n + 1] + (-1) ** n * c * integral)
    elif direction == 'ascending':
        band = small_x_band(mu)
        if count > 2 * band:
            raise DomainError(f"ascending power sums at nu = {nu} are available up to n = {2 * band}, got {count}")
        b = _series_b(mu, count)
        for n in range(1, count + 1):
            integral = g_moment(mu, -n - 1, spec)
            # the constant 1 of the ratio decomposition lands on n = 1
            shift = -1.0 if n == 1 else 0.0
            values.append(2.0 * mu * b[n] + shift + (-1) ** n * c * integral)
    else:
        raise DomainError(f"direction must be 'descending' or 'ascending', got {direction!r}")
    return PowerSums(direction=direction, nu=float(nu), values=tuple(values))


def _elementary_from_power_sums(p, degree):
    # xi_n = -(1/n) sum_{k=1}^{n} xi_{n-k} p_k
    xi = [1.0 + 0j]
    for n in range(1, degree + 1):
        xi.append(-sum(xi[n - k] * p[k - 1] for k in range(1, n + 1)) / n)
    return xi


def newton_poly(ps, degree=None):
    """Monic polynomial whose roots are the zeros encoded by the power sums."""
    degree = len(ps.values) if degree is None else degree
    if degree < 0 or len(ps.values) < degree:
        raise DomainError(f"Need at least {degree} power sums, got {len(ps.values)}")
    xi = _elementary_from_power_sums(ps.values, degree)
    if ps.direction == 'descending':
        # prod (z - z_j) = sum_n xi_{N-n} z^n
        coeffs = [xi[degree - n] for n in range(degree + 1)]
    else:
        # prod (1 - z / z_j) = sum_n xi_n z^n, normalised to monic
        if abs(xi[degree]) == 0:
            raise DomainError("Reciprocal power sums give a vanishing leading coefficient")
        coeffs = [x / xi[degree] for x in xi]
    return MonicPoly(coeffs=tuple(complex(c) for c in coeffs))


def half_integer_poly(nu):
    if not specfun.is_half_integer(nu) or abs(nu) < 1.5:
        raise DomainError(f"half_integer_poly needs nu = n + 1/2 with n >= 1, got {nu}")
    mu = abs(nu)
    n = int(round(mu - 0.5))
    coeffs = [specfun.hankel_symbol(mu, n - k) / 2.0 ** (n - k) for k in range(n + 1)]
    return MonicPoly(coeffs=tuple(complex(c) for c in coeffs))


def _clamp(step):
    size = abs(step)
    return step * (MAX_NEWTON_STEP / size) if size > MAX_NEWTON_STEP else step


def refine_polynomial(poly, z, max_iter=NEWTON_MAX_ITER):
    """Newton iteration on a MonicPoly; real roots on the negative axis are reachable."""
    coeffs = np.asarray(poly.coeffs)
    derivative = np.polynomial.polynomial.polyder(coeffs)
    for _ in range(max_iter):
        slope = np.polynomial.polynomial.polyval(z, derivative)
        if slope == 0:
            break
        step = _clamp(poly(z) / slope)
        z = z - step
        if abs(step) < 1e-15 * max(abs(z), 1.0):
            break
    return complex(z)


def refine(nu, z, max_iter=NEWTON_MAX_ITER):
    """Complex Newton iteration on K_nu with |step| <= MAX_NEWTON_STEP."""
    z = complex(z)
    if specfun.is_half_integer(nu) and abs(nu) >= 1.5:
        return refine_polynomial(half_integer_poly(nu), z, max_iter)
    side = 1.0 if z.imag >= 0 else -1.0
    for _ in range(max_iter):
        value = specfun.k_complex(nu, z)
        step = _clamp(value / specfun.k_prime_complex(nu, z))
        z = z - step
        if z.imag == 0 and z.real <= 0:
            # stay on the sheet the iteration started from
            z = complex(z.real, side * REAL_TOL * max(abs(z), 1.0))
        if z.imag != 0:
            side = 1.0 if z.imag > 0 else -1.0
        if abs(step) < 1e-15 * max(abs(z), 1.0):
            break
    return z


def _pair_conjugates(zeros):
    """Symmetrise the zero list so that it is closed under conjugation."""
    paired = []
    remaining = sorted(zeros, key=lambda z: (round(z.real, 8), z.imag))
    used = [False] * len(remaining)
    for i, z in enumerate(remaining):
        if used[i]:
            continue
        used[i] = True
        if abs(z.imag) < REAL_TOL * max(abs(z), 1.0):
            paired.append(complex(z.real, 0.0))
            continue
        j = min(
            (k for k in range(len(remaining)) if not used[k]),
            key=lambda k: abs(remaining[k] - z.conjugate()),
            default=None,
        )
        if j is None:
            paired.append(z)
            continue
        used[j] = True
        mean = 0.5 * (z + remaining[j].conjugate())
        paired.extend([mean, mean.conjugate()])
    return sorted(paired, key=lambda z: (z.real, z.imag))


def _match_distance(first, second):
    """Largest distance after greedily matching two root lists."""
    pool = list(second)
    worst = 0.0
    for z in first:
        k = int(np.argmin([abs(z - w) for w in pool]))
        worst = max(worst, abs(z - pool.pop(k)))
    return worst


def polynomial_routes(nu, spec=None):
    """Descending and ascending polynomials for a non-half-integer order."""
    mu = abs(nu)
    count = count_zeros(mu)
    descending = newton_poly(power_sums('descending', mu, count, spec), count)
    ascending = newton_poly(power_sums('ascending', mu, count, spec), count)
    return descending, ascending


def _k_residual(mu, z):
    # the real zero of a signed half-integer order sits on the cut; read K from above
    if specfun.is_half_integer(mu):
        return specfun.k_half_integer(mu, z)
    return specfun.k_complex(mu, z)


@lru_cache(maxsize=64)
def _find_zeros_cached(mu):
    return _find_zeros(mu, None)


def find_zeros(nu, spec=None, route_tolerance=ROUTE_TOLERANCE, route_failure=ROUTE_FAILURE,
               max_iter=NEWTON_MAX_ITER, residual_target=RESIDUAL_TARGET):
    defaults = (route_tolerance, route_failure, max_iter, residual_target) == \
        (ROUTE_TOLERANCE, ROUTE_FAILURE, NEWTON_MAX_ITER, RESIDUAL_TARGET)
    if spec is None and defaults:
        return _find_zeros_cached(float(abs(nu)))
    return _find_zeros(abs(nu), spec, route_tolerance, route_failure, max_iter, residual_target)


def _find_zeros(mu, spec, route_tolerance=ROUTE_TOLERANCE, route_failure=ROUTE_FAILURE,
                max_iter=NEWTON_MAX_ITER, residual_target=RESIDUAL_TARGET):
    count = count_zeros(mu)
    if count == 0:
        return ZeroSet(nu=mu, count=0, zeros=(), residuals=())

    routes = {}
    agreement = 0.0
    if specfun.is_half_integer(mu):
        raw = half_integer_poly(mu).roots()
        routes['half_integer'] = tuple(raw)
    else:
        descending, ascending = polynomial_routes(mu, spec)
        raw = descending.roots()
        other = ascending.roots()
        routes['descending'] = tuple(raw)
        routes['ascending'] = tuple(other)
        agreement = _match_distance(raw, other)
        logger.info(f"Zero routes for nu={mu}: agreement {agreement:.3e}")
        if agreement > route_failure:
            raise CrossValidationError(
                f"Descending and ascending zero routes disagree by {agreement:.3e} at nu = {mu}"
            )
        if agreement > route_tolerance:
            logger.warning(f"Zero routes at nu={mu} agree only to {agreement:.3e}")

    refined = [refine(mu, complex(z), max_iter) for z in raw]
    zeros = _pair_conjugates(refined)
    residuals = [abs(_k_residual(mu, z)) for z in zeros]
    for z, res in zip(zeros, residuals):
        logger.debug(f"nu={mu}: zero {z} residual {res:.3e}")
        if res > residual_target:
            logger.warning(f"nu={mu}: zero {z} refined only to |K| = {res:.3e}")
    return ZeroSet(
        nu=mu, count=count, zeros=tuple(zeros), residuals=tuple(residuals),
        route_agreement=agreement, routes=routes,
    )


def zero_power_sum(zero_set, n):
    """sum_j z_j^n over a ZeroSet, real by conjugate symmetry."""
    return float(np.real(sum(z ** n for z in zero_set.zeros)))
