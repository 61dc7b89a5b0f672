"""Adaptive integration over (0, inf) with declared endpoint behaviour."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from services.errors import DomainError, QuadratureError

logger = logging.getLogger('MacdonaldKit.Quadrature')

ZERO_BEHAVIORS = ('regular', 'power', 'inverse_log_square')
INFINITY_BEHAVIORS = ('exp_decay', 'power_decay')
# e^{-TRUNCATION_DECAYS} is far below any abs_tol we accept
TRUNCATION_DECAYS = 40.0
INVERSE_LOG_SPLIT = 0.5
# the fixed rules and the inverse-log-square map start at y = exp(RULE_LOG_LOWER)
RULE_LOG_LOWER = -690.0
RULE_U_LOWER = -1.0 / RULE_LOG_LOWER


@dataclass(frozen=True)
class QuadSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError(f"Tolerances must be positive, got rel={self.rel_tol}, abs={self.abs_tol}")
        if self.max_subdivisions < 1:
            raise DomainError(f"max_subdivisions must be >= 1, got {self.max_subdivisions}")


@dataclass(frozen=True)
class EndpointBehavior:
    at_zero: str = 'regular'
    zero_power: float = 0.0
    at_infinity: str = 'exp_decay'
    rate: float = 1.0
    infinity_power: float = -2.0
    split: float = 1.0

    def __post_init__(self):
        if self.at_zero not in ZERO_BEHAVIORS:
            raise DomainError(f"Unknown behavior at zero: {self.at_zero!r}")
        if self.at_infinity not in INFINITY_BEHAVIORS:
            raise DomainError(f"Unknown behavior at infinity: {self.at_infinity!r}")
        if self.at_zero == 'power' and self.zero_power <= -1:
            raise DomainError(f"x^{self.zero_power} is not integrable at 0")
        if self.at_infinity == 'exp_decay' and self.rate <= 0:
            raise DomainError(f"Decay rate must be positive, got {self.rate}")
        if self.at_infinity == 'power_decay' and self.infinity_power >= -1:
            raise DomainError(f"x^{self.infinity_power} is not integrable at infinity")
        if self.split <= 0:
            raise DomainError(f"split must be positive, got {self.split}")


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float


EXP_DECAY = EndpointBehavior()
LOG_SINGULAR = EndpointBehavior(at_zero='inverse_log_square', split=INVERSE_LOG_SPLIT)


def _guarded(f):
    def wrapped(x):
        value = f(x)
        if np.isnan(value):
            raise QuadratureError(f"Integrand returned NaN at x = {x}")
        return value
    return wrapped


def _quad(f, lo, hi, spec):
    value, error, info, *rest = integrate.quad(
        _guarded(f), lo, hi,
        epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        limit=spec.max_subdivisions, full_output=1
    )
    if rest:
        message = rest[0]
        # QUADPACK flags roundoff long before the answer is unusable
        slack = max(1e-6 * abs(value), 1e3 * spec.abs_tol)
        if not np.isfinite(value) or error > slack:
            raise QuadratureError(
                f"Integration over [{lo}, {hi}] failed after {info.get('last')} subdivisions: "
                f"value={value}, error={error}: {message}"
            )
        logger.debug(f"Accepting [{lo}, {hi}] with error={error}: {message}")
    return value, error


def _quad_real(f, behavior, spec, truncation_scale):
    c = behavior.split
    if behavior.at_zero == 'inverse_log_square':
        upper_u = 1.0 / np.log(1.0 / c) if c < 1 else np.inf
        if not np.isfinite(upper_u):
            raise DomainError("inverse_log_square needs split < 1")

        def mapped(u):
            y = np.exp(-1.0 / u)
            return f(y) * y / (u * u)

        head, head_err = _quad(mapped, RULE_U_LOWER, upper_u, spec)
    else:
        head, head_err = _quad(f, 0.0, c, spec)

    if behavior.at_infinity == 'exp_decay':
        cut = c + truncation_scale * TRUNCATION_DECAYS / behavior.rate
        body, body_err = _quad(f, c, cut, spec)
        tail, tail_err = _quad(f, cut, np.inf, spec)
    else:
        body, body_err = _quad(f, c, np.inf, spec)
        tail, tail_err = 0.0, 0.0
    return head + body + tail, head_err + body_err + tail_err


def quad_semiinf(f, behavior=EXP_DECAY, spec=None, complex_valued=False, truncation_scale=1.0):
    """Integrate f over (0, inf).

    The interval is split at behavior.split. The piece next to 0 is handled by
    QUADPACK's extrapolation, or by the substitution y = exp(-1/u) when the
    integrand carries the 1/(y log^2 y) singularity of 1/(y G_0); that map
    stops at y = exp(RULE_LOG_LOWER) and callers add log_square_head. The infinite
    piece is truncated after TRUNCATION_DECAYS e-folds for exponential decay
    (the remainder is still integrated) and mapped rationally otherwise.
    """
    spec = spec or QuadSpec()
    if not complex_valued:
        value, error = _quad_real(f, behavior, spec, truncation_scale)
        return QuadResult(value=value, error=error)
    re, re_err = _quad_real(lambda x: float(np.real(f(x))), behavior, spec, truncation_scale)
    im, im_err = _quad_real(lambda x: float(np.imag(f(x))), behavior, spec, truncation_scale)
    return QuadResult(value=complex(re, im), error=float(np.hypot(re_err, im_err)))


def quad_finite(f, lo, hi, spec=None):
    """Integrate f over [lo, hi]; integrable endpoint singularities are allowed."""
    if not lo < hi:
        raise DomainError(f"Need lo < hi, got [{lo}, {hi}]")
    value, error = _quad(f, lo, hi, spec or QuadSpec())
    return QuadResult(value=value, error=error)


def power_head(coefficient, exponent):
    """int_0^eps coefficient * y^exponent dy for the piece semiinf_rule leaves out."""
    if exponent <= -1:
        raise DomainError(f"y^{exponent} is not integrable at 0")
    return coefficient * np.exp((exponent + 1.0) * RULE_LOG_LOWER) / (exponent + 1.0)


def log_square_head(coefficient):
    """int_0^eps coefficient / (y G_0(y)) dy below the inverse-log-square map.

    There K_0(y) = log(2/y) - gamma and I_0(y) = 1 to double precision, so with
    L = log(2/eps) - gamma the piece is coefficient * atan(pi / L) / pi.
    """
    level = -RULE_LOG_LOWER + np.log(2.0) - np.euler_gamma
    return coefficient * np.arctan(np.pi / level) / np.pi


def quad_gauss_laplace(t, y, k=0):
    """Closed form of int_0^inf exp(-x^2/(4t) - x y) x^k dx for k in {0, 1}.

    y may be complex with a non-negative real part.
    """
    if t <= 0:
        raise DomainError(f"t must be > 0, got {t}")
    if np.isreal(y) and np.real(y) < 0:
        raise DomainError(f"y must be >= 0, got {y}")
    base = np.sqrt(np.pi * t) * special.erfcx(y * np.sqrt(t))
    if k == 0:
        return base
    if k == 1:
        return 2.0 * t - 2.0 * t * y * base
    raise DomainError(f"k must be 0 or 1, got {k}")


def gauss_laplace_raw(t, y, k=0, spec=None):
    """Uncollapsed version of quad_gauss_laplace, kept as an oracle."""
    behavior = EndpointBehavior(at_infinity='exp_decay', rate=max(y, 1.0 / np.sqrt(t)), split=np.sqrt(t))
    return quad_semiinf(lambda x: np.exp(-x * x / (4.0 * t) - x * y) * x ** k, behavior, spec).value


@dataclass(frozen=True)
class QuadRule:
    """Fixed nodes and weights for int_0^inf, reusable across many integrands."""
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))


def gaussian_quadrature(a, b, n):
    x, w = special.roots_legendre(n)
    points = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return points, weights


def composite_gauss(edges, order):
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gaussian_quadrature(lo, hi, order)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


_RULE_CACHE = {}


def semiinf_rule(at_zero='power', upper=41.0, order=16):
    """Composite Gauss-Legendre rule on (0, upper] for integrands with exp(-2y) decay.

    Near 0 the rule works in s = log y (power laws become exponentials in s) or,
    for the inverse-log-square law, in u = 1 / log(1/y).
    """
    key = (at_zero, upper, order)
    if key in _RULE_CACHE:
        return _RULE_CACHE[key]
    if at_zero == 'inverse_log_square':
        u_edges = np.linspace(RULE_U_LOWER, 1.0 / np.log(2.0), 13)
        u, wu = composite_gauss(u_edges, order)
        y_head = np.exp(-1.0 / u)
        w_head = wu * y_head / (u * u)
        y_mid, w_mid = composite_gauss(np.linspace(0.5, 1.0, 3), order)
        head_nodes = np.concatenate([y_head, y_mid])
        head_weights = np.concatenate([w_head, w_mid])
    elif at_zero in ('power', 'regular'):
        s_edges = np.concatenate([np.linspace(RULE_LOG_LOWER, -20.0, 34, endpoint=False), np.linspace(-20.0, 0.0, 21)])
        s, ws = composite_gauss(s_edges, order)
        head_nodes = np.exp(s)
        head_weights = ws * head_nodes
    else:
        raise DomainError(f"Unknown behavior at zero: {at_zero!r}")
    tail_nodes, tail_weights = composite_gauss(np.linspace(1.0, upper, int(upper - 1.0) // 2 + 1), order)
    keep = head_nodes > 0
    rule = QuadRule(
        nodes=np.concatenate([head_nodes[keep], tail_nodes]),
        weights=np.concatenate([head_weights[keep], tail_weights]),
    )
    _RULE_CACHE[key] = rule
    return rule
