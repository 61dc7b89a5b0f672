"""Invariant suites behind `validate`; each check returns (passed, detail)."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import special

from services import levy, ratios, sausage, specfun, zeros
from services.errors import MacdonaldKitError
from services.oracle.talbot import talbot

logger = logging.getLogger('MacdonaldKit.Validation')


@dataclass(frozen=True)
class CheckResult:
    suite: str
    check: str
    passed: bool
    detail: str


def _within(value, target, tol, relative=False):
    error = abs(value - target)
    if relative:
        error /= abs(target)
    return error < tol, f"value={value!r} target={target!r} error={error:.3e} tol={tol:g}"


def _wronskian():
    worst = 0.0
    for nu in (0.0, 0.3, 1.0, 2.7):
        for x in (0.2, 1.0, 7.5):
            pair, upper = specfun.ik_scaled(nu, x), specfun.ik_scaled(nu + 1.0, x)
            # I_nu K_{nu+1} + I_{nu+1} K_nu = 1/x; the scalings cancel
            value = pair.i_scaled * upper.k_scaled + upper.i_scaled * pair.k_scaled
            worst = max(worst, abs(value * x - 1.0))
    return worst < 1e-12, f"worst relative error {worst:.3e}"


def _recurrence():
    worst = 0.0
    for nu in (0.4, 1.5, 3.2):
        for x in (0.5, 2.0, 9.0):
            lhs = special.kve(nu + 1.0, x)
            rhs = special.kve(abs(nu - 1.0), x) + 2.0 * nu / x * special.kve(nu, x)
            worst = max(worst, abs(lhs - rhs) / abs(lhs))
    return worst < 1e-12, f"worst relative error {worst:.3e}"


def _continuation():
    z = 1.3 * np.exp(-0.7j)
    value = specfun.continued_k(1.7, z)
    target = complex(special.kv(1.7, np.exp(1j * np.pi) * z))
    return _within(value, target, 1e-10, relative=True)


def _half_integer_closed_form():
    return _within(specfun.k_complex(2.5, 1.7), float(special.kv(2.5, 1.7)), 1e-13, relative=True)


def _small_argument_law():
    nu, x = 1.3, 1e-6
    leading = special.gamma(nu) * 2.0 ** (nu - 1.0) * x ** (-nu)
    return _within(float(np.exp(specfun.log_k(nu, x))) / leading, 1.0, 1e-6)


def _g_kernel():
    mu, x = 0.7, 0.9
    k, i = special.kv(mu, x), special.iv(mu, x)
    direct = k * k + np.pi ** 2 * i * i + 2.0 * np.pi * np.sin(np.pi * mu) * k * i
    return _within(specfun.g_fun(mu, x).value, direct, 1e-13, relative=True)


def _zeros_k2():
    zero_set = zeros.find_zeros(2.0)
    upper = max(zero_set.zeros, key=lambda z: z.imag)
    ok = abs(upper.real + 1.28) < 0.01 and abs(upper.imag - 0.43) < 0.01 and max(zero_set.residuals) < 1e-10
    return ok, f"zeros={zero_set.zeros} residuals={zero_set.residuals}"


def _zeros_k3():
    zero_set = zeros.find_zeros(3.0)
    upper = max(zero_set.zeros, key=lambda z: z.imag)
    ok = abs(upper.real + 1.68) < 0.01 and abs(upper.imag - 1.31) < 0.01
    return ok, f"zeros={zero_set.zeros}"


def _half_integer_zeros():
    zero_set = zeros.find_zeros(2.5)
    target = complex(-1.5, np.sqrt(3.0) / 2.0)
    upper = max(zero_set.zeros, key=lambda z: z.imag)
    return _within(upper, target, 1e-12)


def _signed_order_zero():
    zero_set = zeros.find_zeros(1.5)
    return _within(zero_set.zeros[0], -1.0, 1e-12)


def _counting():
    worst = 0.0
    for nu in (0.0, 1.0, 2.0, 3.0, 2.6, 4.0, 5.3):
        worst = max(worst, abs(zeros.count_zeros_numeric(nu) - zeros.count_zeros(nu)))
    return worst < 1e-6, f"worst count error {worst:.3e}"


def _route_agreement():
    worst = max(zeros.find_zeros(nu).route_agreement for nu in (2.0, 2.2, 3.0))
    return worst < 1e-6, f"worst route agreement {worst:.3e}"


def _ratio_decomposition():
    worst = 0.0
    for nu in (0.3, 1.2, 2.0, 3.7):
        for w in (0.8, 2.5 * np.exp(0.75j * np.pi), 2.5 * np.exp(-0.75j * np.pi)):
            direct = ratios.ratio_direct(nu, w)
            decomposed = ratios.ratio_decomposed(nu, w).total
            worst = max(worst, abs(decomposed - direct) / abs(direct))
    return worst < 1e-8, f"worst relative error {worst:.3e}"


def _levy_generic():
    specs = [
        levy.HittingSpec(nu=0.0, a=2.0, b=1.0),
        levy.HittingSpec(nu=0.3, a=2.0, b=1.0),
        levy.HittingSpec(nu=2.0, a=2.0, b=1.0),
        levy.HittingSpec(nu=-1.2, a=1.5, b=0.0),
        levy.HittingSpec(nu=0.4, a=1.0, b=2.0),
    ]
    worst = max(levy.verify_levy(spec, 1.0) for spec in specs)
    return worst < 1e-5, f"worst residual {worst:.3e}"


def _levy_exact():
    worst = max(levy.verify_levy(levy.HittingSpec(nu=nu, a=2.0, b=1.0), 1.0) for nu in (0.5, -0.5))
    return worst < 1e-9, f"worst residual {worst:.3e}"


def _sausage_d3():
    params = sausage.SausageParams(d=3, r=1.3)
    return _within(sausage.volume_generic(params, 2.0), sausage.volume(params, 2.0), 1e-10, relative=True)


def _sausage_rho():
    return _within(sausage.constants(1.0).rho[0], 1.0, 1e-8)


def _sausage_identities():
    worst = 0.0
    for d in (6, 8):
        report = sausage.identity_checks(d)
        worst = max(worst, max(abs(v) for v in report.residuals.values()))
    return worst < 1e-7, f"worst residual {worst:.3e}"


def _sausage_talbot():
    params = sausage.SausageParams(d=4, r=1.0)
    exact = sausage.volume(params, 1.0)
    inverted = talbot(lambda lam: sausage.laplace_L(params, lam), 1.0)
    return _within(inverted, exact, 1e-5, relative=True)


SUITES = {
    'specfun': {
        'wronskian': _wronskian,
        'recurrence': _recurrence,
        'continuation': _continuation,
        'half_integer_closed_form': _half_integer_closed_form,
        'small_argument_law': _small_argument_law,
        'g_kernel': _g_kernel,
    },
    'zeros': {
        'zeros_k2': _zeros_k2,
        'zeros_k3': _zeros_k3,
        'half_integer_zeros': _half_integer_zeros,
        'signed_order_zero': _signed_order_zero,
        'counting': _counting,
        'route_agreement': _route_agreement,
        'ratio_decomposition': _ratio_decomposition,
    },
    'levy': {
        'verify_generic': _levy_generic,
        'verify_exact': _levy_exact,
    },
    'sausage': {
        'd3_generic_path': _sausage_d3,
        'rho_nu1': _sausage_rho,
        'large_d_identities': _sausage_identities,
        'talbot_d4': _sausage_talbot,
    },
}


def run_suite(name):
    names = list(SUITES) if name == 'all' else [name]
    results = []
    for suite in names:
        for check, fn in SUITES[suite].items():
            try:
                passed, detail = fn()
            except MacdonaldKitError as e:
                passed, detail = False, f"{type(e).__name__}: {e}"
            if not passed:
                logger.warning(f"{suite}.{check} failed: {detail}")
            results.append(CheckResult(suite=suite, check=check, passed=bool(passed), detail=detail))
    return results
