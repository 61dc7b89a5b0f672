"""Monte Carlo oracles: Brownian hitting of a ball and Bessel first passage.

Every estimator splits its paths over `workers` threads. Worker w draws from
its own stream SeedSequence(seed).spawn(workers)[w], and results are merged in
worker order, so a run is reproducible for a fixed (seed, workers) pair.
"""
import logging
import threading
from dataclasses import dataclass

import numpy as np
from scipy import special

from services.errors import BudgetError, DomainError
from services.levy import HittingSpec, hitting_probability
from services.quadrature import EndpointBehavior, quad_semiinf
from services.settings_manager import thread_cap

logger = logging.getLogger('MacdonaldKit.MonteCarlo')

SCHEMES = ('euler', 'exact')
SAUSAGE_DIMENSIONS = (2, 3, 4, 5, 6)
SHELLS = 16
PILOT_FRACTION = 0.1
MIN_SHELL_PATHS = 16
# dt may not exceed (a - b)^2 / STEP_RATIO for Bessel runs
STEP_RATIO = 100.0
DEFAULT_LAMBDAS = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class MCConfig:
    paths: int = 20000
    dt: float = 0.01
    seed: int = 20240607
    workers: int = 4
    scheme: str = 'euler'
    truncation_radius: float = None
    horizon: float = 20.0

    def __post_init__(self):
        if self.paths < 1:
            raise DomainError(f"paths must be >= 1, got {self.paths}")
        if not self.dt > 0:
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        if self.scheme not in SCHEMES:
            raise DomainError(f"Unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be > 0, got {self.horizon}")


@dataclass(frozen=True)
class MCResult:
    estimate: float
    stderr: float
    paths: int
    truncation_bias: float = 0.0


@dataclass(frozen=True)
class BesselHitSummary:
    nu: float
    a: float
    b: float
    horizon: float
    paths: int
    hit_fraction: float
    hit_fraction_stderr: float
    hit_probability: float
    hit_probability_stderr: float
    lambdas: tuple
    laplace: tuple
    laplace_stderr: tuple


def effective_workers(cfg):
    cap = thread_cap()
    workers = cfg.workers if cap is None else min(cfg.workers, cap)
    return max(1, min(workers, cfg.paths))


def _split(n, workers):
    base, extra = divmod(n, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def run_workers(job, n, seed_seq, workers):
    """Run job(rng, count) on each worker's share of n paths and stack the outputs in worker order."""
    counts = _split(n, workers)
    streams = seed_seq.spawn(workers)
    results = [None] * workers
    errors = []

    def worker(index):
        try:
            if counts[index]:
                results[index] = job(np.random.default_rng(streams[index]), counts[index])
        except Exception as e:
            errors.append(e)

    threads = [threading.Thread(target=worker, args=(w,), daemon=True) for w in range(workers)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    if errors:
        raise errors[0]
    return np.concatenate([r for r in results if r is not None], axis=-1)


def _mean_and_stderr(samples):
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[-1]
    mean = samples.mean(axis=-1)
    stderr = samples.std(axis=-1, ddof=1) / np.sqrt(n) if n > 1 else np.full_like(mean, np.inf)
    return mean, stderr


def _ball_hit(rng, radii, d, r, t, dt):
    """Per-path P[tau <= t] given the discrete path, with the bridge crossing probability folded in."""
    n_steps = max(1, int(np.ceil(t / dt)))
    h = t / n_steps
    x = np.zeros((radii.size, d))
    x[:, 0] = radii
    gap = radii - r
    survive = np.ones(radii.size)
    for _ in range(n_steps):
        x += np.sqrt(h) * rng.standard_normal(x.shape)
        new_gap = np.linalg.norm(x, axis=1) - r
        crossed = np.exp(-2.0 * np.maximum(gap, 0.0) * np.maximum(new_gap, 0.0) / h)
        survive *= np.where(new_gap <= 0.0, 0.0, 1.0 - crossed)
        gap = new_gap
    return 1.0 - survive


def _check_ball(d, r, t):
    if d not in SAUSAGE_DIMENSIONS:
        raise DomainError(f"Monte Carlo sausage runs need d in {SAUSAGE_DIMENSIONS}, got d = {d}")
    if not r > 0 or not t > 0:
        raise DomainError(f"Need r > 0 and t > 0, got r = {r}, t = {t}")


def mc_hit_probability(d, r, distance, t, cfg=None):
    """P_x[tau <= t] for Brownian motion in R^d started at |x| = distance > r."""
    cfg = cfg or MCConfig()
    _check_ball(d, r, t)
    if distance <= r:
        raise DomainError(f"Start must lie outside the ball: |x| = {distance} <= r = {r}")
    workers = effective_workers(cfg)
    seed_seq = np.random.SeedSequence(cfg.seed)

    def job(rng, count):
        return _ball_hit(rng, np.full(count, float(distance)), d, r, t, cfg.dt)

    samples = run_workers(job, cfg.paths, seed_seq, workers)
    mean, stderr = _mean_and_stderr(samples)
    return MCResult(estimate=float(mean), stderr=float(stderr), paths=cfg.paths)


def truncation_bound(d, r, t, radius):
    """Gaussian-tail bound on the part of L(t) from |x| > radius."""
    surface = 2.0 * np.pi ** (d / 2.0) / special.gamma(d / 2.0)
    width = np.sqrt(2.0 * d * t)

    def integrand(x):
        rho = radius + x
        return rho ** (d - 1) * 2.0 * d * special.erfc((rho - r) / width)

    tail = quad_semiinf(integrand, EndpointBehavior(rate=1.0 / width, split=width)).value
    return surface * tail


def _shell_sampler(lo, hi, d):
    def sample(rng, count):
        u = rng.random(count)
        return (lo ** d + u * (hi ** d - lo ** d)) ** (1.0 / d)
    return sample


def mc_sausage(params, t, cfg=None):
    """L(t) = int_{|x| > r} P_x[tau <= t] dx by shells in |x|, Neyman-allocated after a pilot run."""
    cfg = cfg or MCConfig()
    d, r = params.d, params.r
    _check_ball(d, r, t)
    minimum = r + 6.0 * np.sqrt(t)
    radius = cfg.truncation_radius if cfg.truncation_radius is not None else r + 6.0 * np.sqrt(d * t)
    if radius < minimum:
        raise DomainError(f"truncation_radius must be >= r + 6 sqrt(t) = {minimum}, got {radius}")
    pilot = max(MIN_SHELL_PATHS, int(PILOT_FRACTION * cfg.paths / SHELLS))
    if cfg.paths < SHELLS * (pilot + MIN_SHELL_PATHS):
        raise BudgetError(f"{cfg.paths} paths cannot cover {SHELLS} shells; need {SHELLS * (pilot + MIN_SHELL_PATHS)}")

    workers = effective_workers(cfg)
    edges = np.linspace(r, radius, SHELLS + 1)
    shell_weights = params.surface * (edges[1:] ** d - edges[:-1] ** d) / d
    streams = np.random.SeedSequence(cfg.seed).spawn(2 * SHELLS)

    def simulate(i, count, stream):
        sampler = _shell_sampler(edges[i], edges[i + 1], d)

        def job(rng, n):
            return _ball_hit(rng, sampler(rng, n), d, r, t, cfg.dt)

        return run_workers(job, count, stream, workers)

    samples = [simulate(i, pilot, streams[i]) for i in range(SHELLS)]
    spread = np.array([shell_weights[i] * max(np.std(s, ddof=1), 1e-12) for i, s in enumerate(samples)])
    remaining = cfg.paths - SHELLS * pilot
    budgets = np.maximum(MIN_SHELL_PATHS, np.floor(remaining * spread / spread.sum())).astype(int)
    logger.debug(f"Shell budgets after pilot: {budgets.tolist()}")
    for i in range(SHELLS):
        samples[i] = np.concatenate([samples[i], simulate(i, int(budgets[i]), streams[SHELLS + i])])

    estimate, variance, used = 0.0, 0.0, 0
    for weight, shell in zip(shell_weights, samples):
        mean, stderr = _mean_and_stderr(shell)
        estimate += weight * mean
        variance += (weight * stderr) ** 2
        used += shell.size
    bias = truncation_bound(d, r, t, radius)
    logger.info(f"mc_sausage(d={d}, r={r}, t={t}): {estimate:.6g} +/- {np.sqrt(variance):.2g} over {used} paths")
    return MCResult(estimate=float(estimate), stderr=float(np.sqrt(variance)), paths=used, truncation_bias=bias)


def _bessel_paths(rng, count, nu, a, b, horizon, dt, scheme):
    """Hit times (inf if none before horizon) and the squared state at the horizon."""
    delta = 2.0 * nu + 2.0
    barrier = b * b
    n_steps = max(1, int(np.ceil(horizon / dt)))
    h = horizon / n_steps
    y = np.full(count, a * a)
    tau = np.full(count, np.inf)
    active = np.ones(count, dtype=bool)
    for step in range(n_steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        y_old = y[idx]
        if scheme == 'exact':
            y_new = rng.noncentral_chisquare(df=delta, nonc=y_old / h, size=idx.size) * h
        else:
            y_new = y_old + delta * h + 2.0 * np.sqrt(np.maximum(y_old, 0.0) * h) * rng.standard_normal(idx.size)
            y_new = np.abs(y_new)
        start = step * h
        direct = y_new <= barrier
        # squared Bessel noise has local variance 4y, i.e. 4b^2 at the barrier
        p_cross = np.exp(-2.0 * (y_old - barrier) * np.maximum(y_new - barrier, 0.0) / (4.0 * barrier * h))
        bridged = ~direct & (rng.random(idx.size) < p_cross)
        fraction = np.clip((y_old - barrier) / np.maximum(y_old - y_new, 1e-300), 0.0, 1.0)
        tau[idx[direct]] = start + h * fraction[direct]
        tau[idx[bridged]] = start + 0.5 * h
        hit = direct | bridged
        active[idx[hit]] = False
        y[idx] = y_new
    return tau, y


def mc_bessel_hit(nu, a, b, horizon=None, cfg=None, lambdas=DEFAULT_LAMBDAS):
    """First passage of the Bessel process of index nu from a down to b.

    The conditional Laplace transform E[e^{-lam tau} | tau < inf] divides the
    empirical E[e^{-lam tau}; tau < horizon] by the exact P(tau < inf).
    """
    cfg = cfg or MCConfig()
    horizon = horizon if horizon is not None else cfg.horizon
    if not 0 < b < a:
        raise DomainError(f"mc_bessel_hit needs 0 < b < a, got a = {a}, b = {b}")
    if not horizon > 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    if cfg.dt > (a - b) ** 2 / STEP_RATIO:
        raise BudgetError(f"dt = {cfg.dt} exceeds (a - b)^2 / {STEP_RATIO:g} = {(a - b) ** 2 / STEP_RATIO}")
    if cfg.scheme == 'exact' and nu <= -1:
        raise DomainError(f"Exact squared Bessel steps need dimension 2 nu + 2 > 0, got nu = {nu}")
    lambdas = tuple(float(lam) for lam in lambdas)
    if any(lam <= 0 for lam in lambdas):
        raise DomainError(f"lambdas must be > 0, got {lambdas}")

    workers = effective_workers(cfg)
    seed_seq = np.random.SeedSequence(cfg.seed)

    def job(rng, count):
        tau, y_end = _bessel_paths(rng, count, nu, a, b, horizon, cfg.dt, cfg.scheme)
        hit = np.isfinite(tau)
        # from the horizon state the process still reaches b with probability (b^2 / y)^nu
        later = np.ones(count) if nu <= 0 else np.minimum((b * b / np.maximum(y_end, b * b)) ** nu, 1.0)
        ever = np.where(hit, 1.0, later)
        weights = [np.where(hit, np.exp(-lam * np.where(hit, tau, 0.0)), 0.0) for lam in lambdas]
        return np.vstack([hit.astype(float), ever] + weights)

    samples = run_workers(job, cfg.paths, seed_seq, workers)
    means, stderrs = _mean_and_stderr(samples)
    p_exact = hitting_probability(HittingSpec(nu=nu, a=a, b=b))
    laplace = tuple(float(m / p_exact) for m in means[2:])
    laplace_stderr = tuple(float(s / p_exact) for s in stderrs[2:])
    logger.info(f"mc_bessel_hit(nu={nu}, a={a}, b={b}): hit fraction {means[0]:.4f} before t = {horizon}")
    return BesselHitSummary(
        nu=float(nu), a=float(a), b=float(b), horizon=float(horizon), paths=cfg.paths,
        hit_fraction=float(means[0]), hit_fraction_stderr=float(stderrs[0]),
        hit_probability=float(means[1]), hit_probability_stderr=float(stderrs[1]),
        lambdas=lambdas, laplace=laplace, laplace_stderr=laplace_stderr,
    )
