"""Numerical inverse Laplace transform on a cotangent Talbot contour.

The Bromwich line is deformed to z(theta) = (N/t)(sigma + mu theta cot(alpha theta)
+ i nu theta), theta in (-pi, pi), and the contour integral is taken by the
midpoint rule. F must be analytic to the right of the contour and satisfy
F(conj z) = conj F(z); only the upper half is evaluated.
"""
import logging
from dataclasses import dataclass

import numpy as np

from services.errors import DomainError

logger = logging.getLogger('MacdonaldKit.Talbot')

MIN_NODES = 16


@dataclass(frozen=True)
class TalbotConfig:
    nodes: int = 48
    sigma: float = -0.6122
    mu: float = 0.5017
    alpha: float = 0.6407
    nu: float = 0.2645

    def __post_init__(self):
        if self.nodes < MIN_NODES or self.nodes % 2:
            raise DomainError(f"Talbot needs an even node count >= {MIN_NODES}, got {self.nodes}")
        if self.mu <= 0 or self.nu <= 0 or not 0 < self.alpha < 1:
            raise DomainError(f"Invalid contour shape mu={self.mu}, alpha={self.alpha}, nu={self.nu}")

    def contour(self, t):
        """Nodes z_k and derivatives z'(theta_k) on the upper half of the contour."""
        half = self.nodes // 2
        theta = (np.arange(half) + 0.5) * np.pi / half
        scale = self.nodes / t
        cot = 1.0 / np.tan(self.alpha * theta)
        z = scale * (self.sigma + self.mu * theta * cot + 1j * self.nu * theta)
        dz = scale * (self.mu * cot - self.mu * self.alpha * theta / np.sin(self.alpha * theta) ** 2 + 1j * self.nu)
        return z, dz


def talbot(F, t, cfg=None):
    """f(t) from its Laplace transform F, evaluated at complex points."""
    if not (np.isfinite(t) and t > 0):
        raise DomainError(f"t must be > 0, got {t}")
    cfg = cfg or TalbotConfig()
    z, dz = cfg.contour(t)
    values = np.array([complex(F(point)) for point in z])
    total = np.sum(np.imag(np.exp(z * t) * values * dz))
    return float(total / (cfg.nodes // 2))
