import json
import logging
import os

from dotenv import load_dotenv

logger = logging.getLogger('MacdonaldKit.Settings')

THREADS_ENV = 'MACDONALD_KIT_THREADS'
SETTINGS_ENV = 'MACDONALD_KIT_SETTINGS'
LOG_LEVEL_ENV = 'MACDONALD_KIT_LOG_LEVEL'


def thread_cap():
    """Upper bound on Monte Carlo workers, or None when unset."""
    load_dotenv()
    raw = os.getenv(THREADS_ENV)
    if not raw:
        return None
    try:
        cap = int(raw)
    except ValueError:
        logger.warning(f"Ignoring {THREADS_ENV}={raw!r}: not an integer")
        return None
    return max(cap, 1)


def log_level():
    load_dotenv()
    return os.getenv(LOG_LEVEL_ENV, 'INFO').upper()


class SettingsManager:
    SETTINGS_FILE = 'macdonald_kit.json'

    def __init__(self, path=None):
        load_dotenv()
        self.path = path or os.getenv(SETTINGS_ENV) or self.SETTINGS_FILE
        self.settings = self._load_settings()

    def _load_settings(self):
        if os.path.exists(self.path):
            try:
                with open(self.path, 'r') as f:
                    return json.load(f)
            except Exception as e:
                logger.warning(f"Could not read settings from {self.path}: {e}")
        return {}

    def save_settings(self):
        try:
            with open(self.path, 'w') as f:
                json.dump(self.settings, f, indent=4)
        except Exception as e:
            logger.warning(f"Could not save settings to {self.path}: {e}")

    def get_quadrature_config(self):
        return {**{
            'rel_tol': 1e-10,
            'abs_tol': 1e-14,
            'max_subdivisions': 200
        }, **self.settings.get('quadrature', {})}

    def set_quadrature_config(self, rel_tol, abs_tol, max_subdivisions):
        self.settings['quadrature'] = {
            'rel_tol': rel_tol,
            'abs_tol': abs_tol,
            'max_subdivisions': max_subdivisions
        }
        self.save_settings()

    def get_talbot_config(self):
        return {**{
            'nodes': 48,
            'sigma': -0.6122,
            'mu': 0.5017,
            'alpha': 0.6407,
            'nu': 0.2645
        }, **self.settings.get('talbot', {})}

    def set_talbot_nodes(self, nodes: int):
        self.settings.setdefault('talbot', {})['nodes'] = nodes
        self.save_settings()

    def get_monte_carlo_config(self):
        return {**{
            'paths': 20000,
            'dt': 0.01,
            'seed': 20240607,
            'workers': 4,
            'scheme': 'euler'
        }, **self.settings.get('monte_carlo', {})}

    def set_monte_carlo_config(self, **values):
        self.settings['monte_carlo'] = {**self.get_monte_carlo_config(), **values}
        self.save_settings()

    def get_zeros_config(self):
        return {**{
            'route_tolerance': 1e-6,
            'route_failure': 1e-4,
            'newton_max_iter': 50,
            'residual_target': 1e-10
        }, **self.settings.get('zeros', {})}

    def quad_spec(self):
        from services.quadrature import QuadSpec
        return QuadSpec(**self.get_quadrature_config())

    def talbot_config(self):
        from services.oracle.talbot import TalbotConfig
        return TalbotConfig(**self.get_talbot_config())

    def mc_config(self, **overrides):
        from services.oracle.monte_carlo import MCConfig
        values = {**self.get_monte_carlo_config(), **overrides}
        return MCConfig(**values)
