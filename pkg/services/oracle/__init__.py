from .talbot import TalbotConfig, talbot
from .monte_carlo import MCConfig, mc_bessel_hit, mc_hit_probability, mc_sausage
