"""Short-packet two-user downlink NOMA with imperfect SIC, and its OMA benchmark."""

from .channel import ScenarioFading, ScenarioFixed, db_to_linear, monte_carlo_average, sample_fading_pair
from .fbl import achievable_rate, decode_error_prob, dispersion, f_metric, q_func, q_inv
from .noma import ChannelGains, NomaDecision, SystemParams, evaluate_noma
from .noma_opt import SolveReport, Tolerances, optimize_noma
from .oma import OmaSolution, optimize_oma, optimize_oma_fixed_slots

__all__ = [
    "ChannelGains", "NomaDecision", "OmaSolution", "ScenarioFading", "ScenarioFixed", "SolveReport",
    "SystemParams", "Tolerances", "achievable_rate", "db_to_linear", "decode_error_prob", "dispersion",
    "evaluate_noma", "f_metric", "monte_carlo_average", "optimize_noma", "optimize_oma",
    "optimize_oma_fixed_slots", "q_func", "q_inv", "sample_fading_pair",
]
