"""Prediction markets whose equilibrium prices implement model combination.

Log-utility agents price at the wealth-weighted mixture of their beliefs,
exponential-utility agents at the normalized product, niche agents add clique
factors, and a restricted market of single-variable bets clears by message
passing.
"""

from .agents import (
    Agent,
    FullJoint,
    Marginal,
    Niche,
    StandardizationKind,
    buy_exp,
    buy_linear,
    buy_log,
    buy_marginal,
    buy_niche,
    buying_function,
    full_joint,
    standardize,
)
from .beliefs import Belief, FactorTable, UtilityKind, expected_utility, normalize, utility_eval
from .equilibrium import (
    EquilibriumReport,
    TatonnementParams,
    check_no_arbitrage,
    clearing_residual,
    solve_exp_market,
    solve_linear_binary,
    solve_log_market,
    solve_niche_market,
    tatonnement,
)
from .message_passing import RestrictedMarket, Schedule, run_message_passing
from .outcome_space import Clique, OutcomeSpace, enumerate_joint

__version__ = "0.1.0"
