"""f-divergence-regularized offline policy learning over finite bandits."""

from .core import (BanditInstance, Dataset, Diagnostics, FDiv, FunctionClass, PreferenceDataset,
                   Regularizer, RngSeed, chi2, chi2_generator, fdiv, kl, make_rng,
                   validate_instance, xlogx_generator)
from .algorithms import run_f_cb, run_f_cdb, run_kl_pcb, run_kl_pcdb, run_ls_softmax
from .estimation import covering_number, fit_least_squares, fit_mle_bt
from .evaluation import objective, optimal_policy, suboptimality
from .instances import (chi2_hard_family, dueling_hard_family, gv_code, kl_hard_family,
                        random_instance, sample_bandit_data, sample_preference_data)
from .solvers import DualSolveError, chi2_closed_form, f_dual_policy, kl_softmax_policy, solve_policy
from .uncertainty import beta_radius, bonus_table, d2_bandit, d2_concentrability, d2_dueling

__version__ = "0.1.0"
