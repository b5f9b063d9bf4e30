"""Beta regression with varying dispersion: estimation, model-selection
criteria, two-step covariate selection and Monte Carlo experiments."""

from .distribution import BetaParams, DomainError, density, log_density, phi_from_sigma, sample, sigma_from_phi, variance
from .links import LINK_NAMES, Link, get_link, link_deriv, link_eval, link_inverse
from .design import (Dataset, DesignPair, ModelSpec, RankDeficiencyError, build_design,
                     load_reading_skills, read_csv, rescale_to_unit)
from .estimation import (BetaLikelihood, ConvergenceError, EvaluationError, FitOptions, FitResult,
                         ScoreTestResult, fit_mle, fit_null, loglik, score,
                         score_test_constant_dispersion, wald_table)
from .criteria import (PRESETS, CriterionConfig, CriterionUndefined, aic_family, all_criteria,
                       parse_criterion, r2_d, r2_fc, r2_hs_adj, r2_lr, r2_lrw)
from .selection import (SCHEMES, SearchSpace, SelectionError, SelectionReport, TwoStepScheme,
                        enumerate_candidates, joint_select, parse_scheme, recommend_scheme,
                        select_disp_given_mean, select_mean_constant_disp, select_mean_given_disp,
                        two_step_select)
from .simulation import (DgpConfig, EfficiencyConfig, FrequencyTable, efficiency_experiment, make_dgp,
                         run_frequency_experiment)

__version__ = "0.1.0"
