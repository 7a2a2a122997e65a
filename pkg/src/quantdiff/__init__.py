"""quantdiff: continuous-time quantile diffusions built from composite
distribution/quantile maps, their SDE coefficients, Monte Carlo validation,
and distortion-based layer pricing."""

__version__ = "0.1.0"

from .special import (erfinv, generalized_inverse, lambert_w0, norm_cdf,
                      norm_pdf, std_normal_quantile)
from .tukey import (ElongationReport, TukeyParams, UnivariateLaw,
                    elongation_check, normal_law, pareto_law,
                    rank_transmutation_map, student_t_law, tukey_g_cdf,
                    tukey_g_density, tukey_g_quantile, tukey_gh_cdf,
                    tukey_gh_density, tukey_gh_quantile, tukey_h_cdf,
                    tukey_h_density, tukey_h_quantile, tukey_law,
                    tukey_support, uniform_law)
from .driving import (BM_DRIFT, FALSE_LAW, GBM, OU, TRUE_LAW, DiffusionSpec,
                      GaussianMarginalLaw, LognormalMarginalLaw, MarginalLaw,
                      NormalShiftLaw, StationaryLaw, bm_drift, custom,
                      fokker_planck_dtF, gbm, marginal_law, ou,
                      transition_law, true_law)
from .sde import (CoefficientPair, CompositeMap, LipschitzReport,
                  g_sde_coefficients, g_state_clip, gbm_g_coefficients,
                  h_sde_coefficients, lipschitz_diagnostics, ou_g_coefficients,
                  random_level_value, sde_coefficients_general,
                  unified_g_coefficients)
from .funcval import (FixedLevelProcess, LocationScaleFamily,
                      ParameterProcess, QuantileFamily, TukeyGHFamily,
                      UniformScaleFamily, fixed_level_process,
                      function_valued_sde_coefficients, function_valued_value)
from .mc import (BahadurReport, KSResult, PathBatch, TimeGrid,
                 bahadur_remainder, empirical_quantile,
                 empirical_quantile_process, euler_maruyama, ks_distance,
                 simulate_driver_paths, simulate_transform_paths,
                 transform_initial_states)
from .kernels import (GFamilyKernel, HFamilyKernel, active_lane, g_kernel_bm,
                      g_kernel_ou, h_kernel_bm, h_kernel_ou)
from .distortion import (LayerSchedule, Operator, PriceTable, calibrate_gamma,
                         distorted_expectation, esscher_cdf, gh_bm_transition_cdf,
                         godin_distortion, layer_premium, likelihood_ratio,
                         make_operator, ph_transform, price_table,
                         quantile_induced_cdf, shifted_g_cdf, wang1, wang2,
                         wang_gen)
from .errors import (BlowUpError, ConfigError, ConvergenceError,
                     DivergenceError, DomainError, SingularityError)

__all__ = [name for name in dir() if not name.startswith("_")]
