"""Max-min power allocation for cell-free networks.

Exact solvers turn Monte-Carlo channel-hardening statistics into
optimal uplink and downlink powers; a size-agnostic set transformer
learns the mapping from geometry to those powers and replaces the whole
pipeline at inference time.
"""

from .channel import (ChannelDraw, ChannelStats, build_covariance,
                      draw_channels, mmse_estimate, prepare_estimation)
from .dataset import (Dataset, Sample, build_features, generate_dataset,
                      generate_sample, load_dataset, sample_seed_for,
                      save_dataset, split_dataset)
from .evaluation import (EvalRecord, bench_runtime, cdf, evaluate, export_csv,
                         export_plots, monotone_fraction, plot_sweep,
                         summarize, sweep_k, sweep_l, theoretical_complexity)
from .model import (ModelConfig, TransformerWeights, forward, forward_z,
                    init_weights, predict_powers, split_features)
from .pipeline import (SampleCoeffs, derive_seeds, sample_coeffs,
                       solve_sample, spectral_efficiencies)
from .scenario import (CoherenceSplit, LargeScaleTable, NetworkConfig,
                       Scenario, build_large_scale, noise_power_dbm,
                       pathloss_db, sample_scenario, sample_shadowing,
                       tau_split)
from .se_engine import (HardeningCoeffsDL, HardeningCoeffsUL, PowerVector,
                        hardening_from_realizations, mc_hardening,
                        mmse_combiner, normalize_precoders, se_from_sinr,
                        sinr_dl, sinr_ul)
from .solvers import (PowerSolution, SolverOptions, brute_force_maxmin, epa,
                      feasibility_fixed_point, fpa, maxmin_dl, maxmin_ul)
from .trainer import (TrainConfig, TrainReport, eval_loss, load_weights,
                      save_weights, train)

__version__ = "0.1.0"
