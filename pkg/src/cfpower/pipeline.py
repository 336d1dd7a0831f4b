"""One-sample generation chain: geometry, statistics, exact power labels.

All randomness of a sample derives from a single integer seed split into
independent sub-seeds for placement, shadowing and Monte Carlo hardening,
so regenerating a sample with the same seed is bit-reproducible.
"""

from dataclasses import dataclass

import numpy as np

from .channel import build_covariance, prepare_estimation
from .scenario import build_large_scale, sample_scenario, tau_split
from .se_engine import mc_hardening, se_from_sinr, sinr_dl, sinr_ul
from .solvers import maxmin_dl, maxmin_ul


@dataclass
class SampleCoeffs:
    """Everything the solvers and evaluators need about one realization."""

    scenario: object
    table: object
    split: object
    stats: object
    ul: object
    dl: object
    sigma2: float
    n_mc: int

    @property
    def k(self):
        return self.scenario.k

    @property
    def l(self):
        return self.scenario.l


def derive_seeds(sample_seed):
    """Placement, shadowing and hardening sub-seeds from one sample seed."""
    state = np.random.SeedSequence(sample_seed).generate_state(3)
    return int(state[0]), int(state[1]), int(state[2])


def sample_coeffs(cfg, k, l, sample_seed, n_mc=500):
    """Draw one network realization and estimate its hardening coefficients.

    Combining filters are designed at full uplink power, independently of
    the power optimization that follows.
    """
    place_seed, shadow_seed, mc_seed = derive_seeds(sample_seed)
    scen = sample_scenario(cfg, k, l, place_seed)
    table = build_large_scale(scen, cfg, shadow_seed)

    angles = None
    if cfg.correlation != "uncorrelated":
        diff = scen.ue_xy[:, None, :] - scen.ap_xy[None, :, :]
        angles = np.arctan2(diff[..., 1], diff[..., 0])
    stats = build_covariance(table.beta, model=cfg.correlation,
                             n_antennas=cfg.n_antennas, angles=angles,
                             asd_deg=cfg.asd_deg)

    split = tau_split(cfg.tau_c, k)
    sigma2 = cfg.sigma2_mw
    prepare_estimation(stats, split.tau_p, cfg.rho_pilot, sigma2)
    p_filters = np.full(k, cfg.p_ul_max)
    ul, dl = mc_hardening(stats, split, p_filters, n_mc, mc_seed)
    ul.validate()
    dl.validate()
    return SampleCoeffs(scenario=scen, table=table, split=split, stats=stats,
                        ul=ul, dl=dl, sigma2=sigma2, n_mc=n_mc)


def solve_sample(coeffs, cfg, opts=None):
    """Exact max-min solutions for both directions of one sample."""
    ul_sol = maxmin_ul(coeffs.ul, coeffs.sigma2, cfg.p_ul_max, opts)
    dl_sol = maxmin_dl(coeffs.dl, coeffs.sigma2, cfg.dl_budget(coeffs.l), opts)
    return ul_sol, dl_sol


def spectral_efficiencies(coeffs, p_ul, p_dl):
    """Per-UE SE pair (bit/s/Hz) achieved by given powers on this sample."""
    se_ul = se_from_sinr(sinr_ul(p_ul, coeffs.ul, coeffs.sigma2), coeffs.split.ul_prelog)
    se_dl = se_from_sinr(sinr_dl(p_dl, coeffs.dl, coeffs.sigma2), coeffs.split.dl_prelog)
    return se_ul, se_dl
