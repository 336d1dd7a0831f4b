"""Network geometry, large-scale fading and coherence-block accounting.

Coordinates are in meters on a square service area, powers in mW, gains
either in dB or linear scale. Every sampling routine is a pure function of
its inputs and a seed, so scenarios can be regenerated exactly.
"""

from dataclasses import dataclass, fields, asdict

import numpy as np

from . import jsonio


@dataclass
class NetworkConfig:
    """Deployment-wide constants of the simulated network."""

    area_side: float = 500.0          # m, side of the square coverage area
    n_antennas: int = 4               # antennas per AP
    p_ul_max: float = 100.0           # mW, per-UE uplink cap
    p_dl_max_per_ap: float = 200.0    # mW, downlink budget contribution per AP
    rho_pilot: float = 100.0          # mW, pilot transmit power
    tau_c: int = 200                  # channel uses per coherence block
    carrier_ghz: float = 2.0
    pathloss_exponent: float = 3.67
    pathloss_intercept_db: float = -30.5   # dB at 1 m reference distance
    height_diff_m: float = 10.0       # AP/UE height difference entering 3-D distance
    shadow_var_db: float = 4.0        # dB^2 shadow-fading variance
    shadow_decorr_m: float = 9.0      # m, shadowing decorrelation distance
    bandwidth_hz: float = 2e7
    noise_figure_db: float = 7.0
    correlation: str = "uncorrelated"  # antenna correlation model tag
    asd_deg: float = 15.0             # angular spread for the local-scattering model

    def __post_init__(self):
        if self.area_side <= 0:
            raise ValueError("area_side must be positive")
        if self.n_antennas < 1:
            raise ValueError("n_antennas must be >= 1")
        if min(self.p_ul_max, self.p_dl_max_per_ap, self.rho_pilot) <= 0:
            raise ValueError("power limits must be positive")
        if self.tau_c < 2:
            raise ValueError("tau_c must be >= 2")

    @property
    def sigma2_dbm(self):
        return noise_power_dbm(self.bandwidth_hz, self.noise_figure_db)

    @property
    def sigma2_mw(self):
        """Receiver noise power in mW."""
        return 10.0 ** (self.sigma2_dbm / 10.0)

    def dl_budget(self, n_aps):
        """Total downlink power budget in mW for ``n_aps`` access points."""
        return n_aps * self.p_dl_max_per_ap

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown NetworkConfig fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        """Load a config from a UTF-8 JSON file; missing fields keep defaults."""
        return cls.from_dict(jsonio.load(path))


@dataclass
class Scenario:
    """One random drop: UE and AP positions on the square."""

    k: int
    l: int
    ue_xy: np.ndarray      # (K, 2) m
    ap_xy: np.ndarray      # (L, 2) m
    seed: int

    def __post_init__(self):
        self.ue_xy = np.asarray(self.ue_xy, dtype=np.float64)
        self.ap_xy = np.asarray(self.ap_xy, dtype=np.float64)
        if self.ue_xy.shape != (self.k, 2) or self.ap_xy.shape != (self.l, 2):
            raise ValueError("coordinate arrays inconsistent with K/L")


@dataclass
class LargeScaleTable:
    """Per-(UE, AP) large-scale gains, in dB and linear scale."""

    beta: np.ndarray        # (K, L) linear gains
    beta_db: np.ndarray     # (K, L) dB
    shadow_db: np.ndarray   # (K, L) shadow-fading terms, dB


@dataclass(frozen=True)
class CoherenceSplit:
    """Pilot / uplink-data / downlink-data split of one coherence block."""

    tau_p: int
    tau_u: int
    tau_d: int

    def __post_init__(self):
        if self.tau_p < 1 or self.tau_u < 0 or self.tau_d < 0:
            raise ValueError("invalid coherence block split")

    @property
    def tau_c(self):
        return self.tau_p + self.tau_u + self.tau_d

    @property
    def ul_prelog(self):
        return self.tau_u / self.tau_c

    @property
    def dl_prelog(self):
        return self.tau_d / self.tau_c


def sample_scenario(cfg, k, l, seed):
    """Drop K UEs and L APs i.i.d. uniformly on the square.

    UE and AP positions come from independent substreams of the seed, so
    the same seed with a different K keeps the APs fixed and nests the UE
    set (and vice versa). Sweeps over K or L then compare paired networks.
    """
    if k < 1 or l < 1:
        raise ValueError("need at least one UE and one AP")
    ue_ss, ap_ss = np.random.SeedSequence(seed).spawn(2)
    ue_xy = np.random.default_rng(ue_ss).uniform(0.0, cfg.area_side, size=(k, 2))
    ap_xy = np.random.default_rng(ap_ss).uniform(0.0, cfg.area_side, size=(l, 2))
    return Scenario(k=k, l=l, ue_xy=ue_xy, ap_xy=ap_xy, seed=_seed_repr(seed))


def _seed_repr(seed):
    # Keep an integer handle on the scenario even when a SeedSequence or
    # Generator drove the draw (those cannot be stored in records).
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return -1


def pathloss_db(d3d, cfg):
    """Distance-dependent pathloss in dB at 3-D distance ``d3d`` meters."""
    d3d = np.asarray(d3d, dtype=np.float64)
    if np.any(d3d < cfg.height_diff_m - 1e-9):
        raise ValueError("3-D distance below the AP/UE height difference")
    return cfg.pathloss_intercept_db - 10.0 * cfg.pathloss_exponent * np.log10(d3d)


def sample_shadowing(ue_xy, l, shadow_var_db, decorr_m, seed):
    """Draw spatially correlated shadow-fading terms, one K-vector per AP.

    For each AP the K shadow values are zero-mean Gaussian with covariance
    var * 2**(-d_ki / decorr_m) between UEs k and i, where d_ki is the UE
    separation; draws are independent across APs.

    Returns a (K, L) dB matrix. Raises ValueError if the UE covariance
    matrix stays indefinite after jitter.
    """
    if decorr_m <= 0:
        raise ValueError("decorr_m must be positive")
    ue_xy = np.asarray(ue_xy, dtype=np.float64)
    k = ue_xy.shape[0]
    if shadow_var_db == 0.0:
        return np.zeros((k, l))
    diff = ue_xy[:, None, :] - ue_xy[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    cov = shadow_var_db * 2.0 ** (-dist / decorr_m)

    chol = None
    for jitter in (0.0, 1e-12, 1e-10, 1e-8):
        try:
            chol = np.linalg.cholesky(cov + jitter * shadow_var_db * np.eye(k))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        raise ValueError("shadowing covariance not PSD after jitter (degenerate geometry)")

    # One substream per AP keeps columns identical when the same seed is
    # reused with a larger L, pairing the networks a sweep compares.
    streams = np.random.SeedSequence(seed).spawn(l)
    z = np.column_stack([np.random.default_rng(ss).standard_normal(k) for ss in streams])
    return chol @ z


def noise_power_dbm(bandwidth_hz, noise_figure_db):
    """Thermal noise power over ``bandwidth_hz`` plus the receiver noise figure."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return -174.0 + 10.0 * np.log10(bandwidth_hz) + noise_figure_db


def tau_split(tau_c, k):
    """Split the coherence block: K pilot uses, remainder halved UL/DL."""
    if k >= tau_c:
        raise ValueError(f"coherence block overloaded: K={k} >= tau_c={tau_c}")
    tau_p = k
    tau_u = (tau_c - tau_p) // 2
    tau_d = tau_c - tau_p - tau_u
    return CoherenceSplit(tau_p=tau_p, tau_u=tau_u, tau_d=tau_d)


def build_large_scale(scenario, cfg, seed):
    """Combine pathloss and correlated shadowing into a LargeScaleTable."""
    diff = scenario.ue_xy[:, None, :] - scenario.ap_xy[None, :, :]
    d2d = np.sqrt(np.sum(diff**2, axis=-1))
    d3d = np.sqrt(d2d**2 + cfg.height_diff_m**2)
    pl_db = pathloss_db(d3d, cfg)
    shadow_db = sample_shadowing(
        scenario.ue_xy, scenario.l, cfg.shadow_var_db, cfg.shadow_decorr_m, seed
    )
    beta_db = pl_db + shadow_db
    return LargeScaleTable(beta=10.0 ** (beta_db / 10.0), beta_db=beta_db, shadow_db=shadow_db)
