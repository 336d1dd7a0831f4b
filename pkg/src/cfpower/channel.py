"""Spatial covariance construction, channel draws and MMSE estimation.

Each (UE k, AP l) link carries an N x N effective covariance that already
includes the large-scale gain. Channels are drawn as colored complex
Gaussians; pilot-based MMSE estimation produces the estimate together with
its covariance.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class ChannelStats:
    """Second-order channel statistics for every (UE, AP) link.

    ``r_eff[k, l]`` is the effective covariance of the channel between UE k
    and AP l (Hermitian PSD, trace = N * beta_kl). ``phi`` holds the MMSE
    estimate covariances once estimation parameters are known.
    """

    r_eff: np.ndarray                 # (K, L, N, N) complex
    r_sqrt: np.ndarray                # (K, L, N, N) principal square roots
    phi: np.ndarray | None = None     # (K, L, N, N), filled by estimation setup
    est_gain: np.ndarray | None = None  # (K, L, N, N) regularized gain R (R + sI)^-1
    rho_pilot: float | None = None    # mW
    sigma2: float | None = None       # mW
    tau_p: int | None = None

    @property
    def k(self):
        return self.r_eff.shape[0]

    @property
    def l(self):
        return self.r_eff.shape[1]

    @property
    def n(self):
        return self.r_eff.shape[2]


@dataclass
class ChannelDraw:
    """One small-scale realization: true channels and (optionally) estimates."""

    h: np.ndarray                 # (K, L, N) complex
    g: np.ndarray                 # (K, L, N) underlying white draws
    h_hat: np.ndarray | None = None

    def collective(self, estimated=False):
        """Stack per-AP vectors into (K, L*N) collective channels, AP-major."""
        x = self.h_hat if estimated else self.h
        return x.reshape(x.shape[0], -1)


def steering_vector(theta, n):
    """Half-wavelength ULA response for azimuth ``theta`` (radians)."""
    m = np.arange(n)
    return np.exp(1j * np.pi * m * np.sin(theta))


def _local_scattering_corr(theta, asd_rad, n):
    # Gaussian local-scattering approximation for a half-wavelength ULA;
    # unit diagonal, so the trace stays N.
    m = np.arange(n)
    gap = m[:, None] - m[None, :]
    phase = np.exp(1j * np.pi * gap * np.sin(theta))
    spread = np.exp(-0.5 * (asd_rad * np.pi * gap * np.cos(theta)) ** 2)
    return phase * spread


def _psd_sqrt(mats):
    """Principal square roots of a stacked array of Hermitian PSD matrices."""
    w, v = np.linalg.eigh(mats)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def build_covariance(beta, model="uncorrelated", n_antennas=4, angles=None, asd_deg=15.0):
    """Build per-link effective covariances from large-scale gains.

    Parameters
    ----------
    beta : (K, L) array of positive linear gains.
    model : "uncorrelated" for beta * I_N, or "local-scattering" for a
        ULA Gaussian-scattering correlation scaled by beta.
    angles : (K, L) azimuth of each UE as seen from each AP, radians;
        required for the local-scattering model.
    """
    beta = np.asarray(beta, dtype=np.float64)
    if np.any(beta <= 0):
        raise ValueError("large-scale gains must be positive")
    k, l = beta.shape
    n = n_antennas

    if model == "uncorrelated":
        eye = np.eye(n, dtype=np.complex128)
        r_eff = beta[:, :, None, None] * eye
        r_sqrt = np.sqrt(beta)[:, :, None, None] * eye
    elif model == "local-scattering":
        if angles is None:
            raise ValueError("local-scattering model needs per-link angles")
        angles = np.asarray(angles, dtype=np.float64)
        asd_rad = np.deg2rad(asd_deg)
        corr = np.empty((k, l, n, n), dtype=np.complex128)
        for ki in range(k):
            for li in range(l):
                corr[ki, li] = _local_scattering_corr(angles[ki, li], asd_rad, n)
        r_eff = beta[:, :, None, None] * corr
        r_sqrt = _psd_sqrt(r_eff)
    else:
        raise ValueError(f"unknown correlation model {model!r}")

    return ChannelStats(r_eff=r_eff, r_sqrt=r_sqrt)


def draw_channels(stats, seed):
    """Draw one colored realization h = R_eff^(1/2) g for every link."""
    rng = np.random.default_rng(seed)
    shape = (stats.k, stats.l, stats.n)
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    h = np.einsum("klmn,kln->klm", stats.r_sqrt, g)
    return ChannelDraw(h=h, g=g)


def prepare_estimation(stats, tau_p, rho_pilot, sigma2):
    """Precompute the estimation gain and estimate covariance for all links.

    Idempotent for identical parameters; overwrites cached matrices when the
    pilot setup changes.
    """
    if sigma2 < 0 or rho_pilot <= 0 or tau_p < 1:
        raise ValueError("invalid pilot parameters")
    if (stats.tau_p, stats.rho_pilot, stats.sigma2) == (tau_p, rho_pilot, sigma2) \
            and stats.phi is not None:
        return stats
    s = sigma2 / (tau_p * rho_pilot)
    n = stats.n
    reg = stats.r_eff + s * np.eye(n, dtype=np.complex128)
    # R and (R + sI) commute, so solve(R + sI, R) equals R (R + sI)^-1.
    gain = np.linalg.solve(reg, stats.r_eff)
    stats.est_gain = gain
    stats.phi = gain @ stats.r_eff
    stats.tau_p = tau_p
    stats.rho_pilot = rho_pilot
    stats.sigma2 = sigma2
    return stats


def mmse_estimate(draw, stats, tau_p, rho_pilot, sigma2, seed):
    """MMSE-estimate every link channel from a noisy pilot observation.

    The observation is y = h + n' with n' complex Gaussian of covariance
    sigma2 / (tau_p * rho_pilot) * I per link. Returns (h_hat, phi) and
    stores h_hat on the draw.
    """
    prepare_estimation(stats, tau_p, rho_pilot, sigma2)
    rng = np.random.default_rng(seed)
    shape = draw.h.shape
    noise_var = sigma2 / (tau_p * rho_pilot)
    n_obs = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        * np.sqrt(noise_var / 2.0)
    y = draw.h + n_obs
    h_hat = np.einsum("klmn,kln->klm", stats.est_gain, y)
    draw.h_hat = h_hat
    return h_hat, stats.phi
