"""Combining, precoding and channel-hardening spectral-efficiency machinery.

Monte-Carlo expectations over channel and estimation randomness turn the
uplink and downlink SINRs into deterministic rational functions of the
transmit powers, which is what the exact power solvers operate on.
"""

from dataclasses import dataclass

import numpy as np

from .channel import draw_channels, mmse_estimate


@dataclass
class HardeningCoeffsUL:
    """Uplink hardening moments.

    a[k]    = |E{v_k^H h_k}|^2          (coherent signal gain)
    b[k, i] = E{|v_k^H h_i|^2}          (second moments, desired and cross)
    c[k]    = E{||v_k||^2}              (noise amplification)
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    n_mc: int

    def validate(self):
        if np.any(self.a < 0) or np.any(self.b < 0) or np.any(self.c <= 0):
            raise ValueError("invalid uplink hardening coefficients")
        if np.any(np.diag(self.b) < self.a - 1e-12 * np.abs(self.a)):
            raise ValueError("second moment below squared mean (Jensen violated)")


@dataclass
class HardeningCoeffsDL:
    """Downlink hardening moments for unit-norm precoders.

    a_bar[k]    = |E{h_k^H w_k}|^2
    b_bar[k, i] = E{|h_k^H w_i|^2}
    """

    a_bar: np.ndarray
    b_bar: np.ndarray

    def validate(self):
        if np.any(self.a_bar < 0) or np.any(self.b_bar < 0):
            raise ValueError("invalid downlink hardening coefficients")


@dataclass
class PowerVector:
    """Per-UE transmit powers in mW for one direction ('ul' or 'dl')."""

    p: np.ndarray
    direction: str

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64)
        if self.direction not in ("ul", "dl"):
            raise ValueError("direction must be 'ul' or 'dl'")
        if np.any(self.p < 0):
            raise ValueError("powers must be nonnegative")

    def check_cap(self, p_max, rtol=1e-9):
        if self.direction != "ul":
            raise ValueError("per-UE cap applies to the uplink")
        return bool(np.all(self.p <= p_max * (1 + rtol)))

    def check_budget(self, budget, rtol=1e-9):
        if self.direction != "dl":
            raise ValueError("sum budget applies to the downlink")
        return bool(np.sum(self.p) <= budget * (1 + rtol))


def _as_powers(p):
    return p.p if isinstance(p, PowerVector) else np.asarray(p, dtype=np.float64)


def mmse_combiner(h_hat, stats, p_ul, sigma2):
    """MMSE receive combiners for all UEs, stacked as columns.

    Solves (sum_i p_i h_hat_i h_hat_i^H + Z) v_k = h_hat_k with
    Z = sum_i p_i (R_eff_i - Phi_i) + sigma2 * I over the collective
    (L*N)-dimensional channel space. Returns an (L*N, K) array.
    """
    p = _as_powers(p_ul)
    k, l, n = h_hat.shape
    ln = l * n
    hh = h_hat.reshape(k, ln)

    if stats.phi is None:
        raise ValueError("channel stats carry no estimate covariance; run estimation first")
    err_cov = stats.r_eff - stats.phi                     # (K, L, N, N)
    z_blocks = np.einsum("k,klmn->lmn", p, err_cov)       # (L, N, N)

    m = (hh.T * p) @ np.conj(hh)                          # sum_i p_i h_i h_i^H
    for li in range(l):
        sl = slice(li * n, (li + 1) * n)
        m[sl, sl] += z_blocks[li]
    m[np.diag_indices(ln)] += sigma2

    return np.linalg.solve(m, hh.T)


def normalize_precoders(v):
    """Scale each column to unit norm; zero columns are rejected."""
    norms = np.linalg.norm(v, axis=0)
    if np.any(norms == 0):
        raise ValueError("zero combining vector cannot be normalized")
    return v / norms


def hardening_from_realizations(h_list, v_list):
    """Accumulate hardening moments from explicit (channel, combiner) pairs.

    ``h_list`` holds (K, L*N) collective channels and ``v_list`` the matching
    (L*N, K) combiner columns. Precoders are the unit-norm combiners.
    Sample means use a fixed summation order, so results are reproducible.
    """
    n_mc = len(h_list)
    if n_mc < 1:
        raise ValueError("need at least one realization")
    k = h_list[0].shape[0]

    sum_vh = np.zeros(k, dtype=np.complex128)
    sum_b = np.zeros((k, k))
    sum_c = np.zeros(k)
    sum_hw = np.zeros(k, dtype=np.complex128)
    sum_bb = np.zeros((k, k))

    for hh, v in zip(h_list, v_list):
        g_ul = np.conj(v.T) @ hh.T           # [k, i] = v_k^H h_i
        sum_vh += np.diagonal(g_ul)
        sum_b += np.abs(g_ul) ** 2
        sum_c += np.sum(np.abs(v) ** 2, axis=0)
        w = normalize_precoders(v)
        g_dl = np.conj(hh) @ w               # [k, i] = h_k^H w_i
        sum_hw += np.diagonal(g_dl)
        sum_bb += np.abs(g_dl) ** 2

    a = np.abs(sum_vh / n_mc) ** 2
    a_bar = np.abs(sum_hw / n_mc) ** 2
    ul = HardeningCoeffsUL(a=a, b=sum_b / n_mc, c=sum_c / n_mc, n_mc=n_mc)
    dl = HardeningCoeffsDL(a_bar=a_bar, b_bar=sum_bb / n_mc)
    return ul, dl


def mc_hardening(stats, split, p_ul_for_filters, n_mc, seed):
    """Estimate hardening coefficients over ``n_mc`` channel realizations.

    Combiners are recomputed per realization at the fixed filter powers
    ``p_ul_for_filters`` (full uplink power by default in callers), which
    decouples filter design from the power optimization. Deterministic for
    a given seed.
    """
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    if stats.phi is None or stats.rho_pilot is None or stats.sigma2 is None:
        raise ValueError("run prepare_estimation on the stats before Monte Carlo")
    p_filters = _as_powers(p_ul_for_filters)
    streams = np.random.SeedSequence(seed).spawn(n_mc)

    h_list = []
    v_list = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        draw = draw_channels(stats, rng)
        h_hat, _ = mmse_estimate(draw, stats, split.tau_p, stats.rho_pilot, stats.sigma2, rng)
        v = mmse_combiner(h_hat, stats, p_filters, stats.sigma2)
        h_list.append(draw.collective())
        v_list.append(v)

    return hardening_from_realizations(h_list, v_list)


def sinr_ul(p, coeffs, sigma2):
    """Uplink effective SINR of every UE at powers ``p`` (mW)."""
    p = _as_powers(p)
    signal = p * coeffs.a
    denom = coeffs.b @ p - signal + sigma2 * coeffs.c
    if np.any(denom <= 0):
        raise ValueError("nonpositive SINR denominator; coefficients invalid")
    return signal / denom


def sinr_dl(p, coeffs, sigma2):
    """Downlink effective SINR of every UE at powers ``p`` (mW)."""
    p = _as_powers(p)
    signal = p * coeffs.a_bar
    denom = coeffs.b_bar @ p - signal + sigma2
    if np.any(denom <= 0):
        raise ValueError("nonpositive SINR denominator; coefficients invalid")
    return signal / denom


def se_from_sinr(sinr, prelog):
    """Spectral efficiency in bit/s/Hz from SINR and the data-phase fraction."""
    sinr = np.asarray(sinr, dtype=np.float64)
    if np.any(sinr < 0):
        raise ValueError("SINR must be nonnegative")
    return prelog * np.log2(1.0 + sinr)
