"""Exact max-min power allocation and baseline heuristics.

The equalized-SINR problem is solved by bisection on the common target t.
For a fixed t the minimal powers satisfy the linear system (I - t*B) p = t*u
with a nonnegative coupling matrix B, so feasibility reduces to solving it
and checking signs and the power constraint. A monotone fixed-point iteration
over the same map is available as a slower reference method.
"""

from dataclasses import dataclass

import numpy as np

_TINY = 1e-300


@dataclass
class SolverOptions:
    bisect_tol: float = 1e-12      # relative width of the final t bracket
    max_bisect: int = 200
    scale_slack: float = 1e-7      # accepted relative gap to the power cap
    method: str = "linear"         # "linear" or "fixed-point"
    fp_tol: float = 1e-13
    fp_max_iter: int = 200000

    def __post_init__(self):
        if self.method not in ("linear", "fixed-point"):
            raise ValueError("method must be 'linear' or 'fixed-point'")
        if self.bisect_tol <= 0 or self.max_bisect < 1:
            raise ValueError("invalid bisection settings")


@dataclass
class PowerSolution:
    """Solver output with the certificate values used by the tests."""

    p: np.ndarray          # final powers, mW
    t: float               # min SINR achieved at p
    sinr: np.ndarray       # per-UE SINR at p
    direction: str
    t_lower: float         # certified feasible target
    t_upper: float         # certified infeasible target
    iterations: int
    scale: float           # final uniform scaling factor applied
    converged: bool


def _normalized_system_ul(coeffs, sigma2):
    a, b, c = coeffs.a, coeffs.b, coeffs.c
    if np.any(a <= 0):
        raise ValueError("coherent gains must be positive")
    b_tilde = b / a[:, None]
    np.fill_diagonal(b_tilde, np.maximum(np.diag(b) - a, 0.0) / a)
    u = sigma2 * c / a
    return b_tilde, u


def _normalized_system_dl(coeffs, sigma2):
    a, b = coeffs.a_bar, coeffs.b_bar
    if np.any(a <= 0):
        raise ValueError("coherent gains must be positive")
    b_tilde = b / a[:, None]
    np.fill_diagonal(b_tilde, np.maximum(np.diag(b) - a, 0.0) / a)
    u = sigma2 / a
    return b_tilde, u


def divergence_target(b_tilde):
    """Smallest t at which the equalizing powers blow up, 1/rho(B)."""
    rho = float(np.max(np.abs(np.linalg.eigvals(b_tilde))))
    return np.inf if rho == 0 else 1.0 / rho


def _metric(p, kind):
    return float(np.max(p)) if kind == "max" else float(np.sum(p))


def _solve_linear(t, b_tilde, u):
    """Minimal powers equalizing SINR at t, or None if t is unattainable."""
    k = u.shape[0]
    try:
        p = np.linalg.solve(np.eye(k) - t * b_tilde, t * u)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        return None
    return p


def feasibility_fixed_point(t, b_tilde, u, cap, metric="max",
                            warm_start=None, tol=1e-13, max_iter=200000):
    """Iterate p <- t*(B p + u) and test the power constraint.

    From p = 0 (or any point below the fixed point) the iterates increase
    monotonically, so the constraint check doubles as an early abort: once
    the metric exceeds the cap the target is infeasible under the cap.

    Returns
    -------
    p : ndarray or None
        Converged powers, or None when infeasible or not converged.
    iters : int
    converged : bool
    """
    k = u.shape[0]
    p = np.zeros(k) if warm_start is None else np.array(warm_start, dtype=np.float64)
    for it in range(1, max_iter + 1):
        p_next = t * (b_tilde @ p + u)
        if _metric(p_next, metric) > cap * (1 + 1e-9):
            return None, it, False
        if np.all(np.abs(p_next - p) <= tol * np.maximum(p_next, _TINY)):
            return p_next, it, True
        p = p_next
    return None, max_iter, False


def _maxmin_core(b_tilde, u, cap, metric, opts):
    if cap <= 0:
        raise ValueError("power cap must be positive")
    if np.any(u <= 0):
        raise ValueError("noise loading must be positive")
    k = u.shape[0]

    def feasible(t, warm):
        if opts.method == "linear":
            p = _solve_linear(t, b_tilde, u)
            it = 1
        else:
            p, it, _ = feasibility_fixed_point(
                t, b_tilde, u, cap, metric=metric, warm_start=warm,
                tol=opts.fp_tol, max_iter=opts.fp_max_iter)
        if p is None or _metric(p, metric) > cap:
            return None, it
        return p, it

    # Upper bracket: past the divergence target, or found by doubling when
    # the coupling matrix is nilpotent-like and every finite t has a solution.
    t_hi = divergence_target(b_tilde) if k <= 64 else np.inf
    if not np.isfinite(t_hi):
        t_hi = 1.0
        for _ in range(300):
            p, _ = feasible(t_hi, None)
            if p is None:
                break
            t_hi *= 2.0
        else:
            raise RuntimeError("no infeasible target found while doubling")

    t_lo = 0.0
    p_lo = np.zeros(k)
    iters = 0
    for _ in range(opts.max_bisect):
        if t_lo > 0:
            gap_ok = (t_hi - t_lo) <= opts.bisect_tol * t_lo
            slack_ok = _metric(p_lo, metric) >= cap * (1 - opts.scale_slack)
            if gap_ok and slack_ok:
                break
        t_mid = 0.5 * (t_lo + t_hi)
        p, it = feasible(t_mid, p_lo if t_lo > 0 else None)
        iters += it
        if p is not None:
            t_lo, p_lo = t_mid, p
        else:
            t_hi = t_mid

    if t_lo == 0.0:
        raise RuntimeError("bisection found no feasible SINR target")

    scale = cap / _metric(p_lo, metric)
    return p_lo * scale, t_lo, t_hi, iters, scale


def maxmin_ul(coeffs, sigma2, p_max, opts=None):
    """Max-min uplink powers under a per-UE cap ``p_max`` (mW)."""
    from .se_engine import sinr_ul

    opts = opts or SolverOptions()
    b_tilde, u = _normalized_system_ul(coeffs, sigma2)
    p, t_lo, t_hi, iters, scale = _maxmin_core(b_tilde, u, p_max, "max", opts)
    sinr = sinr_ul(p, coeffs, sigma2)
    converged = (t_hi - t_lo) <= 10 * opts.bisect_tol * t_lo and scale <= 1 + 10 * opts.scale_slack
    return PowerSolution(p=p, t=float(np.min(sinr)), sinr=sinr, direction="ul",
                         t_lower=t_lo, t_upper=t_hi, iterations=iters,
                         scale=scale, converged=bool(converged))


def maxmin_dl(coeffs, sigma2, budget, opts=None):
    """Max-min downlink powers under a total budget (mW) across UEs."""
    from .se_engine import sinr_dl

    opts = opts or SolverOptions()
    b_tilde, u = _normalized_system_dl(coeffs, sigma2)
    p, t_lo, t_hi, iters, scale = _maxmin_core(b_tilde, u, budget, "sum", opts)
    sinr = sinr_dl(p, coeffs, sigma2)
    converged = (t_hi - t_lo) <= 10 * opts.bisect_tol * t_lo and scale <= 1 + 10 * opts.scale_slack
    return PowerSolution(p=p, t=float(np.min(sinr)), sinr=sinr, direction="dl",
                         t_lower=t_lo, t_upper=t_hi, iterations=iters,
                         scale=scale, converged=bool(converged))


def epa(direction, k, l, cfg):
    """Equal power allocation: full cap per UE (UL), budget split evenly (DL)."""
    if direction == "ul":
        return np.full(k, cfg.p_ul_max)
    if direction == "dl":
        return np.full(k, cfg.dl_budget(l) / k)
    raise ValueError("direction must be 'ul' or 'dl'")


def fpa(direction, beta, cfg, nu=-0.5):
    """Fractional power allocation from the summed large-scale gains.

    Weights (sum_l beta_lk)^nu favor weak UEs for nu < 0. Uplink weights are
    normalized so the strongest-weighted UE transmits at the cap; downlink
    weights share the total budget.
    """
    beta = np.asarray(beta, dtype=np.float64)
    w = np.sum(beta, axis=1) ** nu
    if direction == "ul":
        return cfg.p_ul_max * w / np.max(w)
    if direction == "dl":
        return cfg.dl_budget(beta.shape[1]) * w / np.sum(w)
    raise ValueError("direction must be 'ul' or 'dl'")


def _min_sinr_grid(p_grid, a, b, noise):
    signal = a[:, None] * p_grid
    denom = b @ p_grid - signal + noise[:, None]
    return np.min(signal / denom, axis=0)


def brute_force_maxmin(direction, coeffs, sigma2, cap, resolution=1e-3):
    """Grid-search reference optimum for K <= 3.

    Scaling every power up by a common factor raises every SINR, so the
    optimum saturates the constraint: some UE at the cap (UL) or the budget
    spent in full (DL). K <= 2 searches the full box anyway; K = 3 searches
    the saturated faces only, which keeps the grid tractable.
    """
    if direction == "ul":
        a, b = coeffs.a, coeffs.b
        noise = sigma2 * coeffs.c
    elif direction == "dl":
        a, b = coeffs.a_bar, coeffs.b_bar
        noise = np.full(a.shape[0], sigma2)
    else:
        raise ValueError("direction must be 'ul' or 'dl'")

    k = a.shape[0]
    if k > 3:
        raise ValueError("grid search supports K <= 3 only")
    steps = int(round(1.0 / resolution))
    g = np.linspace(0.0, cap, steps + 1)

    best_p, best_t = None, -1.0

    def consider(p_grid):
        nonlocal best_p, best_t
        if p_grid.shape[1] == 0:
            return
        t = _min_sinr_grid(p_grid, a, b, noise)
        j = int(np.argmax(t))
        if t[j] > best_t:
            best_t = float(t[j])
            best_p = p_grid[:, j].copy()

    if k == 1:
        consider(np.array([[cap]]))
    elif k == 2:
        g1, g2 = np.meshgrid(g, g, indexing="ij")
        p_grid = np.stack([g1.ravel(), g2.ravel()])
        if direction == "dl":
            p_grid = p_grid[:, p_grid.sum(axis=0) <= cap * (1 + 1e-12)]
        consider(p_grid)
    elif direction == "ul":
        g1, g2 = np.meshgrid(g, g, indexing="ij")
        face = np.stack([np.full(g1.size, cap), g1.ravel(), g2.ravel()])
        for j in range(3):
            consider(np.roll(face, j, axis=0))
    else:
        g1, g2 = np.meshgrid(g, g, indexing="ij")
        p3 = cap - g1.ravel() - g2.ravel()
        keep = p3 >= -1e-12
        p_grid = np.stack([g1.ravel()[keep], g2.ravel()[keep],
                           np.maximum(p3[keep], 0.0)])
        consider(p_grid)

    signal = a * best_p
    sinr = signal / (b @ best_p - signal + noise)
    return PowerSolution(p=best_p, t=best_t, sinr=sinr, direction=direction,
                         t_lower=best_t, t_upper=best_t, iterations=0,
                         scale=1.0, converged=True)
