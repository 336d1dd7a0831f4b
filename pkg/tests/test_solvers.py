"""Max-min solvers against independent algebraic and grid oracles."""

import numpy as np
import pytest

from cfpower.scenario import NetworkConfig
from cfpower.se_engine import HardeningCoeffsDL, HardeningCoeffsUL, sinr_dl, sinr_ul
from cfpower.solvers import (PowerSolution, SolverOptions, brute_force_maxmin,
                             divergence_target, epa, feasibility_fixed_point,
                             fpa, maxmin_dl, maxmin_ul)


def _random_ul_coeffs(k, rng):
    a = rng.uniform(0.5, 2.0, size=k)
    b = rng.uniform(0.05, 0.3, size=(k, k))
    np.fill_diagonal(b, a + rng.uniform(0.1, 0.5, size=k))
    c = rng.uniform(0.5, 2.0, size=k)
    return HardeningCoeffsUL(a=a, b=b, c=c, n_mc=1)


def _random_dl_coeffs(k, rng):
    a = rng.uniform(0.5, 2.0, size=k)
    b = rng.uniform(0.05, 0.3, size=(k, k))
    np.fill_diagonal(b, a + rng.uniform(0.1, 0.5, size=k))
    return HardeningCoeffsDL(a_bar=a, b_bar=b)


# Independent two-UE oracle: at the optimum both SINRs equal t and the
# constraint is tight (scaling all powers up raises every SINR). On the
# uplink face p_j = P the remaining power x solves the quadratic obtained
# from SINR_j(p) = SINR_i(p) by cross multiplication; the optimum is the
# best valid face. Derivation for the face p_1 = P, p_2 = x, n_k = noise:
#   P a1 (b21 P + b22 x - a2 x + n2) = x a2 (b11 P + b12 x - a1 P + n1)
# -> a2 b12 x^2 + [a2 (b11 P - a1 P + n1) - P a1 (b22 - a2)] x
#    - P a1 (b21 P + n2) = 0.
def _ul_face_root(a, b, noise, p_cap, fixed):
    i, j = (0, 1) if fixed == 0 else (1, 0)
    af, xf = a[i], a[j]
    quad = xf * b[i, j]
    lin = xf * (b[i, i] * p_cap - af * p_cap + noise[i]) \
        - p_cap * af * (b[j, j] - xf)
    const = -p_cap * af * (b[j, i] * p_cap + noise[j])
    roots = np.roots([quad, lin, const])
    best = None
    for r in roots:
        if abs(r.imag) < 1e-9 and -1e-9 <= r.real <= p_cap * (1 + 1e-9):
            p = np.empty(2)
            p[i] = p_cap
            p[j] = min(max(r.real, 0.0), p_cap)
            t = np.min(a * p / (b @ p - a * p + noise))
            if best is None or t > best[0]:
                best = (t, p)
    return best


def ul_two_ue_oracle(coeffs, sigma2, p_cap):
    a, b = coeffs.a, coeffs.b
    noise = sigma2 * coeffs.c
    candidates = [c for c in (_ul_face_root(a, b, noise, p_cap, 0),
                              _ul_face_root(a, b, noise, p_cap, 1)) if c]
    return max(candidates, key=lambda c: c[0])


# Downlink: the budget is spent in full, p = (x, B - x); equal SINR gives
#   x a1 (b21 x + b22 (B - x) - a2 (B - x) + s) =
#   (B - x) a2 (b11 x + b12 (B - x) - a1 x + s)
# which is again a quadratic in x.
def dl_two_ue_oracle(coeffs, sigma2, budget):
    a, b = coeffs.a_bar, coeffs.b_bar
    s = sigma2

    def sinrs(x):
        p = np.array([x, budget - x])
        return a * p / (b @ p - a * p + s)

    # With y = B - x the cross-multiplied equality collects into
    # quad * x^2 + lin * x + const = 0; grouped coefficients below.
    am, bm = a, b
    quad = am[0] * (bm[1, 0] - bm[1, 1] + am[1]) + am[1] * (bm[0, 0] - bm[0, 1] - am[0])
    lin = am[0] * (bm[1, 1] * budget - am[1] * budget + s) \
        + am[1] * (bm[0, 1] * budget + s) - am[1] * budget * (bm[0, 0] - bm[0, 1] - am[0])
    const = -am[1] * budget * (bm[0, 1] * budget + s)
    roots = np.roots([quad, lin, const])
    best = None
    for r in roots:
        if abs(r.imag) < 1e-9 and -1e-9 <= r.real <= budget * (1 + 1e-9):
            x = min(max(r.real, 0.0), budget)
            t = float(np.min(sinrs(x)))
            if best is None or t > best[0]:
                best = (t, np.array([x, budget - x]))
    return best


def test_maxmin_ul_two_ue_matches_algebraic_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        coeffs = _random_ul_coeffs(2, rng)
        sigma2 = rng.uniform(0.05, 0.5)
        t_star, p_star = ul_two_ue_oracle(coeffs, sigma2, p_cap=1.0)
        sol = maxmin_ul(coeffs, sigma2, p_max=1.0)
        assert sol.t == pytest.approx(t_star, rel=1e-7)
        assert np.allclose(np.sort(sol.p), np.sort(p_star), rtol=1e-5, atol=1e-9)


def test_maxmin_dl_two_ue_matches_algebraic_oracle():
    rng = np.random.default_rng(2)
    for _ in range(20):
        coeffs = _random_dl_coeffs(2, rng)
        sigma2 = rng.uniform(0.05, 0.5)
        t_star, p_star = dl_two_ue_oracle(coeffs, sigma2, budget=3.0)
        sol = maxmin_dl(coeffs, sigma2, budget=3.0)
        assert sol.t == pytest.approx(t_star, rel=1e-7)
        assert np.allclose(sol.p, p_star, rtol=1e-5, atol=1e-9)


def test_single_ue_closed_form():
    # One UE transmits at the cap; SINR follows directly.
    coeffs = HardeningCoeffsUL(a=np.array([2.0]), b=np.array([[2.5]]),
                               c=np.array([1.0]), n_mc=1)
    sol = maxmin_ul(coeffs, sigma2=0.1, p_max=4.0)
    assert sol.p[0] == pytest.approx(4.0, rel=1e-12)
    # signal 8, denom 10 - 8 + 0.1 = 2.1
    assert sol.t == pytest.approx(8.0 / 2.1, rel=1e-9)


def test_certificates_ul():
    rng = np.random.default_rng(3)
    for _ in range(30):
        k = int(rng.integers(2, 9))
        coeffs = _random_ul_coeffs(k, rng)
        sigma2 = 0.2
        sol = maxmin_ul(coeffs, sigma2, p_max=1.0)
        sinr = sinr_ul(sol.p, coeffs, sigma2)
        t = sinr.min()
        assert np.all(np.abs(sinr - t) / t <= 1e-5)
        assert sol.p.max() >= 0.999999
        assert np.all(sol.p >= 0) and np.all(sol.p <= 1.0 + 1e-9)
        assert sol.converged


def test_certificates_dl():
    rng = np.random.default_rng(4)
    for _ in range(30):
        k = int(rng.integers(2, 9))
        coeffs = _random_dl_coeffs(k, rng)
        sigma2 = 0.2
        sol = maxmin_dl(coeffs, sigma2, budget=5.0)
        sinr = sinr_dl(sol.p, coeffs, sigma2)
        t = sinr.min()
        assert np.all(np.abs(sinr - t) / t <= 1e-5)
        assert abs(sol.p.sum() - 5.0) / 5.0 <= 1e-9
        assert np.all(sol.p >= 0)
        assert sol.converged


def test_fixed_point_agrees_with_linear_path():
    rng = np.random.default_rng(5)
    coeffs = _random_ul_coeffs(4, rng)
    fp = maxmin_ul(coeffs, 0.2, p_max=1.0,
                   opts=SolverOptions(method="fixed-point", bisect_tol=1e-10))
    lin = maxmin_ul(coeffs, 0.2, p_max=1.0)
    assert fp.t == pytest.approx(lin.t, rel=1e-6)
    assert np.allclose(fp.p, lin.p, rtol=1e-5)


def test_fixed_point_iteration_properties():
    # Monotone nondecreasing iterates from zero; early abort above the cap.
    b_tilde = np.array([[0.1, 0.2], [0.3, 0.1]])
    u = np.array([0.5, 0.4])
    p, iters, converged = feasibility_fixed_point(1.0, b_tilde, u, cap=10.0)
    assert converged
    # fixed point satisfies p = t (B p + u)
    assert np.allclose(p, b_tilde @ p + u, rtol=1e-10)
    p2, _, conv2 = feasibility_fixed_point(1.0, b_tilde, u, cap=0.1)
    assert p2 is None and not conv2


def test_fixed_point_warm_start():
    b_tilde = np.array([[0.1, 0.2], [0.3, 0.1]])
    u = np.array([0.5, 0.4])
    cold, _, _ = feasibility_fixed_point(1.0, b_tilde, u, cap=10.0)
    warm, iters_warm, conv = feasibility_fixed_point(
        1.1, b_tilde, u, cap=10.0, warm_start=cold)
    assert conv
    assert np.allclose(warm, 1.1 * (b_tilde @ warm + u), rtol=1e-9)


def test_divergence_target():
    b_tilde = np.array([[0.0, 0.5], [0.5, 0.0]])
    assert divergence_target(b_tilde) == pytest.approx(2.0, rel=1e-12)
    assert divergence_target(np.zeros((2, 2))) == np.inf


def test_infeasible_above_divergence():
    # Beyond 1/rho(B) no equalizing power vector exists at any cap.
    b_tilde = np.array([[0.0, 0.5], [0.5, 0.0]])
    u = np.array([1.0, 1.0])
    p, _, conv = feasibility_fixed_point(2.5, b_tilde, u, cap=1e12,
                                         max_iter=3000)
    assert p is None


def test_epa_closed_forms():
    cfg = NetworkConfig()
    assert np.array_equal(epa("ul", 4, 9, cfg), np.full(4, 100.0))
    assert np.allclose(epa("dl", 4, 9, cfg), np.full(4, 9 * 200.0 / 4))
    with pytest.raises(ValueError):
        epa("sideways", 4, 9, cfg)


def test_fpa_closed_forms():
    cfg = NetworkConfig()
    beta = np.array([[4.0, 0.0 + 1e-12], [1.0, 0.0 + 1e-12]])
    # row sums 4 and 1, nu = -0.5 -> weights 0.5 and 1.0
    p_ul = fpa("ul", beta, cfg)
    assert p_ul == pytest.approx([50.0, 100.0], rel=1e-9)
    p_dl = fpa("dl", beta, cfg)
    assert p_dl.sum() == pytest.approx(cfg.dl_budget(2), rel=1e-12)
    assert p_dl[1] == pytest.approx(2 * p_dl[0], rel=1e-9)
    # nu = 0 gives uniform weights
    assert np.allclose(fpa("ul", beta, cfg, nu=0.0), 100.0)


def test_brute_force_matches_solver_k3():
    rng = np.random.default_rng(6)
    coeffs = _random_ul_coeffs(3, rng)
    sol = maxmin_ul(coeffs, 0.2, p_max=1.0)
    bf = brute_force_maxmin("ul", coeffs, 0.2, cap=1.0, resolution=1e-3)
    assert bf.t <= sol.t * (1 + 1e-9)
    assert sol.t == pytest.approx(bf.t, rel=0.01)

    dcoeffs = _random_dl_coeffs(3, rng)
    dsol = maxmin_dl(dcoeffs, 0.2, budget=3.0)
    dbf = brute_force_maxmin("dl", dcoeffs, 0.2, cap=3.0, resolution=1e-3)
    assert dbf.t <= dsol.t * (1 + 1e-9)
    assert dsol.t == pytest.approx(dbf.t, rel=0.01)


def test_brute_force_rejects_large_k():
    rng = np.random.default_rng(7)
    coeffs = _random_ul_coeffs(4, rng)
    with pytest.raises(ValueError):
        brute_force_maxmin("ul", coeffs, 0.2, cap=1.0)


def test_solver_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(method="newton")
    with pytest.raises(ValueError):
        SolverOptions(bisect_tol=0.0)


def test_solution_is_power_solution():
    rng = np.random.default_rng(8)
    coeffs = _random_ul_coeffs(2, rng)
    sol = maxmin_ul(coeffs, 0.2, p_max=1.0)
    assert isinstance(sol, PowerSolution)
    assert sol.direction == "ul"
    assert sol.t_lower <= sol.t_upper
    assert sol.iterations > 0
