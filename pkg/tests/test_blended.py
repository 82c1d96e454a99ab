import numpy as np
import pytest

from hbvm.blended import (
    BlendedConfig,
    amplification_scan,
    default_config,
    iteration_matrix,
    optimal_gamma,
    partition,
    reference_points,
    select_fundamental,
    solve_stages,
    solve_stages_newton,
)
from hbvm.errors import StepFailure
from hbvm.integrator import FixedPoint, LinearSystem
from hbvm.legendre import structural_matrices
from hbvm.problems import get_problem
from hbvm.tableau import build_hbvm, sorted_eigenvalues

# published (gamma, rho*) for s = 2..10
TABLE = {
    2: (0.2887, 0.1340),
    3: (0.1967, 0.2765),
    4: (0.1475, 0.3793),
    5: (0.1173, 0.4544),
    6: (0.0971, 0.5114),
    7: (0.0827, 0.5561),
    8: (0.0718, 0.5921),
    9: (0.0635, 0.6218),
    10: (0.0568, 0.6467),
}


def nearest_node_oracle(nodes, s):
    # plain re-implementation: greedy nearest unused node per reference point
    chosen = []
    for j in range(1, s + 1):
        ref = j / (s + 1)
        free = [(abs(x - ref), x, i) for i, x in enumerate(nodes) if i not in chosen and x > 0]
        best = min(d for d, _, _ in free)
        # near-ties go to the smaller node
        chosen.append(min((x, i) for d, x, i in free if d <= best + 1e-12)[1])
    return tuple(sorted(chosen))


def test_reference_points():
    np.testing.assert_allclose(reference_points(2), [1 / 3, 2 / 3])
    np.testing.assert_allclose(reference_points(4), [0.2, 0.4, 0.6, 0.8])


def test_rule_of_thumb_hbvm_6_2():
    x, _ = np.polynomial.legendre.leggauss(6)
    nodes = 0.5 * (x + 1)
    part = select_fundamental(build_hbvm(6, 2))
    # third and fourth Gauss-6 nodes, about 0.3807 and 0.6193
    assert part.fundamental_idx == (2, 3) == nearest_node_oracle(nodes, 2)
    np.testing.assert_allclose(nodes[[2, 3]], [0.3806904, 0.6193096], atol=1e-7)
    assert part.symmetric


@pytest.mark.parametrize("k,s,family", [(9, 3, "gauss"), (20, 4, "gauss"), (8, 2, "lobatto"), (15, 5, "lobatto"), (7, 2, "gauss")])
def test_rule_of_thumb_matches_oracle(k, s, family):
    t = build_hbvm(k, s, family)
    part = select_fundamental(t)
    assert part.fundamental_idx == nearest_node_oracle(list(t.nodes), s)
    assert part.symmetric == ((t.n_stages - s) % 2 == 0)
    assert 0 not in part.fundamental_idx or t.nodes[0] > 0


def test_no_silent_stages_when_k_equals_s():
    t = build_hbvm(2, 2)
    part = select_fundamental(t)
    assert part.fundamental_idx == (0, 1) and part.silent_idx == ()
    assert part.A1.shape == (0, 2) and part.B2.shape == (2, 0)
    np.testing.assert_allclose(part.C, t.A, rtol=0, atol=1e-15)
    np.testing.assert_allclose(part.B1, t.A, rtol=0, atol=1e-15)


def test_partition_matrices():
    t = build_hbvm(6, 2)
    part = select_fundamental(t)
    f, sl = list(part.fundamental_idx), list(part.silent_idx)
    np.testing.assert_allclose(part.A1 @ t.I_mat[f], t.I_mat[sl], atol=1e-14)
    np.testing.assert_allclose(part.u_hat, 1 - part.A1.sum(axis=1), atol=1e-15)
    np.testing.assert_allclose(part.C, part.B1 + part.B2 @ part.A1, atol=1e-15)


def test_bad_partitions():
    t = build_hbvm(6, 2)
    for idx in ([0], [1, 1], [0, 6], [0, 1, 2]):
        with pytest.raises(ValueError):
            partition(t, idx)
    with pytest.raises(ValueError):
        select_fundamental(t, "random")


def test_forced_first_nodes_worsen_conditioning():
    t = build_hbvm(6, 2)
    good = np.linalg.cond(select_fundamental(t).C)
    bad = np.linalg.cond(partition(t, [0, 1]).C)
    assert bad > good
    assert select_fundamental(t, "first_s").fundamental_idx == (0, 1)


def test_first_s_skips_zero_node():
    part = select_fundamental(build_hbvm(6, 2, "lobatto"), "first_s")
    assert part.fundamental_idx == (1, 2)


@pytest.mark.parametrize("s", range(2, 6))
def test_eigenvalues_of_c_are_k_independent(s):
    want = sorted_eigenvalues(np.linalg.eigvals(structural_matrices(s).xs))
    for k in range(s, 31):
        C = select_fundamental(build_hbvm(k, s)).C
        np.testing.assert_allclose(sorted_eigenvalues(np.linalg.eigvals(C)), want, rtol=0, atol=1e-9)


@pytest.mark.parametrize("s", range(2, 11))
def test_optimal_gamma_table(s):
    g = optimal_gamma(structural_matrices(s).xs)
    assert abs(g.gamma - TABLE[s][0]) <= 5e-5
    assert abs(g.rho_star - TABLE[s][1]) <= 5e-5


def test_optimal_gamma_closed_form_s2():
    # eigenvalues 1/4 +- i/sqrt(48): modulus 1/sqrt(12), argument pi/6
    g = optimal_gamma(structural_matrices(2).xs)
    np.testing.assert_allclose(g.gamma, 1 / np.sqrt(12), rtol=1e-14)
    np.testing.assert_allclose(g.rho_star, 1 - np.sqrt(3) / 2, rtol=1e-13)


def test_optimal_gamma_singular():
    with pytest.raises(ValueError):
        optimal_gamma([[1.0, 0.0], [0.0, 0.0]])


def test_amplification_scan_examples():
    C = select_fundamental(build_hbvm(2, 2)).C
    g = optimal_gamma(C)
    grid = np.logspace(-3, 3, 200)
    assert abs(amplification_scan(C, g.gamma, grid) - 0.1340) <= 1e-3
    assert amplification_scan(C, g.gamma, [1e-8]) < 1e-6
    C3 = structural_matrices(3).xs
    assert amplification_scan(C3, 0.5, grid) > 0.2765
    with pytest.raises(ValueError):
        amplification_scan(C, g.gamma, [])
    with pytest.raises(ValueError):
        amplification_scan(C, g.gamma, [-1.0])


@pytest.mark.parametrize("s", range(2, 7))
def test_scan_agrees_with_analytic(s):
    C = select_fundamental(build_hbvm(s + 4, s)).C
    g = optimal_gamma(C)
    assert abs(amplification_scan(C, g.gamma, np.logspace(-3, 4, 4001)) - g.rho_star) <= 1e-3


def test_condition_number_bounded_with_rule_of_thumb():
    for s in range(2, 6):
        base = np.linalg.cond(select_fundamental(build_hbvm(s, s)).C)
        worst = max(np.linalg.cond(select_fundamental(build_hbvm(k, s)).C) for k in range(s, 101))
        assert worst <= 100 * base
    base = np.linalg.cond(select_fundamental(build_hbvm(2, 2)).C)
    assert np.linalg.cond(select_fundamental(build_hbvm(100, 2), "first_s").C) > 1e3 * base


def test_blended_config_validation():
    with pytest.raises(ValueError):
        BlendedConfig(gamma=0.0)
    with pytest.raises(ValueError):
        BlendedConfig(gamma=0.1, max_outer=0)
    cfg = BlendedConfig(gamma=0.3)
    assert (cfg.newton_tol, cfg.max_outer, cfg.max_inner) == (1e-13, 50, 1)


def test_scalar_midpoint_step():
    lam, h = -1.0, 0.1
    q = h * lam
    t = build_hbvm(1, 1)
    part = select_fundamental(t)
    sol = solve_stages(LinearSystem([[lam]]), t, part, default_config(part), np.array([1.0]), h)
    assert sol.converged and sol.iterations <= 3
    y1 = 1.0 + h * lam * sol.stages[0, 0]
    np.testing.assert_allclose(y1, (1 + q / 2) / (1 - q / 2), rtol=0, atol=1e-13)
    np.testing.assert_allclose(sol.stages[0, 0], 1 / (1 - q / 2), rtol=0, atol=1e-13)


@pytest.mark.parametrize("lam", [-3.0, 2.0, -40.0])
@pytest.mark.parametrize("k,s", [(2, 2), (6, 2), (9, 3)])
def test_one_sweep_applies_error_matrix(lam, k, s):
    h = 0.1
    q = h * lam
    t = build_hbvm(k, s)
    part = select_fundamental(t)
    system = LinearSystem([[lam]])
    y0 = np.array([1.0])
    exact = solve_stages_newton(system, t, part, y0, h, tol=1e-16, max_iter=5).fundamental_stages
    start = exact + np.linspace(0.3, -0.2, s)[:, None]
    cfg = BlendedConfig(gamma=optimal_gamma(part.C).gamma, newton_tol=0.0, max_outer=1)
    after = solve_stages(system, t, part, cfg, y0, h, initial=start).fundamental_stages
    Z = iteration_matrix(part.C, cfg.gamma, q)
    np.testing.assert_allclose(after - exact, Z @ (start - exact), rtol=0, atol=1e-12)


def test_harmonic_residual_and_fixed_point_agreement():
    spec = get_problem("harmonic")
    t = build_hbvm(4, 2)
    part = select_fundamental(t)
    h = 0.1
    sol = solve_stages(spec.system, t, part, default_config(part), spec.y0, h)
    assert sol.converged
    Y = sol.stages
    res = Y - spec.y0 - h * t.A @ spec.system.rhs(Y)
    assert np.max(np.abs(res)) <= 1e-12
    ref = FixedPoint().solve(spec.system, t, spec.y0, h)
    np.testing.assert_allclose(Y, ref.stages, rtol=0, atol=1e-10)


@pytest.mark.parametrize("name,k,s", [("faou", 6, 2), ("fpu", 4, 2), ("biot", 4, 2), ("sitnikov", 4, 2), ("harmonic", 3, 3)])
def test_solvers_agree_on_nonstiff_step(name, k, s):
    spec = get_problem(name)
    t = build_hbvm(k, s)
    part = select_fundamental(t)
    h = spec.default_h / 4
    b = solve_stages(spec.system, t, part, default_config(part), spec.y0, h)
    n = solve_stages_newton(spec.system, t, part, spec.y0, h)
    f = FixedPoint().solve(spec.system, t, spec.y0, h)
    assert b.converged and n.converged and f.converged
    np.testing.assert_allclose(b.stages, f.stages, rtol=0, atol=1e-10)
    np.testing.assert_allclose(n.stages, f.stages, rtol=0, atol=1e-10)


def test_inner_sweeps_reach_same_solution():
    spec = get_problem("faou")
    t = build_hbvm(6, 2)
    part = select_fundamental(t)
    one = solve_stages(spec.system, t, part, default_config(part), spec.y0, 0.16)
    three = solve_stages(spec.system, t, part, default_config(part, max_inner=3), spec.y0, 0.16)
    assert one.converged and three.converged
    np.testing.assert_allclose(one.stages, three.stages, rtol=0, atol=1e-12)


def test_iteration_limit_reports_nonconvergence():
    spec = get_problem("faou")
    t = build_hbvm(6, 2)
    part = select_fundamental(t)
    sol = solve_stages(spec.system, t, part, default_config(part, max_outer=2), spec.y0, 0.16)
    assert not sol.converged and sol.iterations == 2


def test_singular_phi_raises():
    h = 0.1
    t = build_hbvm(2, 2)
    part = select_fundamental(t)
    cfg = default_config(part)
    lam = 1.0 / (h * cfg.gamma)
    with pytest.raises(StepFailure):
        solve_stages(LinearSystem([[lam]]), t, part, cfg, np.array([1.0]), h)
