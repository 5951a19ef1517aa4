import numpy as np
import pytest
import scipy.sparse as sp

from nldtopo.errors import ConfigError, SolverError
from nldtopo.fem import (
    apply_dirichlet,
    assemble_elasticity,
    assemble_lumped_mass,
    assemble_scalar_diffusion,
    boundary_load,
    boundary_spring,
    solve,
    vector_dofs,
    voigt_plane_strain,
)
from nldtopo.mesh import BoundaryRegion, generate_rect

from conftest import single_triangle_mesh


# ---------------------------------------------------------------------------
# scalar diffusion


def test_single_triangle_element_matrix():
    m = single_triangle_mesh()
    a = assemble_scalar_diffusion(m, 1.0).toarray()
    expected = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    assert np.allclose(a, expected)


def test_constants_in_null_space():
    m = generate_rect(6, 5, 1.5, 1.0)
    a = assemble_scalar_diffusion(m, 1.0)
    assert np.allclose(a @ np.ones(m.n_nodes), 0.0, atol=1e-12)


def test_coefficient_linearity():
    m = generate_rect(3, 3, 1.0, 1.0)
    a1 = assemble_scalar_diffusion(m, 1.0)
    a3 = assemble_scalar_diffusion(m, 3.0)
    assert np.allclose(a3.toarray(), 3.0 * a1.toarray())


def test_nonpositive_coefficient_rejected():
    m = generate_rect(2, 2, 1.0, 1.0)
    coeff = np.ones(m.n_elements)
    coeff[3] = 0.0
    with pytest.raises(ValueError):
        assemble_scalar_diffusion(m, coeff)


def test_scalar_symmetry():
    m = generate_rect(5, 3, 1.0, 2.0)
    rng = np.random.default_rng(0)
    a = assemble_scalar_diffusion(m, rng.uniform(0.5, 2.0, m.n_elements))
    d = a - a.T
    assert abs(d).max() <= 1e-12 * abs(a).max()


# ---------------------------------------------------------------------------
# elasticity


def test_rigid_translation_null_space():
    m = generate_rect(4, 3, 1.0, 1.0)
    a = assemble_elasticity(m, 1.0, 0.3)
    u = np.tile([1.0, 1.0], m.n_nodes)
    assert np.allclose(a @ u, 0.0, atol=1e-12)


def test_infinitesimal_rotation_null_space():
    m = generate_rect(5, 4, 2.0, 1.0)
    a = assemble_elasticity(m, 1.0, 0.3)
    u = np.empty(2 * m.n_nodes)
    u[0::2] = -m.nodes[:, 1]
    u[1::2] = m.nodes[:, 0]
    scale = abs(a).max()
    assert np.abs(a @ u).max() < 1e-10 * scale


def test_uniaxial_strain_energy_nu_zero():
    # u = (x, 0) with E = 1, nu = 0: energy density is D11 = 1, so energy = area
    m = single_triangle_mesh()
    a = assemble_elasticity(m, 1.0, 1e-12)
    u = np.zeros(6)
    u[0::2] = m.nodes[:, 0]
    assert u @ (a @ u) == pytest.approx(0.5, rel=1e-9)


def test_poisson_ratio_range_enforced():
    with pytest.raises(ConfigError):
        voigt_plane_strain(0.5)
    with pytest.raises(ConfigError):
        voigt_plane_strain(-0.1)


def test_galerkin_symmetry_random_vectors():
    m = generate_rect(4, 4, 1.0, 1.0)
    rng = np.random.default_rng(3)
    a = assemble_elasticity(m, rng.uniform(0.5, 2.0, m.n_elements), 0.3)
    for _ in range(5):
        u = rng.standard_normal(2 * m.n_nodes)
        v = rng.standard_normal(2 * m.n_nodes)
        assert u @ (a @ v) == pytest.approx(v @ (a @ u), rel=1e-10)


def test_patch_test_elasticity():
    m = generate_rect(7, 5, 1.4, 1.0)
    a = assemble_elasticity(m, 1.0, 0.3)
    x, y = m.nodes[:, 0], m.nodes[:, 1]
    exact = np.empty(2 * m.n_nodes)
    exact[0::2] = 0.3 + 0.7 * x - 0.2 * y
    exact[1::2] = -0.1 + 0.4 * x + 0.9 * y
    dofs = vector_dofs(m.boundary_nodes(), (0, 1))
    a2, b2 = apply_dirichlet(a, np.zeros(2 * m.n_nodes), dofs, exact[dofs])
    u = solve(a2, b2, tol=1e-14)
    assert np.abs(u - exact).max() < 1e-10


def test_patch_test_scalar():
    m = generate_rect(6, 7, 1.0, 1.0)
    a = assemble_scalar_diffusion(m, 1.0)
    t_exact = 2.0 + 0.5 * m.nodes[:, 0] - 1.25 * m.nodes[:, 1]
    bn = m.boundary_nodes()
    a2, b2 = apply_dirichlet(a, np.zeros(m.n_nodes), bn, t_exact[bn])
    t = solve(a2, b2, tol=1e-14)
    assert np.abs(t - t_exact).max() < 1e-10


# ---------------------------------------------------------------------------
# lumped mass


def test_mass_conserves_total_area():
    m = generate_rect(6, 3, 2.0, 1.0)
    d = assemble_lumped_mass(m)
    assert d.sum() == pytest.approx(2.0, rel=1e-12)


def test_zero_density_gives_zero_mass():
    m = generate_rect(2, 2, 1.0, 1.0)
    assert np.all(assemble_lumped_mass(m, np.zeros(m.n_nodes)) == 0.0)


def test_interior_node_mass_is_third_of_adjacent_area():
    m = generate_rect(2, 2, 2.0, 2.0)      # cells of size 1x1
    d = assemble_lumped_mass(m)
    center = 4                              # node (1, 1), row-major
    adjacent = [e for e in range(m.n_elements) if center in m.elements[e]]
    assert d[center] == pytest.approx(m.areas[adjacent].sum() / 3.0, rel=1e-12)


# ---------------------------------------------------------------------------
# boundary terms


def load_mesh():
    # h = 0.05 so the tagged patch is exactly two edges, total length 0.1
    return generate_rect(20, 20, 1.0, 1.0, [BoundaryRegion("load", "right", 0.45, 0.55)])


def test_total_load_matches_traction_times_length():
    m = load_mesh()
    f = boundary_load(m, "load", (0.0, -1.0e3))
    assert f[1::2].sum() == pytest.approx(-1.0e3 * 0.1, rel=1e-12)
    assert f[0::2].sum() == pytest.approx(0.0, abs=1e-12)


def test_zero_traction_zero_vector():
    m = load_mesh()
    assert np.all(boundary_load(m, "load", (0.0, 0.0)) == 0.0)


def test_shared_node_gets_both_edge_contributions():
    m = load_mesh()
    f = boundary_load(m, "load", (0.0, -2.0))
    # two collinear edges of length 0.05 share the node at y = 0.5
    shared = [n for n in m.tagged_nodes("load")
              if np.isclose(m.nodes[n, 1], 0.5) and np.isclose(m.nodes[n, 0], 1.0)]
    assert len(shared) == 1
    assert f[2 * shared[0] + 1] == pytest.approx(2 * (-2.0 * 0.05 / 2.0), rel=1e-12)


def test_unknown_tag_rejected():
    m = load_mesh()
    with pytest.raises(ConfigError):
        boundary_load(m, "missing", (1.0, 0.0))


def test_zero_spring_no_contribution():
    m = load_mesh()
    s = boundary_spring(m, "load", np.zeros((2, 2)))
    assert s.nnz == 0 or abs(s).max() == 0.0


def test_spring_diagonal_blocks():
    m = load_mesh()
    k = 3.0 * np.eye(2)
    s = boundary_spring(m, "load", k).toarray()
    interior_endpoint = [n for n in m.tagged_nodes("load")
                         if np.isclose(m.nodes[n, 1], 0.5)][0]
    # two adjacent tagged edges of length 0.05 each contribute k * L / 2
    assert s[2 * interior_endpoint, 2 * interior_endpoint] == pytest.approx(3.0 * 0.05)


def test_negative_definite_spring_keeps_system_positive_definite():
    m = generate_rect(1, 1, 1.0, 1.0, [BoundaryRegion("port", "right", 0.0, 1.0)])
    a = assemble_elasticity(m, 1.0, 0.3)
    a = a - boundary_spring(m, "port", -0.5 * np.eye(2))
    left = m.nodes[:, 0] < 1e-9
    fixed = vector_dofs(np.flatnonzero(left), (0, 1))
    a2, _ = apply_dirichlet(a, np.zeros(a.shape[0]), fixed, 0.0)
    eigs = np.linalg.eigvalsh(a2.toarray())
    assert eigs.min() > 0


# ---------------------------------------------------------------------------
# solver


def test_identity_system():
    a = sp.eye(5, format="csr")
    b = np.arange(5.0)
    assert np.allclose(solve(a, b), b)


def test_poisson_chain_analytic():
    # -u'' = 1 on (0, 1), u(0) = u(1) = 0, centered differences
    n = 50
    h = 1.0 / n
    main = np.full(n - 1, 2.0 / h)
    off = np.full(n - 2, -1.0 / h)
    a = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    b = np.full(n - 1, h)
    u = solve(a, b, tol=1e-12)
    x = np.linspace(h, 1.0 - h, n - 1)
    assert np.abs(u - 0.5 * x * (1.0 - x)).max() < 1e-10


def test_solve_consistency():
    m = generate_rect(5, 5, 1.0, 1.0)
    a = assemble_scalar_diffusion(m, 1.0)
    a2, _ = apply_dirichlet(a, np.zeros(m.n_nodes), m.boundary_nodes(), 0.0)
    rng = np.random.default_rng(1)
    y = rng.standard_normal(m.n_nodes)
    x = solve(a2, a2 @ y, tol=1e-12)
    assert np.allclose(x, y, atol=1e-8)


def test_dirichlet_rows_become_identity():
    m = generate_rect(3, 3, 1.0, 1.0)
    a = assemble_scalar_diffusion(m, 1.0)
    bn = m.boundary_nodes()
    vals = np.linspace(0.0, 1.0, bn.size)
    a2, b2 = apply_dirichlet(a, np.zeros(m.n_nodes), bn, vals)
    dense = a2.toarray()
    for n, v in zip(bn, vals):
        row = np.zeros(m.n_nodes)
        row[n] = 1.0
        assert np.allclose(dense[n], row)
        assert b2[n] == pytest.approx(v)
    d = a2 - a2.T
    assert abs(d).max() < 1e-12


def test_iteration_cap_raises_with_residual():
    a = sp.eye(4, format="csr") * 2.0
    b = np.ones(4)
    with pytest.raises(SolverError) as err:
        solve(a, b, tol=1e-12, max_iter=0)
    assert np.isfinite(err.value.residual)


def test_zero_rhs_returns_zero():
    a = sp.eye(3, format="csr")
    assert np.all(solve(a, np.zeros(3)) == 0.0)


def test_bad_tolerance_rejected():
    a = sp.eye(3, format="csr")
    with pytest.raises(ConfigError):
        solve(a, np.ones(3), tol=2.0)
