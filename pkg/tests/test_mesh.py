import numpy as np
import pytest
from hypothesis import given, strategies as st

from nldtopo.errors import ConfigError
from nldtopo.mesh import BoundaryRegion, element_geometry, generate_rect

from conftest import single_triangle_mesh


def cantilever_regions():
    return [
        BoundaryRegion("clamp", "left", 0.0, 1.0),
        BoundaryRegion("load", "right", 0.45, 0.55),
    ]


def test_smallest_mesh():
    m = generate_rect(1, 1, 1.0, 1.0)
    assert m.n_nodes == 4
    assert m.n_elements == 2
    assert len(m.boundary_edges) == 4
    assert set(m.boundary_tags) == {"free"}


def test_node_and_element_counts():
    m = generate_rect(2, 1, 2.0, 1.0)
    assert m.n_nodes == 6
    assert m.n_elements == 4
    assert m.areas.sum() == pytest.approx(2.0, rel=1e-12)


def test_total_area_matches_domain():
    m = generate_rect(7, 3, 1.3, 0.7)
    assert m.areas.sum() == pytest.approx(1.3 * 0.7, rel=1e-12)
    assert np.all(m.areas > 0)


def test_region_tagging_matches_predicates():
    m = generate_rect(80, 40, 2.0, 1.0, cantilever_regions())
    # brute force: every boundary edge checked against the interval predicates
    for (n0, n1), tag in zip(m.boundary_edges, m.boundary_tags):
        p0, p1 = m.nodes[n0], m.nodes[n1]
        mid = 0.5 * (p0 + p1)
        if np.isclose(mid[0], 0.0):
            assert tag == "clamp"
        elif np.isclose(mid[0], 2.0) and 0.45 <= mid[1] <= 0.55:
            assert tag == "load"
        else:
            assert tag == "free"
    assert len(m.tagged_edges("load")) == 4        # patch length 0.1, h = 0.025
    assert np.isclose(m.edge_lengths(m.tagged_edges("load")).sum(), 0.1)


def test_overlapping_regions_rejected():
    with pytest.raises(ConfigError):
        generate_rect(4, 4, 1.0, 1.0, [
            BoundaryRegion("a", "left", 0.0, 0.6),
            BoundaryRegion("b", "left", 0.5, 1.0),
        ])


def test_unknown_tag_raises():
    m = generate_rect(2, 2, 1.0, 1.0)
    with pytest.raises(ConfigError):
        m.tagged_edges("nope")


def test_element_geometry_unit_right_triangle():
    m = single_triangle_mesh()
    area, grads = element_geometry(m, 0)
    assert area == pytest.approx(0.5)
    assert np.allclose(grads, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def test_basis_gradients_sum_to_zero():
    m = generate_rect(5, 4, 2.0, 1.0)
    assert np.allclose(m.grads.sum(axis=1), 0.0, atol=1e-12)


def test_translation_invariance():
    m1 = single_triangle_mesh((0, 0), (0.3, 0.1), (0.05, 0.4))
    m2 = single_triangle_mesh((2, 5), (2.3, 5.1), (2.05, 5.4))
    a1, g1 = element_geometry(m1, 0)
    a2, g2 = element_geometry(m2, 0)
    assert a1 == pytest.approx(a2)
    assert np.allclose(g1, g2)


@given(st.floats(0.01, 0.98), st.floats(0.01, 0.98))
def test_partition_of_unity(l1, l2):
    # barycentric values on any element sum to one at interior points
    if l1 + l2 >= 1.0:
        l2 = (1.0 - l1) * l2
    m = generate_rect(3, 3, 1.0, 1.0)
    e = 5
    area, grads = element_geometry(m, e)
    p = m.nodes[m.elements[e]]
    point = (1 - l1 - l2) * p[0] + l1 * p[1] + l2 * p[2]
    # P1 basis via the gradient representation: N_i(x) = N_i(v_i) + g_i . (x - v_i)
    vals = [1.0 + grads[i] @ (point - p[i]) for i in range(3)]
    assert np.isclose(sum(vals), 1.0, atol=1e-12)


def test_refinement_quadruples_elements():
    m1 = generate_rect(6, 4, 2.0, 1.0)
    m2 = generate_rect(12, 8, 2.0, 1.0)
    assert m2.n_elements == 4 * m1.n_elements
    assert m2.areas.sum() == pytest.approx(m1.areas.sum(), rel=1e-12)


def test_degenerate_inputs_rejected():
    with pytest.raises(ConfigError):
        generate_rect(0, 1, 1.0, 1.0)
    with pytest.raises(ConfigError):
        generate_rect(1, 1, -1.0, 1.0)
    with pytest.raises(ConfigError):
        BoundaryRegion("x", "diagonal", 0.0, 1.0)
    with pytest.raises(ConfigError):
        BoundaryRegion("x", "left", 0.5, 0.5)
