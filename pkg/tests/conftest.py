import numpy as np
import pytest

from nldtopo.mesh import TriMesh, generate_rect


@pytest.fixture
def unit_square_mesh():
    return generate_rect(4, 4, 1.0, 1.0)


def single_triangle_mesh(p0=(0.0, 0.0), p1=(1.0, 0.0), p2=(0.0, 1.0)):
    """One-element mesh for hand-checked assembly values."""
    nodes = np.array([p0, p1, p2], dtype=float)
    return TriMesh(
        nodes=nodes,
        elements=np.array([[0, 1, 2]], dtype=np.int64),
        boundary_edges=np.array([[0, 1], [1, 2], [2, 0]], dtype=np.int64),
        boundary_tags=("free", "free", "free"),
        domain_width=1.0,
        domain_height=1.0,
        nx=1,
        ny=1,
    )


def smooth_field(mesh, rng, amp=1.0, modes=4):
    """Random low-frequency field, scaled to the given amplitude."""
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    w = np.zeros(mesh.n_nodes)
    for _ in range(modes):
        a, b = rng.uniform(0.5, 3.0, 2)
        p, r = rng.uniform(0.0, 2.0 * np.pi, 2)
        w += rng.uniform(-1.0, 1.0) * np.sin(a * np.pi * x + p) * np.sin(b * np.pi * y + r)
    return amp * w / np.abs(w).max()
