"""P1 finite element assembly and a deterministic preconditioned CG solver.

Scalar problems carry one dof per node, elasticity two (interleaved, dof =
2*node + component).  Dirichlet conditions are eliminated symmetrically to
identity rows so conjugate gradients stays applicable.  Assemblers precompute
the element index structure once so per-iteration reassembly with new
coefficients is a single vectorized pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, SolverError
from .mesh import TriMesh

DEFAULT_TOL = 1e-8


@dataclass
class DofMap:
    """Node-to-dof bookkeeping plus the prescribed Dirichlet set."""

    ncomp: int
    n_nodes: int
    dirichlet_dofs: np.ndarray
    dirichlet_values: np.ndarray

    @property
    def ndof(self) -> int:
        return self.ncomp * self.n_nodes

    def dof(self, node, comp=0):
        return self.ncomp * np.asarray(node) + comp


def vector_dofs(nodes: np.ndarray, comps=(0, 1)) -> np.ndarray:
    """Interleaved displacement dofs of ``nodes`` restricted to ``comps``."""
    nodes = np.asarray(nodes, dtype=np.int64)
    return np.concatenate([2 * nodes + c for c in comps]) if len(comps) else np.empty(0, np.int64)


class ScalarAssembler:
    """Stiffness assembly for div(c grad u) with per-element coefficient c."""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        g = mesh.grads                                  # (m, 3, 2)
        self.unit_blocks = mesh.areas[:, None, None] * np.einsum("eik,ejk->eij", g, g)
        elems = mesh.elements
        self.rows = np.repeat(elems, 3, axis=1).ravel()
        self.cols = np.tile(elems, (1, 3)).ravel()
        self.shape = (mesh.n_nodes, mesh.n_nodes)

    def stiffness(self, coeff) -> sp.csr_matrix:
        coeff = np.broadcast_to(np.asarray(coeff, dtype=float), (self.mesh.n_elements,))
        if np.any(coeff <= 0):
            raise ValueError("diffusion coefficient must be strictly positive per element")
        data = (coeff[:, None, None] * self.unit_blocks).ravel()
        a = sp.coo_matrix((data, (self.rows, self.cols)), shape=self.shape)
        return a.tocsr()


def voigt_plane_strain(nu: float) -> np.ndarray:
    """Plane-strain constitutive matrix for unit Young's modulus."""
    if not 0.0 < nu < 0.5:
        raise ConfigError(f"Poisson ratio must lie in (0, 0.5), got {nu}")
    lam = nu / ((1 + nu) * (1 - 2 * nu))
    mu = 1.0 / (2 * (1 + nu))
    return np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])


class ElasticAssembler:
    """Linearized elasticity assembly with per-element stiffness scale."""

    def __init__(self, mesh: TriMesh, nu: float):
        self.mesh = mesh
        self.nu = nu
        d = voigt_plane_strain(nu)
        m = mesh.n_elements
        b = np.zeros((m, 3, 6))
        gx = mesh.grads[:, :, 0]
        gy = mesh.grads[:, :, 1]
        for i in range(3):
            b[:, 0, 2 * i] = gx[:, i]
            b[:, 1, 2 * i + 1] = gy[:, i]
            b[:, 2, 2 * i] = gy[:, i]
            b[:, 2, 2 * i + 1] = gx[:, i]
        self.b = b
        self.unit_blocks = mesh.areas[:, None, None] * np.einsum("eki,kl,elj->eij", b, d, b)
        dofs = np.empty((m, 6), dtype=np.int64)
        dofs[:, 0::2] = 2 * mesh.elements
        dofs[:, 1::2] = 2 * mesh.elements + 1
        self.dofs = dofs
        self.rows = np.repeat(dofs, 6, axis=1).ravel()
        self.cols = np.tile(dofs, (1, 6)).ravel()
        self.shape = (2 * mesh.n_nodes, 2 * mesh.n_nodes)

    def stiffness(self, e_eff) -> sp.csr_matrix:
        e_eff = np.broadcast_to(np.asarray(e_eff, dtype=float), (self.mesh.n_elements,))
        if np.any(e_eff <= 0):
            raise ValueError("effective stiffness must be strictly positive per element")
        data = (e_eff[:, None, None] * self.unit_blocks).ravel()
        a = sp.coo_matrix((data, (self.rows, self.cols)), shape=self.shape)
        return a.tocsr()

    def element_strains(self, u: np.ndarray) -> np.ndarray:
        """Constant Voigt strain (exx, eyy, gxy) per element."""
        return np.einsum("eij,ej->ei", self.b, u[self.dofs])


def assemble_scalar_diffusion(mesh: TriMesh, coeff) -> sp.csr_matrix:
    return ScalarAssembler(mesh).stiffness(coeff)


def assemble_elasticity(mesh: TriMesh, e_eff, nu: float) -> sp.csr_matrix:
    return ElasticAssembler(mesh, nu).stiffness(e_eff)


def assemble_lumped_mass(mesh: TriMesh, density=None) -> np.ndarray:
    """Diagonal of the row-sum lumped mass matrix, one entry per node.

    Entry i equals one third of the total area of elements touching node i,
    scaled by the per-node density when given.
    """
    w = np.repeat(mesh.areas / 3.0, 3)
    m = np.bincount(mesh.elements.ravel(), weights=w, minlength=mesh.n_nodes)
    if density is not None:
        density = np.asarray(density, dtype=float)
        if np.any(density < 0):
            raise ValueError("mass density must be nonnegative")
        m = m * density
    return m


def boundary_load(mesh: TriMesh, tag: str, t) -> np.ndarray:
    """Traction rhs: each endpoint of a tagged edge takes t * length / 2."""
    t = np.asarray(t, dtype=float)
    idx = mesh.tagged_edges(tag)
    f = np.zeros(2 * mesh.n_nodes)
    lengths = mesh.edge_lengths(idx)
    for (n0, n1), ell in zip(mesh.boundary_edges[idx], lengths):
        for n in (n0, n1):
            f[2 * n] += t[0] * ell / 2.0
            f[2 * n + 1] += t[1] * ell / 2.0
    return f


def boundary_spring(mesh: TriMesh, tag: str, k: np.ndarray) -> sp.csr_matrix:
    """Edge-lumped boundary mass weighted by the 2x2 matrix ``k``.

    Returns the literal lumped integral of k u . v over the tagged edges;
    callers assembling a system of the form a(u, v) - integral(K u . v) = f
    subtract this contribution from the volume stiffness.
    """
    k = np.asarray(k, dtype=float)
    idx = mesh.tagged_edges(tag)
    lengths = mesh.edge_lengths(idx)
    n = 2 * mesh.n_nodes
    rows, cols, data = [], [], []
    for (n0, n1), ell in zip(mesh.boundary_edges[idx], lengths):
        for node in (n0, n1):
            for a in range(2):
                for b in range(2):
                    rows.append(2 * node + a)
                    cols.append(2 * node + b)
                    data.append(k[a, b] * ell / 2.0)
    return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def apply_dirichlet(a: sp.csr_matrix, b: np.ndarray, dofs, values=0.0):
    """Symmetric elimination: constrained rows/cols become identity rows.

    Returns a new (matrix, rhs) pair; inputs are not modified.
    """
    dofs = np.asarray(dofs, dtype=np.int64)
    n = a.shape[0]
    values = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape)
    x0 = np.zeros(n)
    x0[dofs] = values
    b2 = b - a @ x0
    keep = np.ones(n)
    keep[dofs] = 0.0
    d_free = sp.diags(keep)
    a2 = (d_free @ a @ d_free).tocsr()
    a2 = a2 + sp.diags(1.0 - keep)
    b2 *= keep
    b2[dofs] = values
    return a2.tocsr(), b2


def solve(a: sp.csr_matrix, b: np.ndarray, tol: float = DEFAULT_TOL,
          x0: np.ndarray | None = None, max_iter: int | None = None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradients on an SPD system.

    Stops once ||A x - b|| <= tol * ||b||; raises SolverError with the final
    residual if the iteration cap (20 * dimension by default) is exhausted.
    Fully deterministic for fixed inputs.
    """
    if not 0.0 < tol < 1.0:
        raise ConfigError(f"solver tolerance must lie in (0, 1), got {tol}")
    n = a.shape[0]
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    diag = a.diagonal()
    if np.any(diag <= 0):
        raise SolverError("system diagonal has nonpositive entries; matrix not SPD")
    minv = 1.0 / diag
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - a @ x
    z = minv * r
    p = z.copy()
    rz = r @ z
    cap = 20 * n if max_iter is None else max_iter
    resid = np.linalg.norm(r)
    for _ in range(cap):
        if resid <= tol * bnorm:
            return x
        ap = a @ p
        pap = p @ ap
        if pap <= 0:
            raise SolverError("search direction with nonpositive curvature; matrix not SPD",
                              residual=resid / bnorm)
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        resid = np.linalg.norm(r)
        z = minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    if resid <= tol * bnorm:
        return x
    raise SolverError(
        f"CG exhausted {cap} iterations (relative residual {resid / bnorm:.3e})",
        residual=resid / bnorm,
    )
