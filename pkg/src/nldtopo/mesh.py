"""Structured triangulations of rectangular design domains.

The whole pipeline runs on fixed meshes of a rectangle [0, w] x [0, h]:
(nx+1)(ny+1) nodes ordered row-major by (y, x), every grid cell split along
the lower-left to upper-right diagonal, so matrix structure is reproducible
across runs.  Boundary edges carry symbolic region tags used for Dirichlet,
traction and spring conditions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

FREE_TAG = "free"
SIDES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class BoundaryRegion:
    """Axis-aligned interval on one side of the rectangle boundary.

    ``lo``/``hi`` are coordinates along the side: x for bottom/top, y for
    left/right.  Regions with distinct tags may touch only at endpoints.
    """

    tag: str
    side: str
    lo: float
    hi: float

    def __post_init__(self):
        if self.side not in SIDES:
            raise ConfigError(f"unknown boundary side {self.side!r}, expected one of {SIDES}")
        if not self.hi > self.lo:
            raise ConfigError(f"region {self.tag!r}: hi ({self.hi}) must exceed lo ({self.lo})")
        if self.tag == FREE_TAG:
            raise ConfigError(f"tag {FREE_TAG!r} is reserved for untagged edges")


@dataclass
class TriMesh:
    """Immutable triangulation data plus precomputed P1 geometry.

    ``areas`` and ``grads`` hold, per element, the triangle area and the
    constant gradients of its three barycentric basis functions.
    """

    nodes: np.ndarray            # (n_nodes, 2)
    elements: np.ndarray         # (n_elems, 3) counterclockwise node triples
    boundary_edges: np.ndarray   # (n_edges, 2) node pairs
    boundary_tags: tuple         # per-edge region tag
    domain_width: float
    domain_height: float
    nx: int
    ny: int
    areas: np.ndarray = field(repr=False, default=None)
    grads: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.areas is None:
            self.areas, self.grads = _p1_geometry(self.nodes, self.elements)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def domain_area(self) -> float:
        return self.domain_width * self.domain_height

    def tags(self) -> set:
        return set(self.boundary_tags)

    def tagged_edges(self, tag: str) -> np.ndarray:
        """Indices into ``boundary_edges`` carrying ``tag``."""
        idx = np.flatnonzero(np.asarray(self.boundary_tags, dtype=object) == tag)
        if idx.size == 0 and tag not in self.tags():
            raise ConfigError(f"unknown boundary tag {tag!r}; known: {sorted(self.tags())}")
        return idx

    def tagged_nodes(self, tag: str) -> np.ndarray:
        """Sorted unique node ids lying on edges tagged ``tag``."""
        edges = self.boundary_edges[self.tagged_edges(tag)]
        return np.unique(edges)

    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    def edge_lengths(self, edge_idx: np.ndarray) -> np.ndarray:
        e = self.boundary_edges[edge_idx]
        d = self.nodes[e[:, 1]] - self.nodes[e[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])


def _p1_geometry(nodes, elements):
    p = nodes[elements]                       # (m, 3, 2)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    twice_area = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(twice_area <= 0):
        raise ValueError("element with nonpositive signed area")
    grads = np.empty((len(elements), 3, 2))
    grads[:, 0, 0] = p[:, 1, 1] - p[:, 2, 1]
    grads[:, 0, 1] = p[:, 2, 0] - p[:, 1, 0]
    grads[:, 1, 0] = p[:, 2, 1] - p[:, 0, 1]
    grads[:, 1, 1] = p[:, 0, 0] - p[:, 2, 0]
    grads[:, 2, 0] = p[:, 0, 1] - p[:, 1, 1]
    grads[:, 2, 1] = p[:, 1, 0] - p[:, 0, 0]
    grads /= twice_area[:, None, None]
    return twice_area / 2.0, grads


def element_geometry(mesh: TriMesh, e: int):
    """Area and (3, 2) basis-gradient matrix of element ``e``."""
    if not 0 <= e < mesh.n_elements:
        raise IndexError(f"element index {e} out of range")
    return mesh.areas[e], mesh.grads[e]


def _validate_regions(regions, width, height):
    by_side = {}
    for r in regions:
        limit = width if r.side in ("bottom", "top") else height
        if r.lo < -1e-12 * max(1.0, limit) or r.hi > limit * (1 + 1e-12):
            raise ConfigError(f"region {r.tag!r} exceeds the {r.side} side extent [0, {limit}]")
        by_side.setdefault(r.side, []).append(r)
    tol = 1e-12 * max(width, height)
    for side, rs in by_side.items():
        rs = sorted(rs, key=lambda r: r.lo)
        for a, b in zip(rs, rs[1:]):
            if b.lo < a.hi - tol:
                raise ConfigError(
                    f"regions {a.tag!r} and {b.tag!r} overlap on the {side} side"
                )


def generate_rect(nx: int, ny: int, w: float, h: float, regions=()) -> TriMesh:
    """Mesh [0, w] x [0, h] with nx-by-ny cells, two triangles per cell.

    Boundary edges whose midpoint falls inside a region interval receive
    that region's tag; all other boundary edges are tagged ``"free"``.
    """
    if nx < 1 or ny < 1:
        raise ConfigError("nx and ny must be at least 1")
    if w <= 0 or h <= 0:
        raise ConfigError("domain width and height must be positive")
    regions = tuple(regions)
    _validate_regions(regions, w, h)

    xs = np.linspace(0.0, w, nx + 1)
    ys = np.linspace(0.0, h, ny + 1)
    xx, yy = np.meshgrid(xs, ys)              # row-major by (y, x)
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    elements = np.empty((2 * nx * ny, 3), dtype=np.int64)
    k = 0
    for j in range(ny):
        for i in range(nx):
            a, b = nid(i, j), nid(i + 1, j)
            c, d = nid(i + 1, j + 1), nid(i, j + 1)
            elements[k] = (a, b, c)
            elements[k + 1] = (a, c, d)
            k += 2

    edges = []
    sides = []
    mids = []
    for i in range(nx):
        edges.append((nid(i, 0), nid(i + 1, 0)))
        sides.append("bottom")
        mids.append(0.5 * (xs[i] + xs[i + 1]))
        edges.append((nid(i, ny), nid(i + 1, ny)))
        sides.append("top")
        mids.append(0.5 * (xs[i] + xs[i + 1]))
    for j in range(ny):
        edges.append((nid(0, j), nid(0, j + 1)))
        sides.append("left")
        mids.append(0.5 * (ys[j] + ys[j + 1]))
        edges.append((nid(nx, j), nid(nx, j + 1)))
        sides.append("right")
        mids.append(0.5 * (ys[j] + ys[j + 1]))

    tol = 1e-12 * max(w, h)
    tags = []
    for side, mid in zip(sides, mids):
        tag = FREE_TAG
        for r in regions:
            if r.side == side and r.lo - tol <= mid <= r.hi + tol:
                tag = r.tag
                break
        tags.append(tag)
    caught = set(tags)
    for r in regions:
        if r.tag not in caught:
            raise ConfigError(
                f"region {r.tag!r} on the {r.side} side catches no boundary edge "
                f"at this resolution; refine the mesh or widen [{r.lo}, {r.hi}]"
            )

    return TriMesh(
        nodes=nodes,
        elements=elements,
        boundary_edges=np.asarray(edges, dtype=np.int64),
        boundary_tags=tuple(tags),
        domain_width=float(w),
        domain_height=float(h),
        nx=nx,
        ny=ny,
    )
