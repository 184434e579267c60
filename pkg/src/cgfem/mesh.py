"""Structured quadrilateral meshes: uniform, perturbed, and cracked.

All meshes are logically (nx x ny) grids of 4-node quadrilaterals with
counterclockwise corner ordering and bilinear isoparametric reference maps
on [-1, 1]^2.  Meshes are immutable after construction.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateMeshError, InvalidParameterError

# Reference corners, counterclockwise from (-1, -1).
REF_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])

# Local edge e joins corners e and (e + 1) % 4.
EDGE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))

_GAUSS2 = 1.0 / np.sqrt(3.0)
_JACOBIAN_CHECK_POINTS = np.vstack(
    [REF_CORNERS, _GAUSS2 * REF_CORNERS, [[0.0, 0.0]]]
)


def bilinear_shapes(ref_points):
    """Values of the 4 bilinear corner functions at reference points.

    Parameters
    ----------
    ref_points : array, shape (nq, 2)

    Returns
    -------
    array, shape (nq, 4)
    """
    xi, eta = ref_points[:, 0], ref_points[:, 1]
    return 0.25 * np.stack(
        [
            (1 - xi) * (1 - eta),
            (1 + xi) * (1 - eta),
            (1 + xi) * (1 + eta),
            (1 - xi) * (1 + eta),
        ],
        axis=1,
    )


def bilinear_derivs(ref_points):
    """Reference-space gradients of the 4 corner functions, shape (nq, 4, 2)."""
    xi, eta = ref_points[:, 0], ref_points[:, 1]
    d = np.empty((len(ref_points), 4, 2))
    d[:, 0, 0] = -0.25 * (1 - eta)
    d[:, 1, 0] = 0.25 * (1 - eta)
    d[:, 2, 0] = 0.25 * (1 + eta)
    d[:, 3, 0] = -0.25 * (1 + eta)
    d[:, 0, 1] = -0.25 * (1 - xi)
    d[:, 1, 1] = -0.25 * (1 + xi)
    d[:, 2, 1] = 0.25 * (1 + xi)
    d[:, 3, 1] = 0.25 * (1 - xi)
    return d


class Mesh:
    """Structured quadrilateral mesh with patch and boundary queries.

    Attributes
    ----------
    nodes : array, shape (n_nodes, 2)
    elements : int array, shape (n_elements, 4), counterclockwise corners
    h : float
        Nominal mesh parameter (side / nx).
    nx, ny : int
        Element counts per axis.
    """

    def __init__(self, nodes, elements, h, nx, ny, origin, side):
        self.nodes = np.asarray(nodes, dtype=float)
        self.elements = np.asarray(elements, dtype=int)
        self.h = float(h)
        self.nx = int(nx)
        self.ny = int(ny)
        self.origin = np.asarray(origin, dtype=float)
        self.side = float(side)
        self._build_patches()
        self._validate_jacobians()
        self.nodes.setflags(write=False)
        self.elements.setflags(write=False)
        self._boundary_edges = None

    # -- construction helpers -------------------------------------------------

    def _build_patches(self):
        patches = [[] for _ in range(len(self.nodes))]
        for s, quad in enumerate(self.elements):
            for i in quad:
                patches[i].append(s)
        self.patch_map = [tuple(p) for p in patches]

    def _validate_jacobians(self):
        for s in range(len(self.elements)):
            J = self.jacobians(s, _JACOBIAN_CHECK_POINTS)
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            if np.any(det <= 0.0):
                raise DegenerateMeshError(
                    f"element {s} has nonpositive Jacobian determinant"
                )

    # -- index arithmetic ------------------------------------------------------

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    def node_id(self, ix, iy):
        return iy * (self.nx + 1) + ix

    def node_grid_index(self, i):
        return i % (self.nx + 1), i // (self.nx + 1)

    def element_id(self, ex, ey):
        return ey * self.nx + ex

    def element_grid_index(self, s):
        return s % self.nx, s // self.nx

    # -- adjacency -------------------------------------------------------------

    def patch(self, i):
        """Indices of elements incident to node i (the support omega_i)."""
        return self.patch_map[i]

    def patch_nodes(self, i):
        """Sorted node indices of all elements incident to node i."""
        ids = set()
        for s in self.patch_map[i]:
            ids.update(self.elements[s])
        return np.array(sorted(ids), dtype=int)

    def side_neighbors(self, i):
        """Sorted indices of node i plus nodes sharing an element side with it."""
        ids = {i}
        for s in self.patch_map[i]:
            quad = self.elements[s]
            c = int(np.nonzero(quad == i)[0][0])
            ids.add(int(quad[(c + 1) % 4]))
            ids.add(int(quad[(c + 3) % 4]))
        return np.array(sorted(ids), dtype=int)

    def expand_node_set(self, node_ids):
        """All nodes of elements containing at least one node of node_ids."""
        current = set(int(i) for i in node_ids)
        out = set(current)
        for i in current:
            for s in self.patch_map[i]:
                out.update(int(j) for j in self.elements[s])
        return np.array(sorted(out), dtype=int)

    # -- geometry --------------------------------------------------------------

    def element_corners(self, s):
        return self.nodes[self.elements[s]]

    def map_points(self, s, ref_points):
        """Physical coordinates of reference points in element s."""
        ref_points = np.atleast_2d(ref_points)
        return bilinear_shapes(ref_points) @ self.element_corners(s)

    def jacobians(self, s, ref_points):
        """Jacobians dx/dxi of the bilinear map, shape (nq, 2, 2)."""
        ref_points = np.atleast_2d(ref_points)
        d = bilinear_derivs(ref_points)
        corners = self.element_corners(s)
        # J[q, a, b] = d x_a / d xi_b
        return np.einsum("qcb,ca->qab", d, corners)

    def reference_map(self, s, xi):
        """Map one reference point to (physical point, 2x2 Jacobian)."""
        xi = np.asarray(xi, dtype=float).reshape(1, 2)
        x = self.map_points(s, xi)[0]
        J = self.jacobians(s, xi)[0]
        return x, J

    def inverse_map(self, s, x, tol=1e-12, maxiter=20):
        """Reference coordinates of physical point x via Newton iteration."""
        x = np.asarray(x, dtype=float)
        xi = np.zeros(2)
        for _ in range(maxiter):
            fx, J = self.reference_map(s, xi)
            r = x - fx
            if np.max(np.abs(r)) < tol:
                break
            xi = xi + np.linalg.solve(J, r)
        return xi

    def find_element(self, x, tol=1e-9):
        """Index of an element whose closure contains physical point x."""
        x = np.asarray(x, dtype=float)
        guess = np.floor((x - self.origin) / self.h).astype(int)
        gx = min(max(int(guess[0]), 0), self.nx - 1)
        gy = min(max(int(guess[1]), 0), self.ny - 1)
        candidates = []
        for ring in range(0, 3):
            for ex in range(max(0, gx - ring), min(self.nx, gx + ring + 1)):
                for ey in range(max(0, gy - ring), min(self.ny, gy + ring + 1)):
                    s = self.element_id(ex, ey)
                    if s not in candidates:
                        candidates.append(s)
            for s in candidates:
                xi = self.inverse_map(s, x)
                if np.max(np.abs(xi)) <= 1.0 + tol:
                    return s
        for s in range(self.n_elements):
            xi = self.inverse_map(s, x)
            if np.max(np.abs(xi)) <= 1.0 + tol:
                return s
        raise ValueError(f"point {x} not found in mesh")

    # -- boundary --------------------------------------------------------------

    def boundary_edges(self):
        """List of (element, local_edge) pairs on the domain boundary.

        A local edge e of element s joins corners e and (e+1) % 4.  Boundary
        edges are those shared by exactly one element.
        """
        if self._boundary_edges is None:
            count = {}
            for s, quad in enumerate(self.elements):
                for e, (a, b) in enumerate(EDGE_CORNERS):
                    key = (min(quad[a], quad[b]), max(quad[a], quad[b]))
                    count.setdefault(key, []).append((s, e))
            self._boundary_edges = sorted(
                pair[0] for pair in count.values() if len(pair) == 1
            )
        return self._boundary_edges

    # -- export ----------------------------------------------------------------

    def export_text(self, f):
        """Write a plain-text node/element listing to a file object."""
        for i, (x, y) in enumerate(self.nodes):
            f.write(f"{i} {x!r} {y!r}\n")
        for s, quad in enumerate(self.elements):
            f.write(f"{s} {quad[0]} {quad[1]} {quad[2]} {quad[3]}\n")


def _lattice(N, origin, side):
    coords = origin[0] + side * np.arange(N + 1) / N
    ycoords = origin[1] + side * np.arange(N + 1) / N
    X, Y = np.meshgrid(coords, ycoords, indexing="xy")
    return np.column_stack([X.ravel(), Y.ravel()])


def _grid_elements(N):
    elements = np.empty((N * N, 4), dtype=int)
    for ey in range(N):
        for ex in range(N):
            n0 = ey * (N + 1) + ex
            elements[ey * N + ex] = (n0, n0 + 1, n0 + N + 2, n0 + N + 1)
    return elements


def build_uniform_mesh(N, origin=(0.0, 0.0), side=1.0):
    """Uniform N x N mesh of an axis-aligned square, h = side / N."""
    if N < 2:
        raise InvalidParameterError(f"N must be >= 2, got {N}")
    origin = np.asarray(origin, dtype=float)
    nodes = _lattice(N, origin, side)
    return Mesh(nodes, _grid_elements(N), side / N, N, N, origin, side)


def build_perturbed_mesh(N, magnitude=0.1, seed=0, origin=(0.0, 0.0), side=1.0):
    """Uniform mesh with interior nodes displaced by magnitude * h * eps.

    Each interior node (ix, iy) draws eps from its own substream
    ``np.random.default_rng((seed, ix, iy))``, both components uniform on
    [-0.5, 0.5], so the mesh is reproducible and independent of iteration
    order.  Boundary nodes stay fixed.
    """
    if N < 2:
        raise InvalidParameterError(f"N must be >= 2, got {N}")
    if not 0.0 <= magnitude <= 0.25:
        raise InvalidParameterError(
            f"perturbation magnitude must be in [0, 0.25], got {magnitude}"
        )
    origin = np.asarray(origin, dtype=float)
    nodes = _lattice(N, origin, side)
    h = side / N
    for iy in range(1, N):
        for ix in range(1, N):
            rng = np.random.default_rng((seed, ix, iy))
            eps = rng.uniform(-0.5, 0.5, size=2)
            nodes[iy * (N + 1) + ix] += magnitude * h * eps
    return Mesh(nodes, _grid_elements(N), h, N, N, origin, side)


class CrackMesh:
    """Uniform n x n mesh on [-1, 1]^2 with a horizontal slit.

    The slit runs along {x2 = 0, -1 <= x1 <= 0} with tip O at the origin;
    n must be odd so no node or element edge lies on the slit line.  The
    slit is represented implicitly: geometry is uncut, discontinuities live
    in enrichment functions.

    Attributes
    ----------
    base : Mesh
    tip : array (2,), the origin
    cut_elements : sorted int list, elements whose interior meets the slit
    tip_element : int
    tip_block : sorted int list, tip element plus its 8 grid neighbors
    index_set_1 : int array, nodes of cut elements (I_h1)
    index_set_2 : int array, nodes inside the closed square D(O, R) (I_h2)
    tip_nodes : int array, the 4 nodes of the tip element (Delta)
    """

    normal = np.array([0.0, 1.0])
    tangent = np.array([1.0, 0.0])

    def __init__(self, n, R=0.25):
        if n % 2 == 0:
            raise InvalidParameterError(
                f"n must be odd so the slit avoids element boundaries, got {n}"
            )
        if n < 5:
            raise InvalidParameterError(f"n must be >= 5, got {n}")
        if not 0.0 < R < 1.0:
            raise InvalidParameterError(f"R must be in (0, 1), got {R}")
        self.n = n
        self.R = float(R)
        self.base = build_uniform_mesh(n, origin=(-1.0, -1.0), side=2.0)
        self.tip = np.zeros(2)
        if np.any(self.base.nodes[:, 1] == 0.0):
            raise DegenerateMeshError("a node lies on the slit line x2 = 0")

        mid = (n - 1) // 2
        self.tip_element = self.base.element_id(mid, mid)
        self.cut_elements = sorted(
            self.base.element_id(ex, mid) for ex in range(mid + 1)
        )
        self.tip_block = sorted(
            self.base.element_id(ex, ey)
            for ex in range(mid - 1, mid + 2)
            for ey in range(mid - 1, mid + 2)
        )
        ids = set()
        for s in self.cut_elements:
            ids.update(int(j) for j in self.base.elements[s])
        self.index_set_1 = np.array(sorted(ids), dtype=int)
        inside = np.all(np.abs(self.base.nodes) <= R + 1e-14, axis=1)
        self.index_set_2 = np.flatnonzero(inside)
        self.tip_nodes = np.sort(self.base.elements[self.tip_element])

    @property
    def h(self):
        return self.base.h

    def crosses_slit(self, x_lo, x_hi, y_lo, y_hi):
        """Whether an axis-aligned box straddles the slit {x2=0, x1<=0}."""
        return y_lo < 0.0 < y_hi and x_lo < 0.0


def build_crack_mesh(n, R=0.25):
    """CrackMesh with n x n elements on [-1, 1]^2, h = 2 / n."""
    return CrackMesh(n, R)
