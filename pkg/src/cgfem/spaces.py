"""DOF -> shape-function tables for all methods.

Every space exposes the same element-scoped evaluation contract:

    element_dofs(s)            active DOF ids on element s
    evaluate(s, ref, phys)     values (nq, nd) and gradients (nq, nd, 2)
    constant_vector()          coefficients representing the function 1
    quadrature_profile()       baseline points per axis + reference breakpoints

Methods: isoparametric Lagrange FEM of degree k, flat-top GFEM, modified
SGFEM (flat-top PU times interpolant-corrected monomials), the condensed
space (one DOF per node), and the conventional crack GFEM with Heaviside
and singular geometric enrichment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .condensation import CondensedBasis, crack_condensed_basis, smooth_condensed_basis
from .enrichment import MonomialSpace, heaviside, polar_sin_mode
from .errors import InvalidParameterError
from .mesh import CrackMesh
from .partition import FlatTopPU, HatPU, _physical_grads


@dataclass(frozen=True)
class QuadratureProfile:
    points_per_axis: int
    ref_breakpoints: tuple = ()


def _lagrange_1d(nodes, x):
    """Values and derivatives of the Lagrange basis on the given 1D nodes."""
    m = len(nodes)
    x = np.asarray(x, dtype=float)
    vals = np.ones((len(x), m))
    ders = np.zeros((len(x), m))
    for a in range(m):
        for b in range(m):
            if b != a:
                vals[:, a] *= (x - nodes[b]) / (nodes[a] - nodes[b])
        for c in range(m):
            if c == a:
                continue
            term = np.full(len(x), 1.0 / (nodes[a] - nodes[c]))
            for b in range(m):
                if b != a and b != c:
                    term *= (x - nodes[b]) / (nodes[a] - nodes[b])
            ders[:, a] += term
    return vals, ders


class _SpaceBase:
    method = "?"

    @property
    def max_element_dofs(self):
        return max(len(self.element_dofs(s)) for s in range(self.mesh.n_elements))

    def summary(self):
        return f"{self.method},{self.k},{self.dof_count},{self.max_element_dofs}"


class FemSpace(_SpaceBase):
    """Tensor-product Lagrange FEM of degree k on the bilinear geometry.

    Reference nodes are equispaced; DOFs live on the (k*nx + 1) x
    (k*ny + 1) lattice, shared across elements through the structured
    numbering, so continuity holds on perturbed meshes as well.
    """

    method = "fem"

    def __init__(self, mesh, k):
        if k not in (1, 2, 3):
            raise InvalidParameterError(f"FEM degree must be 1, 2, or 3, got {k}")
        self.mesh = mesh
        self.k = k
        self._nodes_1d = np.linspace(-1.0, 1.0, k + 1)
        self._ncols = k * mesh.nx + 1
        self.dof_count = self._ncols * (k * mesh.ny + 1)
        self._edofs = []
        for s in range(mesh.n_elements):
            ex, ey = mesh.element_grid_index(s)
            dofs = np.array(
                [
                    (k * ey + b) * self._ncols + (k * ex + a)
                    for b in range(k + 1)
                    for a in range(k + 1)
                ],
                dtype=int,
            )
            self._edofs.append(dofs)

    def element_dofs(self, s):
        return self._edofs[s]

    def evaluate(self, s, ref_points, phys_points=None, need_grad=True):
        ref_points = np.atleast_2d(ref_points)
        vx, dx = _lagrange_1d(self._nodes_1d, ref_points[:, 0])
        vy, dy = _lagrange_1d(self._nodes_1d, ref_points[:, 1])
        m = self.k + 1
        nq = len(ref_points)
        vals = np.empty((nq, m * m))
        ref_grads = np.empty((nq, m * m, 2)) if need_grad else None
        for b in range(m):
            for a in range(m):
                j = b * m + a
                vals[:, j] = vx[:, a] * vy[:, b]
                if need_grad:
                    ref_grads[:, j, 0] = dx[:, a] * vy[:, b]
                    ref_grads[:, j, 1] = vx[:, a] * dy[:, b]
        if not need_grad:
            return vals, None
        return vals, _physical_grads(self.mesh, s, ref_points, ref_grads)

    def constant_vector(self):
        return np.ones(self.dof_count)

    def quadrature_profile(self):
        return QuadratureProfile(self.k + 2)


def _chi(k):
    return (k + 1) * (k + 2) // 2


class FlatTopGfemSpace(_SpaceBase):
    """Flat-top PU times scaled monomials: chi DOFs per node."""

    method = "ftgfem"

    def __init__(self, mesh, k, sigma=0.2, ft_l=1):
        self.mesh = mesh
        self.k = k
        self.sigma = sigma
        self.pu = FlatTopPU(mesh, sigma, ft_l)
        self.chi = _chi(k)
        self.local = [
            MonomialSpace(k, mesh.nodes[i], mesh.h, node=i)
            for i in range(mesh.n_nodes)
        ]
        self.dof_count = mesh.n_nodes * self.chi
        self._edofs = [
            np.concatenate(
                [np.arange(i * self.chi, (i + 1) * self.chi) for i in mesh.elements[s]]
            )
            for s in range(mesh.n_elements)
        ]

    def element_dofs(self, s):
        return self._edofs[s]

    def evaluate(self, s, ref_points, phys_points=None, need_grad=True):
        ref_points = np.atleast_2d(ref_points)
        if phys_points is None:
            phys_points = self.mesh.map_points(s, ref_points)
        pv, pg = self.pu.element_values(s, ref_points, need_grad=need_grad)
        nq = len(ref_points)
        vals = np.empty((nq, 4 * self.chi))
        grads = np.empty((nq, 4 * self.chi, 2)) if need_grad else None
        for c, i in enumerate(self.mesh.elements[s]):
            cols = slice(c * self.chi, (c + 1) * self.chi)
            if need_grad:
                mv, mg = self.local[i].eval_with_grad(phys_points)
                grads[:, cols, :] = (
                    pg[:, c, None, :] * mv[:, :, None] + pv[:, c, None, None] * mg
                )
            else:
                mv = self.local[i].eval(phys_points)
            vals[:, cols] = pv[:, c, None] * mv
        return vals, grads

    def constant_vector(self):
        v = np.zeros(self.dof_count)
        v[:: self.chi] = 1.0
        return v

    def quadrature_profile(self):
        if self.sigma > 0.0:
            return QuadratureProfile(
                self.k + 2, (-(1.0 - 2.0 * self.sigma), 1.0 - 2.0 * self.sigma)
            )
        return QuadratureProfile(self.k + 2)


class SgfemSpace(_SpaceBase):
    """Hat FE part plus flat-top-corrected monomials of degree 2..k.

    Enrichments of degree <= 1 are omitted: the bilinear interpolant
    reproduces them exactly on isoparametric elements, so their corrected
    versions vanish identically (k = 1 coincides with bilinear FEM).
    """

    method = "sgfem"

    def __init__(self, mesh, k, sigma=0.2, ft_l=1):
        self.mesh = mesh
        self.k = k
        self.sigma = sigma
        self.hat = HatPU(mesh)
        self.pu = FlatTopPU(mesh, sigma, ft_l)
        self.local = [
            MonomialSpace(k, mesh.nodes[i], mesh.h, node=i)
            for i in range(mesh.n_nodes)
        ]
        self.n_enr = _chi(k) - 3 if k >= 2 else 0
        self._enr = slice(3, 3 + self.n_enr)
        nn = mesh.n_nodes
        self.dof_count = nn + nn * self.n_enr
        self._edofs = []
        for s in range(mesh.n_elements):
            quad = mesh.elements[s]
            parts = [np.asarray(quad, dtype=int)]
            if self.n_enr:
                parts.extend(
                    nn + np.arange(i * self.n_enr, (i + 1) * self.n_enr)
                    for i in quad
                )
            self._edofs.append(np.concatenate(parts))

    def element_dofs(self, s):
        return self._edofs[s]

    def evaluate(self, s, ref_points, phys_points=None, need_grad=True):
        ref_points = np.atleast_2d(ref_points)
        if phys_points is None:
            phys_points = self.mesh.map_points(s, ref_points)
        hv, hg = self.hat.element_values(s, ref_points, need_grad=need_grad)
        nq = len(ref_points)
        nd = 4 + 4 * self.n_enr
        vals = np.empty((nq, nd))
        grads = np.empty((nq, nd, 2)) if need_grad else None
        vals[:, :4] = hv
        if need_grad:
            grads[:, :4, :] = hg
        if self.n_enr == 0:
            return vals, grads
        qv, qg = self.pu.element_values(s, ref_points, need_grad=need_grad)
        corners = self.mesh.element_corners(s)
        for c, i in enumerate(self.mesh.elements[s]):
            cols = slice(4 + c * self.n_enr, 4 + (c + 1) * self.n_enr)
            nodal = self.local[i].eval(corners)[:, self._enr]  # (4, n_enr)
            if need_grad:
                mv, mg = self.local[i].eval_with_grad(phys_points)
                mv = mv[:, self._enr]
                mg = mg[:, self._enr, :]
                corr_v = mv - hv @ nodal
                corr_g = mg - np.einsum("qcd,ce->qed", hg, nodal)
                grads[:, cols, :] = (
                    qg[:, c, None, :] * corr_v[:, :, None]
                    + qv[:, c, None, None] * corr_g
                )
            else:
                mv = self.local[i].eval(phys_points)[:, self._enr]
                corr_v = mv - hv @ nodal
            vals[:, cols] = qv[:, c, None] * corr_v
        return vals, grads

    def constant_vector(self):
        v = np.zeros(self.dof_count)
        v[: self.mesh.n_nodes] = 1.0
        return v

    def quadrature_profile(self):
        if self.sigma > 0.0 and self.n_enr:
            return QuadratureProfile(
                self.k + 2, (-(1.0 - 2.0 * self.sigma), 1.0 - 2.0 * self.sigma)
            )
        return QuadratureProfile(self.k + 2)


class CondensedSpace(_SpaceBase):
    """One shape function psi_l per mesh node, pasted from the LS duals."""

    def __init__(self, basis: CondensedBasis, method="cgfem", k=None):
        self.basis = basis
        self.mesh = basis.mesh
        self.method = method
        self.k = k if k is not None else 1
        self.hat = HatPU(self.mesh)
        self.dof_count = self.mesh.n_nodes
        self._edofs = []
        for s in range(self.mesh.n_elements):
            ids = set()
            for i in self.mesh.elements[s]:
                ids.update(int(l) for l in basis.fits[i].indices)
            self._edofs.append(np.array(sorted(ids), dtype=int))

    def element_dofs(self, s):
        return self._edofs[s]

    def evaluate(self, s, ref_points, phys_points=None, need_grad=True):
        ref_points = np.atleast_2d(ref_points)
        if phys_points is None:
            phys_points = self.mesh.map_points(s, ref_points)
        dofs = self._edofs[s]
        hv, hg = self.hat.element_values(s, ref_points, need_grad=True)
        nq = len(ref_points)
        vals = np.zeros((nq, len(dofs)))
        grads = np.zeros((nq, len(dofs), 2)) if need_grad else None
        for c, i in enumerate(self.mesh.elements[s]):
            fit = self.basis.fits[i]
            cols = np.searchsorted(dofs, fit.indices)
            if need_grad:
                lsv, lsg = self.basis.ls_values_and_grads(i, phys_points)
                grads[:, cols, :] += (
                    hg[:, c, None, :] * lsv[:, :, None]
                    + hv[:, c, None, None] * lsg
                )
            else:
                lsv = self.basis.ls_values(i, phys_points)
            vals[:, cols] += hv[:, c, None] * lsv
        return vals, grads

    def constant_vector(self):
        return np.ones(self.dof_count)

    def quadrature_profile(self):
        return QuadratureProfile(self.k + 2)


class CrackGfemSpace(_SpaceBase):
    """Conventional crack GFEM: hats, Heaviside on cut-element nodes (tip
    element excluded), singular enrichment on the fixed square."""

    method = "crack_gfem"

    def __init__(self, crack_mesh: CrackMesh):
        self.crack = crack_mesh
        self.mesh = crack_mesh.base
        self.k = 1
        self.hat = HatPU(self.mesh)
        nn = self.mesh.n_nodes
        delta = set(int(i) for i in crack_mesh.tip_nodes)
        self.h_nodes = np.array(
            sorted(set(int(i) for i in crack_mesh.index_set_1) - delta), dtype=int
        )
        self.s_nodes = np.asarray(crack_mesh.index_set_2, dtype=int)
        self._h_pos = {int(i): p for p, i in enumerate(self.h_nodes)}
        self._s_pos = {int(i): p for p, i in enumerate(self.s_nodes)}
        self.dof_count = nn + len(self.h_nodes) + len(self.s_nodes)
        self._edofs = []
        self._elayout = []  # (corner, kind, gid) triples per element
        for s in range(self.mesh.n_elements):
            layout = []
            for c, i in enumerate(self.mesh.elements[s]):
                layout.append((c, "fe", int(i)))
            for c, i in enumerate(self.mesh.elements[s]):
                if int(i) in self._h_pos:
                    layout.append((c, "heaviside", nn + self._h_pos[int(i)]))
            for c, i in enumerate(self.mesh.elements[s]):
                if int(i) in self._s_pos:
                    layout.append(
                        (c, "s_half", nn + len(self.h_nodes) + self._s_pos[int(i)])
                    )
            self._elayout.append(layout)
            self._edofs.append(np.array([gid for _, _, gid in layout], dtype=int))

    def element_dofs(self, s):
        return self._edofs[s]

    def evaluate(self, s, ref_points, phys_points=None, need_grad=True):
        ref_points = np.atleast_2d(ref_points)
        if phys_points is None:
            phys_points = self.mesh.map_points(s, ref_points)
        hv, hg = self.hat.element_values(s, ref_points, need_grad=need_grad)
        layout = self._elayout[s]
        nq = len(ref_points)
        vals = np.empty((nq, len(layout)))
        grads = np.empty((nq, len(layout), 2)) if need_grad else None
        hvals = None
        sv = sg = None
        for j, (c, kind, _) in enumerate(layout):
            if kind == "fe":
                vals[:, j] = hv[:, c]
                if need_grad:
                    grads[:, j, :] = hg[:, c, :]
            elif kind == "heaviside":
                if hvals is None:
                    hvals = heaviside(phys_points)
                vals[:, j] = hv[:, c] * hvals
                if need_grad:
                    grads[:, j, :] = hg[:, c, :] * hvals[:, None]
            else:
                if sv is None:
                    sv, sg = polar_sin_mode(phys_points, 0.5, self.crack.tip)
                vals[:, j] = hv[:, c] * sv
                if need_grad:
                    grads[:, j, :] = hg[:, c, :] * sv[:, None] + hv[:, c, None] * sg
        return vals, grads

    def constant_vector(self):
        v = np.zeros(self.dof_count)
        v[: self.mesh.n_nodes] = 1.0
        return v

    def quadrature_profile(self):
        return QuadratureProfile(3)


def build_fem_space(mesh, k):
    return FemSpace(mesh, k)


def build_ftgfem_space(mesh, k, sigma=0.2, ft_l=1):
    return FlatTopGfemSpace(mesh, k, sigma, ft_l)


def build_sgfem_space(mesh, k, sigma=0.2, ft_l=1):
    return SgfemSpace(mesh, k, sigma, ft_l)


def build_cgfem_space(mesh, k=None, condensed_basis=None, cond_gate=1e12):
    if condensed_basis is None:
        condensed_basis = smooth_condensed_basis(mesh, k, cond_gate)
    return CondensedSpace(condensed_basis, method="cgfem", k=k)


def build_crack_gfem_space(crack_mesh):
    return CrackGfemSpace(crack_mesh)


def build_crack_cgfem_space(crack_mesh, condensed_basis=None, cond_gate=1e12):
    if condensed_basis is None:
        condensed_basis = crack_condensed_basis(crack_mesh, cond_gate)
    return CondensedSpace(condensed_basis, method="crack_cgfem", k=1)


def constant_null_vector(space):
    """Coefficients representing the constant function 1 (the Neumann
    stiffness null space), used for deflation."""
    return space.constant_vector()
