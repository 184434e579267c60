"""Least-squares condensation: unisolvent node sets, Gram matrices, LS basis
functions, and the node-attached condensed shape functions.

For each node i with local space V_i and node set X_i, the LS fit through
nodal values yields dual functions

    xi_tilde_i^l(x) = Q_i(x)^T G_i^{-1} Q_i(x_l),   l in X_i,

with G_i the Gram matrix of basis values at X_i.  These reproduce every
member of V_i from its nodal values.  Pasting with the hat PU gives one
shape function psi_l per node, so the condensed space has exactly as many
degrees of freedom as the mesh has nodes.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import UnisolvenceError


def gram_from_values(values):
    """Gram matrix sum_l Q(x_l) Q(x_l)^T from a nodal value matrix (m, n)."""
    values = np.asarray(values, dtype=float)
    return values.T @ values


def initial_node_set(mesh, i, kind, k=None):
    """Starting unisolvent candidate set for node i.

    kind "polynomial": degree-1 uses the node plus its side-connected
    neighbors, degree-2 the patch nodes, degree >= 3 expands the patch
    k - 2 times through element adjacency.  kind "patch": the patch nodes.
    """
    if kind == "patch":
        return mesh.patch_nodes(i)
    if kind != "polynomial":
        raise ValueError(f"unknown node-set kind {kind!r}")
    if k == 1:
        return mesh.side_neighbors(i)
    ids = mesh.patch_nodes(i)
    for _ in range(k - 2):
        ids = mesh.expand_node_set(ids)
    return ids


class LocalFit:
    """LS data for one node: node set, Gram factorization, dual coefficients."""

    __slots__ = ("node", "space", "indices", "coeff", "gram", "gram_cond",
                 "expansion_depth")

    def __init__(self, node, space, indices, coeff, gram, gram_cond, depth):
        self.node = node
        self.space = space
        self.indices = indices
        self.coeff = coeff
        self.gram = gram
        self.gram_cond = gram_cond
        self.expansion_depth = depth


def _fit_node(mesh, i, space, start, cond_gate):
    indices = np.asarray(start, dtype=int)
    depth = 0
    while True:
        E = space.eval(mesh.nodes[indices])
        gram = gram_from_values(E)
        eigs = np.linalg.eigvalsh(gram)
        ok = (
            len(indices) >= space.dim
            and eigs[0] > 0.0
            and eigs[-1] <= cond_gate * eigs[0]
        )
        if ok:
            factor = cho_factor(gram)
            coeff = cho_solve(factor, E.T)
            cond = eigs[-1] / eigs[0]
            return LocalFit(i, space, indices, coeff, gram, cond, depth)
        grown = mesh.expand_node_set(indices)
        if len(grown) == len(indices):
            raise UnisolvenceError(
                f"node {i}: unisolvent-set expansion exhausted the mesh "
                f"(|X_i| = {len(indices)}, dim V_i = {space.dim})"
            )
        indices = grown
        depth += 1


class CondensedBasis:
    """Per-node LS fits plus the inverted adjacency L_l = {i : l in X_i}.

    Immutable after construction; evaluation methods are pure.
    """

    def __init__(self, mesh, spaces, set_kind, k=None, cond_gate=1e12):
        self.mesh = mesh
        self.cond_gate = float(cond_gate)
        self.fits = []
        for i in range(mesh.n_nodes):
            start = initial_node_set(mesh, i, set_kind, k)
            self.fits.append(_fit_node(mesh, i, spaces[i], start, cond_gate))
        adjacency = [[] for _ in range(mesh.n_nodes)]
        for i, fit in enumerate(self.fits):
            for l in fit.indices:
                adjacency[l].append(i)
        self.adjacency = [np.array(sorted(a), dtype=int) for a in adjacency]

    @property
    def overlap_cap(self):
        """Observed max |X_i| (bounded independently of h for fixed degree)."""
        return max(len(f.indices) for f in self.fits)

    def ls_values(self, i, points):
        """Values of all dual functions of node i at points, shape (nq, m_i)."""
        fit = self.fits[i]
        return fit.space.eval(points) @ fit.coeff

    def ls_values_and_grads(self, i, points):
        """Values (nq, m_i) and gradients (nq, m_i, 2) of node i's duals."""
        fit = self.fits[i]
        vals, grads = fit.space.eval_with_grad(points)
        return vals @ fit.coeff, np.einsum("qnd,nm->qmd", grads, fit.coeff)

    def ls_basis_eval(self, i, l, points):
        """Value and gradient of the single dual xi_tilde_i^l at points."""
        fit = self.fits[i]
        pos = np.searchsorted(fit.indices, l)
        if pos >= len(fit.indices) or fit.indices[pos] != l:
            raise KeyError(f"node {l} is not in the node set of node {i}")
        vals, grads = fit.space.eval_with_grad(points)
        col = fit.coeff[:, pos]
        return vals @ col, np.einsum("qnd,n->qd", grads, col)

    def shape_eval(self, hat_pu, l, s, ref_points):
        """Value and gradient of the condensed shape psi_l on element s.

        psi_l = sum over corner nodes i of element s with l in X_i of
        N_i * xi_tilde_i^l; the product rule supplies the gradient.
        """
        ref_points = np.atleast_2d(ref_points)
        mesh = self.mesh
        phys = mesh.map_points(s, ref_points)
        hv, hg = hat_pu.element_values(s, ref_points)
        vals = np.zeros(len(ref_points))
        grads = np.zeros((len(ref_points), 2))
        for c, i in enumerate(mesh.elements[s]):
            fit = self.fits[i]
            pos = np.searchsorted(fit.indices, l)
            if pos >= len(fit.indices) or fit.indices[pos] != l:
                continue
            xv, xg = self.ls_basis_eval(i, l, phys)
            vals += hv[:, c] * xv
            grads += hg[:, c, :] * xv[:, None] + hv[:, c, None] * xg
        return vals, grads

    def dump_diagnostics(self, f):
        """Per-node CSV: index, node-set size, expansion depth, Gram condition."""
        f.write("i,|X_i|,expansion_depth,cond(G_i)\n")
        for fit in self.fits:
            f.write(
                f"{fit.node},{len(fit.indices)},{fit.expansion_depth},"
                f"{fit.gram_cond:.6e}\n"
            )


def smooth_condensed_basis(mesh, k, cond_gate=1e12):
    """Condensed basis with degree-k scaled monomials at every node."""
    from .enrichment import MonomialSpace

    spaces = [
        MonomialSpace(k, mesh.nodes[i], mesh.h, node=i)
        for i in range(mesh.n_nodes)
    ]
    return CondensedBasis(mesh, spaces, "polynomial", k=k, cond_gate=cond_gate)


def crack_condensed_basis(crack_mesh, cond_gate=1e12):
    """Condensed basis for the slit domain: patch node sets, per-node spaces
    chosen by the tip/enrichment-region classification."""
    from .enrichment import local_space_for_node

    mesh = crack_mesh.base
    spaces = [
        local_space_for_node(i, "crack", crack_mesh=crack_mesh)
        for i in range(mesh.n_nodes)
    ]
    return CondensedBasis(mesh, spaces, "patch", cond_gate=cond_gate)
