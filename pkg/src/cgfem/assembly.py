"""Quadrature generation, Poisson stiffness/load assembly, and the
null-space-aware conjugate-gradient solve.

Element rules are tensor Gauss-Legendre rules over reference subcells.
Subcells come from three sources: flat-top breakpoints (so the piecewise
PU polynomials are integrated exactly per piece), an exact split of
slit-cut elements at x2 = 0, and recursive dyadic grading toward the slit
tip on the tip element and its 8 neighbors, which resolves the r^-1
energy density of the singular enrichment geometrically.  No quadrature
point ever lies on the slit or at the tip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from .errors import SolverError

TIP_DEPTH_ASSEMBLY = 8
TIP_DEPTH_ERROR = 12

_MIN_CELL_AREA = 1e-16


@dataclass
class ElementRule:
    """Quadrature rule scoped to one element (reference + physical data)."""

    element: int
    ref_points: np.ndarray
    phys_points: np.ndarray
    weights: np.ndarray
    n_cells: int
    max_depth: int
    dropped_cells: int = 0


@dataclass
class EdgeRule:
    """1D quadrature along a boundary edge, with outward unit normals."""

    element: int
    edge: int
    ref_points: np.ndarray
    phys_points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray


def _axis_segments(breakpoints):
    pts = [-1.0] + [b for b in sorted(breakpoints) if -1.0 < b < 1.0] + [1.0]
    return [(pts[i], pts[i + 1]) for i in range(len(pts) - 1) if pts[i + 1] > pts[i]]


def _base_cells(profile):
    segs = _axis_segments(profile.ref_breakpoints)
    return [(x0, x1, y0, y1) for (x0, x1) in segs for (y0, y1) in segs]


def _element_box(mesh, s):
    corners = mesh.element_corners(s)
    return (
        corners[:, 0].min(),
        corners[:, 0].max(),
        corners[:, 1].min(),
        corners[:, 1].max(),
    )


def _split_cell_at(cell, axis, value):
    x0, x1, y0, y1 = cell
    if axis == 1:
        return [(x0, x1, y0, value), (x0, x1, value, y1)]
    return [(x0, value, y0, y1), (value, x1, y0, y1)]


def _graded_cells(box, cells, depth):
    """Dyadic grading of reference cells toward the origin.

    box maps reference to physical coordinates affinely (crack meshes are
    uniform).  A cell is quadrisected while its physical distance to the
    tip is smaller than its diameter; leaf cells straddling the slit are
    split at x2 = 0 so integrands stay one-sided.
    """
    bx0, bx1, by0, by1 = box

    def to_phys_x(xi):
        return bx0 + 0.5 * (xi + 1.0) * (bx1 - bx0)

    def to_phys_y(eta):
        return by0 + 0.5 * (eta + 1.0) * (by1 - by0)

    eta_cut = None
    if by0 < 0.0 < by1:
        eta_cut = -1.0 + 2.0 * (0.0 - by0) / (by1 - by0)

    out = []
    stack = [(c, 0) for c in cells]
    while stack:
        (x0, x1, y0, y1), lev = stack.pop()
        px0, px1 = to_phys_x(x0), to_phys_x(x1)
        py0, py1 = to_phys_y(y0), to_phys_y(y1)
        dist = np.hypot(max(px0, -px1, 0.0), max(py0, -py1, 0.0))
        diam = np.hypot(px1 - px0, py1 - py0)
        if lev < depth and dist < diam:
            xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            for child in (
                (x0, xm, y0, ym),
                (xm, x1, y0, ym),
                (x0, xm, ym, y1),
                (xm, x1, ym, y1),
            ):
                stack.append((child, lev + 1))
        elif eta_cut is not None and y0 < eta_cut < y1 and px0 < 0.0:
            out.append(((x0, x1, y0, eta_cut), lev))
            out.append(((x0, x1, eta_cut, y1), lev))
        else:
            out.append(((x0, x1, y0, y1), lev))
    return out


def element_quadrature(mesh, s, profile, crack=None, purpose="assembly",
                       tip_depth=None):
    """Quadrature rule for element s.

    purpose "assembly" uses the profile's point count and tip depth 8;
    "error" adds one Gauss point per axis and deepens tip grading to 12.
    """
    q = profile.points_per_axis + (1 if purpose == "error" else 0)
    if tip_depth is None:
        tip_depth = TIP_DEPTH_ERROR if purpose == "error" else TIP_DEPTH_ASSEMBLY
    cells = [(c, 0) for c in _base_cells(profile)]

    if crack is not None:
        box = _element_box(mesh, s)
        if s in crack.tip_block:
            cells = _graded_cells(box, [c for c, _ in cells], tip_depth)
        elif s in crack.cut_elements:
            bx0, bx1, by0, by1 = box
            eta_cut = -1.0 + 2.0 * (0.0 - by0) / (by1 - by0)
            cells = [
                (half, 0)
                for c, _ in cells
                for half in _split_cell_at(c, 1, eta_cut)
            ]

    gx, gw = leggauss(q)
    ref_chunks, wref_chunks = [], []
    dropped = 0
    max_depth = 0
    for (x0, x1, y0, y1), lev in cells:
        area4 = (x1 - x0) * (y1 - y0) / 4.0
        if area4 <= _MIN_CELL_AREA:
            dropped += 1
            continue
        max_depth = max(max_depth, lev)
        xs = x0 + 0.5 * (gx + 1.0) * (x1 - x0)
        ys = y0 + 0.5 * (gx + 1.0) * (y1 - y0)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        W = np.outer(gw, gw) * area4
        ref_chunks.append(np.column_stack([X.ravel(), Y.ravel()]))
        wref_chunks.append(W.ravel())
    ref_points = np.vstack(ref_chunks)
    wref = np.concatenate(wref_chunks)

    J = mesh.jacobians(s, ref_points)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    phys = mesh.map_points(s, ref_points)
    return ElementRule(
        element=s,
        ref_points=ref_points,
        phys_points=phys,
        weights=wref * det,
        n_cells=len(cells) - dropped,
        max_depth=max_depth,
        dropped_cells=dropped,
    )


def assembly_rules(mesh, profile, crack=None, purpose="assembly", tip_depth=None):
    """Element rules for the whole mesh, in element order."""
    return [
        element_quadrature(mesh, s, profile, crack, purpose, tip_depth)
        for s in range(mesh.n_elements)
    ]


def boundary_edge_rules(mesh, q, breakpoints=(), crack=None):
    """1D Gauss rules on every boundary edge.

    Edges are split at the reference breakpoints of piecewise-polynomial
    PU factors (the breakpoint set is symmetric, so orientation along the
    edge does not matter) and where the slit meets the boundary, so flux
    integrands stay piecewise smooth and one-sided.
    """
    from .mesh import EDGE_CORNERS, REF_CORNERS

    gx, gw = leggauss(q)
    rules = []
    for s, e in mesh.boundary_edges():
        ca, cb = EDGE_CORNERS[e]
        ra, rb = REF_CORNERS[ca], REF_CORNERS[cb]
        pa, pb = mesh.nodes[mesh.elements[s][ca]], mesh.nodes[mesh.elements[s][cb]]
        cuts = set(b for b in breakpoints if -1.0 < b < 1.0)
        if crack is not None and min(pa[0], pb[0]) <= 0.0:
            ya, yb = pa[1], pb[1]
            if ya * yb < 0.0:
                cuts.add(-1.0 + 2.0 * (0.0 - ya) / (yb - ya))
        knots = [-1.0] + sorted(cuts) + [1.0]
        segments = [
            (knots[i], knots[i + 1])
            for i in range(len(knots) - 1)
            if knots[i + 1] > knots[i]
        ]
        center = mesh.map_points(s, np.zeros((1, 2)))[0]
        for t0, t1 in segments:
            ts = t0 + 0.5 * (gx + 1.0) * (t1 - t0)
            ref = ra[None, :] + 0.5 * (ts[:, None] + 1.0) * (rb - ra)[None, :]
            phys = mesh.map_points(s, ref)
            J = mesh.jacobians(s, ref)
            dref = 0.5 * (rb - ra)
            tang = J @ dref
            tlen = np.hypot(tang[:, 0], tang[:, 1])
            normals = np.column_stack([tang[:, 1], -tang[:, 0]]) / tlen[:, None]
            # Orient outward (away from the element center).
            flip = np.einsum("qd,qd->q", normals, phys - center) < 0.0
            normals[flip] *= -1.0
            weights = gw * 0.5 * (t1 - t0) * tlen
            rules.append(EdgeRule(s, e, ref, phys, weights, normals))
    return rules


def assemble_stiffness(space, rules):
    """Sparse symmetric stiffness matrix of the H^1 seminorm bilinear form."""
    rows, cols, data = [], [], []
    n = space.dof_count
    for rule in rules:
        s = rule.element
        dofs = space.element_dofs(s)
        _, grads = space.evaluate(s, rule.ref_points, rule.phys_points)
        if not np.all(np.isfinite(grads)):
            raise FloatingPointError(
                f"non-finite shape gradient during assembly of element {s}"
            )
        local = np.einsum("qmd,qnd,q->mn", grads, grads, rule.weights)
        r, c = np.meshgrid(dofs, dofs, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        data.append(local.ravel())
    A = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    return (A + A.T) * 0.5


def assemble_load(space, problem, rules, edge_rules):
    """Load vector: volume source plus Neumann boundary flux."""
    b = np.zeros(space.dof_count)
    if problem.f is not None:
        for rule in rules:
            fv = problem.f(rule.phys_points)
            if np.any(fv):
                vals, _ = space.evaluate(
                    rule.element, rule.ref_points, rule.phys_points, need_grad=False
                )
                b[space.element_dofs(rule.element)] += vals.T @ (rule.weights * fv)
    for rule in edge_rules:
        gv = problem.g(rule.phys_points, rule.normals)
        vals, _ = space.evaluate(
            rule.element, rule.ref_points, rule.phys_points, need_grad=False
        )
        b[space.element_dofs(rule.element)] += vals.T @ (rule.weights * gv)
    return b


def solve_neumann(A, b, null_vector, tol=1e-12, maxiter=None):
    """Deflated, Jacobi-scaled conjugate gradients for the singular
    pure-Neumann system.

    Iterates and residuals are kept orthogonal to the known constant null
    vector; the returned coefficients satisfy <x, null_vector> = 0.
    """
    n = A.shape[0]
    if maxiter is None:
        maxiter = 20 * n
    d = A.diagonal()
    if np.any(d <= 0.0):
        raise SolverError("stiffness diagonal must be strictly positive")
    ds = np.sqrt(d)
    D = sp.diags(1.0 / ds)
    At = (D @ A @ D).tocsr()
    bt = b / ds
    zt = null_vector * ds
    zt = zt / np.linalg.norm(zt)

    def project(v):
        return v - zt * (zt @ v)

    bt = project(bt)
    bnorm = np.linalg.norm(bt)
    x = np.zeros(n)
    if bnorm == 0.0:
        return x
    r = bt.copy()
    p = r.copy()
    rs = r @ r
    for _ in range(maxiter):
        Ap = project(At @ p)
        alpha = rs / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        r = project(r)
        rs_new = r @ r
        if np.sqrt(rs_new) <= tol * bnorm:
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    else:
        raise SolverError(
            "deflated CG did not converge",
            residual=np.sqrt(rs) / bnorm,
        )
    x = x / ds
    x -= null_vector * (null_vector @ x) / (null_vector @ null_vector)
    return x


def export_matrix(A, f):
    """Coordinate-format text dump: header "dim nnz", then "row col value"."""
    coo = A.tocoo()
    f.write(f"{A.shape[0]} {coo.nnz}\n")
    for r, c, v in zip(coo.row, coo.col, coo.data):
        f.write(f"{r} {c} {v!r}\n")
