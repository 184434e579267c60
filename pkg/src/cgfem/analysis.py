"""Manufactured problems, energy error, scaled condition numbers, and
convergence-slope estimation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .enrichment import polar_sin_mode
from .errors import DegenerateDataError, SolverError


@dataclass
class ProblemData:
    """Volume source, boundary flux, and exact solution of a model problem.

    f(points) -> (n,) or None when identically zero; g(points, normals)
    -> (n,); exact_u(points) -> (n,); exact_grad(points) -> (n, 2).
    """

    f: Optional[Callable]
    g: Callable
    exact_u: Callable
    exact_grad: Callable
    name: str


def smooth_problem():
    """Poisson problem on the unit square with exact solution e^(2 x1 + x2)."""

    def exact_u(points):
        points = np.atleast_2d(points)
        return np.exp(2.0 * points[:, 0] + points[:, 1])

    def exact_grad(points):
        u = exact_u(points)
        return np.column_stack([2.0 * u, u])

    def f(points):
        return -5.0 * exact_u(points)

    def g(points, normals):
        return np.einsum("qd,qd->q", exact_grad(points), normals)

    return ProblemData(f, g, exact_u, exact_grad, "smooth")


def crack_problem():
    """Slit-domain Poisson problem with the two-mode singular solution
    r^(1/2) sin(theta/2) + r^(3/2) sin(3 theta/2); both modes are harmonic,
    so the volume source vanishes and only the outer boundary carries flux."""

    def exact_u(points):
        v1, _ = polar_sin_mode(points, 0.5)
        v2, _ = polar_sin_mode(points, 1.5)
        return v1 + v2

    def exact_grad(points):
        v1, g1 = polar_sin_mode(points, 0.5)
        v2, g2 = polar_sin_mode(points, 1.5)
        return g1 + g2

    def g(points, normals):
        return np.einsum("qd,qd->q", exact_grad(points), normals)

    return ProblemData(None, g, exact_u, exact_grad, "crack")


def energy_error(space, coeffs, problem, rules):
    """Relative energy error: |u - u_h|_H1 / |u|_H1 over the given rules."""
    num = 0.0
    den = 0.0
    for rule in rules:
        _, grads = space.evaluate(rule.element, rule.ref_points, rule.phys_points)
        local = coeffs[space.element_dofs(rule.element)]
        uh_grad = np.einsum("qnd,n->qd", grads, local)
        du = problem.exact_grad(rule.phys_points)
        diff = du - uh_grad
        num += np.einsum("qd,qd,q->", diff, diff, rule.weights)
        den += np.einsum("qd,qd,q->", du, du, rule.weights)
    return np.sqrt(num / den)


def _scaled_matrix(A):
    d = A.diagonal()
    if np.any(d <= 0.0):
        raise SolverError("matrix diagonal must be strictly positive for SCN")
    inv = sp.diags(1.0 / np.sqrt(d))
    return (inv @ A @ inv).tocsr(), np.sqrt(d)


def _dense_extremes(B, z):
    Bd = np.asarray(B.todense())
    if z is None:
        eigs = np.linalg.eigvalsh(Bd)
        return eigs[0], eigs[-1]
    # Householder reflector sending z to a coordinate axis; the remaining
    # columns span the deflated complement exactly.
    v = z.copy()
    v[0] += np.copysign(1.0, z[0])
    H = np.eye(len(z)) - 2.0 * np.outer(v, v) / (v @ v)
    Q = H[:, 1:]
    eigs = np.linalg.eigvalsh(Q.T @ (Bd @ Q))
    return eigs[0], eigs[-1]


def _lanczos_extremes(B, z, tol):
    n = B.shape[0]
    lam_max = float(
        spla.eigsh(B, k=1, which="LA", tol=tol, return_eigenvectors=False)[0]
    )
    shift = 1e-6 * lam_max
    k = min(3 if z is not None else 1, n - 1)
    vals, vecs = spla.eigsh(B, k=k, sigma=-shift, which="LM", tol=tol)
    if z is None:
        return float(np.min(vals)), lam_max
    overlaps = np.abs(vecs.T @ z)
    keep = overlaps < 0.5
    if not np.any(keep):
        raise SolverError("all shift-invert Ritz vectors align with the null space")
    return float(np.min(vals[keep])), lam_max


def scaled_condition_number(A, null_vector=None, dense_limit=3000, method="auto",
                            tol=1e-6):
    """Condition number of the Jacobi-scaled operator over the complement of
    the known constant null vector.

    method "dense" (exact, oracle), "lanczos" (ARPACK: largest directly,
    smallest by shift-invert with the null direction identified and
    excluded), or "auto" (dense up to dense_limit rows).
    """
    B, ds = _scaled_matrix(A)
    z = None
    if null_vector is not None:
        z = null_vector * ds
        z = z / np.linalg.norm(z)
    if method == "auto":
        method = "dense" if A.shape[0] <= dense_limit else "lanczos"
    if method == "dense":
        lam_min, lam_max = _dense_extremes(B, z)
    elif method == "lanczos":
        try:
            lam_min, lam_max = _lanczos_extremes(B, z, tol)
        except spla.ArpackNoConvergence as exc:
            if A.shape[0] <= dense_limit:
                lam_min, lam_max = _dense_extremes(B, z)
            elif len(exc.eigenvalues):
                lam_min, lam_max = float(np.min(exc.eigenvalues)), float(
                    np.max(exc.eigenvalues)
                )
            else:
                raise SolverError("Lanczos iteration did not converge") from exc
    else:
        raise ValueError(f"unknown SCN method {method!r}")
    if lam_min <= 0.0:
        raise SolverError(
            f"deflated operator is not positive definite (lambda_min = {lam_min:g})"
        )
    return lam_max / lam_min


def convergence_slope(h_values, y_values, n_points=4):
    """Least-squares slope of log y against log h over the finest points."""
    h = np.asarray(h_values, dtype=float)
    y = np.asarray(y_values, dtype=float)
    if len(h) < 3 or len(np.unique(h)) < 3:
        raise ValueError("slope fit needs at least 3 distinct mesh sizes")
    if np.any(y <= 0.0):
        raise DegenerateDataError("exact")
    order = np.argsort(h)
    take = order[: min(n_points, len(h))]
    return float(np.polyfit(np.log(h[take]), np.log(y[take]), 1)[0])


def pairwise_slopes(h_values, y_values):
    """log-ratio slopes between consecutive refinements, finest pair first."""
    h = np.asarray(h_values, dtype=float)
    y = np.asarray(y_values, dtype=float)
    order = np.argsort(h)
    h, y = h[order], y[order]
    return np.array(
        [
            np.log(y[i + 1] / y[i]) / np.log(h[i + 1] / h[i])
            for i in range(len(h) - 1)
        ]
    )


def discrete_harmonicity_residual(space, problem, rules, edge_rules):
    """Max over test functions of | int grad(u).grad(phi) - bdry flux |.

    Zero (to quadrature accuracy) iff the exact solution is harmonic and
    the flux data is consistent, including slit traction-freeness.
    """
    r = np.zeros(space.dof_count)
    for rule in rules:
        _, grads = space.evaluate(rule.element, rule.ref_points, rule.phys_points)
        du = problem.exact_grad(rule.phys_points)
        r[space.element_dofs(rule.element)] += np.einsum(
            "qnd,qd,q->n", grads, du, rule.weights
        )
    for rule in edge_rules:
        gv = problem.g(rule.phys_points, rule.normals)
        vals, _ = space.evaluate(
            rule.element, rule.ref_points, rule.phys_points, need_grad=False
        )
        r[space.element_dofs(rule.element)] -= vals.T @ (rule.weights * gv)
    return float(np.max(np.abs(r)))
