"""Local approximation spaces: scaled monomials and crack-tip enrichments.

Every local space evaluates its ordered basis (values and gradients) at
arrays of physical points.  Monomials are centered at the owning node and
scaled by the mesh parameter h; crack enrichments use polar coordinates
with the slit tip as pole and the positive x1 axis as polar line, so the
branch cut of theta lies exactly along the slit.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError, SingularPointError


def monomial_exponents(k):
    """Multi-indices of total degree <= k, graded, x1-power descending."""
    return np.array(
        [(m - j, j) for m in range(k + 1) for j in range(m + 1)], dtype=int
    )


def polar_sin_mode(points, a, tip=(0.0, 0.0)):
    """Value and gradient of r^a sin(a*theta) about the tip.

    theta = atan2(x2, x1) in (-pi, pi], so the branch cut lies along the
    negative x1 axis (the slit).  The gradient is singular at the tip for
    a < 1; callers must keep evaluation points away from it.
    """
    points = np.atleast_2d(points)
    dx = points[:, 0] - tip[0]
    dy = points[:, 1] - tip[1]
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    vals = r**a * np.sin(a * theta)
    grads = np.empty((len(points), 2))
    if a < 1.0 and np.any(r == 0.0):
        raise SingularPointError("gradient of r^a sin(a theta) requested at the tip")
    with np.errstate(divide="ignore", invalid="ignore"):
        ra1 = np.where(r > 0.0, r ** (a - 1.0), 0.0)
    grads[:, 0] = a * ra1 * np.sin((a - 1.0) * theta)
    grads[:, 1] = a * ra1 * np.cos((a - 1.0) * theta)
    return vals, grads


def s_half(points, tip=(0.0, 0.0)):
    """Values of the mode-1/2 singular function sqrt(r) sin(theta/2)."""
    points = np.atleast_2d(points)
    dx = points[:, 0] - tip[0]
    dy = points[:, 1] - tip[1]
    r = np.hypot(dx, dy)
    return np.sqrt(r) * np.sin(0.5 * np.arctan2(dy, dx))


def heaviside(points):
    """+1 where x2 >= 0, -1 where x2 < 0 (gradient zero off the slit)."""
    points = np.atleast_2d(points)
    return np.where(points[:, 1] >= 0.0, 1.0, -1.0)


class MonomialSpace:
    """Scaled monomial basis ((x - center) / h)^alpha, |alpha| <= k.

    Ordering is graded lexicographic with the x1 power descending within
    each degree: 1, t1, t2, t1^2, t1 t2, t2^2, ...
    """

    def __init__(self, k, center, h, node=-1):
        if k < 1:
            raise InvalidParameterError(f"polynomial degree must be >= 1, got {k}")
        if k > 3:
            raise InvalidParameterError(f"polynomial degree must be <= 3, got {k}")
        self.k = int(k)
        self.center = np.asarray(center, dtype=float)
        self.h = float(h)
        self.node = node
        self.exponents = monomial_exponents(k)
        self.dim = len(self.exponents)
        self.labels = [f"P^({a},{b})" for a, b in self.exponents]

    def eval(self, points):
        t = (np.atleast_2d(points) - self.center) / self.h
        return np.prod(t[:, None, :] ** self.exponents[None, :, :], axis=2)

    def eval_with_grad(self, points):
        points = np.atleast_2d(points)
        t = (points - self.center) / self.h
        e = self.exponents
        pow0 = t[:, None, 0] ** e[None, :, 0]
        pow1 = t[:, None, 1] ** e[None, :, 1]
        vals = pow0 * pow1
        # a * t^(a-1) with the a = 0 case forced to zero (avoids 0^-1).
        d0 = e[None, :, 0] * t[:, None, 0] ** np.maximum(e[None, :, 0] - 1, 0)
        d1 = e[None, :, 1] * t[:, None, 1] ** np.maximum(e[None, :, 1] - 1, 0)
        grads = np.empty((len(points), self.dim, 2))
        grads[:, :, 0] = d0 * pow1 / self.h
        grads[:, :, 1] = pow0 * d1 / self.h
        return vals, grads


class CrackNodeSpace:
    """Degree-1 monomials, optionally augmented with singular enrichments.

    kind is one of "plain" (3 functions), "tip" (+ sqrt(r) sin(theta/2)),
    or "tip_tangential" (additionally the singular function times the
    scaled tangential coordinate).
    """

    def __init__(self, kind, center, h, tip=(0.0, 0.0), node=-1):
        if kind not in ("plain", "tip", "tip_tangential"):
            raise InvalidParameterError(f"unknown crack space kind {kind!r}")
        self.kind = kind
        self.center = np.asarray(center, dtype=float)
        self.h = float(h)
        self.tip = np.asarray(tip, dtype=float)
        self.node = node
        self.poly = MonomialSpace(1, center, h, node=node)
        self.dim = {"plain": 3, "tip": 4, "tip_tangential": 5}[kind]
        self.labels = list(self.poly.labels)
        if self.dim >= 4:
            self.labels.append("S_half")
        if self.dim >= 5:
            self.labels.append("S_half*t1")

    def eval(self, points):
        points = np.atleast_2d(points)
        vals = np.empty((len(points), self.dim))
        vals[:, :3] = self.poly.eval(points)
        if self.dim >= 4:
            s = s_half(points, self.tip)
            vals[:, 3] = s
        if self.dim >= 5:
            vals[:, 4] = s * (points[:, 0] - self.center[0]) / self.h
        return vals

    def eval_with_grad(self, points):
        points = np.atleast_2d(points)
        vals = np.empty((len(points), self.dim))
        grads = np.empty((len(points), self.dim, 2))
        pv, pg = self.poly.eval_with_grad(points)
        vals[:, :3] = pv
        grads[:, :3] = pg
        if self.dim >= 4:
            s, sg = polar_sin_mode(points, 0.5, self.tip)
            vals[:, 3] = s
            grads[:, 3] = sg
        if self.dim >= 5:
            t1 = (points[:, 0] - self.center[0]) / self.h
            vals[:, 4] = s * t1
            grads[:, 4, 0] = sg[:, 0] * t1 + s / self.h
            grads[:, 4, 1] = sg[:, 1] * t1
        return vals, grads


def crack_enrichment_eval(kind, points, center, h, tip=(0.0, 0.0)):
    """Value and gradient of a single crack enrichment function.

    kind: "s_half", "s_half_tangential", or "heaviside".
    """
    points = np.atleast_2d(points)
    if kind == "s_half":
        return polar_sin_mode(points, 0.5, tip)
    if kind == "s_half_tangential":
        s, sg = polar_sin_mode(points, 0.5, tip)
        t1 = (points[:, 0] - center[0]) / h
        grads = np.empty((len(points), 2))
        grads[:, 0] = sg[:, 0] * t1 + s / h
        grads[:, 1] = sg[:, 1] * t1
        return s * t1, grads
    if kind == "heaviside":
        return heaviside(points), np.zeros((len(points), 2))
    raise InvalidParameterError(f"unknown enrichment kind {kind!r}")


def monomial_basis(k, center, h, node=-1):
    """Scaled monomial local space of degree k at the given node center."""
    return MonomialSpace(k, center, h, node=node)


def local_space_for_node(i, problem, mesh=None, k=None, crack_mesh=None):
    """Local approximation space for node i.

    problem is "smooth" (requires mesh and k: monomials of degree k) or
    "crack" (requires crack_mesh: degree-1 monomials plus singular
    enrichments chosen by the node's index-set classification).
    """
    if problem == "smooth":
        return MonomialSpace(k, mesh.nodes[i], mesh.h, node=i)
    if problem != "crack":
        raise InvalidParameterError(f"unknown problem kind {problem!r}")
    cm = crack_mesh
    in_set1 = i in cm.index_set_1
    in_set2 = i in cm.index_set_2
    if i in cm.tip_nodes and not in_set1:
        raise AssertionError(f"node {i} is in the tip element but not in I_h1")
    if in_set1:
        kind = "tip_tangential"
    elif in_set2:
        kind = "tip"
    else:
        kind = "plain"
    return CrackNodeSpace(kind, cm.base.nodes[i], cm.h, tip=cm.tip, node=i)
