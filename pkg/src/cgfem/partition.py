"""Partition-of-unity evaluators: bilinear hats and flat-top functions.

Both families are evaluated element-wise: the caller names an element and
supplies reference coordinates, and gets values plus physical-space
gradients for the element's four corner nodes.  Points outside a node's
patch contribute exact zeros.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError
from .mesh import bilinear_derivs, bilinear_shapes


def _physical_grads(mesh, s, ref_points, ref_grads):
    """Push reference gradients (nq, m, 2) through the inverse Jacobian."""
    J = mesh.jacobians(s, ref_points)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    # Rows of inv(J): grad_x = inv(J)^T grad_xi.
    inv = np.empty_like(J)
    inv[:, 0, 0] = J[:, 1, 1] / det
    inv[:, 0, 1] = -J[:, 0, 1] / det
    inv[:, 1, 0] = -J[:, 1, 0] / det
    inv[:, 1, 1] = J[:, 0, 0] / det
    return np.einsum("qba,qmb->qma", inv, ref_grads)


class HatPU:
    """Standard bilinear hat functions N_i on a quadrilateral mesh."""

    def __init__(self, mesh):
        self.mesh = mesh

    def element_values(self, s, ref_points, need_grad=True):
        """Values (nq, 4) and physical gradients (nq, 4, 2) of the 4 corner hats."""
        ref_points = np.atleast_2d(ref_points)
        vals = bilinear_shapes(ref_points)
        if not need_grad:
            return vals, None
        grads = _physical_grads(self.mesh, s, ref_points, bilinear_derivs(ref_points))
        return vals, grads

    def eval(self, i, s, ref_points):
        """Value and gradient of N_i on element s; zeros if i is not a corner."""
        ref_points = np.atleast_2d(ref_points)
        quad = self.mesh.elements[s]
        vals, grads = self.element_values(s, ref_points)
        where = np.nonzero(quad == i)[0]
        if len(where) == 0:
            return np.zeros(len(ref_points)), np.zeros((len(ref_points), 2))
        c = int(where[0])
        return vals[:, c], grads[:, c]


def flat_top_1d(xi, sigma, ft_l):
    """One-dimensional flat-top pair on [-1, 1].

    Q_L is 1 on [-1, -1 + 2*sigma], a blended power on the middle interval,
    and 0 on [1 - 2*sigma, 1]; Q_R = 1 - Q_L.

    Returns (Q_L, Q_R, dQ_L/dxi, dQ_R/dxi) as arrays shaped like xi.
    """
    if not 0.0 <= sigma < 0.5:
        raise InvalidParameterError(f"sigma must be in [0, 0.5), got {sigma}")
    if ft_l < 1:
        raise InvalidParameterError(f"flat-top exponent must be >= 1, got {ft_l}")
    xi = np.asarray(xi, dtype=float)
    a = -1.0 + 2.0 * sigma
    b = 1.0 - 2.0 * sigma
    qL = np.empty_like(xi)
    dqL = np.zeros_like(xi)

    flat = xi <= a
    zero = xi >= b
    mid = ~(flat | zero)
    qL[flat] = 1.0
    qL[zero] = 0.0
    if np.any(mid):
        t = (xi[mid] + 1.0 - 2.0 * sigma) / (2.0 * (1.0 - 2.0 * sigma))
        inner = 1.0 - t**ft_l
        qL[mid] = inner**ft_l
        dqL[mid] = (
            -(ft_l**2)
            * inner ** (ft_l - 1)
            * t ** (ft_l - 1)
            / (2.0 * (1.0 - 2.0 * sigma))
        )
    return qL, 1.0 - qL, dqL, -dqL


# Corner c of the reference element uses (left/right) factors per axis.
_CORNER_IS_LEFT = ((True, True), (False, True), (False, False), (True, False))


class FlatTopPU:
    """Flat-top partition of unity Q_i^sigma built element-wise.

    On each element the four corner functions are tensor products of the 1D
    flat-top pair, composed with the element's inverse bilinear map.  Each
    Q_i equals 1 on the scaled central subregion of its patch.
    """

    def __init__(self, mesh, sigma=0.2, ft_l=1):
        if not 0.0 <= sigma < 0.5:
            raise InvalidParameterError(f"sigma must be in [0, 0.5), got {sigma}")
        if ft_l < 1:
            raise InvalidParameterError(f"flat-top exponent must be >= 1, got {ft_l}")
        self.mesh = mesh
        self.sigma = float(sigma)
        self.ft_l = int(ft_l)

    def element_values(self, s, ref_points, need_grad=True):
        """Values (nq, 4) and physical gradients (nq, 4, 2) of the 4 corner factors."""
        ref_points = np.atleast_2d(ref_points)
        qLx, qRx, dqLx, dqRx = flat_top_1d(ref_points[:, 0], self.sigma, self.ft_l)
        qLy, qRy, dqLy, dqRy = flat_top_1d(ref_points[:, 1], self.sigma, self.ft_l)
        fx = (qLx, qRx)
        fy = (qLy, qRy)
        dfx = (dqLx, dqRx)
        dfy = (dqLy, dqRy)
        vals = np.empty((len(ref_points), 4))
        ref_grads = np.empty((len(ref_points), 4, 2))
        for c, (left_x, left_y) in enumerate(_CORNER_IS_LEFT):
            ax, ay = (0 if left_x else 1), (0 if left_y else 1)
            vals[:, c] = fx[ax] * fy[ay]
            ref_grads[:, c, 0] = dfx[ax] * fy[ay]
            ref_grads[:, c, 1] = fx[ax] * dfy[ay]
        if not need_grad:
            return vals, None
        return vals, _physical_grads(self.mesh, s, ref_points, ref_grads)

    def eval(self, i, s, ref_points):
        """Value and gradient of Q_i^sigma on element s; zeros off the patch."""
        ref_points = np.atleast_2d(ref_points)
        quad = self.mesh.elements[s]
        vals, grads = self.element_values(s, ref_points)
        where = np.nonzero(quad == i)[0]
        if len(where) == 0:
            return np.zeros(len(ref_points)), np.zeros((len(ref_points), 2))
        c = int(where[0])
        return vals[:, c], grads[:, c]

    def eval_at_point(self, i, x):
        """Value of Q_i^sigma at a physical point (locates the element first)."""
        s = self.mesh.find_element(x)
        if i not in self.mesh.elements[s]:
            for cand in self.mesh.patch(i):
                xi = self.mesh.inverse_map(cand, x)
                if np.max(np.abs(xi)) <= 1.0 + 1e-9:
                    s = cand
                    break
            else:
                return 0.0
        xi = self.mesh.inverse_map(s, x)
        vals, _ = self.eval(i, s, xi.reshape(1, 2))
        return float(vals[0])
