"""Exact su(2)/SU(2) kernel.

Conventions
-----------
Algebra values are coefficient triples ``a = (a1, a2, a3)`` in the basis
``tau_k = -(i/2) sigma_k`` (sigma_k the Pauli matrices), stored in the last
axis of a float64 array.  In this basis

* ``[tau_i, tau_j] = eps_ijk tau_k``  -> the bracket is the cross product,
* ``(A, B) = Re tr(A B^dagger) = (1/2) a . b``  -> bi-invariant inner product.

Group values are unit quaternions ``q = (w, x, y, z)`` in the last axis,
identified with ``U = w I - i (x sigma_1 + y sigma_2 + z sigma_3)``; the
Hamilton product then matches 2x2 matrix multiplication, and conjugation
``U A U^-1`` acts on algebra coefficients as the quaternion rotation.

All functions broadcast over leading axes, so a lattice of values is just an
array of shape ``(..., 3)`` or ``(..., 4)``.
"""

from __future__ import annotations

import numpy as np

# Basis coefficient vectors for tau_1, tau_2, tau_3.
TAU = np.eye(3)

# Quaternion identity element.
GROUP_IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

# Drift-control contract: renormalize group values to unit length after at
# most this many consecutive quaternion multiplications.
RENORM_EVERY_MULTS = 16


def bracket(a, b):
    """Lie bracket [a, b]; equals the coefficient cross product."""
    return np.cross(a, b)


def inner(a, b):
    """Bi-invariant inner product Re tr(a b^dagger) = (1/2) sum_k a_k b_k."""
    return 0.5 * np.sum(a * b, axis=-1)


def norm(a):
    """Pointwise algebra norm |a| = sqrt((a, a))."""
    return np.sqrt(inner(a, a))


def exp_map(a):
    """Exponential exp(a) as a unit quaternion, via the axis-angle formula.

    For ``a = theta * n`` (coefficient 2-norm theta, unit axis n) this is
    ``(cos(theta/2), sin(theta/2) n)``; the sin(theta/2)/theta factor is
    evaluated through sinc so theta -> 0 is exact.
    """
    a = np.asarray(a, dtype=float)
    theta = np.linalg.norm(a, axis=-1, keepdims=True)
    w = np.cos(0.5 * theta)
    # sin(theta/2)/theta, safe at 0:  0.5 * sinc(theta / (2 pi))
    v = a * (0.5 * np.sinc(theta / (2.0 * np.pi)))
    return np.concatenate([w, v], axis=-1)


def group_mul(p, q):
    """Hamilton product of quaternions (broadcasting; inputs need not be unit)."""
    pw, px, py, pz = p[..., 0], p[..., 1], p[..., 2], p[..., 3]
    qw, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def group_inverse(q):
    """Inverse of a unit quaternion (conjugation)."""
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def renormalize(q):
    """Project back to unit quaternions; |result| = 1 to machine precision."""
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def unit_error(q):
    """Largest deviation of |q| from 1 over all stored group values."""
    return float(np.max(np.abs(np.linalg.norm(q, axis=-1) - 1.0)))


def adjoint(u, a):
    """Adjoint action u a u^-1 on algebra coefficients.

    This is the quaternion rotation of the coefficient vector, an exact
    isometry of the inner product (no matrix arithmetic, no drift into the
    hermitian/trace directions).
    """
    w = u[..., :1]
    v = u[..., 1:]
    va = np.sum(v * a, axis=-1, keepdims=True)
    return (w * w - np.sum(v * v, axis=-1, keepdims=True)) * a + 2.0 * va * v + 2.0 * w * np.cross(v, a)


def algebra_part(p):
    """su(2) projection of an arbitrary quaternion: keep 2x the vector part.

    A quaternion ``(w, v)`` corresponds to ``w I + v . (-i sigma) = w I + 2 v . tau``;
    discarding ``w`` removes exactly the hermitian/trace drift produced by
    finite differencing group values.
    """
    return 2.0 * p[..., 1:]
