"""Covariant calculus: connections, curvature, gauge transforms, residuals.

Index conventions follow the Minkowski signature (-+++): raising a temporal
index flips its sign, spatial raising is the identity.  Temporal derivatives
of fields are never taken inside these operations; callers supply them as
separate velocity fields where an operation needs one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra as alg
from .errors import UnsupportedOrderError
from .lattice import (
    Grid,
    LatticeField,
    Rank,
    diff,
    diff_array,
    from_components,
    lp_norm,
    two_form_entry,
    zeros,
)


@dataclass
class Connection:
    """Spatial one-form A_i, plus A_0 when the context is spacetime."""

    spatial: LatticeField
    temporal: LatticeField | None = None

    def __post_init__(self):
        if self.spatial.rank != Rank.ONE_FORM:
            raise ValueError("spatial part must be a one-form")
        if self.temporal is not None and self.temporal.rank != Rank.SCALAR:
            raise ValueError("temporal part must be a scalar field")

    @property
    def grid(self) -> Grid:
        return self.spatial.grid

    def copy(self) -> "Connection":
        return Connection(
            self.spatial.copy(), None if self.temporal is None else self.temporal.copy()
        )


@dataclass
class GaugeTransform:
    """Group element per site, stored as unit quaternions of shape (n, n, n, 4)."""

    grid: Grid
    q: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        if self.q.shape != (n, n, n, 4):
            raise ValueError("gauge transform shape mismatch")

    @classmethod
    def identity(cls, grid: Grid) -> "GaugeTransform":
        q = np.zeros((grid.n, grid.n, grid.n, 4))
        q[..., 0] = 1.0
        return cls(grid, q)

    def inverse(self) -> "GaugeTransform":
        return GaugeTransform(self.grid, alg.group_inverse(self.q))

    def unit_error(self) -> float:
        return alg.unit_error(self.q)


def covariant_diff(conn: Connection, f: LatticeField, axis: int) -> LatticeField:
    """D_axis f = diff(f, axis) + [A_axis, f], axis in 1..3."""
    a_comp = conn.spatial.data[axis - 1]
    data = diff_array(f.data, axis, f.grid.h) + np.cross(a_comp[None], f.data)
    return LatticeField(f.grid, f.rank, data)


def covariant_time_derivative(conn: Connection, f: LatticeField, dt_f: LatticeField) -> LatticeField:
    """D_0 f from a caller-supplied velocity: dt_f + [A_0, f]."""
    if conn.temporal is None:
        return dt_f.copy()
    data = dt_f.data + np.cross(conn.temporal.data[0][None], f.data)
    return LatticeField(f.grid, f.rank, data)


def covariant_divergence(conn: Connection, f: LatticeField) -> LatticeField:
    """Scalar field sum_l D_l f_l of a spatial one-form."""
    if f.rank != Rank.ONE_FORM:
        raise ValueError("covariant divergence expects a one-form")
    h = f.grid.h
    acc = np.zeros_like(f.data[0])
    for axis in (1, 2, 3):
        comp = f.data[axis - 1]
        acc = acc + diff_array(comp[None], axis, h)[0] + np.cross(conn.spatial.data[axis - 1], comp)
    return LatticeField(f.grid, Rank.SCALAR, acc[None])


def covariant_laplacian(conn: Connection, f: LatticeField) -> LatticeField:
    """sum_l D_l D_l f (composed central differences)."""
    out = np.zeros_like(f.data)
    for axis in (1, 2, 3):
        out = out + covariant_diff(conn, covariant_diff(conn, f, axis), axis).data
    return LatticeField(f.grid, f.rank, out)


def curvature(conn: Connection, dt_spatial: LatticeField | None = None) -> LatticeField:
    """Curvature two-form from the componentwise formula.

    Spatial-only connections give the rank-2 spatial form.  When a temporal
    component is present the caller must supply the velocity field dt A_i;
    the result then carries the six spacetime components with F_{0i} first.
    """
    a = conn.spatial
    h = a.grid.h

    def f_ij(i, j):
        di_aj = diff_array(a.data[j - 1][None], i, h)[0]
        dj_ai = diff_array(a.data[i - 1][None], j, h)[0]
        return di_aj - dj_ai + np.cross(a.data[i - 1], a.data[j - 1])

    spatial_comps = [f_ij(i, j) for (i, j) in ((1, 2), (1, 3), (2, 3))]
    if conn.temporal is None:
        return from_components(a.grid, Rank.TWO_FORM, spatial_comps)
    if dt_spatial is None:
        raise ValueError("spacetime curvature needs the velocity field dt A_i")
    a0 = conn.temporal.data[0]
    electric = [
        dt_spatial.data[i - 1] - diff_array(a0[None], i, h)[0] + np.cross(a0, a.data[i - 1])
        for i in (1, 2, 3)
    ]
    return from_components(a.grid, Rank.SPACETIME_TWO_FORM, electric + spatial_comps)


def electric_part(f: LatticeField) -> LatticeField:
    """F_{0i} components of a spacetime two-form, as a one-form."""
    if f.rank != Rank.SPACETIME_TWO_FORM:
        raise ValueError("expected a spacetime two-form")
    return LatticeField(f.grid, Rank.ONE_FORM, f.data[:3].copy())


def magnetic_part(f: LatticeField) -> LatticeField:
    """F_{ij} components of a spacetime two-form, as a spatial two-form."""
    if f.rank != Rank.SPACETIME_TWO_FORM:
        raise ValueError("expected a spacetime two-form")
    return LatticeField(f.grid, Rank.TWO_FORM, f.data[3:].copy())


def adjoint_field(u: GaugeTransform, f: LatticeField) -> LatticeField:
    """Sitewise U f U^-1 on every component; exact isometry of |.|."""
    return LatticeField(f.grid, f.rank, alg.adjoint(u.q[None], f.data))


def gauge_gradient(u: GaugeTransform, axis: int) -> np.ndarray:
    """-(d_axis U) U^-1 projected onto the algebra, shape (n, n, n, 3).

    The central difference of the quaternion field leaves a small hermitian/
    trace component; the projection discards it so connections stay exactly
    algebra-valued.
    """
    du = (np.roll(u.q, -1, axis=axis - 1) - np.roll(u.q, 1, axis=axis - 1)) / (2.0 * u.grid.h)
    return -alg.algebra_part(alg.group_mul(du, alg.group_inverse(u.q)))


def apply_gauge(
    conn: Connection, u: GaugeTransform, dt_u: np.ndarray | None = None
) -> Connection:
    """A_mu -> U A_mu U^-1 - (d_mu U) U^-1.

    The adjoint term is exact; the gradient term uses central differences of
    U.  Transforming a temporal component needs the time derivative of U,
    supplied by the caller (typically from the gauge ODE it integrated).
    """
    new_spatial = []
    for axis in (1, 2, 3):
        rotated = alg.adjoint(u.q, conn.spatial.data[axis - 1])
        new_spatial.append(rotated + gauge_gradient(u, axis))
    spatial = from_components(conn.grid, Rank.ONE_FORM, new_spatial)
    temporal = None
    if conn.temporal is not None:
        if dt_u is None:
            raise ValueError("temporal transform needs dt_u")
        rotated = alg.adjoint(u.q, conn.temporal.data[0])
        grad0 = alg.algebra_part(alg.group_mul(dt_u, alg.group_inverse(u.q)))
        temporal = LatticeField(conn.grid, Rank.SCALAR, (rotated - grad0)[None])
    return Connection(spatial, temporal)


def bianchi_residual(conn: Connection, f: LatticeField) -> float:
    """Max over index triples of || D_mu F_{nu la} + cyclic ||_2.

    For stored spatial data the distinct triples all reduce to (1,2,3) up to
    sign, so the cyclic sum over that triple is the returned value.
    """
    if f.rank == Rank.SPACETIME_TWO_FORM:
        f = magnetic_part(f)
    terms = []
    for (a, b, c) in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        comp = LatticeField(f.grid, Rank.SCALAR, two_form_entry(f, b, c)[None])
        terms.append(covariant_diff(conn, comp, a))
    resid = terms[0] + terms[1] + terms[2]
    return lp_norm(resid, 2)


def tension_field(conn: Connection, f: LatticeField, dt_electric: LatticeField) -> LatticeField:
    """Yang-Mills tension w_nu = D^mu F_{nu mu} with (-+++) raising.

    dt_electric carries the caller's d_t F_{0i}; with it, w_i = D_0 F_{0i} +
    sum_l D_l F_{il} and w_0 is the covariant divergence of the electric
    field, i.e. the Gauss constraint.
    """
    if conn.temporal is None:
        raise ValueError("tension field needs temporal data")
    if f.rank != Rank.SPACETIME_TWO_FORM:
        raise ValueError("tension field expects a spacetime two-form")
    e = electric_part(f)
    w0 = covariant_divergence(conn, e).data[0]
    d0e = covariant_time_derivative(conn, e, dt_electric)
    w_spatial = []
    for i in (1, 2, 3):
        acc = d0e.data[i - 1].copy()
        for ell in (1, 2, 3):
            if ell == i:
                continue
            comp = LatticeField(f.grid, Rank.SCALAR, two_form_entry(f, i, ell)[None])
            acc += covariant_diff(conn, comp, ell).data[0]
        w_spatial.append(acc)
    return from_components(f.grid, Rank.SPACETIME_ONE_FORM, [w0] + w_spatial)


def null_form(phi: LatticeField, psi: LatticeField, j: int, k: int) -> LatticeField:
    """Q_{jk}(phi, psi) = [d_j phi, d_k psi] - [d_k phi, d_j psi] componentwise."""
    if j == k:
        raise ValueError("null form needs distinct derivative axes")
    dj_phi, dk_phi = diff(phi, j), diff(phi, k)
    dj_psi, dk_psi = diff(psi, j), diff(psi, k)
    data = np.cross(dj_phi.data, dk_psi.data) - np.cross(dk_phi.data, dj_psi.data)
    return LatticeField(phi.grid, phi.rank, data)


def substitute_derivatives(conn: Connection, f: LatticeField, axes, direction: str) -> LatticeField:
    """Reconstruct an iterated derivative through the other derivative's words.

    For ``cov_to_usual`` the operator product D_{a1} ... D_{ak} is expanded
    into all 2^k words over {d_a, ad_{A_a}} and re-summed; ``usual_to_cov``
    expands d_{a1} ... d_{ak} over {D_a, -ad_{A_a}}.  Every word uses the same
    discrete operators as the direct computation, so the reconstruction is
    algebraically exact (float reassociation only).  Orders above 3 are
    rejected.
    """
    axes = tuple(axes)
    if not 1 <= len(axes) <= 3:
        raise UnsupportedOrderError(f"supported orders are 1..3, got {len(axes)}")
    if direction not in ("cov_to_usual", "usual_to_cov"):
        raise ValueError("direction must be 'cov_to_usual' or 'usual_to_cov'")
    sign = 1.0 if direction == "cov_to_usual" else -1.0

    def expand(sub_axes):
        if not sub_axes:
            return [f]
        inner = expand(sub_axes[1:])
        axis = sub_axes[0]
        a_comp = conn.spatial.data[axis - 1]
        out = []
        for g in inner:
            if direction == "cov_to_usual":
                out.append(diff(g, axis))
            else:
                out.append(covariant_diff(conn, g, axis))
            out.append(LatticeField(f.grid, f.rank, sign * np.cross(a_comp[None], g.data)))
        return out

    words = expand(axes)
    total = words[0]
    for w in words[1:]:
        total = total + w
    return total


def iterated_covariant_diff(conn: Connection, f: LatticeField, axes) -> LatticeField:
    out = f
    for axis in reversed(tuple(axes)):
        out = covariant_diff(conn, out, axis)
    return out


def iterated_diff(f: LatticeField, axes) -> LatticeField:
    out = f
    for axis in reversed(tuple(axes)):
        out = diff(out, axis)
    return out


def zero_connection(grid: Grid, with_temporal: bool = False) -> Connection:
    temporal = zeros(grid, Rank.SCALAR) if with_temporal else None
    return Connection(zeros(grid, Rank.ONE_FORM), temporal)
