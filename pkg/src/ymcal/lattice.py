"""Periodic 3-torus grid, algebra-valued fields, stencils and norms.

A field stores one su(2) coefficient triple per site and component in a
float64 array of shape ``(ncomp, n, n, n, 3)``.  Spatial axes are 1..3 (array
axes 1..3), so ``diff(f, axis=2)`` differentiates along the second spatial
direction.  All stencils wrap periodically via ``np.roll``; central
differences on a torus are exactly skew-adjoint, which several downstream
identity checks rely on.

Reductions use ``np.sum``'s pairwise tree, so every norm is bit-reproducible
regardless of how callers partition work.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import algebra as alg
from .errors import ProfileRangeError


class Rank(Enum):
    SCALAR = 0
    ONE_FORM = 1
    TWO_FORM = 2
    SPACETIME_ONE_FORM = 3
    SPACETIME_TWO_FORM = 4


N_COMPONENTS = {
    Rank.SCALAR: 1,
    Rank.ONE_FORM: 3,
    Rank.TWO_FORM: 3,
    Rank.SPACETIME_ONE_FORM: 4,
    Rank.SPACETIME_TWO_FORM: 6,
}

# Antisymmetric storage: only mu < nu kept, in this order.
TWO_FORM_PAIRS = {
    Rank.TWO_FORM: ((1, 2), (1, 3), (2, 3)),
    Rank.SPACETIME_TWO_FORM: ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)),
}


@dataclass(frozen=True)
class Grid:
    """n points per axis (power of two, >= 8), physical period length."""

    n: int
    length: float

    def __post_init__(self):
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 8, got {self.n}")
        if self.length <= 0:
            raise ValueError("period length must be positive")

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def volume_element(self) -> float:
        return self.h**3

    def coordinates(self):
        """Site coordinate arrays (x, y, z), each of shape (n, n, n)."""
        axes = [np.arange(self.n) * self.h for _ in range(3)]
        return np.meshgrid(*axes, indexing="ij")


@dataclass
class LatticeField:
    """Rank-indexed collection of algebra values on a grid.

    Treated as immutable by every operation in this package: functions return
    new fields and never write into an argument's ``data``.
    """

    grid: Grid
    rank: Rank
    data: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        expected = (N_COMPONENTS[self.rank], n, n, n, 3)
        if self.data.shape != expected:
            raise ValueError(f"field data shape {self.data.shape} != {expected}")

    def copy(self) -> "LatticeField":
        return LatticeField(self.grid, self.rank, self.data.copy())

    def __add__(self, other):
        return LatticeField(self.grid, self.rank, self.data + other.data)

    def __sub__(self, other):
        return LatticeField(self.grid, self.rank, self.data - other.data)

    def __mul__(self, scalar):
        return LatticeField(self.grid, self.rank, self.data * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return LatticeField(self.grid, self.rank, -self.data)


def zeros(grid: Grid, rank: Rank) -> LatticeField:
    n = grid.n
    return LatticeField(grid, rank, np.zeros((N_COMPONENTS[rank], n, n, n, 3)))


def from_components(grid: Grid, rank: Rank, components) -> LatticeField:
    """Stack per-component (n, n, n, 3) arrays into a field."""
    data = np.stack([np.asarray(c, dtype=float) for c in components], axis=0)
    return LatticeField(grid, rank, data)


def component_index(rank: Rank, mu: int, nu: int):
    """(storage index, sign) for the (mu, nu) entry of an antisymmetric field."""
    pairs = TWO_FORM_PAIRS[rank]
    if mu == nu:
        raise ValueError("two-form diagonal entries vanish identically")
    if (mu, nu) in pairs:
        return pairs.index((mu, nu)), 1.0
    return pairs.index((nu, mu)), -1.0


def two_form_entry(f: LatticeField, mu: int, nu: int) -> np.ndarray:
    """Data array of F_{mu nu} with the antisymmetric sign applied."""
    idx, sign = component_index(f.rank, mu, nu)
    return sign * f.data[idx]


# ---------------------------------------------------------------------------
# Stencils
# ---------------------------------------------------------------------------


def diff_array(data: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Second-order central difference along spatial axis 1..3, periodic."""
    return (np.roll(data, -1, axis=axis) - np.roll(data, 1, axis=axis)) / (2.0 * h)


def diff(f: LatticeField, axis: int) -> LatticeField:
    if axis not in (1, 2, 3):
        raise ValueError("axis must be one of 1..3")
    return LatticeField(f.grid, f.rank, diff_array(f.data, axis, f.grid.h))


def laplace_array(data: np.ndarray, h: float) -> np.ndarray:
    out = -6.0 * data
    for axis in (1, 2, 3):
        out = out + np.roll(data, -1, axis=axis) + np.roll(data, 1, axis=axis)
    return out / h**2


def laplace(f: LatticeField) -> LatticeField:
    """7-point stencil Laplacian."""
    return LatticeField(f.grid, f.rank, laplace_array(f.data, f.grid.h))


def grad(f: LatticeField) -> LatticeField:
    """Central-difference gradient of a scalar field, as a one-form."""
    if f.rank != Rank.SCALAR:
        raise ValueError("grad expects a scalar field")
    comps = [diff_array(f.data, axis, f.grid.h)[0] for axis in (1, 2, 3)]
    return from_components(f.grid, Rank.ONE_FORM, comps)


def curl(f: LatticeField) -> LatticeField:
    """Central-difference curl of a one-form; exactly divergence-free."""
    if f.rank != Rank.ONE_FORM:
        raise ValueError("curl expects a one-form")
    h = f.grid.h

    def d(comp, axis):
        return diff_array(f.data[comp][None], axis, h)[0]

    comps = [d(2, 2) - d(1, 3), d(0, 3) - d(2, 1), d(1, 1) - d(0, 2)]
    return from_components(f.grid, Rank.ONE_FORM, comps)


def divergence(f: LatticeField) -> LatticeField:
    """Central-difference divergence of a one-form, as a scalar field."""
    if f.rank != Rank.ONE_FORM:
        raise ValueError("divergence expects a one-form")
    h = f.grid.h
    acc = sum(diff_array(f.data[a - 1][None], a, h)[0] for a in (1, 2, 3))
    return LatticeField(f.grid, Rank.SCALAR, acc[None])


def translate(f: LatticeField, shifts) -> LatticeField:
    """Lattice translation by integer site shifts (exact, for symmetry tests)."""
    data = f.data
    for axis, k in zip((1, 2, 3), shifts):
        data = np.roll(data, k, axis=axis)
    return LatticeField(f.grid, f.rank, data)


# ---------------------------------------------------------------------------
# Spatial norms
# ---------------------------------------------------------------------------

LP_EXPONENTS = (1, 2, 3, 6, np.inf)


def lp_norm(f: LatticeField, p) -> float:
    """Discrete L^p norm; multi-component fields take the max over components."""
    mags = alg.norm(f.data)  # (ncomp, n, n, n)
    if p == np.inf or p == "inf":
        return float(np.max(mags)) if mags.size else 0.0
    p = float(p)
    per_comp = np.sum(mags**p, axis=(1, 2, 3)) * f.grid.volume_element
    return float(np.max(per_comp) ** (1.0 / p))


def sobolev_norm(f: LatticeField, m: int) -> float:
    """Homogeneous H^m seminorm: l2 combination over all ordered axis m-tuples."""
    if m < 0:
        raise ValueError("derivative order must be >= 0")
    if m == 0:
        return lp_norm(f, 2)
    total = 0.0
    stack = [(f, 0)]
    while stack:
        g, depth = stack.pop()
        if depth == m:
            total += lp_norm(g, 2) ** 2
            continue
        for axis in (1, 2, 3):
            stack.append((diff(g, axis), depth + 1))
    return float(np.sqrt(total))


# p-normalization exponents: ||phi(./lambda)||_X = lambda^{2 ell} ||phi||_X.
def lp_scaling_exponent(p) -> float:
    if p == np.inf or p == "inf":
        return 0.0
    return 1.5 / float(p)


def sobolev_scaling_exponent(m: int) -> float:
    return 0.75 - 0.5 * m


def pnormalized_lp(f: LatticeField, p, s: float) -> float:
    """L^p norm normalized by the power of s matching its scaling dimension."""
    return s ** (-lp_scaling_exponent(p)) * lp_norm(f, p)


def pnormalized_sobolev(f: LatticeField, m: int, s: float) -> float:
    return s ** (-sobolev_scaling_exponent(m)) * sobolev_norm(f, m)


# ---------------------------------------------------------------------------
# Norm profiles in the flow parameter
# ---------------------------------------------------------------------------


@dataclass
class NormProfile:
    """Nonnegative norm samples f(s) on a strictly increasing positive s-grid.

    ``values`` is (n_s,) for a single profile or (n_s, n_k) for one profile
    per derivative order.
    """

    s_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.s_grid = np.asarray(self.s_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.s_grid.ndim != 1 or np.any(self.s_grid <= 0) or np.any(np.diff(self.s_grid) <= 0):
            raise ValueError("s_grid must be strictly increasing and positive")
        if self.values.shape[0] != self.s_grid.shape[0]:
            raise ValueError("values must align with s_grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("profile values must be finite")


def geometric_s_grid(s_min: float, s_max: float, count: int) -> np.ndarray:
    """Geometric grid; the weights s^ell ds/s become uniform in log s."""
    return np.geomspace(s_min, s_max, count)


def pnorm_s(profile: NormProfile, ell: float, p, interval, k: int | None = None) -> float:
    """Flow-weighted norm ( integral_J (s^ell f)^p ds/s )^(1/p) on (s1, s2].

    Quadrature is trapezoidal in log s over the stored samples inside the
    interval; a lower endpoint below the first sample is treated as an open
    endpoint at 0 (the omitted tail is the caller's truncation).  p = inf
    takes the sup over samples.
    """
    s1, s2 = float(interval[0]), float(interval[1])
    if not s1 < s2:
        raise ProfileRangeError(f"empty interval ({s1}, {s2}]")
    vals = profile.values
    if vals.ndim == 2:
        if k is None:
            raise ValueError("profile has per-order values; pass k")
        vals = vals[:, k]
    s = profile.s_grid
    if s2 > s[-1] * (1.0 + 1e-9):
        raise ProfileRangeError(f"interval end {s2} beyond profile range {s[-1]}")
    mask = (s > s1 * (1.0 + 1e-12)) & (s <= s2 * (1.0 + 1e-12))
    if not np.any(mask):
        raise ProfileRangeError("no profile samples inside interval")
    ss = s[mask]
    ff = vals[mask]
    weighted = ss**ell * ff
    if p == np.inf or p == "inf":
        return float(np.max(weighted))
    p = float(p)
    if ss.size == 1:
        return 0.0
    u = np.log(ss)
    return float(np.trapezoid(weighted**p, u) ** (1.0 / p))


# ---------------------------------------------------------------------------
# Snapshot file format
# ---------------------------------------------------------------------------

SNAPSHOT_MAGIC = b"YMCF"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIII12x")  # magic, version, n, rank, ncomp, reserved


def save_field(path, f: LatticeField) -> None:
    """Write the 32-byte header plus little-endian f64 coefficients.

    Order on disk is site-major, component-minor, basis index innermost.
    """
    header = _HEADER.pack(
        SNAPSHOT_MAGIC, SNAPSHOT_VERSION, f.grid.n, f.rank.value, N_COMPONENTS[f.rank]
    )
    disk = np.ascontiguousarray(np.moveaxis(f.data, 0, 3), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(disk.tobytes())


def load_field(path, length: float) -> LatticeField:
    """Read a snapshot; the physical period length comes from the manifest."""
    with open(path, "rb") as fh:
        magic, version, n, rank_code, ncomp = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"bad snapshot magic {magic!r}")
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        rank = Rank(rank_code)
        if ncomp != N_COMPONENTS[rank]:
            raise ValueError("component count inconsistent with rank")
        payload = np.frombuffer(fh.read(), dtype="<f8")
    disk = payload.reshape(n, n, n, ncomp, 3)
    return LatticeField(Grid(n, length), rank, np.ascontiguousarray(np.moveaxis(disk, 3, 0)))
