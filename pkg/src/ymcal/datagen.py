"""Deterministic test-data generators.

Every generator is a pure function of (grid, spec); the seed fully determines
the field, and the random draws are made per mode in a fixed order that does
not depend on the grid size, so the same seed produces samples of the same
continuum field at every resolution.  Fields are either globally band-limited
or concentrated in the middle third of the period, matching the torus
conventions the identity checks rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import algebra as alg
from . import spectral
from .errors import SupportOverflowError
from .gauge import Connection, GaugeTransform, apply_gauge, covariant_divergence, zero_connection
from .lattice import Grid, LatticeField, Rank, curl, from_components, grad, lp_norm, zeros

GENERATOR_KINDS = ("abelian-wave", "bump", "random-bandlimited", "pure-gauge")


@dataclass
class GeneratorSpec:
    kind: str = "random-bandlimited"
    amplitude: float = 0.1
    seed: int = 0
    constrained: bool = True
    k_max: int = 1
    # bump support radius as a fraction of the period (middle third: <= 1/6)
    support_fraction: float = 1.0 / 7.0

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator {self.kind!r}")


def _half_space_modes(k_max: int):
    """Nonzero integer modes with a positive leading component, fixed order."""
    modes = []
    for kx in range(-k_max, k_max + 1):
        for ky in range(-k_max, k_max + 1):
            for kz in range(-k_max, k_max + 1):
                k = (kx, ky, kz)
                if k == (0, 0, 0):
                    continue
                lead = next(v for v in k if v != 0)
                if lead > 0:
                    modes.append(k)
    return modes


def random_bandlimited(grid: Grid, rank: Rank, amplitude: float, rng, k_max: int = 1) -> LatticeField:
    """Random band-limited field; values scale linearly with amplitude."""
    f = zeros(grid, rank)
    nchan = f.data.shape[0]
    x, y, z = grid.coordinates()
    modes = _half_space_modes(k_max)
    scale = amplitude / np.sqrt(len(modes))
    for k in modes:
        # draws in fixed (mode, channel, basis) order for any grid size
        a = rng.standard_normal((nchan, 3))
        b = rng.standard_normal((nchan, 3))
        arg = 2.0 * np.pi * (k[0] * x + k[1] * y + k[2] * z) / grid.length
        cos_w, sin_w = np.cos(arg), np.sin(arg)
        f.data += scale * (
            a[:, None, None, None, :] * cos_w[None, ..., None]
            + b[:, None, None, None, :] * sin_w[None, ..., None]
        )
    return f


def mollifier_envelope(grid: Grid, radius: float, center=None) -> np.ndarray:
    """Smooth compactly supported bump exp(1 - 1/(1 - (r/R)^2)) on (n, n, n)."""
    if center is None:
        center = (0.5 * grid.length,) * 3
    coords = grid.coordinates()
    r2 = np.zeros_like(coords[0])
    for c, x in zip(center, coords):
        d = np.abs(x - c)
        d = np.minimum(d, grid.length - d)
        r2 += d * d
    u = r2 / radius**2
    env = np.zeros_like(r2)
    inside = u < 1.0
    env[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside]))
    return env


def bump_field(grid: Grid, rank: Rank, amplitude: float, rng, support_fraction: float) -> LatticeField:
    """Compactly supported smooth data in the middle third of the period."""
    radius = support_fraction * grid.length
    if radius > grid.length / 6.0 + 1e-12:
        raise SupportOverflowError("bump support exceeds the middle third")
    env = mollifier_envelope(grid, radius)
    f = zeros(grid, rank)
    nchan = f.data.shape[0]
    directions = rng.standard_normal((nchan, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    # low-order polynomial modulation keeps components independent but smooth
    x, y, z = grid.coordinates()
    phases = rng.uniform(0, 2 * np.pi, size=nchan)
    for c in range(nchan):
        wave = 1.0 + 0.5 * np.sin(2.0 * np.pi * (x + y - z) / grid.length + phases[c])
        f.data[c] = amplitude * (env * wave)[..., None] * directions[c]
    return f


def abelian_wave(grid: Grid, rank: Rank, amplitude: float, rng, k_max: int = 1) -> LatticeField:
    """Band-limited data along the tau_3 direction only (Maxwell sector)."""
    f = random_bandlimited(grid, rank, amplitude, rng, k_max)
    f.data[..., 0] = 0.0
    f.data[..., 1] = 0.0
    return f


def transverse_abelian_wave(grid: Grid, amplitude: float, k: int = 1, axis: int = 2) -> LatticeField:
    """Divergence-free single-mode abelian one-form: A_1 = amp sin(2 pi k x_axis / L) tau_3."""
    f = zeros(grid, Rank.ONE_FORM)
    coord = grid.coordinates()[axis - 1]
    f.data[0, ..., 2] = amplitude * np.sin(2.0 * np.pi * k * coord / grid.length)
    return f


def smooth_gauge_transform(grid: Grid, amplitude: float, rng, k_max: int = 1) -> GaugeTransform:
    """exp of a random band-limited algebra field."""
    chi = random_bandlimited(grid, Rank.SCALAR, amplitude, rng, k_max)
    return GaugeTransform(grid, alg.exp_map(chi.data[0]))


def pure_gauge_connection(grid: Grid, amplitude: float, rng, k_max: int = 1) -> Connection:
    """A = -(dU) U^-1 from a smooth random U; curvature vanishes to O(h^2)."""
    u = smooth_gauge_transform(grid, amplitude, rng, k_max)
    return apply_gauge(zero_connection(grid), u)


def spatial_field(grid: Grid, spec: GeneratorSpec, rng=None, rank: Rank = Rank.ONE_FORM) -> LatticeField:
    """Dispatch on the generator kind for a single field draw."""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    if spec.kind == "random-bandlimited":
        return random_bandlimited(grid, rank, spec.amplitude, rng, spec.k_max)
    if spec.kind == "abelian-wave":
        return abelian_wave(grid, rank, spec.amplitude, rng, spec.k_max)
    if spec.kind == "bump":
        return bump_field(grid, rank, spec.amplitude, rng, spec.support_fraction)
    if spec.kind == "pure-gauge":
        return pure_gauge_connection(grid, spec.amplitude, rng, spec.k_max).spatial
    raise AssertionError


def project_gauss(a: LatticeField, e: LatticeField, sweeps: int = 1) -> tuple[LatticeField, float]:
    """Damp the Gauss residual of (a, e) by fixed-point gradient corrections.

    Each sweep solves the wide-stencil Poisson problem for the mean-free part
    of the bracket charge and adds the gradient to e; the divergence part of
    the residual cancels exactly, leaving the higher-order bracket remainder.
    Returns the corrected field and its recorded residual norm.
    """
    conn = Connection(a)
    for _ in range(sweeps):
        rho = covariant_divergence(conn, e)
        phi = spectral.poisson_solve_wide(-1.0 * rho)
        e = e + grad(phi)
    residual = lp_norm(covariant_divergence(conn, e), 2)
    return e, residual


def make_cauchy_data(grid: Grid, spec: GeneratorSpec):
    """Initial data (a_bar, e_bar) with the Gauss residual recorded.

    The electric field starts from an exact discrete curl (divergence-free
    under central differences); one damped fixed-point sweep then removes the
    mean-free part of the non-abelian charge.
    """
    from .hyperbolic import CauchyData

    rng = np.random.default_rng(spec.seed)
    a = spatial_field(grid, spec, rng)
    if spec.kind == "abelian-wave":
        w = abelian_wave(grid, Rank.ONE_FORM, spec.amplitude, rng, spec.k_max)
    elif spec.kind == "bump":
        w = bump_field(grid, Rank.ONE_FORM, spec.amplitude, rng, spec.support_fraction)
    else:
        w = random_bandlimited(grid, Rank.ONE_FORM, spec.amplitude, rng, spec.k_max)
    e = curl(w)
    if spec.constrained:
        e, residual = project_gauss(a, e)
    else:
        # deliberately unconstrained: O(1) divergence relative to amplitude
        e = e + random_bandlimited(grid, Rank.ONE_FORM, spec.amplitude, rng, spec.k_max)
        residual = lp_norm(covariant_divergence(Connection(a), e), 2)
    return CauchyData(a_bar=a, e_bar=e, grid=grid, gauss_residual=residual)
