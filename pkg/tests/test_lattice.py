import numpy as np
import pytest

from ymcal import algebra as alg
from ymcal import lattice as lat
from ymcal.errors import ProfileRangeError


def sine_field(grid, axis=1, k=1, direction=2, rank=lat.Rank.SCALAR, comp=0):
    """sin(2 pi k x_axis / L) tau_direction in one component, zeros elsewhere."""
    coords = grid.coordinates()
    f = lat.zeros(grid, rank)
    f.data[comp, ..., direction] = np.sin(2.0 * np.pi * k * coords[axis - 1] / grid.length)
    return f


def random_smooth_field(grid, rng, rank=lat.Rank.SCALAR, k_max=2, amplitude=1.0):
    """Band-limited random field, mode cut |k|_inf <= k_max."""
    coords = grid.coordinates()
    f = lat.zeros(grid, rank)
    modes = [
        (kx, ky, kz)
        for kx in range(-k_max, k_max + 1)
        for ky in range(-k_max, k_max + 1)
        for kz in range(-k_max, k_max + 1)
        if (kx, ky, kz) != (0, 0, 0)
    ]
    for c in range(f.data.shape[0]):
        for b in range(3):
            for kv in modes:
                amp = amplitude * rng.standard_normal() / len(modes)
                phase = rng.uniform(0, 2 * np.pi)
                arg = 2.0 * np.pi * (kv[0] * coords[0] + kv[1] * coords[1] + kv[2] * coords[2]) / grid.length
                f.data[c, ..., b] += amp * np.cos(arg + phase)
    return f


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


def test_grid_rejects_bad_sizes():
    with pytest.raises(ValueError):
        lat.Grid(12, 1.0)
    with pytest.raises(ValueError):
        lat.Grid(4, 1.0)
    g = lat.Grid(16, 2.0)
    assert g.h == pytest.approx(0.125)


# ---------------------------------------------------------------------------
# diff / laplace
# ---------------------------------------------------------------------------


def test_diff_of_constant_is_zero():
    grid = lat.Grid(8, 2 * np.pi)
    f = lat.zeros(grid, lat.Rank.ONE_FORM)
    f.data[:] = 0.7
    assert lat.lp_norm(lat.diff(f, 1), np.inf) == 0.0


def test_diff_matches_analytic_derivative_at_second_order():
    errs = []
    for n in (16, 32):
        grid = lat.Grid(n, 2 * np.pi)
        f = sine_field(grid, axis=1, k=1)
        x = grid.coordinates()[0]
        expected = (2 * np.pi / grid.length) * np.cos(2 * np.pi * x / grid.length)
        got = lat.diff(f, 1).data[0, ..., 2]
        errs.append(np.max(np.abs(got - expected)))
    assert errs[0] < 0.05
    ratio = errs[0] / errs[1]
    assert ratio == pytest.approx(4.0, rel=0.10)


def test_laplace_of_constant_is_zero():
    grid = lat.Grid(8, 1.0)
    f = lat.zeros(grid, lat.Rank.SCALAR)
    f.data[:] = -1.3
    assert lat.lp_norm(lat.laplace(f), np.inf) < 1e-12


def test_laplace_matches_analytic_at_second_order():
    errs = []
    for n in (16, 32):
        grid = lat.Grid(n, 2 * np.pi)
        f = sine_field(grid, axis=1, k=1, direction=0)
        x = grid.coordinates()[0]
        expected = -((2 * np.pi / grid.length) ** 2) * np.sin(2 * np.pi * x / grid.length)
        got = lat.laplace(f).data[0, ..., 0]
        errs.append(np.max(np.abs(got - expected)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.10)


def test_laplace_axis_symmetry():
    grid = lat.Grid(16, 2 * np.pi)
    f1 = sine_field(grid, axis=1)
    f2 = sine_field(grid, axis=2)
    l1 = lat.laplace(f1).data[0, ..., 2]
    l2 = lat.laplace(f2).data[0, ..., 2]
    np.testing.assert_allclose(np.moveaxis(l1, 0, 1), l2, atol=1e-13)


def test_stencils_commute_with_translations_exactly():
    rng = np.random.default_rng(20)
    grid = lat.Grid(8, 1.0)
    f = random_smooth_field(grid, rng)
    for op in (lambda g: lat.diff(g, 2), lat.laplace):
        a = lat.translate(op(f), (1, 2, 3))
        b = op(lat.translate(f, (1, 2, 3)))
        np.testing.assert_array_equal(a.data, b.data)


def test_summation_by_parts_is_exact():
    rng = np.random.default_rng(21)
    grid = lat.Grid(8, 2 * np.pi)
    f = random_smooth_field(grid, rng)
    g = random_smooth_field(grid, rng)
    h3 = grid.volume_element
    for axis in (1, 2, 3):
        total = h3 * (
            np.sum(alg.inner(lat.diff(f, axis).data, g.data))
            + np.sum(alg.inner(f.data, lat.diff(g, axis).data))
        )
        assert abs(total) <= 1e-10 * lat.lp_norm(f, 2) * lat.lp_norm(g, 2)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def test_lp_norm_of_zero_field():
    grid = lat.Grid(8, 1.0)
    f = lat.zeros(grid, lat.Rank.TWO_FORM)
    for p in lat.LP_EXPONENTS:
        assert lat.lp_norm(f, p) == 0.0


def test_lp_norm_single_site_value():
    grid = lat.Grid(8, 1.0)
    f = lat.zeros(grid, lat.Rank.SCALAR)
    f.data[0, 3, 4, 5, 2] = 1.0  # tau_3 at one site
    # |tau_3| = sqrt(1/2); L2 = sqrt(|tau_3|^2 h^3) = h^(3/2)/sqrt(2)
    expected = grid.h**1.5 / np.sqrt(2.0)
    assert lat.lp_norm(f, 2) == pytest.approx(expected, rel=1e-14)
    assert lat.lp_norm(f, np.inf) == pytest.approx(np.sqrt(0.5), rel=1e-14)


def test_multi_component_norm_takes_max_over_components():
    grid = lat.Grid(8, 1.0)
    f = lat.zeros(grid, lat.Rank.ONE_FORM)
    f.data[0, ..., 0] = 1.0
    f.data[1, ..., 0] = 2.0
    single = lat.zeros(grid, lat.Rank.SCALAR)
    single.data[0, ..., 0] = 2.0
    assert lat.lp_norm(f, 2) == pytest.approx(lat.lp_norm(single, 2), rel=1e-14)


def test_gagliardo_nirenberg_l3_bound_on_band_limited_fields():
    # ||f||_3 <= C ||f||_2^(1/2) ||grad f||_2^(1/2); C frozen after calibration
    rng = np.random.default_rng(22)
    grid = lat.Grid(16, 2 * np.pi)
    worst = 0.0
    for _ in range(10):
        f = random_smooth_field(grid, rng, k_max=2)
        grad_sq = sum(lat.lp_norm(lat.diff(f, a), 2) ** 2 for a in (1, 2, 3))
        bound = lat.lp_norm(f, 2) ** 0.5 * grad_sq**0.25
        worst = max(worst, lat.lp_norm(f, 3) / bound)
    assert worst <= 0.80


def test_norm_absolute_homogeneity():
    rng = np.random.default_rng(23)
    grid = lat.Grid(8, 1.5)
    f = random_smooth_field(grid, rng, rank=lat.Rank.ONE_FORM)
    for p in lat.LP_EXPONENTS:
        a = lat.lp_norm(-3.7 * f, p)
        b = 3.7 * lat.lp_norm(f, p)
        assert a == pytest.approx(b, rel=1e-12)
    assert lat.sobolev_norm(2.0 * f, 2) == pytest.approx(2.0 * lat.sobolev_norm(f, 2), rel=1e-12)


def test_sobolev_norm_of_constant_vanishes():
    grid = lat.Grid(8, 1.0)
    f = lat.zeros(grid, lat.Rank.SCALAR)
    f.data[:] = 2.0
    assert lat.sobolev_norm(f, 1) == 0.0
    assert lat.sobolev_norm(f, 2) == 0.0


def test_sobolev_plane_wave_relation():
    grid = lat.Grid(16, 2 * np.pi)
    k = 2
    f = sine_field(grid, axis=1, k=k)
    # discrete symbol sin(2 pi k h / L)/h is exact; continuum value to O(h^2)
    s_k = np.sin(2 * np.pi * k * grid.h / grid.length) / grid.h
    assert lat.sobolev_norm(f, 1) == pytest.approx(s_k * lat.lp_norm(f, 2), rel=1e-12)
    f1 = sine_field(grid, axis=1, k=1)
    cont = 2 * np.pi / grid.length
    assert lat.sobolev_norm(f1, 1) == pytest.approx(cont * lat.lp_norm(f1, 2), rel=0.05)


def test_sobolev_order_zero_is_l2():
    rng = np.random.default_rng(24)
    grid = lat.Grid(8, 1.0)
    f = random_smooth_field(grid, rng)
    assert lat.sobolev_norm(f, 0) == lat.lp_norm(f, 2)


# ---------------------------------------------------------------------------
# flow-parameter norms
# ---------------------------------------------------------------------------


def fine_profile(fn, s_min=1e-6, s_max=1.0, count=4000):
    s = lat.geometric_s_grid(s_min, s_max, count)
    return lat.NormProfile(s, fn(s))


def test_pnorm_s_constant_profile_l2():
    prof = fine_profile(lambda s: np.ones_like(s))
    got = lat.pnorm_s(prof, ell=1.0, p=2, interval=(0.0, 1.0))
    assert got == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-5)


def test_pnorm_s_constant_profile_sup():
    prof = fine_profile(lambda s: np.ones_like(s))
    assert lat.pnorm_s(prof, ell=0.0, p=np.inf, interval=(0.0, 1.0)) == pytest.approx(1.0)


def test_pnorm_s_power_law():
    # s_min deep enough that the omitted (0, s_min] tail of s^(1/2) is negligible
    prof = fine_profile(lambda s: s**-0.5, s_min=1e-12, count=8000)
    got = lat.pnorm_s(prof, ell=0.75, p=2, interval=(0.0, 1.0))
    assert got == pytest.approx(np.sqrt(2.0), rel=1e-5)


def test_pnorm_s_interval_outside_grid_raises():
    prof = fine_profile(lambda s: np.ones_like(s), s_min=1e-3, s_max=0.5)
    with pytest.raises(ProfileRangeError):
        lat.pnorm_s(prof, ell=1.0, p=2, interval=(0.0, 1.0))


def test_pnorm_s_holder_inequality_sampled():
    rng = np.random.default_rng(25)
    s = lat.geometric_s_grid(1e-4, 1.0, 300)
    cases = [((0.5, 2), (0.25, 2), (0.75, 1)), ((0.5, np.inf), (0.5, 2), (1.0, 2)),
             ((0.0, np.inf), (1.0, np.inf), (1.0, np.inf)), ((0.75, np.inf), (0.25, 1), (1.0, 1))]
    for _ in range(20):
        f = np.exp(rng.standard_normal() * np.log(s)) * (1.0 + 0.5 * np.sin(rng.uniform(1, 6) * np.log(s)))
        g = np.exp(rng.standard_normal() * np.log(s)) * (1.0 + 0.5 * np.cos(rng.uniform(1, 6) * np.log(s)))
        pf, pg = lat.NormProfile(s, np.abs(f)), lat.NormProfile(s, np.abs(g))
        pfg = lat.NormProfile(s, np.abs(f * g))
        for (l1, p1), (l2, p2), (l, p) in cases:
            lhs = lat.pnorm_s(pfg, l, p, (0.0, 1.0))
            rhs = lat.pnorm_s(pf, l1, p1, (0.0, 1.0)) * lat.pnorm_s(pg, l2, p2, (0.0, 1.0))
            assert lhs <= rhs * (1.0 + 1e-12)


def test_pnormalized_norms_are_pure_reweightings():
    rng = np.random.default_rng(26)
    grid = lat.Grid(8, 1.0)
    f = random_smooth_field(grid, rng)
    for s in (0.037, 0.4, 1.0):
        assert lat.pnormalized_lp(f, 2, s) == s ** (-0.75) * lat.lp_norm(f, 2)
        assert lat.pnormalized_lp(f, np.inf, s) == lat.lp_norm(f, np.inf)
        assert lat.pnormalized_sobolev(f, 1, s) == s ** (-0.25) * lat.sobolev_norm(f, 1)


def test_sup_of_pnormalized_l2_profile_recovers_plain_sup():
    rng = np.random.default_rng(27)
    s = lat.geometric_s_grid(1e-3, 1.0, 50)
    plain = np.abs(rng.standard_normal(50)) + 0.1
    prof = lat.NormProfile(s, s ** (-0.75) * plain)
    got = lat.pnorm_s(prof, ell=0.75, p=np.inf, interval=(0.0, 1.0))
    assert got == pytest.approx(np.max(plain), rel=1e-12)


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------


def test_snapshot_roundtrip(tmp_path):
    rng = np.random.default_rng(28)
    grid = lat.Grid(8, 2.5)
    f = random_smooth_field(grid, rng, rank=lat.Rank.TWO_FORM)
    path = tmp_path / "field.ymcf"
    lat.save_field(path, f)
    g = lat.load_field(path, grid.length)
    assert g.rank == f.rank
    assert g.grid == f.grid
    np.testing.assert_array_equal(g.data, f.data)


def test_snapshot_header_layout(tmp_path):
    grid = lat.Grid(8, 1.0)
    f = lat.zeros(grid, lat.Rank.ONE_FORM)
    path = tmp_path / "field.ymcf"
    lat.save_field(path, f)
    raw = path.read_bytes()
    assert raw[:4] == b"YMCF"
    version, n, rank, ncomp = np.frombuffer(raw[4:20], dtype="<u4")
    assert (version, n, rank, ncomp) == (1, 8, lat.Rank.ONE_FORM.value, 3)
    assert len(raw) == 32 + 8 * 3 * 8**3 * 3


def test_two_form_entry_signs():
    grid = lat.Grid(8, 1.0)
    f = lat.zeros(grid, lat.Rank.TWO_FORM)
    f.data[0, ..., 0] = 5.0  # F_{12}
    np.testing.assert_array_equal(lat.two_form_entry(f, 1, 2), f.data[0])
    np.testing.assert_array_equal(lat.two_form_entry(f, 2, 1), -f.data[0])
