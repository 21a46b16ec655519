import numpy as np
import pytest

from ymcal import algebra as alg

# ---------------------------------------------------------------------------
# Throwaway 2x2 matrix oracle: explicit Pauli matrices, traces and a
# scaling-and-squaring exponential.  Everything below is checked against it.
# ---------------------------------------------------------------------------

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
TAU_MAT = -0.5j * SIGMA  # tau_k = -(i/2) sigma_k
I2 = np.eye(2, dtype=complex)


def alg_mat(a):
    """Coefficients -> 2x2 traceless anti-hermitian matrix."""
    return np.einsum("k,kij->ij", np.asarray(a, dtype=float), TAU_MAT)


def mat_coeffs(m):
    """2x2 matrix -> basis coefficients via m_k = 2 Re tr(m tau_k^dagger)."""
    return np.array([2.0 * np.real(np.trace(m @ TAU_MAT[k].conj().T)) for k in range(3)])


def quat_mat(q):
    """Quaternion -> 2x2 matrix under w I - i v.sigma."""
    w, x, y, z = q
    return w * I2 - 1j * (x * SIGMA[0] + y * SIGMA[1] + z * SIGMA[2])


def expm_oracle(m, squarings=20, terms=24):
    """Scaling-and-squaring matrix exponential, Taylor core."""
    small = m / 2.0**squarings
    out = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for k in range(1, terms):
        term = term @ small / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def rand_alg(rng, shape=()):
    return rng.standard_normal(shape + (3,))


def rand_group(rng, shape=()):
    return alg.exp_map(2.0 * rand_alg(rng, shape))


# ---------------------------------------------------------------------------
# bracket
# ---------------------------------------------------------------------------


def test_bracket_of_basis_vector_with_itself_is_zero():
    assert np.all(alg.bracket(alg.TAU[0], alg.TAU[0]) == 0.0)


def test_bracket_tau1_tau2_matches_matrix_commutator():
    m = alg_mat(alg.TAU[0]) @ alg_mat(alg.TAU[1]) - alg_mat(alg.TAU[1]) @ alg_mat(alg.TAU[0])
    expected = mat_coeffs(m)
    np.testing.assert_allclose(alg.bracket(alg.TAU[0], alg.TAU[1]), expected, atol=1e-15)
    np.testing.assert_allclose(expected, alg.TAU[2], atol=1e-15)


def test_bracket_antisymmetry_random():
    rng = np.random.default_rng(0)
    a, b = rand_alg(rng, (100,)), rand_alg(rng, (100,))
    np.testing.assert_allclose(alg.bracket(a, b) + alg.bracket(b, a), 0.0, atol=1e-15)


def test_bracket_matches_matrix_commutator_random():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = rand_alg(rng), rand_alg(rng)
        m = alg_mat(a) @ alg_mat(b) - alg_mat(b) @ alg_mat(a)
        np.testing.assert_allclose(alg.bracket(a, b), mat_coeffs(m), atol=1e-13)


def test_jacobi_identity_thousand_triples():
    rng = np.random.default_rng(2)
    a, b, c = (rand_alg(rng, (1000,)) for _ in range(3))
    resid = alg.bracket(a, alg.bracket(b, c)) + alg.bracket(b, alg.bracket(c, a)) + alg.bracket(c, alg.bracket(a, b))
    bound = 1e-12 * alg.norm(a) * alg.norm(b) * alg.norm(c)
    assert np.all(alg.norm(resid) <= bound + 1e-15)


# ---------------------------------------------------------------------------
# inner
# ---------------------------------------------------------------------------


def test_inner_tau1_tau1_is_half_by_trace_oracle():
    m = alg_mat(alg.TAU[0])
    assert np.real(np.trace(m @ m.conj().T)) == pytest.approx(0.5, abs=1e-15)
    assert alg.inner(alg.TAU[0], alg.TAU[0]) == pytest.approx(0.5, abs=1e-15)


def test_inner_tau1_tau2_is_zero():
    m1, m2 = alg_mat(alg.TAU[0]), alg_mat(alg.TAU[1])
    assert np.real(np.trace(m1 @ m2.conj().T)) == pytest.approx(0.0, abs=1e-15)
    assert alg.inner(alg.TAU[0], alg.TAU[1]) == pytest.approx(0.0, abs=1e-15)


def test_inner_matches_trace_oracle_random():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = rand_alg(rng), rand_alg(rng)
        expected = np.real(np.trace(alg_mat(a) @ alg_mat(b).conj().T))
        assert alg.inner(a, b) == pytest.approx(expected, abs=1e-13)


def test_inner_bi_invariance_random():
    rng = np.random.default_rng(4)
    u = rand_group(rng, (200,))
    a, b = rand_alg(rng, (200,)), rand_alg(rng, (200,))
    lhs = alg.inner(alg.adjoint(u, a), alg.adjoint(u, b))
    np.testing.assert_allclose(lhs, alg.inner(a, b), rtol=0, atol=1e-12)


def test_ad_invariance_of_inner():
    rng = np.random.default_rng(5)
    a, b, c = (rand_alg(rng, (500,)) for _ in range(3))
    resid = alg.inner(alg.bracket(c, a), b) + alg.inner(a, alg.bracket(c, b))
    np.testing.assert_allclose(resid, 0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# exp_map
# ---------------------------------------------------------------------------


def test_exp_of_zero_is_identity():
    np.testing.assert_array_equal(alg.exp_map(np.zeros(3)), alg.GROUP_IDENTITY)


def test_exp_matches_scaling_and_squaring_up_to_norm_ten():
    rng = np.random.default_rng(6)
    for _ in range(50):
        a = rand_alg(rng)
        a = a / np.linalg.norm(a) * rng.uniform(1e-3, 10.0 * np.sqrt(2.0))
        # coefficient scaling chosen so the algebra norm |a| covers (0, 10]
        assert alg.norm(a) <= 10.0 + 1e-9
        got = quat_mat(alg.exp_map(a))
        want = expm_oracle(alg_mat(a))
        assert np.max(np.abs(got - want)) < 1e-10


def test_exp_rotation_about_axis_three_convention():
    # exp((0,0,2pi)) = exp(-i pi sigma_3) = -I, quaternion (-1,0,0,0)
    q = alg.exp_map(np.array([0.0, 0.0, 2.0 * np.pi]))
    np.testing.assert_allclose(q, [-1.0, 0.0, 0.0, 0.0], atol=1e-14)
    # generic angle pinned by the matrix oracle
    theta = 0.731
    q = alg.exp_map(np.array([0.0, 0.0, theta]))
    np.testing.assert_allclose(quat_mat(q), expm_oracle(alg_mat([0.0, 0.0, theta])), atol=1e-13)
    np.testing.assert_allclose(q, [np.cos(theta / 2), 0.0, 0.0, np.sin(theta / 2)], atol=1e-14)


def test_exp_inverse_property():
    rng = np.random.default_rng(7)
    a = rand_alg(rng, (100,))
    prod = alg.group_mul(alg.exp_map(a), alg.exp_map(-a))
    np.testing.assert_allclose(prod, np.broadcast_to(alg.GROUP_IDENTITY, prod.shape), atol=1e-14)


def test_group_mul_matches_matrix_product():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p, q = rand_group(rng), rand_group(rng)
        got = quat_mat(alg.group_mul(p, q))
        np.testing.assert_allclose(got, quat_mat(p) @ quat_mat(q), atol=1e-13)


# ---------------------------------------------------------------------------
# adjoint
# ---------------------------------------------------------------------------


def test_adjoint_of_identity_is_identity_map():
    rng = np.random.default_rng(9)
    a = rand_alg(rng, (50,))
    np.testing.assert_allclose(alg.adjoint(alg.GROUP_IDENTITY, a), a, atol=1e-15)


def test_adjoint_is_isometry():
    rng = np.random.default_rng(10)
    u, a = rand_group(rng, (200,)), rand_alg(rng, (200,))
    np.testing.assert_allclose(alg.norm(alg.adjoint(u, a)), alg.norm(a), atol=1e-13)


def test_adjoint_matches_matrix_conjugation():
    rng = np.random.default_rng(11)
    for _ in range(20):
        u, a = rand_group(rng), rand_alg(rng)
        um = quat_mat(u)
        want = mat_coeffs(um @ alg_mat(a) @ um.conj().T)
        np.testing.assert_allclose(alg.adjoint(u, a), want, atol=1e-12)


def test_adjoint_small_parameter_expansion_is_bracket():
    rng = np.random.default_rng(12)
    b, a = rand_alg(rng), rand_alg(rng)
    errs = []
    for t in (1e-3, 5e-4):
        fd = (alg.adjoint(alg.exp_map(t * b), a) - a) / t
        errs.append(np.linalg.norm(fd - alg.bracket(b, a)))
    # first-order remainder: halving t halves the defect
    assert errs[0] < 1e-2
    assert errs[1] < 0.6 * errs[0]


def test_adjoint_preserves_bracket():
    rng = np.random.default_rng(13)
    u = rand_group(rng, (100,))
    a, b = rand_alg(rng, (100,)), rand_alg(rng, (100,))
    lhs = alg.adjoint(u, alg.bracket(a, b))
    rhs = alg.bracket(alg.adjoint(u, a), alg.adjoint(u, b))
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


# ---------------------------------------------------------------------------
# renormalization contract
# ---------------------------------------------------------------------------


def test_unit_norm_maintained_with_periodic_renormalization():
    rng = np.random.default_rng(14)
    q = rand_group(rng, (64,))
    steps = rand_group(rng, (400, 64))
    mults = 0
    for k in range(steps.shape[0]):
        q = alg.group_mul(q, steps[k])
        mults += 1
        if mults % alg.RENORM_EVERY_MULTS == 0:
            q = alg.renormalize(q)
    q = alg.renormalize(q)
    assert alg.unit_error(q) < 1e-12


def test_algebra_part_strips_scalar_drift():
    rng = np.random.default_rng(15)
    v = rand_alg(rng, (30,))
    q = np.concatenate([rng.standard_normal((30, 1)), 0.5 * v], axis=-1)
    np.testing.assert_allclose(alg.algebra_part(q), v, atol=1e-15)
