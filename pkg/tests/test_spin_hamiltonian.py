import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinres.errors import CapacityError, InvalidSpinError, ValidationError
from spinres.spin_hamiltonian import (
    InteractionTensor,
    SpinSystem,
    build_hamiltonian,
    c2_partner,
    c2_subclass,
    diagonalize,
    effective_g,
    rotation_matrix,
    spin_operators,
    transitions,
)

from conftest import H_PLANCK, MU_BOHR, oracle_resonance_field, random_hermitian

MU_B_MHZ = MU_BOHR / H_PLANCK * 1e-6
B_AXIS = np.array([0.0, 0.0, 1.0])
SITE1_G = np.array(
    [[5.917839216, 0, 0.599428681], [0, 3, 0], [0.599428681, 0, 8.899836249]]
)
SITE2_G = np.array(
    [[1.269362196, 0, 0.268993922], [0, 13, 0], [0.268993922, 0, 2.766955415]]
)
TILT_40 = np.array([math.sin(math.radians(40)), 0.0, math.cos(math.radians(40))])


def generic_tensor(rng, scale=1.0):
    return rng.normal(size=(3, 3)) * scale


def traceless_sym(rng, scale=1.0):
    q = rng.normal(size=(3, 3)) * scale
    q = q + q.T
    return q - np.trace(q) / 3 * np.eye(3)


# --- spin operators -------------------------------------------------------


def test_spin_half_operators():
    jx, jy, jz = spin_operators(0.5)
    np.testing.assert_allclose(jz, np.diag([0.5, -0.5]))
    np.testing.assert_allclose(jx, 0.5 * np.array([[0, 1], [1, 0]]))
    np.testing.assert_allclose(jy, 0.5 * np.array([[0, -1j], [1j, 0]]))


def test_spin_seven_halves_trace():
    jz = spin_operators("7/2")[2]
    assert jz.shape == (8, 8)
    # sum of m^2 for m = -7/2..7/2
    assert np.trace(jz @ jz).real == pytest.approx(sum((m / 2) ** 2 for m in range(-7, 8, 2)))
    assert np.trace(jz @ jz).real == pytest.approx(42.0)


@pytest.mark.parametrize("j", [0, 0.5, 1, 1.5, 2, 3.5, 5])
def test_spin_algebra(j):
    jx, jy, jz = spin_operators(j)
    n = int(2 * j + 1)
    for op in (jx, jy, jz):
        np.testing.assert_allclose(op, op.conj().T, atol=1e-14)
    np.testing.assert_allclose(jx @ jy - jy @ jx, 1j * jz, atol=1e-12)
    np.testing.assert_allclose(jx @ jx + jy @ jy + jz @ jz, j * (j + 1) * np.eye(n), atol=1e-12)
    np.testing.assert_allclose(np.diag(jz).real, j - np.arange(n))


@pytest.mark.parametrize("bad", [0.3, -0.5, "1/3", "x", 1.25])
def test_invalid_spin(bad):
    with pytest.raises(InvalidSpinError):
        spin_operators(bad)


# --- Hamiltonian ---------------------------------------------------------


def test_isotropic_zeeman_splitting():
    sys_ = SpinSystem(g=InteractionTensor.isotropic(2.0))
    e = diagonalize(build_hamiltonian(sys_, [0, 0, 1.0])).energies
    assert e[1] - e[0] == pytest.approx(2 * MU_B_MHZ, rel=1e-12)
    assert e[1] - e[0] == pytest.approx(27992.49, abs=0.01)


def test_zero_field_zero_matrix():
    sys_ = SpinSystem(g=SITE1_G, I="7/2")
    h = build_hamiltonian(sys_, [0, 0, 0])
    assert h.shape == (16, 16)
    assert np.all(h == 0)
    e = diagonalize(h).energies
    assert np.all(e == 0)


def test_site1_b_axis_effective_g():
    sys_ = SpinSystem(g=SITE1_G)
    b = 0.05 * B_AXIS
    e = diagonalize(build_hamiltonian(sys_, b)).energies
    assert (e[1] - e[0]) / (MU_B_MHZ * 0.05) == pytest.approx(8.92, abs=1e-6)
    assert effective_g(SITE2_G, B_AXIS) == pytest.approx(2.78, abs=1e-6)


def test_capacity_error():
    sys_ = SpinSystem(g=2.0, S="7/2", I="7/2")  # 64
    build_hamiltonian(sys_, [0, 0, 0.1])
    with pytest.raises(CapacityError):
        build_hamiltonian(SpinSystem(g=2.0, S="7/2", I=4), [0, 0, 0.1])
    with pytest.raises(CapacityError):
        build_hamiltonian(sys_, [0, 0, 0.1], max_dim=32)


def test_tensor_validation():
    with pytest.raises(ValidationError):
        InteractionTensor(np.eye(3), "quadrupole_Q")  # not traceless
    with pytest.raises(ValidationError):
        InteractionTensor(np.ones((2, 2)))
    with pytest.raises(ValidationError):
        SpinSystem(g=2.0, I=0, A=np.eye(3))
    with pytest.raises(ValidationError):
        InteractionTensor([[np.nan] * 3] * 3)


def test_hyperfine_matches_manual_kron(rng):
    """Electron-first ordering: I.A.S = sum_ab A_ab S_b (x) I_a."""
    a = generic_tensor(rng, 100.0)
    q = traceless_sym(rng, 5.0)
    sys_ = SpinSystem(g=generic_tensor(rng, 3.0), I="3/2", A=a, Q=q)
    b = np.array([0.01, -0.02, 0.03])
    sx, sy, sz = (np.array(o) for o in spin_operators(0.5))
    ix, iy, iz = (np.array(o) for o in spin_operators(1.5))
    s_ops, i_ops = [sx, sy, sz], [ix, iy, iz]
    expected = np.zeros((8, 8), dtype=complex)
    for p in range(3):
        for r in range(3):
            expected += MU_B_MHZ * b[p] * sys_.g.matrix[p, r] * np.kron(s_ops[r], np.eye(4))
            expected += a[p, r] * np.kron(s_ops[r], i_ops[p])
            expected += q[p, r] * np.kron(np.eye(2), i_ops[p] @ i_ops[r])
    np.testing.assert_allclose(build_hamiltonian(sys_, b), expected, atol=1e-9)


# --- diagonalize ---------------------------------------------------------


def test_diagonal_input():
    e = diagonalize(np.diag([-1.0, 3.0]))
    np.testing.assert_array_equal(e.energies, [-1.0, 3.0])
    np.testing.assert_array_equal(e.states, np.eye(2))


def test_non_hermitian_rejected():
    with pytest.raises(ValidationError):
        diagonalize(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValidationError):
        diagonalize(np.ones((2, 3)))


@pytest.mark.parametrize("n", [2, 8, 16])
def test_random_hermitian_reconstruction(rng, backend, n):
    for _ in range(5):
        h = random_hermitian(rng, n)
        eig = diagonalize(h, backend=backend)
        u = eig.states
        assert np.linalg.norm(eig.reconstruct() - h) <= 1e-9 * np.linalg.norm(h)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(n), atol=1e-10)
        np.testing.assert_allclose(eig.energies, np.linalg.eigvalsh(h), atol=1e-10 * np.abs(h).max())
        assert np.all(np.diff(eig.energies) >= 0)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 16), seed=st.integers(0, 2**32 - 1))
def test_reconstruction_property(n, seed):
    h = random_hermitian(np.random.default_rng(seed), n)
    eig = diagonalize(h)
    assert np.linalg.norm(eig.reconstruct() - h) <= 1e-9 * np.linalg.norm(h)
    assert np.abs(eig.states.conj().T @ eig.states - np.eye(n)).max() <= 1e-10


def test_phase_convention_and_determinism(rng):
    h = random_hermitian(rng, 12)
    a = diagonalize(h)
    b = diagonalize(h.copy())
    np.testing.assert_array_equal(a.energies, b.energies)
    np.testing.assert_array_equal(a.states, b.states)
    for k in range(12):
        col = a.states[:, k]
        i = int(np.argmax(np.abs(col)))
        assert col[i].imag == 0.0 and col[i].real > 0


def test_degenerate_spectrum_deterministic():
    sys_ = SpinSystem(g=2.0, I="7/2", A=InteractionTensor.isotropic(200.0, "hyperfine_A"))
    h = build_hamiltonian(sys_, [0, 0, 0])
    a, b = diagonalize(h), diagonalize(h)
    np.testing.assert_array_equal(a.states, b.states)
    # F = 3 and F = 4 multiplets: a/2 * (F(F+1) - I(I+1) - S(S+1))
    e = np.round(a.energies, 9)
    assert sorted(set(e)) == pytest.approx([-450.0, 350.0])
    assert list(e).count(-450.0) == 7


@pytest.mark.parametrize("seed", range(5))
def test_even_isotope_symmetric_pair(seed):
    rng = np.random.default_rng(seed)
    g = generic_tensor(rng, 4.0)
    b = rng.normal(size=3) * 0.1
    e = diagonalize(build_hamiltonian(SpinSystem(g=g), b)).energies
    geff = effective_g(g, b / np.linalg.norm(b))
    half = 0.5 * geff * MU_B_MHZ * np.linalg.norm(b)
    np.testing.assert_allclose(e, [-half, half], rtol=1e-12)


# --- effective g ---------------------------------------------------------


def test_effective_g_examples():
    assert effective_g(2 * np.eye(3), [0.6, 0.8, 0.0]) == pytest.approx(2.0)
    assert effective_g(np.diag([2.0, 4.0, 8.0]), [0, 0, 1]) == pytest.approx(8.0)
    with pytest.raises(ValidationError):
        effective_g(np.eye(3), [1.0, 1.0, 0.0])


@pytest.mark.parametrize("g", [1.0, 10.0])
def test_tuning_factor_range(g):
    tuning_ghz_per_t = g * MU_B_MHZ * 1e-3
    assert 13.9 <= tuning_ghz_per_t <= 140.0


def test_effective_g_matches_splitting_for_asymmetric_tensor(rng):
    g = generic_tensor(rng, 3.0)
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    tt = transitions(SpinSystem(g=g), 0.1 * n)
    assert tt[0].frequency == pytest.approx(effective_g(g, n) * MU_B_MHZ * 0.1, rel=1e-12)


# --- transitions ---------------------------------------------------------


def test_two_level_single_transition():
    tt = transitions(SpinSystem(g=InteractionTensor.isotropic(2.0)), [0, 0, 0.1], [1, 0, 0])
    assert len(tt) == 1
    assert tt[0].frequency == pytest.approx(2 * MU_B_MHZ * 0.1)
    # |<up| g Sx |down>|^2 = (2 * 1/2)^2
    assert tt[0].strength == pytest.approx(1.0)


def test_hyperfine_pair_count(rng):
    sys_ = SpinSystem(g=SITE1_G, I="7/2", A=generic_tensor(rng, 300.0))
    tt = transitions(sys_, 0.03 * B_AXIS, strength_floor=0.0)
    assert len(tt) == math.comb(16, 2) == 120
    f = tt.frequencies()
    assert np.all(f >= 0) and np.all(np.diff(f) >= 0)
    assert all(t.lower < t.upper for t in tt)
    assert len(transitions(sys_, 0.03 * B_AXIS, strength_floor=1e-3)) < 120


def test_resonance_field_site_1a():
    g = 8.37 * np.eye(3)
    b_res = 4400.0 / (8.37 * MU_B_MHZ)
    assert b_res == pytest.approx(oracle_resonance_field(8.37), rel=1e-12)
    assert 1e3 * b_res == pytest.approx(37.6, abs=0.05)
    assert abs(1e3 * b_res - 37.7) / 37.7 < 0.01
    tt = transitions(SpinSystem(g=g), b_res * B_AXIS)
    assert tt[0].frequency == pytest.approx(4400.0, rel=1e-12)


# --- C2 subclasses -------------------------------------------------------


def test_c2_diagonal_tensor_unchanged():
    g = InteractionTensor(np.diag([3.0, 5.0, 8.92]))
    np.testing.assert_allclose(c2_subclass(g, B_AXIS).matrix, g.matrix, atol=1e-15)


def test_c2_involution(rng):
    g = InteractionTensor(generic_tensor(rng, 4.0))
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    twice = c2_subclass(c2_subclass(g, axis), axis)
    np.testing.assert_allclose(twice.matrix, g.matrix, atol=1e-12)
    with pytest.raises(ValidationError):
        c2_subclass(g, [0, 0, 2.0])


def test_subclasses_equivalent_along_b():
    for g in (SITE1_G, SITE2_G):
        a = effective_g(g, B_AXIS)
        b = effective_g(c2_subclass(InteractionTensor(g), B_AXIS), B_AXIS)
        assert a == pytest.approx(b, rel=1e-14)


@pytest.mark.parametrize("sign", [+1, -1])
def test_misaligned_field_splits_subclasses(sign):
    n = rotation_matrix([0, 1, 0], sign * math.radians(5)) @ B_AXIS
    ga = effective_g(SITE1_G, n)
    gb = effective_g(c2_subclass(InteractionTensor(SITE1_G), B_AXIS), n)
    assert abs(ga - gb) > 0.05
    assert oracle_resonance_field(ga) != pytest.approx(oracle_resonance_field(gb), rel=1e-3)


# --- invariants ----------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), two_i=st.sampled_from([0, 1, 3, 7]))
def test_hermiticity(seed, two_i):
    rng = np.random.default_rng(seed)
    kw = {}
    if two_i:
        kw = dict(A=generic_tensor(rng, 200.0), Q=traceless_sym(rng, 10.0))
    sys_ = SpinSystem(g=generic_tensor(rng, 4.0), I=Fraction(two_i, 2), **kw)
    h = build_hamiltonian(sys_, rng.normal(size=3) * 0.1)
    assert np.linalg.norm(h - h.conj().T) <= 1e-10 * max(np.linalg.norm(h), 1e-300)


def test_zeeman_linearity(rng):
    g = generic_tensor(rng, 4.0)
    n = np.array([0.3, -0.4, 0.866])
    n /= np.linalg.norm(n)
    fields = np.linspace(0.01, 0.2, 10)
    freqs = np.array([transitions(SpinSystem(g=g), b * n)[0].frequency for b in fields])
    slope = freqs[-1] / fields[-1]
    assert np.max(np.abs(freqs / (slope * fields) - 1)) < 1e-9


def test_kramers_degeneracy_zero_field():
    """At B = 0 levels pair up when the zero-field terms are
    time-reversal even and the pairing is symmetry-guaranteed."""
    rng = np.random.default_rng(7)
    cases = [
        SpinSystem(g=SITE1_G),  # even isotope
        SpinSystem(g=SITE1_G, I="7/2", A=InteractionTensor.isotropic(-130.0, "hyperfine_A")),
        SpinSystem(g=SITE1_G, I="7/2", A=InteractionTensor.isotropic(-130.0, "hyperfine_A"),
                   Q=np.zeros((3, 3))),
        SpinSystem(g=SITE1_G, I="7/2", Q=traceless_sym(rng, 10.0)),
    ]
    for sys_ in cases:
        e = diagonalize(build_hamiltonian(sys_, [0, 0, 0])).energies
        for k, ek in enumerate(e):
            others = np.delete(e, k)
            assert np.min(np.abs(others - ek)) <= 1e-6, (sys_, e)


def test_generic_hyperfine_lifts_pairing():
    # Electron 1/2 + nuclear 7/2 is an integer total spin: no Kramers pairing
    # is guaranteed once A is anisotropic.
    rng = np.random.default_rng(3)
    sys_ = SpinSystem(g=SITE1_G, I="7/2", A=generic_tensor(rng, 300.0))
    e = diagonalize(build_hamiltonian(sys_, [0, 0, 0])).energies
    gaps = np.abs(e[:, None] - e[None, :]) + np.eye(16) * 1e9
    assert gaps.min(axis=1).max() > 1e-3


@pytest.mark.parametrize("seed", range(6))
def test_rotation_covariance(seed):
    rng = np.random.default_rng(seed)
    sys_ = SpinSystem(g=generic_tensor(rng, 4.0), I="3/2", A=generic_tensor(rng, 200.0),
                      Q=traceless_sym(rng, 10.0))
    b = rng.normal(size=3) * 0.05
    axis = rng.normal(size=3)
    rot = rotation_matrix(axis / np.linalg.norm(axis), rng.uniform(0, 2 * np.pi))
    e1 = diagonalize(build_hamiltonian(sys_, b)).energies
    e2 = diagonalize(build_hamiltonian(sys_.rotated(rot), rot @ b)).energies
    assert np.max(np.abs(e1 - e2)) <= 1e-9 * np.max(np.abs(e1))


def test_four_transition_structure():
    fields = []
    for g in (SITE1_G, SITE2_G):
        site = SpinSystem(g=g)
        for s in (site, c2_partner(site, B_AXIS)):
            fields.append(oracle_resonance_field(effective_g(s.g, TILT_40)))
    assert len(fields) == 4
    d = np.abs(np.subtract.outer(fields, fields)) + np.eye(4)
    assert d.min() > 1e-3  # distinct by more than 1 mT
    np.testing.assert_allclose(sorted(1e3 * np.array(fields)), [37.56, 43.36, 125.25, 154.10], atol=0.01)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    two_s=st.sampled_from([1, 3, 5]),
    i=st.integers(0, 3),
)
def test_kramers_pairs_half_integer_total(seed, two_s, i):
    """Half-integer total spin: time reversal squares to -1, so every level
    pairs at B = 0 whatever the (time-even) A and Q tensors are."""
    rng = np.random.default_rng(seed)
    kw = dict(A=generic_tensor(rng, 300.0), Q=traceless_sym(rng, 10.0)) if i else {}
    sys_ = SpinSystem(g=generic_tensor(rng, 4.0), S=Fraction(two_s, 2), I=i, **kw)
    if sys_.dim > 64:
        return
    e = diagonalize(build_hamiltonian(sys_, [0, 0, 0])).energies
    assert np.abs(e[0::2] - e[1::2]).max() <= 1e-6
