import numpy as np
import pytest
from scipy import integrate, linalg

from periodic_koopman import maps, oracles, spectral
from periodic_koopman.discretizer import PermutationMap, discretize_analytic
from periodic_koopman.lattice import LatticePartition
from periodic_koopman.spectral import Interval

PI = np.pi


def perm_of(target):
    target = list(target)
    return PermutationMap(LatticePartition(1, len(target)), target)


# -- closed forms ----------------------------------------------------------------


def test_translation_examples():
    (ang, mass), = oracles.translation_spectrum([1 / 3], [(1, 1.0)]).atoms
    assert (ang, mass) == (pytest.approx(2 * PI / 3), 1.0)
    assert oracles.translation_spectrum([0.5, 1 / 3], [((0, 0), 1.0)]).atoms == ((0.0, 1.0),)
    merged = oracles.translation_spectrum([0.5], [(1, 1.0), (-1, 1.0)])
    assert len(merged.atoms) == 1
    assert merged.atoms[0][0] == pytest.approx(-PI)
    assert merged.atoms[0][1] == 2.0
    assert merged.continuous_part(np.array([0.3])).tolist() == [0.0]
    with pytest.raises(ValueError):
        oracles.translation_spectrum([0.5, 0.5], [(1, 1.0)])


def test_catmap_examples():
    g1 = oracles.catmap_spectrum("g1")
    assert g1.continuous_part(np.array([-2.0, 0.0, 1.3])) == pytest.approx([1 / (2 * PI)] * 3)
    assert oracles.catmap_spectrum("g2").continuous_part(np.array([0.0]))[0] == pytest.approx(9 / (8 * PI))
    g3 = oracles.catmap_spectrum("g3")
    val, _ = integrate.quad(lambda t: float(g3.continuous_part(np.array([t]))[0]), -PI, PI)
    assert val == pytest.approx(21 / 16, abs=1e-12)
    assert g3.atoms == ()
    with pytest.raises(ValueError):
        oracles.catmap_spectrum("g4")


@pytest.mark.parametrize("name", ["g1", "g2", "g3"])
def test_catmap_total_mass_matches_observable(name):
    closed = oracles.catmap_spectrum(name)
    assert closed.total_mass == pytest.approx(maps.builtin_observable(name).norm2(), abs=1e-10)
    grid = np.linspace(-PI, PI, 2001)
    assert np.all(closed.continuous_part(grid) >= 0)


def _mass_at(closed, angle):
    return sum(m for a, m in closed.atoms if abs(a - angle) < 1e-12)


def test_anzai_examples():
    closed = oracles.anzai_spectrum(1 / 3)
    assert len(closed.atoms) == 3
    assert _mass_at(closed, 0.0) == 1 / 25
    assert _mass_at(closed, 2 * PI / 3) == 1 / 400
    assert _mass_at(closed, -2 * PI / 3) == 1 / 400
    assert closed.total_mass == pytest.approx(maps.builtin_observable("g_anzai").norm2(), abs=1e-10)
    assert closed.total_mass == pytest.approx(1 / 400 + 1 / 400 + 1 / 25 + 5 / 4, abs=1e-12)
    assert closed.continuous_part(np.array([PI]))[0] == pytest.approx(0.25 / (2 * PI))
    with pytest.raises(ValueError):
        oracles.anzai_spectrum(0.25)


def test_anzai_printed_atom_layout():
    printed = oracles.anzai_printed_spectrum()
    assert _mass_at(printed, -2 * PI / 3) == 1 / 25
    assert _mass_at(printed, 0.0) == 1 / 400
    assert _mass_at(printed, 2 * PI / 3) == 1 / 400
    assert oracles.anzai_printed_spectrum().total_mass == pytest.approx(oracles.anzai_spectrum(1 / 3).total_mass)


def test_anzai_atoms_sit_where_the_lattice_puts_them():
    # x1-only modes are exact eigenvectors on a grid divisible by 3, so their atoms are exact
    part = LatticePartition(2, 510)
    perm = discretize_analytic(maps.anzai(1 / 3), part)
    obs = maps.fourier_modes([((1, 0), 1 / 20), ((2, 0), 1 / 20), ((3, 0), 1 / 5)])
    at = spectral.atoms(perm, maps.sample(obs, part))
    expected = oracles.anzai_spectrum(1 / 3).mirrored()
    for center, mass in expected.atoms:
        got = at.mass_in(Interval.arc(center - 1e-9, center + 1e-9))
        assert got == pytest.approx(mass, abs=1e-12)
    assert at.total_mass == pytest.approx(obs.norm2(), abs=1e-12)


def test_window_mass_and_mirror():
    closed = oracles.ClosedFormSpectrum(((1.0, 0.5), (-PI, 0.25)), (0.1, 0.05))
    assert closed.mirrored().atoms == ((-1.0, 0.5), (-PI, 0.25))
    val, _ = integrate.quad(lambda t: float(closed.continuous_part(np.array([t]))[0]), 0.7, 1.3)
    assert closed.window_mass(1.0, 0.3) == pytest.approx(0.5 + val, abs=1e-12)
    with pytest.raises(ValueError):
        oracles.ClosedFormSpectrum(((0.0, -1.0),))


@pytest.mark.parametrize("alpha", [2 * PI / 500, 0.3])
def test_mollified_closed_form_matches_convolution(alpha):
    closed = oracles.ClosedFormSpectrum(((0.4, 0.3), (-PI + 0.01, 0.2)), (0.2, 0.1, -0.05))
    thetas = np.array([-PI, -3.0, 0.0, 0.41, 1.0, 3.0])
    fast = closed.mollified(alpha, thetas)
    for th, v in zip(thetas, fast):
        conv, _ = integrate.quad(
            lambda xi: float(oracles.kernel(th, xi, alpha)[()] * closed.continuous_part(np.array([xi]))[0]),
            th - alpha, th + alpha, epsabs=1e-14, limit=200)
        ref = conv + sum(m * float(oracles.kernel(th, a, alpha)) for a, m in closed.atoms)
        assert v == pytest.approx(ref, abs=1e-10)


def test_kernel_constant_agrees_with_fast_path():
    assert oracles.kernel_constant() == pytest.approx(spectral.BUMP_NORMALIZER, rel=1e-13)
    assert oracles.cosine_transform(0, 0.5) == pytest.approx(1.0, abs=1e-12)


def test_l1_distance():
    assert oracles.l1_distance(np.ones(2048), np.zeros(2048)) == pytest.approx(2 * PI)
    with pytest.raises(ValueError):
        oracles.l1_distance(np.ones(10), np.ones(10))


# -- dense oracle --------------------------------------------------------------------


def test_dense_identity():
    gen = np.random.default_rng(0)
    g = gen.standard_normal(7) + 1j * gen.standard_normal(7)
    orc = oracles.dense_eig_oracle(PermutationMap.identity(LatticePartition(1, 7)), g)
    assert np.all(orc.atoms.angle == 0)
    assert orc.atoms.total_mass == pytest.approx(spectral.norm2(g), rel=1e-13)


def test_dense_four_cycle_sign():
    g = np.array([1, 1j, -1, -1j]) / 2
    orc = oracles.dense_eig_oracle(perm_of([1, 2, 3, 0]), g)
    k = int(np.argmax(orc.atoms.mass))
    assert orc.atoms.angle[k] == pytest.approx(-PI / 2)
    assert orc.atoms.mass[k] == pytest.approx(spectral.norm2(g))
    assert np.delete(orc.atoms.mass, k) == pytest.approx(np.zeros(3), abs=1e-15)


def test_dense_eigenvalues_match_numerical_solvers():
    gen = np.random.default_rng(5)
    perm = perm_of(gen.permutation(40))
    orc = oracles.dense_eig_oracle(perm)
    ours = np.sort_complex(np.round(orc.eigvals, 10))
    theirs = np.sort_complex(np.round(np.linalg.eigvals(orc.matrix), 10))
    assert np.abs(ours - theirs).max() < 1e-8
    T, _ = linalg.schur(orc.matrix.astype(complex), output="complex")
    assert np.abs(np.sort_complex(np.round(np.diag(T), 10)) - ours).max() < 1e-8


def test_dense_limit():
    with pytest.raises(ValueError):
        oracles.dense_eig_oracle(perm_of(range(oracles.DENSE_LIMIT + 1)))
    with pytest.raises(ValueError):
        oracles.dense_eig_oracle(perm_of(range(4)), np.ones(5))


def test_dense_density_q16():
    gen = np.random.default_rng(16)
    perm = perm_of(gen.permutation(16))
    g = gen.standard_normal(16) + 1j * gen.standard_normal(16)
    thetas = spectral.theta_grid(256)
    for alpha in (0.05, 0.5, 2.0):
        fast = spectral.density(perm, g, alpha, thetas)
        ref = oracles.dense_eig_oracle(perm, g).density(alpha, thetas)
        assert np.abs(fast - ref).max() <= 1e-9


def test_dense_projections_small():
    gen = np.random.default_rng(17)
    perm = perm_of(gen.permutation(24))
    g = gen.standard_normal(24) + 1j * gen.standard_normal(24)
    orc = oracles.dense_eig_oracle(perm, g)
    d = Interval.arc(2.5, 3.9)
    assert np.abs(spectral.project(perm, g, d) - orc.project(g, d)).max() <= 1e-9
    fast = spectral.project(perm, g, d, mode="mollified", alpha=0.4)
    assert np.abs(fast - orc.project(g, d, mode="mollified", alpha=0.4)).max() <= 1e-9


def test_mollified_indicator_oracle():
    assert oracles.mollified_indicator(Interval.full(), 0.2, 0.3) == pytest.approx(1.0, abs=1e-10)
    assert oracles.mollified_indicator(Interval(1.0, 2.0), 0.0, 0.3) == 0.0
    assert oracles.mollified_indicator(Interval(-1.0, 0.0), 0.0, 0.3) == pytest.approx(0.5, abs=1e-10)
