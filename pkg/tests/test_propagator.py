import numpy as np
import pytest
from scipy.linalg import expm

from mixedorder.errors import ArgumentError, PreconditionError, ResolutionError, SaturationError
from mixedorder.evolution import FrequencyGrid, packet_ladder
from mixedorder.propagator import (
    build_propagator,
    l2_bounded,
    matrix_exp,
    multiplier_growth_probe,
    semigroup_check,
    similarity_defect,
)
from mixedorder.symbols import MatrixSymbol, frequency_norm, scalar_symbol, unit_directions, zero_symbol
from mixedorder.thermoelastic import PlateModel, build_symbol, half_line_matrices, principal_matrix

from .oracles import expm_eig


def test_matrix_exp_zero():
    np.testing.assert_array_equal(matrix_exp(np.zeros((3, 3))), np.eye(3))


def test_matrix_exp_diagonal():
    E = matrix_exp(np.diag([1j, -1.0]))
    np.testing.assert_allclose(E, np.diag([np.exp(1j), np.exp(-1)]), rtol=1e-14, atol=1e-16)


def test_matrix_exp_half_line_matrix():
    a_plus, _ = half_line_matrices(1.0, 1.0)
    ev = np.linalg.eigvals(a_plus)
    assert len(np.unique(np.round(ev, 8))) == 4
    np.testing.assert_allclose(matrix_exp(a_plus), expm_eig(a_plus), atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_matrix_exp_normal_vs_eig(seed):
    rng = np.random.default_rng(seed)
    N = rng.integers(2, 7)
    Q, _ = np.linalg.qr(rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N)))
    lam = rng.normal(size=N) * 3 + 1j * rng.normal(size=N) * 20
    M = Q @ np.diag(lam) @ Q.conj().T
    want = Q @ np.diag(np.exp(lam)) @ Q.conj().T
    got = matrix_exp(M)
    assert np.linalg.norm(got - want) / np.linalg.norm(want) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_matrix_exp_general_vs_scipy(seed):
    rng = np.random.default_rng(100 + seed)
    M = rng.normal(size=(5, 5)) * 4
    np.testing.assert_allclose(matrix_exp(M), expm(M), rtol=1e-11)


def test_matrix_exp_saturation():
    with pytest.raises(SaturationError) as exc:
        matrix_exp(np.diag([2e4, 0.0]))
    assert exc.value.norm == pytest.approx(2e4)
    with pytest.raises(ArgumentError):
        matrix_exp(np.array([[np.nan]]))
    with pytest.raises(ArgumentError):
        matrix_exp(np.ones((2, 3)))


def test_build_propagator_zero_symbol():
    f = build_propagator(zero_symbol(2, 3), FrequencyGrid(2, 16, 2 * np.pi), [0.0, 1.0])
    for t in f.times:
        np.testing.assert_array_equal(f.at(t), np.broadcast_to(np.eye(3), f.at(t).shape))


def test_build_propagator_heat_scalar():
    sym = scalar_symbol(lambda xi: -np.sum(xi * xi, -1), 2.0, 1)
    f = build_propagator(sym, np.array([[2.0]]), [1.0])
    assert f.at(1.0)[0, 0, 0] == pytest.approx(np.exp(-4.0), rel=1e-14)


def test_build_propagator_identity_at_zero_and_det(rng):
    sym, _ = build_symbol(PlateModel("CattaneoInertial", tau=0.5, mu=2.0, n=2))
    pts = rng.normal(size=(40, 2)) * 6
    f = build_propagator(sym, pts, [0.0, 0.5])
    assert np.abs(f.at(0.0) - np.eye(sym.size)).max() <= 1e-14
    det = np.linalg.det(f.at(0.5))
    want = np.exp(0.5 * np.trace(sym(pts), axis1=-2, axis2=-1))
    np.testing.assert_allclose(det, want, rtol=1e-8)


def test_build_propagator_rejects_negative_time():
    with pytest.raises(PreconditionError):
        build_propagator(zero_symbol(1), np.zeros((1, 1)), [-1.0])


def test_build_propagator_flags_saturation():
    sym = scalar_symbol(lambda xi: np.sum(xi * xi, -1), 2.0, 1)
    f = build_propagator(sym, np.array([[1.0], [200.0]]), [1.0])
    assert f.flags[1.0].tolist() == [False, True]


def test_semigroup_cattaneo():
    sym, _ = build_symbol(PlateModel("CattaneoInertial", tau=1, mu=1, n=1))
    f = build_propagator(sym, FrequencyGrid.with_radius(1, 64, 128), [0.0, 0.25, 0.5, 0.75])
    assert semigroup_check(f, 0.25, 0.5).passed
    assert semigroup_check(f, 0.0, 0.5).deviation <= 1e-14


def test_semigroup_diagonal():
    sym = MatrixSymbol(lambda xi: np.einsum("...,ij->...ij", frequency_norm(xi), np.diag([1j, -1.0])),
                       1, 2, [[1, -np.inf], [-np.inf, 1]])
    f = build_propagator(sym, FrequencyGrid.with_radius(1, 16, 64), [0.5, 1.0])
    assert semigroup_check(f, 0.5, 0.5).deviation <= 1e-13


def test_semigroup_fourier():
    sym, w = build_symbol(PlateModel("FourierInertial", mu=1, n=2))
    f = build_propagator(sym, FrequencyGrid.with_radius(2, 32, 32), [0.25, 0.5])
    rep = semigroup_check(f, 0.25, 0.25)
    assert rep.passed and rep.flagged == 0


def test_semigroup_missing_time():
    f = build_propagator(zero_symbol(1), np.zeros((1, 1)), [0.5])
    with pytest.raises(ArgumentError):
        semigroup_check(f, 0.5, 0.5)
    with pytest.raises(ArgumentError):
        f.at(0.7)


def test_similarity_transport(rng):
    model = PlateModel("CattaneoInertial", tau=1, mu=1, n=2)
    sym, w = build_symbol(model)
    assert similarity_defect(sym, w, rng.normal(size=(30, 2)) * 4, t=0.7) <= 1e-10


@pytest.mark.parametrize("k", [2.0, 3.5, 10.0])
def test_scaling_law_homogeneous(k, rng):
    model = PlateModel("DampedPlate", rho=3, alpha=1, n=2)
    xi = rng.normal(size=(10, 2))
    for x in xi:
        lhs = matrix_exp(0.1 * principal_matrix(model, (k * x)[None])[0])
        rhs = matrix_exp(0.1 * k ** 2 * principal_matrix(model, x[None])[0])
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_probe_half_wave_one_dimension():
    sym = scalar_symbol(lambda xi: 1j * frequency_norm(xi), 1.0, 1)
    grid = FrequencyGrid(1, 512, np.pi)
    for p in (4 / 3, 3.0, 6.0):
        res = multiplier_growth_probe(sym, p, 1.0, packet_ladder(grid, [16, 32, 64, 128]), grid)
        assert all(abs(r.ratio - 1.0) <= 1e-6 for r in res.rows)
        assert abs(res.beta) <= 1e-3 and not res.blowup


def test_probe_skew_hermitian_p2(rng):
    H = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    H = H + H.conj().T
    sym = MatrixSymbol(lambda xi: 1j * np.einsum("...,ij->...ij", xi[..., 0], H), 1, 3, np.ones((3, 3)))
    grid = FrequencyGrid(1, 512, 2 * np.pi)
    res = multiplier_growth_probe(sym, 2.0, 1.0, packet_ladder(grid, [8, 16, 32], component_vector=(1, 1j, 0)), grid)
    for r in res.rows:
        assert abs(r.ratio - 1.0) <= 1e-8


def test_probe_refuses_under_resolved():
    sym = scalar_symbol(lambda xi: 1j * frequency_norm(xi), 1.0, 1)
    grid = FrequencyGrid(1, 64, np.pi)
    with pytest.raises(ResolutionError) as exc:
        multiplier_growth_probe(sym, 4.0, 1.0, packet_ladder(grid, [16, 32]), grid)
    assert exc.value.required_points >= 128
    assert "points_per_axis" in str(exc.value)


def test_probe_rejects_bad_p():
    sym = scalar_symbol(lambda xi: 1j * frequency_norm(xi), 1.0, 1)
    grid = FrequencyGrid(1, 512, np.pi)
    with pytest.raises(PreconditionError):
        multiplier_growth_probe(sym, 1.0, 1.0, packet_ladder(grid, [16]), grid)


def test_l2_bounded_models():
    for model in (PlateModel("CattaneoInertial", tau=1, mu=1, n=2), PlateModel("FourierInertial", mu=1, n=2),
                  PlateModel("DampedPlate", rho=1, alpha=0.5, n=1)):
        sym, w = build_symbol(model)
        from mixedorder.reduction import reduce
        assert l2_bounded(reduce(sym, w)).bounded
    grow = scalar_symbol(frequency_norm, 1.0, 2)
    assert not l2_bounded(grow, directions=unit_directions(2, 4)).bounded
