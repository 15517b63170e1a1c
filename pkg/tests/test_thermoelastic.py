import numpy as np
import pytest

from mixedorder.errors import ArgumentError, DomainError, PreconditionError
from mixedorder.evolution import FrequencyGrid
from mixedorder.reduction import reduce
from mixedorder.spectral import Case, quasi_hyperbolicity
from mixedorder.symbols import evaluate, japanese
from mixedorder.thermoelastic import (
    PlateModel,
    Variant,
    approximate_diagonalize,
    build_symbol,
    cattaneo_half_line_check,
    cattaneo_mu0_principal_eigs,
    cattaneo_principal_charpoly,
    diagonal_branch_symbols,
    eigenvalue_asymptotics,
    energy_symmetrizer,
    fourier_b,
    model_verdict,
    stated_verdict,
    closed_form_charpoly,
    reduced_symbol,
    residual_bound,
    symmetrized_principal,
)

from .oracles import cattaneo_principal_sympy, sympy_charpoly


@pytest.mark.parametrize("kw", [
    dict(variant="CattaneoInertial", tau=0, mu=1),
    dict(variant="CattaneoInertial", tau=1, mu=0),
    dict(variant="CattaneoNoInertia", tau=1, mu=1),
    dict(variant="FourierInertial", tau=1, mu=1),
    dict(variant="FourierNoInertia", tau=0, mu=1),
    dict(variant="DampedPlate", rho=0, alpha=1),
    dict(variant="DampedPlate", rho=1, alpha=1.5),
    dict(variant="Unknown"),
    dict(variant="CattaneoInertial", tau=1, mu=1, n=0),
])
def test_model_invariants(kw):
    with pytest.raises(ArgumentError):
        PlateModel(**kw)


@pytest.mark.parametrize("model,size,weights", [
    (PlateModel("CattaneoInertial", tau=1, mu=1, n=2), 5, [2, 1, 0, 0, 0]),
    (PlateModel("CattaneoNoInertia", tau=1, n=3), 6, [2, 0, 0, 0, 0, 0]),
    (PlateModel("FourierInertial", mu=1, n=2), 3, [2, 1, 0]),
    (PlateModel("DampedPlate", rho=2, alpha=1, n=3), 2, [2, 0]),
])
def test_catalog_sizes_and_weights(model, size, weights):
    sym, w = build_symbol(model)
    assert sym.size == size == model.size
    np.testing.assert_array_equal(w.exponents(), weights)


def test_cattaneo_entries():
    sym, _ = build_symbol(PlateModel("CattaneoInertial", tau=1, mu=1, n=1))
    a = evaluate(sym, [1.0])
    assert a[1, 0] == pytest.approx(-0.5)
    assert a[1, 2] == pytest.approx(0.5)
    assert a[3, 2] == pytest.approx(1j)
    assert a[3, 3] == pytest.approx(-1)


def test_fourier_entries():
    sym, _ = build_symbol(PlateModel("FourierInertial", mu=1, n=1))
    np.testing.assert_allclose(evaluate(sym, [1.0])[2], [0, -1, -1])


def test_damped_plate_entries():
    model = PlateModel("DampedPlate", rho=2, alpha=1, n=1)
    sym, w = build_symbol(model)
    np.testing.assert_allclose(evaluate(sym, [1.0])[1], [-1, -2])
    red = reduce(sym, w)
    for r in (1.0, 3.0, 10.0):
        assert evaluate(red, [r])[1, 0] == pytest.approx(-r ** 4 / japanese(np.array([r])) ** 2)


@pytest.mark.parametrize("variant,kw", [("CattaneoInertial", dict(tau=1, mu=1)), ("CattaneoNoInertia", dict(tau=1))])
def test_cattaneo_reduced_orders(variant, kw):
    for n in (1, 2):
        model = PlateModel(variant, n=n, **kw)
        red, _ = reduced_symbol(model)
        want = 1.0 if variant == "CattaneoInertial" else 2.0
        assert red.order == want
        # radial fit of the spectral radius recovers the order
        r = 2.0 ** np.arange(6, 12)
        xi = np.zeros((len(r), n))
        xi[:, 0] = r
        rad = np.abs(np.linalg.eigvals(red(xi))).max(axis=-1)
        assert np.polyfit(np.log(r), np.log(rad), 1)[0] == pytest.approx(want, abs=0.05)


@pytest.mark.parametrize("r,want", [(1.0, [1, 0, 3, 0, 1]), (2.0, [1, 0, 12, 0, 16])])
def test_charpoly_examples(r, want):
    got = cattaneo_principal_charpoly(1.0, 1.0, r, 1)
    np.testing.assert_allclose(got, want, atol=1e-9)


def test_charpoly_extra_zero_roots():
    c = cattaneo_principal_charpoly(1.0, 1.0, 1.0, 3)
    assert len(c) == 7
    np.testing.assert_allclose(c[-2:], 0, atol=1e-10)
    np.testing.assert_allclose(np.trim_zeros(np.round(c, 9), "b"), [1, 0, 3, 0, 1])


@pytest.mark.parametrize("tau,mu,r,n", [(1, 1, 1, 1), (0.5, 2, 3, 2), (3, 0.25, 0.7, 1), (2, 2, 5, 3)])
def test_charpoly_against_sympy(tau, mu, r, n):
    want_small = sympy_charpoly(cattaneo_principal_sympy(tau, mu, r, 1))
    got = cattaneo_principal_charpoly(tau, mu, r, n)
    np.testing.assert_allclose(got[:5], want_small, rtol=1e-10, atol=1e-10 * r ** 4)
    np.testing.assert_allclose(closed_form_charpoly(tau, mu, r, n), got, rtol=1e-10, atol=1e-10 * r ** 4)


def test_mu0_principal_eigenvalues():
    for r, amp in ((1.0, 1.41421356), (2.0, 5.65685425)):
        ev = cattaneo_mu0_principal_eigs(r)
        big = ev[np.abs(ev) > 1e-9]
        np.testing.assert_allclose(np.sort(big.imag), [-amp, amp], atol=1e-8)
        np.testing.assert_allclose(big.real, 0, atol=1e-12)
        assert np.abs(ev[np.abs(ev) <= 1e-9]).max() <= 1e-12
        np.testing.assert_allclose(np.abs(big), np.sqrt(2) * r ** 2, rtol=1e-12)
    assert np.abs(cattaneo_mu0_principal_eigs(1e-8)).max() <= 1e-12


def test_mu0_dimension():
    ev = cattaneo_mu0_principal_eigs(1.5, n=3)
    assert len(ev) == 6 and np.sum(np.abs(ev) > 1e-9) == 2


def test_half_line_example():
    chk = cattaneo_half_line_check(1.0, 1.0)
    assert chk.diagonalizable
    np.testing.assert_allclose(np.sort(np.abs(chk.eigenvalues_plus.imag))[::2], [0.618034, 1.618034], atol=1e-6)


def test_half_line_sweep():
    grid = np.geomspace(0.1, 10.0, 5)
    for tau in grid:
        for mu in grid:
            chk = cattaneo_half_line_check(tau, mu)
            assert chk.diagonalizable and chk.margin >= 1e-8 and chk.max_real <= 1e-10 * max(1, chk.margin)


def test_diagonalize_example():
    res = approximate_diagonalize(1.0, 2.0)
    np.testing.assert_allclose(np.diag(res.D), [-4, 2j, -2j])
    assert res.R[0, 0] == pytest.approx(4 / 3)
    assert res.identity_residual <= 1e-10 * res.scale


def test_diagonalize_vector_input():
    res = approximate_diagonalize(1.0, [1.2, 1.6])
    assert res.r == pytest.approx(2.0)


@pytest.mark.parametrize("mu", [0.25, 1.0, 4.0])
def test_diagonalize_identity_range(mu):
    for r in np.geomspace(2 / np.sqrt(mu), 1e3 / np.sqrt(mu), 25):
        res = approximate_diagonalize(mu, r)
        assert res.identity_residual <= 1e-10 * res.scale
        assert res.numeric_inverse_residual <= 1e-10
        # S^-1 b S minus D is exactly R
        np.testing.assert_allclose(res.S_inv @ fourier_b(mu, r) @ res.S, res.D + res.R, atol=1e-10 * res.scale)


def test_diagonalize_domain():
    with pytest.raises(DomainError, match="2/sqrt"):
        approximate_diagonalize(1.0, 1.5)
    with pytest.raises(PreconditionError):
        approximate_diagonalize(0.0, 5.0)


def test_residual_bound():
    rb = residual_bound(1.0, 2.0 ** np.arange(1, 9))
    assert rb.exponent <= 0.05
    assert np.all(np.isfinite(rb.norms))
    floors = [residual_bound(1.0, 2.0 ** np.arange(k, 9)).sup for k in (1, 2, 3)]
    assert floors[0] >= floors[1] >= floors[2]
    with pytest.raises(PreconditionError):
        residual_bound(1.0, [1.0, 2.0])


def test_residual_entry_limit():
    for mu in (1.0, 4.0):
        res = approximate_diagonalize(mu, 1e5)
        assert res.R[1, 0] == pytest.approx(1 / (2 * mu), rel=1e-4)


def test_residual_mu_scaling():
    s1 = residual_bound(1.0, 2.0 ** np.arange(1, 9)).norms[-1]
    s4 = residual_bound(4.0, 2.0 ** np.arange(1, 9)).norms[-1]
    assert s1 / s4 == pytest.approx(4.0, rel=0.05)


def test_diagonal_branches_classify():
    from mixedorder.spectral import classify
    b = [classify(s) for s in diagonal_branch_symbols(1.0, 2)]
    assert b[0].case == Case.PARAMETER_ELLIPTIC
    assert b[1].case == Case.ONLY_P2_OR_N1 and b[2].case == Case.ONLY_P2_OR_N1
    b1 = [classify(s) for s in diagonal_branch_symbols(1.0, 1)]
    assert all(v.permits(4) for v in b1)


def test_energy_symmetrizer_dissipative():
    for model in (PlateModel("CattaneoInertial", tau=0.5, mu=2, n=2), PlateModel("FourierInertial", mu=3, n=1)):
        S = energy_symmetrizer(model)
        assert np.allclose(S, np.diag(np.diag(S)))
        sym = symmetrized_principal(model)
        xi = np.array([[0.6, 0.8]]) if model.n == 2 else np.array([[1.0]])
        A = sym(xi)[0]
        assert np.linalg.eigvalsh(A + A.conj().T).max() <= 1e-12


@pytest.mark.parametrize("variant,kw", [
    ("CattaneoInertial", dict(tau=1, mu=1)),
    ("CattaneoNoInertia", dict(tau=1)),
    ("FourierInertial", dict(mu=1)),
    ("DampedPlate", dict(rho=3, alpha=1)),
    ("DampedPlate", dict(rho=1, alpha=0.5)),
])
@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("p", [4 / 3, 4.0])
def test_model_verdict_agrees(variant, kw, n, p):
    rec = model_verdict(PlateModel(variant, n=n, **kw), p)
    assert rec.consistent and rec.applicable
    assert rec.analyzer_well_posed == stated_verdict(PlateModel(variant, n=n, **kw), p)


def test_model_verdict_examples():
    assert model_verdict(PlateModel("CattaneoInertial", tau=1, mu=1, n=1), 4).stated_well_posed is True
    assert model_verdict(PlateModel("CattaneoNoInertia", tau=1, n=1), 4).stated_well_posed is False
    rec = model_verdict(PlateModel("FourierInertial", mu=1, n=2), 4)
    assert rec.stated_well_posed is False and rec.route.startswith("approximate diagonalization")
    assert "OnlyP2orN1" in rec.cases


def test_model_verdict_citation_only():
    rec = model_verdict(PlateModel("FourierNoInertia", n=2), 4)
    assert not rec.applicable and rec.stated_well_posed and rec.analyzer_well_posed is None


def test_model_verdict_p2():
    rec = model_verdict(PlateModel("CattaneoInertial", tau=1, mu=1, n=2), 2)
    assert rec.stated_well_posed and rec.analyzer_well_posed


def test_model_verdict_rejects_p():
    with pytest.raises(ArgumentError):
        model_verdict(PlateModel("DampedPlate", n=1), 1.0)


@pytest.mark.parametrize("model", [
    PlateModel("CattaneoInertial", tau=1, mu=1, n=1),
    PlateModel("CattaneoInertial", tau=0.3, mu=2, n=2),
    PlateModel("CattaneoNoInertia", tau=1, n=1),
    PlateModel("FourierInertial", mu=1, n=2),
])
def test_eigenvalue_asymptotics(model):
    found, exponent, real_bound = eigenvalue_asymptotics(model)
    assert found and exponent >= 0.9


@pytest.mark.parametrize("model", [
    PlateModel("CattaneoInertial", tau=1, mu=1, n=2),
    PlateModel("CattaneoNoInertia", tau=1, n=2),
    PlateModel("FourierInertial", mu=1, n=2),
    PlateModel("DampedPlate", rho=3, alpha=1, n=2),
    PlateModel("DampedPlate", rho=1, alpha=0, n=2),
])
def test_catalog_quasi_hyperbolic(model):
    sym, w = build_symbol(model)
    for s in (sym, reduce(sym, w)):
        rep = quasi_hyperbolicity(s, FrequencyGrid.with_radius(2, 64, 64))
        assert rep.quasi_hyperbolic and rep.M_a_estimate <= 0.05


def test_variant_enum_values():
    assert {v.value for v in Variant} == {"CattaneoInertial", "CattaneoNoInertia", "FourierInertial",
                                          "FourierNoInertia", "DampedPlate"}
