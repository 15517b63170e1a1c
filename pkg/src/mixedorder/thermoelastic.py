"""Thermoelastic plate models: symbols, closed-form principal parts and the
approximate diagonalization of the Fourier-law model with rotational inertia.

State variables are ``(u, u_t, theta, q)`` for the Cattaneo models
(size n + 3), ``(u, u_t, theta)`` for the Fourier-law models and
``(u, u_t)`` for the damped plate. Symbols follow the transform convention
``op[i xi_j] = -d_j``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArgumentError, DomainError, IntegrityError, PreconditionError
from .reduction import WeightVector, reduce
from .symbols import NEG_INF, HomogeneousComponent, MatrixSymbol, frequency_norm, scalar_symbol

log = logging.getLogger(__name__)


class Variant(str, enum.Enum):
    CATTANEO_INERTIAL = "CattaneoInertial"
    CATTANEO_NO_INERTIA = "CattaneoNoInertia"
    FOURIER_INERTIAL = "FourierInertial"
    FOURIER_NO_INERTIA = "FourierNoInertia"
    DAMPED_PLATE = "DampedPlate"


@dataclass(frozen=True)
class PlateModel:
    """Catalog entry. ``rho`` and ``alpha`` only matter for the damped plate."""

    variant: Variant
    tau: float = 0.0
    mu: float = 0.0
    rho: float = 1.0
    alpha: float = 1.0
    n: int = 1

    def __post_init__(self):
        try:
            object.__setattr__(self, "variant", Variant(self.variant))
        except ValueError:
            raise ArgumentError(f"unknown model variant {self.variant!r}") from None
        for name in ("tau", "mu", "rho", "alpha"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ArgumentError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if int(self.n) != self.n or self.n < 1:
            raise ArgumentError("n must be a positive integer")
        object.__setattr__(self, "n", int(self.n))
        tau, mu, v = self.tau, self.mu, self.variant
        if tau < 0 or mu < 0:
            raise ArgumentError("tau and mu must be nonnegative")
        need = {
            Variant.CATTANEO_INERTIAL: (tau > 0 and mu > 0, "tau > 0 and mu > 0"),
            Variant.CATTANEO_NO_INERTIA: (tau > 0 and mu == 0, "tau > 0 and mu = 0"),
            Variant.FOURIER_INERTIAL: (tau == 0 and mu > 0, "tau = 0 and mu > 0"),
            Variant.FOURIER_NO_INERTIA: (tau == 0 and mu == 0, "tau = 0 and mu = 0"),
            Variant.DAMPED_PLATE: (self.rho > 0 and 0 <= self.alpha <= 1, "rho > 0 and 0 <= alpha <= 1"),
        }
        ok, msg = need[v]
        if not ok:
            raise ArgumentError(f"{v.value} requires {msg}")

    @property
    def size(self):
        if self.variant in (Variant.CATTANEO_INERTIAL, Variant.CATTANEO_NO_INERTIA):
            return self.n + 3
        if self.variant == Variant.DAMPED_PLATE:
            return 2
        return 3

    def describe(self):
        return {"variant": self.variant.value, "tau": self.tau, "mu": self.mu,
                "rho": self.rho, "alpha": self.alpha, "n": self.n}


def _weights(model):
    v, n = model.variant, model.n
    if v == Variant.CATTANEO_INERTIAL:
        return WeightVector(((2.0, 1), (1.0, 1), (0.0, 1), (0.0, n)))
    if v == Variant.CATTANEO_NO_INERTIA:
        return WeightVector(((2.0, 1), (0.0, 1), (0.0, 1), (0.0, n)))
    if v == Variant.FOURIER_INERTIAL:
        return WeightVector.scalar(2.0, 1.0, 0.0)
    if v == Variant.FOURIER_NO_INERTIA:
        return WeightVector.scalar(2.0, 0.0, 0.0)
    return WeightVector.scalar(2.0, 0.0)


def _plate_orders(model):
    """Orders of the unreduced symbol."""
    v, n, mu = model.variant, model.n, model.mu
    if v == Variant.DAMPED_PLATE:
        return np.array([[NEG_INF, 0.0], [4.0, 2.0 * model.alpha]])
    damp = 2.0 if mu > 0 else 4.0  # order of -r^4/(1 + mu r^2)
    cpl = 0.0 if mu > 0 else 2.0  # order of r^2/(1 + mu r^2)
    if v in (Variant.FOURIER_INERTIAL, Variant.FOURIER_NO_INERTIA):
        return np.array([[NEG_INF, 0.0, NEG_INF], [damp, NEG_INF, cpl], [NEG_INF, 2.0, 2.0]])
    N = n + 3
    om = np.full((N, N), NEG_INF)
    om[0, 1] = 0.0
    om[1, 0] = damp
    om[1, 2] = cpl
    om[2, 1] = 2.0
    om[2, 3:] = 1.0
    om[3:, 2] = 1.0
    om[np.arange(3, N), np.arange(3, N)] = 0.0
    return om


def _plate_func(model):
    v, n, tau, mu = model.variant, model.n, model.tau, model.mu

    if v == Variant.DAMPED_PLATE:
        rho, alpha = model.rho, model.alpha

        def func(xi):
            r = frequency_norm(xi)
            out = np.zeros(r.shape + (2, 2), dtype=complex)
            out[..., 0, 1] = 1.0
            out[..., 1, 0] = -r ** 4
            out[..., 1, 1] = -rho * r ** (2.0 * alpha)
            return out

        return func

    def func(xi):
        r = frequency_norm(xi)
        r2 = r * r
        inertia = 1.0 + mu * r2
        N = 3 if tau == 0 else n + 3
        out = np.zeros(r.shape + (N, N), dtype=complex)
        out[..., 0, 1] = 1.0
        out[..., 1, 0] = -r2 * r2 / inertia
        out[..., 1, 2] = r2 / inertia
        out[..., 2, 1] = -r2
        if tau == 0:
            out[..., 2, 2] = -r2
        else:
            for k in range(n):
                out[..., 2, 3 + k] = 1j * xi[..., k]
                out[..., 3 + k, 2] = 1j * xi[..., k] / tau
                out[..., 3 + k, 3 + k] = -1.0 / tau
        return out

    return func


def build_symbol(model):
    """Unreduced symbol of the model and its canonical weight vector."""
    sym = MatrixSymbol(_plate_func(model), model.n, model.size, _plate_orders(model),
                       name=model.variant.value, meta={"model": model.describe()})
    return sym, _weights(model)


def principal_matrix(model, xi):
    """Closed-form principal part of the reduced symbol at ``xi`` (batched)."""
    xi = np.asarray(xi, dtype=float)
    r = frequency_norm(xi)
    v, n, tau, mu = model.variant, model.n, model.tau, model.mu
    if v == Variant.DAMPED_PLATE:
        out = np.zeros(r.shape + (2, 2), dtype=complex)
        out[..., 0, 1] = r ** 2
        out[..., 1, 0] = -r ** 2
        if model.alpha == 1.0:
            out[..., 1, 1] = -model.rho * r ** 2
        return out
    if v == Variant.FOURIER_INERTIAL:
        out = np.zeros(r.shape + (3, 3), dtype=complex)
        out[..., 2, 2] = -r ** 2
        return out
    if v == Variant.FOURIER_NO_INERTIA:
        out = np.zeros(r.shape + (3, 3), dtype=complex)
        out[..., 0, 1] = r ** 2
        out[..., 1, 0] = -r ** 2
        out[..., 1, 2] = r ** 2
        out[..., 2, 1] = -r ** 2
        out[..., 2, 2] = -r ** 2
        return out
    N = n + 3
    out = np.zeros(r.shape + (N, N), dtype=complex)
    if v == Variant.CATTANEO_INERTIAL:
        out[..., 0, 1] = r
        out[..., 1, 0] = -r / mu
        out[..., 1, 2] = r / mu
        out[..., 2, 1] = -r
        for k in range(n):
            out[..., 2, 3 + k] = 1j * xi[..., k]
            out[..., 3 + k, 2] = 1j * xi[..., k] / tau
    else:
        out[..., 0, 1] = r ** 2
        out[..., 1, 0] = -r ** 2
        out[..., 1, 2] = r ** 2
        out[..., 2, 1] = -r ** 2
    return out


def principal_degree(model):
    return 1.0 if model.variant == Variant.CATTANEO_INERTIAL else 2.0


def reduced_symbol(model):
    """Reduced symbol with the closed-form principal part attached as component 0."""
    sym, w = build_symbol(model)
    red = reduce(sym, w)
    comp = HomogeneousComponent(principal_degree(model), lambda xi: principal_matrix(model, xi),
                                strict=True, dim=model.n)
    return replace(red, components=(comp,)), w


def energy_symmetrizer(model):
    """Constant diagonal ``E`` such that ``E a0 E^-1`` is skew-dominant, i.e. its
    Hermitian part is <= 0 (the energy structure of the principal part)."""
    v, n = model.variant, model.n
    if v == Variant.CATTANEO_INERTIAL:
        d = [1.0, np.sqrt(model.mu), 1.0] + [np.sqrt(model.tau)] * n
    elif v == Variant.FOURIER_INERTIAL:
        d = [1.0, np.sqrt(model.mu), 1.0]
    else:
        d = [1.0] * model.size
    return np.diag(np.asarray(d, dtype=float))


def symmetrized_principal(model):
    """The closed-form principal symbol conjugated by the energy symmetrizer."""
    E = energy_symmetrizer(model)
    Einv = np.linalg.inv(E)
    mu0 = principal_degree(model)
    orders = np.where(np.any(principal_matrix(model, np.eye(model.n)) != 0, axis=0), mu0, NEG_INF)

    def func(xi):
        return E @ principal_matrix(model, xi) @ Einv

    return MatrixSymbol(func, model.n, model.size, orders, name=f"sym-principal({model.variant.value})",
                        meta={"model": model.describe()})


# ----------------------------------------------------------------------------
# Cattaneo checks


def _charpoly(M):
    """Coefficients of ``det(lambda - M)``, highest power first (Faddeev-LeVerrier)."""
    N = M.shape[0]
    coeffs = [1.0 + 0j]
    Mk = np.zeros_like(M)
    eye = np.eye(N)
    for k in range(1, N + 1):
        Mk = M @ (Mk + coeffs[-1] * eye)
        coeffs.append(-np.trace(Mk) / k)
    return np.array(coeffs)


def closed_form_charpoly(tau, mu, r, n):
    """``lambda^(n-1) (lambda^4 + (1/tau + 2/mu) r^2 lambda^2 + r^4/(tau mu))``."""
    base = np.array([1.0, 0.0, (1.0 / tau + 2.0 / mu) * r * r, 0.0, r ** 4 / (tau * mu)])
    return np.concatenate([base, np.zeros(n - 1)])


def cattaneo_principal_charpoly(tau, mu, r, n, rtol=1e-10):
    """Characteristic polynomial of the Cattaneo principal symbol at ``|xi| = r``.

    Computed from the constructed reduced symbol (scaling limit) along a
    fixed direction, then checked coefficient-wise against the closed form.
    """
    if tau <= 0 or mu <= 0 or r <= 0:
        raise PreconditionError("tau, mu and r must be positive")
    from .symbols import principal_part, unit_directions

    model = PlateModel(Variant.CATTANEO_INERTIAL, tau=tau, mu=mu, n=n)
    red, _ = reduced_symbol(model)
    eta = unit_directions(n, 1)[0] if n > 1 else np.array([1.0])
    A = principal_part(red)(r * eta[None, :])[0]
    got = _charpoly(A)
    want = closed_form_charpoly(tau, mu, r, n)
    # the coefficient of lambda^(N-k) is homogeneous of degree k in r
    scale = np.maximum(np.abs(want), float(r) ** np.arange(len(want)))
    if np.any(np.abs(got - want) > rtol * scale):
        raise IntegrityError(f"characteristic polynomial mismatch: got {got}, expected {want}")
    return got.real.copy() if np.all(np.abs(got.imag) <= rtol * scale) else got


def cattaneo_mu0_principal_eigs(r, n=1, tau=1.0):
    """Eigenvalues of the closed-form principal part of the Cattaneo model without
    inertia; the nontrivial pair is ``+-sqrt(2) r^2 i``."""
    if r < 0:
        raise PreconditionError("r must be nonnegative")
    model = PlateModel(Variant.CATTANEO_NO_INERTIA, tau=tau, mu=0.0, n=n)
    xi = np.zeros((1, n))
    xi[0, 0] = r
    ev = np.linalg.eigvals(principal_matrix(model, xi)[0])
    return ev[np.lexsort((ev.imag, np.abs(ev)))[::-1]]


def half_line_matrices(tau, mu):
    """``a+`` and ``a-`` with ``a0(xi) = xi a+`` (xi > 0), ``xi a-`` (xi < 0), n = 1."""
    model = PlateModel(Variant.CATTANEO_INERTIAL, tau=tau, mu=mu, n=1)
    a_plus = principal_matrix(model, np.array([[1.0]]))[0]
    a_minus = -principal_matrix(model, np.array([[-1.0]]))[0]
    return a_plus, a_minus


@dataclass
class HalfLineCheck:
    eigenvalues_plus: np.ndarray
    eigenvalues_minus: np.ndarray
    margin: float
    max_real: float
    condition: float
    diagonalizable: bool


def cattaneo_half_line_check(tau, mu, margin_tol=1e-8):
    """Both half-line matrices must have four distinct purely imaginary
    eigenvalues (hence be diagonalizable with imaginary spectrum)."""
    out = []
    margins, reals, conds = [], [], []
    for a in half_line_matrices(tau, mu):
        ev, V = np.linalg.eig(a)
        gaps = np.where(np.eye(4, dtype=bool), np.inf, np.abs(ev[:, None] - ev[None, :]))
        margins.append(float(gaps.min()))
        reals.append(float(np.abs(ev.real).max()))
        conds.append(float(np.linalg.cond(V)))
        out.append(np.sort_complex(ev))
    margin = min(margins)
    max_re = max(reals)
    cond = max(conds)
    ok = margin >= margin_tol and max_re <= 1e-10 * max(1.0, margin) and np.isfinite(cond)
    return HalfLineCheck(out[0], out[1], margin, max_re, cond, bool(ok))


# ----------------------------------------------------------------------------
# Fourier-law model with rotational inertia: approximate diagonalization


def fourier_b(mu, r):
    """``b = r^2 a0 + r a1``: the homogeneous approximation of the reduced
    Fourier-law symbol."""
    a0 = np.diag([0.0, 0.0, -1.0]).astype(complex)
    a1 = np.array([[0, 1, 0], [-1 / mu, 0, 1 / mu], [0, -1, 0]], dtype=complex)
    return r * r * a0 + r * a1


def closed_form_S(mu, r):
    sm = np.sqrt(mu)
    return (1 / sm) * np.array([
        [0, sm, sm],
        [1 / (sm * r), 1j, -1j],
        [-sm, -1j / r, 1j / r],
    ], dtype=complex)


def closed_form_S_inv(mu, r):
    sm = np.sqrt(mu)
    den = 2 * (mu * r * r - 1)
    return (1 / den) * np.array([
        [0, -2 * mu * r, -2 * mu * r * r],
        [mu * r * r - 1, -1j * mu * sm * r * r, -1j * sm * r],
        [mu * r * r - 1, 1j * mu * sm * r * r, 1j * sm * r],
    ], dtype=complex)


def closed_form_D(mu, r):
    sm = np.sqrt(mu)
    return np.diag([-r * r, 1j * r / sm, -1j * r / sm]).astype(complex)


def closed_form_R(mu, r):
    sm = np.sqrt(mu)
    den = 2 * (mu * r * r - 1)
    r2 = r * r
    w = 1j * r / sm
    return (1 / den) * np.array([
        [2 * r2, 2 * r2 + 2 * w, 2 * r2 - 2 * w],
        [r2 - 1 / mu + w, -r2 + w, r2 + w],
        [r2 - 1 / mu - w, r2 - w, -r2 - w],
    ], dtype=complex)


@dataclass
class DiagonalizationResult:
    r: float
    S: np.ndarray
    S_inv: np.ndarray
    D: np.ndarray
    R: np.ndarray
    identity_residual: float
    inverse_residual: float
    numeric_inverse_residual: float

    @property
    def scale(self):
        return 1.0 + self.r ** 2


def approximate_diagonalize(mu, xi, rtol=1e-10):
    """``S^-1 b S = D + R`` with the closed-form S, S^-1, D and R.

    Accepts ``xi`` as a vector or its norm. Requires ``|xi| >= 2/sqrt(mu)``
    (the closed-form inverse is singular at ``mu |xi|^2 = 1``).
    """
    if mu <= 0:
        raise PreconditionError("mu must be positive")
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(xi, dtype=float))))
    floor = 2.0 / np.sqrt(mu)
    if r < floor * (1 - 1e-12):
        raise DomainError(f"|xi| = {r:.6g} below the diagonalization threshold 2/sqrt(mu) = {floor:.6g}")
    S, Si, D, R = closed_form_S(mu, r), closed_form_S_inv(mu, r), closed_form_D(mu, r), closed_form_R(mu, r)
    b = fourier_b(mu, r)
    ident = float(np.linalg.norm(Si @ b @ S - D - R))
    inv = float(np.linalg.norm(S @ Si - np.eye(3)))
    num = float(np.linalg.norm(np.linalg.inv(S) - Si) / np.linalg.norm(Si))
    res = DiagonalizationResult(r, S, Si, D, R, ident, inv, num)
    if ident > rtol * res.scale:
        raise IntegrityError(f"diagonalization identity residual {ident:.3g} at |xi| = {r:.6g}")
    if inv > 1e-12 * max(1.0, np.linalg.cond(S)) or num > 1e-10:
        raise IntegrityError(f"closed-form S^-1 does not invert S at |xi| = {r:.6g} (residual {inv:.3g})")
    return res


@dataclass
class ResidualBound:
    radii: np.ndarray
    norms: np.ndarray
    sup: float
    exponent: float


def residual_bound(mu, radii):
    """Sup of ``||R(xi)||_F`` over a radius ladder and its fitted radial exponent."""
    radii = np.asarray(radii, dtype=float)
    floor = 2.0 / np.sqrt(mu)
    if np.any(radii < floor * (1 - 1e-12)):
        raise PreconditionError(f"radii must be >= 2/sqrt(mu) = {floor:.6g}")
    norms = np.array([np.linalg.norm(closed_form_R(mu, r)) for r in radii])
    exponent = float(np.polyfit(np.log(radii), np.log(norms), 1)[0]) if len(radii) > 1 else 0.0
    return ResidualBound(radii, norms, float(norms.max()), exponent)


def diagonal_branch_symbols(mu, n):
    """Entries of D as scalar symbols."""
    sm = np.sqrt(mu)
    return [
        scalar_symbol(lambda xi: -frequency_norm(xi) ** 2, 2.0, n, name="D1=-|xi|^2"),
        scalar_symbol(lambda xi: 1j * frequency_norm(xi) / sm, 1.0, n, name="D2=i|xi|/sqrt(mu)"),
        scalar_symbol(lambda xi: -1j * frequency_norm(xi) / sm, 1.0, n, name="D3=-i|xi|/sqrt(mu)"),
    ]


# ----------------------------------------------------------------------------
# verdicts


def stated_verdict(model, p, n=None):
    """Well-posedness in L^p as stated for the catalog."""
    n = model.n if n is None else n
    if p == 2:
        return True
    v = model.variant
    if v in (Variant.CATTANEO_INERTIAL, Variant.FOURIER_INERTIAL):
        return n == 1
    if v == Variant.CATTANEO_NO_INERTIA:
        return False
    if v == Variant.FOURIER_NO_INERTIA:
        return True
    return model.alpha == 1.0


STATED_REASON = {
    Variant.CATTANEO_INERTIAL: "well-posed for p != 2 iff n = 1",
    Variant.CATTANEO_NO_INERTIA: "not well-posed for p != 2 (no C0-semigroup)",
    Variant.FOURIER_INERTIAL: "well-posed for p != 2 iff n = 1",
    Variant.FOURIER_NO_INERTIA: "analytic semigroup for all p (cited; no analyzer pipeline)",
    Variant.DAMPED_PLATE: "alpha = 1: well-posed for all p; alpha < 1: not well-posed for p != 2",
}


@dataclass
class VerdictRecord:
    model: dict
    p: float
    n: int
    stated_well_posed: bool
    analyzer_well_posed: bool | None
    route: str
    cases: list = field(default_factory=list)
    applicable: bool = True
    note: str = ""

    @property
    def consistent(self):
        return (not self.applicable) or self.analyzer_well_posed == self.stated_well_posed

    def as_dict(self):
        return {"model": self.model, "p": self.p, "n": self.n,
                "stated_well_posed": self.stated_well_posed,
                "analyzer_well_posed": self.analyzer_well_posed,
                "route": self.route, "cases": self.cases,
                "applicable": self.applicable, "consistent": self.consistent,
                "note": self.note}


def analyze(model, p, seed=None):
    """Analyzer prediction for the model; returns ``(well_posed, route, verdicts)``."""
    from .spectral import classify

    sym, w = build_symbol(model)
    if p == 2:
        from .propagator import l2_bounded

        red = reduce(sym, w)
        ok = l2_bounded(red)
        return ok.bounded, "L2 propagator bound", [ok.as_dict()]
    main = classify(sym, w, model.n, seed=seed)
    verdicts = [main]
    if model.variant == Variant.FOURIER_INERTIAL:
        branch = [classify(s, None, model.n, seed=seed) for s in diagonal_branch_symbols(model.mu, model.n)]
        verdicts += branch
        perm = [v.permits(p) for v in branch]
        ok = None if any(x is None for x in perm) else all(perm)
        return ok, "approximate diagonalization branches", verdicts
    return main.permits(p), "principal symbol classification", verdicts


def model_verdict(model, p, n=None, seed=None):
    """Stated verdict paired with the analyzer cross-check.

    Raises IntegrityError when the two disagree.
    """
    if n is not None and n != model.n:
        model = replace(model, n=int(n))
    if not (1 < p < np.inf):
        raise ArgumentError("p must lie in (1, inf)")
    stated = stated_verdict(model, p)
    if model.variant == Variant.FOURIER_NO_INERTIA:
        return VerdictRecord(model.describe(), p, model.n, stated, None, "citation only",
                             applicable=False, note=STATED_REASON[model.variant])
    ok, route, verdicts = analyze(model, p, seed)
    cases = [v.case.value if hasattr(v, "case") else v for v in verdicts]
    rec = VerdictRecord(model.describe(), p, model.n, stated, ok, route, cases,
                        note=STATED_REASON[model.variant])
    if not rec.consistent:
        raise IntegrityError(
            f"{model.variant.value} n={model.n} p={p}: stated well-posed={stated}, analyzer={ok} ({cases})")
    return rec


def eigenvalue_asymptotics(model, radii=None):
    """Branch of the full symbol with bounded real part and growing imaginary part.

    Returns ``(found, exponent, real_bound)`` for the branch with the largest
    ``|Im lambda|`` along a fixed direction.
    """
    sym, _ = build_symbol(model)
    radii = 2.0 ** np.arange(4, 11) if radii is None else np.asarray(radii, float)
    xi = np.zeros((len(radii), model.n))
    xi[:, 0] = radii
    ev = np.linalg.eigvals(sym(xi))
    k = np.argmax(np.abs(ev.imag), axis=-1)
    lam = ev[np.arange(len(radii)), k]
    exponent = float(np.polyfit(np.log(radii), np.log(np.abs(lam.imag)), 1)[0])
    real_bound = float(np.abs(lam.real).max())
    bounded = real_bound <= 10.0 * (1 + abs(lam.real[0]))
    return bool(bounded and exponent >= 0.9), exponent, real_bound
