"""Eigenvalue analysis of symbols and the well-posedness classification.

The classification works on the principal part of the reduced symbol:
order <= 0, parameter-ellipticity, and purely imaginary branches on cones
(which force order one, and for order one a linear dependence on xi).
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import AnalysisError, PreconditionError
from .reduction import WeightVector, reduce
from .symbols import (
    DEFAULT_LADDER,
    as_points,
    derivative,
    frequency_norm,
    multi_indices,
    principal_part,
    radial_points,
    unit_directions,
)

log = logging.getLogger(__name__)

IMAG_TOL = 1e-8
NONZERO_TOL = 1e-6
ELLIPTIC_MIN_C = 1e-6
RADIAL_TOL = 1e-8
AFFINE_TOL = 1e-6
TREND_TOL = 0.05


# ----------------------------------------------------------------------------
# eigenvalues


def _eigvals(mats):
    """Eigenvalues of a stack; non-convergent points come back as nan."""
    mats = np.asarray(mats, dtype=complex)
    flat = mats.reshape((-1,) + mats.shape[-2:])
    finite = np.all(np.isfinite(flat), axis=(-2, -1))
    out = np.full(flat.shape[:-1], np.nan + 0j)
    try:
        out[finite] = np.linalg.eigvals(flat[finite])
    except np.linalg.LinAlgError:
        for k in np.nonzero(finite)[0]:
            try:
                out[k] = np.linalg.eigvals(flat[k])
            except np.linalg.LinAlgError:
                pass
    return out.reshape(mats.shape[:-1])


def _lex_sorted(vals, scale):
    """Sort each row by (Re, Im); Re is rounded relative to ``scale`` so that
    round-off does not reorder eigenvalues with equal real parts."""
    re = np.round(vals.real / scale, 9)
    order = np.lexsort((vals.imag, re), axis=-1)
    return np.take_along_axis(vals, order, axis=-1)


def _match(ref, cur):
    """Permutation ``p`` minimising ``sum |ref[b] - cur[p[b]]|``."""
    cost = np.abs(ref[:, None] - cur[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty_like(cols)
    perm[rows] = cols
    return perm


@dataclass
class QuasiHyperbolicityReport:
    """Sample sup of the largest real part of the spectrum."""

    M_a_estimate: float
    argmax_xi: np.ndarray
    grid_spec: dict
    radial_trend: float
    quasi_hyperbolic: bool
    failures: int = 0

    def as_dict(self):
        return {
            "M_a_estimate": self.M_a_estimate,
            "argmax_xi": [float(x) for x in self.argmax_xi],
            "grid": self.grid_spec,
            "radial_trend": self.radial_trend,
            "quasi_hyperbolic": self.quasi_hyperbolic,
            "failures": self.failures,
        }


def _grid_spec(grid, pts):
    if hasattr(grid, "describe"):
        return grid.describe()
    r = frequency_norm(pts)
    return {"kind": "points", "count": int(len(pts)), "max_radius": float(r.max()) if r.size else 0.0}


def quasi_hyperbolicity(symbol, grid):
    """Scan ``max Re lambda(xi)`` over a frequency sample.

    The symbol is declared quasi-hyperbolic when the sample sup is finite and
    its growth along dyadic shells (slope of ``log(1 + max(M, 0))`` against
    ``log |xi|``) does not exceed 0.05.
    """
    pts = as_points(grid, symbol.dim)
    ev = _eigvals(symbol(pts))
    bad = ~np.all(np.isfinite(ev), axis=-1)
    failures = int(bad.sum())
    if failures > 0.01 * len(pts):
        raise AnalysisError(f"eigenvalue solver failed at {failures} of {len(pts)} points")
    if failures:
        log.warning("quasi_hyperbolicity: %d points skipped", failures)
    pts, ev = pts[~bad], ev[~bad]
    maxre = ev.real.max(axis=-1)
    k = int(np.argmax(maxre))
    r = frequency_norm(pts)
    keep = r >= 1.0
    trend = 0.0
    if np.count_nonzero(keep) > 1:
        shells = np.floor(np.log2(r[keep])).astype(int)
        xs, ys = [], []
        for s in np.unique(shells):
            sel = shells == s
            xs.append(s + 0.5)
            ys.append(np.log1p(max(float(maxre[keep][sel].max()), 0.0)))
        if len(xs) > 1:
            xs = np.asarray(xs) * np.log(2.0)
            top = slice(len(xs) // 2, None)
            trend = float(np.polyfit(xs[top], ys[top], 1)[0]) if len(xs[top]) > 1 else 0.0
    M = float(maxre[k])
    qh = bool(np.isfinite(M) and trend <= TREND_TOL)
    return QuasiHyperbolicityReport(M, pts[k].copy(), _grid_spec(grid, pts), trend, qh, failures)


@dataclass
class EigenField:
    """Eigenvalues along rays, continued branch by branch.

    ``values[d, k, b]`` is branch ``b`` on ray ``d`` at ``radii[k]``;
    ``permutations[d, k]`` maps branch index to the position in the
    lexicographically sorted spectrum at that point.
    """

    directions: np.ndarray
    radii: np.ndarray
    values: np.ndarray
    permutations: np.ndarray
    ties: list = field(default_factory=list)

    @property
    def points(self):
        return radial_points(self.directions, self.radii)


def eigen_field(symbol, rays, radii, scale_exponent=None, align=True):
    """Sample eigenvalues on ``rays x radii`` and continue them along rays.

    Continuation pairs the spectra of consecutive shells by minimal total
    displacement (optimal assignment). With ``scale_exponent`` set, the
    previous shell is first rescaled by ``(r_k / r_{k-1})**scale_exponent``.
    With ``align`` the first shell of every ray is matched to the previous
    ray, so branch labels agree across neighbouring directions.
    """
    rays = np.atleast_2d(np.asarray(rays, dtype=float))
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise PreconditionError("radii must be positive and increasing")
    raw = _eigvals(symbol(radial_points(rays, radii)))  # (D, K, N)
    scale = max(float(np.nanmax(np.abs(raw))) if raw.size else 1.0, 1e-300)
    srt = _lex_sorted(raw, scale)
    D, K, N = srt.shape
    vals = np.empty_like(srt)
    perms = np.empty((D, K, N), dtype=int)
    ties = []
    for d in range(D):
        if align and d > 0:
            p = _match(vals[d - 1, 0], srt[d, 0])
        else:
            p = np.arange(N)
        perms[d, 0] = p
        vals[d, 0] = srt[d, 0][p]
        for k in range(1, K):
            prev = vals[d, k - 1]
            if scale_exponent is not None:
                prev = prev * (radii[k] / radii[k - 1]) ** scale_exponent
            cur = srt[d, k]
            p = _match(prev, cur)
            gaps = np.where(np.eye(N, dtype=bool), np.inf, np.abs(cur[:, None] - cur[None, :]))
            if N > 1 and gaps.min() <= 1e-12 * max(np.abs(cur).max(), 1.0):
                ties.append((d, k))
            perms[d, k] = p
            vals[d, k] = cur[p]
    return EigenField(rays, radii, vals, perms, ties)


def _align_to(reference, spectra):
    """Reorder each row of ``spectra`` to best match ``reference``."""
    return np.stack([s[_match(reference, s)] for s in spectra])


def radial_dependence_test(field, tol=RADIAL_TOL):
    """Per branch: does the eigenvalue depend on ``|xi|`` only?

    At every radius the spectra of all directions are matched to the first
    direction and the branch spread ``max - min`` (relative to the spectral
    scale at that radius) is measured; a branch is radial iff the worst
    spread is ``<= tol``.
    """
    D, K, N = field.values.shape
    n = field.directions.shape[1]
    if n > 1 and D < 8:
        raise PreconditionError("radial test needs at least 8 directions per radius")
    worst = np.zeros(N)
    for k in range(K):
        ref = field.values[0, k]
        aligned = _align_to(ref, field.values[:, k])  # (D, N)
        scale = max(float(np.abs(aligned).max()), 1e-300)
        spread = np.hypot(np.ptp(aligned.real, axis=0), np.ptp(aligned.imag, axis=0)) / scale
        worst = np.maximum(worst, spread)
    return worst <= tol


@dataclass
class AffineFit:
    xi0: np.ndarray
    lam0: float
    residual: float
    scale: float
    consistent: bool

    def as_dict(self):
        return {"xi0": [float(x) for x in self.xi0], "lambda0": self.lam0,
                "residual": self.residual, "scale": self.scale, "consistent": self.consistent}


def affine_fit(points, values, imag_tol=IMAG_TOL, tol=AFFINE_TOL):
    """Least-squares fit ``lambda(xi) = i xi0 . xi + i lam0`` on a cone.

    ``residual`` is the max absolute misfit of ``Im lambda``; the branch is
    consistent with the affine form iff ``residual / scale <= tol``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.asarray(values, dtype=complex).ravel()
    scale = max(float(np.abs(vals).max()), 1e-300)
    max_re = float(np.abs(vals.real).max())
    if max_re > imag_tol * scale:
        raise PreconditionError(f"branch is not purely imaginary: max |Re lambda| = {max_re:.3g}")
    X = np.hstack([pts, np.ones((len(pts), 1))])
    coef, *_ = np.linalg.lstsq(X, vals.imag, rcond=None)
    resid = float(np.abs(X @ coef - vals.imag).max())
    return AffineFit(coef[:-1], float(coef[-1]), resid, scale, resid / scale <= tol)


# ----------------------------------------------------------------------------
# classification


class Case(str, enum.Enum):
    ORDER_LE_0 = "AllP_order_le_0"
    PARAMETER_ELLIPTIC = "AllP_parameter_elliptic"
    REQUIRES_ORDER_ONE = "RequiresOrderOne"
    ONLY_P2_OR_N1 = "OnlyP2orN1"
    CONSISTENT_ORDER_ONE = "ConsistentOrderOne"
    INCONCLUSIVE = "Inconclusive_lower_order"


@dataclass
class WellPosednessVerdict:
    case: Case
    order: float
    dim: int
    evidence: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def permits(self, p):
        """Analyzer prediction for L^p well-posedness (``None``: undecided).

        For p = 2 every case is compatible with well-posedness; the sharper
        L^2 test lives in :func:`mixedorder.propagator.l2_bounded`.
        """
        if p == 2:
            return True
        if self.case in (Case.ORDER_LE_0, Case.PARAMETER_ELLIPTIC, Case.CONSISTENT_ORDER_ONE):
            return True
        if self.case == Case.REQUIRES_ORDER_ONE:
            return False
        if self.case == Case.ONLY_P2_OR_N1:
            return self.dim == 1
        return None

    def as_dict(self):
        return {"case": self.case.value, "order": self.order, "dim": self.dim,
                "evidence": self.evidence, "warnings": list(self.warnings)}


def default_directions(n, seed=None):
    count = {1: 2, 2: 16}.get(n, 32)
    offset = 0.0
    if seed is not None and n > 1:
        offset = float(np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi / count))
    return unit_directions(n, count, offset)


def _neighbours(dirs, k=2):
    if dirs.shape[1] == 1:
        return [[] for _ in range(len(dirs))]
    cos = np.clip(dirs @ dirs.T, -1.0, 1.0)
    np.fill_diagonal(cos, -np.inf)
    return [list(np.argsort(-cos[d])[:k]) for d in range(len(dirs))]


def _cone_branches(pts, ev, mu, neighbours):
    """Purely imaginary, nonzero branches on cones around each direction.

    Returns a list of dicts with the cone points/values of each branch.
    """
    D, K, N = ev.shape
    r = frequency_norm(pts[:, :, :])  # (D, K)
    found = []
    for d in range(D):
        members = [d] + neighbours[d]
        vals = np.empty((len(members), K, N), dtype=complex)
        vals[0] = ev[d]
        for m_i, m in enumerate(members[1:], start=1):
            for k in range(K):
                vals[m_i, k] = ev[m, k][_match(ev[d, k], ev[m, k])]
        absval = np.abs(vals)
        imag = np.abs(vals.real) <= IMAG_TOL * np.maximum(absval, 1e-300)
        nonzero = absval >= NONZERO_TOL * (r[members][:, :, None] ** mu)
        good = np.all(imag & nonzero, axis=(0, 1))
        for b in np.nonzero(good)[0]:
            found.append({
                "direction": int(d),
                "branch": int(b),
                "points": pts[members].reshape(-1, pts.shape[-1]),
                "values": vals[:, :, b].ravel(),
            })
    return found


def classify(symbol, w=None, n=None, *, radii=(1.0, 2.0, 4.0, 8.0), directions=None,
             k_ladder=DEFAULT_LADDER, seed=None, qh_points=None):
    """Well-posedness classification of ``(d/dt - op[a]) u = 0`` in L^p.

    Pipeline: reduce by the weights, extract the principal part by the
    scaling limit, then decide by the order and the principal spectrum:

    * order <= 0 -> well-posed for all p;
    * all principal eigenvalues with ``Re <= -c |xi|^mu``, c >= 1e-6 ->
      parameter-elliptic, well-posed for all p;
    * a purely imaginary nonzero branch on a cone: order != 1 excludes
      p != 2; order 1 with a radial branch and n > 1 leaves only p = 2 or
      n = 1; order 1 with affine branches is consistent;
    * otherwise the principal part does not decide.
    """
    if n is not None and n != symbol.dim:
        raise PreconditionError(f"symbol dimension {symbol.dim} differs from n = {n}")
    n = symbol.dim
    if w is None:
        w = WeightVector.scalar(*([0.0] * symbol.size))
    red = reduce(symbol, w)
    mu = red.order
    evidence = {"weights": w.as_list(), "order": mu,
                "order_matrix": [[None if not np.isfinite(x) else float(x) for x in row]
                                 for row in red.order_matrix]}
    warnings = []

    if qh_points is None:
        qh_points = radial_points(default_directions(n), 2.0 ** np.arange(0, 9)).reshape(-1, n)
    qh = quasi_hyperbolicity(red, qh_points)
    evidence["quasi_hyperbolicity"] = qh.as_dict()
    if not qh.quasi_hyperbolic:
        warnings.append("symbol does not appear quasi-hyperbolic")

    if mu <= 0:
        return WellPosednessVerdict(Case.ORDER_LE_0, mu, n, evidence, warnings)

    principal = principal_part(red, k_ladder)
    dirs = default_directions(n, seed) if directions is None else np.asarray(directions, float)
    radii = np.asarray(radii, dtype=float)
    fld = eigen_field(principal, dirs, radii, scale_exponent=mu)
    pts = fld.points
    ev = fld.values
    rmu = (frequency_norm(pts) ** mu)[:, :, None]
    evidence["principal_eigenvalues"] = {
        "directions": dirs.tolist(),
        "radii": radii.tolist(),
        "values": [[[[float(z.real), float(z.imag)] for z in ev[d, k]] for k in range(len(radii))]
                   for d in range(len(dirs))],
    }

    c = float(np.min(-ev.real / rmu))
    evidence["ellipticity_constant"] = c
    if c >= ELLIPTIC_MIN_C:
        return WellPosednessVerdict(Case.PARAMETER_ELLIPTIC, mu, n, evidence, warnings)

    cones = _cone_branches(pts, ev, mu, _neighbours(dirs))
    evidence["imaginary_branches"] = len(cones)
    if not cones:
        return WellPosednessVerdict(Case.INCONCLUSIVE, mu, n, evidence, warnings)
    if abs(mu - 1.0) > 1e-9:
        return WellPosednessVerdict(Case.REQUIRES_ORDER_ONE, mu, n, evidence, warnings)

    if n > 1:
        radial = radial_dependence_test(fld)
        # branch labels of fld refer to direction 0; map each cone branch
        radial_cones = []
        for cone in cones:
            d, b = cone["direction"], cone["branch"]
            ref0 = ev[0, 0]
            p = _match(ev[d, 0], ref0)
            radial_cones.append(bool(radial[p[b]]))
        evidence["radial_branches"] = radial.tolist()
        if any(radial_cones):
            return WellPosednessVerdict(Case.ONLY_P2_OR_N1, mu, n, evidence, warnings)

    fits = [affine_fit(c_["points"], c_["values"]) for c_ in cones]
    evidence["affine_fits"] = [f.as_dict() for f in fits]
    if all(f.consistent for f in fits):
        return WellPosednessVerdict(Case.CONSISTENT_ORDER_ONE, mu, n, evidence, warnings)
    return WellPosednessVerdict(Case.INCONCLUSIVE, mu, n, evidence, warnings)


# ----------------------------------------------------------------------------
# Mikhlin


def mikhlin_estimate(m, grid, max_order=None):
    """Mikhlin constant ``max_{|alpha| <= k} sup |xi|^{|alpha|} |d^alpha m(xi)|``.

    ``k`` defaults to ``floor(n/2) + 1``; derivatives are central differences
    with step ``1e-3 |xi|`` (points at ``xi = 0`` are skipped, so stencils
    never straddle the origin).
    """
    if m.order > 0:
        raise PreconditionError(f"Mikhlin estimate needs order <= 0, symbol has order {m.order}")
    n = m.dim
    k = n // 2 + 1 if max_order is None else int(max_order)
    pts = as_points(grid, n)
    r = frequency_norm(pts)
    pts, r = pts[r > 0], r[r > 0]
    step = 1e-3 * r
    best = 0.0
    for alpha in multi_indices(n, k, include_zero=True):
        d = derivative(m, pts, alpha, step) if sum(alpha) else m(pts)
        val = r ** sum(alpha) * np.abs(d).max(axis=(-2, -1))
        best = max(best, float(val.max()))
    return best
