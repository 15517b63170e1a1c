"""Order reduction by Sobolev weights and weight-admissibility scans."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import AnalysisError, ArgumentError
from .symbols import MatrixSymbol, japanese, radial_points, unit_directions

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightVector:
    """Sobolev exponents in blocks: ``((s_1, size_1), (s_2, size_2), ...)``."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple((float(s), int(k)) for s, k in self.blocks)
        for s, k in blocks:
            if not np.isfinite(s):
                raise ArgumentError("weight exponents must be finite")
            if k < 1:
                raise ArgumentError("block sizes must be positive")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def scalar(cls, *exponents):
        """One block of size one per exponent."""
        return cls(tuple((s, 1) for s in exponents))

    @property
    def size(self):
        return sum(k for _, k in self.blocks)

    def exponents(self):
        """Per-component exponents, length N."""
        return np.concatenate([np.full(k, s) for s, k in self.blocks])

    def shifted(self, c):
        return WeightVector(tuple((s + c, k) for s, k in self.blocks))

    def as_list(self):
        return [[s, k] for s, k in self.blocks]


def lambda_weight(w, xi):
    """Diagonal matrix ``diag(<xi>^{s_j})`` (batched over leading axes of xi)."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        xi = xi.reshape(1)
    jb = japanese(xi)
    vals = jb[..., None] ** w.exponents()
    out = np.zeros(vals.shape + (w.size,))
    idx = np.arange(w.size)
    out[..., idx, idx] = vals
    return out


def reduce(symbol, w):
    """Reduced symbol ``Lambda a Lambda^{-1}`` with ``Lambda = diag(<xi>^{s_j})``.

    Entry (i, j) is scaled by ``<xi>^{s_i - s_j}``, so shifting every exponent
    by the same constant leaves the evaluator unchanged bit for bit.
    """
    if w.size != symbol.size:
        raise ArgumentError(f"weight vector has size {w.size}, symbol has size {symbol.size}")
    s = w.exponents()
    diff = s[:, None] - s[None, :]
    diff = diff - 0.0  # normalise -0.0
    nontrivial = np.any(diff != 0)

    def func(xi):
        a = symbol(xi)
        if not nontrivial:
            return a
        jb = japanese(xi)
        return a * jb[..., None, None] ** diff

    orders = symbol.order_matrix + np.where(np.isfinite(symbol.order_matrix), diff, 0.0)
    meta = dict(symbol.meta)
    meta["weights"] = w.as_list()
    return MatrixSymbol(func, symbol.dim, symbol.size, orders, radius=symbol.radius,
                        name=f"reduced({symbol.name})", meta=meta)


@dataclass
class AdmissibilityVerdict:
    """Outcome of :func:`weight_admissibility`.

    ``entry`` is 0-based; ``exponents`` holds the fitted radial growth
    exponent of every entry (``nan`` for structurally zero entries).
    """

    admissible: bool
    entry: tuple | None
    exponent: float
    exponents: np.ndarray
    lam0: float
    stable: bool = True
    skipped: int = 0
    ladder: list = field(default_factory=list)


def _spectral_radius_unit(symbol):
    dirs = unit_directions(symbol.dim, 8)
    ev = np.linalg.eigvals(symbol(dirs))
    return float(np.abs(ev).max())


def _fit_exponent(r, vals):
    """Growth exponent from ``log|f| ~ beta log r + c + d / r``."""
    X = np.stack([np.log(r), np.ones_like(r), 1.0 / r], axis=-1)
    coef, *_ = np.linalg.lstsq(X, np.log(vals), rcond=None)
    return float(coef[0])


def _admissibility_once(red, n, lam0, radii, dirs, tol):
    pts = radial_points(dirs, radii)  # (D, K, n)
    A = red(pts)
    N = red.size
    lam = lam0 * radii  # (K,)
    ev = np.linalg.eigvals(A)
    gap = np.abs(lam[None, :, None] - ev).min(axis=-1)
    ok = gap > 1e-8 * lam[None, :]
    skipped = int((~ok).sum())
    if not np.any(ok):
        raise AnalysisError("resolvent singular at every sample")
    if skipped:
        log.warning("weight admissibility: %d samples skipped (lambda in spectrum)", skipped)
    eye = np.eye(N)
    Mres = np.full(A.shape, np.nan, dtype=complex)
    lhs = lam[None, :, None, None] * eye - A
    Mres[ok] = lam[None, :, None, None].repeat(len(dirs), 0)[ok] * np.linalg.inv(lhs[ok])
    mag = np.abs(Mres)
    scale = np.nanmax(mag)
    exps = np.full((N, N), np.nan)
    for i in range(N):
        for j in range(N):
            best = -np.inf
            for d in range(len(dirs)):
                v = mag[d, :, i, j]
                good = ok[d] & (v > 1e-13 * scale)
                if good.sum() < 4:
                    continue
                best = max(best, _fit_exponent(radii[good], v[good]))
            if best > -np.inf:
                exps[i, j] = best
    worst = np.nanmax(exps)
    if worst <= tol:
        return AdmissibilityVerdict(True, None, float(worst), exps, lam0, skipped=skipped)
    # largest exponent; ties within tol resolved by lexicographic entry order
    cand = np.argwhere(exps >= worst - tol)
    i, j = (int(x) for x in sorted(map(tuple, cand))[0])
    return AdmissibilityVerdict(False, (i, j), float(exps[i, j]), exps, lam0, skipped=skipped)


def weight_admissibility(symbol, w, lam0=None, radii=None, directions=None, tol=0.05,
                         ladder=(1.0, 2.0, 4.0)):
    """Test whether the weights ``w`` keep the scaled resolvent bounded.

    Evaluates ``Lambda^s lam (lam - a)^{-1} Lambda^{-s}`` with
    ``lam = lam0 |xi|`` on dyadic shells ``|xi| in [4, 256]`` along several
    directions, fits the radial growth exponent of every entry and declares
    the weights admissible iff all exponents are ``<= tol``. The scan is
    repeated for ``lam0 * ladder``; ``stable`` records whether all rungs agree.
    """
    if w.size != symbol.size:
        raise ArgumentError("block-size mismatch between weights and symbol")
    n = symbol.dim
    radii = np.geomspace(4.0, 256.0, 16) if radii is None else np.asarray(radii, float)
    dirs = unit_directions(n, 8) if directions is None else np.asarray(directions, float)
    if lam0 is None:
        lam0 = 8.0 * (1.0 + _spectral_radius_unit(symbol))
    red = reduce(symbol, w)
    verdicts = [_admissibility_once(red, n, lam0 * f, radii, dirs, tol) for f in ladder]
    first = verdicts[0]
    first.stable = all(v.admissible == first.admissible for v in verdicts)
    first.ladder = [(v.lam0, v.admissible, v.exponent) for v in verdicts]
    return first


def predicted_offenders(s, s0):
    """Entries (0-based) with ``s_i - s0_i - s_j + s0_j > 0`` and that exponent."""
    d = np.asarray(s, float) - np.asarray(s0, float)
    g = d[:, None] - d[None, :]
    return {(int(i), int(j)): float(g[i, j]) for i, j in np.argwhere(g > 0)}
