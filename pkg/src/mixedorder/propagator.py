"""Pointwise propagators ``e^{t a(xi)}`` and empirical multiplier probes."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import ArgumentError, PreconditionError, SaturationError
from .evolution import norm_growth_experiment
from .symbols import as_points, radial_points, unit_directions

log = logging.getLogger(__name__)

SATURATION_LIMIT = 1e4
BLOWUP_BETA = 0.05


def matrix_exp(M, limit=SATURATION_LIMIT):
    """``exp(M)`` by scaling and squaring with diagonal Pade approximants."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ArgumentError("matrix_exp needs a square matrix")
    if not np.all(np.isfinite(M)):
        raise ArgumentError("matrix has non-finite entries")
    norm = float(np.abs(M).sum(axis=0).max()) if M.size else 0.0
    if norm > limit:
        raise SaturationError(norm, limit)
    E, flags = _backend.expm_batch(M[None], limit)
    if flags[0]:
        raise SaturationError(norm, limit)
    return E[0]


@dataclass
class PropagatorField:
    """``values[t]`` has shape ``(P, N, N)`` over the sample points."""

    points: np.ndarray
    times: tuple
    values: dict
    flags: dict
    symbol_id: str
    grid_spec: dict = field(default_factory=dict)

    def at(self, t):
        if t not in self.values:
            raise ArgumentError(f"time {t} not in propagator field (have {list(self.times)})")
        return self.values[t]


def build_propagator(symbol, grid, times, limit=SATURATION_LIMIT):
    """Evaluate ``e^{t a(xi)}`` at every grid frequency and time.

    Saturated points are returned as zero matrices and flagged.
    """
    times = tuple(float(t) for t in times)
    if any(t < 0 for t in times):
        raise PreconditionError("times must be nonnegative")
    pts = as_points(grid, symbol.dim)
    A = symbol(pts)
    values, flags = {}, {}
    for t in times:
        E, f = _backend.expm_batch(t * A, limit)
        values[t], flags[t] = E, f
        if f.any():
            log.warning("build_propagator: %d points saturated at t=%g", int(f.sum()), t)
    spec = grid.describe() if hasattr(grid, "describe") else {"kind": "points", "count": len(pts)}
    return PropagatorField(pts, times, values, flags, symbol.name, spec)


@dataclass
class SemigroupReport:
    deviation: float
    threshold: float
    passed: bool
    flagged: int


def semigroup_check(field, s, t):
    """Max Frobenius deviation of ``e^{(s+t)a}`` from ``e^{sa} e^{ta}``."""
    for x in (s, t, s + t):
        if x not in field.values:
            raise ArgumentError(f"time {x} missing from propagator field")
    lhs = field.values[s + t]
    rhs = field.values[s] @ field.values[t]
    bad = field.flags[s] | field.flags[t] | field.flags[s + t]
    ok = ~bad
    dev = np.linalg.norm((lhs - rhs)[ok], axis=(-2, -1))
    scale = np.linalg.norm(lhs[ok], axis=(-2, -1))
    deviation = float(dev.max()) if dev.size else 0.0
    threshold = 1e-9 * (1.0 + (float(scale.max()) if scale.size else 0.0))
    return SemigroupReport(deviation, threshold, deviation <= threshold, int(bad.sum()))


@dataclass
class ProbeResult:
    table: object
    beta: float
    blowup: bool

    @property
    def rows(self):
        return self.table.rows


def multiplier_growth_probe(symbol, p, t, packet_ladder, grid, limit=SATURATION_LIMIT):
    """Lower-bound ladder for ``||e^{t a(D)}||_{L^p -> L^p}``.

    ``beta > 0.05`` is evidence of unbounded multiplier norms; a flat ladder
    is consistent with boundedness but does not prove it.
    """
    table = norm_growth_experiment(symbol, p, t, packet_ladder, grid, limit)
    return ProbeResult(table, table.beta, table.beta > BLOWUP_BETA)


@dataclass
class L2Bound:
    bounded: bool
    sup: float
    exponent: float
    saturated: int

    def as_dict(self):
        return {"bounded": self.bounded, "sup": self.sup, "exponent": self.exponent,
                "saturated": self.saturated}


def l2_bounded(symbol, times=(0.25, 0.5), radii=None, directions=None, tol=BLOWUP_BETA):
    """L^2 criterion: ``sup_xi ||e^{t a(xi)}||_2`` stays bounded.

    The spectral norm is sampled on dyadic shells; bounded iff its fitted
    growth over the upper shells is ``<= tol``.
    """
    n = symbol.dim
    radii = 2.0 ** np.arange(0, 6) if radii is None else np.asarray(radii, float)
    dirs = unit_directions(n, 8) if directions is None else directions
    pts = radial_points(dirs, radii)  # (D, K, n)
    A = symbol(pts).reshape(-1, symbol.size, symbol.size)
    sup_shell = np.zeros(len(radii))
    saturated = 0
    for t in times:
        E, f = _backend.expm_batch(t * A, SATURATION_LIMIT)
        saturated += int(f.sum())
        nrm = np.linalg.norm(E, ord=2, axis=(-2, -1)).reshape(len(dirs), len(radii))
        nrm[f.reshape(len(dirs), len(radii))] = np.nan
        sup_shell = np.fmax(sup_shell, np.nanmax(nrm, axis=0))
    top = slice(len(radii) // 2, None)
    exponent = float(np.polyfit(np.log(radii[top]), np.log(sup_shell[top]), 1)[0])
    return L2Bound(bool(exponent <= tol), float(np.nanmax(sup_shell)), exponent, saturated)


def similarity_defect(symbol, weights, points, t=1.0):
    """Max of ``|| Lambda e^{ta} Lambda^-1 - e^{t a~} ||`` relative to ``||e^{t a~}||``."""
    from .reduction import lambda_weight, reduce

    pts = np.asarray(points, dtype=float).reshape(-1, symbol.dim)
    lam = lambda_weight(weights, pts)
    lam_inv = np.linalg.inv(lam)
    E, _ = _backend.expm_batch(t * symbol(pts))
    Et, _ = _backend.expm_batch(t * reduce(symbol, weights)(pts))
    dev = np.linalg.norm(lam @ E @ lam_inv - Et, axis=(-2, -1))
    return float((dev / np.maximum(1.0, np.linalg.norm(Et, axis=(-2, -1)))).max())

