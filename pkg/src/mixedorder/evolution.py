"""FFT evolution ``u(t) = op[e^{t a}] u0`` on a periodic box, wave packets
and L^p norms.

Transform convention: ``(F phi)(xi) = (2 pi)^{-n/2} int e^{i x.xi} phi(x) dx``.
The numpy FFT uses ``e^{-i k x}``, so the symbol is evaluated at
``xi = -k``; with this choice ``op[i xi_j] = -d_j``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import ArgumentError, PreconditionError, ResolutionError

log = logging.getLogger(__name__)

CONVENTION = "F(xi) = (2 pi)^(-n/2) int exp(i x.xi) f(x) dx; numpy k = -xi"
POINTS_PER_WAVELENGTH = 8


def _next_pow2(x):
    return 1 << max(3, math.ceil(math.log2(max(x, 1.0))))


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform periodic grid: ``points_per_axis`` samples on ``[-L/2, L/2)^n``."""

    n: int
    points_per_axis: int
    L: float

    def __post_init__(self):
        N = int(self.points_per_axis)
        if self.n < 1:
            raise ArgumentError("dimension must be positive")
        if N < 8 or N & (N - 1):
            raise ArgumentError("points_per_axis must be a power of two >= 8")
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ArgumentError("box length must be positive")
        object.__setattr__(self, "points_per_axis", N)
        object.__setattr__(self, "L", float(self.L))

    @classmethod
    def with_radius(cls, n, radius, points_per_axis):
        """Grid whose Nyquist frequency equals ``radius``."""
        return cls(n, points_per_axis, np.pi * points_per_axis / radius)

    @property
    def dx(self):
        return self.L / self.points_per_axis

    @property
    def dk(self):
        return 2.0 * np.pi / self.L

    @property
    def nyquist(self):
        return np.pi / self.dx

    @property
    def shape(self):
        return (self.points_per_axis,) * self.n

    def axis(self):
        return (np.arange(self.points_per_axis) - self.points_per_axis // 2) * self.dx

    def coordinates(self):
        """Spatial points, shape ``shape + (n,)``."""
        ax = self.axis()
        return np.stack(np.meshgrid(*([ax] * self.n), indexing="ij"), axis=-1)

    def fft_frequencies(self):
        k = np.fft.fftfreq(self.points_per_axis, d=self.dx) * 2.0 * np.pi
        return np.stack(np.meshgrid(*([k] * self.n), indexing="ij"), axis=-1)

    def symbol_frequencies(self):
        """Symbol arguments ``xi = -k`` in FFT order, shape ``shape + (n,)``."""
        return -self.fft_frequencies()

    def describe(self):
        return {"kind": "periodic", "n": self.n, "points_per_axis": self.points_per_axis,
                "L": self.L, "nyquist": self.nyquist}


@dataclass
class StateField:
    """``components`` has shape ``(N,) + grid.shape``."""

    components: np.ndarray
    grid: FrequencyGrid
    t: float = 0.0
    flagged: int = 0

    def __post_init__(self):
        c = np.asarray(self.components, dtype=complex)
        if c.shape[1:] != self.grid.shape:
            raise ArgumentError(f"state shape {c.shape[1:]} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(c)):
            raise ArgumentError("state contains non-finite values")
        self.components = c

    @property
    def size(self):
        return self.components.shape[0]


@dataclass(frozen=True)
class WavePacketSpec:
    center: tuple
    carrier: tuple
    sigma: float
    component_vector: tuple = (1.0,)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ArgumentError("packet width must be positive")
        if len(self.center) != len(self.carrier):
            raise ArgumentError("center and carrier must have the same dimension")


def check_packet(spec, grid, points_per_wavelength=None):
    """Raise ResolutionError unless the packet fits and is resolved."""
    c = np.asarray(spec.carrier, dtype=float)
    R = float(np.linalg.norm(c))
    if len(c) != grid.n:
        raise ArgumentError("packet dimension differs from grid dimension")
    if 3 * spec.sigma >= grid.L / 2:
        raise ResolutionError(f"packet width 3*sigma = {3 * spec.sigma:.4g} exceeds half box {grid.L / 2:.4g}")
    reach = R + 3.0 / spec.sigma
    if reach >= grid.nyquist:
        need = _next_pow2(reach * grid.L / np.pi * 1.0000001)
        raise ResolutionError(f"packet spectrum reaches {reach:.4g} beyond Nyquist {grid.nyquist:.4g}", need)
    if points_per_wavelength and R > 0:
        if 2 * np.pi / R < points_per_wavelength * grid.dx * (1 - 1e-12):
            need = _next_pow2(points_per_wavelength * R * grid.L / (2 * np.pi) * (1 - 1e-12))
            raise ResolutionError(
                f"carrier {R:.4g} has fewer than {points_per_wavelength} points per wavelength", need)


def synthesize_packet(spec, grid, size=None):
    """Gaussian ``exp(-|x-x0|^2 / (2 sigma^2)) exp(i xi_c . x)`` times the
    component vector."""
    check_packet(spec, grid)
    vec = np.asarray(spec.component_vector, dtype=complex)
    if size is not None and vec.size != size:
        raise ArgumentError(f"component vector has length {vec.size}, system size is {size}")
    x = grid.coordinates()
    d = x - np.asarray(spec.center, dtype=float)
    # periodic distance, so packets near the box edge wrap cleanly
    d = (d + grid.L / 2) % grid.L - grid.L / 2
    env = np.exp(-np.sum(d * d, axis=-1) / (2 * spec.sigma ** 2))
    phase = np.exp(1j * (x @ np.asarray(spec.carrier, dtype=float)))
    scalar = env * phase
    return StateField(np.einsum("c,...->c...", vec, scalar), grid)


def lp_norm(state, p):
    """``(per_component, total)`` L^p norms (Riemann sums); ``p = inf`` is the max norm.

    The total uses the pointwise Euclidean norm of the state vector.
    """
    u = state.components
    vol = state.grid.dx ** state.grid.n
    mag = np.abs(u)
    vec = np.sqrt(np.sum(mag ** 2, axis=0))
    if p == np.inf:
        return mag.reshape(len(u), -1).max(axis=1), float(vec.max())
    if p < 1:
        raise ArgumentError("p must be >= 1")
    axes = tuple(range(1, u.ndim))
    comp = (np.sum(mag ** p, axis=axes) * vol) ** (1.0 / p)
    total = float((np.sum(vec ** p) * vol) ** (1.0 / p))
    return comp, total


def frequency_l2(state):
    """L^2 norm from the discrete Fourier coefficients (Parseval)."""
    axes = tuple(range(1, state.components.ndim))
    U = np.fft.fftn(state.components, axes=axes)
    M = np.prod(state.grid.shape)
    return float(np.sqrt(np.sum(np.abs(U) ** 2) * state.grid.dx ** state.grid.n / M))


def multiplier_field(symbol, grid, t, limit=1e4):
    """``e^{t a(xi)}`` on the grid, shape ``grid.shape + (N, N)``, and flags."""
    if t < 0:
        raise PreconditionError("t must be nonnegative")
    if symbol.dim != grid.n:
        raise ArgumentError("symbol and grid dimensions differ")
    A = t * symbol(grid.symbol_frequencies())
    N = symbol.size
    flat = A.reshape(-1, N, N)
    if N == 1:
        z = flat[:, 0, 0]
        flags = ~(np.abs(z) <= limit)
        E = np.where(flags, 0.0, np.exp(np.where(flags, 0.0, z)))[:, None, None]
    else:
        E, flags = _backend.expm_batch(flat, limit)
    return E.reshape(A.shape), flags.reshape(grid.shape)


def apply_multiplier(E, state, flags=None, t=None):
    """``op[E] state``."""
    axes = tuple(range(1, state.components.ndim))
    U = np.fft.fftn(state.components, axes=axes)
    V = np.einsum("...ij,j...->i...", E, U)
    out = np.fft.ifftn(V, axes=axes)
    nflag = int(flags.sum()) if flags is not None else 0
    return StateField(out, state.grid, state.t if t is None else t, nflag)


def evolve(symbol, state, t, limit=1e4):
    """Solution at time ``state.t + t``. Frequencies where the propagator
    saturates are zeroed and counted in ``flagged``."""
    E, flags = multiplier_field(symbol, state.grid, t, limit)
    if flags.any():
        log.warning("evolve: %d frequencies saturated and truncated", int(flags.sum()))
    return apply_multiplier(E, state, flags, state.t + t)


def dual_multiplier(E):
    """Multiplier of the transposed operator: ``E(-xi)^T`` on the same grid."""
    n = E.ndim - 2
    idx = tuple((-np.arange(E.shape[k])) % E.shape[k] for k in range(n))
    out = E[np.ix_(*idx)] if n > 1 else E[idx[0]]
    return np.swapaxes(out, -1, -2)


def packet_ladder(grid, radii, direction=None, c=None, component_vector=(1.0,), center=None):
    """Packets with carriers ``R * direction`` and widths ``sigma = c / R``.

    Default ``c`` is 8 in one dimension (one-sided spectrum, leakage below
    ``e^{-32}``) and 2 otherwise (concentrated in space).
    """
    n = grid.n
    d = np.zeros(n) if direction is None else np.asarray(direction, dtype=float)
    if direction is None:
        d[0] = 1.0
    d = d / np.linalg.norm(d)
    c = (8.0 if n == 1 else 2.0) if c is None else float(c)
    x0 = tuple([0.0] * n) if center is None else tuple(center)
    return [WavePacketSpec(x0, tuple(float(R) * d), c / float(R), tuple(component_vector)) for R in radii]


@dataclass
class GrowthRow:
    R: float
    p: float
    t: float
    ratio_components: np.ndarray
    ratio_total: float
    ratio_dual: float
    ratio: float
    flagged_frequencies: int
    duality_agree: bool


@dataclass
class GrowthTable:
    rows: list
    beta: float
    p: float
    q: float
    t: float
    duality_ok: bool
    fit_radii: list = field(default_factory=list)

    def radii(self):
        return np.array([r.R for r in self.rows])

    def ratios(self):
        return np.array([r.ratio for r in self.rows])


def conjugate(p):
    return np.inf if p == 1 else (1.0 if p == np.inf else p / (p - 1.0))


def fit_beta(radii, ratios):
    """Slope of ``log ratio`` against ``log R`` over the top half of the ladder."""
    radii = np.asarray(radii, float)
    ratios = np.asarray(ratios, float)
    k = len(radii)
    if k < 2:
        return 0.0, list(radii)
    top = slice(k // 2, None) if k >= 4 else slice(0, None)
    return float(np.polyfit(np.log(radii[top]), np.log(ratios[top]), 1)[0]), list(radii[top])


def norm_growth_experiment(symbol, p, t, ladder, grid, limit=1e4, points_per_wavelength=POINTS_PER_WAVELENGTH):
    """Ratios ``||e^{t a(D)} u_R||_p / ||u_R||_p`` over a packet ladder.

    Each rung is measured for the operator at ``p`` and for its transpose at
    the conjugate exponent ``q``; since the two operator norms coincide, the
    reported ``ratio`` is the larger of the two lower bounds. ``duality_agree``
    records whether the two agree within 10%.
    """
    if not (1 < p < np.inf):
        raise PreconditionError("p must lie in (1, inf)")
    for spec in ladder:
        check_packet(spec, grid, points_per_wavelength)
    q = conjugate(p)
    E, flags = multiplier_field(symbol, grid, t, limit)
    Ed = dual_multiplier(E)
    nflag = int(flags.sum())
    rows = []
    for spec in ladder:
        u = synthesize_packet(spec, grid, symbol.size)
        v = apply_multiplier(E, u, flags, t)
        vd = apply_multiplier(Ed, u, flags, t)
        _, u_p = lp_norm(u, p)
        _, u_q = lp_norm(u, q)
        comp, v_p = lp_norm(v, p)
        _, vd_q = lp_norm(vd, q)
        fwd, dual = v_p / u_p, vd_q / u_q
        rows.append(GrowthRow(float(np.linalg.norm(spec.carrier)), p, t, comp / u_p, fwd, dual,
                              max(fwd, dual), nflag, abs(fwd - dual) <= 0.1 * max(fwd, dual)))
    beta, fit_r = fit_beta([r.R for r in rows], [r.ratio for r in rows])
    return GrowthTable(rows, beta, p, q, t, all(r.duality_agree for r in rows), fit_r)


# ----------------------------------------------------------------------------
# state I/O


def save_state(path, state, dtype="complex128"):
    """Raw little-endian array at ``path`` plus a JSON sidecar ``path + '.json'``."""
    dt = np.dtype(dtype).newbyteorder("<")
    if dt.kind != "c":
        raise ArgumentError("state dtype must be complex64 or complex128")
    data = np.ascontiguousarray(state.components.astype(dt))
    with open(path, "wb") as fh:
        fh.write(data.tobytes())
    meta = {
        "shape": list(data.shape),
        "dtype": dt.name,
        "byteorder": "little",
        "grid": state.grid.describe(),
        "t": state.t,
        "flagged_frequencies": state.flagged,
        "convention": CONVENTION,
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_state(path):
    with open(str(path) + ".json", encoding="utf-8") as fh:
        meta = json.load(fh)
    dt = np.dtype(meta["dtype"]).newbyteorder("<")
    data = np.fromfile(path, dtype=dt).reshape(meta["shape"])
    g = meta["grid"]
    grid = FrequencyGrid(g["n"], g["points_per_axis"], g["L"])
    return StateField(data.astype(complex), grid, meta["t"], meta.get("flagged_frequencies", 0))
