"""Matrix-valued mixed-order symbols.

A :class:`MatrixSymbol` wraps a vectorized evaluator ``xi -> a(xi)`` together
with the declared order of each entry. Evaluators take an array of shape
``(..., n)`` and return ``(..., N, N)`` complex arrays; every helper here
works on whole batches of frequencies at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ArgumentError, DomainError

NEG_INF = -np.inf


def japanese(xi):
    """Japanese bracket ``<xi> = sqrt(1 + |xi|^2)`` over the last axis."""
    xi = np.asarray(xi, dtype=float)
    return np.sqrt(1.0 + np.sum(xi * xi, axis=-1))


def frequency_norm(xi):
    xi = np.asarray(xi, dtype=float)
    return np.sqrt(np.sum(xi * xi, axis=-1))


def unit_directions(n, count=8, offset=0.0):
    """Deterministic set of unit vectors in R^n.

    n = 1 gives the two half-lines; n = 2 equally spaced angles starting at
    ``offset``; n >= 3 a Fibonacci lattice on the sphere. Directions for
    n = 2 are returned in angular order, so neighbours are adjacent.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        ang = offset + 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    phi = offset + np.pi * (1.0 + np.sqrt(5.0)) * k
    rho = np.sqrt(1.0 - z * z)
    base = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
    out = np.zeros((count, n))
    out[:, :3] = base
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def radial_points(directions, radii):
    """All points ``r * eta``; shape ``(len(directions), len(radii), n)``."""
    directions = np.asarray(directions, dtype=float)
    radii = np.asarray(radii, dtype=float)
    return directions[:, None, :] * radii[None, :, None]


@dataclass(frozen=True, eq=False)
class HomogeneousComponent:
    """Matrix function with ``f(t xi) = t**degree f(xi)``.

    ``strict`` components satisfy the identity on all of R^n \\ {0};
    otherwise only for ``|xi| >= radius``.
    """

    degree: float
    func: Callable[[np.ndarray], np.ndarray]
    strict: bool = False
    radius: float = 1.0
    dim: int | None = None

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.strict and np.any(frequency_norm(xi) == 0.0):
            raise DomainError("strictly homogeneous component is undefined at xi = 0")
        return np.asarray(self.func(xi), dtype=complex)


@dataclass(frozen=True)
class ConeRegion:
    """Directions (unit vectors) with an angular radius, beyond ``radius``."""

    radius: float
    directions: np.ndarray
    angular_radius: float = 0.0

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if np.any(np.abs(np.linalg.norm(d, axis=-1) - 1.0) > 1e-14):
            raise ArgumentError("cone directions must be unit vectors")
        object.__setattr__(self, "directions", d)

    @classmethod
    def around(cls, axis, half_angle, count=5, radius=1.0):
        """Cone of ``count`` directions spread over ``[-half_angle, half_angle]``
        around ``axis`` (n = 1 or 2; in n = 1 the cone is the half-line)."""
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        if axis.size == 1:
            return cls(radius, axis.reshape(1, 1), 0.0)
        if axis.size != 2:
            raise ArgumentError("ConeRegion.around supports n = 1 or 2")
        base = np.arctan2(axis[1], axis[0])
        ang = base + np.linspace(-half_angle, half_angle, count)
        d = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        return cls(radius, d, half_angle)

    def sample(self, radii):
        radii = np.asarray(radii, dtype=float)
        return radial_points(self.directions, self.radius * radii).reshape(-1, self.directions.shape[1])


@dataclass(frozen=True, eq=False)
class MatrixSymbol:
    """Evaluable matrix symbol with declared entrywise orders.

    Parameters
    ----------
    func : callable
        Vectorized evaluator, ``(..., n) -> (..., N, N)``.
    dim : int
        Spatial dimension n.
    size : int
        System size N.
    order_matrix : (N, N) array
        Declared order of each entry; ``-inf`` marks identically zero entries.
    components : tuple of HomogeneousComponent
        Optional classical expansion ``a ~ a_0 + a_1 + ...``.
    radius : float
        Radius beyond which the components are homogeneous.
    name : str
        Provenance tag carried into reports.
    """

    func: Callable[[np.ndarray], np.ndarray]
    dim: int
    size: int
    order_matrix: np.ndarray
    components: tuple = ()
    radius: float = 1.0
    name: str = "symbol"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1 or self.size < 1:
            raise ArgumentError("dim and size must be positive")
        om = np.array(self.order_matrix, dtype=float)
        if om.shape != (self.size, self.size):
            raise ArgumentError(f"order_matrix must be {self.size}x{self.size}, got {om.shape}")
        if np.any(np.isnan(om)) or np.any(om == np.inf):
            raise ArgumentError("order_matrix entries must be finite (or -inf for zero entries)")
        om.setflags(write=False)
        object.__setattr__(self, "order_matrix", om)
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def order(self):
        """Maximal entry order (``-inf`` for the zero symbol)."""
        return float(np.max(self.order_matrix))

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1:] != (self.dim,):
            raise ArgumentError(f"frequency has trailing dimension {xi.shape[-1:]}, expected ({self.dim},)")
        out = np.asarray(self.func(xi), dtype=complex)
        want = xi.shape[:-1] + (self.size, self.size)
        if out.shape != want:
            out = np.broadcast_to(out, want).copy()
        return out

    def renamed(self, name):
        return replace(self, name=name)


def evaluate(symbol, xi):
    """Evaluate ``symbol`` at a single frequency vector."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        xi = xi.reshape(1)
    if xi.shape != (symbol.dim,):
        raise ArgumentError(f"xi has length {xi.size}, symbol dimension is {symbol.dim}")
    return symbol(xi[None, :])[0]


# ----------------------------------------------------------------------------
# constructors


def constant_symbol(matrix, dim, name="constant"):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    N = matrix.shape[0]
    orders = np.where(matrix != 0, 0.0, NEG_INF)

    def func(xi):
        return np.broadcast_to(matrix, xi.shape[:-1] + (N, N)).copy()

    return MatrixSymbol(func, dim, N, orders, name=name)


def zero_symbol(dim, size=1):
    return constant_symbol(np.zeros((size, size)), dim, name="zero")


def scalar_symbol(f, order, dim, name="scalar"):
    """1x1 symbol from a vectorized scalar function ``f(xi)``."""

    def func(xi):
        return np.asarray(f(xi), dtype=complex)[..., None, None]

    return MatrixSymbol(func, dim, 1, [[order]], name=name)


def from_pointwise(f, dim, size, order_matrix, name="pointwise"):
    """Wrap a non-vectorized ``f(xi) -> (N, N)`` evaluator."""

    def func(xi):
        flat = xi.reshape(-1, dim)
        vals = np.array([np.asarray(f(x), dtype=complex) for x in flat]).reshape(-1, size, size)
        return vals.reshape(xi.shape[:-1] + (size, size))

    return MatrixSymbol(func, dim, size, order_matrix, name=name)


def add_constant(symbol, matrix, name=None):
    """Bounded (order 0) perturbation ``a + B`` with a constant matrix B."""
    B = np.asarray(matrix, dtype=complex)
    if B.shape != (symbol.size, symbol.size):
        raise ArgumentError("perturbation has wrong shape")
    orders = np.where(B != 0, np.maximum(symbol.order_matrix, 0.0), symbol.order_matrix)

    def func(xi):
        return symbol(xi) + B

    return MatrixSymbol(func, symbol.dim, symbol.size, orders, radius=symbol.radius,
                        name=name or f"{symbol.name}+B")


def smooth_step(r, r0, r1):
    """C-infinity step: 0 for r <= r0, 1 for r >= r1."""
    r = np.asarray(r, dtype=float)
    s = np.clip((r - r0) / (r1 - r0), 0.0, 1.0)

    def g(x):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)

    a, b = g(s), g(1.0 - s)
    return a / (a + b)


# ----------------------------------------------------------------------------
# homogeneity


def homogenize(component, check=True):
    """Strictly homogeneous version of a component homogeneous for ``|xi| >= R``.

    Radial extension from the sphere of radius ``r0 = R + 1``:
    ``f_h(xi) = (|xi| / r0)**d * f(r0 * xi / |xi|)``.
    """
    if component.strict:
        return component
    d = float(component.degree)
    r0 = float(component.radius) + 1.0
    if check:
        _require_homogeneous(component)

    def func(xi):
        xi = np.asarray(xi, dtype=float)
        r = frequency_norm(xi)
        if np.any(r == 0.0):
            raise DomainError("homogenized component is undefined at xi = 0")
        eta = xi * (r0 / r)[..., None]
        return (r / r0)[..., None, None] ** d * component(eta)

    return HomogeneousComponent(d, func, strict=True, radius=component.radius, dim=component.dim)


def _probe_set(n, radius, count=32, scales=8):
    dirs = unit_directions(n, count) if n > 1 else np.array([[1.0], [-1.0]])
    base = radial_points(dirs, [radius * 1.5]).reshape(-1, n)
    ts = 2.0 ** np.arange(1, scales + 1) / 2.0 ** 0.5
    return base, ts


def homogeneity_defect(component, n, count=32, scales=8):
    """Max relative defect ``|f(t xi) - t^d f(xi)| / |t^d f(xi)|`` on a
    ``count`` direction x ``scales`` scale probe set with ``|xi| >= R``."""
    base, ts = _probe_set(n, max(component.radius, 1e-3), count, scales)
    f0 = component(base)
    worst = 0.0
    for t in ts:
        ref = t ** component.degree * f0
        diff = component(t * base) - ref
        scale = np.maximum(np.abs(ref).max(axis=(-2, -1)), 1e-300)
        worst = max(worst, float((np.abs(diff).max(axis=(-2, -1)) / scale).max()))
    return worst


def _require_homogeneous(component, tol=1e-10):
    n = component.dim or _infer_dim(component)
    defect = homogeneity_defect(component, n, count=8, scales=3)
    if defect > tol:
        raise ArgumentError(f"component is not homogeneous of degree {component.degree} "
                            f"beyond radius {component.radius} (defect {defect:.3g})")


def _infer_dim(component):
    for n in (1, 2, 3, 4):
        try:
            component(np.full((1, n), 2.0 * component.radius + 1.0))
            return n
        except (ValueError, IndexError, ArgumentError):
            continue
    raise ArgumentError("cannot infer spatial dimension of component")


# ----------------------------------------------------------------------------
# scaling limit and principal part


DEFAULT_LADDER = (64.0, 128.0, 256.0, 512.0, 1024.0)


def _neville_at_zero(h, values):
    """Polynomial extrapolation of ``values(h)`` to ``h = 0`` (Neville)."""
    P = [np.asarray(v, dtype=complex) for v in values]
    h = list(h)
    m = len(P)
    for level in range(1, m):
        P = [(h[i + level] * P[i] - h[i] * P[i + 1]) / (h[i + level] - h[i])
             for i in range(m - level)]
    return P[0]


def scaling_limit(symbol, xi, k_ladder=DEFAULT_LADDER, order=None):
    """Ladder ``k**-mu a(k xi)`` and its extrapolated limit as ``k -> inf``.

    Parameters
    ----------
    symbol : MatrixSymbol
    xi : array, shape (n,) or (..., n)
        Nonzero frequencies.
    k_ladder : increasing sequence of reals >= 1
    order : float, optional
        Exponent mu; defaults to ``symbol.order``.

    Returns
    -------
    ladder : list of arrays, one per k
    limit : array
        Richardson/Neville extrapolation in ``h = 1/k`` to ``h = 0``.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(frequency_norm(xi) == 0.0):
        raise DomainError("scaling limit undefined at xi = 0")
    ks = np.asarray(k_ladder, dtype=float)
    if ks.ndim != 1 or ks.size < 1 or np.any(np.diff(ks) <= 0) or ks[0] < 1:
        raise ArgumentError("k_ladder must be increasing with min >= 1")
    mu = symbol.order if order is None else float(order)
    ladder = [k ** (-mu) * symbol(k * xi) for k in ks]
    if ks.size == 1:
        return ladder, ladder[0]
    return ladder, _neville_at_zero(1.0 / ks, ladder)


def principal_part(symbol, k_ladder=DEFAULT_LADDER, order=None):
    """Strictly homogeneous principal symbol extracted by the scaling limit.

    Only entries whose declared order equals the symbol order contribute;
    lower-order entries vanish in the limit and are zeroed explicitly. The
    limit is computed on the unit sphere and extended by exact homogeneity.
    """
    mu = symbol.order if order is None else float(order)
    mask = symbol.order_matrix >= mu - 1e-12

    def func(xi):
        xi = np.asarray(xi, dtype=float)
        r = frequency_norm(xi)
        safe = np.where(r > 0, r, 1.0)
        eta = xi / safe[..., None]
        _, lim = scaling_limit(symbol, np.where((r > 0)[..., None], eta, 1.0 / np.sqrt(symbol.dim)),
                               k_ladder, order=mu)
        lim = np.where(mask, lim, 0.0)
        out = (r ** mu)[..., None, None] * lim if mu != 0 else lim
        return np.where((r > 0)[..., None, None], out, 0.0)

    orders = np.where(mask, mu, NEG_INF)
    return MatrixSymbol(func, symbol.dim, symbol.size, orders, radius=symbol.radius,
                        name=f"principal({symbol.name})")


def component_sum(symbol, m):
    """``sum_{j <= m} a_j`` from the declared components."""
    comps = symbol.components[: m + 1]
    if len(comps) < m + 1:
        raise ArgumentError(f"symbol declares only {len(symbol.components)} components")

    def total(xi):
        return sum(c(xi) for c in comps)

    return total


def expansion_decay(symbol, m, directions=None, radii=None):
    """Fitted radial exponent of ``max_ij |a - sum_{j<=m} a_j|`` (expected
    ``<= mu - m - 1``)."""
    n = symbol.dim
    directions = unit_directions(n, 8) if directions is None else directions
    radii = 2.0 ** np.arange(4, 11) if radii is None else np.asarray(radii, float)
    pts = radial_points(directions, radii)
    rem = symbol(pts) - component_sum(symbol, m)(pts)
    mag = np.abs(rem).max(axis=(-2, -1)).max(axis=0)
    mag = np.maximum(mag, 1e-300)
    return float(np.polyfit(np.log(radii), np.log(mag), 1)[0])


def validate_orders(symbol, directions=None, radii=None, tol=0.05):
    """Check declared entry orders against radial growth fits.

    Returns a dict ``(i, j) -> fitted slope`` and raises :class:`ArgumentError`
    when a slope misses its declared order by more than ``tol`` or a
    declared-zero entry is nonzero.
    """
    n = symbol.dim
    directions = unit_directions(n, 8) if directions is None else directions
    radii = 2.0 ** np.arange(8, 15) if radii is None else np.asarray(radii, float)
    vals = np.abs(symbol(radial_points(directions, radii)))  # (D, K, N, N)
    peak = vals.max(axis=0)  # (K, N, N)
    logs = np.log(radii)
    slopes = {}
    bad = []
    for i in range(symbol.size):
        for j in range(symbol.size):
            declared = symbol.order_matrix[i, j]
            entry = peak[:, i, j]
            if declared == NEG_INF:
                if np.any(entry > 0):
                    bad.append(((i, j), "declared zero but nonzero"))
                continue
            if np.all(entry == 0):
                slopes[(i, j)] = NEG_INF
                continue
            slope = float(np.polyfit(logs, np.log(np.maximum(entry, 1e-300)), 1)[0])
            slopes[(i, j)] = slope
            if abs(slope - declared) > tol:
                bad.append(((i, j), f"slope {slope:.3f} vs declared {declared}"))
    if bad:
        raise ArgumentError(f"order matrix of {symbol.name} inconsistent: {bad}")
    return slopes


# ----------------------------------------------------------------------------
# derivative estimates


_CENTRAL = {
    0: ((0, 1.0),),
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
    4: ((-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)),
}


def multi_indices(n, max_order, include_zero=False):
    out = []

    def rec(prefix, left):
        if len(prefix) == n:
            if include_zero or sum(prefix):
                out.append(tuple(prefix))
            return
        for k in range(left + 1):
            rec(prefix + [k], left - k)

    rec([], max_order)
    return sorted(out, key=lambda a: (sum(a), tuple(-x for x in a)))


def derivative(symbol_fn, xi, alpha, step):
    """Central finite-difference ``d^alpha f(xi)`` with per-point step."""
    xi = np.asarray(xi, dtype=float)
    step = np.asarray(step, dtype=float)
    total = 0.0
    stencils = [_CENTRAL[a] for a in alpha]
    for combo in np.ndindex(*[len(s) for s in stencils]):
        shift = np.zeros_like(xi)
        weight = 1.0
        for axis, idx in enumerate(combo):
            off, w = stencils[axis][idx]
            shift[..., axis] = off
            weight *= w
        if weight == 0.0:
            continue
        total = total + weight * symbol_fn(xi + shift * step[..., None])
    order = sum(alpha)
    return total / (step ** order)[..., None, None]


@dataclass
class HoermanderScan:
    """Per-multi-index sup of ``<xi>^{|alpha| - mu} |d^alpha a(xi)|``."""

    order: float
    table: dict
    growth: dict
    flagged: list


def _shell_fit(r, values, min_radius=1.0):
    """Slope of log(per-dyadic-shell sup) vs log(radius), upper half of shells."""
    keep = r >= min_radius
    if not np.any(keep):
        return 0.0
    shells = np.floor(np.log2(r[keep])).astype(int)
    vals = values[keep]
    xs, ys = [], []
    for s in np.unique(shells):
        sel = shells == s
        xs.append(np.log(np.exp2(s + 0.5)))
        ys.append(np.log(max(float(vals[sel].max()), 1e-300)))
    if len(xs) < 2:
        return 0.0
    top = len(xs) // 2 if len(xs) >= 4 else 0
    return float(np.polyfit(xs[top:], ys[top:], 1)[0])


def as_points(grid_or_points, dim):
    """Frequency sample set from a FrequencyGrid-like object or an array."""
    if hasattr(grid_or_points, "symbol_frequencies"):
        pts = grid_or_points.symbol_frequencies().reshape(-1, dim)
    else:
        pts = np.asarray(grid_or_points, dtype=float).reshape(-1, dim)
    return pts


def hoermander_estimate_scan(symbol, grid, max_multi_order=2, order=None, growth_tol=0.05):
    """Scan the symbol estimates ``|d^alpha a| <= C <xi>^{mu - |alpha|}``.

    Derivatives are central differences with step ``1e-3 <xi>`` per axis.
    A multi-index is flagged when its per-shell sup grows with the radius
    (fitted log-log slope above ``growth_tol``), which is evidence against
    membership in the class of the given order.
    """
    if max_multi_order > 4:
        raise ArgumentError("max_multi_order must be <= 4")
    mu = symbol.order if order is None else float(order)
    pts = as_points(grid, symbol.dim)
    jb = japanese(pts)
    r = frequency_norm(pts)
    step = 1e-3 * jb
    table, growth, flagged = {}, {}, []
    for alpha in multi_indices(symbol.dim, max_multi_order, include_zero=True):
        d = derivative(symbol, pts, alpha, step) if sum(alpha) else symbol(pts)
        weighted = jb ** (sum(alpha) - mu) * np.abs(d).max(axis=(-2, -1))
        sup = float(weighted.max()) if weighted.size else 0.0
        table[alpha] = sup
        slope = _shell_fit(r, weighted) if sup > 1e-12 else 0.0
        growth[alpha] = slope
        if slope > growth_tol:
            flagged.append(alpha)
    return HoermanderScan(mu, table, growth, flagged)
