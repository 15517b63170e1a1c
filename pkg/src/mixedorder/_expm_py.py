"""Pure NumPy implementation of the batched matrix-exponential kernels.

Scaling and squaring with diagonal Pade approximants (Higham 2005). This is
the fallback used when the compiled ``_expm_core`` extension is missing; the
two implementations share the algorithm and the degree/theta tables.
"""

import numpy as np

PADE_DEGREES = (3, 5, 7, 9, 13)
THETA = (
    1.495585217958292e-002,
    2.539398330063230e-001,
    9.504178996162932e-001,
    2.097847961257068e000,
    5.371920351148152e000,
)
PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}

BACKEND = "python"


def _pade(A, m):
    b = PADE_COEFFS[m]
    n = A.shape[-1]
    ident = np.broadcast_to(np.eye(n, dtype=A.dtype), A.shape)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    else:
        powers = [ident, A2]
        for _ in range(2, (m + 1) // 2):
            powers.append(powers[-1] @ A2)
        U = sum(b[j] * powers[j // 2] for j in range(m, 0, -2))
        U = A @ U
        V = sum(b[j] * powers[j // 2] for j in range(m - 1, -1, -2))
    return np.linalg.solve(V - U, V + U)


def _one_norms(A):
    return np.abs(A).sum(axis=-2).max(axis=-1)


def expm_batch(A, limit=1e4, threads=0):
    """Exponentiate a stack of square matrices.

    Parameters
    ----------
    A : (M, N, N) complex ndarray
    limit : float
        Matrices with 1-norm above ``limit`` are not exponentiated; their
        output is zero and their flag is set.
    threads : int
        Ignored; present for signature parity with the compiled kernel.

    Returns
    -------
    E : (M, N, N) complex ndarray
    flags : (M,) bool ndarray
    """
    A = np.ascontiguousarray(A, dtype=np.complex128)
    M, n, _ = A.shape
    out = np.zeros_like(A)
    norms = _one_norms(A) if M else np.zeros(0)
    flags = ~(norms <= limit)
    degree_idx = np.searchsorted(THETA, norms)  # first theta >= norm
    for k, m in enumerate(PADE_DEGREES[:-1]):
        sel = np.nonzero((degree_idx == k) & ~flags)[0]
        if sel.size:
            out[sel] = _pade(A[sel], m)
    sel = np.nonzero((degree_idx >= len(PADE_DEGREES) - 1) & ~flags)[0]
    if sel.size:
        s = np.maximum(0, np.ceil(np.log2(norms[sel] / THETA[-1]))).astype(int)
        As = A[sel] / (2.0 ** s)[:, None, None]
        E = _pade(As, 13)
        for k in range(int(s.max()) if s.size else 0):
            live = s > k
            E[live] = E[live] @ E[live]
        out[sel] = E
    return out, flags


def expm_apply_batch(A, v, limit=1e4, threads=0):
    """Compute ``expm(A[k]) @ v[k]`` for every k.

    Returns
    -------
    w : (M, N) complex ndarray
    flags : (M,) bool ndarray
    """
    E, flags = expm_batch(A, limit)
    v = np.asarray(v, dtype=np.complex128)
    return np.einsum("kij,kj->ki", E, v), flags
