# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batched matrix-exponential kernels.

Same algorithm as ``_expm_py`` (scaling and squaring, diagonal Pade of
degree 3..13), written as a per-matrix loop so that a grid of small systems
is exponentiated without Python overhead. Work is split over OpenMP threads;
every matrix is independent, so results do not depend on the schedule.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange, parallel
from libc.stdlib cimport malloc, free
from libc.math cimport ceil, log2, ldexp, isnan

cnp.import_array()

BACKEND = "cython"

cdef double THETA[5]
THETA[:] = [1.495585217958292e-002, 2.539398330063230e-001,
            9.504178996162932e-001, 2.097847961257068e000,
            5.371920351148152e000]
cdef int DEGREES[5]
DEGREES[:] = [3, 5, 7, 9, 13]
cdef double B13[14]
B13[:] = [64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
          1187353796428800.0, 129060195264000.0, 10559470521600.0,
          670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
          960960.0, 16380.0, 182.0, 1.0]
cdef double B9[10]
B9[:] = [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
         2162160.0, 110880.0, 3960.0, 90.0, 1.0]
cdef double B7[8]
B7[:] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0]
cdef double B5[6]
B5[:] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]
cdef double B3[4]
B3[:] = [120.0, 60.0, 12.0, 1.0]

# workspace slots, each n*n
DEF NSLOT = 8


cdef inline void _matmul(const double complex* X, const double complex* Y,
                         double complex* Z, int n) noexcept nogil:
    cdef int i, j, k
    cdef double complex acc
    for i in range(n):
        for j in range(n):
            acc = 0
            for k in range(n):
                acc = acc + X[i * n + k] * Y[k * n + j]
            Z[i * n + j] = acc


cdef inline double _norm1(const double complex* X, int n) noexcept nogil:
    cdef int i, j
    cdef double col, best = 0.0
    cdef double complex z
    for j in range(n):
        col = 0.0
        for i in range(n):
            z = X[i * n + j]
            col = col + abs(z)
        if isnan(col):
            return col
        if col > best:
            best = col
    return best


cdef int _solve(double complex* P, double complex* Q, int n, int* piv) noexcept nogil:
    """Solve P X = Q in place (X overwrites Q); partial pivoting LU."""
    cdef int i, j, k, p
    cdef double best, mag
    cdef double complex tmp, f
    for k in range(n):
        p = k
        best = abs(P[k * n + k])
        for i in range(k + 1, n):
            mag = abs(P[i * n + k])
            if mag > best:
                best = mag
                p = i
        if best == 0.0:
            return -1
        if p != k:
            for j in range(n):
                tmp = P[k * n + j]; P[k * n + j] = P[p * n + j]; P[p * n + j] = tmp
                tmp = Q[k * n + j]; Q[k * n + j] = Q[p * n + j]; Q[p * n + j] = tmp
        for i in range(k + 1, n):
            f = P[i * n + k] / P[k * n + k]
            if f != 0:
                for j in range(k, n):
                    P[i * n + j] = P[i * n + j] - f * P[k * n + j]
                for j in range(n):
                    Q[i * n + j] = Q[i * n + j] - f * Q[k * n + j]
    for k in range(n - 1, -1, -1):
        for j in range(n):
            tmp = Q[k * n + j]
            for i in range(k + 1, n):
                tmp = tmp - P[k * n + i] * Q[i * n + j]
            Q[k * n + j] = tmp / P[k * n + k]
    return 0


cdef int _expm_one(const double complex* Ain, double complex* out, int n,
                   double limit, double complex* work, int* piv) noexcept nogil:
    """Exponentiate one n x n matrix into ``out``. Returns 1 if flagged."""
    cdef int nn = n * n
    cdef double complex* A = work
    cdef double complex* A2 = work + nn
    cdef double complex* A4 = work + 2 * nn
    cdef double complex* A6 = work + 3 * nn
    cdef double complex* U = work + 4 * nn
    cdef double complex* V = work + 5 * nn
    cdef double complex* T1 = work + 6 * nn
    cdef double complex* T2 = work + 7 * nn
    cdef int i, j, k, s, m, idx
    cdef double nrm = _norm1(Ain, n)
    cdef double scale
    cdef const double* b

    if not (nrm <= limit):
        for i in range(nn):
            out[i] = 0
        return 1

    m = 13
    for idx in range(5):
        if nrm <= THETA[idx]:
            m = DEGREES[idx]
            break
    s = 0
    if m == 13 and nrm > THETA[4]:
        s = <int> ceil(log2(nrm / THETA[4]))
        if s < 0:
            s = 0
    scale = ldexp(1.0, -s)
    for i in range(nn):
        A[i] = Ain[i] * scale

    _matmul(A, A, A2, n)
    if m == 13:
        b = B13
        _matmul(A2, A2, A4, n)
        _matmul(A4, A2, A6, n)
        for i in range(nn):
            T1[i] = b[13] * A6[i] + b[11] * A4[i] + b[9] * A2[i]
        _matmul(A6, T1, T2, n)
        for i in range(nn):
            T2[i] = T2[i] + b[7] * A6[i] + b[5] * A4[i] + b[3] * A2[i]
        for i in range(n):
            T2[i * n + i] = T2[i * n + i] + b[1]
        _matmul(A, T2, U, n)
        for i in range(nn):
            T1[i] = b[12] * A6[i] + b[10] * A4[i] + b[8] * A2[i]
        _matmul(A6, T1, V, n)
        for i in range(nn):
            V[i] = V[i] + b[6] * A6[i] + b[4] * A4[i] + b[2] * A2[i]
        for i in range(n):
            V[i * n + i] = V[i * n + i] + b[0]
    else:
        if m == 3:
            b = B3
        elif m == 5:
            b = B5
        elif m == 7:
            b = B7
        else:
            b = B9
        # T1 accumulates odd part (before the A factor), V the even part;
        # A4 holds the running power A2^k.
        for i in range(nn):
            T1[i] = b[3] * A2[i]
            V[i] = b[2] * A2[i]
            A4[i] = A2[i]
        for i in range(n):
            T1[i * n + i] = T1[i * n + i] + b[1]
            V[i * n + i] = V[i * n + i] + b[0]
        k = 2
        while 2 * k <= m - 1:
            _matmul(A4, A2, A6, n)
            for i in range(nn):
                A4[i] = A6[i]
                T1[i] = T1[i] + b[2 * k + 1] * A4[i]
                V[i] = V[i] + b[2 * k] * A4[i]
            k = k + 1
        _matmul(A, T1, U, n)

    # P = V - U, Q = V + U ; solve P X = Q
    for i in range(nn):
        T1[i] = V[i] - U[i]
        T2[i] = V[i] + U[i]
    if _solve(T1, T2, n, piv) != 0:
        for i in range(nn):
            out[i] = 0
        return 1
    for k in range(s):
        _matmul(T2, T2, T1, n)
        for i in range(nn):
            T2[i] = T1[i]
    for i in range(nn):
        out[i] = T2[i]
    return 0


def expm_batch(A, double limit=1e4, int threads=0):
    """Exponentiate every matrix of an (M, N, N) complex stack.

    Returns ``(E, flags)``; flagged matrices (1-norm above ``limit`` or a
    singular Pade denominator) are returned as zero.
    """
    cdef double complex[:, :, ::1] a = np.ascontiguousarray(A, dtype=np.complex128)
    cdef Py_ssize_t M = a.shape[0]
    cdef int n = <int> a.shape[1]
    out_arr = np.zeros((M, n, n), dtype=np.complex128)
    flag_arr = np.zeros(M, dtype=np.uint8)
    cdef double complex[:, :, ::1] out = out_arr
    cdef unsigned char[::1] flags = flag_arr
    cdef Py_ssize_t k
    cdef double complex* work
    cdef int* piv
    cdef int nt = threads if threads > 0 else 1
    if M == 0:
        return out_arr, flag_arr.astype(bool)
    with nogil, parallel(num_threads=nt):
        work = <double complex*> malloc(NSLOT * n * n * sizeof(double complex))
        piv = <int*> malloc(n * sizeof(int))
        for k in prange(M, schedule="static"):
            flags[k] = <unsigned char> _expm_one(&a[k, 0, 0], &out[k, 0, 0], n, limit, work, piv)
        free(work)
        free(piv)
    return out_arr, flag_arr.astype(bool)


def expm_apply_batch(A, v, double limit=1e4, int threads=0):
    """Compute ``expm(A[k]) @ v[k]`` for every k without storing the stack."""
    cdef double complex[:, :, ::1] a = np.ascontiguousarray(A, dtype=np.complex128)
    cdef double complex[:, ::1] x = np.ascontiguousarray(v, dtype=np.complex128)
    cdef Py_ssize_t M = a.shape[0]
    cdef int n = <int> a.shape[1]
    if x.shape[0] != M or x.shape[1] != n:
        raise ValueError("vector stack does not match matrix stack")
    out_arr = np.zeros((M, n), dtype=np.complex128)
    flag_arr = np.zeros(M, dtype=np.uint8)
    cdef double complex[:, ::1] out = out_arr
    cdef unsigned char[::1] flags = flag_arr
    cdef Py_ssize_t k
    cdef int i, j
    cdef double complex acc
    cdef double complex* work
    cdef double complex* E
    cdef int* piv
    cdef int nt = threads if threads > 0 else 1
    if M == 0:
        return out_arr, flag_arr.astype(bool)
    with nogil, parallel(num_threads=nt):
        work = <double complex*> malloc((NSLOT + 1) * n * n * sizeof(double complex))
        piv = <int*> malloc(n * sizeof(int))
        E = work + NSLOT * n * n
        for k in prange(M, schedule="static"):
            flags[k] = <unsigned char> _expm_one(&a[k, 0, 0], E, n, limit, work, piv)
            for i in range(n):
                acc = 0
                for j in range(n):
                    acc = acc + E[i * n + j] * x[k, j]
                out[k, i] = acc
        free(work)
        free(piv)
    return out_arr, flag_arr.astype(bool)
