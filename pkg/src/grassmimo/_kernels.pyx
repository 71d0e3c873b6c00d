# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched kernels for Grassmann Monte Carlo.

Same algorithms as ``_kernels_py``: classical Gram-Schmidt with one
re-orthogonalization pass, and canonical-angle sines from the residual
``Q2 - Q1 (Q1^H Q2)``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_lapack cimport zheev

cnp.import_array()

ctypedef double complex cplx


cdef inline double cabs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx cconj(cplx z) noexcept nogil:
    return z.real - 1j * z.imag


def gram_schmidt(A):
    """Orthonormalize the columns of each (n, k) matrix in a (B, n, k) batch."""
    cdef cnp.ndarray[cplx, ndim=3, mode="c"] a = np.ascontiguousarray(A, dtype=np.complex128)
    cdef Py_ssize_t B = a.shape[0], n = a.shape[1], k = a.shape[2]
    cdef cnp.ndarray[cplx, ndim=3, mode="c"] q = np.empty((B, n, k), dtype=np.complex128)
    cdef cplx[:, :, ::1] av = a
    cdef cplx[:, :, ::1] qv = q
    cdef Py_ssize_t b, i, j, l
    cdef int rep
    cdef cplx c
    cdef double nrm
    cdef cplx *v = <cplx *> malloc(n * sizeof(cplx))
    cdef cplx *coef = <cplx *> malloc((k + 1) * sizeof(cplx))
    if v == NULL or coef == NULL:
        free(v)
        free(coef)
        raise MemoryError()
    try:
        with nogil:
            for b in range(B):
                for j in range(k):
                    for i in range(n):
                        v[i] = av[b, i, j]
                    for rep in range(2 if j > 0 else 0):
                        for l in range(j):
                            c = 0
                            for i in range(n):
                                c = c + cconj(qv[b, i, l]) * v[i]
                            coef[l] = c
                        for l in range(j):
                            c = coef[l]
                            for i in range(n):
                                v[i] = v[i] - qv[b, i, l] * c
                    nrm = 0.0
                    for i in range(n):
                        nrm += cabs2(v[i])
                    nrm = sqrt(nrm)
                    for i in range(n):
                        qv[b, i, j] = v[i] / nrm
    finally:
        free(v)
        free(coef)
    return q


cdef double _lambda_max(cplx *g, int k, cplx *work, int lwork,
                        double *rwork, double *w) noexcept nogil:
    # largest eigenvalue of a k x k Hermitian matrix stored column-major in g
    cdef double a, d, h
    cdef int info = 0
    cdef char jobz = b'N'
    cdef char uplo = b'U'
    if k == 1:
        return g[0].real
    if k == 2:
        a = g[0].real
        d = g[3].real
        h = 0.5 * (a - d)
        return 0.5 * (a + d) + sqrt(h * h + cabs2(g[2]))
    zheev(&jobz, &uplo, &k, <double complex *> g, &k, w,
          <double complex *> work, &lwork, rwork, &info)
    return w[k - 1]


def pair_distances_sq(Q1, Q2):
    """Squared projective-F and projective-2 distances for batched pairs."""
    cdef cplx[:, :, ::1] q1 = np.ascontiguousarray(Q1, dtype=np.complex128)
    cdef cplx[:, :, ::1] q2 = np.ascontiguousarray(Q2, dtype=np.complex128)
    cdef Py_ssize_t B = q1.shape[0], n = q1.shape[1]
    cdef int k = <int> q1.shape[2]
    if q2.shape[0] != B or q2.shape[1] != n or q2.shape[2] != k:
        raise ValueError("Q1 and Q2 must have identical shapes")
    pf_arr = np.empty(B, dtype=np.float64)
    p2_arr = np.empty(B, dtype=np.float64)
    cdef double[::1] pf = pf_arr
    cdef double[::1] p2 = p2_arr
    cdef int lwork = max(1, 2 * k)
    cdef cplx *c = <cplx *> malloc(k * k * sizeof(cplx))
    cdef cplx *r = <cplx *> malloc(n * k * sizeof(cplx))
    cdef cplx *g = <cplx *> malloc(k * k * sizeof(cplx))
    cdef cplx *work = <cplx *> malloc(lwork * sizeof(cplx))
    cdef double *rwork = <double *> malloc(max(1, 3 * k - 2) * sizeof(double))
    cdef double *w = <double *> malloc(k * sizeof(double))
    cdef Py_ssize_t b, i, s, t
    cdef cplx acc
    cdef double tr, lm
    if c == NULL or r == NULL or g == NULL or work == NULL or rwork == NULL or w == NULL:
        free(c); free(r); free(g); free(work); free(rwork); free(w)
        raise MemoryError()
    try:
        with nogil:
            for b in range(B):
                # C = Q1^H Q2, row-major c[s*k + t]
                for s in range(k):
                    for t in range(k):
                        acc = 0
                        for i in range(n):
                            acc = acc + cconj(q1[b, i, s]) * q2[b, i, t]
                        c[s * k + t] = acc
                # R = Q2 - Q1 C, row-major r[i*k + t]
                for i in range(n):
                    for t in range(k):
                        acc = q2[b, i, t]
                        for s in range(k):
                            acc = acc - q1[b, i, s] * c[s * k + t]
                        r[i * k + t] = acc
                # G = R^H R, column-major g[s + t*k]
                tr = 0.0
                for s in range(k):
                    for t in range(k):
                        acc = 0
                        for i in range(n):
                            acc = acc + cconj(r[i * k + s]) * r[i * k + t]
                        g[s + t * k] = acc
                    tr += g[s + s * k].real
                lm = _lambda_max(g, k, work, lwork, rwork, w)
                if tr < 0.0:
                    tr = 0.0
                elif tr > k:
                    tr = k
                if lm < 0.0:
                    lm = 0.0
                elif lm > 1.0:
                    lm = 1.0
                pf[b] = tr
                p2[b] = lm
    finally:
        free(c); free(r); free(g); free(work); free(rwork); free(w)
    return pf_arr, p2_arr
