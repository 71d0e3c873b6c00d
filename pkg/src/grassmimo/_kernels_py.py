"""Pure numpy implementations of the batched hot kernels.

These mirror ``_kernels.pyx`` algorithm for algorithm and are used when the
compiled extension is unavailable.
"""
import numpy as np

__all__ = ["gram_schmidt", "pair_distances_sq"]


def gram_schmidt(A):
    """Orthonormalize the columns of each matrix in a batch.

    Classical Gram-Schmidt with one re-orthogonalization pass, so the
    implied R factor has a real positive diagonal.

    Parameters
    ----------
    A : ndarray, shape (B, n, k), complex128
        Batch of full-column-rank matrices.

    Returns
    -------
    Q : ndarray, shape (B, n, k), complex128
    """
    A = np.asarray(A, dtype=np.complex128)
    Q = np.empty_like(A)
    for j in range(A.shape[2]):
        v = A[:, :, j].copy()
        if j:
            basis = Q[:, :, :j]
            for _ in range(2):
                coef = np.einsum("bnk,bn->bk", basis.conj(), v)
                v -= np.einsum("bnk,bk->bn", basis, coef)
        norm = np.sqrt(np.einsum("bn,bn->b", v.real, v.real)
                       + np.einsum("bn,bn->b", v.imag, v.imag))
        Q[:, :, j] = v / norm[:, None]
    return Q


def pair_distances_sq(Q1, Q2):
    """Squared projective-F and projective-2 distances for a batch of pairs.

    Both come from the residual ``R = Q2 - Q1 (Q1^H Q2)``, whose singular
    values are the sines of the canonical angles.

    Returns
    -------
    pf_sq, p2_sq : ndarray, shape (B,)
    """
    Q1 = np.asarray(Q1, dtype=np.complex128)
    Q2 = np.asarray(Q2, dtype=np.complex128)
    C = np.matmul(Q1.conj().transpose(0, 2, 1), Q2)
    R = Q2 - np.matmul(Q1, C)
    G = np.matmul(R.conj().transpose(0, 2, 1), R)
    pf_sq = np.einsum("bii->b", G).real.copy()
    k = Q1.shape[2]
    if k == 1:
        p2_sq = pf_sq.copy()
    else:
        p2_sq = np.linalg.eigvalsh(G)[:, -1]
    np.clip(pf_sq, 0.0, float(k), out=pf_sq)
    np.clip(p2_sq, 0.0, 1.0, out=p2_sq)
    return pf_sq, p2_sq
