"""Points of the complex Grassmann manifold G(k, n) and distances between them.

A point is stored as one orthonormal n x k basis of the subspace.  Two
distances are supported, both functions of the canonical angles between
subspaces:

* projective-Frobenius: ``sqrt(sum sin^2 theta_i)``
* projective-2: ``max sin theta_i``
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .rng import complex_normal

__all__ = [
    "GrassmannPoint",
    "CanonicalAngles",
    "DimensionMismatch",
    "sample_uniform",
    "sample_uniform_batch",
    "canonical_angles",
    "distance_pf",
    "distance_p2",
    "projector",
    "projector_distance_pf",
    "projector_distance_p2",
    "pair_distances",
    "dump_points_csv",
]

ORTHONORMAL_TOL = 1e-12


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GrassmannPoint:
    """Orthonormal n x k basis representing a k-dimensional subspace of C^n."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.complex128)
        if b.ndim != 2:
            raise ValueError("basis must be a 2-D array")
        n, k = b.shape
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
        err = np.abs(b.conj().T @ b - np.eye(k)).max()
        if err > ORTHONORMAL_TOL:
            raise ValueError(f"basis columns are not orthonormal (max error {err:.2e})")
        object.__setattr__(self, "basis", b)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def from_matrix(cls, A) -> "GrassmannPoint":
        """Orthonormalize the columns of ``A`` and wrap the result."""
        A = np.asarray(A, dtype=np.complex128)
        return cls(kernels.gram_schmidt(A[None])[0])

    def rotated(self, U) -> "GrassmannPoint":
        """Another representative of the same subspace, ``basis @ U`` for unitary U."""
        return GrassmannPoint(self.basis @ np.asarray(U))


@dataclass(frozen=True)
class CanonicalAngles:
    """Canonical angles in [0, pi/2], ordered so sin^2 is nonincreasing."""

    angles: np.ndarray

    @property
    def k(self) -> int:
        return len(self.angles)

    @property
    def sin_sq(self) -> np.ndarray:
        return np.sin(self.angles) ** 2


def sample_uniform_batch(n: int, k: int, size: int, rng) -> np.ndarray:
    """Draw ``size`` Haar-uniform Stiefel bases as a (size, n, k) array.

    Each basis is the Q factor of a Ginibre matrix, with R's diagonal real
    and positive.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    return kernels.gram_schmidt(complex_normal(rng, (size, n, k)))


def sample_uniform(n: int, k: int, rng) -> GrassmannPoint:
    """One Haar-uniform point of G(k, n)."""
    return GrassmannPoint(sample_uniform_batch(n, k, 1, rng)[0])


def _check_pair(p1: GrassmannPoint, p2: GrassmannPoint):
    if (p1.n, p1.k) != (p2.n, p2.k):
        raise DimensionMismatch(
            f"points live on different manifolds: G({p1.k},{p1.n}) vs G({p2.k},{p2.n})")


def canonical_angles(p1: GrassmannPoint, p2: GrassmannPoint) -> CanonicalAngles:
    """Canonical angles between two subspaces.

    Cosines are the singular values of ``V1^H V2`` (clamped into [0, 1]).
    Sines are taken from the residual ``V2 - V1 V1^H V2`` so that small
    angles keep full relative precision; each angle is then
    ``atan2(sin, cos)``.
    """
    _check_pair(p1, p2)
    V1, V2 = p1.basis, p2.basis
    C = V1.conj().T @ V2
    cos = np.clip(np.linalg.svd(C, compute_uv=False), 0.0, 1.0)  # descending
    sin = np.clip(np.linalg.svd(V2 - V1 @ C, compute_uv=False), 0.0, 1.0)[::-1]  # ascending
    theta = np.arctan2(sin, cos)
    return CanonicalAngles(np.sort(theta)[::-1])


def distance_pf(p1: GrassmannPoint, p2: GrassmannPoint) -> float:
    """Projective-Frobenius distance, ``sqrt(sum sin^2 theta_i)``."""
    return float(np.sqrt(np.sum(canonical_angles(p1, p2).sin_sq)))


def distance_p2(p1: GrassmannPoint, p2: GrassmannPoint) -> float:
    """Projective-2 distance, ``max sin theta_i``."""
    return float(np.sin(canonical_angles(p1, p2).angles[0]))


def projector(p: GrassmannPoint) -> np.ndarray:
    return p.basis @ p.basis.conj().T


def projector_distance_pf(p1: GrassmannPoint, p2: GrassmannPoint) -> float:
    """``||P1 - P2||_F / sqrt(2)`` from the orthogonal projectors."""
    _check_pair(p1, p2)
    return float(np.linalg.norm(projector(p1) - projector(p2), "fro") / np.sqrt(2.0))


def projector_distance_p2(p1: GrassmannPoint, p2: GrassmannPoint) -> float:
    """Spectral norm of the projector difference."""
    _check_pair(p1, p2)
    return float(np.linalg.norm(projector(p1) - projector(p2), 2))


def pair_distances(Q1: np.ndarray, Q2: np.ndarray):
    """Batched ``(d_pF, d_p2)`` for stacked bases of shape (B, n, k)."""
    if Q1.shape != Q2.shape:
        raise DimensionMismatch(f"shape mismatch {Q1.shape} vs {Q2.shape}")
    pf_sq, p2_sq = kernels.pair_distances_sq(Q1, Q2)
    return np.sqrt(pf_sq), np.sqrt(p2_sq)


def dump_points_csv(points, dest) -> None:
    """Write points one per row: n, k, then re/im pairs in column-major order.

    ``dest`` is a path or an open text stream.
    """
    if hasattr(dest, "write"):
        _write_points(points, dest)
        return
    with open(dest, "w", newline="") as fh:
        _write_points(points, fh)


def _write_points(points, fh):
    writer = csv.writer(fh, lineterminator="\n")
    for p in points:
        basis = p.basis if isinstance(p, GrassmannPoint) else np.asarray(p)
        row = [basis.shape[0], basis.shape[1]]
        for z in basis.flatten(order="F"):
            row.extend((repr(float(z.real)), repr(float(z.imag))))
        writer.writerow(row)
