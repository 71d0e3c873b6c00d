"""Downlink MU-MIMO SINR under imperfect channel direction information.

Each user i has a true unit channel direction ``u_i`` (a row vector in C^N)
and reports ``v_i`` with ``|u_i v_i^H| = alpha``.  The base station only
knows the reported directions and each user's single-user SINR
``sinr_su = 1/gamma``.  Total transmit power is split evenly over the K
users, so with unit-norm precoder columns ``w_j`` the true SINR is

    SINR_i = |u_i w_i|^2 / (sum_{j != i} |u_i w_j|^2 + K gamma).

Batched helpers operate on stacks of shape (T, K, N) for the Monte Carlo
harness; the single-instance API wraps them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grassmann import GrassmannPoint
from .rng import complex_normal

__all__ = [
    "MimoScenario",
    "ChannelSet",
    "Precoder",
    "SinrReport",
    "SingularChannelError",
    "CorrelationTooHigh",
    "db",
    "from_db",
    "sample_channel_set",
    "sample_channels_batch",
    "precode_cb",
    "precode_zf_full",
    "precode_zf_npa",
    "real_sinr",
    "cb_directions",
    "zf_full_directions",
    "zf_npa_directions",
    "sinr_batch",
    "cross_powers",
    "cross_power_sum",
    "user_sinr_batch",
    "estimate_cb",
    "estimate_cb_expected",
    "estimate_zf",
    "zf_expected_lower_bound",
    "gain_zf_cb",
    "gain_zf_cb_asymptotic",
    "zf_ideal_sinr",
    "zf_ideal_expected",
]

UNIT_TOL = 1e-12
# reciprocal condition number of V V^H below which ZF is refused
SINGULAR_RCOND = 1e-12


class SingularChannelError(np.linalg.LinAlgError):
    """Reported directions are numerically linearly dependent."""


class CorrelationTooHigh(ValueError):
    """Cross-power sum z >= 1, outside the range of the ZF approximation."""


def db(x):
    return 10.0 * np.log10(x)


def from_db(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


@dataclass(frozen=True)
class MimoScenario:
    """One MU-MIMO configuration.

    Parameters
    ----------
    N : int
        Base-station antennas.
    K : int
        Co-scheduled single-antenna users, ``2 <= K <= N``.
    alpha : float
        CSI correlation ``|u_i v_i^H|`` in (0, 1].
    sinr_su : float
        Linear single-user SINR known at the base station.
    """

    N: int
    K: int
    alpha: float
    sinr_su: float

    def __post_init__(self):
        for name in ("N", "K"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise TypeError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not 2 <= self.K <= self.N:
            raise ValueError(f"need 2 <= K <= N, got N={self.N}, K={self.K}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.sinr_su > 0.0 or not math.isfinite(self.sinr_su):
            raise ValueError(f"sinr_su must be positive and finite, got {self.sinr_su}")

    @classmethod
    def from_db(cls, N, K, alpha, sinr_su_db) -> "MimoScenario":
        return cls(N, K, alpha, float(from_db(sinr_su_db)))

    @property
    def gamma(self) -> float:
        return 1.0 / self.sinr_su

    @property
    def k_gamma(self) -> float:
        return self.K / self.sinr_su


@dataclass(frozen=True)
class ChannelSet:
    """True directions ``u`` and reported directions ``v`` as (K, N) rows."""

    true_directions: np.ndarray
    reported_directions: np.ndarray
    channel_gains: np.ndarray

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.true_directions, dtype=np.complex128))
        v = np.atleast_2d(np.asarray(self.reported_directions, dtype=np.complex128))
        g = np.atleast_1d(np.asarray(self.channel_gains, dtype=float))
        if u.shape != v.shape or g.shape != (u.shape[0],):
            raise ValueError("true/reported directions and gains have inconsistent shapes")
        for name, m in (("true", u), ("reported", v)):
            err = np.abs(np.linalg.norm(m, axis=1) - 1.0).max()
            if err > UNIT_TOL:
                raise ValueError(f"{name} directions are not unit norm (error {err:.2e})")
        if np.any(g <= 0):
            raise ValueError("channel gains must be positive")
        object.__setattr__(self, "true_directions", u)
        object.__setattr__(self, "reported_directions", v)
        object.__setattr__(self, "channel_gains", g)

    @classmethod
    def from_channels(cls, H, V=None) -> "ChannelSet":
        """Build from raw channel rows ``H``; ``V`` defaults to ideal CSI."""
        H = np.atleast_2d(np.asarray(H, dtype=np.complex128))
        gains = np.linalg.norm(H, axis=1)
        U = H / gains[:, None]
        return cls(U, U if V is None else V, gains)

    @property
    def K(self) -> int:
        return self.true_directions.shape[0]

    @property
    def N(self) -> int:
        return self.true_directions.shape[1]

    @property
    def correlations(self) -> np.ndarray:
        """``|u_i v_i^H|`` per user."""
        return np.abs(np.sum(self.true_directions * self.reported_directions.conj(), axis=1))

    def true_points(self):
        return [GrassmannPoint(u[:, None]) for u in self.true_directions]

    def reported_points(self):
        return [GrassmannPoint(v[:, None]) for v in self.reported_directions]


@dataclass(frozen=True)
class Precoder:
    """Unit-norm precoding directions as the columns of an (N, K) array.

    The per-user power scale ``sqrt(P/K)`` with P = 1 is kept alongside.
    """

    vectors: np.ndarray
    kind: str

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.vectors.shape[1])


@dataclass(frozen=True)
class SinrReport:
    per_user_linear: np.ndarray
    clamped: np.ndarray | None = None

    @property
    def per_user_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return db(self.per_user_linear)


# -- batched kernels -------------------------------------------------------

def sample_channels_batch(T: int, N: int, K: int, alpha: float, rng):
    """Draw T independent channel sets.

    Returns
    -------
    U, V : ndarray, shape (T, K, N)
        True and reported unit directions with ``|u_i v_i^H| = alpha``.
    gains : ndarray, shape (T, K)
        Channel norms ``||h_i||``.
    """
    H = complex_normal(rng, (T, K, N))
    gains = _row_norms(H)
    U = H / gains[..., None]
    # uniform direction in the orthogonal complement of u_i
    q = complex_normal(rng, (T, K, N))
    q -= np.einsum("tkn,tkn->tk", U.conj(), q)[..., None] * U
    q /= _row_norms(q)[..., None]
    phases = np.exp(2j * np.pi * rng.random((2, T, K, 1)))
    V = (alpha * phases[0]) * U
    V += (math.sqrt(max(0.0, 1.0 - alpha * alpha)) * phases[1]) * q
    V /= _row_norms(V)[..., None]
    return U, V, gains


def _row_norms(X):
    """Euclidean norms along the last axis of a complex array."""
    Xf = X.view(np.float64)
    return np.sqrt(np.einsum("...i,...i->...", Xf, Xf))


def _normalize_columns(W):
    norms = np.sqrt(np.einsum("...nk,...nk->...k", W.real, W.real)
                    + np.einsum("...nk,...nk->...k", W.imag, W.imag))
    return W / norms[..., None, :], norms


def cb_directions(V):
    """Conjugate beamforming: column i is ``v_i^H``."""
    return np.conj(np.swapaxes(V, -1, -2))


def zf_full_directions(V):
    """Zero-forcing columns ``V^H (V V^H)^-1``, unit-normalized.

    Returns the (T, N, K) directions and a boolean mask of trials whose
    Gram matrix was numerically singular (their columns are NaN).
    """
    VH = cb_directions(V)
    gram = V @ VH
    with np.errstate(all="ignore"):
        try:
            inv = np.linalg.inv(gram)
            # 1-norm condition number; exact-singular batches fall back per trial
            cond = (np.abs(gram).sum(axis=-2).max(axis=-1)
                    * np.abs(inv).sum(axis=-2).max(axis=-1))
        except np.linalg.LinAlgError:
            inv = np.full_like(gram, np.nan)
            cond = np.full(gram.shape[:-2], np.inf)
            for idx in np.ndindex(gram.shape[:-2]):
                try:
                    inv[idx] = np.linalg.inv(gram[idx])
                except np.linalg.LinAlgError:
                    continue
                cond[idx] = np.abs(gram[idx]).sum(0).max() * np.abs(inv[idx]).sum(0).max()
    bad = ~(cond < 1.0 / SINGULAR_RCOND)
    with np.errstate(all="ignore"):
        W = _normalize_columns(VH @ inv)[0]
    W[bad] = np.nan
    return W, bad


def zf_npa_directions(V):
    """Zero-forcing with ``(H H^H)^-1`` replaced by the identity.

    Column i is ``(I - H_i^H H_i) v_i^H`` where ``H_i`` stacks the other
    reported directions; with unit rows this equals ``V^H (2I - V V^H)``.
    Trials with a (near) zero-norm column are flagged in the returned mask.
    """
    VH = cb_directions(V)
    K = V.shape[-2]
    with np.errstate(all="ignore"):
        W, norms = _normalize_columns(VH @ (2.0 * np.eye(K) - V @ VH))
    bad = np.any(norms < 1e-12, axis=-1)
    W[bad] = np.nan
    return W, bad


def sinr_batch(U, W, k_gamma):
    """True SINR of every user, shape (T, K), for unit-norm columns W."""
    P = np.abs(U @ W) ** 2
    signal = np.diagonal(P, axis1=-2, axis2=-1)
    return signal / (P.sum(axis=-1) - signal + k_gamma)


def user_sinr_batch(U, W, k_gamma, user=0):
    """True SINR of one user per trial, shape (T,); cheaper than ``sinr_batch``."""
    P = np.abs(np.einsum("tn,tnk->tk", U[:, user], W)) ** 2
    signal = P[:, user]
    return signal / (P.sum(axis=-1) - signal + k_gamma)


def cross_power_sum(V, user=0):
    """``z = sum_{j != user} |v_user v_j^H|^2`` per trial, shape (T,)."""
    c = np.abs(np.einsum("tn,tkn->tk", V[:, user].conj(), V)) ** 2
    return c.sum(axis=-1) - c[:, user]


def cross_powers(V):
    """``|v_i v_j^H|^2`` with the diagonal zeroed, shape (..., K, K)."""
    C = np.abs(V @ cb_directions(V)) ** 2
    idx = np.arange(V.shape[-2])
    C[..., idx, idx] = 0.0
    return C


# -- single-instance API ---------------------------------------------------

def sample_channel_set(s: MimoScenario, rng) -> ChannelSet:
    U, V, g = sample_channels_batch(1, s.N, s.K, s.alpha, rng)
    return ChannelSet(U[0], V[0], g[0])


def precode_cb(cs: ChannelSet) -> Precoder:
    return Precoder(cb_directions(cs.reported_directions), "CB")


def precode_zf_full(cs: ChannelSet) -> Precoder:
    """Project each ``v_i^H`` onto the null space of the other reported rows."""
    W, bad = zf_full_directions(cs.reported_directions[None])
    if bad[0]:
        raise SingularChannelError("reported directions are numerically linearly dependent")
    return Precoder(W[0], "ZF-full")


def precode_zf_npa(cs: ChannelSet) -> Precoder:
    W, bad = zf_npa_directions(cs.reported_directions[None])
    if bad[0]:
        raise SingularChannelError("ZF-NPA projection has zero norm")
    return Precoder(W[0], "ZF-NPA")


def real_sinr(cs: ChannelSet, p: Precoder, s: MimoScenario) -> SinrReport:
    """Ground-truth SINR of each user in ``cs``.

    Noise is set per user so that the single-user SINR equals
    ``s.sinr_su``; power is split over the users actually present in
    ``cs`` (so a one-user set reproduces ``sinr_su``).
    """
    if p.vectors.shape != (cs.N, cs.K):
        raise ValueError(f"precoder shape {p.vectors.shape} does not match "
                         f"channel set ({cs.N}, {cs.K})")
    return SinrReport(sinr_batch(cs.true_directions[None], p.vectors[None],
                                 cs.K * s.gamma)[0])


# -- closed forms ----------------------------------------------------------

def estimate_cb(cross_powers_i, s: MimoScenario) -> float:
    """CB estimate ``alpha^2 / (sum_j |v_i v_j^H|^2 + K gamma)``."""
    z = np.sum(cross_powers_i, axis=-1)
    return s.alpha ** 2 / (z + s.k_gamma)


def estimate_cb_expected(s: MimoScenario) -> float:
    """Mean CB SINR ``alpha^2 N / (K + K N gamma - 1)``."""
    return s.alpha ** 2 * s.N / (s.K + s.K * s.N * s.gamma - 1)


def _check_z(z):
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("cross-power sum must be nonnegative")
    if np.any(z >= 1):
        raise CorrelationTooHigh(
            "cross-power sum z >= 1: users too correlated for the ZF approximation")
    return z


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def estimate_zf(z, s: MimoScenario):
    """ZF estimate ``alpha^2 (1-z)^2 / ((1 - alpha^2 - K gamma) z + K gamma)``."""
    z = _check_z(z)
    a2, kg = s.alpha ** 2, s.k_gamma
    return _scalar(a2 * (1 - z) ** 2 / ((1 - a2 - kg) * z + kg))


def zf_expected_lower_bound(s: MimoScenario) -> float:
    """Jensen lower bound on mean ZF SINR with ``E[z] = (K-1)/N`` substituted.

    ``alpha^2 (N-K+1)^2 / (N [(1 - alpha^2 - K gamma)(K-1) + N K gamma])``
    """
    a2, kg, N, K = s.alpha ** 2, s.k_gamma, s.N, s.K
    return a2 * (N - K + 1) ** 2 / (N * ((1 - a2 - kg) * (K - 1) + N * kg))


def gain_zf_cb(z, s: MimoScenario):
    """Estimated ZF/CB SINR ratio ``(1-z)^2 (z + Kg) / ((1 - a^2 - Kg) z + Kg)``."""
    z = _check_z(z)
    a2, kg = s.alpha ** 2, s.k_gamma
    return _scalar((1 - z) ** 2 * (z + kg) / ((1 - a2 - kg) * z + kg))


def gain_zf_cb_asymptotic(s: MimoScenario) -> float:
    """``gain_zf_cb`` at ``z = (K-1)/N``, cleared of fractions."""
    a2, kg, N, K = s.alpha ** 2, s.k_gamma, s.N, s.K
    return ((N - K + 1) ** 2 * (K - 1 + N * kg)
            / (N * N * ((1 - a2 - kg) * (K - 1) + N * kg)))


def zf_ideal_sinr(cs: ChannelSet, s: MimoScenario) -> SinrReport:
    """Perfect-CSI ZF estimate ``(1 - sum_{j != i} |u_i u_j^H|^2) / (K gamma)``.

    A negative bracket (strongly correlated users) is clamped to 0 and
    flagged in ``SinrReport.clamped``.
    """
    bracket = 1.0 - cross_powers(cs.true_directions).sum(axis=-1)
    clamped = bracket < 0
    return SinrReport(np.maximum(bracket, 0.0) / (cs.K * s.gamma), clamped)


def zf_ideal_expected(s: MimoScenario) -> float:
    """``(N - K + 1) / (N K gamma)``."""
    return (s.N - s.K + 1) / (s.N * s.k_gamma)
