"""Matrix primitives for SL(m+1, R) and the subgroup H.

Conventions
-----------
Vectors are rows.  An element of H is stored as ``(v, t, q)`` and represents

    u_v a_t q~ = [[t^{-1/m} q, 0], [t^{-1/m} v q, t]]

with ``q`` an integral m x m matrix of determinant one.  The block form used
throughout is ``[[A, 0], [v, det(A)^{-1}]]`` (lower block triangular).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError

DET_TOL = 1e-9
PIVOT_TOL = 1e-8


def hs_norm(M) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(np.asarray(M, dtype=float)))


def hs_norm_batch(M: np.ndarray) -> np.ndarray:
    """Frobenius norms over the trailing two axes."""
    return np.sqrt(np.einsum("...ij,...ij->...", M, M))


def _check_square(g: np.ndarray, name="g") -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DegenerateInputError(f"{name} must be square, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise DegenerateInputError(f"{name} has non-finite entries")
    return g


def check_special_linear(g, tol: float = DET_TOL, name="g") -> np.ndarray:
    """Return ``g`` as a float array after checking ``|det g - 1| <= tol``."""
    g = _check_square(g, name)
    d = np.linalg.det(g)
    if abs(d - 1.0) > tol * max(1.0, hs_norm(g) ** g.shape[0]):
        raise DegenerateInputError(f"{name} is not special linear (det = {d:.6g})")
    return g


def u_mat(v) -> np.ndarray:
    """Unipotent ``[[I, 0], [v, 1]]``."""
    v = np.asarray(v, dtype=float).ravel()
    m = v.size
    g = np.eye(m + 1)
    g[m, :m] = v
    return g


def a_mat(m: int, t: float) -> np.ndarray:
    """Diagonal ``diag(t^{-1/m}, ..., t^{-1/m}, t)``."""
    if t <= 0:
        raise DegenerateInputError("a_t requires t > 0")
    d = np.full(m + 1, t ** (-1.0 / m))
    d[m] = t
    return np.diag(d)


def embed_block(q) -> np.ndarray:
    """``q~ = [[q, 0], [0, 1]]``."""
    q = np.asarray(q, dtype=float)
    m = q.shape[0]
    g = np.eye(m + 1)
    g[:m, :m] = q
    return g


def block_lower(A, v, corner=None) -> np.ndarray:
    """Assemble ``[[A, 0], [v, c]]`` with ``c = det(A)^{-1}`` unless given."""
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    g = np.zeros((m + 1, m + 1))
    g[:m, :m] = A
    g[m, :m] = np.asarray(v, dtype=float).ravel()
    g[m, m] = 1.0 / np.linalg.det(A) if corner is None else corner
    return g


@dataclass(frozen=True)
class HElement:
    """Point ``u_v a_t q~`` of H."""

    v: np.ndarray
    t: float
    q: np.ndarray

    @property
    def m(self) -> int:
        return len(self.v)

    def matrix(self) -> np.ndarray:
        return u_mat(self.v) @ a_mat(self.m, self.t) @ embed_block(self.q)


def h_element(v, t, q) -> HElement:
    v = np.asarray(v, dtype=float).ravel()
    q = np.asarray(q)
    if q.shape != (v.size, v.size):
        raise DegenerateInputError("q must be m x m")
    if t <= 0:
        raise DegenerateInputError("t must be positive")
    if round(float(np.linalg.det(q))) != 1 or not np.array_equal(q, np.rint(q)):
        raise DegenerateInputError("q must lie in SL(m, Z)")
    return HElement(v, float(t), q.astype(np.int64))


def h_mul(h1: HElement, h2: HElement) -> HElement:
    """Group law of H in ``(v, t, q)`` coordinates."""
    m = h1.m
    qinv = np.rint(np.linalg.inv(h1.q)).astype(np.int64)
    v = h1.v + h1.t ** ((m + 1.0) / m) * (h2.v @ qinv)
    return HElement(v, h1.t * h2.t, h1.q @ h2.q)


@dataclass(frozen=True)
class BlockIwasawa:
    """``g = [[gblock, 0], [v, det(gblock)^{-1}]] k`` with ``k`` in SO(m+1)."""

    gblock: np.ndarray
    v: np.ndarray
    k: np.ndarray

    def lower(self) -> np.ndarray:
        return block_lower(self.gblock, self.v)


def block_iwasawa(g) -> BlockIwasawa:
    """Split ``g`` in SL(m+1, R) as block-lower times rotation.

    The rotation is canonical: its first m rows are the Gram-Schmidt
    orthonormalisation of the first m rows of ``g`` and its last row is the
    unit normal to them, oriented so that the corner entry is positive.  The
    resulting ``gblock`` is lower triangular with positive diagonal.
    """
    g = check_special_linear(g)
    n = g.shape[0]
    m = n - 1
    top = g[:m]
    # QR of top^T gives top = R^T Q^T with R^T lower triangular
    Qt, Rt = np.linalg.qr(top.T, mode="complete")
    R = Rt[:m, :m]
    piv = np.abs(np.diag(R))
    if piv.min() < PIVOT_TOL * hs_norm(g):
        raise DegenerateInputError("first m rows are numerically dependent")
    s = np.sign(np.diag(R))
    k = np.empty((n, n))
    k[:m] = (Qt[:, :m] * s).T
    normal = Qt[:, m].copy()
    if normal @ g[m] < 0:
        normal = -normal
    k[m] = normal
    if np.linalg.det(k) < 0:
        # only reachable when det g < 0, which check_special_linear excludes
        raise DegenerateInputError("orientation mismatch in Iwasawa split")
    L = g @ k.T
    gblock = np.tril(L[:m, :m])
    return BlockIwasawa(gblock=gblock, v=L[m, :m].copy(), k=k)


def skew_blocks(g1, g2):
    """Block data entering the skew ball.

    Returns ``(A1, v1, A2, v2)`` with ``g1^{-1} = k1 [[A1, 0], [v1, det A1^{-1}]]``
    and ``g2 = [[A2, 0], [v2, det A2^{-1}]] k2``, so that
    ``||g1^{-1} h g2|| = ||L1 h L2||`` for every ``h``.
    """
    g1 = check_special_linear(g1, name="g1")
    g2 = check_special_linear(g2, name="g2")
    # g1 = L1^{-1} k1^{-1}; invert the lower factor of g1 to get L1
    it1 = block_iwasawa(g1)
    L1 = np.linalg.inv(it1.lower())
    m = g1.shape[0] - 1
    it2 = block_iwasawa(g2)
    return L1[:m, :m].copy(), L1[m, :m].copy(), it2.gblock, it2.v


def sphere_action(w, g) -> np.ndarray:
    """``w . g = w g^{-T} / ||w g^{-T}||``."""
    w = np.asarray(w, dtype=float).ravel()
    g = _check_square(g)
    nw = np.linalg.norm(w)
    if nw == 0:
        raise DegenerateInputError("w must be nonzero")
    y = np.linalg.solve(g, w / nw)
    return y / np.linalg.norm(y)


def covolume(B) -> float:
    """``sqrt(det(B B^T))`` for a k x n basis with k <= n."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] > B.shape[1]:
        raise DegenerateInputError("basis must be k x n with k <= n")
    sv = np.linalg.svd(B, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateInputError("basis is rank deficient")
    return float(np.prod(sv))


def random_sl(n: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Random element of SL(n, R) as ``expm`` of a scaled traceless Gaussian."""
    from scipy.linalg import expm

    X = rng.standard_normal((n, n)) * scale
    X -= np.trace(X) / n * np.eye(n)
    return expm(X)


def random_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SO(n)."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q
