"""Lattice basis reduction used to pick fiber representatives.

Bases are stored as rows.  Rank two uses Lagrange-Gauss reduction (batched);
rank three uses LLL with ``delta = 0.99``.
"""

from __future__ import annotations

import numpy as np


def lagrange_gram(G: np.ndarray, max_iter: int = 200):
    """Batched Lagrange reduction acting on Gram matrices.

    Parameters
    ----------
    G : array (..., 2, 2)
        Gram matrices of oriented bases.

    Returns
    -------
    G_red : array (..., 2, 2)
        Gram matrix of the reduced basis, ``|G01| <= G00 / 2 <= G11 / 2``.
    U : array (..., 2, 2) of int
        Unimodular change with ``B_red = U B`` and ``det U = 1``.
    """
    G = np.array(G, dtype=float, copy=True)
    shape = G.shape[:-2]
    G = G.reshape(-1, 2, 2)
    U = np.tile(np.eye(2, dtype=np.int64), (G.shape[0], 1, 1))
    a, b, c = G[:, 0, 0].copy(), G[:, 0, 1].copy(), G[:, 1, 1].copy()
    for _ in range(max_iter):
        # size-reduce b2 against b1
        k = np.rint(b / a)
        act = k != 0
        if np.any(act):
            c = c - 2 * k * b + k * k * a
            b = b - k * a
            U[:, 1, :] -= k.astype(np.int64)[:, None] * U[:, 0, :]
        # swap when b2 is shorter; (b1, b2) -> (-b2, b1) keeps orientation
        sw = c < a * (1 - 1e-13)
        if not np.any(sw) and not np.any(act):
            break
        if np.any(sw):
            a_new = np.where(sw, c, a)
            c_new = np.where(sw, a, c)
            b = np.where(sw, -b, b)
            a, c = a_new, c_new
            u0 = U[sw, 0, :].copy()
            U[sw, 0, :] = -U[sw, 1, :]
            U[sw, 1, :] = u0
        elif not np.any(act):
            break
    # tie-break so the representative is canonical on the boundary of F
    neg = b < 0
    edge = (np.abs(a - c) <= 1e-12 * a) & neg
    if np.any(edge):
        # equal lengths: (b1, b2) -> (-b2, b1) flips the sign of b
        b = np.where(edge, -b, b)
        u0 = U[edge, 0, :].copy()
        U[edge, 0, :] = -U[edge, 1, :]
        U[edge, 1, :] = u0
    half = (np.abs(2 * np.abs(b) - a) <= 1e-12 * a) & (b < 0)
    if np.any(half):
        # b = -a/2: replace b2 by b2 + b1
        c = np.where(half, c + 2 * b + a, c)
        b = np.where(half, b + a, b)
        U[half, 1, :] += U[half, 0, :]
    Gr = np.empty_like(G)
    Gr[:, 0, 0], Gr[:, 0, 1], Gr[:, 1, 0], Gr[:, 1, 1] = a, b, b, c
    return Gr.reshape(shape + (2, 2)), U.reshape(shape + (2, 2))


def gram_to_cholesky2(G: np.ndarray) -> np.ndarray:
    """Lower-triangular ``L`` with ``L L^T = G`` for batched 2 x 2 Grams."""
    L = np.zeros(G.shape)
    L[..., 0, 0] = np.sqrt(G[..., 0, 0])
    L[..., 1, 0] = G[..., 0, 1] / L[..., 0, 0]
    L[..., 1, 1] = np.sqrt(np.maximum(G[..., 1, 1] - L[..., 1, 0] ** 2, 0.0))
    return L


def lll(B: np.ndarray, delta: float = 0.99):
    """LLL-reduce the rows of ``B``.

    Returns ``(B_red, U)`` with ``B_red = U B`` and integral ``U``; the sign
    of one row is adjusted so that ``det U = 1``.
    """
    B = np.array(B, dtype=float, copy=True)
    n = B.shape[0]
    U = np.eye(n, dtype=np.int64)

    def gso(B):
        Bs = np.zeros_like(B)
        mu = np.zeros((n, n))
        for i in range(n):
            Bs[i] = B[i]
            for j in range(i):
                mu[i, j] = B[i] @ Bs[j] / (Bs[j] @ Bs[j])
                Bs[i] -= mu[i, j] * Bs[j]
        return Bs, mu

    Bs, mu = gso(B)
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 10000:
            break
        for j in range(k - 1, -1, -1):
            r = np.rint(mu[k, j])
            if r != 0:
                B[k] -= r * B[j]
                U[k] -= int(r) * U[j]
                Bs, mu = gso(B)
        if Bs[k] @ Bs[k] >= (delta - mu[k, k - 1] ** 2) * (Bs[k - 1] @ Bs[k - 1]):
            k += 1
        else:
            B[[k, k - 1]] = B[[k - 1, k]]
            U[[k, k - 1]] = U[[k - 1, k]]
            Bs, mu = gso(B)
            k = max(k - 1, 1)
    if round(np.linalg.det(U)) < 0:
        B[-1] = -B[-1]
        U[-1] = -U[-1]
    return B, U


def reduce_basis(B: np.ndarray):
    """Canonical reduced basis of the lattice spanned by the rows of ``B``.

    The orientation of ``B`` is preserved (``det U = 1``).
    """
    B = np.asarray(B, dtype=float)
    if B.shape[0] == 2:
        G = B @ B.T
        _, U = lagrange_gram(G)
        return U @ B, U
    return lll(B)


def successive_minima(B: np.ndarray) -> np.ndarray:
    """Successive minima of a rank two or three lattice given by rows of ``B``.

    Rank two reads them off a Lagrange basis.  Rank three enumerates short
    vectors around an LLL basis.
    """
    Br, _ = reduce_basis(B)
    k = Br.shape[0]
    if k == 2:
        return np.sqrt(np.sort(np.einsum("ij,ij->i", Br, Br)))
    # short-vector search: coefficients bounded via the dual basis
    G = Br @ Br.T
    Ginv = np.linalg.inv(G)
    R2 = float(np.max(np.diag(G)))
    bound = np.floor(np.sqrt(R2 * np.diag(Ginv))).astype(int)
    rng = [np.arange(-b, b + 1) for b in bound]
    C = np.stack(np.meshgrid(*rng, indexing="ij"), axis=-1).reshape(-1, k)
    C = C[np.any(C != 0, axis=1)]
    V = C @ Br
    nrm = np.einsum("ij,ij->i", V, V)
    order = np.argsort(nrm)
    chosen = []
    for idx in order:
        cand = chosen + [V[idx]]
        if np.linalg.matrix_rank(np.array(cand), tol=1e-9 * np.sqrt(nrm[idx])) == len(cand):
            chosen.append(V[idx])
            if len(chosen) == k:
                break
    return np.sqrt(np.einsum("ij,ij->i", np.array(chosen), np.array(chosen)))
