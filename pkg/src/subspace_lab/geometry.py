"""Grassmannian metrics and basis constructions.

All routines take bases as ``n x k`` column matrices.  Subspace metrics are
invariant to the choice of basis; construction routines (``orthonormalize``,
``uplift``) are deterministic so that repeated runs give identical bytes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-12
CLIP_WARN = 1e-8


class RankDeficiencyError(ValueError):
    """Raised when a basis does not have full column rank."""


class NumericalHealthWarning(RuntimeWarning):
    pass


def orthonormalize(x, tol: float = RANK_TOL) -> np.ndarray:
    """Thin QR with the R-diagonal forced positive.

    Works on a single ``n x d`` matrix or a stack ``(..., n, d)``.  The sign
    convention makes the map deterministic and idempotent on matrices that are
    already orthonormal.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] == 0:
        return x.copy()
    q, r = np.linalg.qr(x)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    mag = np.abs(diag)
    scale = mag.max(axis=-1, keepdims=True)
    if np.any(mag < tol * np.where(scale > 0, scale, 1.0)) or np.any(scale == 0):
        raise RankDeficiencyError(
            f"matrix of shape {x.shape} is rank deficient "
            f"(smallest |R_ii| = {mag.min():.3e}, largest = {scale.max():.3e})"
        )
    signs = np.where(diag < 0, -1.0, 1.0)
    return q * signs[..., None, :]


def polar(x) -> np.ndarray:
    """Nearest matrix with orthonormal columns, ``x (x^T x)^{-1/2}``.

    Used as the projection back onto the Stiefel manifold in the large-lambda
    GAN update.  Accepts stacks ``(..., n, k)``.
    """
    x = np.asarray(x, dtype=float)
    gram = np.swapaxes(x, -1, -2) @ x
    evals, evecs = np.linalg.eigh(gram)
    if np.any(evals <= 0):
        raise RankDeficiencyError("polar factor undefined for rank-deficient input")
    inv_sqrt = (evecs / np.sqrt(evals)[..., None, :]) @ np.swapaxes(evecs, -1, -2)
    return x @ inv_sqrt


@dataclass(frozen=True)
class PrincipalAngles:
    angles: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if np.any(a < 0) or np.any(a > np.pi / 2 + 1e-15) or np.any(np.diff(a) < 0):
            raise ValueError("principal angles must be sorted ascending in [0, pi/2]")
        object.__setattr__(self, "angles", a)

    def __len__(self):
        return len(self.angles)


def principal_angles(u, v) -> PrincipalAngles:
    """Principal angles between ``span(u)`` and ``span(v)``.

    Both inputs are orthonormalized first; the cosines are the singular values
    of ``U^T V``.  ``min(d1, d2)`` angles are returned in ascending order.
    """
    qu = orthonormalize(u)
    qv = orthonormalize(v)
    sigma = np.linalg.svd(qu.T @ qv, compute_uv=False)
    if sigma.size and sigma.max() > 1 + CLIP_WARN:
        warnings.warn(
            f"cosine {sigma.max():.12f} exceeds 1 beyond round-off",
            NumericalHealthWarning,
            stacklevel=2,
        )
    sigma = np.clip(sigma, 0.0, 1.0)
    # svd returns descending cosines -> ascending angles
    return PrincipalAngles(np.arccos(sigma))


def grassmann_distance(u, v) -> float:
    """Geodesic distance ``sqrt(sum theta_i^2)`` on the Grassmannian."""
    theta = principal_angles(u, v).angles
    return float(np.sqrt(np.sum(theta**2)))


def cosine_diagonals(u, v) -> np.ndarray:
    """Signed per-feature similarity ``diag(u^T v_hat)``, ``v`` column-normalized."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    norms = np.linalg.norm(v, axis=0)
    if np.any(norms == 0):
        raise ValueError("cosine_diagonals: v has a zero column")
    k = min(u.shape[1], v.shape[1])
    return np.einsum("ij,ij->j", u[:, :k], v[:, :k] / norms[:k])


def reconstruction_error(basis, samples) -> float:
    """Mean squared residual ``||x - B B^T x||^2`` over the rows of ``samples``."""
    b = np.asarray(basis, dtype=float)
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    dev = np.linalg.norm(b.T @ b - np.eye(b.shape[1]))
    if dev > 1e-6:
        raise ValueError(f"reconstruction_error needs an orthonormal basis (||B^T B - I|| = {dev:.2e})")
    resid = x - (x @ b) @ b.T
    return float(np.mean(np.sum(resid**2, axis=1)))


def uplift(x, target_rank: int, tol: float = 1e-8) -> np.ndarray:
    """Embed an orthonormal ``n x r`` basis into ``Gr(target_rank, n)``.

    The first ``r`` columns are ``x`` unchanged.  Padding columns are standard
    basis vectors taken from the largest index downward, each
    Gram-Schmidt-orthogonalized against the columns collected so far; a
    candidate whose residual is below ``tol`` is skipped.
    """
    x = np.asarray(x, dtype=float)
    n, r = x.shape
    if not r <= target_rank <= n:
        raise ValueError(f"uplift needs r <= p <= n, got r={r}, p={target_rank}, n={n}")
    cols = [x[:, j] for j in range(r)]
    idx = n - 1
    while len(cols) < target_rank:
        if idx < 0:
            raise RankDeficiencyError(
                f"could not find {target_rank - r} padding directions orthogonal to the input"
            )
        e = np.zeros(n)
        e[idx] = 1.0
        idx -= 1
        # two classical GS sweeps keep the padding orthogonal to round-off
        for _ in range(2):
            for c in cols:
                e = e - (c @ e) * c
        norm = np.linalg.norm(e)
        if norm < tol:
            continue
        cols.append(e / norm)
    out = np.column_stack(cols) if cols else np.zeros((n, 0))
    out[:, :r] = x
    return out
