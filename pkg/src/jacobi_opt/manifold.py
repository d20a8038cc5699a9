"""Geometry of the complex Stiefel manifold and the unitary group.

All gradients are taken with respect to the real inner product
``Re tr(X^H Y)``; the Euclidean gradient of a real function of a complex
matrix is ``2 dg/dX*`` (Wirtinger convention).
"""

from __future__ import annotations

import numpy as np

from .tensor import TensorShapeError

UNITARY_TOL = 1e-10


class NotUnitaryError(ValueError):
    pass


def skew(P: np.ndarray) -> np.ndarray:
    """Skew-Hermitian part ``(P - P^H) / 2``."""
    P = np.asarray(P)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise TensorShapeError(f"skew needs a square matrix, got {P.shape}")
    return 0.5 * (P - P.conj().T)


def unitarity_defect(X: np.ndarray) -> float:
    """``max |X^H X - I|``; zero for points of the Stiefel manifold."""
    X = np.asarray(X)
    return float(np.max(np.abs(X.conj().T @ X - np.eye(X.shape[1]))))


def is_unitary(U: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    U = np.asarray(U)
    return U.ndim == 2 and U.shape[0] == U.shape[1] and unitarity_defect(U) <= tol


def proj_tangent(X: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Orthogonal projection of `xi` onto the tangent space of St(r, n) at `X`."""
    X = np.asarray(X)
    xi = np.asarray(xi)
    if xi.shape != X.shape:
        raise TensorShapeError(f"direction {xi.shape} does not match point {X.shape}")
    XhXi = X.conj().T @ xi
    return xi - X @ XhXi + X @ skew(XhXi)


def riemannian_grad_stiefel(euclid_grad: np.ndarray, X: np.ndarray) -> np.ndarray:
    return proj_tangent(X, euclid_grad)


def riemannian_grad_unitary(euclid_grad, U, tol: float = UNITARY_TOL):
    """Riemannian gradient on U(n) and its skew factor.

    Returns ``(grad, Lambda)`` with ``Lambda = skew(U^H euclid_grad)`` and
    ``grad = U @ Lambda``.
    """
    U = np.asarray(U)
    G = np.asarray(euclid_grad)
    if G.shape != U.shape:
        raise TensorShapeError(f"gradient {G.shape} does not match point {U.shape}")
    if not is_unitary(U, tol):
        raise NotUnitaryError(f"matrix is not unitary (defect {unitarity_defect(U):.3e})")
    Lam = skew(U.conj().T @ G)
    return U @ Lam, Lam


def stationarity_pair_check(U, euclid_grad, r: int):
    """Gradient norms of a lifted function on U(n) and of its Stiefel restriction.

    `euclid_grad` is the Euclidean gradient of the lifted function at `U`.  Its
    first `r` columns are the Euclidean gradient of the restricted function at
    ``X = U[:, :r]`` (the lifted function only sees those columns).

    Returns ``(res_unitary, res_stiefel)``.
    """
    U = np.asarray(U)
    G = np.asarray(euclid_grad)
    grad_u, _ = riemannian_grad_unitary(G, U)
    X = U[:, :r]
    grad_x = riemannian_grad_stiefel(G[:, :r], X)
    return float(np.linalg.norm(grad_u)), float(np.linalg.norm(grad_x))


def _qr_positive(A: np.ndarray, rank_tol: float = 1e-12) -> np.ndarray:
    Q, R = np.linalg.qr(A)
    d = np.diag(R)
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.any(np.abs(d) <= rank_tol * scale):
        raise np.linalg.LinAlgError("retraction argument is rank deficient")
    return Q * (d / np.abs(d))


def qr_retract(X: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Q factor of ``X + xi`` normalised to a positive real diagonal of R."""
    X = np.asarray(X)
    xi = np.asarray(xi)
    if xi.shape != X.shape:
        raise TensorShapeError(f"direction {xi.shape} does not match point {X.shape}")
    return _qr_positive(X + xi)


def reorthonormalize(U: np.ndarray) -> np.ndarray:
    """Closest-in-spirit unitary to a slightly drifted `U` (QR, positive R diagonal)."""
    return _qr_positive(np.asarray(U))


def givens_matrix(n: int, i: int, j: int, Psi: np.ndarray) -> np.ndarray:
    """Identity of size `n` with the 2x2 block `Psi` planted at rows/columns (i, j)."""
    G = np.eye(n, dtype=np.complex128)
    G[i, i], G[i, j] = Psi[0, 0], Psi[0, 1]
    G[j, i], G[j, j] = Psi[1, 0], Psi[1, 1]
    return G


def apply_givens_right(U: np.ndarray, i: int, j: int, Psi: np.ndarray) -> np.ndarray:
    """Return ``U @ G(i, j, Psi)`` without forming G."""
    out = np.array(U, dtype=np.complex128, copy=True)
    out[:, [i, j]] = U[:, [i, j]] @ Psi
    return out


def random_unitary(n: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    """Haar-distributed unitary (orthogonal if `real`) via phase-fixed QR."""
    Z = rng.standard_normal((n, n))
    if not real:
        Z = (Z + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return (Q * (d / np.abs(d))).astype(np.complex128)
