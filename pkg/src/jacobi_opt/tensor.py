"""Dense complex tensors and the multilinear primitives used everywhere else.

Tensors are plain ``numpy`` arrays of dtype ``complex128``.  Index ``q`` of a
mode runs over ``0 .. n_p - 1`` internally; the flat layout used for file I/O
is first-index-fastest (Fortran order).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

HERMITIAN_TOL = 1e-10


class TensorShapeError(ValueError):
    """Raised when tensor/matrix dimensions are incompatible."""


def as_tensor(data, dims=None) -> np.ndarray:
    """Return `data` as a finite complex128 array of order >= 1.

    If `dims` is given, `data` is read as a flat first-index-fastest array.
    """
    arr = np.asarray(data, dtype=np.complex128)
    if dims is not None:
        dims = tuple(int(n) for n in dims)
        if any(n < 1 for n in dims):
            raise TensorShapeError(f"dimensions must be positive, got {dims}")
        if arr.size != int(np.prod(dims)):
            raise TensorShapeError(
                f"data length {arr.size} does not match product of dims {dims}"
            )
        arr = arr.reshape(dims, order="F")
    if arr.ndim < 1:
        raise TensorShapeError("tensor order must be at least 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor entries must be finite")
    return arr


def mode_product(T: np.ndarray, X: np.ndarray, p: int) -> np.ndarray:
    """p-mode product ``T x_p X`` with a 0-based mode index `p`.

    ``(T x_p X)[.., j, ..] = sum_q T[.., q, ..] X[j, q]``.
    """
    T = np.asarray(T)
    X = np.asarray(X)
    if not 0 <= p < T.ndim:
        raise TensorShapeError(f"mode {p} out of range for order-{T.ndim} tensor")
    if X.ndim != 2 or X.shape[1] != T.shape[p]:
        raise TensorShapeError(
            f"matrix of shape {X.shape} cannot act on mode {p} of size {T.shape[p]}"
        )
    out = np.tensordot(X, T, axes=([1], [p]))
    return np.moveaxis(out, 0, p)


def multi_mode_product(T: np.ndarray, mats, skip=None) -> np.ndarray:
    """Apply ``mats[p]`` on every mode `p` (``None`` entries and `skip` are left out)."""
    out = np.asarray(T)
    for p, X in enumerate(mats):
        if X is None or p == skip:
            continue
        out = mode_product(out, X, p)
    return out


def unfold(T: np.ndarray, p: int) -> np.ndarray:
    """Mode-p matricization, shape ``(n_p, prod of the other dims)``."""
    return np.moveaxis(np.asarray(T), p, 0).reshape(T.shape[p], -1)


def diag_vector(T: np.ndarray) -> np.ndarray:
    """Diagonal ``(T[0..0], T[1..1], ...)`` up to the smallest dimension."""
    T = np.asarray(T)
    n = min(T.shape)
    idx = np.arange(n)
    return T[(idx,) * T.ndim]


def subtensor(T: np.ndarray, ranks) -> np.ndarray:
    """Leading ``r_1 x .. x r_d`` block of `T`."""
    T = np.asarray(T)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != T.ndim:
        raise TensorShapeError(f"need {T.ndim} ranks, got {len(ranks)}")
    for r, n in zip(ranks, T.shape):
        if not 1 <= r <= n:
            raise TensorShapeError(f"rank {r} outside [1, {n}]")
    return T[tuple(slice(0, r) for r in ranks)]


def frobenius_norm_sq(T) -> float:
    T = np.asarray(T)
    return float(np.sum(T.real**2 + T.imag**2))


def real_inner(X, Y) -> float:
    """``Re tr(X^H Y)``, the real inner product on complex matrices."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape:
        raise TensorShapeError(f"shape mismatch {X.shape} vs {Y.shape}")
    return float(np.sum(X.real * Y.real + X.imag * Y.imag))


def hermitian_swap(B: np.ndarray, gamma: int) -> np.ndarray:
    """Exchange the first and last `gamma` index groups of an order-2*gamma tensor."""
    order = list(range(gamma, 2 * gamma)) + list(range(gamma))
    return np.transpose(B, order)


def is_hermitian_tensor(B, gamma: int, tol: float = HERMITIAN_TOL) -> bool:
    """True iff ``B[I, J] == conj(B[J, I])`` for index groups of length `gamma`."""
    B = np.asarray(B)
    if B.ndim % 2:
        raise TensorShapeError("a Hermitian tensor must have even order")
    if B.ndim != 2 * gamma:
        raise TensorShapeError(f"order {B.ndim} does not equal 2*gamma = {2 * gamma}")
    if len(set(B.shape)) != 1:
        raise TensorShapeError("a Hermitian tensor needs equal mode dimensions")
    return bool(np.max(np.abs(B - hermitian_swap(B, gamma).conj()), initial=0.0) <= tol)


def symmetrize(T: np.ndarray, axes=None) -> np.ndarray:
    """Average of `T` over all permutations of the given axes (default: all)."""
    from itertools import permutations

    T = np.asarray(T)
    axes = list(range(T.ndim)) if axes is None else list(axes)
    acc = np.zeros_like(T)
    count = 0
    for perm in permutations(axes):
        order = list(range(T.ndim))
        for src, dst in zip(axes, perm):
            order[src] = dst
        acc = acc + np.transpose(T, order)
        count += 1
    return acc / count


def example_7_1_tensor() -> np.ndarray:
    """The real 3x3x3 test tensor of the diagonalization benchmark.

    The three printed blocks are the frontal slices ``A[:, :, k]``.
    """
    slices = [
        [[8, 8, 3], [10, 5, 7], [10, 5, 4]],
        [[10, 8, 10], [8, 3, 7], [5, 5, 3]],
        [[9, 3, 4], [7, 7, 6], [2, 7, 5]],
    ]
    return np.stack([np.array(s, dtype=float) for s in slices], axis=2).astype(
        np.complex128
    )


def tensor_to_dict(T) -> dict:
    T = np.asarray(T, dtype=np.complex128)
    flat = T.reshape(-1, order="F")
    return {
        "dims": list(T.shape),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def tensor_from_dict(obj: dict) -> np.ndarray:
    try:
        dims = obj["dims"]
        pairs = obj["data"]
    except KeyError as exc:
        raise ValueError(f"tensor record is missing field {exc}") from None
    flat = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    return as_tensor(flat, dims)


def save_tensor(path, T) -> None:
    Path(path).write_text(json.dumps(tensor_to_dict(T)))


def load_tensor(path) -> np.ndarray:
    return tensor_from_dict(json.loads(Path(path).read_text()))
