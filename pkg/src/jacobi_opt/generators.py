"""Seeded synthetic instances: noisy rotated diagonal tensors and dense random tensors."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .manifold import random_unitary
from .objectives import Dagger, Family, ProblemSpec
from .tensor import frobenius_norm_sq, multi_mode_product, symmetrize


class GeneratorKind(str, enum.Enum):
    NOISY_DIAGONAL = "noisy-diagonal"
    RANDOM_DENSE = "random-dense"


class DiagonalPattern(str, enum.Enum):
    SQRT_PLUS_LINEAR = "sqrt-plus-linear"  # D_{j..j} = sqrt(j) + j i
    TENSOR_INDEX = "tensor-index"  # D^(l)_{j..j} = l


@dataclass(frozen=True)
class GeneratorSpec:
    kind: GeneratorKind = GeneratorKind.NOISY_DIAGONAL
    dims: tuple = (7, 7, 8, 8)
    ranks: tuple | None = None
    L: int = 1
    seed: int = 0
    noise: float = 1.0  # the noise tensor is scaled to this Frobenius norm
    real: bool = False
    shared: bool = False  # one rotation for every mode, symmetrized noise
    diagonal: DiagonalPattern | None = None
    family: Family | None = None
    dagger: Dagger = Dagger.CONJ_TRANSPOSE


def _diagonal(spec: GeneratorSpec, ell: int) -> np.ndarray:
    pattern = spec.diagonal
    if pattern is None:
        pattern = DiagonalPattern.TENSOR_INDEX if spec.L > 1 else DiagonalPattern.SQRT_PLUS_LINEAR
    pattern = DiagonalPattern(pattern)
    n = min(spec.dims)
    j = np.arange(1, n + 1, dtype=float)
    if pattern is DiagonalPattern.SQRT_PLUS_LINEAR:
        vals = np.sqrt(j) if spec.real else np.sqrt(j) + 1j * j
    else:
        vals = np.full(n, float(ell))
    D = np.zeros(spec.dims, dtype=np.complex128)
    idx = np.arange(n)
    D[(idx,) * len(spec.dims)] = vals
    return D


def _unit_noise(rng, dims, scale: float, symmetric: bool) -> np.ndarray:
    E = rng.standard_normal(dims).astype(np.complex128)
    if symmetric:
        E = symmetrize(E)
    norm = np.sqrt(frobenius_norm_sq(E))
    return scale * E / norm if norm > 0 else E


def generate_tensors(spec: GeneratorSpec):
    """Tensors and the rotations used to build them (empty for dense instances)."""
    dims = tuple(int(n) for n in spec.dims)
    if any(n < 1 for n in dims):
        raise ValueError(f"dimensions must be positive, got {dims}")
    if spec.L < 1:
        raise ValueError("need at least one tensor")
    if spec.shared and len(set(dims)) != 1:
        raise ValueError("a shared rotation needs equal mode dimensions")
    rng = np.random.default_rng(spec.seed)
    kind = GeneratorKind(spec.kind)
    if kind is GeneratorKind.RANDOM_DENSE:
        tensors = []
        for _ in range(spec.L):
            A = rng.standard_normal(dims)
            if not spec.real:
                A = A + 1j * rng.standard_normal(dims)
            A = A.astype(np.complex128)
            tensors.append(symmetrize(A) if spec.shared else A)
        return tensors, ()
    if spec.shared:
        U = random_unitary(dims[0], rng, real=spec.real)
        mats = [U] * len(dims)
    else:
        mats = [random_unitary(n, rng, real=spec.real) for n in dims]
    tensors = []
    for ell in range(1, spec.L + 1):
        A = multi_mode_product(_diagonal(spec, ell), mats)
        if spec.noise:
            A = A + _unit_noise(rng, dims, spec.noise, spec.shared)
        tensors.append(A)
    return tensors, tuple(mats)


def gen_instance(spec: GeneratorSpec) -> ProblemSpec:
    tensors, _ = generate_tensors(spec)
    family = spec.family
    if family is None:
        if GeneratorKind(spec.kind) is GeneratorKind.RANDOM_DENSE:
            family = Family.JATC
        else:
            family = Family.JATD_S if spec.shared else Family.JATD
    family = Family(family)
    ranks = spec.ranks
    if ranks is None:
        ranks = (min(spec.dims),) if family is not Family.JATC else tuple(spec.dims)
    return ProblemSpec(
        family=family,
        tensors=tuple(tensors),
        ranks=tuple(ranks),
        dagger=spec.dagger,
        real=spec.real or None,
    )
