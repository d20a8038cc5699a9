"""Objective families, their gradients and the skew fields used for pair selection.

Four families are supported:

* ``TRACE_MAX``  -- ``sum_{q<r} B x_1 u_q^H .. x_gamma u_q^H x_{gamma+1} u_q^T ..``
* ``JATD_S``     -- one unitary shared by all modes, diagonal energy of the
  leading ``r x .. x r`` block
* ``JATD``       -- one unitary per mode, diagonal energy of the leading block
* ``JATC``       -- one unitary per mode, energy of the leading
  ``r_1 x .. x r_d`` block

Every unitary ``U`` acts on its mode as ``U^dagger`` where ``dagger`` is either
the conjugate transpose or the plain transpose.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .manifold import riemannian_grad_unitary, skew
from .tensor import (
    TensorShapeError,
    as_tensor,
    diag_vector,
    frobenius_norm_sq,
    is_hermitian_tensor,
    load_tensor,
    mode_product,
    multi_mode_product,
    save_tensor,
    subtensor,
    unfold,
)


class Family(str, enum.Enum):
    TRACE_MAX = "tracemax"
    JATD_S = "jatd-s"
    JATD = "jatd"
    JATC = "jatc"


class Dagger(str, enum.Enum):
    CONJ_TRANSPOSE = "H"
    TRANSPOSE = "T"


def dagger(U: np.ndarray, mode: Dagger) -> np.ndarray:
    return U.conj().T if mode is Dagger.CONJ_TRANSPOSE else U.T


@dataclass(frozen=True)
class ProblemSpec:
    family: Family
    tensors: tuple
    ranks: tuple
    weights: tuple = ()
    dagger: Dagger = Dagger.CONJ_TRANSPOSE
    gamma: int = 1
    real: bool | None = None

    def __post_init__(self):
        fam = Family(self.family)
        dag = Dagger(self.dagger)
        tensors = tuple(as_tensor(T) for T in self.tensors)
        if not tensors:
            raise ValueError("a problem needs at least one tensor")
        weights = tuple(float(a) for a in self.weights) or (1.0,) * len(tensors)
        if len(weights) != len(tensors):
            raise ValueError("one weight per tensor is required")
        if any(a <= 0 for a in weights):
            raise ValueError("weights must be strictly positive")
        ranks = self.ranks
        if np.isscalar(ranks):
            ranks = (int(ranks),)
        ranks = tuple(int(r) for r in ranks)
        shape = tensors[0].shape
        if any(T.shape != shape for T in tensors):
            raise TensorShapeError("all tensors of a problem must share one shape")
        gamma = int(self.gamma)

        if fam in (Family.TRACE_MAX, Family.JATD_S):
            if len(set(shape)) != 1:
                raise TensorShapeError(f"{fam.value} needs equal mode dimensions")
            if len(set(ranks)) != 1:
                raise ValueError(f"{fam.value} takes a single rank r")
            ranks = ranks[:1]
            if not 1 <= ranks[0] <= shape[0]:
                raise ValueError(f"rank {ranks[0]} outside [1, {shape[0]}]")
            if fam is Family.TRACE_MAX:
                if len(shape) != 2 * gamma:
                    raise TensorShapeError(f"trace-max tensor must have order 2*gamma={2 * gamma}")
                for B in tensors:
                    if not is_hermitian_tensor(B, gamma):
                        raise ValueError("trace-max tensors must be Hermitian")
                if len(tensors) not in (1, ranks[0]):
                    raise ValueError("give one tensor B or one tensor per column q")
            else:
                gamma = len(shape)
        else:
            d = len(shape)
            if fam is Family.JATD:
                if len(set(ranks)) != 1:
                    raise ValueError("JATD uses one common rank r for every mode")
                ranks = ranks[:1] * d
                if ranks[0] > min(shape):
                    raise ValueError(f"rank {ranks[0]} exceeds the smallest dimension {min(shape)}")
            if len(ranks) != d:
                raise ValueError(f"need {d} ranks, got {len(ranks)}")
            for r, n in zip(ranks, shape):
                if not 1 <= r <= n:
                    raise ValueError(f"rank {r} outside [1, {n}]")

        real = self.real
        if real is None:
            real = all(not np.any(T.imag) for T in tensors)
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "dagger", dag)
        object.__setattr__(self, "tensors", tensors)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "real", bool(real))

    @property
    def multi_factor(self) -> bool:
        return self.family in (Family.JATD, Family.JATC)

    @property
    def order(self) -> int:
        return self.tensors[0].ndim

    @property
    def factor_dims(self) -> tuple:
        """Sizes of the unitary factors being optimised."""
        shape = self.tensors[0].shape
        return shape if self.multi_factor else shape[:1]

    @property
    def factor_ranks(self) -> tuple:
        return self.ranks if self.multi_factor else self.ranks[:1]

    @property
    def rho(self) -> int:
        """+1 for the conjugate transpose, -1 for the plain transpose."""
        return 1 if self.dagger is Dagger.CONJ_TRANSPOSE else -1

    def total_norm_sq(self) -> float:
        return sum(a * frobenius_norm_sq(A) for a, A in zip(self.weights, self.tensors))

    def identity(self) -> tuple:
        return tuple(np.eye(n, dtype=np.complex128) for n in self.factor_dims)


@dataclass(frozen=True)
class ObjectiveState:
    W: tuple
    value: float


# --------------------------------------------------------------------------- #
# evaluation


def _as_tuple(spec: ProblemSpec, upsilon) -> tuple:
    if isinstance(upsilon, np.ndarray) and upsilon.ndim == 2:
        upsilon = (upsilon,)
    upsilon = tuple(np.asarray(U, dtype=np.complex128) for U in upsilon)
    if spec.family is Family.JATD_S and len(upsilon) > 1:
        if any(not np.array_equal(U, upsilon[0]) for U in upsilon[1:]):
            raise ValueError("JATD-S uses the same unitary on every mode")
        upsilon = upsilon[:1]
    if len(upsilon) != len(spec.factor_dims):
        raise ValueError(f"expected {len(spec.factor_dims)} factors, got {len(upsilon)}")
    for U, n in zip(upsilon, spec.factor_dims):
        if U.shape != (n, n):
            raise TensorShapeError(f"factor of shape {U.shape} where ({n}, {n}) is needed")
    return upsilon


def transform(spec: ProblemSpec, upsilon) -> tuple:
    """Transformed tensors ``W`` for every input tensor."""
    ups = _as_tuple(spec, upsilon)
    if spec.family is Family.TRACE_MAX:
        U = ups[0]
        g = spec.gamma
        mats = [U.conj().T] * g + [U.T] * g
    elif spec.family is Family.JATD_S:
        mats = [dagger(ups[0], spec.dagger)] * spec.order
    else:
        mats = [dagger(U, spec.dagger) for U in ups]
    return tuple(multi_mode_product(T, mats) for T in spec.tensors)


def diag_mask_index(shape, r: int) -> tuple:
    idx = np.arange(r)
    return (idx,) * len(shape)


def value_from_W(spec: ProblemSpec, Ws) -> float:
    r = spec.ranks[0]
    if spec.family is Family.TRACE_MAX:
        if len(Ws) == 1:
            return float(np.real(np.sum(Ws[0][diag_mask_index(Ws[0].shape, r)])))
        return float(sum(np.real(W[(q,) * W.ndim]) for q, W in enumerate(Ws)))
    total = 0.0
    for a, W in zip(spec.weights, Ws):
        if spec.family is Family.JATC:
            total += a * frobenius_norm_sq(subtensor(W, spec.ranks))
        else:
            total += a * frobenius_norm_sq(W[diag_mask_index(W.shape, r)])
    return float(total)


def evaluate(spec: ProblemSpec, upsilon) -> ObjectiveState:
    Ws = transform(spec, upsilon)
    return ObjectiveState(W=Ws, value=value_from_W(spec, Ws))


def objective(spec: ProblemSpec, upsilon) -> float:
    return evaluate(spec, upsilon).value


def _contract_hposm(B: np.ndarray, u: np.ndarray, gamma: int) -> complex:
    out = B
    for _ in range(gamma):
        out = np.tensordot(u.conj(), out, axes=([0], [0]))
    for _ in range(gamma):
        out = np.tensordot(u, out, axes=([0], [0]))
    return complex(out)


def eval_hposm(spec: ProblemSpec, U) -> float:
    """Homogeneous polynomial objective summed over the first r columns of `U`."""
    if spec.family is not Family.TRACE_MAX:
        raise ValueError("eval_hposm expects a trace-max / HPOSM problem")
    (U,) = _as_tuple(spec, U)
    r = spec.ranks[0]
    Bs = spec.tensors if len(spec.tensors) == r else spec.tensors * r
    total = sum(_contract_hposm(B, U[:, q], spec.gamma) for q, B in enumerate(Bs))
    return float(np.real(total))


def eval_jatd(spec: ProblemSpec, upsilon) -> ObjectiveState:
    if spec.family not in (Family.JATD, Family.JATD_S):
        raise ValueError("eval_jatd expects a JATD or JATD-S problem")
    return evaluate(spec, upsilon)


def eval_jatc(spec: ProblemSpec, upsilon) -> ObjectiveState:
    if spec.family is not Family.JATC:
        raise ValueError("eval_jatc expects a JATC problem")
    return evaluate(spec, upsilon)


def per_ratio(T) -> float:
    """Fraction of the squared norm carried by the diagonal entries."""
    total = frobenius_norm_sq(T)
    if total == 0.0:
        raise ValueError("the diagonal ratio of a zero tensor is undefined")
    return frobenius_norm_sq(diag_vector(T)) / total


def hermitian_lift(spec: ProblemSpec) -> np.ndarray:
    """Order-2d Hermitian tensor whose HPOSM form equals the JATD-S objective."""
    if spec.family is not Family.JATD_S:
        raise ValueError("the Hermitian lift is defined for JATD-S problems")
    B = 0
    for a, A in zip(spec.weights, spec.tensors):
        outer = np.multiply.outer(A.conj(), A)
        B = B + a * (outer.conj() if spec.dagger is Dagger.CONJ_TRANSPOSE else outer)
    return B


# --------------------------------------------------------------------------- #
# gradients


def _mask(spec: ProblemSpec, W: np.ndarray) -> np.ndarray:
    G = np.zeros_like(W)
    if spec.family is Family.JATC:
        sl = tuple(slice(0, r) for r in spec.ranks)
        G[sl] = W[sl]
    else:
        idx = diag_mask_index(W.shape, spec.ranks[0])
        G[idx] = W[idx]
    return G


def _grad_one_mode(spec: ProblemSpec, mats_dag, U, p: int) -> np.ndarray:
    grad = np.zeros_like(U)
    for a, A in zip(spec.weights, spec.tensors):
        V = multi_mode_product(A, mats_dag, skip=p)
        W = mode_product(V, dagger(U, spec.dagger), p)
        Vp = unfold(V, p)
        Gp = unfold(_mask(spec, W), p)
        if spec.dagger is Dagger.CONJ_TRANSPOSE:
            grad += 2 * a * (Vp @ Gp.conj().T)
        else:
            grad += 2 * a * (Vp.conj() @ Gp.T)
    return grad


def euclid_grad_mode(spec: ProblemSpec, upsilon, p: int = 0) -> np.ndarray:
    """Euclidean (Wirtinger) gradient of the objective restricted to factor `p`.

    Computed from the partially transformed tensor ``V`` (all modes but `p`),
    independently of :func:`lambda_field`.
    """
    ups = _as_tuple(spec, upsilon)
    if not 0 <= p < len(ups):
        raise ValueError(f"factor index {p} out of range")
    if spec.family is Family.TRACE_MAX:
        if spec.gamma != 1:
            raise NotImplementedError("closed-form gradients exist for gamma = 1 only")
        U = ups[0]
        r = spec.ranks[0]
        Bs = spec.tensors if len(spec.tensors) == r else spec.tensors * r
        grad = np.zeros_like(U)
        for q, B in enumerate(Bs):
            grad[:, q] = 2 * (B @ U[:, q])
        return grad
    if spec.family is Family.JATD_S:
        U = ups[0]
        mats = [dagger(U, spec.dagger)] * spec.order
        return sum(_grad_one_mode(spec, mats, U, m) for m in range(spec.order))
    mats = [dagger(U, spec.dagger) for U in ups]
    return _grad_one_mode(spec, mats, ups[p], p)


def lambda_from_W(spec: ProblemSpec, Ws, p: int = 0) -> np.ndarray:
    """Skew factor ``Lambda^(p)`` of the Riemannian gradient, from transformed tensors.

    JATD (mode p, pair i<j, r the common rank)::

        Lambda_ij =  sum_l a_l (W_{j..i..j} W*_{j..j} - W*_{i..j..i} W_{i..i})   i<j<r
        Lambda_ij = -sum_l a_l  W*_{i..j..i} W_{i..i}                           i<r<=j
        Lambda_ij =  0                                                           r<=i<j

    (``i``/``j`` sits in position p); every entry is conjugated for the plain
    transpose.  JATC uses ``P - P^H`` with ``P = W_(p) conj(G_(p))^T`` and ``G``
    the leading block of ``W``.
    """
    fam = spec.family
    if fam is Family.TRACE_MAX:
        if spec.gamma != 1:
            raise NotImplementedError("closed-form gradients exist for gamma = 1 only")
        r = spec.ranks[0]
        n = Ws[0].shape[0]
        P = np.zeros((n, n), dtype=np.complex128)
        for q in range(r):
            W = Ws[0] if len(Ws) == 1 else Ws[q]
            P[:, q] = 2 * W[:, q]
        return skew(P)

    modes = range(spec.order) if fam is Family.JATD_S else (p,)
    n = Ws[0].shape[modes[0]]
    P = np.zeros((n, n), dtype=np.complex128)
    for m in modes:
        for a, W in zip(spec.weights, Ws):
            if fam is Family.JATC:
                Wp = unfold(W, m)
                Gp = unfold(_mask(spec, W), m)
                P += a * (Wp @ Gp.conj().T)
            else:
                r = spec.ranks[0]
                d = W.ndim
                for k in range(r):
                    idx = [k] * d
                    idx[m] = slice(None)
                    fibre = W[tuple(idx)]  # W_{k..i..k} over i
                    P[:, k] += a * fibre * np.conj(W[(k,) * d])
    Lam = P - P.conj().T
    if spec.dagger is Dagger.TRANSPOSE:
        Lam = Lam.conj()
    return Lam


def lambda_field(spec: ProblemSpec, upsilon, p: int = 0) -> np.ndarray:
    return lambda_from_W(spec, transform(spec, upsilon), p)


def riemannian_grad(spec: ProblemSpec, upsilon) -> tuple:
    """Riemannian gradient of the lifted objective, one matrix per factor."""
    ups = _as_tuple(spec, upsilon)
    return tuple(
        riemannian_grad_unitary(euclid_grad_mode(spec, ups, p), U)[0]
        for p, U in enumerate(ups)
    )


def grad_norm_from_lambdas(lams) -> float:
    return float(np.sqrt(sum(np.sum(np.abs(L) ** 2) for L in lams)))


def stiefel_grad_norms(spec: ProblemSpec, upsilon) -> tuple:
    """``(unitary-lift gradient norm, Stiefel-restricted gradient norm)``."""
    from .manifold import stationarity_pair_check

    ups = _as_tuple(spec, upsilon)
    su = sx = 0.0
    for p, U in enumerate(ups):
        ru, rx = stationarity_pair_check(U, euclid_grad_mode(spec, ups, p), spec.factor_ranks[p])
        su += ru**2
        sx += rx**2
    return float(np.sqrt(su)), float(np.sqrt(sx))


# --------------------------------------------------------------------------- #
# problem files


def save_problem(path, spec: ProblemSpec) -> None:
    path = Path(path)
    names = []
    for k, T in enumerate(spec.tensors):
        name = f"{path.stem}_tensor{k}.json"
        save_tensor(path.parent / name, T)
        names.append(name)
    record = {
        "family": spec.family.value,
        "dagger": spec.dagger.value,
        "ranks": list(spec.ranks),
        "weights": list(spec.weights),
        "gamma": spec.gamma,
        "real": spec.real,
        "tensors": names,
    }
    path.write_text(json.dumps(record, indent=2))


def load_problem(path) -> ProblemSpec:
    path = Path(path)
    record = json.loads(path.read_text())
    missing = {"family", "ranks", "tensors"} - set(record)
    if missing:
        raise ValueError(f"problem file lacks fields {sorted(missing)}")
    tensors = [load_tensor(path.parent / name) for name in record["tensors"]]
    return ProblemSpec(
        family=Family(record["family"]),
        tensors=tuple(tensors),
        ranks=tuple(record["ranks"]),
        weights=tuple(record.get("weights", ())),
        dagger=Dagger(record.get("dagger", "H")),
        gamma=int(record.get("gamma", 1)),
        real=record.get("real"),
    )


def brute_force_hposm(B: np.ndarray, u: np.ndarray, gamma: int) -> complex:
    """Naive sum over every index tuple; reference for tests."""
    n = B.shape[0]
    total = 0j
    for idx in product(range(n), repeat=2 * gamma):
        term = B[idx]
        for k in idx[:gamma]:
            term *= np.conj(u[k])
        for k in idx[gamma:]:
            term *= u[k]
        total += term
    return total
