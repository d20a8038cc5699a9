"""Rotation subproblems: quadratic-form builders, their solvers and the map to Givens rotations.

A Givens rotation acting on the pair ``(i, j)`` of one factor is parametrised as

    Psi(theta, phi) = [[cos t, -sin t e^{i phi}], [sin t e^{-i phi}, cos t]]

and the objective along it is ``h(Psi) = z^T M z + C`` with

    z = (cos a*theta, -sin a*theta cos b*phi, -sin a*theta sin b*phi).

For the diagonalization, compression and trace families ``a = b = 1`` and ``M`` is
an arrow matrix (zero lower-right 2x2 block).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .manifold import apply_givens_right
from .objectives import Dagger, Family, ProblemSpec, _as_tuple, objective, transform
from .tensor import TensorShapeError, symmetrize

EIG_TOL = 1e-14
PHI_TOL = 1e-12
UNIT_TOL = 1e-10


@dataclass(frozen=True)
class QuadSubproblem:
    M: np.ndarray
    C: float
    alpha: int = 1
    beta: int = 1
    mode: int = 0
    pair: tuple = (0, 1)

    def value(self, theta: float, phi: float) -> float:
        z = z_vector(theta, phi, self.alpha, self.beta)
        return float(z @ self.M @ z + self.C)


@dataclass(frozen=True)
class GivensParams:
    mode: int
    i: int
    j: int
    theta: float
    phi: float


@dataclass(frozen=True)
class RotationPlan:
    params: GivensParams
    Psi: np.ndarray
    w: np.ndarray
    predicted_gain: float
    multiplier: float | None = None  # Lagrange multiplier of the proximal solve


def z_vector(theta: float, phi: float, alpha: int = 1, beta: int = 1) -> np.ndarray:
    s = np.sin(alpha * theta)
    return np.array([np.cos(alpha * theta), -s * np.cos(beta * phi), -s * np.sin(beta * phi)])


def givens_psi(theta: float, phi: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    # exact phase for real rotations, so real factors stay real
    e = -1.0 + 0j if abs(phi) == np.pi else np.exp(1j * phi)
    return np.array([[c, -s * e], [s * np.conj(e), c]], dtype=np.complex128)


def pair_class(i: int, j: int, r: int) -> int:
    """1 if both indices are kept, 2 if only `i` is, 3 if neither (0-based, i < j)."""
    if j < r:
        return 1
    if i < r:
        return 2
    return 3


def _check_pair(n: int, pair) -> tuple:
    i, j = (int(k) for k in pair)
    if not 0 <= i < j < n:
        raise ValueError(f"pair {pair} is not a valid index pair i < j < {n}")
    return i, j


def rotate_factor(spec: ProblemSpec, upsilon, p: int, pair, Psi) -> tuple:
    ups = list(_as_tuple(spec, upsilon))
    i, j = _check_pair(ups[p].shape[0], pair)
    ups[p] = apply_givens_right(ups[p], i, j, Psi)
    return tuple(ups)


def elementary_eval(spec: ProblemSpec, upsilon, p: int, pair, theta: float, phi: float) -> float:
    """Objective after right-multiplying factor `p` by ``G(i, j, Psi(theta, phi))``."""
    return objective(spec, rotate_factor(spec, upsilon, p, pair, givens_psi(theta, phi)))


# --------------------------------------------------------------------------- #
# builders


def _finish(M: np.ndarray, h0: float, alpha: int, beta: int, p: int, pair) -> QuadSubproblem:
    M = 0.5 * (M + M.T)
    return QuadSubproblem(M=M, C=float(h0 - M[0, 0]), alpha=alpha, beta=beta, mode=p, pair=tuple(pair))


def _arrow(m11: float, m12: float, m13: float) -> np.ndarray:
    return np.array([[m11, m12, m13], [m12, 0.0, 0.0], [m13, 0.0, 0.0]])


def _jatd_M(spec: ProblemSpec, Ws, p: int, i: int, j: int) -> np.ndarray:
    r = spec.ranks[0]
    cls = pair_class(i, j, r)
    if cls == 3:
        return np.zeros((3, 3))
    rho = spec.rho
    m11 = m12 = m13 = 0.0
    for a_l, W in zip(spec.weights, Ws):
        d = W.ndim
        ii = [i] * d
        ii[p] = j
        a, b = W[(i,) * d], W[tuple(ii)]
        ab = np.conj(a) * b
        m11 += a_l * (abs(a) ** 2 - abs(b) ** 2)
        m12 -= a_l * ab.real
        m13 += a_l * rho * ab.imag
        if cls == 1:
            jj = [j] * d
            jj[p] = i
            c, e = W[(j,) * d], W[tuple(jj)]
            ce = np.conj(c) * e
            m11 += a_l * (abs(c) ** 2 - abs(e) ** 2)
            m12 += a_l * ce.real
            m13 += a_l * rho * ce.imag
    return _arrow(m11, m12, m13)


def _jatc_M(spec: ProblemSpec, Ws, p: int, i: int, j: int) -> np.ndarray:
    if pair_class(i, j, spec.ranks[p]) != 2:
        return np.zeros((3, 3))
    m11 = m12 = m13 = 0.0
    for a_l, W in zip(spec.weights, Ws):
        block = [slice(0, r) for r in spec.ranks]
        block[p] = i
        Wi = W[tuple(block)]
        block[p] = j
        Wj = W[tuple(block)]
        cross = np.sum(np.conj(Wi) * Wj)
        m11 += a_l * (np.sum(np.abs(Wi) ** 2) - np.sum(np.abs(Wj) ** 2))
        m12 -= a_l * cross.real
        m13 += a_l * spec.rho * cross.imag
    return _arrow(m11, m12, m13)


def _tracemax_M(spec: ProblemSpec, Ws, i: int, j: int) -> np.ndarray:
    r = spec.ranks[0]
    cls = pair_class(i, j, r)
    if cls == 3:
        return np.zeros((3, 3))
    sub = np.ix_([i, j], [i, j])
    Wi = Ws[0] if len(Ws) == 1 else Ws[i]
    M = quadforms_gamma(Wi[sub], 1).terms[0][2]
    if cls == 1:
        Wj = Ws[0] if len(Ws) == 1 else Ws[j]
        M = M - quadforms_gamma(Wj[sub], 1).terms[0][2]
    return M


def _pair_block(W: np.ndarray, i: int, j: int) -> np.ndarray:
    idx = np.array([i, j])
    return W[np.ix_(*([idx] * W.ndim))]


def _jatd_s_M(spec: ProblemSpec, Ws, i: int, j: int) -> np.ndarray:
    r = spec.ranks[0]
    cls = pair_class(i, j, r)
    if cls == 3:
        return np.zeros((3, 3))
    if cls == 2:
        raise NotImplementedError(
            "a shared-factor pair with one kept index gives a sum of several quadratic forms"
        )
    if spec.order not in (2, 3):
        raise NotImplementedError("shared-factor subproblems are built for order 2 and 3 only")
    M = np.zeros((3, 3))
    for a_l, W in zip(spec.weights, Ws):
        T = symmetrize(_pair_block(W, i, j))
        if spec.dagger is Dagger.CONJ_TRANSPOSE:
            Cl = np.multiply.outer(T, T.conj())
        else:
            Cl = np.multiply.outer(T.conj(), T)
        # x- and y-columns see the same lifted tensor; odd alpha cancels
        dec = quadforms_gamma(Cl, spec.order)
        for al, be, Mab in dec.terms:
            if al == 2 and be == 1:
                M += 2 * a_l * Mab
    return M


def build_subproblem_from_W(spec: ProblemSpec, Ws, h0: float, p: int, pair) -> QuadSubproblem:
    """Quadratic form of the elementary function given the current transformed tensors."""
    fam = spec.family
    n = spec.factor_dims[p]
    i, j = _check_pair(n, pair)
    if fam is Family.JATD:
        M = _jatd_M(spec, Ws, p, i, j)
        return _finish(M, h0, 1, 1, p, (i, j))
    if fam is Family.JATC:
        return _finish(_jatc_M(spec, Ws, p, i, j), h0, 1, 1, p, (i, j))
    if fam is Family.TRACE_MAX:
        if spec.gamma != 1:
            raise NotImplementedError("trace-max rotation subproblems are built for gamma = 1")
        return _finish(_tracemax_M(spec, Ws, i, j), h0, 1, 1, p, (i, j))
    return _finish(_jatd_s_M(spec, Ws, i, j), h0, 2, 1, p, (i, j))


def _build(spec, upsilon, p, pair, families):
    if spec.family not in families:
        raise ValueError(f"builder does not handle family {spec.family.value}")
    Ws = transform(spec, upsilon)
    from .objectives import value_from_W

    return build_subproblem_from_W(spec, Ws, value_from_W(spec, Ws), p, pair)


def build_subproblem_jatd(spec: ProblemSpec, upsilon, p: int, pair) -> QuadSubproblem:
    return _build(spec, upsilon, p, pair, (Family.JATD, Family.JATD_S))


def build_subproblem_jatc(spec: ProblemSpec, upsilon, p: int, pair) -> QuadSubproblem:
    return _build(spec, upsilon, p, pair, (Family.JATC,))


def build_subproblem_tracemax(spec: ProblemSpec, U, pair) -> QuadSubproblem:
    return _build(spec, U, 0, pair, (Family.TRACE_MAX,))


def build_subproblem(spec: ProblemSpec, upsilon, p: int, pair) -> QuadSubproblem:
    return _build(spec, upsilon, p, pair, tuple(Family))


# --------------------------------------------------------------------------- #
# decompositions of 2 x .. x 2 Hermitian forms


@dataclass(frozen=True)
class GammaDecomposition:
    """``C x_1 x^H .. x_{2g} x^T = sum z_ab^T M_ab z_ab + const_x``.

    The y-column form flips the sign of every term with odd ``a`` and uses
    ``const_y``.
    """

    gamma: int
    terms: list = field(default_factory=list)  # (alpha, beta, M)
    const_x: float = 0.0
    const_y: float = 0.0

    def eval_x(self, theta: float, phi: float) -> float:
        return self.const_x + sum(
            z_vector(theta, phi, a, b) @ M @ z_vector(theta, phi, a, b) for a, b, M in self.terms
        )

    def eval_y(self, theta: float, phi: float) -> float:
        return self.const_y + sum(
            (-1) ** a * (z_vector(theta, phi, a, b) @ M @ z_vector(theta, phi, a, b))
            for a, b, M in self.terms
        )


def _sym3(rows) -> np.ndarray:
    M = np.array(rows, dtype=float)
    return np.triu(M) + np.triu(M, 1).T


def quadforms_gamma(C, gamma: int) -> GammaDecomposition:
    """Quadratic-form decomposition of a 2x..x2 Hermitian, gamma-semisymmetric tensor."""
    C = np.asarray(C, dtype=np.complex128)
    if gamma not in (1, 2, 3):
        raise NotImplementedError(f"no constructive decomposition for gamma = {gamma}")
    if C.shape != (2,) * (2 * gamma):
        raise TensorShapeError(f"expected a 2x..x2 tensor of order {2 * gamma}, got {C.shape}")

    def e(s: str) -> complex:
        return C[tuple(int(ch) - 1 for ch in s)]

    if gamma == 1:
        c12 = e("12")
        M11 = _sym3([[(e("11") - e("22")).real, -c12.real, -c12.imag], [0, 0, 0], [0, 0, 0]])
        return GammaDecomposition(1, [(1, 1, M11)], e("22").real, e("11").real)

    if gamma == 2:
        c1111, c2222, c1212 = e("1111").real, e("2222").real, e("1212").real
        c1222, c1112, c1122 = e("1222"), e("1112"), e("1122")
        M21 = 0.25 * _sym3(
            [
                [c1111 + c2222, 2 * c1222.real - 2 * c1112.real, 2 * c1222.imag - 2 * c1112.imag],
                [0, 2 * c1122.real + 4 * c1212, 2 * c1122.imag],
                [0, 0, -2 * c1122.real + 4 * c1212],
            ]
        )
        M11 = _sym3(
            [
                [c1111 - c2222, -c1222.real - c1112.real, -c1222.imag - c1112.imag],
                [0, 0, 0],
                [0, 0, 0],
            ]
        )
        return GammaDecomposition(
            2,
            [(2, 1, M21), (1, 1, M11)],
            (3 * c2222 - c1111) / 4,
            (3 * c1111 - c2222) / 4,
        )

    return _fourier_decomposition(C, gamma)


def _laurent_cs(a: int, b: int) -> np.ndarray:
    """Coefficients of ``cos^a t sin^b t`` in powers ``e^{i n t}``, n = -(a+b), -(a+b)+2, .., a+b."""
    out = np.array([1.0 + 0j])
    for _ in range(a):
        out = np.convolve(out, [0.5, 0.5])
    for _ in range(b):
        out = np.convolve(out, [0.5j, -0.5j])  # (e^{it} - e^{-it}) / 2i, low power first
    return out


def _fourier_decomposition(C: np.ndarray, gamma: int) -> GammaDecomposition:
    """Quadratic forms read off the trigonometric expansion of the contraction.

    With ``t1``/``t2`` the number of 2-indices on the conjugated/plain side,

        F = X_0(t) + sum_{k>=1} 2 Re(X_k(t) e^{-ik phi}),
        X_k = sum_{t1} C(g,t1) C(g,t1+k) C[t1, t1+k] cos^{2g-2t1-k} sin^{2t1+k}.

    ``X_0`` and even ``k`` give cosines of ``2 a t`` (fed to ``z_{a,k/2}`` via
    ``z1^2`` and ``z2^2 - z3^2``, ``z2 z3``), odd ``k`` gives sines of ``2 a t``
    (fed to ``z_{a,k}`` via ``z1 z2``, ``z1 z3``).
    """
    from math import comb

    g = gamma
    blocks = {}

    def block(a, b):
        return blocks.setdefault((a, b), np.zeros((3, 3)))

    def entry(t1, t2):
        return C[(0,) * (g - t1) + (1,) * t1 + (0,) * (g - t2) + (1,) * t2]

    for k in range(g + 1):
        L = np.zeros(2 * g + 1, dtype=np.complex128)  # powers -2g, -2g+2, .., 2g
        for t1 in range(g - k + 1):
            t2 = t1 + k
            L += comb(g, t1) * comb(g, t2) * entry(t1, t2) * _laurent_cs(2 * g - t1 - t2, t1 + t2)
        pos, neg = L[g:], L[g::-1]
        cos_c = pos + neg  # coefficient of cos(2 a t)
        sin_c = 1j * (pos - neg)  # coefficient of sin(2 a t)
        for a in range(1, g + 1):
            cn, sn = cos_c[a], sin_c[a]
            if k == 0:
                block(a, 1)[0, 0] += 2 * cn.real
            elif k % 2:
                B = block(a, k)
                B[0, 1] += -2 * sn.real
                B[0, 2] += -2 * sn.imag
            else:
                B = block(a, k // 2)
                c_a = -cn  # X_k = sum_a c_a (1 - cos 2 a t)
                B[1, 1] += 4 * c_a.real
                B[2, 2] -= 4 * c_a.real
                B[1, 2] += 4 * c_a.imag
    terms = []
    for (a, b), B in sorted(blocks.items(), reverse=True):
        if np.any(B):
            terms.append((a, b, np.triu(B) + np.triu(B, 1).T))
    top = sum(M[0, 0] for _, _, M in terms)
    top_y = sum((-1) ** a * M[0, 0] for a, _, M in terms)
    return GammaDecomposition(g, terms, entry(0, 0).real - top, entry(g, g).real - top_y)


def contract_x(C, theta: float, phi: float) -> float:
    """Direct contraction ``C x_1 x^H .. x_g x^H x_{g+1} x^T ..`` with the first rotation column."""
    x = np.array([np.cos(theta), np.sin(theta) * np.exp(-1j * phi)])
    return _contract(C, x)


def contract_y(C, theta: float, phi: float) -> float:
    y = np.array([-np.sin(theta) * np.exp(1j * phi), np.cos(theta)])
    return _contract(C, y)


def _contract(C, v) -> float:
    C = np.asarray(C)
    g = C.ndim // 2
    out = C
    for _ in range(g):
        out = np.tensordot(v.conj(), out, axes=([0], [0]))
    for _ in range(g):
        out = np.tensordot(v, out, axes=([0], [0]))
    return float(np.real(out))


def semisymmetric_hermitian(C) -> np.ndarray:
    """Project a 2x..x2 tensor onto Hermitian tensors symmetric within each half."""
    C = np.asarray(C, dtype=np.complex128)
    g = C.ndim // 2
    C = symmetrize(C, range(g))
    C = symmetrize(C, range(g, 2 * g))
    order = list(range(g, 2 * g)) + list(range(g))
    return 0.5 * (C + np.transpose(C, order).conj())


# --------------------------------------------------------------------------- #
# solving


def jacobi_eigh3(M, tol: float = EIG_TOL, max_sweeps: int = 50):
    """Eigenvalues (descending) and eigenvectors (columns) of a real symmetric 3x3 matrix.

    Cyclic Jacobi iteration; stops once the off-diagonal mass drops below
    ``tol * ||M||``.
    """
    A = np.array(M, dtype=float)
    if A.shape != (3, 3):
        raise TensorShapeError(f"expected a 3x3 matrix, got {A.shape}")
    A = 0.5 * (A + A.T)
    V = np.eye(3)
    scale = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.sqrt(A[0, 1] ** 2 + A[0, 2] ** 2 + A[1, 2] ** 2)
        if off <= tol * scale or off == 0.0:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = A[p, q]
            if apq == 0.0:
                continue
            tau = (A[q, q] - A[p, p]) / (2 * apq)
            t = np.sign(tau) / (abs(tau) + np.sqrt(1 + tau * tau)) if tau != 0 else 1.0
            c = 1 / np.sqrt(1 + t * t)
            s = t * c
            R = np.eye(3)
            R[p, p] = R[q, q] = c
            R[p, q], R[q, p] = s, -s
            A = R.T @ A @ R
            A[p, q] = A[q, p] = 0.0
            V = V @ R
    lam = np.diag(A).copy()
    order = np.argsort(-lam, kind="stable")
    return lam[order], V[:, order]


def _top_eigvec(M) -> tuple:
    lam, V = jacobi_eigh3(M)
    scale = max(1.0, float(np.max(np.abs(lam))))
    top = np.abs(lam - lam[0]) <= 1e-12 * scale
    basis = V[:, top]
    w = basis @ basis[0]  # projection of e1 on the top eigenspace
    if np.linalg.norm(w) > 1e-12:
        w = w / np.linalg.norm(w)
    else:
        w = basis[:, 0].copy()
        k = np.flatnonzero(np.abs(w) > 1e-12)[0]
        w *= np.sign(w[k])
    return float(lam[0]), w


def _is_arrow(M) -> bool:
    return M[1, 1] == 0.0 and M[2, 2] == 0.0 and M[1, 2] == 0.0


def arrow_top_eigvec(m11: float, m12: float, m13: float) -> tuple:
    """Largest eigenvalue and its eigenvector (w1 >= 0) of an arrow matrix, in closed form."""
    s = m12 * m12 + m13 * m13
    if s == 0.0:
        if m11 >= 0:
            return m11, np.array([1.0, 0.0, 0.0])
        # the current point minimises h along this pair; rotate by a quarter turn
        return 0.0, np.array([0.0, 1.0, 0.0])
    root = np.sqrt(m11 * m11 + 4 * s)
    lam = (m11 + root) / 2 if m11 >= 0 else 2 * s / (root - m11)
    w = np.array([lam, m12, m13])
    return float(lam), w / np.linalg.norm(w)


def top_eigvec2(a: float, b: float, c: float) -> tuple:
    """Largest eigenpair of ``[[a, b], [b, c]]`` with a nonnegative first component."""
    half = 0.5 * (a - c)
    r = np.hypot(half, b)
    lam = 0.5 * (a + c) + r
    if b == 0.0:
        if a >= c:
            return float(a), np.array([1.0, 0.0])
        return float(c), np.array([0.0, 1.0])
    # (lam - c, b) avoids cancellation when a >= c, (b, lam - a) otherwise
    v = np.array([half + r, b]) if half >= 0 else np.array([b, r - half])
    v /= np.linalg.norm(v)
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return float(lam), v


def top_eigvec(M) -> tuple:
    M = np.asarray(M, dtype=float)
    if _is_arrow(M):
        return arrow_top_eigvec(M[0, 0], M[0, 1], M[0, 2])
    return _top_eigvec(M)


def w_to_givens(w, alpha: int = 1, beta: int = 1) -> tuple:
    """Recover ``(theta, phi)`` and ``Psi`` from a unit vector ``w = z_{alpha,beta}``."""
    w = np.asarray(w, dtype=float)
    if abs(np.linalg.norm(w) - 1) > UNIT_TOL:
        raise ValueError(f"w must be a unit vector, |w| = {np.linalg.norm(w):.3e}")
    if w[0] < -UNIT_TOL:
        raise ValueError("w must have a nonnegative first component")
    # atan2 keeps full precision for tiny angles, where arccos(w1) does not
    at = float(np.arctan2(np.hypot(w[1], w[2]), w[0]))
    if np.sin(at) < PHI_TOL:
        bp = 0.0
    else:
        bp = float(np.arctan2(-w[2], -w[1]))
        if bp <= -np.pi:
            bp = np.pi
    theta, phi = at / alpha + 0.0, bp / beta + 0.0  # no signed zeros
    return theta, phi, givens_psi(theta, phi)


def rotation_gain(M, w) -> float:
    """``w^T M w - M11`` for a unit `w`, written without the cancellation of the direct form."""
    M = np.asarray(M, dtype=float)
    w = np.asarray(w, dtype=float)
    tail = w[1:]
    low = M[1:, 1:] - M[0, 0] * np.eye(2)
    return float(tail @ low @ tail + 2 * w[0] * (M[0, 1:] @ tail))


def _plan(q: QuadSubproblem, w, gain, multiplier=None) -> RotationPlan:
    theta, phi, Psi = w_to_givens(w, q.alpha, q.beta)
    i, j = q.pair
    return RotationPlan(
        params=GivensParams(q.mode, i, j, theta, phi),
        Psi=Psi,
        w=np.asarray(w, dtype=float),
        predicted_gain=float(gain),
        multiplier=multiplier,
    )


def solve_quadratic(q: QuadSubproblem, real: bool = False) -> RotationPlan:
    """Maximise ``z^T M z`` over the unit sphere (over its ``(z1, z2)`` circle if `real`)."""
    M = np.asarray(q.M, dtype=float)
    if real:
        # real rotations have phi in {0, pi}, i.e. z3 = 0
        lam, w2 = top_eigvec2(M[0, 0], M[0, 1], M[1, 1])
        w = np.array([w2[0], w2[1], 0.0])
    else:
        lam, w = top_eigvec(M)
    return _plan(q, w, max(rotation_gain(M, w), 0.0))


def solve_proximal(
    q: QuadSubproblem, epsilon: float, real: bool = False, max_iter: int = 200, tol: float = 1e-12
) -> RotationPlan:
    """Maximise ``z^T M z + 2 eps z1`` over the unit sphere.

    The maximiser satisfies ``(lam I - M) z = eps e1`` with ``lam >= lam_max(M)``;
    `lam` is the root of the secular equation ``||(lam I - M)^{-1} eps e1|| = 1``.
    """
    if not epsilon > 0:
        raise ValueError("the proximal weight must be positive")
    M = np.array(q.M, dtype=float)
    if real:
        M[2, :] = 0.0
        M[:, 2] = 0.0
    lam, V = jacobi_eigh3(M)
    if real:
        # drop the artificial z3 direction
        keep = [k for k in range(3) if abs(V[2, k]) < 0.5]
        lam, V = lam[keep], V[:, keep]
    c = V[0, :]  # e1 in the eigenbasis
    scale = max(1.0, float(np.max(np.abs(lam))))
    top = np.abs(lam - lam[0]) <= 1e-12 * scale
    c_top = float(np.linalg.norm(c[top]))

    gaps = lam[0] - lam  # mu - lam_k = s + gaps_k with s = mu - lam_1 >= 0
    rest = ~top
    hard_norm = epsilon * np.sqrt(np.sum((c[rest] / gaps[rest]) ** 2)) if rest.any() else 0.0
    if c_top <= 1e-10 and hard_norm <= 1.0:
        # hard case: the multiplier sits at the top eigenvalue
        s = 0.0
        coef = np.zeros_like(lam)
        coef[rest] = epsilon * c[rest] / gaps[rest]
        coef[int(np.flatnonzero(top)[0])] = np.sqrt(max(1.0 - float(np.sum(coef**2)), 0.0))
        z = V @ coef
    else:
        # ||z(s)|| decreases from +inf (or hard_norm > 1) at s = 0 to <= 1 at s = eps
        lo, hi = 0.0, float(epsilon)
        s = hi
        for _ in range(max_iter):
            t = s + gaps
            zn = epsilon * np.sqrt(np.sum((c / t) ** 2))
            resid = 1.0 / zn - 1.0
            if abs(resid) <= tol or hi - lo <= 4e-16 * max(s, 1e-300):
                break
            if resid > 0:
                hi = s
            else:
                lo = s
            # Newton on 1/||z||, which is nearly linear in s
            dzn = -(epsilon**2) * np.sum(c**2 / t**3) / zn
            trial = s + resid * zn**2 / dzn
            s = trial if lo < trial < hi else 0.5 * (lo + hi)
        else:
            raise RuntimeError(f"secular solve did not converge, residual {abs(resid):.3e}")
        z = V @ (epsilon * c / (s + gaps))
    mu = float(lam[0]) + s
    if real:
        z = np.array([z[0], z[1], 0.0])
    z = z / np.linalg.norm(z)
    Mq = np.asarray(q.M, dtype=float)
    kkt = np.linalg.norm(M @ z + epsilon * np.array([1.0, 0, 0]) - mu * z)
    if kkt > 1e-10 * max(1.0, float(np.linalg.norm(Mq))):
        raise RuntimeError(f"proximal solve has KKT residual {kkt:.3e}")
    return _plan(q, z, rotation_gain(Mq, z), multiplier=float(mu))


@dataclass(frozen=True)
class ConditionReport:
    eigenvalues: np.ndarray
    w: np.ndarray
    u: np.ndarray
    v: np.ndarray
    ratio: float | None
    a2: bool
    a3: bool
    degenerate: bool


def condition_diagnostics(q: QuadSubproblem, tol: float = 1e-10) -> ConditionReport:
    """Spectral diagnostics of ``M``: eigen-triple, (lam2 - lam3)/(lam1 - lam3), u1 and v1 tests."""
    M = np.asarray(q.M if isinstance(q, QuadSubproblem) else q, dtype=float)
    lam, V = jacobi_eigh3(M)
    spread = lam[0] - lam[2]
    scale = max(1.0, float(np.max(np.abs(lam))))
    degenerate = spread <= tol * scale
    ratio = None if degenerate else float((lam[1] - lam[2]) / spread)
    return ConditionReport(
        eigenvalues=lam,
        w=V[:, 0],
        u=V[:, 1],
        v=V[:, 2],
        ratio=ratio,
        a2=bool(abs(V[0, 1]) <= tol),
        a3=bool(abs(V[0, 2]) <= tol),
        degenerate=bool(degenerate),
    )
