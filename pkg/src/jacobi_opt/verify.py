"""Seeded property suites behind ``jacobi-opt verify``.

Each suite draws small random instances, checks one property per sample and
returns a :class:`SuiteReport` with the worst residual and the failing seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .manifold import random_unitary, riemannian_grad_unitary
from .objectives import (
    Dagger,
    Family,
    ProblemSpec,
    euclid_grad_mode,
    lambda_field,
    objective,
    stiefel_grad_norms,
)
from .solvers import SolverConfig, jacobi_g, jacobi_mg
from .subproblem import (
    QuadSubproblem,
    build_subproblem,
    contract_x,
    contract_y,
    elementary_eval,
    quadforms_gamma,
    semisymmetric_hermitian,
    solve_proximal,
)


@dataclass
class SuiteReport:
    name: str
    passed: int = 0
    failed: int = 0
    worst: float = 0.0
    failing_seeds: list = field(default_factory=list)

    def record(self, seed: int, residual: float, ok: bool) -> None:
        self.worst = max(self.worst, float(residual))
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if seed not in self.failing_seeds:
                self.failing_seeds.append(seed)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def summary(self) -> str:
        line = f"{self.name}: {self.passed} passed, {self.failed} failed, worst residual {self.worst:.3e}"
        if self.failing_seeds:
            line += f" (failing seeds {self.failing_seeds})"
        return line


def _crand(rng, shape, real=False):
    A = rng.standard_normal(shape)
    if not real:
        A = A + 1j * rng.standard_normal(shape)
    return A.astype(np.complex128)


def random_problem(kind: str, rng, dagger=Dagger.CONJ_TRANSPOSE) -> ProblemSpec:
    """Small random instance of one of the families exercised by the suites."""
    if kind in ("jatd-real", "jatd-complex"):
        real = kind == "jatd-real"
        dims = tuple(int(n) for n in rng.integers(2, 5, size=3))
        r = int(rng.integers(1, min(dims) + 1))
        A = [_crand(rng, dims, real) for _ in range(int(rng.integers(1, 3)))]
        w = tuple(float(x) for x in rng.uniform(0.5, 2.0, size=len(A)))
        return ProblemSpec(Family.JATD, tuple(A), (r,), weights=w, dagger=dagger)
    if kind == "jatc":
        dims = tuple(int(n) for n in rng.integers(2, 5, size=3))
        ranks = tuple(int(rng.integers(1, n + 1)) for n in dims)
        A = [_crand(rng, dims) for _ in range(int(rng.integers(1, 3)))]
        return ProblemSpec(Family.JATC, tuple(A), ranks, dagger=dagger)
    if kind == "jatd-s":
        d = int(rng.integers(2, 4))
        n = int(rng.integers(2, 5))
        A = [_crand(rng, (n,) * d) for _ in range(int(rng.integers(1, 3)))]
        return ProblemSpec(Family.JATD_S, tuple(A), (n,), dagger=dagger)
    if kind == "tracemax":
        n = int(rng.integers(2, 6))
        B = _crand(rng, (n, n))
        B = B + B.conj().T
        return ProblemSpec(Family.TRACE_MAX, (B,), (int(rng.integers(1, n + 1)),))
    raise ValueError(f"unknown instance kind {kind}")


def random_point(spec: ProblemSpec, rng) -> tuple:
    return tuple(random_unitary(n, rng) for n in spec.factor_dims)


FIDELITY_KINDS = (
    ("jatd-real", Dagger.CONJ_TRANSPOSE),
    ("jatd-complex", Dagger.CONJ_TRANSPOSE),
    ("jatd-complex", Dagger.TRANSPOSE),
    ("jatd-s", Dagger.CONJ_TRANSPOSE),
    ("jatd-s", Dagger.TRANSPOSE),
    ("jatc", Dagger.CONJ_TRANSPOSE),
    ("jatc", Dagger.TRANSPOSE),
    ("tracemax", Dagger.CONJ_TRANSPOSE),
)


def suite_quadform_fidelity(samples: int = 100, seed: int = 0) -> SuiteReport:
    rep = SuiteReport("quadform-fidelity")
    for kind, dag in FIDELITY_KINDS:
        for s in range(samples):
            sd = seed + s
            rng = np.random.default_rng([sd, sum(map(ord, kind)), dag is Dagger.TRANSPOSE])
            spec = random_problem(kind, rng, dag)
            ups = random_point(spec, rng)
            p = int(rng.integers(len(ups)))
            n = ups[p].shape[0]
            i, j = sorted(rng.choice(n, size=2, replace=False))
            theta, phi = rng.uniform(-np.pi, np.pi, size=2)
            q = build_subproblem(spec, ups, p, (i, j))
            res = abs(elementary_eval(spec, ups, p, (i, j), theta, phi) - q.value(theta, phi))
            rep.record(sd, res / (1 + abs(q.C)), res <= 1e-9 * (1 + abs(q.C)))
    for gamma in (1, 2, 3):
        for s in range(samples):
            sd = seed + s
            rng = np.random.default_rng([sd, gamma])
            C = semisymmetric_hermitian(_crand(rng, (2,) * (2 * gamma)))
            dec = quadforms_gamma(C, gamma)
            theta, phi = rng.uniform(-np.pi, np.pi, size=2)
            for got, want, const in (
                (dec.eval_x(theta, phi), contract_x(C, theta, phi), dec.const_x),
                (dec.eval_y(theta, phi), contract_y(C, theta, phi), dec.const_y),
            ):
                res = abs(got - want)
                rep.record(sd, res / (1 + abs(const)), res <= 1e-9 * (1 + abs(const)))
    return rep


def fd_euclid_grad(spec: ProblemSpec, ups, p: int) -> np.ndarray:
    """Central differences of the objective on the real embedding of factor `p`."""
    U = ups[p]
    h = 1e-6 * (1 + np.linalg.norm(U))
    G = np.zeros_like(U)
    for idx in np.ndindex(U.shape):
        for unit in (1.0, 1j):
            E = np.zeros_like(U)
            E[idx] = unit * h
            plus = list(ups)
            minus = list(ups)
            plus[p] = U + E
            minus[p] = U - E
            G[idx] += unit * (objective(spec, tuple(plus)) - objective(spec, tuple(minus))) / (2 * h)
    return G


def _trig_derivative(values: np.ndarray) -> float:
    """Derivative at 0 of a trigonometric polynomial sampled on a uniform grid over [0, 2pi)."""
    N = len(values)
    coef = np.fft.fft(values) / N
    k = np.fft.fftfreq(N, d=1.0 / N)
    if N % 2 == 0:
        coef[N // 2] = 0.0  # the Nyquist term cancels for real signals of lower degree
    return float(np.real(np.sum(1j * k * coef)))


U2_BASIS = (
    np.array([[1j, 0], [0, 0]]),
    np.array([[0, 0], [0, 1j]]),
    np.array([[0, -1], [1, 0]], dtype=complex),
    np.array([[0, 1j], [1j, 0]]),
)


def elementary_riemannian_grad(spec: ProblemSpec, ups, p: int, pair) -> np.ndarray:
    """Riemannian gradient at ``I_2`` of ``Psi -> f(U_p G(i, j, Psi))`` on U(2).

    Along each basis direction ``Omega`` of u(2) the curve ``exp(t Omega)`` is
    2pi-periodic and the objective is a trigonometric polynomial in `t` of
    degree at most twice the tensor order, so spectral differentiation on a
    fine enough grid is exact to roundoff.
    """
    i, j = pair
    U = ups[p]
    order = max(T.ndim for T in spec.tensors)
    N = 4 * order + 6
    ts = 2 * np.pi * np.arange(N) / N
    G = np.zeros((2, 2), dtype=complex)
    for Om in U2_BASIS:
        w, V = np.linalg.eigh(-1j * Om)
        vals = np.empty(N)
        for k, t in enumerate(ts):
            Psi = (V * np.exp(1j * t * w)) @ V.conj().T
            Ut = U.copy()
            Ut[:, [i, j]] = U[:, [i, j]] @ Psi
            new = list(ups)
            new[p] = Ut
            vals[k] = objective(spec, tuple(new))
        G += _trig_derivative(vals) * Om / np.real(np.vdot(Om, Om))
    return G


def suite_gradients(samples: int = 20, seed: int = 0) -> SuiteReport:
    rep = SuiteReport("gradients")
    kinds = [k for k in FIDELITY_KINDS if k[0] != "jatd-real"]
    for s in range(samples):
        sd = seed + s
        for kind, dag in kinds:
            rng = np.random.default_rng([sd, sum(map(ord, kind)), dag is Dagger.TRANSPOSE, 7])
            spec = random_problem(kind, rng, dag)
            ups = random_point(spec, rng)
            for p in range(len(ups)):
                G = euclid_grad_mode(spec, ups, p)
                Gf = fd_euclid_grad(spec, ups, p)
                rel = np.linalg.norm(G - Gf) / max(np.linalg.norm(Gf), 1e-12)
                rep.record(sd, rel, rel <= 1e-6)
                L1 = riemannian_grad_unitary(G, ups[p])[1]
                L2 = lambda_field(spec, ups, p)
                rel = np.linalg.norm(L1 - L2) / max(np.linalg.norm(L1), 1.0)
                rep.record(sd, rel, rel <= 1e-10)
                # the 2x2 block of the lifted gradient is the elementary gradient
                n = ups[p].shape[0]
                i, j = sorted(rng.choice(n, size=2, replace=False))
                Ge = elementary_riemannian_grad(spec, ups, p, (i, j))
                blk = L2[np.ix_([i, j], [i, j])]
                res = np.abs(Ge - blk).max() / max(1.0, np.abs(Ge).max())
                rep.record(sd, res, res <= 1e-10)
                # off-diagonal entries are read off the subproblem matrix
                q = build_subproblem(spec, ups, p, (i, j))
                m12, m13 = q.M[0, 1], q.M[0, 2]
                want = q.alpha * np.array([[0, m12 + 1j * m13], [-m12 + 1j * m13, 0]])
                off = Ge * np.array([[0, 1], [1, 0]])
                res = np.abs(off - want).max() / max(1.0, np.abs(Ge).max())
                rep.record(sd, res, res <= 1e-10)
    return rep


def suite_descent(samples: int = 20, seed: int = 0) -> SuiteReport:
    rep = SuiteReport("descent")
    for s in range(samples):
        sd = seed + s
        rng = np.random.default_rng([sd, 11])
        kind = ("jatd-complex", "jatc")[s % 2]
        spec = random_problem(kind, rng)
        res = jacobi_mg(spec, SolverConfig(max_iter=300, seed=sd))
        for r in res.records:
            if r.step_norm == 0.0:
                continue
            tol = 1e-12 * (1 + abs(r.f)) * r.step_norm
            rep.record(sd, max(-r.slack, 0.0), r.slack >= -tol)
    return rep


def suite_stationarity(samples: int = 20, seed: int = 0) -> SuiteReport:
    rep = SuiteReport("stationarity")
    for s in range(samples):
        sd = seed + s
        rng = np.random.default_rng([sd, 13])
        kind = ("jatd-complex", "jatc", "tracemax")[s % 3]
        spec = random_problem(kind, rng)
        solver = jacobi_g if not spec.multi_factor else jacobi_mg
        res = solver(spec, SolverConfig(max_iter=20000, seed=sd))
        res_u, res_x = stiefel_grad_norms(spec, res.upsilon)
        if res_u <= 1e-5:
            rep.record(sd, res_x, res_x <= 1e-4)
        # the start point is generically non-stationary in both senses
        start = tuple(random_unitary(n, np.random.default_rng(sd)) for n in spec.factor_dims)
        u0, x0 = stiefel_grad_norms(spec, start)
        if u0 > 1e-3:
            rep.record(sd, 0.0, x0 > 1e-5 or u0 <= 1e-5)
    return rep


def suite_proximal(samples: int = 100, seed: int = 0, epsilon: float = 1e-3) -> SuiteReport:
    rep = SuiteReport("proximal")
    for s in range(samples):
        sd = seed + s
        rng = np.random.default_rng([sd, 17])
        M = rng.standard_normal((3, 3))
        M = M + M.T
        plan = solve_proximal(QuadSubproblem(M=M, C=0.0), epsilon)
        z = plan.w
        kkt = np.linalg.norm(M @ z + epsilon * np.array([1.0, 0, 0]) - plan.multiplier * z)
        rep.record(sd, kkt, kkt <= 1e-10 * max(1.0, np.linalg.norm(M)))
        bound = epsilon * float(np.sum((z - [1, 0, 0]) ** 2))
        rep.record(sd, max(bound - plan.predicted_gain, 0.0), plan.predicted_gain >= bound - 1e-14)
    for s in range(max(samples // 20, 1)):
        sd = seed + s
        rng = np.random.default_rng([sd, 19])
        spec = random_problem(("jatd-complex", "jatc")[s % 2], rng)
        res = jacobi_mg(spec, SolverConfig(epsilon=epsilon, max_iter=300, seed=sd))
        for r in res.records:
            if r.step_norm > 0:
                rep.record(sd, max(-r.prox_slack, 0.0), r.prox_slack >= -1e-14 * (1 + abs(r.f)))
    return rep


SUITES = {
    "quadform-fidelity": suite_quadform_fidelity,
    "gradients": suite_gradients,
    "descent": suite_descent,
    "stationarity": suite_stationarity,
    "proximal": suite_proximal,
}
