"""Jacobi rotation solvers (gradient-based, cyclic, proximal) and a steepest-ascent baseline.

Every solver maximises the objective of a :class:`ProblemSpec` over its unitary
factors, starting from the identity tuple unless a seed is given.  One
iteration of a Jacobi solver is one Givens rotation; a sweep is
``d * n_max (n_max - 1) / 2`` rotations.
"""

from __future__ import annotations

import csv
import enum
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .manifold import apply_givens_right, qr_retract, random_unitary, reorthonormalize
from .objectives import (
    Family,
    ProblemSpec,
    dagger,
    grad_norm_from_lambdas,
    lambda_from_W,
    transform,
    value_from_W,
)
from .subproblem import build_subproblem_from_W, solve_proximal, solve_quadratic
from .tensor import mode_product

VOID_STEP = 1e-15
REORTH_EVERY = 64
MIN_STEP = 1e-10


class PairStrategy(str, enum.Enum):
    GRADIENT = "gradient"
    CYCLIC = "cyclic"


class Status(str, enum.Enum):
    GRAD_CONVERGED = "GradConverged"
    MAX_ITER = "MaxIter"


@dataclass(frozen=True)
class SolverConfig:
    delta: float | None = None  # None picks the largest admissible value
    epsilon: float = 0.0
    grad_tol: float = 1e-5
    max_iter: int = 1000
    pair_strategy: PairStrategy = PairStrategy.GRADIENT
    seed: int | None = None  # None starts from the identity tuple


@dataclass(frozen=True)
class IterationRecord:
    """One step; `grad_norm` is taken before the step, `f` after it."""

    k: int
    f: float
    grad_norm: float
    p: int
    i: int
    j: int
    theta: float
    phi: float
    step_norm: float
    slack: float  # descent-inequality slack, NaN when not applicable
    prox_slack: float = math.nan  # gain - eps ||z - e1||^2 for proximal steps
    predicted_gain: float = 0.0


@dataclass
class SolveResult:
    upsilon: tuple
    records: list
    status: Status
    value: float
    grad_norm: float
    initial_value: float
    W: tuple = ()
    iterations: int = 0
    sweeps: float = 0.0
    elapsed: float = 0.0


def sweep_length(spec: ProblemSpec) -> int:
    dims = spec.factor_dims
    n = max(dims)
    return len(dims) * n * (n - 1) // 2


def delta_bound_mg(dims) -> float:
    n = max(dims)
    return math.sqrt(2.0 / (len(dims) * n * (n - 1)))


def delta_bound_g(n: int) -> float:
    return math.sqrt(2.0) / n


# --------------------------------------------------------------------------- #
# pair selection


def select_pair_gradient(lambdas, delta: float, grad_norm_total: float | None = None):
    """Mode and pair whose 2x2 block of ``Lambda`` is largest.

    Returns ``None`` when every field vanishes.  Ties resolve to the
    lexicographically first ``(p, i, j)``.  Raises if the winner misses
    ``||block|| >= delta * ||grad||``, which cannot happen for admissible delta.
    """
    if grad_norm_total is None:
        grad_norm_total = grad_norm_from_lambdas(lambdas)
    best, best_val = None, 0.0
    for p, L in enumerate(lambdas):
        A = np.abs(np.asarray(L)) ** 2
        n = A.shape[0]
        d = np.diag(A)
        for i in range(n - 1):
            vals = d[i] + d[i + 1 :] + A[i, i + 1 :] + A[i + 1 :, i]
            k = int(np.argmax(vals))
            if vals[k] > best_val:
                best, best_val = (p, i, i + 1 + k), float(vals[k])
    if best is None:
        return None
    if math.sqrt(best_val) < delta * grad_norm_total * (1 - 1e-12):
        raise RuntimeError("selected pair violates the delta inequality; delta too large")
    return best


class CyclicSelector:
    """Modes in turn; each mode walks its own pair list (0,1), (0,2), .., (n-2, n-1) and wraps."""

    def __init__(self, dims):
        self.pairs = [[(i, j) for i in range(n) for j in range(i + 1, n)] for n in dims]
        self.cursor = [0] * len(dims)
        self.mode = 0

    def __call__(self):
        while True:
            p = self.mode
            self.mode = (self.mode + 1) % len(self.pairs)
            if self.pairs[p]:
                i, j = self.pairs[p][self.cursor[p]]
                self.cursor[p] = (self.cursor[p] + 1) % len(self.pairs[p])
                return p, i, j


def select_pair_cyclic(state: CyclicSelector):
    return state()


# --------------------------------------------------------------------------- #
# maintained transformed tensors


def _rotate_slab(W: np.ndarray, axis: int, i: int, j: int, X: np.ndarray) -> None:
    idx = [slice(None)] * W.ndim
    idx[axis] = [i, j]
    idx = tuple(idx)
    W[idx] = mode_product(W[idx], X, axis)


def apply_rotation_to_W(spec: ProblemSpec, Ws, p: int, i: int, j: int, Psi) -> tuple:
    """Transformed tensors after ``U^(p) <- U^(p) G(i, j, Psi)``, touching two slices per mode."""
    out = tuple(np.array(W, copy=True) for W in Ws)
    if spec.family is Family.TRACE_MAX:
        g = spec.gamma
        for W in out:
            for m in range(g):
                _rotate_slab(W, m, i, j, Psi.conj().T)
                _rotate_slab(W, g + m, i, j, Psi.T)
        return out
    X = dagger(Psi, spec.dagger)
    modes = range(spec.order) if spec.family is Family.JATD_S else (p,)
    for W in out:
        for m in modes:
            _rotate_slab(W, m, i, j, X)
    return out


def _start(spec: ProblemSpec, seed) -> list:
    if seed is None:
        return list(spec.identity())
    rng = np.random.default_rng(seed)
    return [random_unitary(n, rng, real=spec.real) for n in spec.factor_dims]


def _lambdas(spec: ProblemSpec, Ws) -> list:
    return [lambda_from_W(spec, Ws, p) for p in range(len(spec.factor_dims))]


# --------------------------------------------------------------------------- #
# Jacobi loops


def _jacobi(spec: ProblemSpec, config: SolverConfig, delta: float, log=None) -> SolveResult:
    t0 = time.perf_counter()
    ups = _start(spec, config.seed)
    Ws = transform(spec, tuple(ups))
    f = f0 = value_from_W(spec, Ws)
    cyclic = config.pair_strategy is PairStrategy.CYCLIC
    selector = CyclicSelector(spec.factor_dims) if cyclic else None
    proximal = config.epsilon > 0
    real = spec.real and all(not np.any(U.imag) for U in ups)
    records = []
    status = Status.MAX_ITER
    updates = 0
    lams = _lambdas(spec, Ws)
    gnorm = grad_norm_from_lambdas(lams)
    k = 0
    while True:
        if gnorm <= config.grad_tol:
            status = Status.GRAD_CONVERGED
            break
        if k >= config.max_iter:
            break
        k += 1
        if cyclic:
            p, i, j = selector()
        else:
            p, i, j = select_pair_gradient(lams, delta, gnorm)
        q = build_subproblem_from_W(spec, Ws, f, p, (i, j))
        if proximal:
            plan = solve_proximal(q, config.epsilon, real=real)
        else:
            plan = solve_quadratic(q, real=real)
        step = float(np.linalg.norm(plan.Psi - np.eye(2)))
        if plan.predicted_gain <= 0.0 or step <= VOID_STEP:
            rec = IterationRecord(k, f, gnorm, p, i, j, 0.0, 0.0, 0.0, math.nan)
        else:
            ups[p] = apply_givens_right(ups[p], i, j, plan.Psi)
            Ws = apply_rotation_to_W(spec, Ws, p, i, j, plan.Psi)
            updates += 1
            if updates % REORTH_EVERY == 0:
                ups = [reorthonormalize(U) for U in ups]
                Ws = transform(spec, tuple(ups))
            f_new = value_from_W(spec, Ws)
            # exact gain of the step; f_new - f carries cancellation error of order ulp(f)
            gain = plan.predicted_gain
            slack = math.nan
            if not cyclic:
                eta = math.sqrt(2) * delta / (8 * q.alpha)
                slack = gain - eta * gnorm * step
            prox_slack = math.nan
            if proximal:
                prox_slack = gain - config.epsilon * float(np.sum((plan.w - [1, 0, 0]) ** 2))
            p_theta, p_phi = plan.params.theta, plan.params.phi
            rec = IterationRecord(
                k, f_new, gnorm, p, i, j, p_theta, p_phi, step, slack, prox_slack, gain
            )
            f = f_new
        records.append(rec)
        if log is not None:
            log(rec)
        lams = _lambdas(spec, Ws)
        gnorm = grad_norm_from_lambdas(lams)
    ups = [reorthonormalize(U) for U in ups]
    return SolveResult(
        upsilon=tuple(ups),
        records=records,
        status=status,
        value=f,
        grad_norm=gnorm,
        initial_value=f0,
        W=Ws,
        iterations=k,
        sweeps=k / sweep_length(spec),
        elapsed=time.perf_counter() - t0,
    )


def _check_delta(delta, bound: float) -> float:
    if delta is None:
        return bound - 1e-15
    if not 0 < delta <= bound:
        raise ValueError(f"delta must lie in (0, {bound:.6g}], got {delta}")
    return float(delta)


def jacobi_g(spec: ProblemSpec, config: SolverConfig = SolverConfig(), log=None) -> SolveResult:
    """Single-factor Jacobi iteration on U(n) (trace maximization, shared-factor diagonalization)."""
    if spec.multi_factor:
        raise ValueError("jacobi_g runs on single-factor problems; use jacobi_mg")
    if config.epsilon < 0:
        raise ValueError("the proximal weight must be nonnegative")
    delta = _check_delta(config.delta, delta_bound_g(spec.factor_dims[0]))
    return _jacobi(spec, config, delta, log)


def jacobi_mg(spec: ProblemSpec, config: SolverConfig = SolverConfig(), log=None) -> SolveResult:
    """Multi-factor Jacobi iteration: one rotation of one factor per step."""
    if config.epsilon < 0:
        raise ValueError("the proximal weight must be nonnegative")
    delta = _check_delta(config.delta, delta_bound_mg(spec.factor_dims))
    return _jacobi(spec, config, delta, log)


def jacobi_mc(spec: ProblemSpec, config: SolverConfig = SolverConfig(), log=None) -> SolveResult:
    """Cyclic-order variant of :func:`jacobi_mg`."""
    return jacobi_mg(spec, replace(config, pair_strategy=PairStrategy.CYCLIC), log)


def jacobi_gp(spec: ProblemSpec, config: SolverConfig = SolverConfig(epsilon=1e-3), log=None):
    return jacobi_g(spec, config, log)


def jacobi_mgp(spec: ProblemSpec, config: SolverConfig = SolverConfig(epsilon=1e-3), log=None):
    return jacobi_mg(spec, config, log)


# --------------------------------------------------------------------------- #
# baseline


def baseline_rsd(
    spec: ProblemSpec, config: SolverConfig = SolverConfig(), log=None, armijo: float = 1e-4
) -> SolveResult:
    """Riemannian steepest ascent with Armijo backtracking and the QR retraction."""
    t0 = time.perf_counter()
    ups = _start(spec, config.seed)
    Ws = transform(spec, tuple(ups))
    f = f0 = value_from_W(spec, Ws)
    lams = _lambdas(spec, Ws)
    gnorm = grad_norm_from_lambdas(lams)
    records = []
    status = Status.MAX_ITER
    t = 1.0 / max(gnorm, 1.0)
    k = 0
    while True:
        if gnorm <= config.grad_tol:
            status = Status.GRAD_CONVERGED
            break
        if k >= config.max_iter:
            break
        k += 1
        t = min(2 * t, 1e6)
        while True:
            trial = [qr_retract(U, t * (U @ L)) for U, L in zip(ups, lams)]
            W_trial = transform(spec, tuple(trial))
            f_trial = value_from_W(spec, W_trial)
            if f_trial >= f + armijo * t * gnorm**2:
                break
            t *= 0.5
            if t < MIN_STEP:
                break
        if t < MIN_STEP:
            break
        step = math.sqrt(sum(np.linalg.norm(a - b) ** 2 for a, b in zip(trial, ups)))
        ups, Ws = trial, W_trial
        rec = IterationRecord(k, f_trial, gnorm, -1, -1, -1, math.nan, math.nan, step, math.nan)
        f = f_trial
        records.append(rec)
        if log is not None:
            log(rec)
        lams = _lambdas(spec, Ws)
        gnorm = grad_norm_from_lambdas(lams)
    return SolveResult(
        upsilon=tuple(ups),
        records=records,
        status=status,
        value=f,
        grad_norm=gnorm,
        initial_value=f0,
        W=Ws,
        iterations=k,
        sweeps=float(k),
        elapsed=time.perf_counter() - t0,
    )


SOLVERS = {
    "jacobi-g": jacobi_g,
    "jacobi-mg": jacobi_mg,
    "jacobi-mc": jacobi_mc,
    "jacobi-gp": jacobi_gp,
    "jacobi-mgp": jacobi_mgp,
    "baseline-rsd": baseline_rsd,
}

LOG_COLUMNS = ("k", "f", "grad_norm", "p", "i", "j", "theta", "phi", "step_norm", "slack")


def write_log(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_COLUMNS)
        for r in records:
            writer.writerow([repr(getattr(r, c)) if isinstance(getattr(r, c), float) else getattr(r, c) for c in LOG_COLUMNS])
