import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import crand
from jacobi_opt.manifold import random_unitary
from jacobi_opt.objectives import Dagger, Family, ProblemSpec, objective
from jacobi_opt.subproblem import (
    QuadSubproblem,
    build_subproblem,
    build_subproblem_jatc,
    build_subproblem_jatd,
    build_subproblem_tracemax,
    condition_diagnostics,
    contract_x,
    contract_y,
    elementary_eval,
    givens_psi,
    jacobi_eigh3,
    quadforms_gamma,
    rotation_gain,
    semisymmetric_hermitian,
    solve_proximal,
    solve_quadratic,
    w_to_givens,
    z_vector,
)
from jacobi_opt.tensor import example_7_1_tensor

GRID = np.linspace(-np.pi, np.pi, 13)
DAGGERS = (Dagger.CONJ_TRANSPOSE, Dagger.TRANSPOSE)


def grid_error(spec, ups, p, pair, q):
    worst = 0.0
    for theta, phi in itertools.product(GRID, GRID):
        h = elementary_eval(spec, ups, p, pair, theta, phi)
        worst = max(worst, abs(h - q.value(theta, phi)))
    return worst


def fit_arrow(spec, ups, p, pair):
    """Least-squares fit of h over the grid in the basis z1^2, 2 z1 z2, 2 z1 z3, 1."""
    rows, vals = [], []
    for theta, phi in itertools.product(GRID, GRID):
        z = z_vector(theta, phi)
        rows.append([z[0] ** 2, 2 * z[0] * z[1], 2 * z[0] * z[2], 1.0])
        vals.append(elementary_eval(spec, ups, p, pair, theta, phi))
    coef, *_ = np.linalg.lstsq(np.array(rows), np.array(vals), rcond=None)
    return coef


def random_specs(rng):
    for mode in DAGGERS:
        yield ProblemSpec(Family.JATD, (crand(rng, (3, 4, 3)), crand(rng, (3, 4, 3))), (2,), dagger=mode)
        yield ProblemSpec(Family.JATC, (crand(rng, (3, 3, 4)),), (2, 1, 3), dagger=mode)
        yield ProblemSpec(Family.JATD_S, (crand(rng, (3, 3, 3)),), (3,), dagger=mode)
        yield ProblemSpec(Family.JATD_S, (crand(rng, (4, 4)),), (4,), dagger=mode)
    yield ProblemSpec(Family.JATD, (crand(rng, (3, 3, 3), real=True),), (3,))
    B = crand(rng, (5, 5))
    yield ProblemSpec(Family.TRACE_MAX, (B + B.conj().T,), (3,))


def supported_pairs(spec, n, r):
    for i, j in itertools.combinations(range(n), 2):
        if spec.family is Family.JATD_S and i < r <= j:
            continue  # several quadratic forms; not built
        yield i, j


def test_builders_match_grid_oracle(rng):
    for spec in random_specs(rng):
        ups = tuple(random_unitary(n, rng) for n in spec.factor_dims)
        for p in range(len(ups)):
            n, r = ups[p].shape[0], spec.factor_ranks[p]
            for pair in supported_pairs(spec, n, r):
                q = build_subproblem(spec, ups, p, pair)
                assert np.array_equal(q.M, q.M.T)
                assert grid_error(spec, ups, p, pair, q) <= 1e-10 * (1 + abs(q.C)), (spec.family, p, pair)


def test_example_tensor_matches_fitted_matrix():
    spec = ProblemSpec(Family.JATD, (example_7_1_tensor(),), (3,))
    ups = spec.identity()
    q = build_subproblem_jatd(spec, ups, 0, (0, 1))
    m11, m12, m13, c = fit_arrow(spec, ups, 0, (0, 1))
    np.testing.assert_allclose([q.M[0, 0], q.M[0, 1], q.M[0, 2], q.C], [m11, m12, m13, c], atol=1e-9)
    assert q.M[0, 0] + q.C == objective(spec, ups)


def test_diagonal_W_has_no_coupling(rng):
    D = np.zeros((3, 3, 3), dtype=complex)
    D[np.arange(3), np.arange(3), np.arange(3)] = crand(rng, 3)
    spec = ProblemSpec(Family.JATD, (D,), (3,))
    for pair in itertools.combinations(range(3), 2):
        q = build_subproblem_jatd(spec, spec.identity(), 1, pair)
        assert q.M[0, 1] == 0 and q.M[0, 2] == 0


def test_jatc_zero_cases(rng):
    A = crand(rng, (3, 3, 3))
    spec = ProblemSpec(Family.JATC, (A,), (2, 2, 2))
    ups = tuple(random_unitary(3, rng) for _ in range(3))
    # both indices kept: rotation within the kept block leaves the norm unchanged
    assert not np.any(build_subproblem_jatc(spec, ups, 0, (0, 1)).M)
    full = ProblemSpec(Family.JATC, (A,), (3, 3, 3))
    for pair in itertools.combinations(range(3), 2):
        assert not np.any(build_subproblem_jatc(full, ups, 2, pair).M)


def test_tracemax_special_cases(rng):
    d = rng.standard_normal(4)
    spec = ProblemSpec(Family.TRACE_MAX, (np.diag(d).astype(complex),), (2,))
    q = build_subproblem_tracemax(spec, np.eye(4), (1, 3))
    assert q.M[0, 1] == 0 and q.M[0, 2] == 0
    spec = ProblemSpec(Family.TRACE_MAX, (np.eye(4),), (2,))
    U = random_unitary(4, rng)
    for pair in itertools.combinations(range(4), 2):
        assert np.allclose(build_subproblem_tracemax(spec, U, pair).M, 0, atol=1e-14)


def test_pairs_outside_the_kept_block_are_constant(rng):
    spec = ProblemSpec(Family.JATD, (crand(rng, (4, 4, 4)),), (2,))
    ups = tuple(random_unitary(4, rng) for _ in range(3))
    q = build_subproblem(spec, ups, 0, (2, 3))
    assert not np.any(q.M)
    assert np.isclose(q.C, objective(spec, ups))


def test_shared_factor_mixed_pairs_are_rejected(rng):
    spec = ProblemSpec(Family.JATD_S, (crand(rng, (3, 3, 3)),), (2,))
    with pytest.raises(NotImplementedError):
        build_subproblem(spec, (np.eye(3),), 0, (0, 2))


def test_elementary_eval_special_angles(rng):
    spec = ProblemSpec(Family.JATD, (crand(rng, (3, 3, 3)),), (2,))
    ups = tuple(random_unitary(3, rng) for _ in range(3))
    f = objective(spec, ups)
    assert np.isclose(elementary_eval(spec, ups, 1, (0, 2), 0.0, 1.3), f, rtol=1e-13)
    # a half turn only flips signs of two columns
    assert np.isclose(elementary_eval(spec, ups, 1, (0, 2), np.pi, 0.7), f, rtol=1e-12)


# --------------------------------------------------------------------------- gamma decompositions


def test_gamma_one_printed_form(rng):
    C = semisymmetric_hermitian(crand(rng, (2, 2)))
    dec = quadforms_gamma(C, 1)
    (alpha, beta, M), = dec.terms
    assert (alpha, beta) == (1, 1)
    want = [[(C[0, 0] - C[1, 1]).real, -C[0, 1].real, -C[0, 1].imag],
            [-C[0, 1].real, 0, 0], [-C[0, 1].imag, 0, 0]]
    np.testing.assert_allclose(M, want, atol=1e-15)
    assert np.isclose(dec.const_x, C[1, 1].real)


def test_gamma_two_constant(rng):
    C = semisymmetric_hermitian(crand(rng, (2,) * 4))
    dec = quadforms_gamma(C, 2)
    assert np.isclose(dec.const_x, (3 * C[1, 1, 1, 1] - C[0, 0, 0, 0]).real / 4)


@pytest.mark.parametrize("gamma", [1, 2, 3])
def test_gamma_decompositions_match_contraction(gamma, rng):
    for _ in range(10):
        C = semisymmetric_hermitian(crand(rng, (2,) * (2 * gamma)))
        dec = quadforms_gamma(C, gamma)
        scale = 1 + max(abs(dec.const_x), abs(dec.const_y))
        for theta, phi in itertools.product(GRID, GRID):
            assert abs(dec.eval_x(theta, phi) - contract_x(C, theta, phi)) <= 1e-9 * scale
            assert abs(dec.eval_y(theta, phi) - contract_y(C, theta, phi)) <= 1e-9 * scale


def test_gamma_out_of_range(rng):
    with pytest.raises((ValueError, NotImplementedError)):
        quadforms_gamma(semisymmetric_hermitian(crand(rng, (2,) * 8)), 4)


# --------------------------------------------------------------------------- solvers


def test_quadratic_solve_examples():
    plan = solve_quadratic(QuadSubproblem(M=np.diag([2.0, 0, 0]), C=0.0))
    np.testing.assert_array_equal(plan.w, [1, 0, 0])
    np.testing.assert_allclose(plan.Psi, np.eye(2))
    M = np.zeros((3, 3))
    M[0, 1] = M[1, 0] = 1.0
    plan = solve_quadratic(QuadSubproblem(M=M, C=0.0))
    np.testing.assert_allclose(plan.w, np.array([1, 1, 0]) / np.sqrt(2), atol=1e-15)
    assert np.isclose(plan.params.theta, np.pi / 4) and np.isclose(plan.params.phi, np.pi)
    plan = solve_quadratic(QuadSubproblem(M=np.zeros((3, 3)), C=1.0))
    np.testing.assert_allclose(plan.Psi, np.eye(2))
    assert plan.predicted_gain == 0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), arrow=st.booleans())
def test_quadratic_solve_is_maximal(seed, arrow):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((3, 3))
    M = M + M.T
    if arrow:
        M[1:, 1:] = 0
    plan = solve_quadratic(QuadSubproblem(M=M, C=0.0))
    w = plan.w
    assert abs(np.linalg.norm(w) - 1) <= 1e-12 and w[0] >= 0
    assert np.isclose(w @ M @ w, np.linalg.eigvalsh(M)[-1], atol=1e-12 * max(1, np.abs(M).max()))
    V = rng.standard_normal((1000, 3))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    assert w @ M @ w >= np.max(np.einsum("ki,ij,kj->k", V, M, V)) - 1e-12
    np.testing.assert_allclose(z_vector(plan.params.theta, plan.params.phi), w, atol=1e-12)
    assert np.isclose(plan.predicted_gain, w @ M @ w - M[0, 0], atol=1e-12 * max(1, np.abs(M).max()))


def test_quadratic_solve_beats_grid(rng):
    spec = ProblemSpec(Family.JATD, (crand(rng, (3, 3, 3)),), (2,))
    ups = tuple(random_unitary(3, rng) for _ in range(3))
    q = build_subproblem(spec, ups, 2, (0, 1))
    plan = solve_quadratic(q)
    best = elementary_eval(spec, ups, 2, (0, 1), plan.params.theta, plan.params.phi)
    ts = np.linspace(0, np.pi / 2, 181)
    ps = np.linspace(-np.pi, np.pi, 181)
    grid = max(q.value(t, f) for t in ts for f in ps)
    assert best >= grid - 1e-9
    assert np.isclose(best, np.linalg.eigvalsh(q.M)[-1] + q.C, rtol=1e-12)


def test_real_solve_stays_real(rng):
    M = rng.standard_normal((3, 3))
    M = M + M.T
    plan = solve_quadratic(QuadSubproblem(M=M, C=0.0), real=True)
    assert plan.w[2] == 0 and not np.any(plan.Psi.imag)
    top = np.linalg.eigvalsh(M[:2, :2])[-1]
    assert np.isclose(plan.w @ M @ plan.w, top)


def test_proximal_examples(rng):
    plan = solve_proximal(QuadSubproblem(M=np.zeros((3, 3)), C=0.0), 1e-3)
    np.testing.assert_allclose(plan.w, [1, 0, 0], atol=1e-14)
    np.testing.assert_allclose(plan.Psi, np.eye(2), atol=1e-14)
    with pytest.raises(ValueError):
        solve_proximal(QuadSubproblem(M=np.zeros((3, 3)), C=0.0), 0.0)
    M = rng.standard_normal((3, 3))
    M = M + M.T
    w = solve_quadratic(QuadSubproblem(M=M, C=0.0)).w
    z = solve_proximal(QuadSubproblem(M=M, C=0.0), 1e-9).w
    assert np.linalg.norm(z - w) <= 1e-6


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), eps=st.sampled_from([1e-6, 1e-3, 1e-1, 10.0]), arrow=st.booleans())
def test_proximal_kkt_and_gain(seed, eps, arrow):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((3, 3))
    M = M + M.T
    if arrow:
        M[1:, 1:] = 0
    plan = solve_proximal(QuadSubproblem(M=M, C=0.0), eps)
    z, mu = plan.w, plan.multiplier
    e1 = np.array([1.0, 0, 0])
    assert np.linalg.norm(M @ z + eps * e1 - mu * z) <= 1e-10 * max(1.0, np.linalg.norm(M))
    assert mu >= np.linalg.eigvalsh(M)[-1] - 1e-12
    assert plan.predicted_gain >= eps * np.sum((z - e1) ** 2) - 1e-14
    # global optimality of the penalised objective on the sphere
    V = rng.standard_normal((2000, 3))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    vals = np.einsum("ki,ij,kj->k", V, M, V) + 2 * eps * V[:, 0]
    assert z @ M @ z + 2 * eps * z[0] >= vals.max() - 1e-12


def test_proximal_hard_case():
    # e1 orthogonal to the top eigenvector
    M = np.diag([0.0, 2.0, -1.0])
    plan = solve_proximal(QuadSubproblem(M=M, C=0.0), 1e-3)
    z = plan.w
    assert np.isclose(plan.multiplier, 2.0)
    assert np.linalg.norm(M @ z + 1e-3 * np.array([1, 0, 0]) - 2.0 * z) <= 1e-12
    assert np.isclose(z @ M @ z + 2e-3 * z[0], 2.0 + 1e-3**2 / 2, rtol=1e-12)


def test_w_to_givens_examples():
    theta, phi, Psi = w_to_givens([1.0, 0, 0])
    assert theta == 0 and phi == 0
    np.testing.assert_array_equal(Psi, np.eye(2))
    theta, phi, Psi = w_to_givens([0.0, -1.0, 0.0])
    assert np.isclose(theta, np.pi / 2) and phi == 0
    np.testing.assert_allclose(Psi, [[0, -1], [1, 0]], atol=1e-15)
    with pytest.raises(ValueError):
        w_to_givens([1.0, 1.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(
    theta=st.floats(1e-6, np.pi / 2 - 1e-6),
    phi=st.floats(-np.pi + 1e-9, np.pi),
    alpha=st.integers(1, 3),
    beta=st.integers(1, 3),
)
def test_w_to_givens_round_trip(theta, phi, alpha, beta):
    t, f = theta / alpha, phi / beta
    w = z_vector(t, f, alpha, beta)
    t2, f2, Psi = w_to_givens(w, alpha, beta)
    assert abs(t2 - t) <= 1e-12 and abs(f2 - f) <= 1e-9
    np.testing.assert_allclose(Psi, givens_psi(t2, f2), atol=1e-15)
    assert np.isclose(np.linalg.norm(Psi - np.eye(2)), 2 * np.sqrt(1 - np.cos(t2)))


def test_psi_form():
    theta, phi = 0.3, -1.1
    c, s = np.cos(theta), np.sin(theta)
    want = [[c, -s * np.exp(1j * phi)], [s * np.exp(-1j * phi), c]]
    np.testing.assert_allclose(givens_psi(theta, phi), want, atol=1e-15)


def test_condition_diagnostics():
    M = np.array([[0.5, 1.0, -2.0], [1.0, 0, 0], [-2.0, 0, 0]])
    rep = condition_diagnostics(QuadSubproblem(M=M, C=0.0))
    assert abs(rep.eigenvalues[1]) <= 1e-14 and rep.a2
    M = np.array([[1, -2, -2], [-2, 1.5, 1.5], [-2, 1.5, 1.5]])
    rep = condition_diagnostics(QuadSubproblem(M=M, C=0.0))
    np.testing.assert_allclose(rep.eigenvalues, [5, 0, -1], atol=1e-13)
    assert rep.a2
    assert np.isclose(rep.ratio, 1 / 6)
    rep = condition_diagnostics(QuadSubproblem(M=np.eye(3), C=0.0))
    assert rep.degenerate and rep.ratio is None


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_eigensolver_matches_lapack(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((3, 3)) * 10 ** rng.uniform(-3, 3)
    M = M + M.T
    lam, V = jacobi_eigh3(M)
    np.testing.assert_allclose(lam, np.linalg.eigvalsh(M)[::-1], atol=1e-13 * np.abs(M).max())
    np.testing.assert_allclose(M @ V, V * lam, atol=1e-12 * np.abs(M).max())
    np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-13)


def test_rotation_gain_identity(rng):
    M = rng.standard_normal((3, 3))
    M = M + M.T
    w = rng.standard_normal(3)
    w /= np.linalg.norm(w)
    assert np.isclose(rotation_gain(M, w), w @ M @ w - M[0, 0], atol=1e-13)
