import math
from itertools import permutations, product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gsbkit import field_model as fm
from gsbkit.fock_space import BlockOperator, FockVector, build_basis, energies, random_vector
from gsbkit.ladder_ops import (LadderPair, adjoint_pair_check, annihilator_matrix,
                               build_ladder, commutator_check,
                               ladder_approximation_check, nelson_bound_check,
                               segal_field, weighted_annihilator_norm)
from gsbkit.numerics import dense_norm


def _tensor_state(occ):
    """Normalized symmetric tensor in (C^G)^(x n) for an occupation vector."""
    G = len(occ)
    modes = [j for j in range(G) for _ in range(occ[j])]
    n = len(modes)
    T = np.zeros((G,) * n, dtype=complex) if n else np.ones((), dtype=complex)
    for perm in set(permutations(modes)):
        T[perm] += 1.0
    return T / np.linalg.norm(T)


def _symmetrize(T):
    n = T.ndim
    if n == 0:
        return T
    return sum(np.transpose(T, p) for p in permutations(range(n))) / math.factorial(n)


def _create_oracle(g_modes, basis):
    """<m| a^dagger(g) |n> from sqrt(n+1) Sym(g (x) psi) on explicit tensors."""
    d = basis.dim
    M = np.zeros((d, d), dtype=complex)
    tensors = [_tensor_state(tuple(s)) for s in basis.states]
    for col, occ in enumerate(basis.states):
        n = int(occ.sum())
        if n == basis.n_max:
            continue
        out = math.sqrt(n + 1) * _symmetrize(np.multiply.outer(g_modes, tensors[col]))
        for row in np.nonzero(basis.particle_numbers == n + 1)[0]:
            M[row, col] = np.vdot(tensors[row], out)
    return M


def test_annihilation_kills_vacuum(basis8, coarse):
    for f in (fm.flat(coarse), fm.wqed(coarse, x0=0.4), fm.gaussian(coarse)):
        pair = build_ladder(f, basis8)
        assert np.all(pair.annihilate @ FockVector.vacuum(basis8).coefficients == 0)


def test_creation_on_vacuum(basis8, coarse):
    f = fm.wqed(coarse, x0=0.4)
    out = build_ladder(f, basis8).create @ FockVector.vacuum(basis8).coefficients
    expect = np.zeros(basis8.dim, dtype=complex)
    for j in range(8):
        e = np.zeros(8, dtype=int)
        e[j] = 1
        expect[basis8.index_of(e)] = f.amplitudes[j] * math.sqrt(coarse.weights[j])
    assert np.allclose(out, expect, rtol=0, atol=1e-16)


@pytest.mark.parametrize("G,n_max", [(2, 2), (3, 3)])
def test_creation_matrix_matches_symmetrized_tensors(G, n_max):
    model = fm.FieldModel.uniform(2.0, G)
    f = fm.wqed(model, x0=0.7, strength=1.3)
    basis = build_basis(G, n_max)
    got = build_ladder(f, basis).create.toarray()
    assert np.max(np.abs(got - _create_oracle(f.mode_amplitudes, basis))) < 1e-14


def test_segal_field(basis8, coarse):
    assert segal_field(build_ladder(fm.zero(coarse), basis8)).entries.nnz == 0
    f = fm.wqed(coarse, x0=0.2)
    phi = segal_field(build_ladder(f, basis8))
    assert phi.hermitian_flag and phi.hermiticity_defect() == 0.0
    vac = FockVector.vacuum(basis8).coefficients
    val = np.vdot(vac, phi @ (phi @ vac)).real
    assert abs(val - fm.weighted_norm(f, 0.0, include_tail=False) / 2) < 1e-14


def test_commutator_on_safe_sectors(basis8, coarse):
    f = fm.gaussian(coarse)
    fn = fm.FormFactor(f.amplitudes / math.sqrt(fm.weighted_norm(f, 0.0, False)),
                       coarse, label="unit")
    rep = commutator_check(fn, fn, basis8)
    assert rep.passed and rep.max_deviation <= 1e-12
    assert abs(rep.details["inner_product"] - 1.0) < 1e-14
    # top sector: a^dagger cannot leave it, so the identity fails there
    assert rep.details["top_sector_deviation"] > 0.1
    assert rep.details["top_sector_note"] == "expected truncation artifact"


def test_commutator_of_disjoint_supports(basis8, coarse):
    left = fm.FormFactor(np.where(coarse.points < 0, 1.0, 0.0), coarse, label="left")
    right = fm.FormFactor(np.where(coarse.points > 0, 1.0, 0.0), coarse, label="right")
    rep = commutator_check(left, right, basis8)
    assert rep.passed and rep.details["inner_product"] == 0
    assert rep.max_deviation == 0.0


def test_commutator_for_unrelated_pairs(basis8, coarse):
    rep = commutator_check(fm.wqed(coarse, x0=1.0), fm.flat(coarse, 0.5 - 0.2j), basis8)
    assert rep.passed


def test_nelson_bounds_flat_and_wqed(basis8, coarse):
    for f in (fm.flat(coarse), fm.wqed(coarse, x0=0.3)):
        pair = build_ladder(f, basis8)
        for s in (1.0, 2.0):
            rep = nelson_bound_check(pair, s, trials=1000, seed=7)
            assert rep.passed, rep.as_dict()
            assert rep.details["violations"] == 0


def test_nelson_continuum_norm_for_flat(fine):
    basis = build_basis(fine.size, 1)
    rep = nelson_bound_check(build_ladder(fm.flat(fine), basis), 2.0, trials=50)
    assert rep.passed
    assert abs(rep.details["norm_continuum"] - math.sqrt(math.pi)) < 1e-7


def test_nelson_zero_form_factor(basis8, coarse):
    rep = nelson_bound_check(build_ladder(fm.zero(coarse), basis8), 1.0, trials=20)
    assert rep.passed and rep.details["weighted_operator_norm"] == 0.0


def test_nelson_requires_s_at_least_one(basis8, coarse):
    with pytest.raises(ValueError):
        nelson_bound_check(build_ladder(fm.flat(coarse), basis8), 0.5)


def test_single_mode_weighted_norm_matches_svd():
    model = fm.FieldModel([0.5], [0.8], fm.klein_gordon())
    f = fm.FormFactor([1.7 - 0.4j], model, label="one-mode")
    basis = build_basis(1, 6)
    pair = build_ladder(f, basis)
    for s in (1.0, 1.5, 2.0):
        W = np.diag((energies(model, basis) + 1.0) ** (-s / 2))
        exact = dense_norm(pair.annihilate.toarray() @ W)
        est = weighted_annihilator_norm(pair, s, model)
        assert abs(est - exact) <= 1e-10 * exact
        assert est <= fm.hnorm(f, s, include_tail=False) + 1e-8


def test_ladder_approximation_wqed():
    model = fm.FieldModel.sinh(1e4, 24)
    basis = build_basis(24, 2)
    seq = fm.make_cutoff_sequence(fm.wqed(model), [5.0, 50.0, 500.0])
    rep = ladder_approximation_check(seq, 1.0, basis)
    assert rep.passed, rep.as_dict()
    steps = rep.details["steps"]
    assert steps[0]["distance"] > steps[1]["distance"] > steps[2]["distance"]
    assert all(r["ratio"] <= 1.0 + 1e-8 for r in steps)


def test_ladder_approximation_past_grid(coarse, basis8):
    seq = fm.make_cutoff_sequence(fm.gaussian(coarse), [10.0])
    rep = ladder_approximation_check(seq, 1.0, basis8)
    assert rep.details["steps"][0]["distance"] == 0.0


@st.composite
def amplitudes(draw, size):
    re = draw(st.lists(st.floats(-3, 3), min_size=size, max_size=size))
    im = draw(st.lists(st.floats(-3, 3), min_size=size, max_size=size))
    return np.array(re) + 1j * np.array(im)


SMALL = fm.FieldModel.uniform(2.0, 4)
SMALL_BASIS = build_basis(4, 3)


@given(amp=amplitudes(4), seed=st.integers(0, 2 ** 31))
def test_exact_adjointness(amp, seed):
    f = fm.FormFactor(amp, SMALL, label="random")
    pair = build_ladder(f, SMALL_BASIS)
    rng = np.random.default_rng(seed)
    phi = random_vector(SMALL_BASIS, rng).coefficients
    psi = random_vector(SMALL_BASIS, rng).coefficients
    lhs = np.vdot(phi, pair.annihilate @ psi)
    rhs = np.vdot(pair.create @ phi, psi)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, np.abs(amp).max())


@given(amp=amplitudes(4))
def test_sector_shift(amp):
    pair = build_ladder(fm.FormFactor(amp, SMALL, label="random"), SMALL_BASIS)
    N = SMALL_BASIS.particle_numbers
    A = pair.annihilate.entries.tocoo()
    assert np.all(N[A.row] == N[A.col] - 1)
    C = pair.create.entries.tocoo()
    assert np.all(N[C.row] == N[C.col] + 1) and np.all(N[C.row] <= SMALL_BASIS.n_max)


@given(a=amplitudes(4), b=amplitudes(4),
       alpha=st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       beta=st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_antilinear_in_the_label(a, b, alpha, beta):
    f = fm.FormFactor(a, SMALL, label="f")
    g = fm.FormFactor(b, SMALL, label="g")
    mix = fm.FormFactor(alpha * a + beta * b, SMALL, label="mix")
    lhs = annihilator_matrix(mix, SMALL_BASIS)
    rhs = np.conj(alpha) * annihilator_matrix(f, SMALL_BASIS) \
        + np.conj(beta) * annihilator_matrix(g, SMALL_BASIS)
    assert abs(lhs - rhs).max() <= 1e-12 * (1 + abs(alpha) + abs(beta)) * 20


def test_adjoint_pair_check_detects_corruption(basis8, coarse):
    f = fm.wqed(coarse, x0=0.5)
    good = build_ladder(f, basis8)
    assert adjoint_pair_check(good).passed
    bad = LadderPair(good.annihilate,
                     BlockOperator(good.create.entries * np.exp(0.1j), basis8), f)
    assert not adjoint_pair_check(bad).passed


def test_mismatched_grid_is_rejected(basis8):
    with pytest.raises(ValueError):
        build_ladder(fm.flat(fm.FieldModel.uniform(1.0, 3)), basis8)
