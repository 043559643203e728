import json
from itertools import product
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gsbkit import field_model as fm
from gsbkit.fock_space import (BasisTooLarge, BlockOperator, FockVector, build_basis,
                               dgamma, energies, number_operator, numb_inequality_check,
                               random_vector, scale_norm)


@pytest.mark.parametrize("G,n_max,dim", [(2, 2, 6), (8, 3, 165), (1, 5, 6)])
def test_dimensions(G, n_max, dim):
    assert build_basis(G, n_max).dim == dim


def test_dimension_matches_brute_force_enumeration():
    for G, n_max in [(3, 3), (4, 2), (5, 1)]:
        states = [s for s in product(range(n_max + 1), repeat=G) if sum(s) <= n_max]
        assert build_basis(G, n_max).dim == len(states)


def test_order_is_sector_major_then_descending_lexicographic():
    b = build_basis(2, 2)
    assert b.states.tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]


def test_basis_too_large():
    with pytest.raises(BasisTooLarge):
        build_basis(40, 6, max_dim=10_000)
    with pytest.raises(ValueError):
        build_basis(0, 2)


@given(G=st.integers(1, 6), n_max=st.integers(0, 4), data=st.data())
def test_rank_unrank_round_trip(G, n_max, data):
    b = build_basis(G, n_max)
    i = data.draw(st.integers(0, b.dim - 1))
    assert b.index_of(b.unrank(i)) == i
    assert np.array_equal(b.rank(b.states), np.arange(b.dim))


def test_sector_of_unrank_is_nondecreasing(basis8):
    assert np.all(np.diff(basis8.particle_numbers) >= 0)
    for n in range(basis8.n_max + 1):
        sl = basis8.sector_slice(n)
        assert np.all(basis8.particle_numbers[sl] == n)
        assert sl.stop - sl.start == comb(8 + n - 1, n)


def test_rank_rejects_bad_occupations():
    b = build_basis(3, 2)
    with pytest.raises(ValueError):
        b.rank([[1, 1, 1]])
    with pytest.raises(ValueError):
        b.rank([[1, 1]])
    with pytest.raises(ValueError):
        b.rank([[-1, 1, 0]])


def test_table_is_json_ready(basis8):
    t = json.loads(json.dumps(basis8.table()))
    assert t["dimension"] == 165 and len(t["sectors"]) == 4


def test_dgamma_examples():
    kg = fm.klein_gordon()
    model = fm.FieldModel([-1.0, 2.0], [1.0, 1.0], kg)
    b = build_basis(2, 3)
    E = energies(model, b)
    w = model.omega
    assert E[0] == 0.0
    assert E[b.index_of([1, 0])] == w[0] and E[b.index_of([0, 1])] == w[1]
    assert np.isclose(E[b.index_of([2, 1])], 2 * w[0] + w[1], rtol=0, atol=1e-15)
    D = dgamma(model, b)
    assert D.hermitian_flag and D.hermiticity_defect() == 0.0


def test_dgamma_arithmetic_example():
    # dispersion with omega = (1.0, 2.5) on two modes
    disp = fm.Dispersion("table", 1.0, 1.0, lambda k: np.where(k < 0, 1.0, 2.5))
    model = fm.FieldModel([-1.0, 1.0], [1.0, 1.0], disp)
    b = build_basis(2, 3)
    assert energies(model, b)[b.index_of([2, 1])] == 4.5


def test_number_operator(basis8):
    N = number_operator(basis8).entries.diagonal().real
    assert N[0] == 0
    assert sorted(set(N.astype(int))) == list(range(basis8.n_max + 1))
    rng = np.random.default_rng(1)
    psi = random_vector(basis8, rng)
    for n in range(basis8.n_max + 1):
        chunk = psi.sector(n)
        Npsi = (number_operator(basis8) @ psi.coefficients)[basis8.sector_slice(n)]
        assert np.allclose(Npsi, n * chunk, atol=0)


def test_dgamma_and_number_commute(coarse, basis8):
    D = dgamma(coarse, basis8).entries
    N = number_operator(basis8).entries
    assert (D @ N - N @ D).count_nonzero() == 0


def test_block_operator_shapes_and_adjoint(basis8):
    M = BlockOperator(np.eye(basis8.dim) * (1 + 2j), basis8)
    assert M.shape == (165, 165)
    assert np.allclose(M.adjoint().toarray(), np.conj(M.toarray()).T)
    with pytest.raises(ValueError):
        BlockOperator(np.eye(3), basis8)


def test_scale_norm_examples(coarse, basis8):
    vac = FockVector.vacuum(basis8)
    for s in (0.0, 1.0, 2.0, 3.7):
        assert scale_norm(vac, s, coarse) == 1.0
    psi = random_vector(basis8, np.random.default_rng(2))
    assert np.isclose(scale_norm(psi, 0.0, coarse), psi.norm(), rtol=1e-14)
    E = energies(coarse, basis8)
    expect = np.vdot(psi.coefficients, (E + 1) * psi.coefficients).real
    assert abs(scale_norm(psi, 1.0, coarse) ** 2 - expect) <= 1e-12 * expect


@given(seed=st.integers(0, 2 ** 31), s=st.floats(0, 3), ds=st.floats(0, 2))
def test_scale_norm_monotone_in_s(seed, s, ds):
    model = fm.FieldModel.uniform(3.0, 4)
    b = build_basis(4, 3)
    psi = random_vector(b, np.random.default_rng(seed))
    assert scale_norm(psi, s + ds, model) >= scale_norm(psi, s, model) * (1 - 1e-14)


def test_number_inequality_on_random_vectors(coarse, basis8):
    rng = np.random.default_rng(0)
    for s in (1.0, 2.0):
        for _ in range(1000):
            assert numb_inequality_check(random_vector(basis8, rng), s, coarse).passed


def test_number_inequality_saturates_on_a_mass_mode():
    model = fm.FieldModel([0.0], [1.0], fm.klein_gordon())
    b = build_basis(1, 4)
    psi = random_vector(b, np.random.default_rng(3))
    rep = numb_inequality_check(psi, 2.0, model)
    assert rep.passed and abs(rep.details["margin"]) < 1e-14


def test_number_inequality_vacuum():
    b = build_basis(3, 2)
    rep = numb_inequality_check(FockVector.vacuum(b), 1.0, fm.FieldModel.uniform(1.0, 3))
    assert rep.details["lhs"] == 0.0 and rep.details["rhs"] == 0.0


@given(occ=st.lists(st.integers(0, 2), min_size=4, max_size=4), s=st.floats(0, 3))
def test_number_inequality_per_basis_vector(occ, s):
    model = fm.FieldModel.uniform(2.0, 4, fm.klein_gordon(0.7))
    b = build_basis(4, 8)
    c = np.zeros(b.dim)
    c[b.index_of(occ)] = 1.0
    assert numb_inequality_check(FockVector(b, c), s, model).passed


def test_random_vector_sector_support(basis8):
    psi = random_vector(basis8, np.random.default_rng(0), sectors=[1, 2])
    outside = ~basis8.sector_mask([1, 2])
    assert np.all(psi.coefficients[outside] == 0)
    assert np.isclose(psi.norm(), 1.0)
