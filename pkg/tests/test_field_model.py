import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gsbkit import field_model as fm

# Independent oracle: mpmath quadrature at 30 digits of the closed-form
# integrands over the real line (values frozen here).
WQED_GROWTH_S1 = [math.pi, 2.0, 1.52069199260189269506, 1.24645048028046102679,
                  1.06555432050394030672]
GAUSSIAN_S1 = 1.52410938577390953002


def test_grids_satisfy_field_invariants():
    for model in (fm.FieldModel.uniform(4.0, 8), fm.FieldModel.sinh(1e4, 40),
                  fm.FieldModel.uniform(3.0, 6, fm.klein_gordon(0.5))):
        assert np.all(np.diff(model.points) > 0)
        assert np.all(model.weights > 0)
        assert np.all(model.omega >= model.mass_gap)
    u = fm.FieldModel.uniform(4.0, 8)
    assert math.isclose(u.weights.sum(), 2 * u.edge, rel_tol=1e-12)


def test_field_model_rejects_bad_grids():
    kg = fm.klein_gordon()
    with pytest.raises(ValueError):
        fm.FieldModel([0.0, 0.0], [1.0, 1.0], kg)
    with pytest.raises(ValueError):
        fm.FieldModel([0.0, 1.0], [1.0, -1.0], kg)
    with pytest.raises(ValueError):
        fm.klein_gordon(0.0)


def test_refined_grid_doubles_cells():
    m = fm.FieldModel.sinh(100.0, 10)
    r = m.refined(3)
    assert r.size == 30 and r.edge == m.edge


def test_flat_norm_s2_is_pi(fine):
    assert abs(fm.weighted_norm(fm.flat(fine), 2.0) - math.pi) < 1e-6


def test_flat_norm_s1_diverges(fine):
    f = fm.flat(fine)
    assert fm.weighted_norm(f, 1.0) == math.inf
    assert fm.weighted_norm(f, 0.0) == math.inf
    # the discretized measure never diverges
    assert math.isfinite(fm.weighted_norm(f, 1.0, include_tail=False))


def test_zero_form_factor_has_zero_norms(coarse):
    z = fm.zero(coarse)
    for s in (0.0, 0.5, 1.0, 2.0):
        assert fm.weighted_norm(z, s) == 0.0


def test_gaussian_norm_matches_oracle(fine):
    assert abs(fm.weighted_norm(fm.gaussian(fine), 1.0) - GAUSSIAN_S1) < 1e-9


def test_hnorm_is_root_of_weighted_norm(fine):
    f = fm.wqed(fine)
    assert math.isclose(fm.hnorm(f, 1.0) ** 2, fm.weighted_norm(f, 1.0), rel_tol=1e-14)


def test_norm_zero_equals_grid_l2(coarse):
    f = fm.gaussian(coarse, width=0.8, strength=1.3)
    plain = np.sum(np.abs(f.amplitudes) ** 2 * coarse.weights)
    assert math.isclose(fm.weighted_norm(f, 0.0, include_tail=False), plain, rel_tol=1e-12)


def test_norm_cache_is_reproducible(coarse):
    f = fm.wqed(coarse, x0=0.3)
    first = fm.weighted_norm(f, 1.0)
    again = fm.weighted_norm(fm.wqed(coarse, x0=0.3), 1.0)
    assert f.norm_cache[(1.0, True)] == first
    assert abs(first - again) <= 1e-12 * first


@given(s=st.floats(0.0, 2.0), gap=st.floats(0.0, 1.5),
       mass=st.floats(0.3, 3.0), width=st.floats(0.2, 3.0))
def test_scale_monotonicity(s, gap, mass, width):
    model = fm.FieldModel.uniform(6.0, 24, fm.klein_gordon(mass))
    f = fm.gaussian(model, width=width)
    for tail in (False, True):
        lo = fm.weighted_norm(f, s, include_tail=tail)
        hi = fm.weighted_norm(f, s + gap, include_tail=tail)
        assert hi <= mass ** (-gap) * lo * (1 + 1e-12) + 1e-300


def test_missing_tail_with_nonvanishing_edge_is_inconclusive(coarse):
    f = fm.FormFactor(np.ones(coarse.size), coarse, label="bare")
    with pytest.raises(fm.InconclusiveConvergence):
        fm.weighted_norm(f, 2.0)
    assert fm.weighted_norm(f, 2.0, include_tail=False) > 0


def test_misdeclared_form_factor_is_caught(coarse):
    f = fm.FormFactor(np.ones(coarse.size), coarse, declared_s=1.0,
                      tail=fm.TailDescriptor(0.0), label="flat-misdeclared")
    with pytest.raises(fm.MisdeclaredFormFactor):
        fm.weighted_norm(f, 2.0)


def test_tabulated_csv_round_trip(tmp_path, coarse):
    path = tmp_path / "f.csv"
    k = np.linspace(-5, 5, 101)
    vals = np.exp(-k ** 2) * (1 + 0.5j)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "re", "im"])
        for a, b in zip(k, vals):
            w.writerow([a, b.real, b.imag])
    f = fm.load_tabulated_csv(path, coarse)
    direct = np.exp(-coarse.points ** 2) * (1 + 0.5j)
    assert np.max(np.abs(f.amplitudes - direct)) < 2e-3


def test_tail_descriptor_with_explicit_amplitude(fine):
    # |f|^2 = 1 / k beyond the edge, exactly the wqed tail at large k
    f = fm.tabulated(fine, fine.points, (fine.points ** 2 + 1) ** -0.25,
                     declared_s=1.0, tail=fm.TailDescriptor(1.0, 1.0))
    ref = fm.weighted_norm(fm.wqed(fine), 1.0)
    assert abs(fm.weighted_norm(f, 1.0) - ref) < 1e-4


def test_flat_growth_bound(fine):
    cert = fm.growth_certificate(fm.flat(fine), 2.0, 64)
    assert cert.feasible and cert.r == 1.0
    bound = math.pi / np.sqrt((cert.n - 1.0) ** 2 + 1.0)
    margin = bound - cert.integrals
    # n = 1 is an equality, met up to the grid error of about 1e-7
    assert margin.min() >= -1e-6
    assert np.all(margin[1:] > 0)
    assert cert.max_residual <= 1e-6


def test_zero_growth_certificate(coarse):
    cert = fm.growth_certificate(fm.zero(coarse), 1.5, 8)
    assert cert.feasible and cert.C_f == 0.0


def test_wqed_growth_integrals_match_oracle(fine):
    cert = fm.growth_certificate(fm.wqed(fine), 1.0, 5)
    assert np.max(np.abs(cert.integrals - WQED_GROWTH_S1)) < 2e-7
    assert cert.feasible


def test_growth_rejects_out_of_range_s(coarse):
    with pytest.raises(ValueError):
        fm.growth_certificate(fm.flat(coarse), 0.5, 4)


def test_growth_violation_is_a_result(fine):
    # |f|^2 ~ |k| is outside H_-2, so I_1 already diverges
    f = fm.FormFactor(np.sqrt(np.abs(fine.points)), fine, declared_s=0.0,
                      tail=fm.TailDescriptor(-1.0), label="rising")
    cert = fm.growth_certificate(f, 2.0, 4)
    assert not cert.feasible


def test_wqed_cutoff_distances_match_tail_integral():
    # cells of width 0.1, so every cutoff falls on a cell edge
    model = fm.FieldModel.uniform(600.0, 12000)
    seq = fm.make_cutoff_sequence(fm.wqed(model), [5.0, 50.0, 500.0])
    d = seq.distances
    assert d[0] > d[1] > d[2] > 0
    exact = [2 * (math.pi / 2 - math.atan(c)) for c in seq.cutoffs]
    assert np.allclose(np.square(d), exact, rtol=1e-4)


def test_cutoff_past_grid_returns_base(coarse):
    f = fm.wqed(coarse)
    seq = fm.make_cutoff_sequence(f, [10.0])
    assert seq.generated[0] is f and seq.distances == [0.0]


def test_cutoff_members_are_normalizable(coarse):
    seq = fm.make_cutoff_sequence(fm.flat(coarse), [1.0, 2.0, 3.0])
    for fi in seq.generated:
        assert math.isfinite(fm.weighted_norm(fi, 0.0))


def test_cutoffs_must_increase(coarse):
    with pytest.raises(ValueError):
        fm.make_cutoff_sequence(fm.flat(coarse), [2.0, 1.0])


def test_flat_cutoff_distance_halves_with_doubling():
    model = fm.FieldModel.uniform(1000.0, 2000)
    seq = fm.make_cutoff_sequence(fm.flat(model), [50.0, 100.0, 200.0, 400.0], s=2.0)
    sq = np.square(seq.distances)
    exact = np.array([2 * (math.pi / 2 - math.atan(c)) for c in seq.cutoffs])
    assert np.allclose(sq, exact, rtol=1e-4)
    assert np.allclose(sq[:-1] / sq[1:], 2.0, rtol=1e-3)


def test_schedule_for_zero_form_factor(coarse):
    seq = fm.make_cutoff_sequence(fm.zero(coarse), [1.0, 2.0])
    assert fm.renormalization_schedule(seq, 0.7, 0.5) == [0.7, 0.7]


def test_schedule_for_wqed_converges(fine):
    f = fm.wqed(fine)
    seq = fm.make_cutoff_sequence(f, [5.0, 10.0, 20.0, 40.0])
    lam, wt = 0.4, 1.2
    energies = fm.renormalization_schedule(seq, wt, lam)
    limit = wt + lam ** 2 * fm.weighted_norm(f, 1.0, include_tail=False)
    gaps = [abs(e - limit) for e in energies]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] == 0.0
    assert seq.energies == energies


def test_schedule_for_flat_diverges_with_cutoff_norm():
    model = fm.FieldModel.sinh(1e4, 200)
    seq = fm.make_cutoff_sequence(fm.flat(model), [10.0, 100.0, 1000.0, 9999.0])
    energies = fm.renormalization_schedule(seq, 1.0, 1.0)
    norms = [fm.weighted_norm(fi, 1.0, include_tail=False) for fi in seq.generated]
    assert np.allclose(np.array(energies) - 1.0, norms, rtol=1e-14)
    # ||f^i||_-1^2 grows like 2 log(2 Lambda)
    assert all(b > a + 4.0 for a, b in zip(energies, energies[1:]))
    assert abs(norms[-1] - 2 * math.asinh(9999.0)) < 0.01
