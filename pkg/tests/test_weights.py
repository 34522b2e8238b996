import numpy as np
import pytest

from splinesurvey import (
    Population,
    SplineSpec,
    basis_matrix,
    bspline_weights,
    draw_srswor,
    fit_coefficients,
    greg_weights,
    ht_weights,
    normalize_covariate,
    post_weights,
    weighted_total,
)
from splinesurvey.weights import SplineSystem


def _population(N, seed=0):
    rng = np.random.default_rng(seed)
    z = rng.lognormal(7.0, 0.4, N)
    y = z + 5.0 * np.sqrt(z) * rng.standard_normal(N)
    return Population(ids=tuple(map(str, range(N))), z=z, variables={"y": y})


class TestHtWeights:
    def test_reciprocal(self):
        d = draw_srswor(_population(10), 5, 0)
        assert np.allclose(ht_weights(d).weights, 2.0)

    def test_census(self):
        d = draw_srswor(_population(6), 6, 0)
        assert np.allclose(ht_weights(d).weights, 1.0)

    def test_srswor_rate(self):
        d = draw_srswor(_population(10), 2, 0)
        assert np.allclose(ht_weights(d).weights, 5.0)


class TestWeightedTotal:
    def test_ht_total(self):
        d = draw_srswor(_population(6), 3, 1)
        ws = ht_weights(d)
        ws.weights[:] = 2.0
        assert weighted_total(ws, [1.0, 2.0, 3.0]) == pytest.approx(12.0)

    def test_zero_values(self):
        d = draw_srswor(_population(6), 3, 1)
        assert weighted_total(ht_weights(d), np.zeros(3)) == 0.0

    def test_length_mismatch(self):
        d = draw_srswor(_population(6), 3, 1)
        with pytest.raises(ValueError, match="mismatch"):
            weighted_total(ht_weights(d), [1.0, 2.0])


class TestBsplineWeights:
    @pytest.mark.parametrize("m,K", [(1, 2), (2, 2), (2, 4), (3, 3)])
    def test_calibration_identities(self, m, K):
        pop = _population(800, seed=3)
        d = draw_srswor(pop, 150, 11)
        spec = SplineSpec(order=m, interior_knots=K, lam=0.0)
        ws = bspline_weights(d, spec)
        system = SplineSystem(d, spec)
        pop_totals = system.basis_pop_total
        got = system.basis_sample.T @ ws.weights
        assert np.all(np.abs(got - pop_totals) <= 1e-8 * (1 + np.abs(pop_totals)))
        assert ws.total_mass == pytest.approx(pop.size, rel=1e-8)
        if m >= 2:
            # z itself lies in the spline span only for order >= 2
            z_total = float(np.sum(pop.z))
            assert weighted_total(ws, pop.z[d.indices]) == pytest.approx(
                z_total, rel=1e-8)

    def test_projection_form_equivalence(self):
        d = draw_srswor(_population(500, seed=5), 80, 2)
        spec = SplineSpec(order=2, interior_knots=3, lam=0.0)
        general = bspline_weights(d, spec).weights
        projection = bspline_weights(d, spec, form="projection").weights
        scale = np.max(np.abs(general))
        assert np.max(np.abs(general - projection)) <= 1e-8 * scale

    def test_poststratification_identity(self):
        # m=1, lambda=0 weights are N_h / n_h within each knot span
        pop = _population(400, seed=7)
        d = draw_srswor(pop, 60, 4)
        spec = SplineSpec(order=1, interior_knots=1, lam=0.0)
        system = SplineSystem(d, spec)
        ws = bspline_weights(d, spec)
        z01, _ = normalize_covariate(pop.z)
        cut = system.knots.interior[0]
        for span in (z01 < cut, z01 >= cut):
            Nh = int(span.sum())
            in_span = span[d.indices]
            nh = int(in_span.sum())
            assert np.allclose(ws.weights[in_span], Nh / nh)

    def test_penalized_weighted_total_matches_difference_form(self):
        pop = _population(600, seed=9)
        d = draw_srswor(pop, 100, 6)
        spec = SplineSpec(order=3, interior_knots=4, lam=10.0, penalty_order=1)
        ws = bspline_weights(d, spec)
        system = SplineSystem(d, spec)
        y_s = d.sample_values("y")
        theta = system.coefficients(y_s)
        ht_gap = system.basis_sample.T @ (1.0 / d.pi) - system.basis_pop_total
        diff_form = float(np.sum(y_s / d.pi)) - float(ht_gap @ theta)
        total = weighted_total(ws, y_s)
        assert total == pytest.approx(diff_form, rel=1e-10)

    def test_singular_system_detected(self):
        # K too large for a small sample starves knot spans
        pop = _population(300, seed=1)
        d = draw_srswor(pop, 8, 3)
        spec = SplineSpec(order=3, interior_knots=6,
                          knot_rule="population_quantile", lam=0.0)
        with pytest.raises(ValueError, match="singular basis system"):
            bspline_weights(d, spec)

    def test_negative_weight_diagnostics_reported(self):
        d = draw_srswor(_population(500, seed=5), 60, 2)
        ws = bspline_weights(d, SplineSpec(order=3, interior_knots=4, lam=0.0))
        assert "negative_weight_count" in ws.diagnostics
        assert ws.diagnostics["min_weight"] <= np.min(ws.weights) + 1e-12


class TestPostWeights:
    def test_matches_bspline_order_one(self):
        pop = _population(400, seed=2)
        d = draw_srswor(pop, 50, 8)
        a = post_weights(d, 2).weights
        b = bspline_weights(d, SplineSpec(order=1, interior_knots=2, lam=0.0)).weights
        assert np.array_equal(a, b)

    def test_single_poststratum_is_ratio_to_size(self):
        pop = _population(120, seed=4)
        d = draw_srswor(pop, 30, 1)
        assert np.allclose(post_weights(d, 0).weights, 120 / 30)

    def test_hand_example_two_poststrata(self):
        # population sizes {4, 2} with sample hits {2, 1} give weights {2, 2}
        z = np.array([1.0, 2.0, 3.0, 4.0, 10.0, 11.0])
        pop = Population(ids=tuple("abcdef"), z=z, variables={"y": z})
        d = None
        for seed in range(200):
            cand = draw_srswor(pop, 3, seed)
            if (cand.indices < 4).sum() == 2 and (cand.indices >= 4).sum() == 1:
                d = cand
                break
        assert d is not None
        spec = SplineSpec(order=1, interior_knots=1,
                          knot_rule="population_quantile", lam=0.0)
        ws = bspline_weights(d, spec)
        assert np.allclose(np.sort(ws.weights), [2.0, 2.0, 2.0])


class TestGregWeights:
    def test_calibration_identities(self):
        pop = _population(500, seed=6)
        d = draw_srswor(pop, 80, 9)
        ws = greg_weights(d)
        assert ws.total_mass == pytest.approx(pop.size, rel=1e-8)
        assert weighted_total(ws, d.sample_z) == pytest.approx(pop.z.sum(), rel=1e-8)

    def test_census_gives_unit_weights(self):
        pop = _population(50, seed=6)
        d = draw_srswor(pop, 50, 0)
        assert np.allclose(greg_weights(d).weights, 1.0)

    def test_toy_hand_solve(self):
        # N=4, z = 1..4, s = {z=1, z=3}, pi = 0.5: solve the 2x2 calibration
        # system directly and compare
        z = np.array([1.0, 2.0, 3.0, 4.0])
        pop = Population(ids=tuple("abcd"), z=z, variables={"y": z})
        d = None
        for seed in range(200):
            cand = draw_srswor(pop, 2, seed)
            if np.array_equal(cand.indices, [0, 2]):
                d = cand
                break
        assert d is not None
        ws = greg_weights(d)
        A = np.array([[1.0, 1.0], [1.0, 3.0]])
        target = np.array([4.0, 10.0])
        expected = np.linalg.solve(A.T, target)
        assert np.allclose(ws.weights, expected)

    def test_constant_covariate_rejected(self):
        z = np.full(10, 5.0)
        pop = Population(ids=tuple(map(str, range(10))), z=z, variables={"y": z})
        d = draw_srswor(pop, 4, 0)
        with pytest.raises(ValueError, match="collinear"):
            greg_weights(d)


class TestFitCoefficients:
    def test_order_one_is_spanwise_ht_mean(self):
        pop = _population(300, seed=8)
        d = draw_srswor(pop, 60, 12)
        spec = SplineSpec(order=1, interior_knots=1, lam=0.0)
        theta = fit_coefficients(d, spec, d.sample_values("y"))
        system = SplineSystem(d, spec)
        for j in range(2):
            members = system.basis_sample[:, j] > 0
            w = 1.0 / d.pi[members]
            expected = np.sum(w * d.sample_values("y")[members]) / np.sum(w)
            assert theta[j] == pytest.approx(expected)

    def test_constant_reproduced(self):
        pop = _population(200, seed=8)
        d = draw_srswor(pop, 50, 2)
        spec = SplineSpec(order=3, interior_knots=3, lam=0.0)
        theta = fit_coefficients(d, spec, np.full(50, 4.25))
        fitted = SplineSystem(d, spec).basis_sample @ theta
        assert np.allclose(fitted, 4.25)

    def test_monotone_shrinkage_with_lambda(self):
        pop = _population(200, seed=8)
        d = draw_srswor(pop, 60, 2)
        y = d.sample_values("y")
        roughness = []
        for lam in (0.0, 1.0, 10.0, 100.0):
            spec = SplineSpec(order=2, interior_knots=4,
                              knot_rule="equidistant", lam=lam, penalty_order=1)
            theta = fit_coefficients(d, spec, y)
            roughness.append(float(np.sum(np.diff(theta) ** 2)))
        assert all(a >= b for a, b in zip(roughness, roughness[1:]))
