import numpy as np
import pytest
from gmpy2 import mpfr

from nikishin.errors import BranchAmbiguity, FixedPointNonConvergence, WeightNonpositive
from nikishin.limits import (
    SurfaceSpec,
    branches,
    conformal_derivative_at_infinity,
    conformal_map,
    constants_from_omega,
    full_increment_limit,
    g0,
    growth_constants,
    solve_bvp,
    szego_function,
    tau_inverse,
)

SPEC2 = SurfaceSpec([("-1", "1"), ("2", "3")])
SPEC3 = SurfaceSpec([("-1", "1"), ("2", "3"), ("4", "5")])

# Regression values of G_0(5) from 128-bit solves; the double-precision
# solver must reproduce them independently of the multiprecision path.
G0_AT_5 = {1: "4.948123550557292794678274895338231787275",
           2: "4.84098255025177924"}


def _points(count=50, seed=11):
    rng = np.random.default_rng(seed)
    return rng.uniform(-4, 4, count) + 1j * rng.choice([-1, 1], count) * rng.uniform(0.05, 3, count)


@pytest.fixture(scope="module")
def sol2():
    return {l: solve_bvp(SPEC2, l, (1, 2)) for l in (1, 2)}


class TestConformalMap:
    def test_joukowski(self):
        z = _points()
        expected = z + np.sqrt(z - 1) * np.sqrt(z + 1)
        np.testing.assert_allclose(conformal_map((-1, 1), z), expected, rtol=1e-14)
        assert np.all(np.abs(conformal_map((-1, 1), z)) > 1)

    def test_shifted_interval_and_derivative(self):
        big = 1e7
        phi = conformal_map((2, 3), big)
        # phi(z) = 4z/(b-a) - 2(a+b)/(b-a) + O(1/z)
        assert abs((phi + 10) / big - conformal_derivative_at_infinity((2, 3))) < 1e-12
        assert conformal_derivative_at_infinity((2, 3)) == 4.0

    def test_cut_raises(self):
        with pytest.raises(BranchAmbiguity):
            conformal_map((-1, 1), 0.5)

    def test_multiprecision(self):
        val = conformal_map(("-1", "1"), 2, bits=200)
        assert abs(val - (2 + mpfr(3, 200) ** mpfr("0.5", 200))) < mpfr(2, 200) ** -190


class TestSzego:
    def test_constant_weight(self):
        s = szego_function((-1, 1), lambda x: 4 + 0 * x)
        assert abs(s.at_infinity - 2) < 1e-14
        assert abs(s(3 + 1j) - 2) < 1e-14

    def test_boundary_modulus(self):
        w = lambda x: np.exp(x) * (2 + np.cos(3 * x))
        s = szego_function((0, 2), w)
        assert s.verify(w) < 1e-13

    def test_analytic_weight_closed_form(self):
        # The arcsine mean of log|x - 3| is log(phi(3)/2), and S(inf)^2 is the
        # geometric mean of the weight under the arcsine measure.
        w = lambda x: (x - 3) ** 2
        s = szego_function((-1, 1), w)
        phi3 = 3 + np.sqrt(8)
        assert abs(s.at_infinity ** 2 - (phi3 / 2) ** 2) < 1e-12

    def test_nonpositive_weight(self):
        with pytest.raises(WeightNonpositive):
            szego_function((-1, 1), lambda x: x)

    def test_cut_raises(self):
        s = szego_function((-1, 1), lambda x: 1 + 0 * x)
        with pytest.raises(BranchAmbiguity):
            s(0.0)


class TestBoundaryValueProblem:
    def test_single_interval_is_conformal(self):
        sol = solve_bvp(SurfaceSpec([(-1, 1)]), 1, (1,))
        z = _points()
        expected = (z + np.sqrt(z - 1) * np.sqrt(z + 1)) / 2
        np.testing.assert_allclose(g0(sol, z), expected, rtol=0, atol=1e-12)
        assert sol.kappa[0] == pytest.approx(2.0, abs=1e-14)

    @pytest.mark.parametrize("l", [1, 2])
    def test_residuals_m2(self, sol2, l):
        assert max(sol2[l].boundary_residuals()) < 1e-10

    def test_residuals_m3(self):
        for l in (1, 2, 3):
            assert max(solve_bvp(SPEC3, l, (1, 2, 3)).boundary_residuals()) < 1e-10

    def test_uniqueness_probe(self, sol2):
        z = _points(20)
        other = solve_bvp(SPEC2, 1, (1, 2), init="perturbed")
        assert np.max(np.abs(g0(other, z) - g0(sol2[1], z))) < 1e-8

    @pytest.mark.parametrize("l", [1, 2])
    def test_branch_product(self, sol2, l):
        psi = branches(sol2[l], _points())
        assert np.max(np.abs(np.prod(psi, axis=0) - 1)) < 1e-12

    def test_growth_constants(self, sol2):
        lead, pole = growth_constants(sol2[1])
        assert lead.real > 0 and abs(lead.imag) < 1e-12
        assert abs(pole) > 0

    @pytest.mark.parametrize("l", [1, 2])
    def test_regression_values(self, sol2, l):
        assert abs(g0(sol2[l], 5) - float(G0_AT_5[l])) < 5e-13

    def test_multiprecision_matches_double(self, sol2):
        sol = solve_bvp(SPEC2, 1, (1, 2), bits=96, grid=256)
        assert max(sol.boundary_residuals()) < 1e-25
        assert abs(complex(g0(sol, 5)) - complex(g0(sol2[1], 5))) < 1e-13
        assert abs(g0(sol, 5).real - mpfr(G0_AT_5[1], 96)) < mpfr(10, 96) ** -25

    def test_iteration_cap(self):
        with pytest.raises(FixedPointNonConvergence):
            solve_bvp(SPEC3, 2, (1, 2, 3), max_iter=1, tol=1e-30)

    def test_bad_component(self):
        with pytest.raises(ValueError):
            solve_bvp(SPEC2, 3, (1, 2))

    def test_full_increment_product(self, sol2):
        z = np.array([5 + 0j, 3j])
        np.testing.assert_allclose(full_increment_limit([sol2[1], sol2[2]], z),
                                   g0(sol2[1], z) * g0(sol2[2], z))


def test_constants_from_omega():
    omega = [1.7, 0.4, 2.5]
    c = constants_from_omega(omega)
    ext = np.r_[1.0, c, 1.0]
    np.testing.assert_allclose(ext[1:-1] ** 2 / (ext[:-2] * ext[2:]), omega, rtol=1e-14)
    mp = constants_from_omega([mpfr(v) for v in ("1.7", "0.4", "2.5")], bits=128)
    np.testing.assert_allclose([float(v) for v in mp], c, rtol=1e-14)


def test_tau_inverse():
    assert tau_inverse((2, 3, 1), 1) == 3
    with pytest.raises(ValueError):
        tau_inverse((1, 1), 1)


def test_surface_spec_validation():
    with pytest.raises(ValueError):
        SurfaceSpec([(0, 2), (1, 3)])
    with pytest.raises(ValueError):
        SurfaceSpec([(1, 0)])
