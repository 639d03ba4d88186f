import random

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpc, mpfr
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.special import roots_jacobi

from nikishin.errors import (
    ConfigError,
    EvaluationOnSupportError,
    OverlappingHullsError,
)
from nikishin.measures import (
    Generator,
    Interval,
    WeightSpec,
    arcsine,
    inverse_measure,
    inverse_ratio_residual,
    inverse_roundtrip_residual,
    nikishin_components,
    point_mass,
    product_measure,
    product_splitting_residual,
)
from nikishin.precision import parse_real
from nikishin.quadrature import gauss_jacobi

# Values from an independent mpmath route (tanh-sinh on the Chebyshev
# substitution x = cos(theta), closed-form arcsine transforms), 40 digits.
S3_HAT_AT_10 = "0.02401888343723914540322679335502896113556"
MASS_S1_S2 = "-0.4506431496802236493679695154542087099311"


def rel(a, b):
    return abs(a - b) / abs(b)


class TestGaussJacobi:
    @pytest.mark.parametrize("alpha,beta", [("0", "0"), ("0.3", "-0.4"), ("-0.5", "-0.5"),
                                            ("1.5", "0.25")])
    def test_matches_scipy_in_double(self, alpha, beta):
        x, w = gauss_jacobi(12, alpha, beta)
        xs, ws = roots_jacobi(12, float(alpha), float(beta))
        np.testing.assert_allclose(sorted(float(v) for v in x), xs, rtol=0, atol=1e-13)
        np.testing.assert_allclose(sorted(float(v) for v in w), sorted(ws), rtol=1e-12)

    def test_exact_for_polynomials_at_full_precision(self):
        # int_{-1}^{1} u^10 du = 2/11
        x, w = gauss_jacobi(8)
        assert rel(sum(wi * xi ** 10 for xi, wi in zip(x, w)), mpfr(2) / 11) < mpfr(2) ** -200

    def test_rejects_bad_exponents(self):
        with pytest.raises(ValueError):
            gauss_jacobi(4, "-1", "0")


class TestCauchyTransform:
    def test_arcsine_at_two(self):
        mu = arcsine(-1, 1)
        assert rel(mu.cauchy(2), 1 / gmpy2.sqrt(mpfr(3))) < mpfr(10) ** -60

    def test_point_mass(self):
        assert point_mass(5).cauchy(2) == mpfr(-1) / 3

    def test_large_z_asymptotics(self):
        mu = arcsine(-1, 1, masses=[("1.5", "0.1")])
        z = mpfr(10) ** 8
        assert rel(z * mu.cauchy(z), mu.mass) < mpfr(10) ** -7

    def test_conjugate_symmetry(self):
        mu = arcsine(-1, 1)
        z = mpc(mpfr("0.3"), mpfr("0.7"))
        assert abs(mu.cauchy(z.conjugate()) - mu.cauchy(z).conjugate()) < mpfr(10) ** -60

    def test_cauchy_riemann(self, system2):
        f = system2.components[1].cauchy
        z, h = mpc(mpfr("1.3"), mpfr("0.8")), mpfr(10) ** -20
        dx = (f(z + h) - f(z - h)) / (2 * h)
        dy = (f(z + mpc(0, 1) * h) - f(z - mpc(0, 1) * h)) / (2 * h)
        assert abs(dx + mpc(0, 1) * dy) < mpfr(10) ** -30

    def test_on_support_raises(self):
        with pytest.raises(EvaluationOnSupportError):
            arcsine(-1, 1).cauchy(mpfr("0.5"))

    @settings(max_examples=25, deadline=None,
              suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(st.floats(-4, 4), st.floats(0.05, 4))
    def test_arcsine_closed_form(self, x, y):
        z = mpc(x, y)
        exact = 1 / (gmpy2.sqrt(z - 1) * gmpy2.sqrt(z + 1))
        assert rel(arcsine(-1, 1).cauchy(z), exact) < mpfr(10) ** -50


class TestIntegrate:
    def test_mass_additivity(self):
        mu = Generator(Interval(-1, 1), WeightSpec("-0.5", "-0.5", ("1/pi",)),
                       masses=[("1.5", "0.1")])
        assert rel(mu.integrate(lambda x: x * 0 + 1), mpfr("1.1")) < mpfr(10) ** -60

    def test_arcsine_moments(self):
        mu = arcsine(-1, 1)
        assert abs(mu.integrate(lambda x: x)) < mpfr(10) ** -60
        assert rel(mu.integrate(lambda x: x * x), mpfr("0.5")) < mpfr(10) ** -60

    def test_jacobi_weight_with_analytic_factor(self):
        # int_0^1 (1-x)^{1/2} e^x dx by the substitution-free Gauss-Legendre oracle
        mu = Generator(Interval(0, 1), WeightSpec("1/2", "0", ("1",), ("0", "1")))
        xs, ws = roots_jacobi(60, 0.5, 0.0)
        oracle = 0.5 ** 1.5 * sum(w * np.exp((x + 1) / 2) for x, w in zip(xs, ws))
        assert abs(float(mu.mass) - oracle) < 1e-13


class TestWeightValidation:
    def test_exponent_bound(self):
        with pytest.raises(ConfigError):
            WeightSpec("-1", "0")

    def test_nonpositive_factor(self):
        with pytest.raises(ConfigError):
            Generator(Interval(-1, 1), WeightSpec("0", "0", ("0", "1")))

    def test_mass_inside_interval(self):
        with pytest.raises(ConfigError):
            Generator(Interval(-1, 1), masses=[("0.5", "1")])


class TestProducts:
    def test_fubini_swap(self, system2):
        s1, s2 = system2.generators
        nested = product_measure(s1, s2).mass
        swapped = -s2.integrate(lambda t: s1.cauchy(t))
        assert rel(nested, swapped) < mpfr(10) ** -20
        assert rel(nested, mpfr(MASS_S1_S2)) < mpfr(10) ** -35

    def test_point_mass_product(self):
        s1 = arcsine(-1, 1)
        prod = product_measure(s1, point_mass(3))
        direct = s1.integrate(lambda x: 1 / (x - 3))
        assert rel(prod.mass, direct) < mpfr(10) ** -60

    def test_overlap_rejected(self):
        with pytest.raises(OverlappingHullsError):
            product_measure(arcsine(-1, 1), arcsine(0, 2))

    def test_components(self, system3):
        s1 = system3.components[0]
        assert s1.hull == system3.generators[0].hull
        assert s1.cauchy(10) == system3.generators[0].cauchy(10)
        assert rel(system3.components[2].cauchy(10), mpfr(S3_HAT_AT_10)) < mpfr(10) ** -35

    def test_m1_unchanged(self):
        g = arcsine(-1, 1)
        (s1,) = nikishin_components([g]).components
        assert s1.hull == g.hull and s1.mass == g.mass


class TestInverseMeasure:
    def test_arcsine_inverse(self):
        (l0, l1), tau = inverse_measure(arcsine(-1, 1))
        assert abs(l0) < mpfr(10) ** -50 and rel(l1, mpfr(1)) < mpfr(10) ** -50
        assert rel(tau.cauchy(2), -(2 - gmpy2.sqrt(mpfr(3)))) < mpfr(10) ** -50
        # tau = -(1/pi) sqrt(1-x^2) dx: second moment -1/8
        assert rel(tau.integrate(lambda x: x * x), mpfr(-1) / 8) < mpfr(10) ** -50
        assert rel(tau.mass, mpfr(-1) / 2) < mpfr(10) ** -50

    def test_roundtrip(self, system2):
        rnd = random.Random(7)
        pts = [complex(rnd.uniform(-3, 3), rnd.choice([-1, 1]) * rnd.uniform(0.2, 2))
               for _ in range(20)]
        assert inverse_roundtrip_residual(system2.components[1], pts) < mpfr(10) ** -50

    def test_contour_independent_of_ellipse(self):
        _, tau = inverse_measure(arcsine(-1, 1))
        vals = []
        for i in (2, 5):
            rule = tau.rule((i, 512))
            vals.append(np.sum(rule.weights * rule.nodes ** 4).real)
        assert abs(vals[0] - vals[1]) < mpfr(10) ** -40


class TestIdentities:
    def test_product_splitting_and_inverse_ratio(self, system3):
        s2, s3 = system3.generators[1:]
        rnd = random.Random(3)
        pts = [complex(rnd.uniform(0, 7), rnd.choice([-1, 1]) * rnd.uniform(0.2, 2))
               for _ in range(10)]
        assert product_splitting_residual(s2, s3, pts) < mpfr(10) ** -40
        assert inverse_ratio_residual(s2, s3, pts) < mpfr(10) ** -40


def test_parse_real_expressions():
    assert parse_real("-1/2") == mpfr("-0.5")
    assert rel(parse_real("1/pi"), 1 / gmpy2.const_pi()) < mpfr(10) ** -60
