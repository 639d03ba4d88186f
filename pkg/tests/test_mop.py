import gmpy2
import pytest
from gmpy2 import mpc, mpfr
from hypothesis import given
from hypothesis import strategies as st

from nikishin.errors import ImbalanceBoundExceeded, IndexOutOfClass
from nikishin.measures import arcsine, nikishin_components
from nikishin.mop import (
    MomentCache,
    MultiIndex,
    classify,
    increment,
    orthogonality_residual,
    solve_monic_mop,
    staircase_path,
    tau_permutation,
)

# Q_n at z = 5 and z = 3i for the arcsine pair on [-1, 1], [2, 3].  The
# oracle solves the moment system in mpmath at 90 digits, using 300-node
# Gauss-Chebyshev moments and the closed form of the arcsine transform on
# [2, 3], and keeps 50 digits.
FROZEN_Q = {
    (2, 1): ("118.42850064028562504715285924235896438446524674029",
             ("1.0940507721341453898795035590852995243910267741741", "-29.25")),
    (3, 3): ("13740.109703578216607917103201848750073104700617779",
             ("-852.34326675328429864682093004831080701221741485111",
              "-91.851991758971506820636794798370313148487102851488")),
    (1, 2): ("115.92476694687731716161406479316818357761187163571",
             ("2.0877314564547204817798180764168093354475768145008",
              "-29.214650104517358010172263679538342776477152895082")),
}


def rel(a, b):
    return abs(a - b) / abs(b)


class TestMultiIndex:
    def test_basic_properties(self):
        n = MultiIndex((3, 1, 2))
        assert (n.size, n.m, n[1], n[3]) == (6, 3, 3, 2)
        assert n.imbalance == 3
        assert MultiIndex((2, 2, 2)).imbalance == 0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            MultiIndex((1, -1))

    @pytest.mark.parametrize("n,tau", [((2, 2, 1), (1, 2, 3)), ((1, 2), (2, 1)),
                                       ((1, 3, 3), (2, 3, 1)), ((0, 0), (1, 2))])
    def test_tau(self, n, tau):
        assert tau_permutation(n) == tau

    @given(st.lists(st.integers(0, 6), min_size=1, max_size=5))
    def test_tau_is_a_sorting_permutation(self, entries):
        tau = tau_permutation(entries)
        assert sorted(tau) == list(range(1, len(entries) + 1))
        vals = [entries[t - 1] for t in tau]
        assert vals == sorted(vals, reverse=True)

    def test_increment_keeps_or_changes_tau(self):
        nl, same = increment((2, 1), 2)
        assert nl == MultiIndex((2, 2)) and same
        nl, same = increment((2, 2), 2)
        assert nl == MultiIndex((2, 3)) and not same
        with pytest.raises(ValueError):
            increment((1, 1), 3)


class TestClassify:
    def test_star_class(self):
        assert classify((1, 2, 3)).in_star_formal is False
        assert classify((1, 2, 3)).in_star_effective is True
        assert classify((1, 2, 3, 0)).in_star_effective is False
        assert classify((3, 1, 2, 0)).in_star_formal is True

    def test_circledast(self):
        assert classify((2, 3, 1)).in_circledast
        assert not classify((1, 3)).in_circledast

    def test_out_of_class_rejected_for_m4(self):
        gens = [arcsine(2 * j, 2 * j + 1) for j in range(4)]
        system = nikishin_components(gens)
        with pytest.raises(IndexOutOfClass):
            solve_monic_mop(system, (1, 2, 3, 0))


class TestPaths:
    def test_staircase(self):
        path = staircase_path(2, 5)
        assert [n.entries for n in path.indices] == [(1, 0), (1, 1), (2, 1), (2, 2), (3, 2)]
        assert path.steps == [1, 2, 1, 2, 1]
        assert path.max_imbalance == 1

    def test_full_increment(self):
        path = staircase_path(3, 3, full_increment=True, seed=(1, 0, 0))
        assert path.indices[-1] == MultiIndex((4, 3, 3))
        assert path.steps == [None] * 3

    def test_pairs_include_seed(self):
        pairs = list(staircase_path(2, 2).pairs())
        assert pairs[0] == (MultiIndex((0, 0)), MultiIndex((1, 0)), 1)

    def test_imbalance_bound(self):
        with pytest.raises(ImbalanceBoundExceeded):
            staircase_path(2, 6, l_sequence=[1], imbalance_bound=3)

    def test_bad_length(self):
        with pytest.raises(ValueError):
            staircase_path(2, 0)


class TestMonicMop:
    @pytest.mark.parametrize("n", [1, 4, 9])
    def test_single_measure_is_chebyshev(self, n):
        system = nikishin_components([arcsine(-1, 1)])
        q = solve_monic_mop(system, (n,))
        pi = gmpy2.const_pi()
        expected = sorted(gmpy2.cos((2 * j - 1) * pi / (2 * n)) for j in range(1, n + 1))
        got = q.real_zeros()
        assert len(got) == n
        assert max(abs(a - b) for a, b in zip(got, expected)) < mpfr(10) ** -50

    @pytest.mark.parametrize("n", list(FROZEN_Q))
    def test_frozen_values(self, system2, n):
        at5, (re, im) = FROZEN_Q[n]
        q = solve_monic_mop(system2, n)
        assert rel(q(5), mpfr(at5)) < mpfr(10) ** -45
        assert rel(q(mpc(0, 3)), mpc(mpfr(re), mpfr(im))) < mpfr(10) ** -45

    def test_zeros_real_simple_interior(self, system3):
        q = solve_monic_mop(system3, (3, 2, 2))
        zs = q.real_zeros()
        assert len(zs) == 7
        assert all(-1 < z < 1 for z in zs)
        assert all(b - a > 1e-6 for a, b in zip(zs, zs[1:]))

    def test_orthogonality_residual(self, system3):
        q = solve_monic_mop(system3, (2, 2, 1))
        assert orthogonality_residual(system3, (2, 2, 1), q) < mpfr(10) ** -40

    def test_diagnostics_and_cache(self, system2):
        cache = MomentCache()
        res = solve_monic_mop(system2, (2, 2), cache=cache, diagnostics=True)
        assert res.poly.degree == 4 and res.residual < mpfr(10) ** -40
        again = solve_monic_mop(system2, (2, 2), cache=cache)
        assert again(5) == res.poly(5)

    def test_zero_index(self, system2):
        assert solve_monic_mop(system2, (0, 0))(7) == 1

    def test_wrong_length(self, system2):
        with pytest.raises(ValueError):
            solve_monic_mop(system2, (1, 1, 1))


def test_mass_point_beyond_basis_conditioning():
    # A mass at 1.5 widens the Chebyshev basis interval, so Q_n is small on
    # [-1, 1] against O(1) coefficients; the residual check must still settle.
    system = nikishin_components([arcsine(-1, 1, masses=[("1.5", "1/2")])])
    q = solve_monic_mop(system, (30,))
    assert orthogonality_residual(system, (30,), q) < mpfr(2) ** -120
    assert min(abs(z - mpfr("1.5")) for z in q.zeros()) < mpfr("1e-20")
