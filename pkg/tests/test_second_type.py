import gmpy2
import pytest
from gmpy2 import mpc, mpfr

from nikishin.errors import IndexOutOfClass
from nikishin.second_type import (
    build_chain,
    check_interlacing,
    decay_exponent,
    derived_orthogonality_residuals,
    h_constant_sign,
    h_identity_residual,
    is_special,
    nonvanishing_off_support,
    orthogonality_residuals,
)
from nikishin.mop import MultiIndex

GENERIC = [(2, 2, 1), (3, 1, 2)]
SPECIAL = [(1, 2, 3), (2, 3, 4)]


@pytest.fixture(scope="module")
def chains(system3):
    from nikishin.precision import working_precision

    with working_precision(212):
        return {n: build_chain(system3, n) for n in GENERIC + SPECIAL}


def test_closed_form_first_level(system2):
    # Q_(1,0) = x, so Psi_1(z) = int x dsigma_1/(z - x) = z/sqrt(z^2 - 1) - 1
    chain = build_chain(system2, (1, 0))
    for z in (mpfr(3), mpc(mpfr("0.5"), mpfr(2))):
        exact = z / (gmpy2.sqrt(z - 1) * gmpy2.sqrt(z + 1)) - 1
        assert abs(chain.psi(1)(z) - exact) < mpfr(10) ** -55


@pytest.mark.parametrize("n", GENERIC + SPECIAL)
class TestChain:
    def test_zero_counts(self, chains, n):
        chain = chains[n]
        for lvl in chain.levels[:-1]:
            assert len(lvl.zeros) == lvl.size
            iv = lvl.zero_interval
            assert all(iv.lo < z < iv.hi for z in lvl.zeros)

    def test_reduced_indices_shrink(self, chains, n):
        sizes = [lvl.size for lvl in chains[n].levels]
        assert sizes == sorted(sizes, reverse=True) and sizes[-1] == 0

    def test_orthogonality(self, chains, n):
        for entry in orthogonality_residuals(chains[n]):
            assert entry.residual < mpfr(10) ** -40, entry
        for entry in derived_orthogonality_residuals(chains[n]):
            assert entry.residual < mpfr(10) ** -40, entry

    def test_decay(self, chains, n):
        for k in range(1, 4):
            fitted, predicted = decay_exponent(chains[n], k)
            assert abs(fitted - predicted) < 0.05

    def test_normalisation(self, chains, n):
        norm = chains[n].normalized()
        for k in range(1, 4):
            assert abs(norm.orthonormal_measure(k).mass - 1) < mpfr(10) ** -40
            assert norm.epsilon[k] in (-1, 1)
            assert abs(norm.kappa[k] - norm.K[k] / norm.K[k - 1]) == 0

    def test_h_identity(self, chains, n):
        pts = [mpfr(7), mpc(1, 2), mpc(mpfr("3.5"), mpfr("-0.25"))]
        for k in (1, 2):
            assert h_identity_residual(chains[n], k, pts) < mpfr(10) ** -40

    def test_signs(self, chains, n):
        chain = chains[n]
        assert all(h_constant_sign(chain, k) for k in range(3))
        assert all(nonvanishing_off_support(chain, k) for k in range(3))


def test_special_branch_flag(chains):
    assert chains[(1, 2, 3)].special and chains[(2, 3, 4)].special
    assert not chains[(2, 2, 1)].special
    assert is_special(MultiIndex((1, 2, 3)))


def test_interlacing(system3, chains):
    prev = build_chain(system3, (2, 1, 1))
    nxt = chains[(2, 2, 1)]
    for k in range(3):
        res = check_interlacing(prev, nxt, k)
        assert res, res.reason


def test_interlacing_requires_same_tau(system3, chains):
    with pytest.raises(IndexOutOfClass):
        check_interlacing(chains[(2, 2, 1)], chains[(1, 2, 3)], 0)


def test_zero_index_rejected(system3):
    with pytest.raises(IndexOutOfClass):
        build_chain(system3, (0, 0, 0))


def test_json_roundtrip_shape(chains):
    doc = chains[(2, 2, 1)].to_json()
    assert doc["n"] == [2, 2, 1]
    assert [len(lvl["zeros"]) for lvl in doc["levels"]] == [5, 3, 1, 0]
