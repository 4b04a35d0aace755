import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capops import lattice


def brute_count(sigma, A):
    bounds = [int(A // s) for s in sigma]
    return sum(1 for a in itertools.product(*(range(b + 1) for b in bounds))
               if sum(x * s for x, s in zip(a, sigma)) <= A * (1 + 1e-12))


class TestEnumerateDegree:
    def test_examples(self):
        assert lattice.enumerate_degree(1, 5) == ((5,),)
        assert lattice.enumerate_degree(2, 2) == ((0, 2), (1, 1), (2, 0))
        assert lattice.enumerate_degree(3, 0) == ((0, 0, 0),)

    def test_matches_sorted_brute_force(self):
        for N in range(1, 5):
            for p in range(7):
                brute = sorted(a for a in itertools.product(range(p + 1), repeat=N) if sum(a) == p)
                assert list(lattice.enumerate_degree(N, p)) == brute

    @pytest.mark.parametrize("N", range(1, 7))
    def test_cardinality(self, N):
        for p in range(0, 61, 3 if N > 4 else 1):
            assert len(lattice.enumerate_degree(N, p)) == math.comb(N - 1 + p, p)

    def test_graded_order_and_count_up_to(self):
        idx = lattice.index_array(2, 1)
        assert idx.tolist() == [[0, 0], [0, 1], [1, 0]]
        assert len(lattice.enumerate_up_to(3, 5)) == lattice.count_up_to(3, 5)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            lattice.enumerate_degree(0, 1)
        with pytest.raises(ValueError):
            lattice.enumerate_degree(2, -1)

    def test_index_helpers(self):
        assert lattice.degree((1, 2, 3)) == 6
        assert lattice.factorial((2, 3)) == 12
        with pytest.raises(ValueError):
            lattice.check_index((1, -1))
        with pytest.raises(ValueError):
            lattice.check_index((1, 1), N=3)


class TestCounting:
    def test_examples(self):
        assert lattice.count_weighted((1, 1), 3) == 10
        assert lattice.count_weighted((0.7,), 5.0) == math.floor(5 / 0.7) + 1
        c = lattice.count_weighted((1, 1), 200)
        assert c == 201 * 202 // 2
        assert abs(c / (200**2 / 2) - 1) < 0.02

    def test_nu_asymptotic(self):
        assert lattice.nu_asymptotic((1, 1), 2) == pytest.approx(2.0)
        assert lattice.nu_asymptotic((1,), 100) == pytest.approx(100.0)
        s = (math.log(2), math.log(10 / 3))
        # hand substitution: 100 / (2 * 0.693147 * 1.203973) = 59.914
        assert lattice.nu_asymptotic(s, 10) == pytest.approx(59.914, abs=1e-3)

    @given(st.lists(st.floats(0.3, 3.0), min_size=1, max_size=3), st.floats(0.0, 8.0))
    def test_matches_brute_force(self, sigma, A):
        assert lattice.count_weighted(sigma, A) == brute_count(sigma, A)

    @given(st.lists(st.floats(0.2, 3.0), min_size=1, max_size=4), st.floats(0.0, 10.0),
           st.floats(0.0, 5.0), st.randoms())
    def test_monotone_and_permutation_invariant(self, sigma, A, dA, rnd):
        c = lattice.count_weighted(sigma, A)
        assert lattice.count_weighted(sigma, A + dA) >= c
        perm = list(sigma)
        rnd.shuffle(perm)
        assert lattice.count_weighted(perm, A) == c

    def test_ratio_converges(self):
        s = (math.log(2), math.log(10 / 3))
        ratios = [lattice.count_weighted(s, A) / lattice.nu_asymptotic(s, A) for A in (50, 200, 800)]
        assert abs(ratios[-1] - 1) < 0.01
        assert abs(ratios[-1] - 1) < abs(ratios[0] - 1)

    def test_cap(self):
        with pytest.raises(lattice.LatticeCapError):
            lattice.count_weighted((1, 1), 1000, cap=1000)

    def test_enumerate_weighted_consistent(self):
        s = (0.5, 1.3, 0.9)
        idx, w = lattice.enumerate_weighted(s, 6.0)
        assert len(idx) == lattice.count_weighted(s, 6.0)
        np.testing.assert_allclose(idx @ np.array(s), w)
        assert len({tuple(a) for a in idx.tolist()}) == len(idx)
