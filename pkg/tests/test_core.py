import math
from itertools import combinations

import numpy as np
import pytest

from conftest import brute_correlation
from realizability import combinatorics
from realizability.core import (
    CorrelationSpec,
    DomainError,
    FiniteMeasure,
    LatticeDomain,
    PairFunction,
    SizingError,
    TripletFunction,
    ansatz_truncated,
    correlations_of_measure,
    entropy,
    full_from_truncated,
    penrose_tree_bound,
    popcounts,
    subset_pair_products,
    subset_pair_sums,
    subset_products,
    superset_mobius,
    superset_sums,
    thin,
    triangle_key,
    truncated_from_full,
)


class TestLatticeDomain:
    def test_ring_indices_biject(self):
        dom = LatticeDomain.ring(7)
        assert sorted(dom.index(dom.coords(x)) for x in range(7)) == list(range(7))

    def test_torus_indices_biject(self):
        dom = LatticeDomain((3, 4))
        assert [dom.index(dom.coords(x)) for x in range(12)] == list(range(12))

    def test_minimal_image(self):
        dom = LatticeDomain.ring(10)
        assert dom.displacement(0, 9) == (-1,)
        assert dom.displacement(9, 0) == (1,)
        assert dom.displacement(0, 5) == (5,)

    def test_free_boundary_raw_difference(self):
        dom = LatticeDomain.segment(10)
        assert dom.displacement(0, 9) == (9,)
        assert dom.displacement(9, 0) == (-9,)

    def test_distance_symmetric_and_zero_iff_equal(self):
        dom = LatticeDomain((4, 5))
        for x in range(dom.size):
            for y in range(dom.size):
                assert dom.distance(x, y) == dom.distance(y, x)
                assert (dom.distance(x, y) == 0) == (x == y)

    def test_displacements_array_matches_scalar(self):
        dom = LatticeDomain((3, 5), "free")
        disp = dom.displacements()
        for x in range(dom.size):
            for y in range(dom.size):
                assert tuple(disp[x, y]) == dom.displacement(x, y)

    @pytest.mark.parametrize("ext, boundary", [((0,), "periodic"), ((3,), "open"), ((), "free")])
    def test_invalid(self, ext, boundary):
        with pytest.raises(DomainError):
            LatticeDomain(ext, boundary)

    def test_enumeration_cap(self):
        with pytest.raises(SizingError):
            LatticeDomain.ring(25).require_enumerable()


class TestPairFunction:
    def test_symmetry_filled_in(self):
        g = PairFunction.translation_invariant({1: 0.5})
        assert g(1) == g(-1) == 0.5
        assert g(0) == 0.0
        assert g(7) == 1.0

    def test_asymmetric_rejected(self):
        with pytest.raises(DomainError):
            PairFunction.translation_invariant({1: 0.5, -1: 0.6})

    def test_nonzero_core_rejected(self):
        with pytest.raises(DomainError):
            PairFunction.translation_invariant({0: 1.0})

    def test_matrix_on_ring(self):
        G = PairFunction.translation_invariant({1: 1.5}).matrix(LatticeDomain.ring(5))
        assert np.allclose(G, G.T)
        assert np.all(np.diag(G) == 0)
        assert G[0, 1] == G[0, 4] == 1.5
        assert G[0, 2] == 1.0

    def test_general_symmetry_required(self):
        with pytest.raises(DomainError):
            PairFunction.general([[0, 1], [2, 0]])

    def test_deviation_sum(self):
        assert PairFunction.translation_invariant({1: 0.5}).deviation_sum() == 2.0
        assert PairFunction.translation_invariant({}).deviation_sum() == 1.0


class TestTripletFunction:
    def test_key_invariance(self):
        a = triangle_key([(0,), (1,), (3,)])
        assert a == triangle_key([(5,), (3,), (2,)])
        assert a == triangle_key([(3,), (0,), (1,)])
        assert a == triangle_key([(10,), (11,), (13,)])

    def test_lookup_and_default(self):
        g3 = TripletFunction({((0,), (1,), (2,)): 1.2})
        assert g3((4,), (5,), (6,)) == 1.2
        assert g3((0,), (1,), (3,)) == 1.0
        assert g3.range == 2.0
        assert g3.deviation_sup() == pytest.approx(max(0.2, 0.2 ** (1 / 3)))

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            TripletFunction({((0,), (1,), (2,)): -0.1})

    def test_tensor_symmetric(self):
        T = TripletFunction({((0,), (1,), (2,)): 0.8}).tensor(LatticeDomain.ring(6))
        for a, b, c in combinations(range(6), 3):
            vals = {T[a, b, c], T[b, a, c], T[c, b, a], T[a, c, b]}
            assert len(vals) == 1
        assert T[0, 1, 2] == 0.8
        assert T[5, 0, 1] == 0.8
        assert T[0, 2, 4] == 1.0


class TestCorrelationSpec:
    def test_scalar_rho_broadcast(self):
        spec = CorrelationSpec(LatticeDomain.ring(4), 0.3, PairFunction.translation_invariant({}))
        assert spec.uniform and spec.rho == 0.3
        assert spec.translation_invariant
        assert spec.rho2()[0, 1] == pytest.approx(0.09)

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            CorrelationSpec(LatticeDomain.ring(4), [0.1, 0.2], PairFunction.translation_invariant({}))

    def test_from_tables_round_trip(self, two_site_measure):
        r1 = correlations_of_measure(two_site_measure, 1)
        r2 = correlations_of_measure(two_site_measure, 2)
        spec = CorrelationSpec.from_tables(two_site_measure.domain, r1, r2)
        assert np.allclose(spec.rho2(), r2, atol=1e-15)


class TestTransforms:
    def test_popcounts(self):
        assert list(popcounts(3)) == [0, 1, 1, 2, 1, 2, 2, 3]

    def test_superset_sums_brute(self, rng):
        n = 5
        w = rng.random(1 << n)
        s = superset_sums(w)
        for m in range(1 << n):
            assert s[m] == pytest.approx(sum(w[k] for k in range(1 << n) if k & m == m))

    def test_mobius_inverse(self, rng):
        w = rng.normal(size=1 << 7)
        assert np.allclose(superset_mobius(superset_sums(w)), w, atol=1e-12)

    def test_subset_products(self):
        v = np.array([2.0, 3.0, 5.0])
        assert list(subset_products(v)) == [1, 2, 3, 6, 5, 10, 15, 30]

    def test_subset_pair_products_and_sums(self, rng):
        n = 5
        W = rng.random((n, n))
        W = W + W.T
        P, S = subset_pair_products(W), subset_pair_sums(W)
        for m in range(1 << n):
            sites = [i for i in range(n) if m >> i & 1]
            pairs = list(combinations(sites, 2))
            assert P[m] == pytest.approx(math.prod(W[a, b] for a, b in pairs))
            assert S[m] == pytest.approx(sum(W[a, b] for a, b in pairs))


class TestMeasures:
    def test_normalization_enforced(self):
        with pytest.raises(DomainError):
            FiniteMeasure(LatticeDomain.segment(1), [0.5, 0.6])

    def test_bernoulli_single_site(self):
        mu = FiniteMeasure.bernoulli(LatticeDomain.ring(3), 0.5)
        assert correlations_of_measure(mu, 1)[1] == pytest.approx(0.5)

    def test_two_site_correlations(self, two_site_measure):
        r1 = correlations_of_measure(two_site_measure, 1)
        r2 = correlations_of_measure(two_site_measure, 2)
        assert np.allclose(r1, [0.2, 0.2])
        assert r2[0, 1] == pytest.approx(0.02)
        assert r2[0, 0] == 0.0

    def test_correlations_against_loop(self, rng):
        n = 5
        w = rng.random(1 << n)
        mu = FiniteMeasure(LatticeDomain.ring(n), w / w.sum())
        r3 = correlations_of_measure(mu, 3)
        for sites in combinations(range(n), 3):
            assert r3[sites] == pytest.approx(brute_correlation(mu.weights, n, sites))

    def test_signed_rejected(self):
        mu = FiniteMeasure(LatticeDomain.segment(1), [1.2, -0.2])
        assert mu.signed
        with pytest.raises(DomainError):
            correlations_of_measure(mu, 1)

    def test_thin_bernoulli(self):
        dom = LatticeDomain.ring(4)
        out = thin(FiniteMeasure.bernoulli(dom, 0.6), 0.5)
        assert np.allclose(out.weights, FiniteMeasure.bernoulli(dom, 0.3).weights)

    def test_thin_identity(self, two_site_measure):
        assert np.array_equal(thin(two_site_measure, 1.0).weights, two_site_measure.weights)

    def test_thin_two_site(self, two_site_measure):
        out = thin(two_site_measure, 0.5)
        r1 = correlations_of_measure(out, 1)
        r2 = correlations_of_measure(out, 2)
        assert np.allclose(r1, 0.1)
        assert r2[0, 1] == pytest.approx(0.005)
        assert r2[0, 1] / r1[0] ** 2 == pytest.approx(0.5)

    def test_thin_range(self, two_site_measure):
        with pytest.raises(DomainError):
            thin(two_site_measure, 1.5)

    def test_entropy_point_mass(self):
        assert entropy(FiniteMeasure.point_mass(LatticeDomain.ring(3), 5)) == 0.0

    def test_entropy_uniform(self):
        mu = FiniteMeasure.bernoulli(LatticeDomain.ring(6), 0.5)
        assert entropy(mu) == pytest.approx(6 * math.log(2))

    def test_entropy_two_site(self, two_site_measure):
        # direct -sum p log p, evaluated independently
        assert entropy(two_site_measure) == pytest.approx(0.9919500908063164, abs=1e-12)


class TestCombinatorics:
    @pytest.mark.parametrize("n, bell", [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52)])
    def test_bell(self, n, bell):
        assert len(combinatorics.set_partitions(n)) == bell

    @pytest.mark.parametrize("n, count", [(2, 1), (3, 4), (4, 38)])
    def test_connected_graphs(self, n, count):
        assert len(combinatorics.connected_graphs(n)) == count

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_cayley(self, n):
        assert len(combinatorics.labeled_trees(n)) == n ** (n - 2)


class TestTruncated:
    def test_u2_translation_invariant(self):
        dom = LatticeDomain.ring(6)
        g = PairFunction.translation_invariant({1: 0.5, 2: 1.3})
        rho = 0.3
        spec = CorrelationSpec(dom, rho, g)
        u = truncated_from_full([spec.rho1, spec.rho2()])
        for y in range(1, 6):
            assert u[1][0, y] == pytest.approx(rho ** 2 * (g(dom.displacement(0, y)) - 1))

    def test_ansatz_u2(self):
        dom = LatticeDomain.segment(2)
        g = PairFunction.translation_invariant({1: 0.5})
        assert ansatz_truncated(0.3, g, [0, 1], dom) == pytest.approx(-0.045)

    def test_poisson_case(self):
        dom = LatticeDomain.ring(5)
        g = PairFunction.translation_invariant({})
        for n in range(2, 5):
            assert ansatz_truncated(0.4, g, list(range(n)), dom) == 0.0

    def test_round_trip(self, rng):
        N = 4
        tables = [rng.random((N,) * k) for k in range(1, 4)]
        back = full_from_truncated(truncated_from_full(tables))
        for k, (a, b) in enumerate(zip(tables, back), start=1):
            mask = np.ones_like(a, dtype=bool)
            if k > 1:
                idx = np.indices(a.shape)
                for i, j in combinations(range(k), 2):
                    mask &= idx[i] != idx[j]
            assert np.allclose(a[mask], b[mask], atol=1e-12)

    def test_u3_matches_ansatz(self):
        dom = LatticeDomain.ring(5)
        g = PairFunction.translation_invariant({1: 0.5, 2: 1.4})
        spec = CorrelationSpec(dom, 0.25, g)
        G = spec.G2()
        r3 = np.zeros((5, 5, 5))
        for a, b, c in combinations(range(5), 3):
            v = 0.25 ** 3 * G[a, b] * G[a, c] * G[b, c]
            for p in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]:
                r3[p] = v
        u = truncated_from_full([spec.rho1, spec.rho2(), r3])
        assert u[2][0, 1, 3] == pytest.approx(ansatz_truncated(0.25, g, [0, 1, 3], dom))


class TestPenrose:
    def test_equilateral_example(self):
        dom = LatticeDomain.ring(3)
        g = PairFunction.general(np.full((3, 3), 0.5))
        pb = penrose_tree_bound(0.2, g, 1.0, [0, 1, 2], dom)
        assert pb.bound == pytest.approx(0.006)
        assert abs(pb.truncated) <= 0.006
        assert pb.holds

    def test_trivial_g(self):
        dom = LatticeDomain.ring(4)
        g = PairFunction.translation_invariant({})
        assert penrose_tree_bound(0.3, g, 1.0, [0, 1, 2], dom).bound == 0.0
