import numpy as np
import pytest

from realizability.alpha import alpha_spec, r_f
from realizability.conditions import (
    PairingCertificate,
    check_all,
    check_pointwise,
    covariance_matrix,
    covariance_psd,
    pairing_value,
    structure_function,
    verify_certificate,
    yamada_check,
)
from realizability.core import (
    CorrelationSpec,
    DomainError,
    FiniteMeasure,
    LatticeDomain,
    PairFunction,
    correlations_of_measure,
)


class TestPointwise:
    def test_nonnegative_passes(self):
        rows = check_pointwise(alpha_spec(0.3, 0.2, 8))
        assert len(rows) == 1 and rows[0].passed

    def test_negative_pair_flagged(self):
        G = np.ones((3, 3))
        G[0, 2] = G[2, 0] = -0.1
        spec = CorrelationSpec(LatticeDomain.segment(3), 0.3, PairFunction.general(G))
        rows = check_pointwise(spec)
        assert [r.detail for r in rows] == ["rho2[0,2]"]
        assert not rows[0].passed

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 2.0, 7.5])
    def test_alpha_family_passes(self, alpha):
        assert all(r.passed for r in check_pointwise(alpha_spec(alpha, 0.3, 6)))


class TestCovariance:
    def test_bernoulli_diagonal(self):
        spec = CorrelationSpec(LatticeDomain.ring(5), 0.3, PairFunction.translation_invariant({}))
        S = covariance_matrix(spec)
        assert np.allclose(S, 0.21 * np.eye(5))
        lam, ok = covariance_psd(spec)
        assert ok and lam == pytest.approx(0.21)

    @pytest.mark.parametrize("rho, ok", [(0.49, True), (0.51, False)])
    def test_alpha_half_ring64(self, rho, ok):
        assert covariance_psd(alpha_spec(0.5, rho, 64))[1] is ok

    def test_zero_density(self):
        lam, ok = covariance_psd(alpha_spec(0.5, 0.0, 8))
        assert ok and lam == 0.0

    def test_matches_measure_covariance(self, two_site_measure):
        r1 = correlations_of_measure(two_site_measure, 1)
        r2 = correlations_of_measure(two_site_measure, 2)
        spec = CorrelationSpec.from_tables(two_site_measure.domain, r1, r2)
        eta = np.array([[m >> i & 1 for i in range(2)] for m in range(4)], dtype=float)
        p = two_site_measure.weights
        mean = p @ eta
        cov = (eta - mean).T @ np.diag(p) @ (eta - mean)
        assert np.allclose(covariance_matrix(spec), cov, atol=1e-15)


class TestStructureFunction:
    def test_minimum_at_zero(self):
        sf = structure_function(alpha_spec(0.5, 0.4, 8))
        assert sf.minimum == pytest.approx(0.08, abs=1e-14)
        assert sf.argmin[0] == 0.0

    def test_closed_form(self):
        rho, a = 0.3, 1.7
        sf = structure_function(alpha_spec(a, rho, 10))
        k = sf.wavevectors[:, 0]
        assert np.allclose(sf.values, rho + rho ** 2 * (-1 + 2 * (a - 1) * np.cos(k)), atol=1e-14)

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 0.8, 1.5, 3.0])
    def test_zero_at_threshold(self, alpha):
        # k = pi is on the dual lattice of an even ring
        assert abs(structure_function(alpha_spec(alpha, r_f(alpha), 16)).minimum) < 1e-14

    def test_bernoulli(self):
        spec = CorrelationSpec(LatticeDomain.ring(6), 0.4, PairFunction.translation_invariant({}))
        assert np.allclose(structure_function(spec).values, 0.4 - 0.16)

    def test_requires_translation_invariance(self):
        with pytest.raises(DomainError):
            structure_function(alpha_spec(0.5, 0.3, 8).with_rho(np.linspace(0.1, 0.2, 8)))


class TestYamada:
    def test_equality_case(self):
        rep = yamada_check(alpha_spec(0.5, 0.5, 16))
        w3 = next(w for w in rep.windows if len(w.sites) == 3)
        assert w3.variance == pytest.approx(0.25)
        assert w3.theta == pytest.approx(0.5)
        assert w3.bound == pytest.approx(0.25)
        assert w3.passed

    def test_variance_matches_measure(self, rng):
        n = 5
        w = rng.random(1 << n)
        mu = FiniteMeasure(LatticeDomain.ring(n), w / w.sum())
        r1 = correlations_of_measure(mu, 1)
        r2 = correlations_of_measure(mu, 2)
        spec = CorrelationSpec.from_tables(mu.domain, r1, r2)
        rep = yamada_check(spec)
        for win in rep.windows:
            sel = sum(1 << s for s in win.sites)
            cnt = np.array([bin(m & sel).count("1") for m in range(1 << n)])
            var = mu.weights @ cnt ** 2 - (mu.weights @ cnt) ** 2
            assert win.variance == pytest.approx(var, abs=1e-12)

    def test_above_ry_fails(self):
        rep = yamada_check(alpha_spec(0.42, 0.4630, 64))
        assert not rep.passed


class TestCertificates:
    def test_constant_one(self):
        cert = PairingCertificate(1.0, np.zeros(3), np.zeros((3, 3)))
        assert verify_certificate(cert)
        assert pairing_value(cert, alpha_spec(0.5, 0.3, 3)) == 1.0

    def test_linear(self):
        cert = PairingCertificate(0.0, np.ones(4), np.zeros((4, 4)))
        spec = alpha_spec(0.5, 0.3, 4)
        assert verify_certificate(cert)
        assert pairing_value(cert, spec) == pytest.approx(1.2)

    def test_inadmissible(self):
        cert = PairingCertificate(0.0, -np.ones(2), np.zeros((2, 2)))
        assert not verify_certificate(cert)

    def test_configuration_values(self):
        f2 = np.array([[0, 0.5, 0], [0.5, 0, 2.0], [0, 2.0, 0]])
        cert = PairingCertificate(0.25, np.array([1.0, -1.0, 3.0]), f2)
        vals = cert.configuration_values()
        for m in range(8):
            s = [i for i in range(3) if m >> i & 1]
            expect = 0.25 + sum(cert.f1[i] for i in s) + sum(f2[i, j] for i in s for j in s if i != j)
            assert vals[m] == pytest.approx(expect)

    def test_expectation_identity(self, rng):
        n = 4
        w = rng.random(1 << n)
        mu = FiniteMeasure(LatticeDomain.ring(n), w / w.sum())
        spec = CorrelationSpec.from_tables(mu.domain, correlations_of_measure(mu, 1),
                                           correlations_of_measure(mu, 2))
        f2 = rng.random((n, n))
        cert = PairingCertificate(0.1, rng.random(n), f2 + f2.T)
        assert pairing_value(cert, spec) == pytest.approx(mu.weights @ cert.configuration_values())


class TestCheckAll:
    def test_below_rf(self):
        assert all(r.passed for r in check_all(alpha_spec(0.5, 0.4, 12)))

    def test_above_rf(self):
        rows = {r.condition: r for r in check_all(alpha_spec(0.5, 0.6, 12))}
        assert not rows["structure_function"].passed
