import numpy as np
import pytest

from kerrpump import SystemParams, csi_parameter, gamma2, vacuum_density

from conftest import random_density


def fock_density(d, n, k):
    rho = np.zeros((d, d, d, d), dtype=complex)
    rho[n, n, k, k] = 1.0
    return rho


def brute_force_gamma2(p, which):
    """Direct double sum over the joint photon-number distribution."""
    total = 0.0
    for n in range(p.shape[0]):
        for k in range(p.shape[1]):
            if which == "aa":
                total += n * (n - 1) * p[n, k]
            elif which == "bb":
                total += k * (k - 1) * p[n, k]
            else:
                total += n * k * p[n, k]
    return total


class TestGamma2:
    def test_two_pair_fock_state(self):
        rho = fock_density(5, 2, 2)
        assert gamma2(rho, ("a", "a")) == pytest.approx(2.0)
        assert gamma2(rho, ("b", "b")) == pytest.approx(2.0)
        assert gamma2(rho, ("a", "b")) == pytest.approx(4.0)

    def test_vacuum(self):
        rho = vacuum_density(SystemParams(n_max=3))
        for modes in (("a", "a"), ("b", "b"), ("a", "b")):
            assert gamma2(rho, modes) == 0.0

    def test_single_pair(self):
        rho = fock_density(4, 1, 1)
        assert gamma2(rho, ("a", "b")) == pytest.approx(1.0)
        assert gamma2(rho, ("a", "a")) == 0.0
        assert gamma2(rho, ("b", "b")) == 0.0

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            gamma2(fock_density(3, 0, 0), ("a", "c"))

    def test_against_brute_force(self, rng):
        for _ in range(5):
            rho = random_density(rng, 4)
            p = np.real(np.einsum("nnkk->nk", rho))
            for modes, which in ((("a", "a"), "aa"), (("b", "b"), "bb"), (("a", "b"), "ab")):
                assert gamma2(rho, modes) == pytest.approx(brute_force_gamma2(p, which), abs=1e-12)
                assert gamma2(rho, modes) >= -1e-12


class TestCsiParameter:
    def test_two_pair_fock_state(self):
        assert csi_parameter(fock_density(5, 2, 2)) == pytest.approx(2.0)

    def test_vacuum_undefined(self):
        assert csi_parameter(vacuum_density(SystemParams(n_max=3))) is None

    def test_single_pair_undefined(self):
        # Gamma_ab = 1 but both same-mode correlations vanish
        assert csi_parameter(fock_density(4, 1, 1)) is None

    def test_thermal_product_state_is_classical(self):
        # uncorrelated thermal modes: Gamma_ab = na*nb, Gamma_aa = 2 na^2,
        # so R = 1/2; brute-force the truncated geometric distribution
        d, na, nb = 12, 0.4, 0.6
        pa = (na / (1 + na)) ** np.arange(d)
        pa /= pa.sum()
        pb = (nb / (1 + nb)) ** np.arange(d)
        pb /= pb.sum()
        rho = np.zeros((d, d, d, d), dtype=complex)
        for n in range(d):
            for k in range(d):
                rho[n, n, k, k] = pa[n] * pb[k]
        r = csi_parameter(rho)
        assert r is not None
        assert r == pytest.approx(0.5, abs=1e-3)
        assert r <= 1.0
