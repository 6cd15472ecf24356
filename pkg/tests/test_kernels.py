import numpy as np
import pytest
from scipy import integrate

from lpreg.kernels import GAUSSIAN, Kernel, kernel_constants, kernel_weight


def test_weight_at_zero_default_bandwidth():
    assert kernel_weight(0.0, 1.0) == pytest.approx(0.3989422804014327, abs=1e-9)


def test_weight_scaled():
    # (1/0.5) * phi(2)
    assert kernel_weight(1.0, 0.5) == pytest.approx(0.1079819, abs=1e-7)


def test_weight_symmetric():
    d = np.linspace(0.0, 5.0, 50)
    np.testing.assert_array_equal(kernel_weight(d, 0.7), kernel_weight(-d, 0.7))


def test_far_weights_are_exact_zeros():
    assert kernel_weight(10.0, 1.0) == 0.0
    w = kernel_weight(np.array([0.0, 20.0]), 1.0)
    assert w[1] == 0.0 and w[0] > 0.0


def test_bad_bandwidth():
    for h in (0.0, -1.0, np.nan):
        with pytest.raises(ValueError):
            kernel_weight(1.0, h)


def test_unsupported_family():
    with pytest.raises(NotImplementedError):
        Kernel("epanechnikov")


def test_constants_match_quadrature():
    k = kernel_constants(GAUSSIAN)
    ev = GAUSSIAN.evaluate
    mu2, _ = integrate.quad(lambda u: u * u * ev(u), -40, 40, limit=400)
    r_k, _ = integrate.quad(lambda u: ev(u) ** 2, -40, 40, limit=400)
    mu2_ksq, _ = integrate.quad(lambda u: u * u * ev(u) ** 2, -40, 40, limit=400)
    mu4, _ = integrate.quad(lambda u: u**4 * ev(u), -40, 40, limit=400)
    assert k.mu2 == pytest.approx(mu2, abs=1e-9)
    assert k.r_k == pytest.approx(r_k, abs=1e-9)
    assert k.mu2_ksq == pytest.approx(mu2_ksq, abs=1e-9)
    assert k.mu4 == pytest.approx(mu4, abs=1e-9)


def test_constant_values():
    k = kernel_constants()
    assert k.mu2 == pytest.approx(1.0, rel=1e-12)
    assert k.r_k == pytest.approx(0.2820948, abs=1e-7)
    assert k.mu2_ksq == pytest.approx(1.0 / (4.0 * np.sqrt(np.pi)), rel=1e-12)
    assert k.mu4 == pytest.approx(3.0, rel=1e-12)


def test_kernel_integrates_to_one():
    total, _ = integrate.quad(GAUSSIAN.evaluate, -40, 40, limit=400)
    assert total == pytest.approx(1.0, abs=1e-10)
