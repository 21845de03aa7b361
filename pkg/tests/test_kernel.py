import math

import numpy as np
import pytest

from ggls.errors import NumericError
from ggls.kernel import KernelSpec, kernel_cross, kernel_matrix, median_bandwidth


def test_linear_on_orthonormal_columns(rng):
    q, _ = np.linalg.qr(rng.standard_normal((6, 4)))
    np.testing.assert_allclose(kernel_matrix(q, KernelSpec("linear")).k, np.eye(4), atol=1e-12)


def test_rbf_unit_diagonal_and_range(rng):
    km = kernel_matrix(rng.standard_normal((3, 20)))
    np.testing.assert_array_equal(np.diag(km.k), 1.0)
    assert np.all((km.k > 0) & (km.k <= 1))
    np.testing.assert_array_equal(km.k, km.k.T)


def test_rbf_direct_value():
    km = kernel_matrix(np.array([[0.0, 2.0]]), KernelSpec("rbf", 1.0))
    assert km.k[0, 1] == pytest.approx(math.exp(-2.0))
    assert km.k[0, 1] == pytest.approx(0.135335, abs=1e-6)


def test_median_bandwidth_excludes_zeros():
    x = np.array([[0.0, 0.0, 1.0, 3.0]])
    # nonzero squared distances: 1,1,9,9,4 each twice -> median 4
    assert median_bandwidth(x) == pytest.approx(2.0)
    km = kernel_matrix(x)
    assert km.spec.bandwidth == pytest.approx(2.0)


def test_kernel_psd(rng):
    for spec in (KernelSpec("linear"), KernelSpec()):
        k = kernel_matrix(rng.standard_normal((5, 30)), spec).k
        assert np.linalg.eigvalsh(k).min() >= -1e-8


def test_nonfinite_rejected():
    with pytest.raises(NumericError):
        kernel_matrix(np.array([[0.0, np.nan]]))
    with pytest.raises(NumericError):
        KernelSpec("rbf", -1.0)
    with pytest.raises(NumericError):
        KernelSpec("poly")


def test_cross_consistency(rng):
    z = rng.standard_normal((4, 9))
    km = kernel_matrix(z)
    np.testing.assert_allclose(kernel_cross(z, z, km.spec), km.k, atol=1e-15)
    col = kernel_cross(z, z[:, [3]], km.spec)
    np.testing.assert_allclose(col[:, 0], km.k[:, 3], atol=1e-15)


@pytest.mark.parametrize("spec", [KernelSpec("linear"), KernelSpec("rbf", 0.7)])
def test_cross_matches_scalar_loop(rng, spec):
    a, b = rng.standard_normal((4, 7)), rng.standard_normal((4, 5))
    got = kernel_cross(a, b, spec)
    for i in range(7):
        for j in range(5):
            if spec.kind == "linear":
                ref = sum(a[t, i] * b[t, j] for t in range(4))
            else:
                ref = math.exp(-sum((a[t, i] - b[t, j]) ** 2 for t in range(4)) / (2 * 0.49))
            assert abs(got[i, j] - ref) <= 1e-12


def test_cross_errors(rng):
    spec = KernelSpec("rbf", 1.0)
    with pytest.raises(NumericError):
        kernel_cross(rng.standard_normal((3, 2)), rng.standard_normal((4, 2)), spec)
    with pytest.raises(NumericError):
        kernel_cross(rng.standard_normal((3, 2)), rng.standard_normal((3, 2)), KernelSpec())
