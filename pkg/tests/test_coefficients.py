import numpy as np
import pytest

from critgrad.coefficients import (ProblemDefinition, benchmark_names, builtin_benchmark, collar_mask,
                                   from_arrays, validate_A1)
from critgrad.mesh import build_interval_mesh


@pytest.mark.parametrize("name", benchmark_names())
def test_catalog_passes_validation(name):
    coeffs, mesh = builtin_benchmark(name)
    report = validate_A1(coeffs)
    assert report.passed, report.summary()
    assert report.omega_plus_measure > 0


def test_catalog_names():
    assert benchmark_names() == ["1d-basic", "1d-mu-variable", "1d-signchanging-h", "2d-basic"]
    with pytest.raises(KeyError):
        builtin_benchmark("nope")


def test_resample_keeps_expressions():
    coeffs, _ = builtin_benchmark("1d-basic")
    fine = coeffs.refine()
    assert fine.mesh.shape == (257,)
    np.testing.assert_allclose(fine.c_plus[::2], coeffs.c_plus)


def test_fields_are_read_only():
    coeffs, _ = builtin_benchmark("1d-basic")
    with pytest.raises(ValueError):
        coeffs.c_plus[0] = 1.0


def _simple(mesh, **kw):
    base = dict(c_plus=np.where(np.abs(mesh.axes[0] - 0.5) < 0.1, 1.0, 0.0), c_minus=0.0, mu=1.0,
                h=0.0, mu1=1.0, buffer_epsilon=0.1)
    base.update(kw)
    return from_arrays(mesh, **base)


def test_overlapping_supports_are_reported():
    mesh = build_interval_mesh(0, 1, 41)
    coeffs = _simple(mesh, c_minus=np.ones(mesh.shape))
    report = validate_A1(coeffs)
    assert not report.conditions["disjoint_supports"]
    assert not report.conditions["collar_c_minus_zero"]
    assert report.conditions["disjoint_supports"].offending.size > 0


def test_collar_mu_violation():
    mesh = build_interval_mesh(0, 1, 41)
    mu = np.where(np.abs(mesh.axes[0] - 0.5) < 0.15, 0.5, 1.0)
    report = validate_A1(_simple(mesh, mu=mu))
    assert report.failures() == ["collar_mu_lower_bound"]


def test_empty_omega_plus_fails():
    mesh = build_interval_mesh(0, 1, 41)
    report = validate_A1(_simple(mesh, c_plus=0.0))
    assert "omega_plus_nonempty" in report.failures()


def test_negative_c_plus_fails():
    mesh = build_interval_mesh(0, 1, 41)
    assert "c_plus_nonnegative" in validate_A1(_simple(mesh, c_plus=-1.0)).failures()


def test_collar_mask_width():
    mesh = build_interval_mesh(0, 1, 11)
    support = np.zeros(11, bool)
    support[5] = True
    np.testing.assert_array_equal(np.flatnonzero(collar_mask(mesh, support, 0.25)), [3, 4, 5, 6, 7])


def test_definition_requires_all_fields():
    with pytest.raises(ValueError):
        ProblemDefinition("x", (0.0,), (1.0,), {"c_plus": 1}, 1.0, 0.1, (9,))
