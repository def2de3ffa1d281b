import numpy as np
import pytest
from hypothesis import given, strategies as st

from critgrad.mesh import (Mesh, MeshError, Region, boundary_distance, build_interval_mesh,
                           build_rectangle_mesh, integrate, lp_norm, measure, region_mask)


def test_interval_basics():
    m = build_interval_mesh(0.0, 1.0, 5)
    assert m.spacing == (0.25,)
    np.testing.assert_allclose(m.axes[0], [0, 0.25, 0.5, 0.75, 1.0])
    assert m.boundary_mask.tolist() == [True, False, False, False, True]
    assert m.interior_shape == (3,)
    assert m.cell_volume.sum() == pytest.approx(1.0)


def test_rectangle_volume_and_masks():
    m = build_rectangle_mesh(((0, 0), (2, 1)), 9, 5)
    assert m.volume == pytest.approx(2.0)
    assert m.cell_volume.sum() == pytest.approx(2.0)
    assert m.boundary_mask.sum() == 2 * 9 + 2 * 3
    assert m.interior_index_set.size == 7 * 3


def test_refine_halves_spacing():
    m = build_rectangle_mesh(((0, 0), (1, 1)), 9, 9)
    r = m.refine()
    assert r.shape == (17, 17)
    assert r.spacing[0] == pytest.approx(m.spacing[0] / 2)


def test_check_field_rejects_wrong_shape():
    m = build_interval_mesh(0, 1, 5)
    with pytest.raises(MeshError):
        m.check_field(np.zeros(4))


def test_boundary_distance_1d():
    m = build_interval_mesh(0, 1, 11)
    np.testing.assert_allclose(boundary_distance(m), np.minimum(m.axes[0], 1 - m.axes[0]), atol=1e-15)


def test_region_membership_is_strict():
    m = build_interval_mesh(0, 1, 11)
    mask = region_mask(m, Region.ball((0.5,), 0.2))
    # nodes 0.3 and 0.7 lie on the sphere and are excluded
    np.testing.assert_allclose(m.axes[0][mask], [0.4, 0.5, 0.6])


def test_integrate_constant_over_square():
    m = build_rectangle_mesh(((0, 0), (1, 1)), 17, 17)
    assert integrate(m, np.ones(m.shape)) == pytest.approx(1.0)
    assert measure(m, m.interior_mask) == pytest.approx((15 / 16) ** 2)


def test_region_validation():
    with pytest.raises(ValueError):
        Region("sphere", (0.0,), 1.0)
    with pytest.raises(ValueError):
        Region.ball((0.0,), 0.0)


@given(st.floats(0.5, 4.0), st.floats(0.1, 3.0))
def test_lp_norm_homogeneous(p, t):
    m = build_interval_mesh(0, 1, 33)
    f = np.sin(3 * m.axes[0])
    assert lp_norm(m, t * f, p) == pytest.approx(t * lp_norm(m, f, p), rel=1e-12)


@given(st.integers(3, 40), st.integers(3, 40))
def test_cell_volumes_sum_to_area(nx, ny):
    m = Mesh((0.0, -1.0), (3.0, 1.0), (nx, ny))
    assert m.cell_volume.sum() == pytest.approx(6.0)
