import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchorlaw.channel import Channel, anchor, pairwise_lr_law
from anchorlaw.errors import BoundaryBase, InvalidBase, NotRealizable, OnFiberKernel
from anchorlaw.projective import (
    Fiber,
    fiber,
    project_point,
    reconstruct_from_fiber,
    shadow_law,
    transport,
    unproject_point,
    vertex_base,
)
from anchorlaw.sampling import random_interior_base, random_law
from anchorlaw.simplex import build_basis, dirac_center, random_basis


def test_project_fixed_points():
    h = np.array([0.1, -0.2])
    assert np.allclose(project_point(np.zeros(2), h), 0)
    x = np.array([0.3, 0.4])
    assert np.allclose(project_point(x, np.zeros(2)), x)


def test_project_d2_by_hand():
    B = build_basis(2)
    h = B.gamma[0] / 2
    x = np.array([1 / math.sqrt(2)]) * np.sign(B.gamma[0])  # h.x = 1/4
    y = project_point(x, h)
    assert y[0] == pytest.approx(x[0] / 1.25)
    assert np.allclose(unproject_point(y, h), x)


def test_project_kernel():
    with pytest.raises(OnFiberKernel):
        project_point(np.array([-2.0]), np.array([0.5]))


def test_fiber_at_zero_is_identity(rng):
    rho = random_law(3, 4, rng)
    f = fiber(rho, np.zeros(2))
    assert f.lost_mass == 0
    assert np.allclose(np.sort(f.weights), np.sort(rho.weights))
    assert reconstruct_from_fiber(f).allclose(rho)


def test_fiber_outside_base():
    rho = dirac_center(3)
    with pytest.raises(InvalidBase):
        fiber(rho, 2 * vertex_base(0, rho.basis))


def test_vertex_fiber_loses_kernel_mass():
    # output 2 is impossible under row 0; its mass is lost at the vertex of row 0
    rho = anchor(Channel([[0.5, 0.5, 0.0], [0.25, 0.25, 0.5]]))
    f = fiber(rho, vertex_base(0, rho.basis))
    assert f.lost_mass == pytest.approx(0.25)
    assert f.weights.sum() == pytest.approx(1.0)
    with pytest.raises(BoundaryBase):
        transport(f, np.zeros(1))
    with pytest.raises(BoundaryBase):
        reconstruct_from_fiber(f)


def test_transport_to_self_is_identity(rng):
    rho = random_law(4, 5, rng)
    h = random_interior_base(4, rng, rho.basis)
    f = fiber(rho, h)
    assert transport(f, h).allclose(f, atol=1e-12)


def test_center_fiber_reconstructs_center(rng):
    B = build_basis(3)
    h = random_interior_base(3, rng, B)
    f = Fiber(h, np.ones(1), np.zeros((1, 2)), 0.0, B)
    assert reconstruct_from_fiber(f).allclose(dirac_center(3))


def test_off_center_fiber_not_realizable():
    B = build_basis(3)
    f = Fiber(np.zeros(2), np.ones(1), np.array([[0.1, 0.0]]), 0.0, B)
    with pytest.raises(NotRealizable):
        reconstruct_from_fiber(f)


def test_fiber_json_round_trip(rng):
    rho = random_law(3, 4, rng)
    f = fiber(rho, random_interior_base(3, rng, rho.basis))
    back = Fiber.from_json(f.to_json(), rho.basis)
    assert back.allclose(f, atol=1e-12)


def test_fiber_json_is_basis_free(rng):
    rho = random_law(4, 4, rng)
    other = random_basis(4, rng)
    h = random_interior_base(4, rng, rho.basis)
    theta = 0.25 + rho.basis.H @ h
    f1 = fiber(rho, h).to_json()
    f2 = fiber(rho.with_basis(other), other.H.T @ (theta - 0.25)).to_json()
    assert np.allclose(f1["theta"], f2["theta"], atol=1e-12)
    A1 = np.array(sorted(map(tuple, np.round([at["a"] for at in f1["atoms"]], 9))))
    A2 = np.array(sorted(map(tuple, np.round([at["a"] for at in f2["atoms"]], 9))))
    assert np.allclose(A1, A2)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_fiber_mean_zero_and_round_trip(d, k, seed):
    rng = np.random.default_rng(seed)
    rho = random_law(d, k, rng)
    h = random_interior_base(d, rng, rho.basis)
    f = fiber(rho, h)
    assert np.abs(f.mean()).max() < 1e-10
    assert reconstruct_from_fiber(f).allclose(rho, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_transport_triangle_and_return(d, k, seed):
    rng = np.random.default_rng(seed)
    rho = random_law(d, k, rng)
    g, h, kk = (random_interior_base(d, rng, rho.basis) for _ in range(3))
    fg = fiber(rho, g)
    assert transport(transport(fg, h), kk).allclose(fiber(rho, kk), atol=1e-9)
    assert transport(transport(fg, h), g).allclose(fg, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_vertex_shadow_is_pairwise_ratio(d, k, seed):
    rng = np.random.default_rng(seed)
    rho = random_law(d, k, rng)
    i, j = rng.choice(d, 2, replace=False)
    B = rho.basis
    shadow = shadow_law(fiber(rho, vertex_base(i, B)), vertex_base(j, B))
    assert shadow.allclose(pairwise_lr_law(rho, int(i), int(j)), atol=1e-10)
