import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spindd.errors import DataError
from spindd.grid import BC, Field, GridSpec, Side, build_grid, div2
from spindd.state import (PhysParams, SimState, face_normal_component, init_electric_field,
                          spin_direction, truncate, validate_initial)

from _support import small_grid

vals = st.floats(-1e3, 1e3, allow_nan=False)


def test_truncate_examples():
    z = np.array([-1.0, 0.0, 0.5, 2.0, 7.0])
    assert truncate(z, 2.0).tolist() == [0.0, 0.0, 0.5, 2.0, 2.0]
    assert truncate(z, np.inf).tolist() == [0.0, 0.0, 0.5, 2.0, 7.0]


@given(arrays(float, 20, elements=vals), st.floats(0.01, 100))
def test_truncate_properties(z, M):
    t = truncate(z, M)
    assert np.all((t >= 0) & (t <= M))
    assert np.array_equal(truncate(t, M), t)
    inside = (z >= 0) & (z <= M)
    assert np.array_equal(t[inside], z[inside])


def test_spin_direction_examples():
    s = np.array([[3.0, 0.0], [4.0, 0.0], [0.0, 0.0]])
    out = spin_direction(s, 1.0)
    assert np.allclose(out[:, 0], [0.6, 0.8, 0.0])
    assert np.array_equal(out[:, 1], [0.0, 0.0, 0.0])
    assert np.allclose(spin_direction(s, np.inf), s)


@given(arrays(float, (3, 8), elements=vals), st.floats(0.01, 50))
def test_spin_direction_properties(s, M):
    out = spin_direction(s, M)
    n_in = np.linalg.norm(s, axis=0)
    n_out = np.linalg.norm(out, axis=0)
    assert np.all(n_out <= M * (1 + 1e-12))
    assert np.allclose(n_out, np.minimum(n_in, M), rtol=1e-12, atol=1e-12)
    # parallel to s
    assert np.allclose(np.cross(out, s, axis=0), 0.0, atol=1e-9 * (1 + n_in.max() ** 2))


def test_params_validation():
    with pytest.raises(DataError):
        PhysParams(tau=0.0)
    with pytest.raises(DataError):
        PhysParams(beta=-1.0)
    with pytest.raises(DataError):
        PhysParams(rho_D=-0.5)
    with pytest.raises(DataError):
        PhysParams(C=np.nan)
    p = PhysParams(rho_D={Side.LEFT: 2.0, Side.RIGHT: 2.0})
    g = small_grid(6)
    assert np.all(p.rho_D_field(g) == 2.0)
    with pytest.raises(DataError):
        PhysParams(rho_D={Side.LEFT: 1.0, Side.RIGHT: 2.0}).rho_D_field(g)


def test_poisson_field_one_dimensional_oracle():
    # rho - C = 1, phi = 0 on the contacts: phi = (x^2 - x)/2, E = x - 1/2 up to an
    # odd-even ripple of amplitude h/2 forced by the boundary rows
    n = 16
    g = build_grid(GridSpec(n, 5))
    E = init_electric_field(np.full(g.shape, 2.0), 1.0, g, tol=1e-13)
    i = np.arange(n)
    expect = g.x[0] - 0.5 - 0.5 * g.hx * (-1.0) ** i
    assert np.allclose(E[0], expect, atol=1e-11)
    assert np.allclose(0.5 * (E[0][:, 1:] + E[0][:, :-1]), 0.5 * (g.x[:, 1:] + g.x[:, :-1]) - 0.5,
                       atol=1e-11)
    assert np.abs(E[1:]).max() < 1e-12
    assert np.abs(div2(E, g, Field.E) - 1.0).max() < 1e-11


def test_validate_initial_accepts_consistent_data():
    g = small_grid(12)
    rho = 1.0 + 0.2 * np.sin(np.pi * g.x)
    E = init_electric_field(rho, 1.0, g, tol=1e-13)
    m = np.zeros((3,) + g.shape)
    m[2] = g.omega
    st = SimState(rho, np.zeros_like(m), E, np.zeros_like(m), m)
    rep = validate_initial(st, PhysParams(), g)
    assert rep.passed, str(rep)
    assert "PASS" in str(rep)


def test_validate_initial_rejects():
    g = small_grid(12)
    z = np.zeros((3,) + g.shape)
    m = z.copy()
    m[2] = g.omega
    params = PhysParams()
    # Gauss violated: rho - C = 1 with E = 0
    st = SimState(np.full(g.shape, 2.0), z, z, z, m)
    assert not validate_initial(st, params, g).passed
    # |m| != 1
    st = SimState(np.ones(g.shape), z, z, z, 0.5 * m)
    assert validate_initial(st, params, g).m_defect == pytest.approx(0.5)
    # m outside omega
    bad = m.copy()
    bad[0, 0, 0] = 1.0
    rep = validate_initial(SimState(np.ones(g.shape), z, z, z, bad), params, g)
    assert rep.details["m_outside_omega"] == 1.0 and not rep.passed
    # normal E on the insulating sides
    E = z.copy()
    E[1] = 1.0
    assert validate_initial(SimState(np.ones(g.shape), z, E, z, m), params, g).normal_E == 1.0
    with pytest.raises(DataError):
        validate_initial(SimState(np.full(g.shape, np.nan), z, z, z, m), params, g)


def test_face_normal_extrapolation_exact_on_affine():
    g = small_grid(10)
    E = np.zeros((3,) + g.shape)
    E[1] = 3.0 * g.y - 1.0
    assert np.allclose(face_normal_component(E, g, Side.BOTTOM), 1.0)  # -(3*0 - 1)
    assert np.allclose(face_normal_component(E, g, Side.TOP), 2.0)


def test_state_helpers():
    g = small_grid(6)
    st = SimState.zeros(g, t=1.5)
    assert st.t == 1.5 and st.is_finite()
    st2 = st.replace(rho=np.ones(g.shape)).scaled(0.25)
    assert np.all(st2.rho == 0.25)
    assert not st.replace(rho=np.full(g.shape, np.inf)).is_finite()
