import numpy as np
import pytest

from peterlin.constitutive import GammaSpec
from peterlin.errors import InvalidParameterError, PositivityError, StepRejectedError
from peterlin.grid import TorusGrid2D, identity_tensor, kinetic_energy
from peterlin.ns_solver import NSConfig, NSState, kramers_stress, ns_step, taylor_green

from conftest import smooth_random


class TestKramers:
    def test_examples(self, grid32):
        I = identity_tensor(grid32)
        T = kramers_stress(I, GammaSpec.power_law(1, 1), 1.0)
        np.testing.assert_allclose(T, I)
        np.testing.assert_array_equal(kramers_stress(I, GammaSpec.constant(1), 1.0), 0.0)
        C = np.zeros((3,) + grid32.shape)
        C[0], C[2] = 2.0, 1.0
        T = kramers_stress(C, GammaSpec.power_law(1, 1), 1.0)
        np.testing.assert_allclose(T[0], 5.0)
        np.testing.assert_allclose(T[1], 0.0)
        np.testing.assert_allclose(T[2], 2.0)

    def test_negative_trace(self, grid32):
        C = -identity_tensor(grid32)
        with pytest.raises(PositivityError):
            kramers_stress(C, GammaSpec.constant(1), 1.0)


def rest(grid):
    return NSState(u=np.zeros((2,) + grid.shape), p=np.zeros(grid.shape))


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        NSConfig(nu=0.0, dt=1e-3)
    with pytest.raises(InvalidParameterError):
        NSConfig(nu=0.1, dt=-1.0)


def test_rest_is_fixed_point(grid32):
    s = ns_step(grid32, rest(grid32), np.zeros((3,) + grid32.shape), NSConfig(0.1, 1e-3))
    np.testing.assert_array_equal(s.u, 0.0)
    assert s.time == 1e-3


def test_taylor_green_decay(grid32):
    cfg = NSConfig(nu=0.1, dt=1e-3)
    u0 = taylor_green(grid32)
    s = NSState(u=u0, p=np.zeros(grid32.shape))
    E0 = kinetic_energy(grid32, u0)
    for _ in range(1000):
        s = ns_step(grid32, s, None, cfg)
    ratio = kinetic_energy(grid32, s.u) / E0
    assert abs(ratio - np.exp(-4 * 0.1 * 1.0)) / np.exp(-0.4) <= 1e-4


def test_taylor_green_pressure(grid32):
    # for the TG vortex p = (cos 2x + cos 2y)/4 up to a constant
    cfg = NSConfig(nu=0.1, dt=1e-4)
    s = ns_step(grid32, NSState(taylor_green(grid32), np.zeros(grid32.shape)), None, cfg)
    g = grid32
    p_exact = (np.cos(2 * g.x) + np.cos(2 * g.y)) / 4
    np.testing.assert_allclose(s.p - s.p.mean(), p_exact, atol=1e-3)


def test_constant_stress_is_unforced(grid32):
    cfg = NSConfig(nu=0.1, dt=1e-3)
    s0 = NSState(taylor_green(grid32), np.zeros(grid32.shape))
    T = identity_tensor(grid32, 3.0)
    T[1] = -0.7
    a = ns_step(grid32, s0, T, cfg)
    b = ns_step(grid32, s0, None, cfg)
    np.testing.assert_allclose(a.u, b.u, atol=1e-14)


def test_divergence_free_and_energy_decay(grid32, rng):
    g = grid32
    psi = smooth_random(g, rng, kmax=6)
    d = g.gradient(psi)
    u = np.stack([d[1], -d[0]])
    u *= 0.5 / np.max(np.abs(u))
    s = NSState(u, np.zeros(g.shape))
    cfg = NSConfig(nu=0.05, dt=2e-3)
    E = kinetic_energy(g, u)
    for _ in range(100):
        s = ns_step(g, s, None, cfg)
        assert np.max(np.abs(g.divergence(s.u))) <= 1e-10
        E_new = kinetic_energy(g, s.u)
        assert E_new <= E + 1e-12
        E = E_new


def test_divergence_free_with_forcing(grid32, rng):
    g = grid32
    T = smooth_random(g, rng, lead=(3,))
    s = ns_step(g, rest(g), T, NSConfig(0.1, 1e-2))
    assert np.max(np.abs(g.divergence(s.u))) <= 1e-10
    assert np.max(np.abs(s.u)) > 0


def test_constant_velocity_unchanged(grid32):
    u = np.stack([np.full(grid32.shape, 0.3), np.full(grid32.shape, -0.2)])
    s = ns_step(grid32, NSState(u, np.zeros(grid32.shape)), None, NSConfig(0.1, 1e-2))
    np.testing.assert_allclose(s.u, u, atol=1e-15)


def test_cfl_violation(grid32):
    u = taylor_green(grid32, amplitude=100.0)
    with pytest.raises(StepRejectedError) as info:
        ns_step(grid32, NSState(u, np.zeros(grid32.shape)), None, NSConfig(0.1, 1e-2))
    assert info.value.cfl > 0.5
