import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from peterlin.conformation import MPState, mp_step
from peterlin.constitutive import GammaSpec
from peterlin.diagnostics import (CSV_HEADER, DiagnosticsRow, closure_residual,
                                  conformation_from_psi, entropy_density, fisher_information,
                                  kinetic_row, negativity_mass, radial_moment, relative_entropy)
from peterlin.errors import DomainError, InvalidParameterError, ShapeError
from peterlin.fokker_planck import (FPConfig, HermiteBasis, equilibrium_field, fp_step,
                                    gaussian_psi_hat)
from peterlin.grid import TorusGrid2D, identity_tensor


@pytest.fixture(scope="module")
def basis8():
    return HermiteBasis(8)


def unit_coeffs(basis, value=1.0):
    c = np.zeros(basis.n_modes)
    c[basis.i00] = value
    return c


class TestConformation:
    @pytest.mark.parametrize("a", [1.0, 2.0])
    def test_equilibrium(self, a):
        b = HermiteBasis(4, a)
        C = conformation_from_psi(unit_coeffs(b), b)
        np.testing.assert_array_equal(C, [a, 0.0, a])

    def test_gaussian(self, basis8):
        C = conformation_from_psi(gaussian_psi_hat(np.diag([1.5, 0.5]), basis8), basis8)
        np.testing.assert_allclose(C, [1.5, 0.0, 0.5], atol=1e-10)

    @pytest.mark.parametrize("a", [1.0, 3.0])
    def test_off_diagonal(self, a):
        b = HermiteBasis(8, a)
        c = unit_coeffs(b)
        c[b.i11] = 0.1
        assert conformation_from_psi(c, b)[1] == pytest.approx(0.1 * a, rel=1e-14)
        # quadrature check of int R1 R2 M h_11 dR = a
        h11 = b.vandermonde[:, b.i11]
        assert np.sum(b.weights * b.nodes[:, 0] * b.nodes[:, 1] * h11) == pytest.approx(a)

    def test_needs_degree_two(self):
        class Tiny:
            N_H = 1
        with pytest.raises(InvalidParameterError):
            conformation_from_psi(np.zeros(3), Tiny())

    @given(st.floats(0.2, 1.9), st.floats(0.2, 1.9), st.floats(-0.9, 0.9))
    @settings(max_examples=40, deadline=None)
    def test_inverts_gaussian_construction(self, l1, l2, rho):
        c12 = rho * math.sqrt(l1 * l2)
        C0 = np.array([[l1, c12], [c12, l2]])
        b = HermiteBasis(4)
        if np.linalg.eigvalsh(C0)[1] >= 2.0:
            return
        C = conformation_from_psi(gaussian_psi_hat(C0, b), b)
        np.testing.assert_allclose(C, [l1, c12, l2], atol=1e-10)

    def test_linear(self, basis8, rng):
        x, y = rng.normal(size=(2, basis8.n_modes))
        lhs = conformation_from_psi(2 * x - 3 * y, basis8)
        rhs = 2 * conformation_from_psi(x, basis8) - 3 * conformation_from_psi(y, basis8)
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)


class TestRadialMoments:
    @pytest.mark.parametrize("r, expected", [(0, 1.0), (2, 2.0), (4, 8.0)])
    def test_equilibrium(self, basis8, r, expected):
        assert radial_moment(unit_coeffs(basis8), r, basis8) == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("r", [3, -2, 2.5, 2 * 11])
    def test_domain(self, basis8, r):
        with pytest.raises(DomainError):
            radial_moment(unit_coeffs(basis8), r, basis8)

    def test_second_moment_is_trace(self, basis8, rng):
        c = rng.normal(size=(basis8.n_modes, 4))
        C = conformation_from_psi(c, basis8)
        np.testing.assert_allclose(radial_moment(c, 2, basis8), C[0] + C[2], atol=1e-12)


class TestEntropy:
    def test_constants(self, basis8):
        assert relative_entropy(unit_coeffs(basis8), basis8) == pytest.approx(0.0, abs=1e-15)
        assert fisher_information(unit_coeffs(basis8), basis8) == pytest.approx(0.0, abs=1e-15)
        assert relative_entropy(unit_coeffs(basis8, 2.0), basis8) == pytest.approx(
            2 * math.log(2) - 1, rel=1e-13)

    def test_gaussian_kl(self):
        b = HermiteBasis(30)
        C0 = np.diag([1.5, 0.5])
        c = gaussian_psi_hat(C0, b)
        kl = 0.5 * (np.trace(C0) - 2 - math.log(np.linalg.det(C0)))
        assert relative_entropy(c, b) == pytest.approx(kl, rel=1e-3)
        Cinv = np.linalg.inv(C0)
        A = np.eye(2) - Cinv
        fisher = np.trace(A @ C0 @ A)
        assert fisher_information(c, b) == pytest.approx(fisher, rel=1e-3)

    @given(st.floats(1e-8, 1e3))
    def test_density_nonnegative(self, s):
        assert entropy_density(s) >= -1e-12

    def test_negativity_mass(self, basis8):
        c = unit_coeffs(basis8, -1.0)
        assert negativity_mass(c, basis8) == pytest.approx(1.0)
        assert relative_entropy(c, basis8) == 0.0


def test_row_csv_round_trip():
    assert CSV_HEADER.split(",")[0] == "step"
    row = DiagnosticsRow(step=3, time=0.003, kinetic_energy=1.5, trC_mean=2.0, mass_min=1.0,
                         mass_max=1.0, entropy=0.1, fisher=0.2, moment4_max=8.0,
                         min_psi_node=0.5, negativity_mass=0.0)
    assert len(row.to_csv().split(",")) == len(CSV_HEADER.split(","))
    back = DiagnosticsRow.from_csv(row.to_csv())
    assert back.step == 3
    np.testing.assert_array_equal(back.values()[:-1], row.values()[:-1])
    assert math.isnan(back.closure_err)
    with pytest.raises(ShapeError):
        DiagnosticsRow.from_csv("1,2,3")


def test_kinetic_row_equilibrium(basis8):
    g = TorusGrid2D(8)
    row = kinetic_row(0, 0.0, g, np.zeros((2,) + g.shape), equilibrium_field(basis8, g), basis8)
    assert row.mass_min == row.mass_max == 1.0
    assert row.entropy == 0.0 and row.fisher == 0.0
    assert row.moment4_max == pytest.approx(8.0)
    assert row.trC_mean == 2.0


class TestResidual:
    def test_equilibrium(self, unit_params, const_gamma):
        g = TorusGrid2D(8)
        C = [identity_tensor(g)] * 5
        u = [np.zeros((2,) + g.shape)] * 5
        assert closure_residual(g, C, u, const_gamma, const_gamma, unit_params, 1e-2) <= 1e-12

    def test_misaligned(self, unit_params, const_gamma):
        g = TorusGrid2D(8)
        with pytest.raises(ShapeError):
            closure_residual(g, [identity_tensor(g)] * 3, [np.zeros((2,) + g.shape)] * 2,
                             const_gamma, const_gamma, unit_params, 1e-2)

    @staticmethod
    def kinetic_frozen_shear(dt, params, gamma, t_end=0.5, kappa=0.1):
        g = TorusGrid2D(8)
        b = HermiteBasis(8)
        G = np.diag([kappa, -kappa])
        cfg = FPConfig(dt=dt, params=params, gamma2=gamma)
        c = equilibrium_field(b, g)
        u = np.zeros((2,) + g.shape)
        C_series, u_series = [conformation_from_psi(c, b)], [u]
        for _ in range(round(t_end / dt)):
            c = fp_step(g, c, u, "self", cfg, b, grad_u=G)
            C_series.append(conformation_from_psi(c, b))
            u_series.append(u)
        Gs = [G] * len(C_series)
        return closure_residual(g, C_series, u_series, gamma, gamma, params, dt,
                                grad_u_series=Gs)

    def test_kinetic_residual_linear_in_dt(self, unit_params, const_gamma):
        r1 = self.kinetic_frozen_shear(2e-3, unit_params, const_gamma)
        r2 = self.kinetic_frozen_shear(1e-3, unit_params, const_gamma)
        assert r2 <= 1e-3
        assert 1.6 < r1 / r2 < 2.4

    def test_mp_self_residual(self, unit_params, const_gamma):
        # the MP scheme with explicit reaction satisfies its own forward-difference residual
        # up to the implicit-diffusion splitting, which is O(dt)
        g = TorusGrid2D(16)
        u = np.zeros((2,) + g.shape)
        values = []
        for dt in (2e-3, 1e-3):
            C = identity_tensor(g)
            C[0] += 0.3 * np.sin(g.x) * np.cos(g.y)
            s = MPState(C)
            series = [s.C]
            for _ in range(round(0.2 / dt)):
                s = mp_step(g, s, u, const_gamma, const_gamma, unit_params, dt)
                series.append(s.C)
            values.append(closure_residual(g, series, [u] * len(series), const_gamma,
                                           const_gamma, unit_params, dt))
        assert values[1] < values[0]
        assert values[1] <= 1e-3
