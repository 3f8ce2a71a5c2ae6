import numpy as np
import pytest

from whitenoise_transport import (BoxSizeError, FieldGrid, GaussianCorrelation,
                                  GaussianPureState, ModelParams, Space, gaussian_wavepacket,
                                  kernel_hat, msd_closed_form, point_state, run_classical,
                                  run_continuum, run_lattice)
from whitenoise_transport.mc_simulator import SCHEME_ITO_EULER, colored_noise_convergence_study

from conftest import ols_line

P = ModelParams()
P_FREE = ModelParams(v0=0.0)
P_LAT = ModelParams(space=Space.LATTICE)
CORR = GaussianCorrelation([[1.0]])
SHARP = GaussianCorrelation([[40.0]])


@pytest.fixture(scope="module")
def small_grid():
    return FieldGrid.continuum(1, 512, 120.0)


@pytest.fixture(scope="module")
def packet(small_grid):
    return gaussian_wavepacket(small_grid, 1.0)


class TestContinuum:
    def test_free_spreading_is_exact(self, small_grid, packet):
        res = run_continuum(small_grid, packet, CORR, P_FREE, t_max=5.0, dt=0.01, n_traj=2,
                            seed=1, record_every=50)
        exact = 1 + res.times**2 / 4  # d sigma^2 + d (hbar t / 2 m sigma)^2
        np.testing.assert_allclose(res.msd_mean, exact, rtol=1e-6)

    def test_norm_conserved_over_many_steps(self):
        grid = FieldGrid.continuum(1, 128, 40.0)
        psi = gaussian_wavepacket(grid, 1.0)
        res = run_continuum(grid, psi, CORR, P, t_max=2.0, dt=2e-4, n_traj=1, seed=3,
                            record_every=1000, boundary_tol=1e-3)
        assert res.norm_drift_max < 1e-10  # 10^4 unitary steps

    def test_matches_closed_form_within_errors(self, small_grid, packet):
        res = run_continuum(small_grid, packet, CORR, P, t_max=4.0, dt=0.01, n_traj=200,
                            seed=7, record_every=40, boundary_tol=1e-3)
        cf = msd_closed_form(res.times, GaussianPureState(1.0, dim=1), CORR, P).msd
        mask = res.times > 0
        z = (res.msd_mean[mask] - cf[mask]) / res.msd_stderr[mask]
        assert np.max(np.abs(z)) < 3.5

    def test_ensemble_kernel_probe_matches_closed_form(self, small_grid, packet):
        k, t = 0.2, 0.5
        res = run_continuum(small_grid, packet, CORR, P, t_max=t, dt=0.005, n_traj=400,
                            seed=11, record_every=100, probe_k=[[k]])
        pred = kernel_hat([k], [0.0], t, GaussianPureState(1.0, dim=1), CORR, P)
        est = res.kernel_probe_mean[0, -1]
        se = res.kernel_probe_stderr[0, -1]
        assert abs(est.real - pred.real) < 3 * max(se.real, 1e-12)
        assert abs(est.imag - pred.imag) < 3 * max(se.imag, 1e-12)

    def test_bit_reproducible_across_thread_counts_and_batches(self, small_grid, packet):
        kw = dict(t_max=0.5, dt=0.01, n_traj=24, seed=5, record_every=10)
        a = run_continuum(small_grid, packet, CORR, P, threads=1, batch_size=24, **kw)
        b = run_continuum(small_grid, packet, CORR, P, threads=2, batch_size=6, **kw)
        np.testing.assert_array_equal(a.per_traj_msd, b.per_traj_msd)
        np.testing.assert_array_equal(a.msd_mean, b.msd_mean)

    def test_stderr_scaling_with_ensemble_size(self, small_grid, packet):
        kw = dict(t_max=1.0, dt=0.02, record_every=25)
        small = run_continuum(small_grid, packet, CORR, P, n_traj=60, seed=9, **kw)
        big = run_continuum(small_grid, packet, CORR, P, n_traj=240, seed=9, **kw)
        ratio = small.msd_stderr[-1] / big.msd_stderr[-1]
        assert 1.6 <= ratio <= 2.4  # quadrupling n halves the error (+-20%)

    def test_boundary_abort(self):
        grid = FieldGrid.continuum(1, 128, 12.0)  # box far too small
        psi = gaussian_wavepacket(grid, 1.0)
        with pytest.raises(BoxSizeError):
            run_continuum(grid, psi, CORR, P, t_max=6.0, dt=0.01, n_traj=2, seed=2,
                          record_every=25, boundary_tol=1e-6)

    def test_ito_control_violates_trace_and_msd(self, small_grid, packet):
        res = run_continuum(small_grid, packet, CORR, P, t_max=2.0, dt=0.01, n_traj=100,
                            seed=13, record_every=50, boundary_tol=1e-3,
                            scheme=SCHEME_ITO_EULER)
        assert res.norm_drift_max > 1.0  # trace blows up like exp((v0/hbar)^2 g0 t)
        cf = msd_closed_form(res.times, GaussianPureState(1.0, dim=1), CORR, P).msd
        mask = res.times >= 1.0
        dev = np.mean((res.per_traj_msd[:, mask] - cf[mask]) / cf[mask], axis=1)
        z = dev.mean() / (dev.std(ddof=1) / np.sqrt(res.n_traj))
        assert z > 3.0


class TestLattice:
    def test_free_point_state_ballistic(self):
        grid = FieldGrid.lattice(1, 128)
        res = run_lattice(grid, point_state(grid), SHARP, ModelParams(v0=0.0, space=Space.LATTICE),
                          t_max=10.0, dt=0.02, n_traj=2, seed=3, record_every=100)
        mask = res.times > 0
        np.testing.assert_allclose(res.msd_mean[mask], res.times[mask] ** 2 / 2, rtol=1e-10)
        assert res.norm_drift_max < 1e-10

    def test_matches_exact_averaged_law(self):
        # Gamma = 1: disorder-averaged MSD is exp(-t) + t - 1 exactly
        grid = FieldGrid.lattice(1, 256)
        res = run_lattice(grid, point_state(grid), SHARP, P_LAT, t_max=30.0, dt=0.05,
                          n_traj=160, seed=17, record_every=40)
        exact = np.exp(-res.times) + res.times - 1
        mask = res.times >= 1.0
        z = (res.msd_mean[mask] - exact[mask]) / res.msd_stderr[mask]
        assert np.max(np.abs(z)) < 3.5


class TestClassical:
    def test_free_particle_exact(self):
        res = run_classical(1, CORR, P_FREE, [0.7], t_max=5.0, dt=0.05, n_traj=3, seed=1,
                            record_every=20)
        np.testing.assert_allclose(res.msd_mean, (0.7 * res.times) ** 2, atol=1e-24)
        np.testing.assert_allclose(res.vvar_mean, 0.49 * np.ones_like(res.times))

    def test_velocity_variance_grows_at_field_curvature_rate(self):
        # slope oracle: -v0^2 (lap g)(0) / m^2 = 2 for these parameters
        res = run_classical(1, CORR, P, [0.0], t_max=5.0, dt=0.01, n_traj=400, seed=21,
                            record_every=50)
        slope, _, r2 = ols_line(res.times, res.vvar_mean)
        assert slope == pytest.approx(2.0, rel=0.2)
        assert r2 > 0.98

    def test_superballistic_displacement(self):
        res = run_classical(1, CORR, P, [0.0], t_max=8.0, dt=0.01, n_traj=300, seed=23,
                            record_every=80)
        from whitenoise_transport import fit_power_law

        mask = res.times >= 2.0
        fit = fit_power_law(res.times[mask], res.msd_mean[mask])
        assert 2.8 <= fit.exponent <= 3.2


def test_colored_study_smoke(small_grid, packet):
    # per-trajectory deviations are skewed, so the smoke run needs a
    # moderate ensemble for the z-statistics to mean anything
    rows = colored_noise_convergence_study(
        [0.4, 0.2], small_grid, packet, GaussianPureState(1.0, dim=1), CORR, P,
        t_max=2.0, dt=0.0125, n_traj=150, seed=77, record_every=20, include_ito=True,
        boundary_tol=1e-3)
    labels = [r.label for r in rows]
    assert labels == ["white", "nu=0.4", "nu=0.2", "ito-control"]
    # strongest coloring deviates the most; the white run has no bias
    assert abs(rows[1].deviation) > abs(rows[2].deviation) - 2 * (rows[1].stderr + rows[2].stderr)
    assert abs(rows[0].z_score) < 3.5
    assert rows[3].z_score > 3.0


def test_free_spreading_with_nonunit_constants():
    p = ModelParams(hbar=2.0, mass=0.5, v0=0.0)
    grid = FieldGrid.continuum(1, 512, 160.0)
    psi = gaussian_wavepacket(grid, 1.0)
    res = run_continuum(grid, psi, CORR, p, t_max=3.0, dt=0.01, n_traj=2, seed=1,
                        record_every=50)
    exact = 1 + (2.0 * res.times / (2 * 0.5)) ** 2
    np.testing.assert_allclose(res.msd_mean, exact, rtol=1e-8)
