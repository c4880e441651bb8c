import math

import numpy as np
import pytest

from conftest import GAMMA, HBAR, MASS, k_of
from toa_sim import distributions as ds
from toa_sim.errors import ConsistencyFailure, DomainTooSmall, NormDeficit, RegimeWarning
from toa_sim.model import cesium_config
from toa_sim.series import TimeSeries, l1_distance
from toa_sim.wavepacket import (
    ConditionalPropagator,
    GaussianComponent,
    PacketSpec,
    conditional_evolve,
    default_kgrid,
    first_photon_density,
    grid_amplitude,
    no_detection_probability,
    ridge_photon_density,
    spectral_amplitude,
)


def packet(v=166.2, delta_x=50e-6, waist=5e-6, offset_sigmas=12.0):
    tw = (offset_sigmas * delta_x + waist) / v
    comp = GaussianComponent(mean_velocity=v, delta_x=delta_x,
                             waist_position=waist, waist_time=tw)
    return PacketSpec(components=(comp,), mass=MASS), tw


def fig6_packet():
    v1 = 167.05
    sigx = 4233e-6
    L = 5e-6
    tw = (12 * sigx + L) / v1
    comps = tuple(
        GaussianComponent(mean_velocity=v, delta_x=sigx, waist_position=L, waist_time=tw)
        for v in (v1, v1 + 0.9e-6)
    )
    return PacketSpec(components=comps, mass=MASS), tw


def free_gaussian(x, t, comp, mass, hbar):
    """Closed-form freely evolving Gaussian (test oracle)."""
    kbar = mass * comp.mean_velocity / hbar
    dk = 0.5 / comp.delta_x
    tau = t - comp.waist_time
    a = 1.0 / (4 * dk * dk) + 0.5j * hbar * tau / mass
    b = x - comp.waist_position - hbar * kbar * tau / mass
    pref = (2 * math.pi * dk * dk) ** -0.25 / math.sqrt(2 * math.pi)
    return pref * np.sqrt(math.pi / a) * np.exp(
        1j * kbar * (x - comp.waist_position)
        - 1j * hbar * kbar**2 * tau / (2 * mass)
        - b * b / (4 * a)
    )


class TestPacketSpec:
    def test_single_component_norm(self):
        spec, _ = packet()
        grid = default_kgrid(spec)
        psi = grid_amplitude(spec, grid)
        assert np.sum(grid.weights * np.abs(psi) ** 2) == pytest.approx(1.0, abs=1e-10)

    def test_two_component_norm_with_cross_terms(self):
        spec, _ = fig6_packet()
        grid = default_kgrid(spec)
        psi = grid_amplitude(spec, grid)
        assert np.sum(grid.weights * np.abs(psi) ** 2) == pytest.approx(1.0, abs=1e-10)
        # two nearly overlapping humps in |psi(k)|
        from scipy.signal import find_peaks

        peaks, _ = find_peaks(np.abs(psi))
        assert len(peaks) == 2

    def test_peak_at_mean_wavenumber(self):
        spec, _ = packet(v=100.0)
        kbar = MASS * 100.0 / HBAR
        ks = kbar + np.linspace(-3, 3, 7) * 1e4
        vals = np.abs(spectral_amplitude(spec, ks))
        assert np.argmax(vals) == 3

    def test_negative_momentum_rejected(self):
        # a packet with sizeable negative-momentum content must not build
        with pytest.raises(NormDeficit):
            PacketSpec(
                components=(GaussianComponent(mean_velocity=0.5, delta_x=1e-9),),
                mass=MASS,
            )

    def test_grid_nodes_positive(self):
        spec, _ = packet()
        grid = default_kgrid(spec)
        assert np.all(grid.nodes > 0.0)


class TestConditionalEvolve:
    def test_free_limit_matches_closed_form(self):
        comp = GaussianComponent(mean_velocity=1.0, delta_x=100e-6)
        spec = PacketSpec(components=(comp,), mass=MASS)
        cfg = cesium_config(omega=0.0)
        xs = np.array([-4e-4, 3e-4, 5e-4, 9e-4])
        t = 5e-4
        state = conditional_evolve(spec, cfg, default_kgrid(spec), xs, t)
        oracle = free_gaussian(xs, t, comp, MASS, HBAR)
        assert np.abs(state[0] - oracle).max() / np.abs(oracle).max() < 1e-8
        assert np.abs(state[1]).max() == 0.0

    def test_norm_before_arrival(self):
        spec, tw = packet()
        cfg = cesium_config(omega=104.43e6)
        n0 = no_detection_probability(spec, cfg, default_kgrid(spec), 0.0)
        assert n0 == pytest.approx(1.0, abs=1e-6)

    def test_uncoupled_norm_constant(self):
        spec, tw = packet()
        cfg = cesium_config(omega=0.0)
        grid = default_kgrid(spec)
        for t in (0.0, tw, 2 * tw):
            assert no_detection_probability(spec, cfg, grid, t) == pytest.approx(1.0, abs=1e-6)

    def test_near_total_detection_on_ridge(self):
        # packet matched to the first full-excitation ridge: almost nothing
        # survives after transit
        cfg = cesium_config(omega=104.43e6)
        v0 = cfg.beam_width * cfg.omega / math.pi
        spec, tw = packet(v=v0)
        grid = default_kgrid(spec)
        t_end = tw + 12 * 50e-6 / v0 + 15 / GAMMA
        n_end = no_detection_probability(spec, cfg, grid, t_end)
        assert n_end < 0.05

    def test_domain_too_small(self):
        spec, tw = packet()
        cfg = cesium_config(omega=104.43e6)
        with pytest.raises(DomainTooSmall):
            no_detection_probability(spec, cfg, default_kgrid(spec), 0.0,
                                     spatial_domain=(-1e-4, 1e-4))

    def test_backend_uniformity(self):
        # analytic and transfer backends produce the same evolving state
        spec, tw = packet()
        cfg = cesium_config(omega=104.43e6)
        grid = default_kgrid(spec)
        xs = np.array([-2e-5, 2e-6, 3e-5])
        a = conditional_evolve(spec, cfg, grid, xs, tw, backend="analytic")
        b = conditional_evolve(spec, cfg, grid, xs, tw, backend="transfer")
        assert np.abs(a - b).max() / np.abs(a).max() < 1e-9


class TestFirstPhotonDensity:
    def make(self, omega=104.43e6, v=None, sigx=50e-6, n_t=1200):
        cfg = cesium_config(omega=omega)
        if v is None:
            v = cfg.beam_width * cfg.omega / math.pi
        spec, tw = packet(v=v, delta_x=sigx)
        grid = default_kgrid(spec, n_nodes=513)
        t_end = tw + 12 * sigx / v + 15 / GAMMA
        times = TimeSeries(t0=0.0, dt=t_end / n_t, values=np.zeros(n_t + 1))
        return cfg, spec, grid, times

    def test_probability_balance_and_consistency(self):
        cfg, spec, grid, times = self.make()
        pi = first_photon_density(spec, cfg, grid, times)
        assert pi.meta["route_discrepancy"] < 1e-3
        prop = ConditionalPropagator(spec, cfg, grid)
        t_end = float(times.times[-1])
        n_end = prop.norm(np.array([t_end]), *prop.default_domain(t_end))[0]
        total = float(np.trapezoid(pi.values, dx=times.dt))
        assert total + n_end == pytest.approx(1.0, abs=1e-4)
        # total detection equals the spectrally weighted absorption
        R1, _, T1, _ = prop.amplitudes
        absorbed = 1.0 - np.abs(T1) ** 2 - np.abs(R1) ** 2
        weighted = float(np.sum(grid.weights * np.abs(prop.psi) ** 2 * absorbed))
        assert total == pytest.approx(weighted, abs=1e-4)

    def test_density_nonnegative_and_monotone_norm(self):
        cfg, spec, grid, times = self.make()
        pi = first_photon_density(spec, cfg, grid, times)
        assert pi.values.min() > -1e-9 * pi.values.max()
        prop = ConditionalPropagator(spec, cfg, grid)
        t_end = float(times.times[-1])
        dom = prop.default_domain(t_end)
        survival = prop.norm(times.times[::40], *dom)
        assert np.all(np.diff(survival) <= 1e-9)

    def test_uncoupled_density_vanishes(self):
        cfg, spec, grid, times = self.make(omega=0.0, v=166.2)
        pi = first_photon_density(spec, cfg, grid, times)
        assert np.abs(pi.values).max() == 0.0

    def test_absorption_identity_diagonal(self):
        # detection-matrix diagonal reproduces the stationary absorption
        cfg, spec, grid, _ = self.make()
        prop = ConditionalPropagator(spec, cfg, grid)
        d2 = prop.detection_matrix()
        R1, _, T1, _ = prop.amplitudes
        a_amp = 1.0 - np.abs(T1) ** 2 - np.abs(R1) ** 2
        a_gram = GAMMA * (2 * math.pi * MASS / (HBAR * prop.k)) * np.real(np.diag(d2))
        assert np.abs(a_amp - a_gram).max() < 1e-9


class TestRidgeApproximation:
    def test_matches_exact_route_on_ridge(self):
        # moderate spectral width keeps the packet well inside the ridge;
        # wide enough in time that transit-scale distortions are small
        omega = 10 * GAMMA
        cfg = cesium_config(omega=omega)
        v0 = cfg.beam_width * omega / math.pi
        sigx = 200e-6
        spec, tw = packet(v=v0, delta_x=sigx)
        grid = default_kgrid(spec)
        prop = ConditionalPropagator(spec, cfg, grid)
        sig_t = sigx / v0
        n_t = 1600
        t0 = tw - 6 * sig_t
        dt = (12 * sig_t + 20 / GAMMA) / n_t
        times = TimeSeries(t0=t0, dt=dt, values=np.zeros(n_t + 1))
        exact = ds.DistributionSeries(t0=t0, dt=dt,
                                      values=prop.photon_density(times.times),
                                      kind="observed")
        with pytest.warns(RegimeWarning):
            ridge = ridge_photon_density(spec, cfg, times)
        ridge_d = ds.DistributionSeries(t0=t0, dt=dt, values=ridge.values, kind="observed")
        assert l1_distance(ds.normalize(exact), ds.normalize(ridge_d)) < 0.02

    def test_deconvolved_ridge_matches_flux_for_interference_preset(self):
        # two-Gaussian interference packet: the deconvolved ridge kernel,
        # normalized, reproduces the free flux shape
        v1 = 167.05
        sigx = 4233e-6
        cfg = cesium_config(omega=104.43e6)
        L = cfg.beam_width
        tw = (12 * sigx + L) / v1
        comps = tuple(
            GaussianComponent(mean_velocity=v, delta_x=sigx, waist_position=L, waist_time=tw)
            for v in (v1, v1 + 0.9e-6)
        )
        spec = PacketSpec(components=comps, mass=MASS)
        prop = ConditionalPropagator(spec, cfg, default_kgrid(spec))
        sig_t = sigx / v1
        n_t = 1500
        times = TimeSeries(t0=tw - 5 * sig_t, dt=10 * sig_t / n_t, values=np.zeros(n_t + 1))
        pid = ds.DistributionSeries(t0=times.t0, dt=times.dt,
                                    values=prop.ideal_ridge_density(times.times),
                                    kind="ideal")
        flux = ds.free_flux(spec, L, times)
        assert l1_distance(ds.normalize(pid), ds.normalize(flux)) < 0.02

    def test_delay_scale(self):
        # the mean detection time lags the mean free arrival by roughly the
        # excited-state lifetime
        omega = 10 * GAMMA
        cfg = cesium_config(omega=omega)
        v0 = cfg.beam_width * omega / math.pi
        sigx = 200e-6
        spec, tw = packet(v=v0, delta_x=sigx)
        prop = ConditionalPropagator(spec, cfg, default_kgrid(spec))
        sig_t = sigx / v0
        tt = np.linspace(tw - 6 * sig_t, tw + 6 * sig_t + 20 / GAMMA, 4001)
        dt = tt[1] - tt[0]
        pi = prop.photon_density(tt)
        mean_pi = np.trapezoid(tt * pi, dx=dt) / np.trapezoid(pi, dx=dt)
        assert mean_pi - tw == pytest.approx(1.0 / GAMMA, rel=0.3)


class TestIdealSpectralDeconvolution:
    def test_matches_grid_deconvolution(self):
        # the per-pair delay division must agree with FFT deconvolution of
        # the sampled exact density
        cfg = cesium_config(omega=104.43e6)
        v0 = cfg.beam_width * cfg.omega / math.pi
        spec, tw = packet(v=v0, delta_x=100e-6)
        grid = default_kgrid(spec)
        prop = ConditionalPropagator(spec, cfg, grid)
        sig_t = 100e-6 / v0
        n_t = 4000
        t0 = tw - 6 * sig_t
        dt = 12 * sig_t / n_t
        times = TimeSeries(t0=t0, dt=dt, values=np.zeros(n_t + 1))
        pi = ds.DistributionSeries(t0=t0, dt=dt, values=prop.photon_density(times.times),
                                   kind="observed")
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fft_route = ds.deconvolve(pi, GAMMA, method="fourier")
        spectral = prop.ideal_density(times.times)
        scale = np.abs(spectral).max()
        sel = slice(100, -100)  # FFT route has small wrap-around at the ends
        assert np.abs(fft_route.values[sel] - spectral[sel]).max() < 5e-3 * scale
