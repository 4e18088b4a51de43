import math
from dataclasses import replace

import numpy as np
import pytest

from hybridsensor.atom_interferometer import InterferometerConfig, qpn_accel_asd
from hybridsensor.hybrid_optimizer import (
    GridError,
    HybridConfig,
    hybrid_noise_psd,
    hybrid_sigma,
    hybrid_spectrum,
    sweep_bandwidth,
)
from hybridsensor.noise_models import (
    default_peterson_table,
    peterson_accel_psd,
    peterson_noise_psd,
    white_noise_psd,
)
from hybridsensor.omrr_model import (
    OmrrConfig,
    required_sigma_x,
    self_noise_accel_psd,
    thermal_accel_floor,
)

AI = InterferometerConfig()


@pytest.fixture(scope="module")
def ambient():
    return peterson_noise_psd(default_peterson_table())


@pytest.fixture(scope="module")
def ref_cfg(ambient):
    omrr = OmrrConfig(omega0=2.0 * math.pi * 1015.0, sigma_x=1e-16)
    return HybridConfig(ai=AI, omrr=omrr, ambient=ambient)


class TestHybridNoisePsd:
    def test_below_resonance_is_self_noise(self, ref_cfg):
        w = ref_cfg.omrr.omega0 / 2.0
        assert hybrid_noise_psd(w, ref_cfg) == pytest.approx(
            self_noise_accel_psd(w, ref_cfg.omrr), rel=1e-12
        )

    def test_above_resonance_is_ambient(self, ref_cfg, ambient):
        w = 2.0 * ref_cfg.omrr.omega0  # 2030 Hz, beyond the table: edge value
        table_edge = ambient.psd_nearest(np.array([2030.0]))[0][0]
        assert hybrid_noise_psd(w, ref_cfg) == pytest.approx(table_edge, rel=1e-12)

    def test_in_band_ambient_above_low_resonance(self, ambient):
        cfg = HybridConfig(
            ai=AI, omrr=OmrrConfig(omega0=2.0 * math.pi * 2.0), ambient=ambient
        )
        w = 2.0 * math.pi * 5.0  # above resonance, inside the table band
        model = default_peterson_table()
        assert hybrid_noise_psd(w, cfg) == pytest.approx(
            peterson_accel_psd(model, 5.0), rel=1e-12
        )

    def test_discontinuity_at_resonance_is_allowed(self, ref_cfg):
        w0 = ref_cfg.omrr.omega0
        below = hybrid_noise_psd(w0 * (1.0 - 1e-9), ref_cfg)
        above = hybrid_noise_psd(w0 * (1.0 + 1e-9), ref_cfg)
        assert above / below > 10.0  # ambient floor jumps above self-noise


class TestHybridSigma:
    def test_thermal_only_floor_positive(self):
        quiet = white_noise_psd(0.0, band=(0.0, 1000.0))
        cfg = HybridConfig(
            ai=AI,
            omrr=OmrrConfig(omega0=2.0 * math.pi * 500.0, sigma_x=0.0),
            ambient=quiet,
        )
        res = hybrid_sigma(cfg)
        assert res.sigma > 0.0
        # white self-noise: sigma^2 = sum of weights times the flat floor
        floor_sq = thermal_accel_floor(cfg.omrr) ** 2
        assert res.sigma == pytest.approx(
            math.sqrt(9.5 * floor_sq), rel=0.01
        )

    def test_monotone_improvement_without_readout_noise(self, ambient):
        # with a noiseless readout and negligible thermal floor the optimum
        # is set by ambient noise above resonance alone
        sigmas = []
        for f0 in (100.0, 200.0, 400.0, 800.0):
            cfg = HybridConfig(
                ai=AI,
                omrr=OmrrConfig(
                    omega0=2.0 * math.pi * f0, sigma_x=0.0, T_TM=1e-12
                ),
                ambient=ambient,
            )
            sigmas.append(hybrid_sigma(cfg).sigma)
        assert all(b < a for a, b in zip(sigmas, sigmas[1:]))

    def test_n_max_refinement_invariant(self, ref_cfg):
        a = hybrid_sigma(replace(ref_cfg, n_max=2**11))
        b = hybrid_sigma(replace(ref_cfg, n_max=2**20))
        assert a.sigma == b.sigma

    def test_substitution_flagged_for_low_resonance(self, ambient):
        cfg = HybridConfig(
            ai=AI, omrr=OmrrConfig(omega0=2.0 * math.pi * 274.0), ambient=ambient
        )
        res = hybrid_sigma(cfg)
        assert res.n_substituted > 0

    def test_never_better_than_qpn(self, ref_cfg):
        assert hybrid_sigma(ref_cfg).sigma > qpn_accel_asd(AI)


class TestSweep:
    def test_grid_requirements(self, ref_cfg):
        with pytest.raises(GridError):
            sweep_bandwidth(ref_cfg, np.array([100.0]))
        with pytest.raises(GridError):
            sweep_bandwidth(ref_cfg, np.linspace(200.0, 100.0, 20))

    def test_edge_minimum_reports_bracket_failure(self, ambient):
        cfg = HybridConfig(
            ai=AI,
            omrr=OmrrConfig(omega0=2.0 * math.pi * 500.0, sigma_x=1e-14),
            ambient=ambient,
        )
        grid = 2.0 * math.pi * np.geomspace(1200.0, 2000.0, 16)
        with pytest.raises(GridError):
            sweep_bandwidth(cfg, grid)  # optimum near 274 Hz, left of grid

    def test_optimum_refinement_and_required_sigma_x(self, ambient):
        cfg = HybridConfig(
            ai=AI,
            omrr=OmrrConfig(omega0=2.0 * math.pi * 500.0, sigma_x=1e-15),
            ambient=ambient,
        )
        grid = 2.0 * math.pi * np.geomspace(100.0, 1500.0, 32)
        res = sweep_bandwidth(cfg, grid)
        assert res.opt_sigma <= float(np.min(res.sigma_a)) + 1e-18
        assert grid[0] < res.opt_omega0 < grid[-1]
        # per-point annotation matches the module function
        i = 7
        assert res.required_sigma_x[i] == pytest.approx(
            required_sigma_x(replace(cfg.omrr, omega0=float(grid[i]))), rel=1e-12
        )
        # every swept configuration stays above the projection-noise floor
        assert np.all(res.sigma_a >= qpn_accel_asd(AI))

    def test_optima_ordering_and_ratios(self, ambient):
        # better displacement readout pushes the optimal bandwidth up, with
        # roughly a factor two per decade of readout improvement
        grid = 2.0 * math.pi * np.geomspace(50.0, 2000.0, 48)
        optima = []
        for sx in (1e-14, 1e-15, 1e-16):
            cfg = HybridConfig(
                ai=AI,
                omrr=OmrrConfig(omega0=2.0 * math.pi * 500.0, sigma_x=sx),
                ambient=ambient,
            )
            optima.append(sweep_bandwidth(cfg, grid).opt_omega0)
        assert optima[0] < optima[1] < optima[2]
        for a, b in zip(optima, optima[1:]):
            assert 1.5 <= b / a <= 2.5

    def test_parallel_assembly_deterministic(self, ambient):
        cfg = HybridConfig(
            ai=AI,
            omrr=OmrrConfig(omega0=2.0 * math.pi * 500.0, sigma_x=1e-15),
            ambient=ambient,
        )
        grid = 2.0 * math.pi * np.geomspace(100.0, 1500.0, 24)
        serial = sweep_bandwidth(cfg, grid, workers=1)
        parallel = sweep_bandwidth(cfg, grid, workers=4)
        assert np.array_equal(serial.sigma_a, parallel.sigma_a)
        assert serial.opt_omega0 == parallel.opt_omega0


class TestSpectrum:
    def test_regime_flips_exactly_once(self, ref_cfg):
        f = np.geomspace(0.01, 2000.0, 300)
        table = hybrid_spectrum(ref_cfg, f)
        flips = np.count_nonzero(table.regime[:-1] != table.regime[1:])
        assert flips == 1
        f_c = AI.cycle_rate
        assert np.all((table.f_hz < f_c) == (table.regime == "AI"))

    def test_flat_interferometer_level_below_cycle_rate(self, ref_cfg):
        f = np.geomspace(0.01, 2000.0, 300)
        table = hybrid_spectrum(ref_cfg, f)
        sigma = hybrid_sigma(ref_cfg).sigma
        ai_rows = table.regime == "AI"
        assert np.allclose(table.hybrid_asd[ai_rows], sigma, rtol=1e-12)

    def test_readout_dominated_value_at_10_hz(self, ref_cfg):
        table = hybrid_spectrum(ref_cfg, np.array([10.0]))
        w0 = ref_cfg.omrr.omega0
        w = 2.0 * math.pi * 10.0
        expected = ref_cfg.omrr.sigma_x * abs(w0**2 - w**2)
        assert table.hybrid_asd[0] == pytest.approx(expected, rel=0.01)

    def test_readout_curves_separate_and_coincide(self, ambient):
        f = np.array([1.0, 1015.0])
        asds = []
        for sx in (1e-14, 1e-15, 1e-16):
            cfg = HybridConfig(
                ai=AI,
                omrr=OmrrConfig(omega0=2.0 * math.pi * 1015.0, sigma_x=sx),
                ambient=ambient,
            )
            asds.append(hybrid_spectrum(cfg, f).hybrid_asd)
        asds = np.array(asds)
        # factor-ten steps at low frequency where readout dominates
        assert asds[0, 0] / asds[1, 0] == pytest.approx(10.0, rel=0.01)
        assert asds[1, 0] / asds[2, 0] == pytest.approx(10.0, rel=0.01)
        # all curves meet on the thermal floor at the resonance
        assert np.max(asds[:, 1]) / np.min(asds[:, 1]) < 1.001

    def test_reference_levels(self, ref_cfg):
        f = np.geomspace(0.1, 100.0, 50)
        table = hybrid_spectrum(ref_cfg, f)
        assert table.qpn_asd == pytest.approx(qpn_accel_asd(AI), rel=1e-12)
        assert table.uncorrected_ai_asd > 100.0 * table.qpn_asd

    def test_invalid_grid_rejected(self, ref_cfg):
        with pytest.raises(ValueError):
            hybrid_spectrum(ref_cfg, np.array([]))
        with pytest.raises(ValueError):
            hybrid_spectrum(ref_cfg, np.array([2.0, 1.0]))


class TestConfigValidation:
    def test_band_must_exceed_cycle_rate(self, ambient):
        with pytest.raises(ValueError):
            HybridConfig(
                ai=AI,
                omrr=OmrrConfig(omega0=100.0),
                ambient=ambient,
                band_hz=0.1,
            )

    def test_ambient_kind_checked(self):
        disp = white_noise_psd(1.0, kind="displacement", band=(0.0, 100.0))
        with pytest.raises(ValueError):
            HybridConfig(ai=AI, omrr=OmrrConfig(omega0=100.0), ambient=disp)
