import math

import numpy as np
import pytest

from hybridsensor.constants import BOLTZMANN
from hybridsensor.omrr_model import (
    OmrrConfig,
    disp_to_accel_tf,
    readout_limited_accel_asd,
    required_sigma_x,
    self_noise_accel_psd,
    thermal_accel_floor,
    thermal_displacement_psd,
)

W0 = 2.0 * math.pi * 1015.0
REF = OmrrConfig(omega0=W0, Q=5e5, m=2e-3, T_TM=293.0, sigma_x=1e-16)

# frozen hand evaluations for the reference mechanics
DC_GAIN_1015 = 2.45871493223174e-08          # 1/omega0^2
FLOOR_1015 = 3.2123910147147737e-10          # sqrt(4 kB 293 w0 / (m Q))
FLOOR_1200 = 3.4928988113188404e-10
REQUIRED_SX_1200 = 6.1441778108635344e-18    # floor / omega0^2
READOUT_DC_1E16 = 4.067165277644914e-09      # sigma_x * omega0^2
STRUCT_Z2_AT_W0 = 1.5595998013912612e-23     # 4 kB T Q / (m w0^3)


class TestTransferFunction:
    def test_dc_gain(self):
        assert abs(disp_to_accel_tf(0.0, REF)) == pytest.approx(
            DC_GAIN_1015, rel=1e-12
        )

    def test_resonance_gain(self):
        assert abs(disp_to_accel_tf(W0, REF)) == pytest.approx(
            REF.Q / W0**2, rel=1e-12
        )

    def test_high_frequency_rolloff(self):
        mag = abs(disp_to_accel_tf(10.0 * W0, REF))
        assert mag == pytest.approx(1.0 / (99.0 * W0**2), rel=1e-9)

    def test_sign_convention(self):
        assert disp_to_accel_tf(0.0, REF).real < 0.0

    def test_peak_at_damped_resonance_high_q(self):
        w = W0 * (1.0 + np.linspace(-2e-9, 2e-9, 5))
        mags = np.abs(disp_to_accel_tf(w, REF))
        w_peak = W0 * math.sqrt(1.0 - 1.0 / (2.0 * REF.Q**2))
        assert abs(w_peak - W0) / W0 < 1e-9
        assert np.argmax(mags) == 2  # centered within 1e-9 relative

    def test_peak_at_damped_resonance_low_q(self):
        cfg = OmrrConfig(omega0=100.0, Q=2.0)
        w = np.linspace(10.0, 200.0, 200001)
        mags = np.abs(disp_to_accel_tf(w, cfg))
        w_peak_expected = 100.0 * math.sqrt(1.0 - 1.0 / 8.0)
        assert w[np.argmax(mags)] == pytest.approx(w_peak_expected, rel=1e-4)

    def test_negative_frequency_rejected(self):
        with pytest.raises(ValueError):
            disp_to_accel_tf(-1.0, REF)


class TestThermalFloor:
    def test_reference_value(self):
        assert thermal_accel_floor(REF) == pytest.approx(FLOOR_1015, rel=1e-12)

    def test_q_scaling(self):
        q4 = OmrrConfig(omega0=W0, Q=4.0 * REF.Q, m=REF.m, T_TM=REF.T_TM)
        assert thermal_accel_floor(q4) == pytest.approx(
            thermal_accel_floor(REF) / 2.0, rel=1e-12
        )

    def test_sqrt_omega0_scaling(self):
        doubled = OmrrConfig(omega0=2.0 * W0, Q=REF.Q, m=REF.m, T_TM=REF.T_TM)
        assert thermal_accel_floor(doubled) == pytest.approx(
            thermal_accel_floor(REF) * math.sqrt(2.0), rel=1e-12
        )


class TestRequiredSigmaX:
    def test_reference_design_value(self):
        cfg = OmrrConfig(omega0=2.0 * math.pi * 1200.0)
        got = required_sigma_x(cfg)
        assert got == pytest.approx(REQUIRED_SX_1200, rel=1e-12)
        assert abs(got - 6.4e-18) / 6.4e-18 < 0.10

    def test_omega0_scaling(self):
        base = required_sigma_x(REF)
        doubled = required_sigma_x(
            OmrrConfig(omega0=2.0 * W0, Q=REF.Q, m=REF.m, T_TM=REF.T_TM)
        )
        assert doubled == pytest.approx(base / 2.0**1.5, rel=1e-12)

    def test_mq_product_scaling(self):
        big = OmrrConfig(omega0=W0, Q=10.0 * REF.Q, m=10.0 * REF.m, T_TM=REF.T_TM)
        assert required_sigma_x(big) == pytest.approx(
            required_sigma_x(REF) / 10.0, rel=1e-12
        )


class TestThermalDisplacementPsd:
    def test_structural_high_frequency_slope(self):
        s10 = thermal_displacement_psd(10.0 * W0, REF)
        s20 = thermal_displacement_psd(20.0 * W0, REF)
        assert s10 / s20 == pytest.approx(2.0**5, rel=0.02)

    def test_structural_value_on_resonance(self):
        assert thermal_displacement_psd(W0, REF) == pytest.approx(
            STRUCT_Z2_AT_W0, rel=1e-9
        )

    def test_velocity_damping_identity(self):
        # PSD times |a/z|^2 reproduces the white floor at every frequency
        cfg = OmrrConfig(omega0=W0, Q=REF.Q, m=REF.m, T_TM=REF.T_TM,
                         loss_model="velocity")
        w = np.geomspace(W0 / 1e3, W0 * 1e3, 100)
        accel_psd = thermal_displacement_psd(w, cfg) / np.abs(
            disp_to_accel_tf(w, cfg)
        ) ** 2
        floor_sq = thermal_accel_floor(cfg) ** 2
        assert np.max(np.abs(accel_psd / floor_sq - 1.0)) < 1e-9

    def test_structural_low_frequency_rise(self):
        # structural loss converts to acceleration as floor^2 * (w0 / w)
        w = W0 / 100.0
        accel_psd = thermal_displacement_psd(w, REF) / abs(
            disp_to_accel_tf(w, REF)
        ) ** 2
        assert accel_psd == pytest.approx(
            thermal_accel_floor(REF) ** 2 * (W0 / w), rel=1e-3
        )

    def test_structural_dc_divergence(self):
        with pytest.raises(ValueError):
            thermal_displacement_psd(0.0, REF)

    def test_closed_form_cross_check(self):
        # independent evaluation of the fluctuation-dissipation expression
        w = 0.3 * W0
        k = REF.m * W0**2
        phi = 1.0 / REF.Q
        expected = (4.0 * BOLTZMANN * REF.T_TM * k * phi) / (
            w * ((k - REF.m * w**2) ** 2 + (k * phi) ** 2)
        )
        assert thermal_displacement_psd(w, REF) == pytest.approx(
            expected, rel=1e-12
        )


class TestReadoutLimited:
    def test_dc_value(self):
        assert readout_limited_accel_asd(0.0, REF) == pytest.approx(
            READOUT_DC_1E16, rel=1e-12
        )

    def test_resonance_value(self):
        assert readout_limited_accel_asd(W0, REF) == pytest.approx(
            REF.sigma_x * W0**2 / REF.Q, rel=1e-12
        )

    def test_zero_readout(self):
        clean = OmrrConfig(omega0=W0, sigma_x=0.0)
        assert readout_limited_accel_asd(123.0, clean) == 0.0

    def test_high_frequency_growth(self):
        w = np.array([20.0 * W0, 40.0 * W0])
        asd = readout_limited_accel_asd(w, REF)
        assert asd[1] / asd[0] == pytest.approx(4.0, rel=1e-2)


class TestSelfNoise:
    def test_zero_readout_reduces_to_thermal(self):
        clean = OmrrConfig(omega0=W0, sigma_x=0.0)
        w = np.geomspace(1.0, 10.0 * W0, 32)
        expected = thermal_accel_floor(clean) ** 2
        assert np.allclose(self_noise_accel_psd(w, clean), expected, rtol=1e-12)

    def test_exceeds_components(self):
        w = np.geomspace(1.0, 10.0 * W0, 64)
        total = self_noise_accel_psd(w, REF)
        assert np.all(total >= thermal_accel_floor(REF) ** 2)
        assert np.all(total >= readout_limited_accel_asd(w, REF) ** 2)

    def test_readout_dominates_thermal_at_dc_by_order_of_magnitude(self):
        ratio = readout_limited_accel_asd(0.0, REF) / thermal_accel_floor(REF)
        assert 10.0 < ratio < 16.0

    def test_positive_and_continuous(self):
        w = np.geomspace(1e-3, 100.0 * W0, 4096)
        psd = self_noise_accel_psd(w, REF)
        assert np.all(psd > 0.0)
        assert np.all(np.isfinite(psd))
        # pointwise continuity, including through the resonance notch
        probes = np.array([1e-3, 0.5 * W0, W0, 1.7 * W0, 50.0 * W0])
        lo = self_noise_accel_psd(probes * (1.0 - 1e-9), REF)
        hi = self_noise_accel_psd(probes * (1.0 + 1e-9), REF)
        assert np.max(np.abs(hi - lo) / lo) < 1e-5


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"omega0": 0.0},
            {"omega0": W0, "Q": 0.5},
            {"omega0": W0, "m": 0.0},
            {"omega0": W0, "T_TM": 0.0},
            {"omega0": W0, "sigma_x": -1.0},
            {"omega0": W0, "loss_model": "magic"},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            OmrrConfig(**kwargs)

    def test_f0_property(self):
        assert REF.f0 == pytest.approx(1015.0, rel=1e-12)
