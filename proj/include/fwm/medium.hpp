#pragma once

#include <string_view>

namespace fwm {

enum class Mode { probe, conjugate };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view name);

// Phenomenological FWM amplifier. Sign convention: G = exp(-g * L), so g < 0
// means amplification. The linear g-law is clamped above gain_sat_pump_mW.
struct MediumConfig {
    double cell_length_m = 0.075;
    double pump_power_mW = 300.0;
    // 1/(m*mW). Default puts exp(-g L) = 1e7 at the saturation pump power.
    double gain_coeff_slope = 4.298158840255552;
    double gain_coeff_unity_pump_mW = 130.0;
    double gain_sat_pump_mW = 180.0;
    double max_gain = 1e7;
    double probe_attenuation = 0.45;
    double conjugate_attenuation = 1.0;
    // Flat spectral floor of the output response (unseeded conical emission).
    double background_gain = 0.0;
    // Output-referred soft clamp on G * P_in; sets the end of the linear regime.
    double saturation_output_mW = 8.5;
    double saturation_sharpness = 4.0;

    void validate() const;
    double attenuation(Mode m) const;
};

// Slope that makes the clamped gain at saturation equal `target_gain`.
double calibrate_gain_slope(const MediumConfig& cfg, double target_gain);

// Gain coefficient g in 1/m.
double gain_coefficient(const MediumConfig& cfg, double pump_mW);

// Photon-number gain G = min(exp(-g L), max_gain).
double intensity_gain(const MediumConfig& cfg, double pump_mW);

// Gain compression factor in (0, 1] for a CW-equivalent input power.
double saturation_compression(const MediumConfig& cfg, double pump_mW, double input_pW);

// Bandwidth model reduced to calibrated slopes. Frequencies are
// ordinary frequencies in MHz, delays in ns; tau_d = 1 / Gamma.
struct BandwidthModel {
    double eta = 1.0;
    double delta_raman_GHz = 1.25;
    double omega_pump_per_sqrt_mW = 2.3094;   // MHz / sqrt(mW)
    double omega_probe_per_sqrt_pW = 2.356;   // MHz / sqrt(pW)
    double offset_MHz = 1.4545;               // z
    double s_probe = 0.025515;                // MHz / sqrt(pW)
    double s_conjugate = 0.07539;             // MHz / sqrt(pW)
    double pump_floor_MHz = 0.2;              // Gamma_0 of the pump law
    // Rigid per-mode shifts added to 1/Gamma when building a response. Defaults
    // put the model delays at 672 / 592 ns for a 0.7-photon input.
    double probe_delay_offset_ns = -9.0004874356448;
    double conjugate_delay_offset_ns = -76.60440834737733;
    // Width of the dispersion-phase envelope in units of the gain FWHM.
    double phase_envelope_ratio = 20.0;

    void validate() const;
    double slope(Mode m) const;
    double delay_offset_ns(Mode m) const;
};

// Gamma = s_mode * sqrt(P) + z.
double bandwidth_vs_input(const BandwidthModel& bm, Mode mode, double input_pW);

// Power-broadening slope k (MHz/mW) from eta * Omega_pump^2 / |Delta_Raman|.
double pump_broadening_slope(const BandwidthModel& bm);

// Gamma = Gamma_0 + k * P_pump.
double bandwidth_vs_pump(const BandwidthModel& bm, double pump_mW);

// Raw Raman bandwidth eta * Omega_pump * Omega_probe / |Delta_Raman| in MHz.
double raman_bandwidth(const BandwidthModel& bm, double pump_mW, double probe_pW);

// tau_d = 1 / Gamma, Gamma in MHz, result in ns.
double delay_from_bandwidth(double gamma_MHz);

double delay_vs_input(const BandwidthModel& bm, Mode mode, double input_pW);

}  // namespace fwm
