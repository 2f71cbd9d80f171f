#pragma once

#include <complex>
#include <span>
#include <string>

#include "fwm/medium.hpp"

namespace fwm {

// Complex field transfer function of one output mode: Lorentzian intensity
// gain line plus an odd dispersion phase with slope tau_d at line center.
class SpectralResponse {
public:
    struct Params {
        double center_detuning_MHz = 0.0;
        double fwhm_MHz = 1.5;
        double peak_gain = 1.0;
        double group_delay_ns = 0.0;
        Mode mode = Mode::conjugate;
        double background_gain = 0.0;
        // Width of the phase envelope; <= 0 selects 20 * fwhm.
        double phase_envelope_fwhm_MHz = 0.0;
    };

    explicit SpectralResponse(const Params& p);

    // Flat, delay-free, unit-gain response.
    static SpectralResponse unity(Mode mode = Mode::conjugate);

    double center_detuning_MHz() const { return p_.center_detuning_MHz; }
    double fwhm_MHz() const { return p_.fwhm_MHz; }
    double peak_gain() const { return p_.peak_gain; }
    double group_delay_ns() const { return p_.group_delay_ns; }
    Mode mode() const { return p_.mode; }
    double background_gain() const { return p_.background_gain; }
    double phase_envelope_fwhm_MHz() const { return p_.phase_envelope_fwhm_MHz; }

    // True when the transfer function is the same constant at every detuning.
    bool is_flat() const { return p_.group_delay_ns == 0.0 && p_.peak_gain == p_.background_gain; }

private:
    Params p_;
};

std::complex<double> amplitude_at(const SpectralResponse& r, double detuning_MHz);

// |amplitude|^2, i.e. the intensity gain.
double intensity_at(const SpectralResponse& r, double detuning_MHz);

enum class BandwidthLaw { input_power, pump_power };

// Assembles the response from the medium and bandwidth laws. The gain line
// width comes from `law`; group delay is 1/Gamma plus the mode's offset.
SpectralResponse make_response(const MediumConfig& cfg, const BandwidthModel& bm, Mode mode,
                               double pump_mW, double input_pW,
                               BandwidthLaw law = BandwidthLaw::input_power);

// Group delay of a causal complex-Lorentzian gain line with the same peak gain
// and width: ln(G0) / (2 pi Gamma). Returned in ns.
double kk_consistent_delay(double peak_gain, double fwhm_MHz);

// Returns `bm` with per-mode delay offsets set so that 1/Gamma + offset hits the
// target delays at the given input power.
BandwidthModel calibrate_delay_offsets(BandwidthModel bm, double input_pW, double probe_target_ns,
                                       double conjugate_target_ns);

// CSV with columns detuning_MHz, gain_dB, phase_rad.
std::string spectrum_csv(const SpectralResponse& r, std::span<const double> detunings_MHz);

}  // namespace fwm
