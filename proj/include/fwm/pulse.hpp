#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fwm/medium.hpp"
#include "fwm/response.hpp"

namespace fwm {

// Power-domain samples are non-negative optical powers in W. Detected traces
// carry additive noise and may go negative.
enum class SampleDomain { power, detected };

// Uniformly sampled time series. Size is a power of two >= 64.
class Pulse {
public:
    Pulse(std::vector<double> samples, double dt_ns, double t0_ns, Mode mode,
          SampleDomain domain = SampleDomain::power,
          double nominal_fwhm_ns = std::numeric_limits<double>::quiet_NaN());

    std::span<const double> samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    double operator[](std::size_t i) const { return samples_[i]; }
    double dt_ns() const { return dt_ns_; }
    double t0_ns() const { return t0_ns_; }
    double time_ns(std::size_t i) const { return t0_ns_ + static_cast<double>(i) * dt_ns_; }
    double window_ns() const { return static_cast<double>(size()) * dt_ns_; }
    Mode mode() const { return mode_; }
    SampleDomain domain() const { return domain_; }
    double peak_power_W() const { return peak_; }
    double nominal_fwhm_ns() const { return nominal_fwhm_ns_; }
    std::size_t argmax() const;
    // Rectangle-rule integral of power, in J.
    double energy_J() const;

    bool same_grid(const Pulse& other) const;
    Pulse scaled(double factor) const;

private:
    std::vector<double> samples_;
    double dt_ns_;
    double t0_ns_;
    Mode mode_;
    SampleDomain domain_;
    double peak_;
    double nominal_fwhm_ns_;
};

bool is_power_of_two(std::size_t n);

// Samples in each of the first/last 5% of the window.
std::size_t guard_length(std::size_t n);
// Fraction of |energy| that sits in the two guard bands.
double guard_energy_fraction(const Pulse& p);
// Median of the guard-band samples.
double guard_baseline(const Pulse& p);

inline constexpr double input_guard_limit = 1e-6;
inline constexpr double output_guard_limit = 1e-4;

// peak * exp(-4 ln2 (t - center)^2 / fwhm^2); throws ConfigError if the window
// leaves more than 1e-6 of the energy in the guard bands.
Pulse gaussian_pulse(double peak_power_W, double fwhm_ns, double center_ns, double dt_ns,
                     std::size_t n_samples, Mode mode = Mode::probe, double t0_ns = 0.0);

struct PhotonCalibration {
    double wavelength_nm = 795.0;
    double pulse_fwhm_ns = 587.0;
    // Multiplies the rectangular-equivalent energy peak * fwhm.
    double energy_factor = 1.0;

    void validate() const;
    double photon_energy_J() const;
};

// N = energy_factor * P_peak * fwhm / (h c / lambda)
double photons_from_peak_power(const PhotonCalibration& cal, double peak_power_pW);
double peak_power_from_photons(const PhotonCalibration& cal, double photons);

// Field-envelope propagation: sqrt(power) -> FFT -> times amplitude_at(r, d0 - f)
// -> inverse FFT -> |.|^2 * extra_gain. A flat response short-circuits to an
// exact rescale; throws PropagationError on wraparound.
Pulse propagate(const Pulse& input, const SpectralResponse& r, double extra_gain = 1.0);

namespace detail {
// Always goes through the FFT path; no guard checks.
Pulse propagate_spectral(const Pulse& input, const SpectralResponse& r, double extra_gain);
}  // namespace detail

enum class DelayMethod { peak, centroid, xcorr };

std::string_view to_string(DelayMethod m);
DelayMethod delay_method_from_string(std::string_view name);

double measure_delay(const Pulse& reference, const Pulse& delayed,
                     DelayMethod method = DelayMethod::peak);

// Pedestal-subtracted FWHM; baseline from the guard bands.
double measure_fwhm(const Pulse& p);

// Columns t_ns, power_W at 17 significant digits.
std::string pulse_csv(const Pulse& p);
Pulse pulse_from_csv(std::string_view text, Mode mode = Mode::probe);

}  // namespace fwm
