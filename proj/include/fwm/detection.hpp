#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fwm/pulse.hpp"

namespace fwm {

// Analog detector chain: shot noise, additive Gaussian noise, a constant
// conical-emission pedestal and an optional single-pole low-pass.
struct DetectorConfig {
    double responsivity = 1.0;     // detected units per W
    double noise_rms_W = 1e-4;     // per sample
    double background_W = 2e-5;
    bool shot_noise = true;
    std::uint64_t rng_seed = 1;
    double lowpass_tau_ns = 0.0;   // 0 disables the filter
    double wavelength_nm = 795.0;  // photon energy for shot noise

    void validate() const;
    double photon_energy_J() const;
};

// Above this many expected photons per sample, shot noise is drawn Gaussian.
inline constexpr double poisson_gaussian_threshold = 1e3;

// One noisy trace; a pure function of (ideal, cfg, trace_index).
Pulse detect_once(const Pulse& ideal, const DetectorConfig& cfg, std::uint64_t trace_index);

struct TraceEnsemble {
    std::size_t n_traces = 0;
    Pulse averaged;
    std::vector<double> sample_std;  // across traces, per sample
    double peak = 0;                 // background-subtracted, at the ideal argmax
    double guard_std = 0;            // of the averaged trace
    double snr = 0;
    std::uint64_t seed = 0;
};

// Traces are summed in fixed blocks of `ensemble_block` indices, blocks merged in
// index order, so the result does not depend on the thread count.
inline constexpr std::size_t ensemble_block = 256;

TraceEnsemble average_traces(const Pulse& ideal, const DetectorConfig& cfg, std::size_t n_traces,
                             unsigned threads = 0);

// Background-subtracted value at `peak_index`: the SNR numerator.
double peak_estimate(const Pulse& trace, std::size_t peak_index);
// Population std of the guard-band samples.
double guard_std(const Pulse& trace);

struct PhotonNumberEntry {
    double photons = 0;
    std::size_t traces = 0;
    double ideal_peak = 0;   // noise-free estimator value
    double peak_mean = 0;    // pilot estimate
    double peak_std = 0;     // std of the M-trace average
    double snr = 0;
};

struct PhotonNumberReport {
    std::vector<PhotonNumberEntry> entries;
    std::size_t min_traces_resolvable = 1;  // adjacent candidates 3 combined sigma apart
    bool resolvable_at_requested = false;
    std::uint64_t seed = 0;
};

// Builds the ideal detector input for a mean input photon number.
using IdealOutputFn = std::function<Pulse(double photons)>;

PhotonNumberReport resolve_photon_number(const DetectorConfig& cfg, const IdealOutputFn& ideal_output,
                                         std::span<const double> candidate_photons,
                                         std::size_t n_traces, std::size_t pilot_traces = 256);

// Columns N_photons, M, peak_mean, peak_std, snr, seed.
std::string ensemble_summary_csv(const PhotonNumberReport& report);

}  // namespace fwm
