// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fwm/csv.hpp"
#include "fwm/detection.hpp"
#include "fwm/errors.hpp"
#include "fwm/fitting.hpp"
#include "fwm/medium.hpp"
#include "fwm/pulse.hpp"
#include "fwm/response.hpp"
#include "fwm/scenario.hpp"

using namespace fwm;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
        pass = pass && ok;
    }
};

std::string num(double v, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

constexpr double pulse_fwhm = 587.0;

Pulse reference_pulse(double peak_pW = 1.0)
{
    return gaussian_pulse(peak_pW * 1e-12, pulse_fwhm, 4096, 2.0, 8192);
}

SpectralResponse line(double fwhm, double tau, double peak)
{
    SpectralResponse::Params p;
    p.fwhm_MHz = fwhm;
    p.group_delay_ns = tau;
    p.peak_gain = peak;
    return SpectralResponse(p);
}

std::string report_value(const std::string& report, const std::string& key)
{
    std::istringstream in(report);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind(key + ": ", 0) == 0) return line.substr(key.size() + 2);
    return "";
}

const std::string& output_file(const ScenarioOutput& out, const std::string& name)
{
    for (const auto& f : out.files)
        if (f.first == name) return f.second;
    throw Error("scenario did not produce " + name);
}

// 1. Delay-bandwidth law through FFT propagation.
Outcome delay_bandwidth()
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const double tau = delay_from_bandwidth(1.48);
    const Pulse in = reference_pulse();
    const double d = measure_delay(in, propagate(in, line(1.48, tau, 1e7)));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(std::abs(d / tau - 1) <= 0.03, "delay " + num(d) + " ns vs 1/Gamma " + num(tau) + " ns (+-3%)");
    o.require(std::abs(d / 672.0 - 1) <= 0.05, "vs 672 ns (+-5%)");
    o.require(secs < 1.0, "runtime " + num(secs, 3) + " s");
    return o;
}

// 2. Fractional delays at 0.7 photons.
Outcome fractional_delays()
{
    Outcome o;
    const MediumConfig cfg;
    const BandwidthModel bm;
    const PhotonCalibration cal;
    const double pin = peak_power_from_photons(cal, 0.7);
    const Pulse in = reference_pulse(pin);
    const struct {
        Mode mode;
        double target;
    } cases[] = {{Mode::probe, 1.14}, {Mode::conjugate, 1.01}};
    for (const auto& c : cases) {
        const auto r = make_response(cfg, bm, c.mode, cfg.pump_power_mW, pin);
        const double frac = measure_delay(in, propagate(in, r)) / pulse_fwhm;
        o.require(std::abs(frac - c.target) <= 0.02,
                  std::string(to_string(c.mode)) + " " + num(frac, 4) + " vs " + num(c.target, 3));
    }
    return o;
}

// 3. Lorentzian recovery with 1% noise.
Outcome lorentzian_recovery()
{
    Outcome o;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    for (double g : {1.48, 1.53}) {
        SpectralResponse::Params p;
        p.fwhm_MHz = g;
        p.peak_gain = 1e7;
        const SpectralResponse r(p);
        std::vector<double> x, y;
        for (int i = 0; i <= 200; ++i) {
            x.push_back(-10 + 0.1 * i);
            y.push_back(intensity_at(r, x.back()) * (1 + 0.01 * n(rng)));
        }
        std::vector<double> weights;
        for (double v : y) weights.push_back(1.0 / (v * v));
        const auto f = fit(ModelKind::lorentzian, x, y, std::span<const double>(weights));
        const double w = f.param("fwhm"), s = f.sigma("fwhm");
        o.require(std::abs(w / g - 1) <= 0.01 && std::abs(w - g) <= 2 * s && w < 5.75,
                  "fwhm " + num(w) + " +- " + num(s, 2) + " vs " + num(g, 3));
    }
    return o;
}

// 4. sqrt and inverse-sqrt laws end to end, seed fixed a priori.
Outcome sqrt_laws()
{
    Outcome o;
    const auto cfg = parse_config(R"({"scenario": "delay-vs-photon", "seed": 42, "medium": {},
        "bandwidth": {}, "calibration": {}, "grid": {},
        "sweep": {"start": 0.5, "stop": 400, "points": 25, "spacing": "log", "delay_jitter": 0.05}})");
    const auto out = run_scenario(cfg);
    const auto& rep = output_file(out, "fit_report.txt");
    for (const char* key : {"probe_bandwidth_fit_within_2sigma", "probe_delay_fit_within_2sigma",
                            "conjugate_bandwidth_fit_within_2sigma", "conjugate_delay_fit_within_2sigma",
                            "conjugate_more_sensitive"})
        o.require(report_value(rep, key) == "true", key);
    return o;
}

// 5. Linearity over the dynamic range, gain-regime operating point.
Outcome linearity()
{
    Outcome o;
    const auto cfg = parse_config(R"({"scenario": "linearity", "medium": {"pump_power_mW": 200},
        "bandwidth": {}, "calibration": {}, "grid": {},
        "sweep": {"start": 1, "stop": 100000, "points": 26, "spacing": "log"}})");
    const auto out = run_scenario(cfg);
    const auto& rep = output_file(out, "fit_report.txt");
    const double slope = parse_double(report_value(rep, "loglog_slope_linear_regime"));
    const double dep = parse_double(report_value(rep, "max_departure_beyond_limit"));
    o.require(std::abs(slope - 1) <= 0.01, "log-log slope " + num(slope, 5) + " for N <= 1000");
    o.require(dep > 0.05, "departure beyond knee " + num(dep, 3));
    return o;
}

// 6. Exponential gain law.
Outcome gain_law()
{
    Outcome o;
    const MediumConfig cfg;
    o.require(intensity_gain(cfg, 130.0) == 1.0, "G(130 mW) == 1");
    std::vector<double> x, y;
    for (double p = 100; p <= 180; p += 2) {
        x.push_back(p);
        y.push_back(std::log(intensity_gain(cfg, p)));
    }
    const double r2 = linear_regression(x, y).r_squared;
    o.require(r2 > 0.9999, "R^2 " + num(r2, 10));
    return o;
}

// 7. Averaging law and single-photon resolvability.
Outcome averaging()
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg0 = parse_config(R"({"scenario": "snr-averaging", "medium": {"pump_power_mW": 200},
        "bandwidth": {}, "calibration": {}, "grid": {}, "detector": {},
        "sweep": {"start": 10000, "stop": 100000, "points": 2}})");
    auto ideal = [&](double photons) {
        const double pin = peak_power_from_photons(cfg0.calibration, photons);
        const auto r = make_response(cfg0.medium, cfg0.bandwidth, Mode::conjugate, cfg0.medium.pump_power_mW,
                                     pin, BandwidthLaw::pump_power);
        return propagate(gaussian_pulse(pin * 1e-12, pulse_fwhm, 4096, 2.0, 8192), r);
    };
    const Pulse ten = ideal(10.0);
    double sum = 0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        DetectorConfig d = cfg0.detector;
        d.rng_seed = seed;
        const double a = average_traces(ten, d, 10000).snr;
        const double b = average_traces(ten, d, 100000).snr;
        sum += b / a;
        per_seed += (per_seed.empty() ? "" : ",") + num(b / a, 4);
    }
    const double mean = sum / 5;
    o.require(std::abs(mean / std::sqrt(10.0) - 1) <= 0.10,
              "mean SNR ratio " + num(mean, 4) + " vs sqrt(10) over seeds [" + per_seed + "] at N=10");

    DetectorConfig d = cfg0.detector;
    d.rng_seed = 1;
    const Pulse one = ideal(1.0);
    const double gain = intensity_gain(cfg0.medium, cfg0.medium.pump_power_mW);
    const double snr = average_traces(one, d, 100000).snr;
    o.require(gain == 1e7 && snr > 5, "N=1, G=" + num(gain, 3) + ", M=1e5: SNR " + num(snr, 4));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < 600, "runtime " + num(secs, 4) + " s");
    return o;
}

// 8. Pump-power delay tuning.
Outcome pump_tuning()
{
    Outcome o;
    const auto cfg = parse_config(R"({"scenario": "delay-vs-pump", "medium": {}, "bandwidth": {},
        "calibration": {}, "grid": {}, "params": {"input_photons": 3.8},
        "sweep": {"start": 200, "stop": 400, "points": 11}})");
    const auto out = run_scenario(cfg);
    const auto& rep = output_file(out, "fit_report.txt");
    for (const char* m : {"probe", "conjugate"}) {
        const std::string mode(m);
        const double r2 = parse_double(report_value(rep, mode + "_bandwidth_r2"));
        o.require(report_value(rep, mode + "_delay_strictly_decreasing") == "true" && r2 > 0.999,
                  mode + " decreasing, bandwidth R^2 " + num(r2, 8));
    }
    return o;
}

// Pattern-following lattice search; see the fitting unit tests.
double grid_search_ssr(ModelKind m, std::span<const double> x, std::span<const double> y,
                       std::vector<double> best, std::vector<double> span)
{
    constexpr int k = 9;
    std::size_t total = 1;
    for (std::size_t j = 0; j < best.size(); ++j) total *= k;
    double best_ssr = sum_of_squares(m, best, x, y);
    std::vector<double> theta(best.size());
    for (int round = 0; round < 5000; ++round) {
        const auto c = best;
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t rem = idx;
            for (std::size_t j = 0; j < c.size(); ++j) {
                theta[j] = c[j] + span[j] * (static_cast<int>(rem % k) - k / 2) / (k / 2);
                rem /= k;
            }
            const double s = sum_of_squares(m, theta, x, y);
            if (std::isfinite(s) && s < best_ssr) {
                best_ssr = s;
                best = theta;
            }
        }
        if (best == c) {
            bool done = true;
            for (std::size_t j = 0; j < c.size(); ++j) {
                span[j] /= 3.0;
                done = done && span[j] < 1e-13 * std::max(std::abs(c[j]), 1e-3);
            }
            if (done) break;
        }
    }
    return best_ssr;
}

// 9. Analytic self-consistency.
Outcome self_consistency()
{
    Outcome o;
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> c(-5, 5), w(0.2, 6), lg(0, 7), t(10, 3000);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        SpectralResponse::Params p;
        p.center_detuning_MHz = c(rng);
        p.fwhm_MHz = w(rng);
        p.peak_gain = std::pow(10.0, lg(rng));
        p.group_delay_ns = t(rng);
        const SpectralResponse r(p);
        const double h = p.fwhm_MHz / 1e4;
        const double slope = (std::arg(amplitude_at(r, p.center_detuning_MHz + h)) -
                              std::arg(amplitude_at(r, p.center_detuning_MHz - h))) /
                             (2 * h) / (2 * std::numbers::pi) * 1e3;
        worst = std::max(worst, std::abs(slope / p.group_delay_ns - 1));
    }
    o.require(worst <= 0.005, "phase slope worst rel err " + num(worst, 3));

    const Pulse in = reference_pulse(2.0);
    const Pulse out = propagate(in, SpectralResponse::unity());
    const Pulse fft = detail::propagate_spectral(in, SpectralResponse::unity(), 1.0);
    double err = 0, err_fft = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        err = std::max(err, std::abs(out[i] - in[i]) / in.peak_power_W());
        err_fft = std::max(err_fft, std::abs(fft[i] - in[i]) / in.peak_power_W());
    }
    o.require(err <= 1e-10 && err_fft <= 1e-10,
              "unity identity err " + num(err, 2) + " (fft route " + num(err_fft, 2) + ")");

    std::normal_distribution<double> n(0, 1);
    const struct {
        ModelKind m;
        std::vector<double> truth, span;
        double lo, hi;
        std::size_t points;
        double noise;
    } cases[] = {
        {ModelKind::linear, {2.0, -1.0}, {3.0, 3.0}, 0, 5, 11, 0.1},
        {ModelKind::sqrt_law, {0.5, 1.5}, {0.4, 1.0}, 0.5, 400, 15, 0.2},
        {ModelKind::exponential, {2.0, 0.3, 1.0}, {1.5, 0.25, 1.5}, 0, 6, 21, 0.05},
        {ModelKind::lorentzian, {5.0, 0.2, 1.5, 0.3}, {3.0, 1.0, 1.0, 0.4}, -6, 6, 31, 0.05},
    };
    double worst_fit = 0;
    for (const auto& cs : cases) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < cs.points; ++i) {
            x.push_back(cs.lo + (cs.hi - cs.lo) * static_cast<double>(i) / static_cast<double>(cs.points - 1));
            y.push_back(evaluate(cs.m, cs.truth, x.back()) + cs.noise * n(rng));
        }
        const auto f = fit(cs.m, x, y);
        const double a = f.residual_norm * f.residual_norm;
        const double b = grid_search_ssr(cs.m, x, y, cs.truth, cs.span);
        worst_fit = std::max(worst_fit, std::abs(a - b) / b);
    }
    o.require(worst_fit <= 1e-6, "fit vs grid oracle worst rel SSR gap " + num(worst_fit, 2));
    return o;
}

// 10. Causal-Lorentzian delay and its contrast in the propagate report.
Outcome kk_comparison()
{
    Outcome o;
    const double kk = kk_consistent_delay(1e7, 1.5) / 1000.0;
    o.require(std::abs(kk - 1.71) < 0.005, "kk delay " + num(kk, 4) + " us");
    const auto cfg = parse_config(R"({"scenario": "propagate", "medium": {}, "bandwidth": {},
        "calibration": {}, "grid": {}})");
    const auto out = run_scenario(cfg);
    const auto& rep = output_file(out, "report.txt");
    const bool contrast = rep.find("kk_lorentzian_delay_ns") != std::string::npos &&
                          rep.find("delay_inverse_bandwidth_ns") != std::string::npos &&
                          rep.find("kk_over_inverse_bandwidth") != std::string::npos;
    o.require(contrast, "propagate report contrasts kk with 1/Gamma");
    return o;
}

}  // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"delay-bandwidth law", delay_bandwidth},
        {"fractional delays", fractional_delays},
        {"lorentzian recovery", lorentzian_recovery},
        {"sqrt and inverse-sqrt laws", sqrt_laws},
        {"linearity over dynamic range", linearity},
        {"exponential gain law", gain_law},
        {"averaging law", averaging},
        {"pump-power delay tuning", pump_tuning},
        {"analytic self-consistency", self_consistency},
        {"causal-lorentzian comparison", kk_comparison},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        failures += !o.pass;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
