#include "fwm/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "fwm/constants.hpp"
#include "fwm/csv.hpp"
#include "fwm/errors.hpp"

namespace fwm {

void DetectorConfig::validate() const
{
    if (!(responsivity > 0)) throw ConfigError("detector.responsivity must be > 0");
    if (!(noise_rms_W >= 0)) throw ConfigError("detector.noise_rms_W must be >= 0");
    if (!(background_W >= 0)) throw ConfigError("detector.background_W must be >= 0");
    if (!(lowpass_tau_ns >= 0)) throw ConfigError("detector.lowpass_tau_ns must be >= 0");
    if (!(wavelength_nm > 0)) throw ConfigError("detector.wavelength_nm must be > 0");
}

double DetectorConfig::photon_energy_J() const
{
    return constants::planck_J_s * constants::speed_of_light_m_s / (wavelength_nm * 1e-9);
}

namespace {

// Independent substream per (seed, trace index).
std::mt19937_64 trace_engine(std::uint64_t seed, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x46574d31u};
    return std::mt19937_64(seq);
}

}  // namespace

Pulse detect_once(const Pulse& ideal, const DetectorConfig& cfg, std::uint64_t trace_index)
{
    auto rng = trace_engine(cfg.rng_seed, trace_index);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::poisson_distribution<long long> poisson;

    const auto in = ideal.samples();
    const double dt_s = ideal.dt_ns() * 1e-9;
    const double e_ph = cfg.photon_energy_J();
    const double noise_var = cfg.noise_rms_W * cfg.noise_rms_W;
    std::vector<double> out(in.size());

    for (std::size_t i = 0; i < in.size(); ++i) {
        const double p = in[i] + cfg.background_W;
        double v = p;
        if (cfg.shot_noise) {
            const double nbar = p * dt_s / e_ph;
            if (nbar > poisson_gaussian_threshold) {
                // Shot and electronic noise merge into one Gaussian draw.
                v = p + std::sqrt(e_ph * p / dt_s + noise_var) * normal(rng);
            } else {
                const long long count =
                    nbar > 0 ? poisson(rng, decltype(poisson)::param_type(nbar)) : 0;
                v = static_cast<double>(count) * e_ph / dt_s;
                if (cfg.noise_rms_W > 0) v += cfg.noise_rms_W * normal(rng);
            }
        } else if (cfg.noise_rms_W > 0) {
            v += cfg.noise_rms_W * normal(rng);
        }
        out[i] = v;
    }

    if (cfg.lowpass_tau_ns > 0) {
        const double alpha = 1.0 - std::exp(-ideal.dt_ns() / cfg.lowpass_tau_ns);
        double y = out[0];
        for (double& v : out) {
            y += alpha * (v - y);
            v = y;
        }
    }
    if (cfg.responsivity != 1.0)
        for (double& v : out) v *= cfg.responsivity;

    return Pulse(std::move(out), ideal.dt_ns(), ideal.t0_ns(), ideal.mode(),
                 SampleDomain::detected);
}

double peak_estimate(const Pulse& trace, std::size_t peak_index)
{
    const auto s = trace.samples();
    const auto g = guard_length(s.size());
    double sum = 0;
    for (std::size_t i = 0; i < g; ++i) sum += s[i] + s[s.size() - 1 - i];
    return s[peak_index] - sum / static_cast<double>(2 * g);
}

double guard_std(const Pulse& trace)
{
    const auto s = trace.samples();
    const auto g = guard_length(s.size());
    double mean = 0, m2 = 0;
    std::size_t k = 0;
    auto push = [&](double x) {
        ++k;
        const double d = x - mean;
        mean += d / static_cast<double>(k);
        m2 += d * (x - mean);
    };
    for (std::size_t i = 0; i < g; ++i) push(s[i]);
    for (std::size_t i = s.size() - g; i < s.size(); ++i) push(s[i]);
    return std::sqrt(m2 / static_cast<double>(k));
}

namespace {

struct Moments {
    std::size_t count = 0;
    std::vector<double> mean, m2;

    explicit Moments(std::size_t n) : mean(n, 0.0), m2(n, 0.0) {}

    void push(std::span<const double> x)
    {
        ++count;
        const double inv = 1.0 / static_cast<double>(count);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - mean[i];
            mean[i] += d * inv;
            m2[i] += d * (x[i] - mean[i]);
        }
    }

    // Chan et al. pairwise merge.
    void merge(const Moments& o)
    {
        if (o.count == 0) return;
        const double na = static_cast<double>(count), nb = static_cast<double>(o.count);
        const double n = na + nb;
        for (std::size_t i = 0; i < mean.size(); ++i) {
            const double d = o.mean[i] - mean[i];
            mean[i] += d * nb / n;
            m2[i] += o.m2[i] + d * d * na * nb / n;
        }
        count += o.count;
    }
};

}  // namespace

TraceEnsemble average_traces(const Pulse& ideal, const DetectorConfig& cfg, std::size_t n_traces,
                             unsigned threads)
{
    if (n_traces < 1) throw ConfigError("average_traces needs at least one trace");
    cfg.validate();
    const std::size_t n = ideal.size();
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n_blocks = (n_traces + ensemble_block - 1) / ensemble_block;

    auto run_block = [&](std::size_t b) {
        Moments m(n);
        const std::size_t first = b * ensemble_block;
        const std::size_t last = std::min(n_traces, first + ensemble_block);
        for (std::size_t t = first; t < last; ++t) m.push(detect_once(ideal, cfg, t).samples());
        return m;
    };

    Moments total(n);
    for (std::size_t wave = 0; wave < n_blocks; wave += threads) {
        const std::size_t count = std::min<std::size_t>(threads, n_blocks - wave);
        std::vector<Moments> results(count, Moments(0));
        if (count == 1) {
            results[0] = run_block(wave);
        } else {
            std::vector<std::jthread> workers;
            workers.reserve(count);
            for (std::size_t k = 0; k < count; ++k)
                workers.emplace_back([&, k] { results[k] = run_block(wave + k); });
        }
        for (const auto& r : results) total.merge(r);
    }

    TraceEnsemble e{n_traces,
                    Pulse(total.mean, ideal.dt_ns(), ideal.t0_ns(), ideal.mode(),
                          SampleDomain::detected),
                    {},
                    0,
                    0,
                    0,
                    cfg.rng_seed};
    e.sample_std.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        e.sample_std[i] = n_traces > 1 ? std::sqrt(total.m2[i] / static_cast<double>(n_traces - 1))
                                       : 0.0;
    e.peak = peak_estimate(e.averaged, ideal.argmax());
    e.guard_std = guard_std(e.averaged);
    e.snr = e.guard_std > 0 ? e.peak / e.guard_std
                            : (e.peak > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    return e;
}

PhotonNumberReport resolve_photon_number(const DetectorConfig& cfg, const IdealOutputFn& ideal_output,
                                         std::span<const double> candidate_photons,
                                         std::size_t n_traces, std::size_t pilot_traces)
{
    if (n_traces < 1) throw ConfigError("resolve_photon_number needs M >= 1");
    if (pilot_traces < 2) throw ConfigError("resolve_photon_number needs >= 2 pilot traces");
    cfg.validate();

    std::vector<double> photons(candidate_photons.begin(), candidate_photons.end());
    std::sort(photons.begin(), photons.end());

    PhotonNumberReport report;
    report.seed = cfg.rng_seed;
    std::vector<double> single_std;
    const double sqrt_m = std::sqrt(static_cast<double>(n_traces));

    for (std::size_t c = 0; c < photons.size(); ++c) {
        const Pulse ideal = ideal_output(photons[c]);
        const std::size_t peak_index = ideal.argmax();

        DetectorConfig quiet = cfg;
        quiet.noise_rms_W = 0;
        quiet.shot_noise = false;
        const double ideal_peak = peak_estimate(detect_once(ideal, quiet, 0), peak_index);

        double mean = 0, m2 = 0, gstd = 0;
        for (std::size_t j = 0; j < pilot_traces; ++j) {
            // Pilot substreams live far above any index average_traces uses.
            const std::uint64_t index = (std::uint64_t{1} << 40) + c * pilot_traces + j;
            const Pulse trace = detect_once(ideal, cfg, index);
            const double x = peak_estimate(trace, peak_index);
            const double d = x - mean;
            mean += d / static_cast<double>(j + 1);
            m2 += d * (x - mean);
            gstd += guard_std(trace);
        }
        const double sigma1 = std::sqrt(m2 / static_cast<double>(pilot_traces - 1));
        gstd /= static_cast<double>(pilot_traces);
        single_std.push_back(sigma1);

        PhotonNumberEntry e;
        e.photons = photons[c];
        e.traces = n_traces;
        e.ideal_peak = ideal_peak;
        e.peak_mean = mean;
        e.peak_std = sigma1 / sqrt_m;
        e.snr = gstd > 0 ? ideal_peak / (gstd / sqrt_m) : std::numeric_limits<double>::infinity();
        report.entries.push_back(e);
    }

    std::size_t need = 1;
    for (std::size_t c = 1; c < photons.size(); ++c) {
        const double gap = std::abs(report.entries[c].ideal_peak - report.entries[c - 1].ideal_peak);
        const double combined = std::hypot(single_std[c], single_std[c - 1]);
        if (combined == 0) continue;
        if (gap == 0) {
            need = std::numeric_limits<std::size_t>::max();
            break;
        }
        const double m = std::ceil(std::pow(3.0 * combined / gap, 2));
        need = std::max(need, static_cast<std::size_t>(std::max(1.0, m)));
    }
    report.min_traces_resolvable = need;
    report.resolvable_at_requested = n_traces >= need;
    return report;
}

std::string ensemble_summary_csv(const PhotonNumberReport& report)
{
    CsvWriter w({"N_photons", "M", "peak_mean", "peak_std", "snr", "seed"});
    for (const auto& e : report.entries)
        w.row_cells({format_double(e.photons), std::to_string(e.traces), format_double(e.peak_mean),
                     format_double(e.peak_std), format_double(e.snr), std::to_string(report.seed)});
    return w.str();
}

}  // namespace fwm
