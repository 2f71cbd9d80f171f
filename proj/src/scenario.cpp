#include "fwm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "fwm/constants.hpp"
#include "fwm/csv.hpp"
#include "fwm/errors.hpp"
#include "fwm/fitting.hpp"
#include "fwm/response.hpp"

#ifndef FWM_VERSION
#define FWM_VERSION "0.0.0"
#endif

namespace fwm {

using nlohmann::json;

std::string_view artifact_version() { return FWM_VERSION; }

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::vector<double> SweepConfig::values() const
{
    std::vector<double> v(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double f = points > 1 ? static_cast<double>(i) / static_cast<double>(points - 1) : 0.0;
        v[i] = log_spacing ? start * std::pow(stop / start, f) : start + (stop - start) * f;
    }
    if (points > 1) v.back() = stop;
    return v;
}

// ---------------------------------------------------------------- catalog ---

const std::vector<ScenarioInfo>& scenario_catalog()
{
    static const std::vector<ScenarioInfo> catalog{
        {"delay-vs-photon",
         "Fig. 4(a-d)",
         {"medium", "bandwidth", "calibration", "grid", "sweep"},
         {"delay_vs_photon.csv: mode, input_pW, photons, bandwidth_MHz, bandwidth_observed_MHz, "
          "delay_model_ns, delay_measured_ns, delay_observed_ns",
          "fit_report.txt"},
         "sweeps input power (pW), propagates pulses through both modes and fits s*sqrt(x)+z to "
         "bandwidths and 1/(s*sqrt(x)+z) to delays"},
        {"delay-vs-pump",
         "Fig. S3 and inset",
         {"medium", "bandwidth", "calibration", "grid", "sweep"},
         {"delay_vs_pump.csv: mode, pump_mW, bandwidth_MHz, delay_model_ns, delay_measured_ns",
          "fit_report.txt"},
         "sweeps pump power (mW) with the power-broadened bandwidth law"},
        {"gain-sweep",
         "Fig. 2(a,b)",
         {"medium", "sweep"},
         {"gain_sweep.csv: pump_mW, gain_coeff_per_m, gain, log10_gain", "fit_report.txt"},
         "gain coefficient and exponential gain versus pump power"},
        {"linearity",
         "Fig. 2(d)",
         {"medium", "bandwidth", "calibration", "grid", "sweep"},
         {"linearity.csv: photons, input_pW, peak_gain, output_peak_W, output_peak_per_photon_W",
          "fit_report.txt"},
         "output pulse peak versus mean input photon number, including the saturation knee"},
        {"propagate",
         "Fig. 3(c)",
         {"medium", "bandwidth", "calibration", "grid"},
         {"pulse_reference.csv, pulse_probe.csv, pulse_conjugate.csv: t_ns, power_W",
          "delays.csv: mode, bandwidth_MHz, peak_gain, delay_model_ns, delay_measured_ns, "
          "fractional_delay, output_fwhm_ns, kk_delay_ns",
          "report.txt"},
         "delayed probe and conjugate pulses at a fixed mean photon number"},
        {"resolve-n",
         "Fig. 2(c)",
         {"medium", "bandwidth", "calibration", "grid", "detector"},
         {"ensemble_summary.csv: N_photons, M, peak_mean, peak_std, snr, seed", "report.txt"},
         "photon-number resolvability by averaging M analog traces"},
        {"snr-averaging",
         "Fig. 2(c) averaging",
         {"medium", "bandwidth", "calibration", "grid", "detector", "sweep"},
         {"snr_averaging.csv: N_photons, M, peak_mean, peak_std, snr, seed", "report.txt"},
         "SNR of averaged detector traces versus number of averages M (sweep over M)"},
        {"spectrum",
         "Fig. 3(a,b)",
         {"medium", "bandwidth"},
         {"spectrum_probe.csv, spectrum_conjugate.csv: detuning_MHz, gain_dB, phase_rad",
          "fit_report.txt"},
         "gain line and dispersion phase versus two-photon detuning, with Lorentzian fits"},
    };
    return catalog;
}

std::string list_scenarios()
{
    std::ostringstream os;
    for (const auto& s : scenario_catalog()) {
        os << s.name << "  [mirrors " << s.figure << "]\n"
           << "    " << s.description << '\n'
           << "    blocks:";
        for (const auto& b : s.required_blocks) os << ' ' << b;
        os << '\n';
        for (const auto& o : s.outputs) os << "    -> " << o << '\n';
    }
    return os.str();
}

namespace {

const ScenarioInfo& find_scenario(const std::string& name)
{
    for (const auto& s : scenario_catalog())
        if (s.name == name) return s;
    std::string known;
    for (const auto& s : scenario_catalog()) known += (known.empty() ? "" : ", ") + s.name;
    throw ConfigError("config key 'scenario': unknown scenario '" + name + "' (expected one of " +
                      known + ")");
}

// ------------------------------------------------------------------ schema ---

std::string type_name(const json& j)
{
    if (j.is_null()) return "null";
    if (j.is_boolean()) return "boolean";
    if (j.is_number()) return "number";
    if (j.is_string()) return "string";
    if (j.is_array()) return "array";
    return "object";
}

class Block {
public:
    Block(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) fail(path_, "object", j_);
    }

    double number(const std::string& key, double def)
    {
        const json* v = take(key);
        if (!v) return def;
        if (!v->is_number()) fail(key, "number", *v);
        return v->get<double>();
    }

    std::size_t count(const std::string& key, std::size_t def)
    {
        const json* v = take(key);
        if (!v) return def;
        if (!v->is_number_integer() || v->get<long long>() < 0)
            fail(key, "non-negative integer", *v);
        return v->get<std::size_t>();
    }

    std::uint64_t u64(const std::string& key, std::uint64_t def)
    {
        const json* v = take(key);
        if (!v) return def;
        if (v->is_number_unsigned()) return v->get<std::uint64_t>();
        if (v->is_number_integer() && v->get<long long>() >= 0) return v->get<std::uint64_t>();
        fail(key, "unsigned 64-bit integer", *v);
    }

    bool boolean(const std::string& key, bool def)
    {
        const json* v = take(key);
        if (!v) return def;
        if (!v->is_boolean()) fail(key, "boolean", *v);
        return v->get<bool>();
    }

    std::string text(const std::string& key, const std::string& def)
    {
        const json* v = take(key);
        if (!v) return def;
        if (!v->is_string()) fail(key, "string", *v);
        return v->get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> def)
    {
        const json* v = take(key);
        if (!v) return def;
        if (!v->is_array()) fail(key, "array of numbers", *v);
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) fail(key, "array of numbers", *v);
            out.push_back(e.get<double>());
        }
        return out;
    }

    const json* child(const std::string& key) { return take(key); }

    // Rejects keys nobody asked for.
    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError("config key '" + qualified(it.key()) + "': unknown key");
    }

    std::string qualified(const std::string& key) const
    {
        return path_.empty() ? key : path_ + "." + key;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& expected, const json& got) const
    {
        const std::string name = key == path_ ? key : qualified(key);
        throw ConfigError("config key '" + name + "': expected " + expected + ", got " +
                          type_name(got));
    }

private:
    const json* take(const std::string& key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

MediumConfig parse_medium(Block b)
{
    MediumConfig m;
    m.cell_length_m = b.number("cell_length_m", m.cell_length_m);
    m.pump_power_mW = b.number("pump_power_mW", m.pump_power_mW);
    m.gain_coeff_slope = b.number("gain_coeff_slope", m.gain_coeff_slope);
    m.gain_coeff_unity_pump_mW = b.number("gain_coeff_unity_pump_mW", m.gain_coeff_unity_pump_mW);
    m.gain_sat_pump_mW = b.number("gain_sat_pump_mW", m.gain_sat_pump_mW);
    m.max_gain = b.number("max_gain", m.max_gain);
    m.probe_attenuation = b.number("probe_attenuation", m.probe_attenuation);
    m.conjugate_attenuation = b.number("conjugate_attenuation", m.conjugate_attenuation);
    m.background_gain = b.number("background_gain", m.background_gain);
    m.saturation_output_mW = b.number("saturation_output_mW", m.saturation_output_mW);
    m.saturation_sharpness = b.number("saturation_sharpness", m.saturation_sharpness);
    b.finish();
    m.validate();
    return m;
}

BandwidthModel parse_bandwidth(Block b)
{
    BandwidthModel m;
    m.eta = b.number("eta", m.eta);
    m.delta_raman_GHz = b.number("delta_raman_GHz", m.delta_raman_GHz);
    m.omega_pump_per_sqrt_mW = b.number("omega_pump_per_sqrt_mW", m.omega_pump_per_sqrt_mW);
    m.omega_probe_per_sqrt_pW = b.number("omega_probe_per_sqrt_pW", m.omega_probe_per_sqrt_pW);
    m.offset_MHz = b.number("offset_MHz", m.offset_MHz);
    m.s_probe = b.number("s_probe", m.s_probe);
    m.s_conjugate = b.number("s_conjugate", m.s_conjugate);
    m.pump_floor_MHz = b.number("pump_floor_MHz", m.pump_floor_MHz);
    m.probe_delay_offset_ns = b.number("probe_delay_offset_ns", m.probe_delay_offset_ns);
    m.conjugate_delay_offset_ns = b.number("conjugate_delay_offset_ns", m.conjugate_delay_offset_ns);
    m.phase_envelope_ratio = b.number("phase_envelope_ratio", m.phase_envelope_ratio);
    b.finish();
    m.validate();
    return m;
}

DetectorConfig parse_detector(Block b)
{
    DetectorConfig d;
    d.responsivity = b.number("responsivity", d.responsivity);
    d.noise_rms_W = b.number("noise_rms_W", d.noise_rms_W);
    d.background_W = b.number("background_W", d.background_W);
    d.shot_noise = b.boolean("shot_noise", d.shot_noise);
    d.lowpass_tau_ns = b.number("lowpass_tau_ns", d.lowpass_tau_ns);
    d.wavelength_nm = b.number("wavelength_nm", d.wavelength_nm);
    b.finish();
    d.validate();
    return d;
}

PhotonCalibration parse_calibration(Block b)
{
    PhotonCalibration c;
    c.wavelength_nm = b.number("wavelength_nm", c.wavelength_nm);
    c.pulse_fwhm_ns = b.number("pulse_fwhm_ns", c.pulse_fwhm_ns);
    c.energy_factor = b.number("energy_factor", c.energy_factor);
    b.finish();
    c.validate();
    return c;
}

GridConfig parse_grid(Block b)
{
    GridConfig g;
    g.dt_ns = b.number("dt_ns", g.dt_ns);
    g.samples = b.count("samples", g.samples);
    g.pulse_fwhm_ns = b.number("pulse_fwhm_ns", g.pulse_fwhm_ns);
    g.center_ns = b.number("center_ns", g.center_ns);
    b.finish();
    if (!(g.dt_ns > 0)) throw ConfigError("config key 'grid.dt_ns': must be > 0");
    if (g.samples < 64 || !is_power_of_two(g.samples))
        throw ConfigError("config key 'grid.samples': must be a power of two >= 64");
    if (!(g.pulse_fwhm_ns > 0)) throw ConfigError("config key 'grid.pulse_fwhm_ns': must be > 0");
    return g;
}

SweepConfig parse_sweep(Block b)
{
    SweepConfig s;
    s.start = b.number("start", NAN);
    s.stop = b.number("stop", NAN);
    s.points = b.count("points", 0);
    const std::string spacing = b.text("spacing", "linear");
    s.delay_jitter = b.number("delay_jitter", 0.0);
    b.finish();
    if (std::isnan(s.start)) throw ConfigError("config key 'sweep.start': required number missing");
    if (std::isnan(s.stop)) throw ConfigError("config key 'sweep.stop': required number missing");
    if (s.points < 2) throw ConfigError("config key 'sweep.points': must be >= 2");
    if (spacing == "log")
        s.log_spacing = true;
    else if (spacing != "linear")
        throw ConfigError("config key 'sweep.spacing': expected \"linear\" or \"log\"");
    if (s.log_spacing && !(s.start > 0 && s.stop > 0))
        throw ConfigError("config key 'sweep.start': log spacing needs positive bounds");
    if (!(s.delay_jitter >= 0)) throw ConfigError("config key 'sweep.delay_jitter': must be >= 0");
    return s;
}

ScenarioParams parse_params(Block b)
{
    ScenarioParams p;
    p.input_photons = b.number("input_photons", p.input_photons);
    p.input_pW = b.number("input_pW", p.input_pW);
    p.span_MHz = b.number("span_MHz", p.span_MHz);
    p.spectrum_points = b.count("spectrum_points", p.spectrum_points);
    p.traces = b.count("traces", p.traces);
    p.pilot_traces = b.count("pilot_traces", p.pilot_traces);
    p.candidates = b.numbers("candidates", p.candidates);
    p.delay_method = delay_method_from_string(b.text("delay_method", "peak"));
    p.linear_limit_photons = b.number("linear_limit_photons", p.linear_limit_photons);
    p.mode = mode_from_string(b.text("mode", "conjugate"));
    b.finish();
    if (!(p.input_photons >= 0)) throw ConfigError("config key 'params.input_photons': must be >= 0");
    if (!(p.input_pW >= 0)) throw ConfigError("config key 'params.input_pW': must be >= 0");
    if (!(p.span_MHz > 0)) throw ConfigError("config key 'params.span_MHz': must be > 0");
    if (p.spectrum_points < 2) throw ConfigError("config key 'params.spectrum_points': must be >= 2");
    if (p.traces < 1) throw ConfigError("config key 'params.traces': must be >= 1");
    if (p.pilot_traces < 2) throw ConfigError("config key 'params.pilot_traces': must be >= 2");
    if (p.candidates.size() < 2) throw ConfigError("config key 'params.candidates': need >= 2 values");
    for (double c : p.candidates)
        if (!(c > 0)) throw ConfigError("config key 'params.candidates': values must be > 0");
    return p;
}

}  // namespace

ScenarioConfig parse_config(std::string_view json_text)
{
    json root;
    try {
        root = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    Block top(root, "");
    ScenarioConfig cfg;
    cfg.config_sha256 = sha256_hex(json_text);

    const json* sc = top.child("scenario");
    if (!sc) throw ConfigError("config key 'scenario': required string missing");
    if (!sc->is_string()) top.fail("scenario", "string", *sc);
    cfg.scenario = sc->get<std::string>();
    const ScenarioInfo& info = find_scenario(cfg.scenario);

    cfg.seed = top.u64("seed", cfg.seed);
    cfg.output = top.text("output", cfg.output);

    auto required = [&](const std::string& name) {
        return std::find(info.required_blocks.begin(), info.required_blocks.end(), name) !=
               info.required_blocks.end();
    };
    auto block = [&](const std::string& name) -> const json* {
        const json* j = top.child(name);
        if (!j && required(name))
            throw ConfigError("config key '" + name + "': block required by scenario '" +
                              cfg.scenario + "' is missing");
        return j;
    };

    if (const json* j = block("medium")) cfg.medium = parse_medium(Block(*j, "medium"));
    if (const json* j = block("bandwidth")) cfg.bandwidth = parse_bandwidth(Block(*j, "bandwidth"));
    if (const json* j = block("detector")) cfg.detector = parse_detector(Block(*j, "detector"));
    if (const json* j = block("calibration"))
        cfg.calibration = parse_calibration(Block(*j, "calibration"));
    if (const json* j = block("grid")) cfg.grid = parse_grid(Block(*j, "grid"));
    if (const json* j = block("sweep")) cfg.sweep = parse_sweep(Block(*j, "sweep"));
    if (const json* j = top.child("params")) cfg.params = parse_params(Block(*j, "params"));
    top.finish();
    cfg.detector.rng_seed = cfg.seed;
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// ---------------------------------------------------------------- runners ---

namespace {

std::string fmt(double v) { return format_double(v); }

std::string yes_no(bool b) { return b ? "true" : "false"; }

Pulse reference_pulse(const ScenarioConfig& cfg, double peak_pW)
{
    // Zero-power inputs still need a shape; propagation is linear in power.
    const double peak_W = std::max(peak_pW, 1e-30) * 1e-12;
    return gaussian_pulse(peak_W, cfg.grid.pulse_fwhm_ns, cfg.grid.center_ns, cfg.grid.dt_ns,
                          cfg.grid.samples, Mode::probe);
}

std::mt19937_64 jitter_engine(std::uint64_t seed, std::uint32_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      stream, 0x4a495454u};
    return std::mt19937_64(seq);
}

const SweepConfig& sweep_of(const ScenarioConfig& cfg)
{
    if (!cfg.sweep) throw ConfigError("config key 'sweep': block required by scenario '" +
                                      cfg.scenario + "' is missing");
    return *cfg.sweep;
}

void append_fit(std::ostringstream& os, const std::string& title, const FitResult& r)
{
    os << "[" << title << "]\n" << r.report();
}

ScenarioOutput run_gain_sweep(const ScenarioConfig& cfg)
{
    const auto& m = cfg.medium;
    const auto pumps = sweep_of(cfg).values();
    CsvWriter w({"pump_mW", "gain_coeff_per_m", "gain", "log10_gain"});
    std::vector<double> px, gx, lg;
    for (double p : pumps) {
        const double g = gain_coefficient(m, p);
        const double G = intensity_gain(m, p);
        w.row({p, g, G, std::log10(G)});
        if (p <= m.gain_sat_pump_mW) {
            px.push_back(p);
            gx.push_back(g);
            lg.push_back(std::log(G));
        }
    }
    std::ostringstream rep;
    rep << "unity_gain_pump_mW: " << fmt(m.gain_coeff_unity_pump_mW)
        << "\ngain_at_unity_pump: " << fmt(intensity_gain(m, m.gain_coeff_unity_pump_mW))
        << "\nsaturation_pump_mW: " << fmt(m.gain_sat_pump_mW)
        << "\ngain_at_operating_pump: " << fmt(intensity_gain(m, m.pump_power_mW)) << '\n';
    if (px.size() >= 3) {
        const auto lr = linear_regression(px, lg);
        rep << "log_gain_affine_r2: " << fmt(lr.r_squared) << '\n';
        append_fit(rep, "gain coefficient vs pump (linear)", fit(ModelKind::linear, px, gx));
        std::vector<double> G(lg.size());
        for (std::size_t i = 0; i < lg.size(); ++i) G[i] = std::exp(lg[i]);
        try {
            append_fit(rep, "gain vs pump (exponential)", fit(ModelKind::exponential, px, G));
        } catch (const FitError& e) {
            rep << "[gain vs pump (exponential)]\nfailed: " << e.what() << '\n';
        }
    } else {
        rep << "log_gain_affine_r2: n/a (fewer than 3 points below saturation)\n";
    }
    return {{{"gain_sweep.csv", w.str()}, {"fit_report.txt", rep.str()}},
            "gain-sweep: " + std::to_string(pumps.size()) + " pump points"};
}

ScenarioOutput run_spectrum(const ScenarioConfig& cfg)
{
    const auto& p = cfg.params;
    std::vector<double> det(p.spectrum_points);
    for (std::size_t i = 0; i < det.size(); ++i)
        det[i] = -p.span_MHz + 2.0 * p.span_MHz * static_cast<double>(i) /
                                   static_cast<double>(det.size() - 1);
    ScenarioOutput out;
    std::ostringstream rep;
    rep << "input_pW: " << fmt(p.input_pW) << "\npump_mW: " << fmt(cfg.medium.pump_power_mW)
        << "\nnatural_linewidth_MHz: " << fmt(constants::rb85_natural_linewidth_MHz) << '\n';
    for (Mode mode : {Mode::probe, Mode::conjugate}) {
        const auto r = make_response(cfg.medium, cfg.bandwidth, mode, cfg.medium.pump_power_mW,
                                     p.input_pW);
        out.files.emplace_back("spectrum_" + std::string(to_string(mode)) + ".csv",
                               spectrum_csv(r, det));
        std::vector<double> gain(det.size());
        for (std::size_t i = 0; i < det.size(); ++i) gain[i] = intensity_at(r, det[i]);
        const auto f = fit(ModelKind::lorentzian, det, gain);
        append_fit(rep, std::string(to_string(mode)) + " gain profile (lorentzian)", f);
        rep << "model_fwhm_MHz: " << fmt(r.fwhm_MHz())
            << "\nnarrower_than_natural: " << yes_no(f.param("fwhm") < constants::rb85_natural_linewidth_MHz)
            << '\n';
    }
    out.files.emplace_back("fit_report.txt", rep.str());
    out.summary = "spectrum: " + std::to_string(det.size()) + " detunings per mode";
    return out;
}

ScenarioOutput run_propagate(const ScenarioConfig& cfg)
{
    const auto& p = cfg.params;
    const double pin = peak_power_from_photons(cfg.calibration, p.input_photons);
    const Pulse ref = reference_pulse(cfg, pin);
    ScenarioOutput out;
    out.files.emplace_back("pulse_reference.csv", pulse_csv(ref));
    CsvWriter w({"mode", "bandwidth_MHz", "peak_gain", "delay_model_ns", "delay_measured_ns",
                 "fractional_delay", "output_fwhm_ns", "kk_delay_ns"});
    std::ostringstream rep;
    rep << "input_photons: " << fmt(p.input_photons) << "\ninput_peak_pW: " << fmt(pin)
        << "\ndelay_method: " << to_string(p.delay_method) << '\n';
    for (Mode mode : {Mode::probe, Mode::conjugate}) {
        const auto r = make_response(cfg.medium, cfg.bandwidth, mode, cfg.medium.pump_power_mW, pin);
        const Pulse o = propagate(ref, r);
        const double d = measure_delay(ref, o, p.delay_method);
        const double width = measure_fwhm(o);
        const double kk = r.peak_gain() >= 1 ? kk_consistent_delay(r.peak_gain(), r.fwhm_MHz()) : 0.0;
        const double frac = d / cfg.grid.pulse_fwhm_ns;
        out.files.emplace_back("pulse_" + std::string(to_string(mode)) + ".csv", pulse_csv(o));
        w.row_cells({std::string(to_string(mode)), fmt(r.fwhm_MHz()), fmt(r.peak_gain()),
                     fmt(r.group_delay_ns()), fmt(d), fmt(frac), fmt(width), fmt(kk)});
        rep << "[" << to_string(mode) << "]\n"
            << "  bandwidth_MHz: " << fmt(r.fwhm_MHz()) << '\n'
            << "  delay_inverse_bandwidth_ns: " << fmt(delay_from_bandwidth(r.fwhm_MHz())) << '\n'
            << "  delay_model_ns: " << fmt(r.group_delay_ns()) << '\n'
            << "  delay_measured_ns: " << fmt(d) << '\n'
            << "  fractional_delay: " << fmt(frac) << '\n'
            << "  kk_lorentzian_delay_ns: " << fmt(kk) << '\n'
            << "  kk_over_inverse_bandwidth: " << fmt(kk / delay_from_bandwidth(r.fwhm_MHz()))
            << '\n';
    }
    rep << "note: delays follow 1/Gamma; a causal Lorentzian gain line with the same peak gain "
           "would delay by ln(G0)/(2 pi Gamma), the kk_lorentzian_delay_ns value above.\n";
    out.files.emplace_back("delays.csv", w.str());
    out.files.emplace_back("report.txt", rep.str());
    out.summary = "propagate: probe and conjugate pulses at " + fmt(p.input_photons) + " photons";
    return out;
}

ScenarioOutput run_delay_vs_photon(const ScenarioConfig& cfg)
{
    const auto& sw = sweep_of(cfg);
    const auto powers = sw.values();
    for (double pw : powers)
        if (!(pw >= 0)) throw DomainError("delay-vs-photon sweep needs input powers >= 0");
    auto rng = jitter_engine(cfg.seed, 4);
    std::normal_distribution<double> normal(0.0, 1.0);

    CsvWriter w({"mode", "input_pW", "photons", "bandwidth_MHz", "bandwidth_observed_MHz",
                 "delay_model_ns", "delay_measured_ns", "delay_observed_ns"});
    std::ostringstream rep;
    rep << "delay_jitter: " << fmt(sw.delay_jitter) << "\nseed: " << cfg.seed << '\n';
    std::map<Mode, double> fitted_s;

    for (Mode mode : {Mode::probe, Mode::conjugate}) {
        std::vector<double> bw_obs, delay_disp_us;
        const double offset = cfg.bandwidth.delay_offset_ns(mode);
        for (double pw : powers) {
            const Pulse ref = reference_pulse(cfg, pw);
            const auto r = make_response(cfg.medium, cfg.bandwidth, mode, cfg.medium.pump_power_mW, pw);
            const double measured = measure_delay(ref, propagate(ref, r), cfg.params.delay_method);
            const double jb = 1.0 + sw.delay_jitter * normal(rng);
            const double jd = 1.0 + sw.delay_jitter * normal(rng);
            const double bw = r.fwhm_MHz() * jb;
            const double observed = measured * jd;
            bw_obs.push_back(bw);
            delay_disp_us.push_back((observed - offset) * 1e-3);
            w.row_cells({std::string(to_string(mode)), fmt(pw),
                         fmt(photons_from_peak_power(cfg.calibration, pw)), fmt(r.fwhm_MHz()), fmt(bw),
                         fmt(r.group_delay_ns()), fmt(measured), fmt(observed)});
        }
        const double s_true = cfg.bandwidth.slope(mode), z_true = cfg.bandwidth.offset_MHz;
        // Jitter is relative, so both fits weight by 1 / y^2.
        auto relative = [](const std::vector<double>& ys) {
            std::vector<double> w(ys.size());
            for (std::size_t i = 0; i < ys.size(); ++i) w[i] = 1.0 / (ys[i] * ys[i]);
            return w;
        };
        const auto wb = relative(bw_obs), wd = relative(delay_disp_us);
        const auto fb = fit(ModelKind::sqrt_law, powers, bw_obs, std::span<const double>(wb));
        const auto fd = fit(ModelKind::inv_sqrt_law, powers, delay_disp_us, std::span<const double>(wd));
        fitted_s[mode] = fd.param("s");
        const std::string name(to_string(mode));
        append_fit(rep, name + " bandwidth vs input (sqrt_law, MHz)", fb);
        append_fit(rep, name + " dispersive delay vs input (inv_sqrt_law, 1/us)", fd);
        auto within = [](const FitResult& f, const char* k, double truth) {
            return std::abs(f.param(k) - truth) <= 2.0 * f.sigma(k);
        };
        rep << name << "_generating_s: " << fmt(s_true) << '\n'
            << name << "_generating_z: " << fmt(z_true) << '\n'
            << name << "_bandwidth_fit_within_2sigma: "
            << yes_no(within(fb, "s", s_true) && within(fb, "z", z_true)) << '\n'
            << name << "_delay_fit_within_2sigma: "
            << yes_no(within(fd, "s", s_true) && within(fd, "z", z_true)) << '\n';
    }
    rep << "conjugate_more_sensitive: " << yes_no(fitted_s[Mode::conjugate] > fitted_s[Mode::probe])
        << '\n';
    return {{{"delay_vs_photon.csv", w.str()}, {"fit_report.txt", rep.str()}},
            "delay-vs-photon: " + std::to_string(powers.size()) + " input powers per mode"};
}

ScenarioOutput run_delay_vs_pump(const ScenarioConfig& cfg)
{
    const auto pumps = sweep_of(cfg).values();
    const double pin = peak_power_from_photons(cfg.calibration, cfg.params.input_photons);
    const Pulse ref = reference_pulse(cfg, pin);
    CsvWriter w({"mode", "pump_mW", "bandwidth_MHz", "delay_model_ns", "delay_measured_ns"});
    std::ostringstream rep;
    rep << "input_photons: " << fmt(cfg.params.input_photons) << '\n';
    for (Mode mode : {Mode::probe, Mode::conjugate}) {
        std::vector<double> bws, delays;
        for (double p : pumps) {
            const auto r = make_response(cfg.medium, cfg.bandwidth, mode, p, pin,
                                         BandwidthLaw::pump_power);
            const double d = measure_delay(ref, propagate(ref, r), cfg.params.delay_method);
            bws.push_back(r.fwhm_MHz());
            delays.push_back(d);
            w.row_cells({std::string(to_string(mode)), fmt(p), fmt(r.fwhm_MHz()),
                         fmt(r.group_delay_ns()), fmt(d)});
        }
        bool decreasing = true;
        for (std::size_t i = 1; i < delays.size(); ++i) decreasing &= delays[i] < delays[i - 1];
        const auto lr = linear_regression(pumps, bws);
        const std::string name(to_string(mode));
        rep << name << "_bandwidth_slope_MHz_per_mW: " << fmt(lr.slope) << '\n'
            << name << "_bandwidth_intercept_MHz: " << fmt(lr.intercept) << '\n'
            << name << "_bandwidth_r2: " << fmt(lr.r_squared) << '\n'
            << name << "_delay_strictly_decreasing: " << yes_no(decreasing) << '\n';
    }
    return {{{"delay_vs_pump.csv", w.str()}, {"fit_report.txt", rep.str()}},
            "delay-vs-pump: " + std::to_string(pumps.size()) + " pump points per mode"};
}

// Ideal (noise-free) detector input for a mean photon number, Fig. 2 regime.
Pulse gain_regime_output(const ScenarioConfig& cfg, double photons)
{
    const double pin = peak_power_from_photons(cfg.calibration, photons);
    const auto r = make_response(cfg.medium, cfg.bandwidth, cfg.params.mode,
                                 cfg.medium.pump_power_mW, pin, BandwidthLaw::pump_power);
    return propagate(reference_pulse(cfg, pin), r);
}

ScenarioOutput run_linearity(const ScenarioConfig& cfg)
{
    const auto photons = sweep_of(cfg).values();
    CsvWriter w({"photons", "input_pW", "peak_gain", "output_peak_W", "output_peak_per_photon_W"});
    std::vector<double> lx, ly, per;
    for (double n : photons) {
        if (!(n > 0)) throw DomainError("linearity sweep needs photon numbers > 0");
        const double pin = peak_power_from_photons(cfg.calibration, n);
        const auto r = make_response(cfg.medium, cfg.bandwidth, cfg.params.mode,
                                     cfg.medium.pump_power_mW, pin, BandwidthLaw::pump_power);
        const double peak = propagate(reference_pulse(cfg, pin), r).peak_power_W();
        w.row({n, pin, r.peak_gain(), peak, peak / n});
        per.push_back(peak / n);
        if (n <= cfg.params.linear_limit_photons) {
            lx.push_back(std::log(n));
            ly.push_back(std::log(peak));
        }
    }
    std::ostringstream rep;
    rep << "mode: " << to_string(cfg.params.mode) << "\nlinear_limit_photons: "
        << fmt(cfg.params.linear_limit_photons) << '\n';
    if (lx.size() >= 2) rep << "loglog_slope_linear_regime: " << fmt(linear_regression(lx, ly).slope) << '\n';
    double departure = 0;
    for (std::size_t i = 0; i < photons.size(); ++i)
        if (photons[i] > cfg.params.linear_limit_photons)
            departure = std::max(departure, std::abs(per[i] / per.front() - 1.0));
    rep << "max_departure_beyond_limit: " << fmt(departure) << '\n';
    return {{{"linearity.csv", w.str()}, {"fit_report.txt", rep.str()}},
            "linearity: " + std::to_string(photons.size()) + " photon numbers"};
}

ScenarioOutput run_snr_averaging(const ScenarioConfig& cfg)
{
    const auto ms = sweep_of(cfg).values();
    const Pulse ideal = gain_regime_output(cfg, cfg.params.input_photons);
    CsvWriter w({"N_photons", "M", "peak_mean", "peak_std", "snr", "seed"});
    std::vector<double> lm, ls;
    std::ostringstream rep;
    for (double mv : ms) {
        const auto m = static_cast<std::size_t>(std::llround(mv));
        if (m < 1) throw ConfigError("config key 'sweep.start': trace counts must be >= 1");
        const auto e = average_traces(ideal, cfg.detector, m, cfg.threads);
        w.row_cells({fmt(cfg.params.input_photons), std::to_string(m), fmt(e.peak), fmt(e.guard_std),
                     fmt(e.snr), std::to_string(cfg.seed)});
        if (e.guard_std > 0) {
            lm.push_back(std::log(static_cast<double>(m)));
            ls.push_back(std::log(e.guard_std));
        }
        rep << "M=" << m << " snr=" << fmt(e.snr) << '\n';
    }
    if (lm.size() >= 2)
        rep << "guard_std_loglog_slope: " << fmt(linear_regression(lm, ls).slope) << '\n';
    return {{{"snr_averaging.csv", w.str()}, {"report.txt", rep.str()}},
            "snr-averaging: " + std::to_string(ms.size()) + " averaging depths"};
}

ScenarioOutput run_resolve_n(const ScenarioConfig& cfg)
{
    const auto& p = cfg.params;
    const auto report = resolve_photon_number(
        cfg.detector, [&](double n) { return gain_regime_output(cfg, n); }, p.candidates, p.traces,
        p.pilot_traces);
    std::ostringstream rep;
    rep << "traces: " << p.traces << "\nmin_traces_resolvable: " << report.min_traces_resolvable
        << "\nresolvable_at_traces: " << yes_no(report.resolvable_at_requested) << '\n';
    const auto& first = report.entries.front();
    const auto& last = report.entries.back();
    rep << "peak_ratio_last_first: " << fmt(last.ideal_peak / first.ideal_peak)
        << "\nphoton_ratio_last_first: " << fmt(last.photons / first.photons) << '\n';
    return {{{"ensemble_summary.csv", ensemble_summary_csv(report)}, {"report.txt", rep.str()}},
            "resolve-n: " + std::to_string(report.entries.size()) + " candidates, min M " +
                std::to_string(report.min_traces_resolvable)};
}

}  // namespace

ScenarioOutput run_scenario(const ScenarioConfig& cfg)
{
    const std::string& s = cfg.scenario;
    auto context = [&](auto&& fn) -> ScenarioOutput {
        try {
            return fn(cfg);
        } catch (const ConfigError&) {
            throw;
        } catch (const DomainError& e) {
            throw DomainError("scenario '" + s + "': " + e.what());
        } catch (const PropagationError& e) {
            throw PropagationError("scenario '" + s + "': " + e.what());
        } catch (const MeasurementError& e) {
            throw MeasurementError("scenario '" + s + "': " + e.what());
        } catch (const FitError& e) {
            throw FitError("scenario '" + s + "': " + e.what());
        }
    };
    find_scenario(s);
    if (s == "gain-sweep") return context(run_gain_sweep);
    if (s == "spectrum") return context(run_spectrum);
    if (s == "propagate") return context(run_propagate);
    if (s == "delay-vs-photon") return context(run_delay_vs_photon);
    if (s == "delay-vs-pump") return context(run_delay_vs_pump);
    if (s == "linearity") return context(run_linearity);
    if (s == "snr-averaging") return context(run_snr_averaging);
    return context(run_resolve_n);
}

std::string manifest_json(const ScenarioConfig& cfg, const ScenarioOutput& out)
{
    json files = json::array();
    for (const auto& [name, body] : out.files)
        files.push_back({{"name", name}, {"sha256", sha256_hex(body)}});
    json m{{"artifact", "fwmsim"},
           {"version", std::string(artifact_version())},
           {"scenario", cfg.scenario},
           {"seed", cfg.seed},
           {"config_sha256", cfg.config_sha256},
           {"outputs", files}};
    return m.dump(2) + "\n";
}

void write_outputs(const ScenarioConfig& cfg, const ScenarioOutput& out,
                   const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> all = out.files;
    all.emplace_back("manifest.json", manifest_json(cfg, out));

    std::vector<std::pair<fs::path, fs::path>> staged;
    try {
        for (const auto& [name, body] : all) {
            const fs::path final_path = dir / name;
            fs::path tmp = final_path;
            tmp += ".tmp";
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            f.write(body.data(), static_cast<std::streamsize>(body.size()));
            f.close();
            if (!f) throw Error("failed writing " + tmp.string());
            staged.emplace_back(tmp, final_path);
        }
    } catch (...) {
        for (const auto& [tmp, final_path] : staged) fs::remove(tmp);
        throw;
    }
    for (const auto& [tmp, final_path] : staged) fs::rename(tmp, final_path);
}

}  // namespace fwm
