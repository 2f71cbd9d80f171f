#include "fwm/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "fwm/constants.hpp"
#include "fwm/csv.hpp"
#include "fwm/errors.hpp"

namespace fwm {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

Pulse::Pulse(std::vector<double> samples, double dt_ns, double t0_ns, Mode mode,
             SampleDomain domain, double nominal_fwhm_ns)
    : samples_(std::move(samples)), dt_ns_(dt_ns), t0_ns_(t0_ns), mode_(mode), domain_(domain),
      nominal_fwhm_ns_(nominal_fwhm_ns)
{
    if (!(dt_ns_ > 0)) throw ConfigError("pulse dt_ns must be > 0");
    if (samples_.size() < 64 || !is_power_of_two(samples_.size()))
        throw ConfigError("pulse sample count must be a power of two >= 64, got " +
                          std::to_string(samples_.size()));
    if (domain_ == SampleDomain::power) {
        for (double v : samples_)
            if (!(v >= 0)) throw ConfigError("power-domain pulse has a negative or NaN sample");
    }
    peak_ = *std::max_element(samples_.begin(), samples_.end());
}

std::size_t Pulse::argmax() const
{
    return static_cast<std::size_t>(std::max_element(samples_.begin(), samples_.end()) -
                                    samples_.begin());
}

double Pulse::energy_J() const
{
    return std::accumulate(samples_.begin(), samples_.end(), 0.0) * dt_ns_ * 1e-9;
}

bool Pulse::same_grid(const Pulse& other) const
{
    return size() == other.size() && dt_ns_ == other.dt_ns_;
}

Pulse Pulse::scaled(double factor) const
{
    std::vector<double> s(samples_);
    for (double& v : s) v *= factor;
    const auto dom = factor < 0 ? SampleDomain::detected : domain_;
    return Pulse(std::move(s), dt_ns_, t0_ns_, mode_, dom, nominal_fwhm_ns_);
}

std::size_t guard_length(std::size_t n) { return std::max<std::size_t>(1, n / 20); }

double guard_energy_fraction(const Pulse& p)
{
    const auto s = p.samples();
    const auto g = guard_length(s.size());
    double total = 0, guard = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double a = std::abs(s[i]);
        total += a;
        if (i < g || i >= s.size() - g) guard += a;
    }
    return total > 0 ? guard / total : 0.0;
}

double guard_baseline(const Pulse& p)
{
    const auto s = p.samples();
    const auto g = guard_length(s.size());
    std::vector<double> v(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(g));
    v.insert(v.end(), s.end() - static_cast<std::ptrdiff_t>(g), s.end());
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

Pulse gaussian_pulse(double peak_power_W, double fwhm_ns, double center_ns, double dt_ns,
                     std::size_t n_samples, Mode mode, double t0_ns)
{
    if (!(peak_power_W > 0) || !(fwhm_ns > 0) || !(dt_ns > 0))
        throw ConfigError("gaussian_pulse needs positive peak, fwhm and dt");
    if (n_samples < 64 || !is_power_of_two(n_samples))
        throw ConfigError("gaussian_pulse sample count must be a power of two >= 64");
    std::vector<double> s(n_samples);
    const double k = 4.0 * std::log(2.0) / (fwhm_ns * fwhm_ns);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double t = t0_ns + static_cast<double>(i) * dt_ns - center_ns;
        s[i] = peak_power_W * std::exp(-k * t * t);
    }
    Pulse p(std::move(s), dt_ns, t0_ns, mode, SampleDomain::power, fwhm_ns);
    if (guard_energy_fraction(p) >= input_guard_limit)
        throw ConfigError("pulse window too short: more than 1e-6 of the energy lies in the "
                          "guard bands; lengthen the grid or move the pulse center");
    return p;
}

void PhotonCalibration::validate() const
{
    if (!(wavelength_nm > 0)) throw ConfigError("calibration.wavelength_nm must be > 0");
    if (!(pulse_fwhm_ns > 0)) throw ConfigError("calibration.pulse_fwhm_ns must be > 0");
    if (!(energy_factor > 0)) throw ConfigError("calibration.energy_factor must be > 0");
}

double PhotonCalibration::photon_energy_J() const
{
    return constants::planck_J_s * constants::speed_of_light_m_s / (wavelength_nm * 1e-9);
}

double photons_from_peak_power(const PhotonCalibration& cal, double peak_power_pW)
{
    if (!(peak_power_pW >= 0)) throw DomainError("peak power must be >= 0");
    const double energy = cal.energy_factor * peak_power_pW * 1e-12 * cal.pulse_fwhm_ns * 1e-9;
    return energy / cal.photon_energy_J();
}

double peak_power_from_photons(const PhotonCalibration& cal, double photons)
{
    if (!(photons >= 0)) throw DomainError("photon number must be >= 0");
    const double energy = photons * cal.photon_energy_J();
    return energy / (cal.energy_factor * cal.pulse_fwhm_ns * 1e-9) * 1e12;
}

namespace detail {

Pulse propagate_spectral(const Pulse& input, const SpectralResponse& r, double extra_gain)
{
    const std::size_t n = input.size();
    std::vector<std::complex<double>> field(n), spectrum;
    const auto s = input.samples();
    for (std::size_t i = 0; i < n; ++i) field[i] = std::sqrt(std::max(s[i], 0.0));

    Eigen::FFT<double> fft;
    fft.fwd(spectrum, field);
    // dt in ns -> bin spacing in GHz; times 1e3 for MHz.
    const double df_MHz = 1e3 / (static_cast<double>(n) * input.dt_ns());
    const double center = r.center_detuning_MHz();
    for (std::size_t k = 0; k < n; ++k) {
        const auto kk = static_cast<double>(k);
        const double f = (k < n / 2 ? kk : kk - static_cast<double>(n)) * df_MHz;
        spectrum[k] *= amplitude_at(r, center - f);
    }
    fft.inv(field, spectrum);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::norm(field[i]) * extra_gain;
    return Pulse(std::move(out), input.dt_ns(), input.t0_ns(), r.mode(), SampleDomain::power);
}

}  // namespace detail

Pulse propagate(const Pulse& input, const SpectralResponse& r, double extra_gain)
{
    if (input.domain() != SampleDomain::power)
        throw ConfigError("propagate needs a power-domain pulse");
    if (!(extra_gain >= 0)) throw DomainError("extra gain must be >= 0");
    if (guard_energy_fraction(input) >= input_guard_limit)
        throw ConfigError("input pulse violates the guard-band invariant");
    if (r.is_flat()) {
        const double g = r.peak_gain() * extra_gain;
        std::vector<double> out(input.samples().begin(), input.samples().end());
        for (double& v : out) v *= g;
        return Pulse(std::move(out), input.dt_ns(), input.t0_ns(), r.mode());
    }
    Pulse out = detail::propagate_spectral(input, r, extra_gain);
    const double frac = guard_energy_fraction(out);
    if (frac > output_guard_limit)
        throw PropagationError("propagated pulse wraps around the window (guard-band energy " +
                               format_double(frac) + "); use a longer grid");
    return out;
}

std::string_view to_string(DelayMethod m)
{
    switch (m) {
    case DelayMethod::peak: return "peak";
    case DelayMethod::centroid: return "centroid";
    case DelayMethod::xcorr: return "xcorr";
    }
    return "?";
}

DelayMethod delay_method_from_string(std::string_view name)
{
    if (name == "peak") return DelayMethod::peak;
    if (name == "centroid") return DelayMethod::centroid;
    if (name == "xcorr") return DelayMethod::xcorr;
    throw ConfigError("unknown delay method '" + std::string(name) +
                      "' (expected peak|centroid|xcorr)");
}

namespace {

// Vertex offset of the parabola through three equally spaced points.
double parabolic_offset(double y0, double y1, double y2)
{
    const double denom = y0 - 2.0 * y1 + y2;
    if (denom == 0.0) return 0.0;
    return std::clamp(0.5 * (y0 - y2) / denom, -0.5, 0.5);
}

void require_peak(const Pulse& p, const char* which)
{
    const double b = guard_baseline(p);
    const double height = p.peak_power_W() - b;
    const double scale = std::max(std::abs(p.peak_power_W()), std::abs(b));
    if (!(height > 1e-12 * scale) || scale == 0.0)
        throw MeasurementError(std::string(which) + " pulse is flat: no unique peak");
}

double peak_time(const Pulse& p)
{
    const auto s = p.samples();
    const std::size_t i = p.argmax();
    double off = 0.0;
    if (i > 0 && i + 1 < s.size()) off = parabolic_offset(s[i - 1], s[i], s[i + 1]);
    return p.time_ns(i) + off * p.dt_ns();
}

double centroid_time(const Pulse& p)
{
    const double b = guard_baseline(p);
    const auto s = p.samples();
    double m0 = 0, m1 = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double w = s[i] - b;
        m0 += w;
        m1 += w * p.time_ns(i);
    }
    if (m0 == 0.0) throw MeasurementError("centroid undefined for zero-area pulse");
    return m1 / m0;
}

double xcorr_lag(const Pulse& ref, const Pulse& del)
{
    const std::size_t n = ref.size();
    const double br = guard_baseline(ref), bd = guard_baseline(del);
    std::vector<std::complex<double>> a(n), b(n), fa, fb, c;
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = ref[i] - br;
        b[i] = del[i] - bd;
    }
    Eigen::FFT<double> fft;
    fft.fwd(fa, a);
    fft.fwd(fb, b);
    for (std::size_t k = 0; k < n; ++k) fa[k] = std::conj(fa[k]) * fb[k];
    fft.inv(c, fa);
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (c[k].real() > c[best].real()) best = k;
    const double y0 = c[(best + n - 1) % n].real();
    const double y1 = c[best].real();
    const double y2 = c[(best + 1) % n].real();
    const double lag = best < n / 2 ? static_cast<double>(best)
                                    : static_cast<double>(best) - static_cast<double>(n);
    return (lag + parabolic_offset(y0, y1, y2)) * ref.dt_ns();
}

}  // namespace

double measure_delay(const Pulse& reference, const Pulse& delayed, DelayMethod method)
{
    if (!reference.same_grid(delayed))
        throw MeasurementError("delay measurement needs identical grids");
    require_peak(reference, "reference");
    require_peak(delayed, "delayed");
    switch (method) {
    case DelayMethod::peak: return peak_time(delayed) - peak_time(reference);
    case DelayMethod::centroid: return centroid_time(delayed) - centroid_time(reference);
    case DelayMethod::xcorr:
        return xcorr_lag(reference, delayed) + (delayed.t0_ns() - reference.t0_ns());
    }
    throw MeasurementError("unknown delay method");
}

double measure_fwhm(const Pulse& p)
{
    require_peak(p, "measured");
    const auto s = p.samples();
    const double base = guard_baseline(p);
    const double half = base + 0.5 * (p.peak_power_W() - base);

    struct Run {
        std::size_t first, last;
    };
    std::vector<Run> runs;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < half) continue;
        if (!runs.empty() && runs.back().last + 1 == i)
            runs.back().last = i;
        else
            runs.push_back({i, i});
    }

    auto width = [&](const Run& r) {
        if (r.first == 0 || r.last + 1 >= s.size())
            throw MeasurementError("pulse reaches the window edge above half maximum");
        const double left = static_cast<double>(r.first) -
                            (s[r.first] - half) / (s[r.first] - s[r.first - 1]);
        const double right = static_cast<double>(r.last) +
                             (s[r.last] - half) / (s[r.last] - s[r.last + 1]);
        return (right - left) * p.dt_ns();
    };

    if (runs.size() > 1) {
        std::vector<double> widths;
        std::string msg = "pulse is multi-modal; candidate widths (ns):";
        for (const auto& r : runs) {
            widths.push_back(width(r));
            msg += " " + format_double(widths.back());
        }
        throw AmbiguityError(msg, std::move(widths));
    }
    return width(runs.front());
}

std::string pulse_csv(const Pulse& p)
{
    CsvWriter w({"t_ns", "power_W"});
    for (std::size_t i = 0; i < p.size(); ++i) w.row({p.time_ns(i), p[i]});
    return w.str();
}

Pulse pulse_from_csv(std::string_view text, Mode mode)
{
    const auto table = parse_csv(text);
    const auto t = table.numeric_column("t_ns");
    auto power = table.numeric_column("power_W");
    if (t.size() < 2) throw ConfigError("pulse CSV needs at least two rows");
    const double t0 = t[0];
    const double dt = t[1] - t[0];
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double expect = t0 + static_cast<double>(i) * dt;
        if (std::abs(t[i] - expect) > 1e-9 * (std::abs(expect) + dt))
            throw ConfigError("pulse CSV time column is not uniformly sampled");
    }
    const bool negative = std::any_of(power.begin(), power.end(), [](double v) { return v < 0; });
    return Pulse(std::move(power), dt, t0, mode,
                 negative ? SampleDomain::detected : SampleDomain::power);
}

}  // namespace fwm
