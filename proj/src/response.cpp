#include "fwm/response.hpp"

#include <cmath>

#include "fwm/constants.hpp"
#include "fwm/csv.hpp"
#include "fwm/errors.hpp"

namespace fwm {

SpectralResponse::SpectralResponse(const Params& p) : p_(p)
{
    if (!(p_.fwhm_MHz > 0)) throw DomainError("response fwhm must be > 0");
    if (!(p_.peak_gain >= 0)) throw DomainError("response peak gain must be >= 0");
    if (!(p_.group_delay_ns >= 0)) throw DomainError("response group delay must be >= 0");
    if (!(p_.background_gain >= 0)) throw DomainError("response background gain must be >= 0");
    if (p_.phase_envelope_fwhm_MHz <= 0) p_.phase_envelope_fwhm_MHz = 20.0 * p_.fwhm_MHz;
}

SpectralResponse SpectralResponse::unity(Mode mode)
{
    Params p;
    p.peak_gain = 1.0;
    p.background_gain = 1.0;
    p.group_delay_ns = 0.0;
    p.mode = mode;
    return SpectralResponse(p);
}

namespace {

double lorentz(double x, double fwhm)
{
    const double u = 2.0 * x / fwhm;
    return 1.0 / (1.0 + u * u);
}

}  // namespace

double intensity_at(const SpectralResponse& r, double detuning_MHz)
{
    const double x = detuning_MHz - r.center_detuning_MHz();
    const double bg = r.background_gain();
    return bg + (r.peak_gain() - bg) * lorentz(x, r.fwhm_MHz());
}

std::complex<double> amplitude_at(const SpectralResponse& r, double detuning_MHz)
{
    const double x = detuning_MHz - r.center_detuning_MHz();
    const double magnitude = std::sqrt(intensity_at(r, detuning_MHz));
    // delay in ns times detuning in MHz -> 1e-3 cycles
    const double phase = 2.0 * constants::pi * r.group_delay_ns() * 1e-3 * x *
                         lorentz(x, r.phase_envelope_fwhm_MHz());
    return std::polar(magnitude, phase);
}

SpectralResponse make_response(const MediumConfig& cfg, const BandwidthModel& bm, Mode mode,
                               double pump_mW, double input_pW, BandwidthLaw law)
{
    if (!(pump_mW >= 0) || !(input_pW >= 0)) throw DomainError("powers must be >= 0");
    SpectralResponse::Params p;
    p.mode = mode;
    p.fwhm_MHz = law == BandwidthLaw::input_power ? bandwidth_vs_input(bm, mode, input_pW)
                                                  : bandwidth_vs_pump(bm, pump_mW);
    p.peak_gain = intensity_gain(cfg, pump_mW) * cfg.attenuation(mode) *
                  saturation_compression(cfg, pump_mW, input_pW);
    p.group_delay_ns = delay_from_bandwidth(p.fwhm_MHz) + bm.delay_offset_ns(mode);
    if (p.group_delay_ns < 0)
        throw DomainError("delay offset for " + std::string(to_string(mode)) +
                          " makes the group delay negative");
    p.background_gain = cfg.background_gain;
    p.phase_envelope_fwhm_MHz = bm.phase_envelope_ratio * p.fwhm_MHz;
    return SpectralResponse(p);
}

double kk_consistent_delay(double peak_gain, double fwhm_MHz)
{
    if (!(peak_gain >= 1)) throw DomainError("KK delay needs peak gain >= 1");
    if (!(fwhm_MHz > 0)) throw DomainError("KK delay needs fwhm > 0");
    return std::log(peak_gain) / (2.0 * constants::pi * fwhm_MHz) * constants::ns_per_inverse_MHz;
}

BandwidthModel calibrate_delay_offsets(BandwidthModel bm, double input_pW, double probe_target_ns,
                                       double conjugate_target_ns)
{
    bm.probe_delay_offset_ns = probe_target_ns - delay_vs_input(bm, Mode::probe, input_pW);
    bm.conjugate_delay_offset_ns =
        conjugate_target_ns - delay_vs_input(bm, Mode::conjugate, input_pW);
    return bm;
}

std::string spectrum_csv(const SpectralResponse& r, std::span<const double> detunings_MHz)
{
    CsvWriter w({"detuning_MHz", "gain_dB", "phase_rad"});
    for (double d : detunings_MHz) {
        const auto a = amplitude_at(r, d);
        w.row({d, 10.0 * std::log10(std::norm(a)), std::arg(a)});
    }
    return w.str();
}

}  // namespace fwm
