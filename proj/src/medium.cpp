#include "fwm/medium.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fwm/constants.hpp"
#include "fwm/errors.hpp"

namespace fwm {

std::string_view to_string(Mode m) { return m == Mode::probe ? "probe" : "conjugate"; }

Mode mode_from_string(std::string_view name)
{
    if (name == "probe") return Mode::probe;
    if (name == "conjugate") return Mode::conjugate;
    throw ConfigError("unknown mode '" + std::string(name) + "' (expected probe|conjugate)");
}

namespace {

void require(bool ok, const char* what)
{
    if (!ok) throw ConfigError(what);
}

}  // namespace

void MediumConfig::validate() const
{
    require(cell_length_m > 0, "medium.cell_length_m must be > 0");
    require(pump_power_mW >= 0, "medium.pump_power_mW must be >= 0");
    require(gain_coeff_slope > 0, "medium.gain_coeff_slope must be > 0");
    require(gain_coeff_unity_pump_mW >= 0 && gain_sat_pump_mW >= 0,
            "medium pump powers must be >= 0");
    require(gain_coeff_unity_pump_mW < gain_sat_pump_mW,
            "medium.gain_coeff_unity_pump_mW must be < gain_sat_pump_mW");
    require(max_gain >= 1, "medium.max_gain must be >= 1");
    require(probe_attenuation > 0 && probe_attenuation <= 1,
            "medium.probe_attenuation must be in (0, 1]");
    require(conjugate_attenuation > 0 && conjugate_attenuation <= 1,
            "medium.conjugate_attenuation must be in (0, 1]");
    require(background_gain >= 0, "medium.background_gain must be >= 0");
    require(saturation_output_mW > 0, "medium.saturation_output_mW must be > 0");
    require(saturation_sharpness > 0, "medium.saturation_sharpness must be > 0");
}

double MediumConfig::attenuation(Mode m) const
{
    return m == Mode::probe ? probe_attenuation : conjugate_attenuation;
}

double calibrate_gain_slope(const MediumConfig& cfg, double target_gain)
{
    if (target_gain <= 1) throw DomainError("target gain must be > 1");
    const double span = cfg.gain_sat_pump_mW - cfg.gain_coeff_unity_pump_mW;
    if (span <= 0 || cfg.cell_length_m <= 0) throw ConfigError("cannot calibrate gain slope");
    return std::log(target_gain) / (cfg.cell_length_m * span);
}

double gain_coefficient(const MediumConfig& cfg, double pump_mW)
{
    if (pump_mW < 0) throw DomainError("pump power must be >= 0");
    const double p = std::min(pump_mW, cfg.gain_sat_pump_mW);
    return cfg.gain_coeff_slope * (cfg.gain_coeff_unity_pump_mW - p);
}

double intensity_gain(const MediumConfig& cfg, double pump_mW)
{
    const double g = gain_coefficient(cfg, pump_mW);
    if (g == 0.0) return 1.0;
    return std::min(std::exp(-g * cfg.cell_length_m), cfg.max_gain);
}

double saturation_compression(const MediumConfig& cfg, double pump_mW, double input_pW)
{
    if (input_pW < 0) throw DomainError("input power must be >= 0");
    const double out_mW = intensity_gain(cfg, pump_mW) * input_pW * 1e-9;
    const double p = cfg.saturation_sharpness;
    return std::pow(1.0 + std::pow(out_mW / cfg.saturation_output_mW, p), -1.0 / p);
}

void BandwidthModel::validate() const
{
    require(eta > 0, "bandwidth.eta must be > 0");
    require(delta_raman_GHz != 0, "bandwidth.delta_raman_GHz must be nonzero");
    require(omega_pump_per_sqrt_mW > 0, "bandwidth.omega_pump_per_sqrt_mW must be > 0");
    require(omega_probe_per_sqrt_pW > 0, "bandwidth.omega_probe_per_sqrt_pW must be > 0");
    require(offset_MHz > 0, "bandwidth.offset_MHz must be > 0");
    require(s_probe > 0, "bandwidth.s_probe must be > 0");
    require(s_conjugate > 0, "bandwidth.s_conjugate must be > 0");
    require(pump_floor_MHz >= 0, "bandwidth.pump_floor_MHz must be >= 0");
    require(phase_envelope_ratio > 0, "bandwidth.phase_envelope_ratio must be > 0");
}

double BandwidthModel::slope(Mode m) const { return m == Mode::probe ? s_probe : s_conjugate; }

double BandwidthModel::delay_offset_ns(Mode m) const
{
    return m == Mode::probe ? probe_delay_offset_ns : conjugate_delay_offset_ns;
}

double bandwidth_vs_input(const BandwidthModel& bm, Mode mode, double input_pW)
{
    if (!(input_pW >= 0)) throw DomainError("input power must be >= 0");
    return bm.slope(mode) * std::sqrt(input_pW) + bm.offset_MHz;
}

double pump_broadening_slope(const BandwidthModel& bm)
{
    const double c = bm.omega_pump_per_sqrt_mW;
    return bm.eta * c * c / (1000.0 * std::abs(bm.delta_raman_GHz));
}

double bandwidth_vs_pump(const BandwidthModel& bm, double pump_mW)
{
    if (!(pump_mW >= 0)) throw DomainError("pump power must be >= 0");
    return bm.pump_floor_MHz + pump_broadening_slope(bm) * pump_mW;
}

double raman_bandwidth(const BandwidthModel& bm, double pump_mW, double probe_pW)
{
    if (!(pump_mW >= 0) || !(probe_pW >= 0)) throw DomainError("powers must be >= 0");
    const double omega_pump = bm.omega_pump_per_sqrt_mW * std::sqrt(pump_mW);
    const double omega_probe = bm.omega_probe_per_sqrt_pW * std::sqrt(probe_pW);
    return bm.eta * omega_pump * omega_probe / (1000.0 * std::abs(bm.delta_raman_GHz));
}

double delay_from_bandwidth(double gamma_MHz)
{
    if (!(gamma_MHz > 0)) throw DomainError("bandwidth must be > 0 to define a delay");
    return constants::ns_per_inverse_MHz / gamma_MHz;
}

double delay_vs_input(const BandwidthModel& bm, Mode mode, double input_pW)
{
    return delay_from_bandwidth(bandwidth_vs_input(bm, mode, input_pW));
}

}  // namespace fwm
