#pragma once

#include <numbers>

namespace fwm::constants {

inline constexpr double planck_J_s = 6.62607015e-34;
inline constexpr double speed_of_light_m_s = 299792458.0;
inline constexpr double pi = std::numbers::pi;

// Rb85 natural linewidth (D1), used only as a comparison bound.
inline constexpr double rb85_natural_linewidth_MHz = 5.75;

// 1 / (1 MHz) expressed in ns.
inline constexpr double ns_per_inverse_MHz = 1000.0;

}  // namespace fwm::constants
