#ifndef SIV_CONSTANTS_HPP
#define SIV_CONSTANTS_HPP

#include <numbers>

namespace siv {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018 exact values.
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K

}  // namespace siv

#endif
