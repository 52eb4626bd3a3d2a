#ifndef SIV_PULSES_HPP
#define SIV_PULSES_HPP

#include <array>

#include "siv/transition.hpp"

namespace siv {

enum class PulseShape { Sech, DoubleExp, Square };

const char* to_string(PulseShape s);
PulseShape pulse_shape_from_string(const std::string& s);

// One laser segment. `duration_fwhm` is the FWHM of the *amplitude* (Rabi
// frequency) envelope. Stated pulse lengths in the ultrafast-optics
// convention are intensity FWHMs; convert with
// amplitude_fwhm_from_intensity_fwhm before filling this struct.
//
// A pulse may couple several transitions at once (a broadband Raman pulse
// couples C, D and, through the upper excited state, A and B). All couplings
// share the carrier, whose frequency is `carrier_detuning` *below* the
// `reference` transition, and share the carrier `phase`.
struct PulseEnvelope {
  PulseShape shape = PulseShape::Sech;
  double duration_fwhm = 1e-12;        // s, amplitude FWHM
  double peak_rabi = 0.0;              // rad/s, peak of the base envelope
  std::array<double, 4> coupling{};    // dimensionless scale per Transition
  Transition reference = Transition::C;
  double carrier_detuning = 0.0;       // rad/s, positive = laser red of reference
  double phase = 0.0;                  // rad
  double t_center = 0.0;               // s
  double truncation_fwhm = 8.0;        // support half-width, in units of FWHM

  // Half width of the temporal support. Sech and DoubleExp are truncated at
  // truncation_fwhm * duration_fwhm on each side; Square ends at half its
  // duration.
  double support_half_width() const;

  // Unit-peak envelope at absolute time t; zero outside the support.
  double shape_value(double t) const;

  void validate() const;
};

// Base envelope amplitude at time t, rad/s.
double envelope_value(const PulseEnvelope& p, double t);

// Pulse area of the base envelope over the full (untruncated) shape, using
// closed forms:
//   Sech:      peak * fwhm * pi / (2 acosh 2)
//   DoubleExp: peak * fwhm / ln 2
//   Square:    peak * fwhm
double pulse_area(const PulseEnvelope& p);
double pulse_area(PulseShape shape, double duration_fwhm, double peak_rabi);

// Peak Rabi frequency that yields the requested area for the given shape.
double peak_rabi_for_area(PulseShape shape, double duration_fwhm, double area);

// Converts an intensity FWHM (what "pulse length" means for the measured
// 1 ps and 12 ps pulses) into the amplitude-envelope FWHM used above.
// Sech: factor acosh(2)/acosh(sqrt 2); DoubleExp: factor 2; Square: 1.
double amplitude_fwhm_from_intensity_fwhm(PulseShape shape, double intensity_fwhm);

// Pulse area reached at a given average power. The pulse energy is
// avg_power / rep_rate; calib converts W of average power into the squared
// peak Rabi frequency via peak^2 = calib * avg_power / (rep_rate * duration),
// so the area scales as sqrt(avg_power / rep_rate).
double power_to_area(double avg_power, double rep_rate, PulseShape shape,
                     double duration_fwhm, double calib);

// Inverse of power_to_area at fixed shape, duration and calibration.
double power_for_area(double area, double rep_rate, PulseShape shape,
                      double duration_fwhm, double calib);

// Amplitude ratio of the D-leg to the C-leg coupling in the Raman beam.
struct DriveRatio {
  double r = 0.7;
  void validate() const;
};

// Adiabatic-elimination estimate of the two-photon Rabi frequency of a
// lambda scheme, omega_c * omega_d / (2 detuning). Analytic cross-check
// only; the engine always integrates the full four-level dynamics.
// `adiabatic` is false when |detuning| < 10 max(omega_c, omega_d), where the
// elimination is unreliable (the value is still returned).
struct RamanEffectiveRabi {
  double value = 0.0;
  bool adiabatic = true;
};
RamanEffectiveRabi raman_effective_rabi(double omega_c, double omega_d, double detuning);

}  // namespace siv

#endif
