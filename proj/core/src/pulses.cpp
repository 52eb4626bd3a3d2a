#include "siv/pulses.hpp"

#include <cmath>
#include <string>

#include "siv/constants.hpp"

namespace siv {

namespace {

// acosh(2) and acosh(sqrt(2)): half-widths at half maximum of sech(x) in
// amplitude and intensity respectively.
const double acosh2 = std::acosh(2.0);
const double acosh_sqrt2 = std::acosh(std::sqrt(2.0));

}  // namespace

const char* to_string(PulseShape s) {
  switch (s) {
    case PulseShape::Sech: return "sech";
    case PulseShape::DoubleExp: return "double-exp";
    case PulseShape::Square: return "square";
  }
  return "?";
}

PulseShape pulse_shape_from_string(const std::string& s) {
  if (s == "sech") return PulseShape::Sech;
  if (s == "double-exp") return PulseShape::DoubleExp;
  if (s == "square") return PulseShape::Square;
  throw ValidationError("invalid pulse shape '" + s +
                        "': expected sech, double-exp or square");
}

double PulseEnvelope::support_half_width() const {
  if (shape == PulseShape::Square) return 0.5 * duration_fwhm;
  return truncation_fwhm * duration_fwhm;
}

double PulseEnvelope::shape_value(double t) const {
  const double x = t - t_center;
  switch (shape) {
    case PulseShape::Sech: {
      if (std::abs(x) > support_half_width()) return 0.0;
      return 1.0 / std::cosh(2.0 * acosh2 * x / duration_fwhm);
    }
    case PulseShape::DoubleExp: {
      if (std::abs(x) > support_half_width()) return 0.0;
      return std::exp(-2.0 * std::numbers::ln2 * std::abs(x) / duration_fwhm);
    }
    case PulseShape::Square:
      return std::abs(x) <= 0.5 * duration_fwhm ? 1.0 : 0.0;
  }
  return 0.0;
}

void PulseEnvelope::validate() const {
  if (!(duration_fwhm > 0.0)) throw ValidationError("pulse duration_fwhm must be > 0");
  if (!(peak_rabi >= 0.0)) throw ValidationError("pulse peak_rabi must be >= 0");
  for (double c : coupling) {
    if (!(c >= 0.0)) throw ValidationError("pulse coupling scales must be >= 0");
  }
  if (shape != PulseShape::Square && truncation_fwhm < 5.0) {
    throw ValidationError("pulse truncation must be at least 5 FWHM per side");
  }
}

double envelope_value(const PulseEnvelope& p, double t) {
  return p.peak_rabi * p.shape_value(t);
}

double pulse_area(PulseShape shape, double duration_fwhm, double peak_rabi) {
  switch (shape) {
    case PulseShape::Sech:
      return peak_rabi * duration_fwhm * pi / (2.0 * acosh2);
    case PulseShape::DoubleExp:
      return peak_rabi * duration_fwhm / std::numbers::ln2;
    case PulseShape::Square:
      return peak_rabi * duration_fwhm;
  }
  return 0.0;
}

double pulse_area(const PulseEnvelope& p) {
  return pulse_area(p.shape, p.duration_fwhm, p.peak_rabi);
}

double peak_rabi_for_area(PulseShape shape, double duration_fwhm, double area) {
  const double unit = pulse_area(shape, duration_fwhm, 1.0);
  return area / unit;
}

double amplitude_fwhm_from_intensity_fwhm(PulseShape shape, double intensity_fwhm) {
  switch (shape) {
    case PulseShape::Sech:
      return intensity_fwhm * acosh2 / acosh_sqrt2;
    case PulseShape::DoubleExp:
      return 2.0 * intensity_fwhm;
    case PulseShape::Square:
      return intensity_fwhm;
  }
  return intensity_fwhm;
}

double power_to_area(double avg_power, double rep_rate, PulseShape shape,
                     double duration_fwhm, double calib) {
  const double peak = std::sqrt(calib * avg_power / (rep_rate * duration_fwhm));
  return pulse_area(shape, duration_fwhm, peak);
}

double power_for_area(double area, double rep_rate, PulseShape shape,
                      double duration_fwhm, double calib) {
  const double peak = peak_rabi_for_area(shape, duration_fwhm, area);
  return peak * peak * rep_rate * duration_fwhm / calib;
}

void DriveRatio::validate() const {
  if (!(r >= 0.0)) throw ValidationError("drive ratio must be >= 0");
}

RamanEffectiveRabi raman_effective_rabi(double omega_c, double omega_d,
                                        double detuning) {
  RamanEffectiveRabi out;
  out.value = omega_c * omega_d / (2.0 * detuning);
  out.adiabatic = std::abs(detuning) >= 10.0 * std::max(omega_c, omega_d);
  return out;
}

}  // namespace siv
