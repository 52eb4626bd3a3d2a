#ifndef SIV_TRANSITION_HPP
#define SIV_TRANSITION_HPP

#include <array>
#include <string>

#include "siv/errors.hpp"

namespace siv {

// Optical lines of the four-level system, ordered by decreasing frequency.
// Basis states: 0 = lower ground, 1 = upper ground, 2 = lower excited,
// 3 = upper excited.
enum class Transition : int { A = 0, B = 1, C = 2, D = 3 };

inline constexpr std::array<Transition, 4> all_transitions = {
    Transition::A, Transition::B, Transition::C, Transition::D};

constexpr int ground_index(Transition x) {
  switch (x) {
    case Transition::A:
    case Transition::C:
      return 0;
    case Transition::B:
    case Transition::D:
      return 1;
  }
  return 0;
}

constexpr int excited_index(Transition x) {
  switch (x) {
    case Transition::A:
    case Transition::B:
      return 3;
    case Transition::C:
    case Transition::D:
      return 2;
  }
  return 2;
}

inline const char* to_string(Transition x) {
  switch (x) {
    case Transition::A: return "A";
    case Transition::B: return "B";
    case Transition::C: return "C";
    case Transition::D: return "D";
  }
  return "?";
}

inline Transition transition_from_string(const std::string& s) {
  if (s == "A" || s == "a") return Transition::A;
  if (s == "B" || s == "b") return Transition::B;
  if (s == "C" || s == "c") return Transition::C;
  if (s == "D" || s == "d") return Transition::D;
  throw ValidationError("invalid transition '" + s + "': expected one of A, B, C, D");
}

}  // namespace siv

#endif
