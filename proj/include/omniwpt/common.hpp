// SPDX-License-Identifier: Apache-2.0
//
// omniwpt: simulation library for omnidirectional magnetoelectric
// wireless power transfer with active-echo coupling sensing.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace omniwpt {

using Vec3 = Eigen::Vector3d;

inline constexpr double kMu0 = 1.2566370614359172e-6;  // 4*pi*1e-7, H/m
inline constexpr double kPi = 3.141592653589793238462643383279502884;

// --- error taxonomy -------------------------------------------------------

// Base for everything thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Field point or quadrature node landed on (or within 1 nm of) a filament.
struct SingularEvaluationError : Error {
  using Error::Error;
};

// Argument outside the mathematical domain (e.g. non-positive inductance).
struct DomainError : Error {
  using Error::Error;
};

// Efficiency requested for an all-zero excitation.
struct UndefinedEfficiencyError : Error {
  using Error::Error;
};

// Linear solve failed its residual check.
struct NumericalError : Error {
  using Error::Error;
};

// Allocation requested with no usable coupling on any active channel.
struct NoCouplingError : Error {
  using Error::Error;
};

// PWM target beyond the LUT range; carries the clamped duty.
struct SaturationError : Error {
  SaturationError(const std::string& msg, double duty)
      : Error(msg), clamped_duty(duty) {}
  double clamped_duty;
};

// Every AE channel below one LSB: sense again (retry signal).
struct AllWeakError : Error {
  using Error::Error;
};

// Illegal state-machine transition; names the phase and the event.
struct ProtocolError : Error {
  ProtocolError(const std::string& phase, const std::string& event)
      : Error("event '" + event + "' is illegal in phase '" + phase + "'"),
        phase_name(phase),
        event_name(event) {}
  std::string phase_name;
  std::string event_name;
};

// Root bracket contains no sign change.
struct NoCancellationError : Error {
  using Error::Error;
};

// One structural problem in a config document or domain object.
struct ValidationIssue {
  std::string path;      // e.g. "coils[1].turns"
  std::string expected;  // e.g. ">= 1"
  std::string found;     // e.g. "0"
};

// Aggregated field-level validation failures.
struct ValidationError : Error {
  explicit ValidationError(std::vector<ValidationIssue> problems)
      : Error(render(problems)), issues(std::move(problems)) {}
  ValidationError(const std::string& path, const std::string& expected,
                  const std::string& found)
      : ValidationError(std::vector<ValidationIssue>{{path, expected, found}}) {}

  std::vector<ValidationIssue> issues;

 private:
  static std::string render(const std::vector<ValidationIssue>& v) {
    std::string s = "validation failed:";
    for (const auto& i : v)
      s += "\n  " + i.path + ": expected " + i.expected + ", found " + i.found;
    return s;
  }
};

// Filesystem / output problems surfaced by the CLI layer.
struct IoError : Error {
  using Error::Error;
};

namespace detail {

// Deterministic standard Gaussian via Box-Muller on mt19937_64.
// std::normal_distribution is implementation-defined, which would break
// bit-identical seeded runs across standard libraries.
template <class Rng>
double gaussian(Rng& rng) {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  double u1 = 0.0;
  do {
    u1 = static_cast<double>(rng() >> 11) * kScale;
  } while (u1 <= 0.0);
  const double u2 = static_cast<double>(rng() >> 11) * kScale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace detail

}  // namespace omniwpt
