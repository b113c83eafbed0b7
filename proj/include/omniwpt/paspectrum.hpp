// SPDX-License-Identifier: Apache-2.0
//
// Three-level (positive / zero / negative) power-amplifier waveform analysis:
// Fourier coefficients versus duty cycle and the fundamental-versus-third-
// harmonic trade-off that motivates running near one-third duty.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "omniwpt/common.hpp"

namespace omniwpt {

// Suppression is reported as a finite decibel number; a numerically exact
// null is capped here instead of returning infinity.
inline constexpr double kSuppressionCapDb = 300.0;

// Harmonic coefficients b_1..b_n_max of the unit three-level waveform: +1
// for a fraction `duty` of the full period, -1 mirrored in the negative
// half-cycle, 0 otherwise (duty 0.5 degenerates to the square wave):
//   b_n = 4 / (n pi) * sin(n pi duty)  for odd n,   0 for even n.
// Pulse centering within the half-cycle only rotates per-harmonic phase; the
// sign here follows the formula, and magnitudes/power are centering-free.
inline std::vector<double> three_level_spectrum(double duty, int n_max) {
  if (!(duty > 0.0 && duty <= 0.5))
    throw DomainError("three_level_spectrum: duty " + std::to_string(duty) +
                      " outside (0, 0.5]");
  if (n_max < 1)
    throw DomainError("three_level_spectrum: n_max " + std::to_string(n_max) +
                      " must be >= 1");
  std::vector<double> b(n_max);
  for (int n = 1; n <= n_max; ++n)
    b[n - 1] = (n % 2 == 0) ? 0.0 : 4.0 / (n * kPi) * std::sin(n * kPi * duty);
  return b;
}

struct HarmonicTradeoff {
  double fundamental_loss_db = 0.0;          // relative to full-square drive
  double third_harmonic_suppression_db = 0.0;  // relative to full-square drive
};

// Trade-off at a given duty: how much fundamental is sacrificed and how much
// third harmonic is suppressed, both versus the duty = 1/2 square wave.
// At duty = 1/3 the third harmonic nulls exactly (capped at 300 dB).
inline HarmonicTradeoff harmonic_tradeoff(double duty) {
  if (!(duty > 0.0 && duty <= 0.5))
    throw DomainError("harmonic_tradeoff: duty " + std::to_string(duty) +
                      " outside (0, 0.5]");
  HarmonicTradeoff t;
  t.fundamental_loss_db = -20.0 * std::log10(std::sin(kPi * duty));
  const double h3 = std::abs(std::sin(3.0 * kPi * duty));
  t.third_harmonic_suppression_db =
      h3 > 0.0 ? std::min(-20.0 * std::log10(h3), kSuppressionCapDb)
               : kSuppressionCapDb;
  return t;
}

}  // namespace omniwpt
