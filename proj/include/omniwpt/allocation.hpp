// SPDX-License-Identifier: Apache-2.0
//
// Current allocation across the transmitter array: optimal split under a
// squared-current budget, weak-channel deactivation, and the PWM lookup
// table that maps requested amplitudes to three-level duty cycles.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "omniwpt/circuit.hpp"
#include "omniwpt/common.hpp"

namespace omniwpt {

// Measured amplifier characteristic: output current amplitude as a function
// of duty cycle.  The table anchors at the (0, 0) knot and is interpolated
// linearly between knots in both directions.
struct PwmLut {
  std::vector<double> duty;       // strictly ascending, from 0 up to <= 0.5
  std::vector<double> current_a;  // strictly ascending, same length, from 0

  void validate() const {
    std::vector<ValidationIssue> issues;
    if (duty.size() < 2)
      issues.push_back({"pwm_lut.duty", ">= 2 knots", std::to_string(duty.size())});
    if (current_a.size() != duty.size())
      issues.push_back({"pwm_lut.current_a", "size " + std::to_string(duty.size()),
                        "size " + std::to_string(current_a.size())});
    if (!duty.empty() && duty.front() != 0.0)
      issues.push_back({"pwm_lut.duty[0]", "0 (table covers zero drive)",
                        std::to_string(duty.front())});
    if (!current_a.empty() && current_a.front() != 0.0)
      issues.push_back({"pwm_lut.current_a[0]", "0 (table covers zero drive)",
                        std::to_string(current_a.front())});
    for (std::size_t i = 0; i < duty.size(); ++i) {
      const std::string path = "pwm_lut.duty[" + std::to_string(i) + "]";
      if (!(duty[i] >= 0.0 && duty[i] <= 0.5))
        issues.push_back({path, "in [0, 0.5]", std::to_string(duty[i])});
      if (i > 0 && !(duty[i] > duty[i - 1]))
        issues.push_back({path, "> previous knot " + std::to_string(duty[i - 1]),
                          std::to_string(duty[i])});
    }
    for (std::size_t i = 1; i < current_a.size(); ++i) {
      const std::string path = "pwm_lut.current_a[" + std::to_string(i) + "]";
      if (!(current_a[i] > current_a[i - 1]))
        issues.push_back({path, "> previous knot " + std::to_string(current_a[i - 1]),
                          std::to_string(current_a[i])});
    }
    if (!issues.empty()) throw ValidationError(issues);
  }

  double max_current_a() const { return current_a.back(); }

  // Duty needed to realize a requested amplitude.  Requests above the last
  // knot are unrealizable and reported with the clamped duty.
  double duty_from_current(double amps) const {
    if (!(amps >= 0.0))
      throw DomainError("duty_from_current: negative amplitude " + std::to_string(amps));
    if (amps > current_a.back())
      throw SaturationError("duty_from_current: requested " + std::to_string(amps) +
                                " A exceeds LUT maximum " +
                                std::to_string(current_a.back()) + " A",
                            duty.back());
    const auto it = std::lower_bound(current_a.begin(), current_a.end(), amps);
    const std::size_t hi = std::max<std::size_t>(1, it - current_a.begin());
    const std::size_t lo = hi - 1;
    const double t = (amps - current_a[lo]) / (current_a[hi] - current_a[lo]);
    return duty[lo] + t * (duty[hi] - duty[lo]);
  }

  // Forward map: amplitude produced by a duty request (clamped to the table).
  double current_from_duty(double d) const {
    if (!(d >= 0.0 && d <= 0.5))
      throw DomainError("current_from_duty: duty " + std::to_string(d) +
                        " outside [0, 0.5]");
    if (d >= duty.back()) return current_a.back();
    const auto it = std::lower_bound(duty.begin(), duty.end(), d);
    const std::size_t hi = std::max<std::size_t>(1, it - duty.begin());
    const std::size_t lo = hi - 1;
    const double t = (d - duty[lo]) / (duty[hi] - duty[lo]);
    return current_a[lo] + t * (current_a[hi] - current_a[lo]);
  }
};

// Channels whose coupling is more than `threshold` times weaker than the
// strongest channel contribute mostly loss; switch them off.  The strongest
// channel is always kept.
inline std::vector<bool> apply_deactivation(const std::vector<double>& magnitudes,
                                            double threshold = 8.0) {
  if (!(threshold > 1.0))
    throw DomainError("apply_deactivation: threshold " + std::to_string(threshold) +
                      " must be > 1");
  double peak = 0.0;
  for (double m : magnitudes) peak = std::max(peak, std::abs(m));
  std::vector<bool> active(magnitudes.size(), false);
  if (peak == 0.0) return active;
  for (std::size_t i = 0; i < magnitudes.size(); ++i)
    active[i] = !(peak > threshold * std::abs(magnitudes[i]));
  return active;
}

// Efficiency-optimal drive for measured couplings: amplitude proportional to
// |M_i| / R_i (plain |M_i| when no resistances are supplied), polarity equal
// to the coupling sign, scaled so active amplitudes exhaust the budget.
inline DriveConfig optimal_allocation(const std::vector<double>& couplings,
                                      double budget_a2,
                                      const std::vector<bool>& mask = {},
                                      const std::vector<double>& resistances = {}) {
  const std::size_t n = couplings.size();
  if (!(budget_a2 > 0.0))
    throw DomainError("optimal_allocation: budget " + std::to_string(budget_a2) +
                      " must be > 0");
  if (!mask.empty() && mask.size() != n)
    throw DomainError("optimal_allocation: mask size " + std::to_string(mask.size()) +
                      " != coupling count " + std::to_string(n));
  if (!resistances.empty() && resistances.size() != n)
    throw DomainError("optimal_allocation: resistance count " +
                      std::to_string(resistances.size()) + " != coupling count " +
                      std::to_string(n));

  std::vector<double> weight(n, 0.0);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double r = resistances.empty() ? 1.0 : resistances[i];
    if (!resistances.empty() && !(r > 0.0))
      throw DomainError("optimal_allocation: resistances[" + std::to_string(i) +
                        "] = " + std::to_string(r) + " must be > 0");
    weight[i] = std::abs(couplings[i]) / r;
    norm2 += weight[i] * weight[i];
  }
  if (norm2 == 0.0)
    throw NoCouplingError(
        "optimal_allocation: every active channel has zero coupling");

  const double scale = std::sqrt(budget_a2 / norm2);
  DriveConfig drive;
  drive.power_budget_a2 = budget_a2;
  drive.channels.resize(n);
  drive.active.assign(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    const bool on = mask.empty() ? true : static_cast<bool>(mask[i]);
    drive.active[i] = on;
    drive.channels[i].amplitude_a = on ? weight[i] * scale : 0.0;
    drive.channels[i].polarity = couplings[i] < 0.0 ? -1 : +1;
  }
  return drive;
}

}  // namespace omniwpt
