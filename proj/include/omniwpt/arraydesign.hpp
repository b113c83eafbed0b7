// SPDX-License-Identifier: Apache-2.0
//
// Array geometry design: find the coplanar spacing at which two equal coils
// have zero mutual inductance, place three coils at that spacing, and verify
// the realized decoupling of an arbitrary layout.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "omniwpt/common.hpp"
#include "omniwpt/magnetics.hpp"

namespace omniwpt {

// Coplanar center spacing (mm) at which two copies of `coil` decouple.
// Bisection on the signed mutual inductance; requires a sign change across
// [d_min_mm, d_max_mm].
inline double find_cancellation_distance(const CoilSpec& coil, double d_min_mm,
                                         double d_max_mm, double tol_mm = 0.01,
                                         int segments = kMutualSegments) {
  if (!(d_min_mm > 0.0 && d_max_mm > d_min_mm))
    throw DomainError("find_cancellation_distance: bad bracket [" +
                      std::to_string(d_min_mm) + ", " + std::to_string(d_max_mm) + "]");
  if (!(tol_mm > 0.0))
    throw DomainError("find_cancellation_distance: tolerance " +
                      std::to_string(tol_mm) + " must be > 0");

  const auto mutual_at = [&](double d_mm) {
    CoilSpec a = coil, b = coil;
    a.center_mm = Vec3::Zero();
    b.center_mm = Vec3(d_mm, 0.0, 0.0);
    a.normal = Vec3::UnitZ();
    b.normal = Vec3::UnitZ();
    return mutual_inductance(a, b, segments);
  };

  double lo = d_min_mm, hi = d_max_mm;
  double flo = mutual_at(lo), fhi = mutual_at(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw NoCancellationError(
        "find_cancellation_distance: mutual inductance does not change sign on [" +
        std::to_string(d_min_mm) + " mm, " + std::to_string(d_max_mm) + " mm]");
  while (hi - lo > tol_mm) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = mutual_at(mid);
    if (fmid == 0.0) return mid;
    if ((fmid > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Three copies of `coil` on the z = 0 plane, axes +z, centers on the
// vertices of an equilateral triangle with side `spacing_mm` (circumradius
// spacing / sqrt(3)), at bearings 270, 150 and 30 degrees.
inline std::vector<CoilSpec> layout_three_coils(const CoilSpec& coil,
                                                double spacing_mm) {
  if (!(spacing_mm > 0.0))
    throw DomainError("layout_three_coils: spacing " + std::to_string(spacing_mm) +
                      " must be > 0");
  const double r = spacing_mm / std::sqrt(3.0);
  const double h = 0.5 * spacing_mm;  // r * sin(60 deg)
  std::vector<CoilSpec> coils(3, coil);
  const Vec3 centers[3] = {Vec3(0.0, -r, 0.0), Vec3(-h, 0.5 * r, 0.0),
                           Vec3(h, 0.5 * r, 0.0)};
  for (int i = 0; i < 3; ++i) {
    coils[i].center_mm = centers[i];
    coils[i].normal = Vec3::UnitZ();
  }
  return coils;
}

struct PairReport {
  int i = 0, j = 0;
  double mutual_h = 0.0;
  double coupling_k = 0.0;
  // Fractional drive-voltage error induced on either coil by unit current in
  // the other, at the power frequency.
  double voltage_perturbation = 0.0;
};

struct ArrayReport {
  std::vector<PairReport> pairs;
  double max_abs_k = 0.0;
  double max_voltage_perturbation = 0.0;
  bool decoupled = false;
};

// Check every coil pair of a layout for residual coupling at the power
// frequency.  `decoupled` holds when no pair exceeds the k threshold.
inline ArrayReport validate_array(const std::vector<CoilSpec>& coils, double omega,
                                  double k_threshold = 1e-3,
                                  int segments = kMutualSegments) {
  if (!(omega > 0.0))
    throw DomainError("validate_array: omega " + std::to_string(omega) +
                      " must be > 0");
  ArrayReport report;
  for (std::size_t i = 0; i < coils.size(); ++i)
    for (std::size_t j = i + 1; j < coils.size(); ++j) {
      PairReport p;
      p.i = static_cast<int>(i);
      p.j = static_cast<int>(j);
      p.mutual_h = mutual_inductance(coils[i], coils[j], segments);
      p.coupling_k = coupling_coefficient(p.mutual_h, coils[i].self_inductance_h,
                                          coils[j].self_inductance_h);
      const double zi = std::abs(coils[i].tank_impedance(omega));
      const double zj = std::abs(coils[j].tank_impedance(omega));
      p.voltage_perturbation = omega * std::abs(p.mutual_h) / std::min(zi, zj);
      report.max_abs_k = std::max(report.max_abs_k, std::abs(p.coupling_k));
      report.max_voltage_perturbation =
          std::max(report.max_voltage_perturbation, p.voltage_perturbation);
      report.pairs.push_back(p);
    }
  report.decoupled = report.max_abs_k <= k_threshold;
  return report;
}

}  // namespace omniwpt
