// SPDX-License-Identifier: Apache-2.0
//
// Quasi-static magnetics: Biot-Savart fields of circular multi-turn loops,
// Neumann mutual inductance, and the small-receiver dipole coupling model.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "omniwpt/common.hpp"

namespace omniwpt {

// Default quadrature orders. Field integrands seen from receiver poses are
// smooth and periodic, so the trapezoidal rule converges spectrally; the
// Neumann default is higher because cancelled-array design evaluates
// geometrically crossing coplanar loops (integrable 1/r singularities).
inline constexpr int kFieldSegments = 256;
inline constexpr int kMutualSegments = 2048;

// Physical and electrical description of one transmitter or echo coil.
// Geometry in millimetres, electrical values in SI.
struct CoilSpec {
  double loop_radius_mm = 0.0;
  int turns = 1;
  Vec3 center_mm = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double series_resistance_ohm = 0.0;
  double self_inductance_h = 0.0;
  double compensation_capacitance_f = 0.0;

  void validate(const std::string& path = "coil") const {
    std::vector<ValidationIssue> bad;
    auto num = [](double v) { return std::to_string(v); };
    if (!(loop_radius_mm > 0.0))
      bad.push_back({path + ".loop_radius_mm", "> 0", num(loop_radius_mm)});
    if (turns < 1) bad.push_back({path + ".turns", ">= 1", std::to_string(turns)});
    if (!(series_resistance_ohm > 0.0))
      bad.push_back({path + ".series_resistance_ohm", "> 0", num(series_resistance_ohm)});
    if (!(self_inductance_h > 0.0))
      bad.push_back({path + ".self_inductance_h", "> 0", num(self_inductance_h)});
    if (std::abs(normal.norm() - 1.0) > 1e-9)
      bad.push_back({path + ".normal", "unit vector (|n| = 1 within 1e-9)",
                     "|n| = " + num(normal.norm())});
    if (compensation_capacitance_f < 0.0)
      bad.push_back({path + ".compensation_capacitance_f", ">= 0",
                     num(compensation_capacitance_f)});
    if (compensation_capacitance_f > 0.0 && self_inductance_h > 0.0) {
      const double f0 = resonant_frequency_hz();
      if (!std::isfinite(f0) || !(f0 > 0.0))
        bad.push_back({path, "finite positive resonant frequency", num(f0)});
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));
  }

  double resonant_frequency_hz() const {
    return 1.0 / (2.0 * kPi * std::sqrt(self_inductance_h * compensation_capacitance_f));
  }

  // Series tank impedance R + j(wL - 1/(wC)) at angular frequency w.
  std::complex<double> tank_impedance(double omega) const {
    double x = omega * self_inductance_h;
    if (compensation_capacitance_f > 0.0)
      x -= 1.0 / (omega * compensation_capacitance_f);
    return {series_resistance_ohm, x};
  }
};

// Implant position (mm) and film long-axis direction.
struct Pose {
  Vec3 position_mm = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();

  void validate(const std::string& path = "pose") const {
    if (std::abs(axis.norm() - 1.0) > 1e-9)
      throw ValidationError(path + ".axis", "unit vector (|a| = 1 within 1e-9)",
                            "|a| = " + std::to_string(axis.norm()));
  }
};

// Lumped receiver: ME film as an axis-aligned pickup with a series-resonant
// load, plus the auxiliary echo coil (coaxial with the film axis; the
// ae_coil's own center/normal fields are placeholders and its effective pose
// is taken from `pose` at evaluation time).
struct ReceiverModel {
  Pose pose;
  double effective_area_turns_m2 = 0.0;  // flux pickup strength along axis
  double load_resistance_ohm = 0.0;      // R_L
  double motional_inductance_h = 0.0;    // L_m of the series-resonant load
  double resonance_hz = 340e3;           // X_L(2*pi*resonance_hz) = 0
  CoilSpec ae_coil;

  // X_L(w) = wL_m - 1/(wC_m) with C_m chosen so the load resonates at
  // resonance_hz.
  double load_reactance_at(double omega) const {
    const double w0 = 2.0 * kPi * resonance_hz;
    const double cm = 1.0 / (w0 * w0 * motional_inductance_h);
    return omega * motional_inductance_h - 1.0 / (omega * cm);
  }

  void validate(const std::string& path = "receiver") const {
    pose.validate(path + ".pose");
    std::vector<ValidationIssue> bad;
    auto num = [](double v) { return std::to_string(v); };
    if (!(load_resistance_ohm > 0.0))
      bad.push_back({path + ".load_resistance_ohm", "> 0", num(load_resistance_ohm)});
    if (!(effective_area_turns_m2 > 0.0))
      bad.push_back({path + ".effective_area_turns_m2", "> 0", num(effective_area_turns_m2)});
    if (!(motional_inductance_h > 0.0))
      bad.push_back({path + ".motional_inductance_h", "> 0", num(motional_inductance_h)});
    if (!(resonance_hz > 0.0))
      bad.push_back({path + ".resonance_hz", "> 0", num(resonance_hz)});
    if (!bad.empty()) throw ValidationError(std::move(bad));
    ae_coil.validate(path + ".ae_coil");
    if (std::abs(load_reactance_at(2.0 * kPi * resonance_hz)) > 1e-6)
      throw ValidationError(path, "load resonant at resonance_hz",
                            std::to_string(load_reactance_at(2.0 * kPi * resonance_hz)));
  }
};

namespace detail {

// Orthonormal in-plane frame (u, v) for a loop normal.
inline void loop_frame(const Vec3& n, Vec3& u, Vec3& v) {
  const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  u = n.cross(seed).normalized();
  v = n.cross(u);
}

// Node phase offset (fraction of one cell) applied to the second loop of a
// Neumann pair: keeps node pairs of geometrically crossing circles away from
// exact coincidence without affecting spectral accuracy on smooth pairs.
inline constexpr double kNodePhase = 0.38196601125010515;  // 2 - golden ratio

struct SampledLoop {
  std::vector<Vec3> points;    // m
  std::vector<Vec3> tangents;  // dl/dtheta, m
};

inline SampledLoop sample_loop(const CoilSpec& c, int segments, double phase) {
  Vec3 u, v;
  loop_frame(c.normal, u, v);
  const double r = c.loop_radius_mm * 1e-3;
  const Vec3 center = c.center_mm * 1e-3;
  const double dth = 2.0 * kPi / segments;
  SampledLoop s;
  s.points.resize(segments);
  s.tangents.resize(segments);
  for (int i = 0; i < segments; ++i) {
    const double th = (i + 0.5 + phase) * dth;
    s.points[i] = center + r * (std::cos(th) * u + std::sin(th) * v);
    s.tangents[i] = r * (-std::sin(th) * u + std::cos(th) * v);
  }
  return s;
}

}  // namespace detail

// Magnetic flux density per ampere (T/A) at `point_mm`, by trapezoidal
// integration of the Biot-Savart kernel around the loop, scaled by turns.
inline Vec3 field_at(const CoilSpec& coil, const Vec3& point_mm,
                     int segments = kFieldSegments) {
  const Vec3 p = point_mm * 1e-3;
  const double r = coil.loop_radius_mm * 1e-3;
  // Exact distance from the point to the filament ring.
  const Vec3 rel = p - coil.center_mm * 1e-3;
  const double h = rel.dot(coil.normal);
  const double rho = (rel - h * coil.normal).norm();
  const double ring_dist = std::hypot(rho - r, h);
  if (ring_dist < 1e-9)
    throw SingularEvaluationError("field_at: point lies on the coil filament");

  const auto loop = detail::sample_loop(coil, segments, 0.0);
  const double dth = 2.0 * kPi / segments;
  Vec3 acc = Vec3::Zero();
  for (int i = 0; i < segments; ++i) {
    const Vec3 d = p - loop.points[i];
    const double dist = d.norm();
    acc += loop.tangents[i].cross(d) / (dist * dist * dist);
  }
  return (kMu0 / (4.0 * kPi)) * dth * static_cast<double>(coil.turns) * acc;
}

// Neumann double line integral between two loops, scaled by both turn
// counts. Geometrically crossing loops are admissible (the integral is
// finite); exactly coincident loops or node pairs closer than 1 nm are not.
inline double mutual_inductance(const CoilSpec& a, const CoilSpec& b,
                                int segments = kMutualSegments) {
  if (std::abs(a.loop_radius_mm - b.loop_radius_mm) < 1e-12 &&
      (a.center_mm - b.center_mm).norm() < 1e-12 &&
      std::abs(std::abs(a.normal.dot(b.normal)) - 1.0) < 1e-12)
    throw SingularEvaluationError(
        "mutual_inductance: coincident loops (divergent self term)");

  const auto la = detail::sample_loop(a, segments, 0.0);
  const auto lb = detail::sample_loop(b, segments, detail::kNodePhase);
  const double dth = 2.0 * kPi / segments;
  double acc = 0.0;
  double min_dist = std::numeric_limits<double>::max();
  for (int i = 0; i < segments; ++i) {
    const Vec3 pa = la.points[i];
    const Vec3 ta = la.tangents[i];
    for (int j = 0; j < segments; ++j) {
      const double dist = (pa - lb.points[j]).norm();
      if (dist < min_dist) min_dist = dist;
      acc += ta.dot(lb.tangents[j]) / dist;
    }
  }
  if (min_dist < 1e-9)
    throw SingularEvaluationError(
        "mutual_inductance: filaments intersect at a quadrature node");
  return (kMu0 / (4.0 * kPi)) * dth * dth * acc *
         static_cast<double>(a.turns) * static_cast<double>(b.turns);
}

// Small-coil dipole coupling: M = (B(pos)/I) . axis * area_turns. Shared by
// the ME pickup and the AE coil so their couplings stay exactly proportional.
inline double axial_mutual(const CoilSpec& coil, const Pose& pose,
                           double area_turns_m2, int segments = kFieldSegments) {
  return field_at(coil, pose.position_mm, segments).dot(pose.axis) * area_turns_m2;
}

// M_iL between a transmitter coil and the implant's ME film pickup.
inline double rx_mutual(const CoilSpec& coil, const ReceiverModel& rx,
                        int segments = kFieldSegments) {
  return axial_mutual(coil, rx.pose, rx.effective_area_turns_m2, segments);
}

// Coupling between a transmitter coil and the implant's AE coil (geometric
// area-turns of the auxiliary loop, coaxial with the film axis).
inline double ae_mutual(const CoilSpec& coil, const ReceiverModel& rx,
                        int segments = kFieldSegments) {
  const double r = rx.ae_coil.loop_radius_mm * 1e-3;
  const double area_turns = kPi * r * r * static_cast<double>(rx.ae_coil.turns);
  return axial_mutual(coil, rx.pose, area_turns, segments);
}

// Places the receiver's AE coil at the implant pose (for Neumann oracles).
inline CoilSpec positioned_ae_coil(const ReceiverModel& rx) {
  CoilSpec c = rx.ae_coil;
  c.center_mm = rx.pose.position_mm;
  c.normal = rx.pose.axis;
  return c;
}

// k = M / sqrt(La * Lb).
inline double coupling_coefficient(double m_h, double la_h, double lb_h) {
  if (!(la_h > 0.0) || !(lb_h > 0.0))
    throw DomainError("coupling_coefficient: inductances must be positive");
  return m_h / std::sqrt(la_h * lb_h);
}

}  // namespace omniwpt
