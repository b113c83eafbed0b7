// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "omniwpt/magnetics.hpp"
#include "oracle_helpers.hpp"

using namespace omniwpt;

namespace {

CoilSpec single_turn_loop(double radius_mm) {
  CoilSpec c;
  c.loop_radius_mm = radius_mm;
  c.turns = 1;
  c.series_resistance_ohm = 0.5;
  c.self_inductance_h = 10e-6;
  return c;
}

Eigen::Affine3d random_rigid_transform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> shift(-40.0, 40.0);
  Eigen::Affine3d t = Eigen::Affine3d::Identity();
  t.linear() = Eigen::AngleAxisd(angle(rng), oracle::random_unit(rng)).toRotationMatrix();
  t.translation() = Vec3(shift(rng), shift(rng), shift(rng));
  return t;
}

CoilSpec transformed(const CoilSpec& c, const Eigen::Affine3d& t) {
  CoilSpec out = c;
  out.center_mm = t * c.center_mm;
  out.normal = t.linear() * c.normal;
  return out;
}

}  // namespace

TEST_CASE("field_at - on-axis field matches the textbook loop formula") {
  // Circular loop, radius r = 21 mm, 1 turn, centered at the origin, z normal.
  // On the axis at height z the Biot-Savart integral has the closed form
  //   B_z = mu0 r^2 / (2 (r^2 + z^2)^1.5)   [T per ampere].
  // At z = 20 mm: r^2 = 4.41e-4, r^2 + z^2 = 8.41e-4,
  //   (8.41e-4)^1.5 = 2.438958...e-5,
  //   B_z = 1.2566370614359173e-6 * 4.41e-4 / (2 * 2.4389578...e-5)
  //       = 1.1361206775456958e-05 T/A.
  CoilSpec c = single_turn_loop(21.0);
  const Vec3 b = field_at(c, Vec3(0.0, 0.0, 20.0));
  CHECK(std::abs(b.z() - 1.1361206775456958e-05) < 1e-16);
  // Off-axis components vanish by symmetry (quadrature cancels them to
  // rounding noise).
  CHECK(std::abs(b.x()) < 1e-18);
  CHECK(std::abs(b.y()) < 1e-18);

  // At the loop center: B = mu0 / (2r) = 1.2566370614359173e-6 / 0.042
  //                       = 2.9919930034188506e-05 T/A.
  const Vec3 b0 = field_at(c, Vec3::Zero());
  CHECK(std::abs(b0.z() - 2.9919930034188506e-05) < 1e-16);

  // Turn count is a pure prefactor.
  CoilSpec c10 = c;
  c10.turns = 10;
  const Vec3 b10 = field_at(c10, Vec3(0.0, 0.0, 20.0));
  CHECK(b10.z() == Catch::Approx(10.0 * b.z()).epsilon(1e-15));
}

TEST_CASE("field_at - spectral convergence off axis") {
  CoilSpec c = single_turn_loop(21.0);
  c.center_mm = Vec3(3.0, -2.0, 0.0);
  c.normal = Vec3(1.0, 2.0, 5.0).normalized();
  const Vec3 p(12.0, 5.0, 14.0);
  const Vec3 coarse = field_at(c, p, 64);
  const Vec3 fine = field_at(c, p, 256);
  const Vec3 finer = field_at(c, p, 512);
  // The integrand is smooth and periodic, so doubling the node count past the
  // resolved regime changes nothing at double precision.
  CHECK((fine - finer).norm() < 1e-12 * finer.norm());
  CHECK((coarse - fine).norm() < 1e-9 * fine.norm());
}

TEST_CASE("field_at - evaluation on the filament is rejected") {
  CoilSpec c = single_turn_loop(21.0);
  CHECK_THROWS_AS(field_at(c, Vec3(21.0, 0.0, 0.0)), SingularEvaluationError);
  // 1 um off the wire is fine (integral is large but finite).
  CHECK_NOTHROW(field_at(c, Vec3(21.0, 0.0, 0.1)));
}

TEST_CASE("mutual_inductance - coaxial loops match Maxwell's formula") {
  // Independent oracle: Maxwell's elliptic-integral closed form for coaxial
  // circular filaments (see oracle_helpers.hpp).
  // a = b = 21 mm, axial gap d = 10 mm:
  //   k^2 = 4*0.021*0.021 / ((0.042)^2 + (0.010)^2) = 1.764e-3 / 1.864e-3
  //   M = 2.4432759943303708e-08 H (per turn pair).
  CoilSpec a = single_turn_loop(21.0);
  CoilSpec b = single_turn_loop(21.0);
  b.center_mm = Vec3(0.0, 0.0, 10.0);

  const double oracle_m = oracle::maxwell_coaxial_mutual(0.021, 0.021, 0.010);
  CHECK(std::abs(oracle_m - 2.4432759943303708e-08) < 1e-18);
  const double m = mutual_inductance(a, b);
  CHECK(std::abs(m - oracle_m) < 1e-6 * std::abs(oracle_m));

  // Distinct radii, larger gap: a = 21 mm, b = 15 mm, d = 25 mm:
  //   M = 4.7835778393260865e-09 H.
  CoilSpec c = single_turn_loop(15.0);
  c.center_mm = Vec3(0.0, 0.0, 25.0);
  const double oracle_m2 = oracle::maxwell_coaxial_mutual(0.021, 0.015, 0.025);
  CHECK(std::abs(oracle_m2 - 4.7835778393260865e-09) < 1e-19);
  CHECK(std::abs(mutual_inductance(a, c) - oracle_m2) < 1e-6 * std::abs(oracle_m2));

  // Multi-turn scaling is exact: M(Na, Nb) = Na * Nb * M(1, 1).
  CoilSpec a10 = a;
  a10.turns = 10;
  CoilSpec b5 = b;
  b5.turns = 5;
  CHECK(mutual_inductance(a10, b5) ==
        Catch::Approx(50.0 * mutual_inductance(a, b)).epsilon(1e-14));
}

TEST_CASE("mutual_inductance - perpendicular concentric loops decouple") {
  // The field of a z-normal loop is azimuthally symmetric, so its flux
  // through any concentric x-normal loop is exactly zero.
  CoilSpec a = single_turn_loop(21.0);
  CoilSpec b = single_turn_loop(9.0);
  b.normal = Vec3::UnitX();
  CHECK(std::abs(mutual_inductance(a, b)) < 1e-15);
}

TEST_CASE("mutual_inductance - reciprocity and rigid-transform invariance") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 64; ++trial) {
    auto [a, b] = oracle::random_separated_pair(rng);
    const double m_ab = mutual_inductance(a, b, 256);
    const double m_ba = mutual_inductance(b, a, 256);
    REQUIRE(std::abs(m_ab - m_ba) <= 1e-9 * std::abs(m_ab));

    const auto t = random_rigid_transform(rng);
    const double m_t = mutual_inductance(transformed(a, t), transformed(b, t), 256);
    REQUIRE(std::abs(m_t - m_ab) <= 1e-9 * std::abs(m_ab));
  }
  // Spot-check at the default (higher) quadrature order as well.
  for (int trial = 0; trial < 4; ++trial) {
    auto [a, b] = oracle::random_separated_pair(rng);
    const double m_ab = mutual_inductance(a, b);
    const double m_ba = mutual_inductance(b, a);
    REQUIRE(std::abs(m_ab - m_ba) <= 1e-9 * std::abs(m_ab));
  }
}

TEST_CASE("mutual_inductance - quadrature refinement is converged") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 8; ++trial) {
    auto [a, b] = oracle::random_separated_pair(rng);
    const double m1 = mutual_inductance(a, b, 256);
    const double m2 = mutual_inductance(a, b, 512);
    REQUIRE(std::abs(m1 - m2) < 1e-6 * std::abs(m2));
  }
}

TEST_CASE("mutual_inductance - coplanar equal loops change sign with spacing") {
  // Two coplanar 15.8 mm loops: overlapping placement links opposing flux
  // through the shared lens region, so M is positive at 20 mm center spacing
  // and negative (dipole-like far field) at 30 mm. The zero crossing between
  // them is what the cancelled array layout exploits.
  CoilSpec a = single_turn_loop(15.8);
  CoilSpec b = single_turn_loop(15.8);
  b.center_mm = Vec3(20.0, 0.0, 0.0);
  const double m_near = mutual_inductance(a, b);
  b.center_mm = Vec3(30.0, 0.0, 0.0);
  const double m_far = mutual_inductance(a, b);
  CHECK(m_near > 0.0);
  CHECK(m_far < 0.0);
}

TEST_CASE("mutual_inductance - coincident loops are rejected") {
  CoilSpec a = single_turn_loop(21.0);
  CoilSpec b = a;
  CHECK_THROWS_AS(mutual_inductance(a, b), SingularEvaluationError);
  // Same circle traversed from the flipped normal is still coincident.
  b.normal = -a.normal;
  CHECK_THROWS_AS(mutual_inductance(a, b), SingularEvaluationError);
}

TEST_CASE("rx_mutual - agrees with a Neumann integral over the echo loop") {
  // The receiver models both pickups as dipoles: M = B(pos) . axis * (area *
  // turns). For the physically small echo coil (1 mm radius, 8 turns) the
  // dipole value must match the full Neumann integral over the positioned
  // loop to the finite-size correction O((r_ae / d)^2) ~ (1/20)^2 = 0.25%.
  CoilSpec tx = single_turn_loop(21.0);
  tx.turns = 10;

  ReceiverModel rx;
  rx.pose.position_mm = Vec3(4.0, -3.0, 20.0);
  rx.pose.axis = Vec3(0.2, 0.1, 1.0).normalized();
  rx.effective_area_turns_m2 = 5e-3;
  rx.load_resistance_ohm = 1000.0;
  rx.motional_inductance_h = 10e-3;
  rx.resonance_hz = 340e3;
  rx.ae_coil = single_turn_loop(1.0);
  rx.ae_coil.turns = 8;
  rx.ae_coil.series_resistance_ohm = 0.3;
  rx.ae_coil.self_inductance_h = 250e-9;

  const double m_dipole = ae_mutual(tx, rx);
  const double m_neumann = mutual_inductance(tx, positioned_ae_coil(rx));
  CHECK(std::abs(m_dipole - m_neumann) < 5e-3 * std::abs(m_neumann));

  // ME pickup and echo coil see the same field component, so their couplings
  // are exactly proportional: ratio = A_eff / (pi r_ae^2 N_ae)
  //   = 5e-3 / (pi * 1e-6 * 8) = 198.9436788...
  const double area_turns_ae = kPi * 1e-6 * 8.0;
  CHECK(rx_mutual(tx, rx) ==
        Catch::Approx(m_dipole * rx.effective_area_turns_m2 / area_turns_ae)
            .epsilon(1e-12));

  // Flipping the film axis negates the coupling.
  ReceiverModel flipped = rx;
  flipped.pose.axis = -rx.pose.axis;
  CHECK(rx_mutual(tx, flipped) == Catch::Approx(-rx_mutual(tx, rx)).epsilon(1e-12));
}

TEST_CASE("CoilSpec - resonance arithmetic and tank impedance") {
  // L = 10 uH tuned to 340 kHz: w0 = 2*pi*340e3 = 2136283.0044410592 rad/s,
  // C = 1 / (w0^2 L) = 1 / (4.563704...e12 * 1e-5) = 2.191202068389658e-8 F.
  CoilSpec c = single_turn_loop(15.8);
  c.turns = 10;
  c.compensation_capacitance_f = 2.191202068389658e-8;
  CHECK(c.resonant_frequency_hz() == Catch::Approx(340e3).epsilon(1e-12));

  const double w0 = 2.0 * kPi * 340e3;
  const auto z0 = c.tank_impedance(w0);
  CHECK(z0.real() == 0.5);
  CHECK(std::abs(z0.imag()) < 1e-9);  // series-resonant: reactance nulls

  // 10% above resonance the tank is net inductive.
  CHECK(c.tank_impedance(1.1 * w0).imag() > 0.0);
  CHECK(c.tank_impedance(0.9 * w0).imag() < 0.0);
}

TEST_CASE("CoilSpec and Pose - validation reports offending fields") {
  CoilSpec c;  // all zeros: radius, resistance, inductance invalid
  try {
    c.validate("coils[0]");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("coils[0].loop_radius_mm") != std::string::npos);
    CHECK(what.find("coils[0].series_resistance_ohm") != std::string::npos);
    CHECK(what.find("coils[0].self_inductance_h") != std::string::npos);
  }

  CoilSpec bad_normal = single_turn_loop(21.0);
  bad_normal.normal = Vec3(1.0, 1.0, 0.0);  // |n| = sqrt(2)
  CHECK_THROWS_AS(bad_normal.validate(), ValidationError);

  Pose p;
  p.axis = Vec3::Zero();
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("coupling_coefficient - definition and domain") {
  // k = M / sqrt(L1 L2): M = 2e-6, L1 = 10e-6, L2 = 16.2e-6
  //   sqrt(1.62e-10) = 1.2727922061357857e-5 -> k = 0.15713484026367722.
  CHECK(coupling_coefficient(2e-6, 10e-6, 16.2e-6) ==
        Catch::Approx(0.15713484026367722).epsilon(1e-12));
  CHECK_THROWS_AS(coupling_coefficient(1e-6, 0.0, 1e-6), DomainError);
}
