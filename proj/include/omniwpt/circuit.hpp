// SPDX-License-Identifier: Apache-2.0
//
// Coupled-resonator phasor network: mesh solve, receiver current,
// power-transfer efficiency, and the matched-load efficiency bound.
#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "omniwpt/common.hpp"
#include "omniwpt/magnetics.hpp"

namespace omniwpt {

using Complex = std::complex<double>;

// Per-channel drive request: non-negative amplitude plus a sign bit that the
// power stage realizes as a 180-degree phase flip.
struct Phasor {
  double amplitude_a = 0.0;
  int polarity = +1;  // +1 or -1

  Complex value() const { return Complex(polarity * amplitude_a, 0.0); }
};

// Drive for the whole array.  Inactive channels must carry zero amplitude and
// the active amplitudes must exhaust the squared-current budget.
struct DriveConfig {
  std::vector<Phasor> channels;
  std::vector<bool> active;
  double power_budget_a2 = 0.0;

  void validate() const {
    std::vector<ValidationIssue> issues;
    if (active.size() != channels.size())
      issues.push_back({"drive.active", "size " + std::to_string(channels.size()),
                        "size " + std::to_string(active.size())});
    if (!(power_budget_a2 > 0.0))
      issues.push_back({"drive.power_budget_a2", "> 0",
                        std::to_string(power_budget_a2)});
    double used = 0.0;
    for (std::size_t i = 0; i < channels.size(); ++i) {
      const auto& ch = channels[i];
      const std::string path = "drive.channels[" + std::to_string(i) + "]";
      if (!(ch.amplitude_a >= 0.0))
        issues.push_back({path + ".amplitude_a", ">= 0", std::to_string(ch.amplitude_a)});
      if (ch.polarity != +1 && ch.polarity != -1)
        issues.push_back({path + ".polarity", "+1 or -1", std::to_string(ch.polarity)});
      if (i < active.size() && !active[i] && ch.amplitude_a != 0.0)
        issues.push_back({path + ".amplitude_a", "0 when inactive",
                          std::to_string(ch.amplitude_a)});
      used += ch.amplitude_a * ch.amplitude_a;
    }
    if (power_budget_a2 > 0.0 && used > 0.0 &&
        std::abs(used - power_budget_a2) > 1e-9 * power_budget_a2)
      issues.push_back({"drive.channels", "sum of amplitude^2 == power_budget_a2 (" +
                                              std::to_string(power_budget_a2) + ")",
                        std::to_string(used)});
    if (!issues.empty()) throw ValidationError(issues);
  }
};

// Frequency-domain snapshot of the magnetic network: transmitter tank
// impedances, the symmetric TX-TX mutual matrix, TX-RX mutuals and the
// receiver branch impedance, all at a single angular frequency.
struct CouplingState {
  double omega = 0.0;
  std::vector<Complex> tx_impedances;
  Eigen::MatrixXd tx_tx_mutual_h;     // zero diagonal, symmetric
  std::vector<double> tx_rx_mutual_h;
  double rx_resistance_ohm = 0.0;
  double rx_reactance_ohm = 0.0;

  int n() const { return static_cast<int>(tx_impedances.size()); }

  void validate() const {
    std::vector<ValidationIssue> issues;
    if (!(omega > 0.0))
      issues.push_back({"coupling.omega", "> 0", std::to_string(omega)});
    const int nn = n();
    if (tx_tx_mutual_h.rows() != nn || tx_tx_mutual_h.cols() != nn)
      issues.push_back({"coupling.tx_tx_mutual_h",
                        std::to_string(nn) + "x" + std::to_string(nn),
                        std::to_string(tx_tx_mutual_h.rows()) + "x" +
                            std::to_string(tx_tx_mutual_h.cols())});
    else {
      for (int i = 0; i < nn; ++i) {
        if (tx_tx_mutual_h(i, i) != 0.0)
          issues.push_back({"coupling.tx_tx_mutual_h(" + std::to_string(i) + "," +
                                std::to_string(i) + ")",
                            "0 (diagonal)", std::to_string(tx_tx_mutual_h(i, i))});
        for (int j = i + 1; j < nn; ++j) {
          const double a = tx_tx_mutual_h(i, j), b = tx_tx_mutual_h(j, i);
          if (std::abs(a - b) > 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b))))
            issues.push_back({"coupling.tx_tx_mutual_h(" + std::to_string(i) + "," +
                                  std::to_string(j) + ")",
                              "symmetric", std::to_string(a) + " vs " + std::to_string(b)});
        }
      }
    }
    if (tx_rx_mutual_h.size() != static_cast<std::size_t>(nn))
      issues.push_back({"coupling.tx_rx_mutual_h", "size " + std::to_string(nn),
                        "size " + std::to_string(tx_rx_mutual_h.size())});
    for (int i = 0; i < nn; ++i)
      if (!(tx_impedances[i].real() > 0.0))
        issues.push_back({"coupling.tx_impedances[" + std::to_string(i) + "]",
                          "positive real part",
                          std::to_string(tx_impedances[i].real())});
    if (!(rx_resistance_ohm > 0.0))
      issues.push_back({"coupling.rx_resistance_ohm", "> 0",
                        std::to_string(rx_resistance_ohm)});
    if (!issues.empty()) throw ValidationError(issues);
  }
};

struct SolveResult {
  std::vector<Complex> tx_currents;
  Complex rx_current;
  std::vector<Complex> driver_voltages;
};

inline std::vector<Complex> currents_of(const DriveConfig& drive) {
  std::vector<Complex> out;
  out.reserve(drive.channels.size());
  for (const auto& ch : drive.channels) out.push_back(ch.value());
  return out;
}

// Receiver mesh current induced by the transmitter currents:
//   I_L = -j*omega * sum_i M_Li I_i / (R_L + j X_L).
inline Complex receiver_current(const CouplingState& cs,
                                const std::vector<Complex>& tx_currents) {
  if (tx_currents.size() != static_cast<std::size_t>(cs.n()))
    throw DomainError("receiver_current: expected " + std::to_string(cs.n()) +
                      " transmitter currents, got " +
                      std::to_string(tx_currents.size()));
  Complex emf(0.0, 0.0);
  for (int i = 0; i < cs.n(); ++i) emf += cs.tx_rx_mutual_h[i] * tx_currents[i];
  const Complex jw(0.0, cs.omega);
  return -jw * emf / Complex(cs.rx_resistance_ohm, cs.rx_reactance_ohm);
}

// Per-channel source voltage needed to impose the given transmitter currents,
// including both the TX-TX coupling terms and the voltage reflected from the
// moving receiver mesh.
inline std::vector<Complex> driver_voltages(const CouplingState& cs,
                                            const std::vector<Complex>& tx_currents,
                                            Complex rx_current) {
  const int nn = cs.n();
  const Complex jw(0.0, cs.omega);
  std::vector<Complex> v(nn);
  for (int i = 0; i < nn; ++i) {
    Complex vi = cs.tx_impedances[i] * tx_currents[i];
    for (int k = 0; k < nn; ++k)
      if (k != i) vi += jw * cs.tx_tx_mutual_h(i, k) * tx_currents[k];
    vi += jw * cs.tx_rx_mutual_h[i] * rx_current;
    v[i] = vi;
  }
  return v;
}

// Source voltage of one driver for the given transmitter currents.  The
// receiver mesh current is recovered internally, so stacking this over all
// channels reproduces exactly the voltage vector solve_network inverts.
inline Complex driver_voltage(const CouplingState& cs,
                              const std::vector<Complex>& tx_currents, int i) {
  if (i < 0 || i >= cs.n())
    throw DomainError("driver_voltage: channel " + std::to_string(i) +
                      " out of range [0, " + std::to_string(cs.n()) + ")");
  return driver_voltages(cs, tx_currents, receiver_current(cs, tx_currents))[i];
}

// Full mesh solve: given per-channel source voltages, recover the transmitter
// and receiver currents from the (n+1)x(n+1) impedance matrix.  The solution
// is checked against the original system; an excessive residual is reported
// as a numerical failure rather than returned silently.
inline SolveResult solve_network(const CouplingState& cs,
                                 const std::vector<Complex>& source_voltages) {
  const int nn = cs.n();
  if (source_voltages.size() != static_cast<std::size_t>(nn))
    throw DomainError("solve_network: expected " + std::to_string(nn) +
                      " source voltages, got " +
                      std::to_string(source_voltages.size()));
  const Complex jw(0.0, cs.omega);
  Eigen::MatrixXcd z(nn + 1, nn + 1);
  z.setZero();
  for (int i = 0; i < nn; ++i) {
    z(i, i) = cs.tx_impedances[i];
    for (int k = 0; k < nn; ++k)
      if (k != i) z(i, k) = jw * cs.tx_tx_mutual_h(i, k);
    z(i, nn) = jw * cs.tx_rx_mutual_h[i];
    z(nn, i) = jw * cs.tx_rx_mutual_h[i];
  }
  z(nn, nn) = Complex(cs.rx_resistance_ohm, cs.rx_reactance_ohm);

  Eigen::VectorXcd rhs(nn + 1);
  for (int i = 0; i < nn; ++i) rhs(i) = source_voltages[i];
  rhs(nn) = Complex(0.0, 0.0);

  Eigen::VectorXcd sol = z.partialPivLu().solve(rhs);
  const double residual = (z * sol - rhs).norm();
  const double scale = std::max(rhs.norm(), 1e-300);
  if (!(residual <= 1e-10 * scale))
    throw NumericalError("solve_network: residual " + std::to_string(residual) +
                         " exceeds tolerance for source norm " +
                         std::to_string(scale));

  SolveResult out;
  out.tx_currents.resize(nn);
  for (int i = 0; i < nn; ++i) out.tx_currents[i] = sol(i);
  out.rx_current = sol(nn);
  out.driver_voltages = source_voltages;
  return out;
}

// Power-transfer efficiency: received load power over total dissipated power.
inline double pte(const CouplingState& cs, const std::vector<Complex>& tx_currents) {
  if (tx_currents.size() != static_cast<std::size_t>(cs.n()))
    throw DomainError("pte: expected " + std::to_string(cs.n()) +
                      " transmitter currents, got " +
                      std::to_string(tx_currents.size()));
  double loss = 0.0, drive_power = 0.0;
  for (int i = 0; i < cs.n(); ++i) {
    const double mag2 = std::norm(tx_currents[i]);
    loss += cs.tx_impedances[i].real() * mag2;
    drive_power += mag2;
  }
  if (drive_power == 0.0)
    throw UndefinedEfficiencyError(
        "pte: all transmitter currents are zero; efficiency is undefined");
  const Complex il = receiver_current(cs, tx_currents);
  const double recv = cs.rx_resistance_ohm * std::norm(il);
  return recv / (loss + recv);
}

// Matched-current efficiency ceiling over all drives with the given active
// set: eta_max = S / (1 + S) with
//   S = R_L * omega^2 / (R_L^2 + X_L^2) * sum_i M_Li^2 / R_i.
inline double pte_upper_bound(const CouplingState& cs,
                              const std::vector<bool>& active_mask) {
  if (!active_mask.empty() &&
      active_mask.size() != static_cast<std::size_t>(cs.n()))
    throw DomainError("pte_upper_bound: mask size " +
                      std::to_string(active_mask.size()) + " != channel count " +
                      std::to_string(cs.n()));
  double sum = 0.0;
  bool any = false;
  for (int i = 0; i < cs.n(); ++i) {
    if (!active_mask.empty() && !active_mask[i]) continue;
    any = true;
    const double m = cs.tx_rx_mutual_h[i];
    sum += m * m / cs.tx_impedances[i].real();
  }
  if (!any)
    throw UndefinedEfficiencyError(
        "pte_upper_bound: active set is empty; efficiency is undefined");
  const double rl = cs.rx_resistance_ohm, xl = cs.rx_reactance_ohm;
  const double s = rl * cs.omega * cs.omega / (rl * rl + xl * xl) * sum;
  return s / (1.0 + s);
}

inline double pte_upper_bound(const CouplingState& cs) {
  return pte_upper_bound(cs, {});
}

// Refresh only the pose-dependent TX-RX couplings of an existing state; the
// TX-TX mutuals and impedances are geometry-fixed and stay untouched.
inline void update_rx_coupling(CouplingState& cs, const std::vector<CoilSpec>& coils,
                               const ReceiverModel& rx, const Pose& pose,
                               int segments = kFieldSegments) {
  if (coils.size() != static_cast<std::size_t>(cs.n()))
    throw DomainError("update_rx_coupling: coil count " +
                      std::to_string(coils.size()) + " != channel count " +
                      std::to_string(cs.n()));
  ReceiverModel posed = rx;
  posed.pose = pose;
  for (int i = 0; i < cs.n(); ++i)
    cs.tx_rx_mutual_h[i] = rx_mutual(coils[i], posed, segments);
}

// Assemble a CouplingState from coil geometry at a given receiver pose.
inline CouplingState make_coupling_state(const std::vector<CoilSpec>& coils,
                                         const ReceiverModel& rx, const Pose& pose,
                                         double omega,
                                         int segments = kMutualSegments) {
  const int nn = static_cast<int>(coils.size());
  CouplingState cs;
  cs.omega = omega;
  cs.tx_impedances.reserve(nn);
  for (const auto& c : coils) cs.tx_impedances.push_back(c.tank_impedance(omega));
  cs.tx_tx_mutual_h = Eigen::MatrixXd::Zero(nn, nn);
  for (int i = 0; i < nn; ++i)
    for (int j = i + 1; j < nn; ++j) {
      const double m = mutual_inductance(coils[i], coils[j], segments);
      cs.tx_tx_mutual_h(i, j) = m;
      cs.tx_tx_mutual_h(j, i) = m;
    }
  ReceiverModel posed = rx;
  posed.pose = pose;
  cs.tx_rx_mutual_h.reserve(nn);
  for (const auto& c : coils) cs.tx_rx_mutual_h.push_back(rx_mutual(c, posed));
  cs.rx_resistance_ohm = rx.load_resistance_ohm;
  cs.rx_reactance_ohm = rx.load_reactance_at(omega);
  return cs;
}

}  // namespace omniwpt
