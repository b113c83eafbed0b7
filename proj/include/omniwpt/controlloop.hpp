// SPDX-License-Identifier: Apache-2.0
//
// Closed-loop operation: the charge/downlink/task state machine, implant
// trajectories, periodic active-echo updates, tracking simulations with
// delivered-energy accounting, and the standard baseline comparisons.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "omniwpt/allocation.hpp"
#include "omniwpt/circuit.hpp"
#include "omniwpt/common.hpp"
#include "omniwpt/echo.hpp"
#include "omniwpt/scenario.hpp"

namespace omniwpt {

enum class Phase { Charging, Downlink, AeSensing, Stimulating, Idle };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Charging: return "Charging";
    case Phase::Downlink: return "Downlink";
    case Phase::AeSensing: return "AeSensing";
    case Phase::Stimulating: return "Stimulating";
    case Phase::Idle: return "Idle";
  }
  return "?";
}

struct ChargeComplete {};
struct DownlinkDone {};
struct AeTrigger {};
struct AeComplete {};
struct StimCommand {
  double amplitude_v = 0.0;
  double pulse_width_s = 0.0;
  double interval_s = 0.0;
  int pulse_count = 1;
};
struct StimComplete {};

using LoopEvent = std::variant<ChargeComplete, DownlinkDone, AeTrigger, AeComplete,
                               StimCommand, StimComplete>;

inline std::string event_name(const LoopEvent& e) {
  return std::visit(
      [](const auto& ev) -> std::string {
        using T = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<T, ChargeComplete>) return "ChargeComplete";
        else if constexpr (std::is_same_v<T, DownlinkDone>) return "DownlinkDone";
        else if constexpr (std::is_same_v<T, AeTrigger>) return "AeTrigger";
        else if constexpr (std::is_same_v<T, AeComplete>) return "AeComplete";
        else if constexpr (std::is_same_v<T, StimCommand>) return "StimCommand";
        else return "StimComplete";
      },
      e);
}

struct StimPulse {
  double start_s = 0.0;
  double width_s = 0.0;
  double amplitude_v = 0.0;
};

struct LoopState {
  Phase phase = Phase::Charging;
  DriveConfig current_drive;
  std::optional<EchoReading> last_reading;
  double sim_time_s = 0.0;
  Phase resume_phase = Phase::Charging;  // phase to restore after AeSensing
  std::vector<StimPulse> stim_trace;
};

// Deterministic transition table.  The caller owns the simulation clock;
// step() never advances sim_time_s.
inline LoopState step(LoopState state, const LoopEvent& event) {
  const auto reject = [&]() -> void {
    throw ProtocolError(phase_name(state.phase), event_name(event));
  };
  switch (state.phase) {
    case Phase::Charging:
      if (std::holds_alternative<ChargeComplete>(event)) {
        state.phase = Phase::Downlink;
      } else if (std::holds_alternative<AeTrigger>(event)) {
        state.resume_phase = Phase::Charging;
        state.phase = Phase::AeSensing;
      } else {
        reject();
      }
      break;
    case Phase::Downlink:
      if (std::holds_alternative<DownlinkDone>(event)) {
        state.phase = Phase::Charging;
      } else if (const auto* cmd = std::get_if<StimCommand>(&event)) {
        if (!(cmd->amplitude_v > 0.0 && cmd->pulse_width_s > 0.0 &&
              cmd->interval_s >= cmd->pulse_width_s && cmd->pulse_count >= 1))
          throw DomainError("step: malformed StimCommand parameters");
        for (int k = 0; k < cmd->pulse_count; ++k)
          state.stim_trace.push_back({state.sim_time_s + k * cmd->interval_s,
                                      cmd->pulse_width_s, cmd->amplitude_v});
        state.phase = Phase::Stimulating;
      } else if (std::holds_alternative<AeTrigger>(event)) {
        state.resume_phase = Phase::Charging;
        state.phase = Phase::AeSensing;
      } else {
        reject();
      }
      break;
    case Phase::AeSensing:
      if (std::holds_alternative<AeComplete>(event))
        state.phase = state.resume_phase;
      else
        reject();
      break;
    case Phase::Stimulating:
      if (std::holds_alternative<StimComplete>(event)) {
        state.phase = Phase::Charging;
      } else if (std::holds_alternative<AeTrigger>(event)) {
        state.resume_phase = Phase::Stimulating;
        state.phase = Phase::AeSensing;
      } else {
        reject();
      }
      break;
    case Phase::Idle:
      if (std::holds_alternative<AeTrigger>(event)) {
        state.resume_phase = Phase::Idle;
        state.phase = Phase::AeSensing;
      } else {
        reject();
      }
      break;
  }
  return state;
}

struct TrajectorySample {
  double t_s = 0.0;
  Pose pose;
};

// Time-ordered pose keyframes with piecewise-linear interpolation (positions
// lerped, axes lerped and renormalized; keyframes are dense enough that the
// difference from exact spherical interpolation is negligible).
struct Trajectory {
  std::vector<TrajectorySample> samples;

  void validate() const {
    std::vector<ValidationIssue> issues;
    if (samples.size() < 2)
      issues.push_back({"trajectory.samples", ">= 2 samples",
                        std::to_string(samples.size())});
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (i > 0 && !(samples[i].t_s > samples[i - 1].t_s))
        issues.push_back({"trajectory.samples[" + std::to_string(i) + "].t_s",
                          "> previous sample time", std::to_string(samples[i].t_s)});
      try {
        samples[i].pose.validate("trajectory.samples[" + std::to_string(i) + "].pose");
      } catch (const ValidationError& e) {
        issues.insert(issues.end(), e.issues.begin(), e.issues.end());
      }
    }
    if (!issues.empty()) throw ValidationError(issues);
  }

  double start_s() const { return samples.front().t_s; }
  double end_s() const { return samples.back().t_s; }

  Pose at(double t) const {
    if (t <= samples.front().t_s) return samples.front().pose;
    if (t >= samples.back().t_s) return samples.back().pose;
    const auto hi = std::upper_bound(
        samples.begin(), samples.end(), t,
        [](double v, const TrajectorySample& s) { return v < s.t_s; });
    const auto lo = hi - 1;
    const double u = (t - lo->t_s) / (hi->t_s - lo->t_s);
    Pose p;
    p.position_mm = (1.0 - u) * lo->pose.position_mm + u * hi->pose.position_mm;
    p.axis = ((1.0 - u) * lo->pose.axis + u * hi->pose.axis).normalized();
    return p;
  }
};

// Keyframe grid pitch used when expanding a declarative trajectory.
inline constexpr double kTrajectorySampleDt = 1e-3;

inline Trajectory make_trajectory(const ScenarioConfig& cfg) {
  cfg.trajectory.validate();
  Trajectory tr;
  const Pose base = cfg.receiver.pose;
  if (cfg.trajectory.kind == TrajectoryKind::Static) {
    tr.samples = {{0.0, base}, {cfg.trajectory.duration_s, base}};
    return tr;
  }
  const double amp = cfg.trajectory.amplitude_deg * kPi / 180.0;
  const double f = cfg.trajectory.frequency_hz;
  const int n = std::max(1, static_cast<int>(
                                std::ceil(cfg.trajectory.duration_s / kTrajectorySampleDt)));
  tr.samples.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = std::min(k * kTrajectorySampleDt, cfg.trajectory.duration_s);
    const double theta = amp * std::sin(2.0 * kPi * f * t);
    Pose p = base;
    // Tilt of the implant axis in the XZ plane, starting from +z.
    p.axis = Vec3(std::sin(theta), 0.0, std::cos(theta));
    tr.samples.push_back({t, p});
  }
  return tr;
}

enum class SensingMode { Ideal, Behavioral };

struct AeUpdateResult {
  DriveConfig drive;
  std::optional<EchoReading> reading;     // absent in Ideal mode and on retry
  std::vector<double> decoded_couplings_h;  // as seen by the allocator
  bool retry = false;                     // all-weak burst; previous drive kept
};

// One full sensing-and-reallocation cycle at the given implant pose:
// hi-Z -> echo burst -> sense -> decode -> deactivate -> allocate.
// Ideal mode bypasses the analog chain and feeds exact couplings through the
// same decision pipeline.
inline AeUpdateResult ae_update(const ScenarioConfig& cfg, const Pose& pose,
                                const DriveConfig& previous_drive,
                                std::uint64_t seed,
                                SensingMode mode = SensingMode::Behavioral,
                                int segments = kFieldSegments) {
  ReceiverModel rx = cfg.receiver;
  rx.pose = pose;

  AeUpdateResult out;
  if (mode == SensingMode::Behavioral) {
    const double omega_ae = 2.0 * kPi * cfg.rx_chain.ae_frequency_hz;
    const auto voltages =
        ae_forward(rx, cfg.coils, cfg.rx_chain.ae_current_a, omega_ae, segments);
    try {
      out.reading = sense(voltages, cfg.rx_chain, seed);
    } catch (const AllWeakError&) {
      out.drive = previous_drive;
      out.retry = true;
      return out;
    }
    out.decoded_couplings_h = decode_couplings(*out.reading, cfg.rx_chain);
  } else {
    out.decoded_couplings_h.reserve(cfg.coils.size());
    for (const auto& c : cfg.coils)
      out.decoded_couplings_h.push_back(ae_mutual(c, rx, segments));
  }

  std::vector<double> magnitudes(out.decoded_couplings_h.size());
  for (std::size_t i = 0; i < magnitudes.size(); ++i)
    magnitudes[i] = std::abs(out.decoded_couplings_h[i]);
  const auto mask = apply_deactivation(magnitudes, cfg.deactivation_threshold);

  std::vector<double> resistances;
  resistances.reserve(cfg.coils.size());
  for (const auto& c : cfg.coils) resistances.push_back(c.series_resistance_ohm);

  try {
    out.drive = optimal_allocation(out.decoded_couplings_h, cfg.budget_a2, mask,
                                   resistances);
  } catch (const NoCouplingError&) {
    out.drive = previous_drive;
    out.retry = true;
  }
  return out;
}

struct TrackingRow {
  double t_s = 0.0;
  Phase phase = Phase::Charging;
  std::vector<double> current_a;  // per-channel amplitude (0 while sensing)
  std::vector<double> duty;       // per-channel PWM duty
  std::vector<int> polarity_bit;  // 0 = positive drive, 1 = inverted
  double pte = 0.0;
  double cumulative_delivered_j = 0.0;
};

struct TrackingResult {
  std::vector<TrackingRow> rows;
  double delivered_j = 0.0;        // excludes AE interruption windows
  double ideal_delivered_j = 0.0;  // continuous per-step ideal-allocation oracle
  double interruption_fraction = 0.0;
  int ae_updates = 0;
  int ae_retries = 0;
};

struct TrackingOptions {
  double activation_hz = 0.0;  // 0: use the scenario's loop.activation_hz
  double sim_dt_s = 1e-3;
  SensingMode mode = SensingMode::Behavioral;
  std::uint64_t seed = 0;  // 0: use the scenario's seed
};

namespace detail {

// Received power and PTE for a drive at one pose; {0, 0} when nothing flows.
inline std::pair<double, double> drive_power(const CouplingState& cs,
                                             const std::vector<Complex>& currents) {
  double total = 0.0;
  for (const auto& c : currents) total += std::norm(c);
  if (total == 0.0) return {0.0, 0.0};
  const Complex il = receiver_current(cs, currents);
  const double recv = cs.rx_resistance_ohm * std::norm(il);
  double loss = 0.0;
  for (std::size_t i = 0; i < currents.size(); ++i)
    loss += cs.tx_impedances[i].real() * std::norm(currents[i]);
  return {recv, recv / (loss + recv)};
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t k) {
  std::uint64_t x = base + 0x9e3779b97f4a7c15ULL * (k + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace detail

// Integrate the closed loop over a trajectory.  The drive is refreshed by AE
// sensing at the activation rate and held in between; sensing windows suspend
// power delivery and are excluded from delivered energy.  A per-step
// ideal-allocation oracle (exact couplings, no interruption, no deactivation)
// is integrated alongside for loss accounting.
inline TrackingResult run_tracking(const ScenarioConfig& cfg,
                                   const Trajectory& trajectory,
                                   const TrackingOptions& options = {}) {
  trajectory.validate();
  const double dt = options.sim_dt_s;
  if (!(dt > 0.0)) throw DomainError("run_tracking: sim_dt_s must be > 0");
  const double activation_hz =
      options.activation_hz > 0.0 ? options.activation_hz : cfg.loop.activation_hz;
  const std::uint64_t seed0 = options.seed ? options.seed : cfg.seed;

  const double duration = trajectory.end_s() - trajectory.start_s();
  const double t0 = trajectory.start_s();
  const int n_steps = std::max(1, static_cast<int>(std::llround(duration / dt)));
  const int ae_period_steps =
      std::max(1, static_cast<int>(std::llround(1.0 / (activation_hz * dt))));
  const int charge_steps =
      static_cast<int>(std::llround(cfg.loop.charge_time_s / dt));
  const int downlink_steps =
      std::max(1, static_cast<int>(std::llround(cfg.loop.downlink_latency_s / dt)));
  const double t_ae = ae_cycle_duration(cfg.rx_chain, cfg.loop.ring_margin_s);
  if (t_ae >= dt)
    throw DomainError("run_tracking: AE cycle (" + std::to_string(t_ae) +
                      " s) does not fit inside one simulation step");

  // The TX-TX part of the network is pose-independent; build it once.
  CouplingState cs = make_coupling_state(cfg.coils, cfg.receiver,
                                         trajectory.at(t0), cfg.omega());

  std::vector<double> resistances;
  for (const auto& c : cfg.coils) resistances.push_back(c.series_resistance_ohm);

  LoopState state;
  state.phase = Phase::Charging;
  state.sim_time_s = t0;
  state.current_drive.power_budget_a2 = cfg.budget_a2;
  state.current_drive.channels.assign(cfg.coils.size(), Phasor{});
  state.current_drive.active.assign(cfg.coils.size(), false);

  TrackingResult result;
  result.rows.reserve(n_steps);
  int downlink_end_step = -1;

  for (int k = 0; k < n_steps; ++k) {
    const double t = t0 + k * dt;
    state.sim_time_s = t;

    if (charge_steps > 0 && k == charge_steps && state.phase == Phase::Charging) {
      state = step(state, ChargeComplete{});
      downlink_end_step = k + downlink_steps;
    }
    if (k == downlink_end_step && state.phase == Phase::Downlink)
      state = step(state, DownlinkDone{});

    bool sensing_this_step = false;
    if (k % ae_period_steps == 0 && state.phase == Phase::Charging) {
      state = step(state, AeTrigger{});
      sensing_this_step = true;
      const auto update =
          ae_update(cfg, trajectory.at(t), state.current_drive,
                    detail::mix_seed(seed0, result.ae_updates), options.mode);
      ++result.ae_updates;
      if (update.retry) ++result.ae_retries;
      if (update.reading) state.last_reading = update.reading;
      state.current_drive = update.drive;
    }

    // Row snapshot at t: power is suspended while sensing.
    TrackingRow row;
    row.t_s = t;
    row.phase = state.phase;
    const std::size_t nch = cfg.coils.size();
    row.current_a.assign(nch, 0.0);
    row.duty.assign(nch, 0.0);
    row.polarity_bit.assign(nch, 0);
    if (state.phase != Phase::AeSensing) {
      for (std::size_t i = 0; i < nch; ++i) {
        row.current_a[i] = state.current_drive.channels[i].amplitude_a;
        row.duty[i] = cfg.pwm_lut.duty_from_current(row.current_a[i]);
        row.polarity_bit[i] = state.current_drive.channels[i].polarity < 0 ? 1 : 0;
      }
    }

    // Energy over [t, t+dt): the sensing window consumes t_ae of it, after
    // which the freshly updated drive carries the remainder of the step.
    const Pose mid = trajectory.at(t + 0.5 * dt);
    update_rx_coupling(cs, cfg.coils, cfg.receiver, mid);
    const auto [recv_w, pte_now] =
        detail::drive_power(cs, currents_of(state.current_drive));
    const double powered_dt = sensing_this_step ? dt - t_ae : dt;
    result.delivered_j += recv_w * powered_dt;
    row.pte = pte_now;
    row.cumulative_delivered_j = result.delivered_j;
    result.rows.push_back(std::move(row));

    if (sensing_this_step) state = step(state, AeComplete{});

    // Oracle: per-step exact-coupling allocation, never interrupted.
    try {
      const auto ideal =
          optimal_allocation(cs.tx_rx_mutual_h, cfg.budget_a2, {}, resistances);
      const auto [ideal_recv_w, ideal_pte] =
          detail::drive_power(cs, currents_of(ideal));
      (void)ideal_pte;
      result.ideal_delivered_j += ideal_recv_w * dt;
    } catch (const NoCouplingError&) {
      // Exactly decoupled pose: the oracle delivers nothing either.
    }
  }

  const int ae_count = (n_steps + ae_period_steps - 1) / ae_period_steps;
  result.interruption_fraction = ae_count * t_ae / (n_steps * dt);
  return result;
}

inline TrackingResult run_tracking(const ScenarioConfig& cfg,
                                   const Trajectory& trajectory,
                                   double activation_hz) {
  TrackingOptions options;
  options.activation_hz = activation_hz;
  return run_tracking(cfg, trajectory, options);
}

struct BaselinePte {
  double single_small = 0.0;
  double single_large = 0.0;
  double three_fixed = 0.0;
  double three_ae = 0.0;
};

// PTE of the four standard systems at each pose, all under the same total
// squared-current budget.  `three_fixed` drives equal currents with fixed
// positive polarity; `three_ae` runs the ideal-sensing adaptive loop.
inline std::vector<BaselinePte> compare_baselines(const ScenarioConfig& cfg,
                                                  const std::vector<Pose>& poses) {
  const double omega = cfg.omega();
  CouplingState array_cs =
      make_coupling_state(cfg.coils, cfg.receiver, cfg.receiver.pose, omega);
  CouplingState small_cs = make_coupling_state({cfg.baselines.single_small},
                                               cfg.receiver, cfg.receiver.pose, omega);
  CouplingState large_cs = make_coupling_state({cfg.baselines.single_large},
                                               cfg.receiver, cfg.receiver.pose, omega);

  const double full = std::sqrt(cfg.budget_a2);
  const double equal = std::sqrt(cfg.budget_a2 / cfg.coils.size());
  const std::vector<Complex> single_current{Complex(full, 0.0)};
  const std::vector<Complex> fixed_currents(cfg.coils.size(), Complex(equal, 0.0));

  DriveConfig none;
  none.power_budget_a2 = cfg.budget_a2;
  none.channels.assign(cfg.coils.size(), Phasor{});
  none.active.assign(cfg.coils.size(), false);

  std::vector<BaselinePte> out;
  out.reserve(poses.size());
  for (const auto& pose : poses) {
    BaselinePte row;
    update_rx_coupling(small_cs, {cfg.baselines.single_small}, cfg.receiver, pose);
    row.single_small = detail::drive_power(small_cs, single_current).second;
    update_rx_coupling(large_cs, {cfg.baselines.single_large}, cfg.receiver, pose);
    row.single_large = detail::drive_power(large_cs, single_current).second;
    update_rx_coupling(array_cs, cfg.coils, cfg.receiver, pose);
    row.three_fixed = detail::drive_power(array_cs, fixed_currents).second;
    const auto update = ae_update(cfg, pose, none, cfg.seed, SensingMode::Ideal);
    row.three_ae =
        update.retry ? 0.0
                     : detail::drive_power(array_cs, currents_of(update.drive)).second;
    out.push_back(row);
  }
  return out;
}

}  // namespace omniwpt
