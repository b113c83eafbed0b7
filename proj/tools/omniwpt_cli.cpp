// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// omniwpt: command-line front end for the coil-array simulation library.
// Every subcommand prints a JSON summary on stdout; artifacts (CSV, SVG,
// JSON) go into the directory named by --out.  Errors are JSON on stderr:
// exit 2 for bad input (usage, scenario validation), 3 for runtime failures.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "omniwpt/arraydesign.hpp"
#include "omniwpt/controlloop.hpp"
#include "omniwpt/paspectrum.hpp"
#include "omniwpt/scenario.hpp"
#include "omniwpt/sweeps.hpp"

namespace {

using Json = nlohmann::ordered_json;
using namespace omniwpt;

// Ensures --out exists and remembers everything written there.
class OutDir {
 public:
  explicit OutDir(std::string dir) : dir_(std::move(dir)) {}

  bool enabled() const { return !dir_.empty(); }

  std::string path(const std::string& name) {
    std::filesystem::create_directories(dir_);
    const std::string p = (std::filesystem::path(dir_) / name).string();
    written_.push_back(p);
    return p;
  }

  Json files() const { return Json(written_); }

 private:
  std::string dir_;
  std::vector<std::string> written_;
};

void emit_table(const Table& t, OutDir& out, const std::string& stem,
                const std::string& format, const std::string& title, Json& summary) {
  if (!out.enabled()) return;
  write_csv(t, out.path(stem + ".csv"));
  if (format == "svg") write_svg(t, out.path(stem + ".svg"), title);
  summary["files"] = out.files();
}

Json cmd_validate(const std::string& scenario_path) {
  const ScenarioConfig cfg = parse_scenario_file(scenario_path);
  Json j;
  j["command"] = "validate-scenario";
  j["scenario"] = scenario_path;
  j["valid"] = true;
  j["coils"] = cfg.coils.size();
  j["power_frequency_hz"] = cfg.power_frequency_hz;
  j["budget_a2"] = cfg.budget_a2;
  j["trajectory_kind"] =
      cfg.trajectory.kind == TrajectoryKind::Static ? "static" : "rotation_sine";
  j["trajectory_duration_s"] = cfg.trajectory.duration_s;
  return j;
}

Json cmd_design_array(const std::string& scenario_path, double d_min_mm,
                      double d_max_mm, double tol_mm, OutDir& out) {
  const ScenarioConfig cfg = parse_scenario_file(scenario_path);
  const CoilSpec proto = cfg.coils.at(0);
  const double omega = cfg.omega();

  const double spacing = find_cancellation_distance(proto, d_min_mm, d_max_mm, tol_mm);
  const std::vector<CoilSpec> layout = layout_three_coils(proto, spacing);
  const ArrayReport report = validate_array(layout, omega);

  Json j;
  j["command"] = "design-array";
  j["scenario"] = scenario_path;
  j["prototype_radius_mm"] = proto.loop_radius_mm;
  j["cancellation_spacing_mm"] = spacing;
  j["max_abs_k"] = report.max_abs_k;
  j["max_voltage_perturbation"] = report.max_voltage_perturbation;
  j["decoupled"] = report.decoupled;
  Json coils = Json::array();
  for (const auto& c : layout)
    coils.push_back({{"center_mm", {c.center_mm.x(), c.center_mm.y(), c.center_mm.z()}},
                     {"normal", {c.normal.x(), c.normal.y(), c.normal.z()}}});
  j["layout"] = coils;
  Json pairs = Json::array();
  for (const auto& p : report.pairs)
    pairs.push_back({{"i", p.i},
                     {"j", p.j},
                     {"mutual_h", p.mutual_h},
                     {"coupling_k", p.coupling_k},
                     {"voltage_perturbation", p.voltage_perturbation}});
  j["pairs"] = pairs;

  if (out.enabled()) {
    std::ofstream f(out.path("array_design.json"), std::ios::binary);
    if (!f) throw IoError("design-array: cannot write array_design.json");
    f << j.dump(2) << "\n";
    j["files"] = out.files();
  }
  return j;
}

Json cmd_pa_spectrum(int steps, const std::string& format, OutDir& out) {
  if (steps < 2) throw DomainError("pa-spectrum: need at least 2 steps");
  Table t;
  t.header = {"duty", "b1", "b3", "fundamental_loss_db",
              "third_harmonic_suppression_db"};
  for (int i = 1; i <= steps; ++i) {
    const double duty = 0.5 * i / steps;
    const auto b = three_level_spectrum(duty, 3);
    const auto tr = harmonic_tradeoff(duty);
    t.push_row({duty, b[0], b[2], tr.fundamental_loss_db,
                tr.third_harmonic_suppression_db});
  }

  const auto null_point = harmonic_tradeoff(1.0 / 3.0);
  Json j;
  j["command"] = "pa-spectrum";
  j["steps"] = steps;
  j["third_null_duty"] = 1.0 / 3.0;
  j["third_null_fundamental_loss_db"] = null_point.fundamental_loss_db;
  j["third_null_suppression_db"] = null_point.third_harmonic_suppression_db;
  emit_table(t, out, "pa_spectrum", format, "three-level PA spectrum", j);
  return j;
}

Json cmd_sweep(const std::string& scenario_path, const std::string& axis, int steps,
               const std::string& format, double threshold, OutDir& out) {
  ScenarioConfig cfg = parse_scenario_file(scenario_path);
  if (threshold > 0.0) cfg.deactivation_threshold = threshold;

  const bool rotation = axis == "rotation";
  const Table t =
      rotation ? run_rotation_sweep(cfg, steps) : run_lateral_sweep(cfg, steps);

  Json j;
  j["command"] = "sweep";
  j["axis"] = axis;
  j["scenario"] = scenario_path;
  j["steps"] = steps;
  double ae3_min = 1.0;
  for (const auto& row : t.rows) ae3_min = std::min(ae3_min, std::stod(row[4]));
  j["pte_ae3_min"] = ae3_min;
  j["pte_ae3_last"] = std::stod(t.rows.back()[4]);
  j["pte_single_small_last"] = std::stod(t.rows.back()[1]);
  emit_table(t, out, rotation ? "rotation_sweep" : "lateral_sweep", format,
             rotation ? "axis rotation sweep" : "lateral offset sweep", j);
  return j;
}

Json cmd_oracle_sweep(const std::string& scenario_path, int steps,
                      const std::string& format, OutDir& out) {
  const ScenarioConfig cfg = parse_scenario_file(scenario_path);
  // Standard hard pose for the brute-force oracle: implant on the array axis
  // with its coil axis fully transverse.
  Pose pose;
  pose.position_mm = Vec3(0.0, 0.0, 15.0);
  pose.axis = Vec3::UnitX();

  const Table t = run_current_grid(cfg, pose, steps);

  CouplingState cs = make_coupling_state(cfg.coils, cfg.receiver, pose, cfg.omega());
  update_rx_coupling(cs, cfg.coils, cfg.receiver, pose);
  std::vector<double> res;
  for (const auto& c : cfg.coils) res.push_back(c.series_resistance_ohm);
  const DriveConfig best =
      optimal_allocation(cs.tx_rx_mutual_h, cfg.budget_a2, {}, res);
  std::vector<Complex> drive;
  for (const auto& ch : best.channels)
    drive.emplace_back(ch.amplitude_a * ch.polarity, 0.0);
  const double analytic = pte(cs, drive);

  double best_grid = 0.0;
  for (const auto& row : t.rows)
    best_grid = std::max({best_grid, std::stod(row[2]), std::stod(row[3])});

  Json j;
  j["command"] = "oracle-sweep";
  j["scenario"] = scenario_path;
  j["steps"] = steps;
  j["pose_position_mm"] = {pose.position_mm.x(), pose.position_mm.y(),
                           pose.position_mm.z()};
  j["pose_axis"] = {pose.axis.x(), pose.axis.y(), pose.axis.z()};
  j["best_grid_pte"] = best_grid;
  j["analytic_pte"] = analytic;
  j["grid_over_analytic"] = analytic > 0.0 ? best_grid / analytic : 0.0;
  emit_table(t, out, "current_grid", format, "current-ratio oracle", j);
  return j;
}

Json cmd_simulate(const std::string& scenario_path, std::uint64_t seed,
                  double threshold, double activation_hz, const std::string& mode,
                  OutDir& out) {
  ScenarioConfig cfg = parse_scenario_file(scenario_path);
  if (threshold > 0.0) cfg.deactivation_threshold = threshold;

  TrackingOptions opt;
  opt.seed = seed;
  opt.activation_hz = activation_hz;
  opt.mode = mode == "ideal" ? SensingMode::Ideal : SensingMode::Behavioral;

  const Trajectory trajectory = make_trajectory(cfg);
  const TrackingResult res = run_tracking(cfg, trajectory, opt);

  Json j;
  j["command"] = "simulate";
  j["scenario"] = scenario_path;
  j["mode"] = mode;
  j["seed"] = seed ? seed : cfg.seed;
  j["duration_s"] = cfg.trajectory.duration_s;
  j["steps"] = res.rows.size();
  j["delivered_j"] = res.delivered_j;
  j["ideal_delivered_j"] = res.ideal_delivered_j;
  j["tracking_ratio"] =
      res.ideal_delivered_j > 0.0 ? res.delivered_j / res.ideal_delivered_j : 0.0;
  j["ae_updates"] = res.ae_updates;
  j["ae_retries"] = res.ae_retries;
  j["interruption_fraction"] = res.interruption_fraction;
  if (out.enabled()) {
    write_csv(run_log_table(cfg, res), out.path("run_log.csv"));
    j["files"] = out.files();
  }
  return j;
}

int fail(const std::string& type, const std::string& message, int code,
         const Json& extra = Json::object()) {
  Json err;
  err["error"] = {{"type", type}, {"message", message}};
  for (auto it = extra.begin(); it != extra.end(); ++it)
    err["error"][it.key()] = it.value();
  std::cerr << err.dump(2) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"omnidirectional wireless-power-transfer simulator"};
  app.require_subcommand(1);

  std::string scenario, out_dir, format = "csv", axis, mode = "behavioral";
  int pa_steps = 101, sweep_steps = 19, oracle_steps = 101;
  std::uint64_t seed = 0;
  double threshold = 0.0, activation_hz = 0.0;
  double d_min_mm = 12.0, d_max_mm = 40.0, tol_mm = 0.01;

  const auto add_scenario = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario, "scenario JSON file")
        ->required()
        ->check(CLI::ExistingFile);
  };
  const auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "output directory for artifacts");
  };
  const auto add_format = [&](CLI::App* cmd) {
    cmd->add_option("--format", format, "artifact format")
        ->check(CLI::IsMember({"csv", "svg"}));
  };

  CLI::App* validate = app.add_subcommand("validate-scenario",
                                          "parse and validate a scenario file");
  add_scenario(validate);

  CLI::App* design = app.add_subcommand(
      "design-array", "solve the mutual-inductance cancellation layout");
  add_scenario(design);
  add_out(design);
  design->add_option("--min-mm", d_min_mm, "bracket lower bound [mm]");
  design->add_option("--max-mm", d_max_mm, "bracket upper bound [mm]");
  design->add_option("--tol-mm", tol_mm, "bisection tolerance [mm]");

  CLI::App* pa = app.add_subcommand("pa-spectrum",
                                    "three-level drive harmonic trade-off table");
  pa->add_option("--steps", pa_steps, "number of duty-cycle samples");
  add_out(pa);
  add_format(pa);

  CLI::App* sweep = app.add_subcommand("sweep", "baseline comparison sweeps");
  add_scenario(sweep);
  sweep->add_option("--axis", axis, "sweep axis")
      ->required()
      ->check(CLI::IsMember({"rotation", "lateral"}));
  sweep->add_option("--steps", sweep_steps, "number of poses");
  sweep->add_option("--threshold", threshold, "override deactivation threshold");
  add_out(sweep);
  add_format(sweep);

  CLI::App* oracle = app.add_subcommand(
      "oracle-sweep", "brute-force current-ratio grid at the transverse pose");
  add_scenario(oracle);
  oracle->add_option("--steps", oracle_steps, "number of ratio samples");
  add_out(oracle);
  add_format(oracle);

  CLI::App* sim = app.add_subcommand("simulate",
                                     "closed-loop tracking over the trajectory");
  add_scenario(sim);
  sim->add_option("--seed", seed, "RNG seed override (0: scenario seed)");
  sim->add_option("--threshold", threshold, "override deactivation threshold");
  sim->add_option("--activation-hz", activation_hz,
                  "override AE sensing rate (0: scenario rate)");
  sim->add_option("--mode", mode, "sensing model")
      ->check(CLI::IsMember({"ideal", "behavioral"}));
  add_out(sim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    OutDir out(out_dir);
    Json summary;
    if (*validate) summary = cmd_validate(scenario);
    if (*design) summary = cmd_design_array(scenario, d_min_mm, d_max_mm, tol_mm, out);
    if (*pa) summary = cmd_pa_spectrum(pa_steps, format, out);
    if (*sweep) summary = cmd_sweep(scenario, axis, sweep_steps, format, threshold, out);
    if (*oracle) summary = cmd_oracle_sweep(scenario, oracle_steps, format, out);
    if (*sim) summary = cmd_simulate(scenario, seed, threshold, activation_hz, mode, out);
    std::cout << summary.dump(2) << "\n";
    return 0;
  } catch (const ValidationError& e) {
    Json issues = Json::array();
    for (const auto& i : e.issues)
      issues.push_back(
          Json{{"path", i.path}, {"expected", i.expected}, {"found", i.found}});
    return fail("validation", e.what(), 2, Json{{"issues", issues}});
  } catch (const DomainError& e) {
    return fail("domain", e.what(), 3);
  } catch (const NumericalError& e) {
    return fail("numerical", e.what(), 3);
  } catch (const IoError& e) {
    return fail("io", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 3);
  }
}
