// SPDX-License-Identifier: Apache-2.0
//
// Scenario files: the single JSON document that fixes every physical and
// protocol parameter of a simulation run.  Parsing is strict — unknown keys,
// duplicate keys and invariant violations are all reported with field paths —
// and emit/parse round-trips are lossless.
#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "omniwpt/allocation.hpp"
#include "omniwpt/common.hpp"
#include "omniwpt/echo.hpp"
#include "omniwpt/magnetics.hpp"

namespace omniwpt {

// Timing constants of the charge -> downlink -> task loop.
struct LoopConfig {
  double activation_hz = 20.0;     // AE sensing rate
  double ring_margin_s = 50e-6;    // tank ring-up/down allowance per AE cycle
  double charge_time_s = 0.5;      // storage-cap charge before first downlink
  double downlink_latency_s = 0.01;

  void validate(const std::string& path = "loop") const {
    std::vector<ValidationIssue> issues;
    if (!(activation_hz > 0.0))
      issues.push_back({path + ".activation_hz", "> 0", std::to_string(activation_hz)});
    if (!(ring_margin_s >= 0.0))
      issues.push_back({path + ".ring_margin_s", ">= 0", std::to_string(ring_margin_s)});
    if (!(charge_time_s >= 0.0))
      issues.push_back({path + ".charge_time_s", ">= 0", std::to_string(charge_time_s)});
    if (!(downlink_latency_s >= 0.0))
      issues.push_back({path + ".downlink_latency_s", ">= 0",
                        std::to_string(downlink_latency_s)});
    if (!issues.empty()) throw ValidationError(issues);
  }
};

enum class TrajectoryKind { Static, RotationSine };

// Declarative implant motion over the simulation window.  `rotation_sine`
// tilts the implant axis in the XZ plane by amplitude*sin(2 pi f t) around
// +z, at a fixed position.
struct TrajectoryConfig {
  TrajectoryKind kind = TrajectoryKind::Static;
  double amplitude_deg = 0.0;  // rotation_sine only
  double frequency_hz = 0.0;   // rotation_sine only
  double duration_s = 1.0;

  void validate(const std::string& path = "trajectory") const {
    std::vector<ValidationIssue> issues;
    if (!(duration_s > 0.0))
      issues.push_back({path + ".duration_s", "> 0", std::to_string(duration_s)});
    if (kind == TrajectoryKind::RotationSine) {
      if (!(frequency_hz > 0.0))
        issues.push_back({path + ".frequency_hz", "> 0", std::to_string(frequency_hz)});
      if (!(amplitude_deg >= 0.0 && amplitude_deg <= 180.0))
        issues.push_back({path + ".amplitude_deg", "in [0, 180]",
                          std::to_string(amplitude_deg)});
    }
    if (!issues.empty()) throw ValidationError(issues);
  }
};

// Single-coil reference transmitters used by compare_baselines.
struct BaselineConfig {
  CoilSpec single_small;
  CoilSpec single_large;
};

struct ScenarioConfig {
  double power_frequency_hz = 340e3;
  double budget_a2 = 0.0;
  double deactivation_threshold = 8.0;
  std::uint64_t seed = 0;
  std::vector<CoilSpec> coils;
  ReceiverModel receiver;
  RxChainConfig rx_chain;
  PwmLut pwm_lut;
  LoopConfig loop;
  BaselineConfig baselines;
  TrajectoryConfig trajectory;

  double omega() const { return 2.0 * kPi * power_frequency_hz; }

  void validate() const {
    std::vector<ValidationIssue> issues;
    const auto absorb = [&issues](auto&& fn) {
      try {
        fn();
      } catch (const ValidationError& e) {
        issues.insert(issues.end(), e.issues.begin(), e.issues.end());
      }
    };
    if (!(power_frequency_hz > 0.0))
      issues.push_back({"power_frequency_hz", "> 0", std::to_string(power_frequency_hz)});
    if (!(budget_a2 > 0.0))
      issues.push_back({"budget_a2", "> 0", std::to_string(budget_a2)});
    if (!(deactivation_threshold > 1.0))
      issues.push_back({"deactivation_threshold", "> 1",
                        std::to_string(deactivation_threshold)});
    if (coils.empty()) issues.push_back({"coils", "at least one coil", "empty list"});
    for (std::size_t i = 0; i < coils.size(); ++i)
      absorb([&] { coils[i].validate("coils[" + std::to_string(i) + "]"); });
    absorb([&] { receiver.validate("receiver"); });
    absorb([&] { rx_chain.validate("rx_chain"); });
    if (rx_chain.channel_gain_db.size() != coils.size())
      issues.push_back({"rx_chain.channel_gain_db",
                        "one gain per coil (" + std::to_string(coils.size()) + ")",
                        std::to_string(rx_chain.channel_gain_db.size()) + " entries"});
    absorb([&] { pwm_lut.validate(); });
    absorb([&] { loop.validate(); });
    absorb([&] { baselines.single_small.validate("baselines.single_small"); });
    absorb([&] { baselines.single_large.validate("baselines.single_large"); });
    absorb([&] { trajectory.validate(); });
    if (!issues.empty()) throw ValidationError(issues);
  }
};

namespace detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// DOM parsing silently keeps the last of duplicate keys, so duplicates are
// caught in a SAX pre-pass that tracks the key sets per open object.
class DuplicateKeyScanner : public nlohmann::json_sax<Json> {
 public:
  std::vector<ValidationIssue> issues;

  bool null() override { return true; }
  bool boolean(bool) override { return true; }
  bool number_integer(number_integer_t) override { return true; }
  bool number_unsigned(number_unsigned_t) override { return true; }
  bool number_float(number_float_t, const string_t&) override { return true; }
  bool string(string_t&) override { return true; }
  bool binary(binary_t&) override { return true; }

  bool start_object(std::size_t) override {
    frames_.push_back({true, {}, pending_, 0});
    pending_.clear();
    return true;
  }
  bool key(string_t& k) override {
    auto& frame = frames_.back();
    if (!frame.keys.insert(k).second)
      issues.push_back({path_to(frames_.size()) + "." + k, "a unique key",
                        "duplicated key"});
    pending_ = k;
    return true;
  }
  bool end_object() override {
    frames_.pop_back();
    return true;
  }
  bool start_array(std::size_t) override {
    frames_.push_back({false, {}, pending_, 0});
    pending_.clear();
    return true;
  }
  bool end_array() override {
    frames_.pop_back();
    return true;
  }
  bool parse_error(std::size_t, const std::string&,
                   const nlohmann::detail::exception& ex) override {
    issues.push_back({"$", "well-formed JSON", ex.what()});
    return false;
  }

 private:
  struct Frame {
    bool object;
    std::set<std::string> keys;
    std::string name;  // key (or index) this container sits under
    int next_index;
  };
  std::vector<Frame> frames_;
  std::string pending_;

  std::string path_to(std::size_t depth) const {
    std::string p = "$";
    for (std::size_t i = 0; i < depth; ++i)
      if (!frames_[i].name.empty()) p += "." + frames_[i].name;
    return p;
  }
};

// Strict object reader: every key must be consumed, every consumed key must
// exist and have the right shape.  Problems accumulate instead of throwing so
// one pass reports everything.
class ObjectCursor {
 public:
  ObjectCursor(const Json* node, std::string path, std::vector<ValidationIssue>& issues)
      : node_(node), path_(std::move(path)), issues_(&issues) {
    if (node_ && !node_->is_object()) {
      issues_->push_back({path_, "an object", std::string(node_->type_name())});
      node_ = nullptr;
    }
  }

  bool ok() const { return node_ != nullptr; }
  const std::string& path() const { return path_; }

  const Json* get(const std::string& key) {
    if (!node_) return nullptr;
    consumed_.insert(key);
    const auto it = node_->find(key);
    if (it == node_->end()) {
      issues_->push_back({path_ + "." + key, "present", "missing"});
      return nullptr;
    }
    return &*it;
  }

  // Optional lookup: no issue when absent.
  const Json* peek(const std::string& key) {
    if (!node_) return nullptr;
    consumed_.insert(key);
    const auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  double number(const std::string& key) {
    const Json* j = get(key);
    if (!j) return 0.0;
    if (!j->is_number()) {
      issues_->push_back({path_ + "." + key, "a number", std::string(j->type_name())});
      return 0.0;
    }
    return j->get<double>();
  }

  std::int64_t integer(const std::string& key) {
    const Json* j = get(key);
    if (!j) return 0;
    if (!j->is_number_integer()) {
      issues_->push_back({path_ + "." + key, "an integer", std::string(j->type_name())});
      return 0;
    }
    return j->get<std::int64_t>();
  }

  std::string text(const std::string& key) {
    const Json* j = get(key);
    if (!j) return {};
    if (!j->is_string()) {
      issues_->push_back({path_ + "." + key, "a string", std::string(j->type_name())});
      return {};
    }
    return j->get<std::string>();
  }

  Vec3 vec3(const std::string& key) {
    const Json* j = get(key);
    if (!j) return Vec3::Zero();
    if (!j->is_array() || j->size() != 3 ||
        !std::all_of(j->begin(), j->end(), [](const Json& v) { return v.is_number(); })) {
      issues_->push_back({path_ + "." + key, "an array of 3 numbers",
                          j->is_array() ? "array of size " + std::to_string(j->size())
                                        : std::string(j->type_name())});
      return Vec3::Zero();
    }
    return Vec3((*j)[0].get<double>(), (*j)[1].get<double>(), (*j)[2].get<double>());
  }

  std::vector<double> numbers(const std::string& key) {
    const Json* j = get(key);
    std::vector<double> out;
    if (!j) return out;
    if (!j->is_array()) {
      issues_->push_back({path_ + "." + key, "an array of numbers",
                          std::string(j->type_name())});
      return out;
    }
    for (std::size_t i = 0; i < j->size(); ++i) {
      const Json& v = (*j)[i];
      if (!v.is_number()) {
        issues_->push_back({path_ + "." + key + "[" + std::to_string(i) + "]",
                            "a number", std::string(v.type_name())});
        return {};
      }
      out.push_back(v.get<double>());
    }
    return out;
  }

  ObjectCursor object(const std::string& key) {
    return ObjectCursor(get(key), path_ + "." + key, *issues_);
  }

  // Flag keys the schema never asked for.
  void finish() {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it)
      if (!consumed_.contains(it.key()))
        issues_->push_back({path_ + "." + it.key(), "a key from the documented schema",
                            "unknown key"});
  }

 private:
  const Json* node_;
  std::string path_;
  std::vector<ValidationIssue>* issues_;
  std::set<std::string> consumed_;
};

inline CoilSpec parse_coil(ObjectCursor cur) {
  CoilSpec c;
  c.loop_radius_mm = cur.number("loop_radius_mm");
  c.turns = static_cast<int>(cur.integer("turns"));
  c.center_mm = cur.vec3("center_mm");
  c.normal = cur.vec3("normal");
  c.series_resistance_ohm = cur.number("series_resistance_ohm");
  c.self_inductance_h = cur.number("self_inductance_h");
  c.compensation_capacitance_f = cur.number("compensation_capacitance_f");
  cur.finish();
  return c;
}

// The echo coil rides on the implant, so its placement comes from the
// receiver pose rather than the file.
inline CoilSpec parse_ae_coil(ObjectCursor cur) {
  CoilSpec c;
  c.loop_radius_mm = cur.number("loop_radius_mm");
  c.turns = static_cast<int>(cur.integer("turns"));
  c.center_mm = Vec3::Zero();
  c.normal = Vec3::UnitZ();
  c.series_resistance_ohm = cur.number("series_resistance_ohm");
  c.self_inductance_h = cur.number("self_inductance_h");
  c.compensation_capacitance_f = cur.number("compensation_capacitance_f");
  cur.finish();
  return c;
}

inline OrderedJson emit_vec3(const Vec3& v) {
  return OrderedJson::array({v.x(), v.y(), v.z()});
}

inline OrderedJson emit_coil(const CoilSpec& c, bool with_pose) {
  OrderedJson j;
  j["loop_radius_mm"] = c.loop_radius_mm;
  j["turns"] = c.turns;
  if (with_pose) {
    j["center_mm"] = emit_vec3(c.center_mm);
    j["normal"] = emit_vec3(c.normal);
  }
  j["series_resistance_ohm"] = c.series_resistance_ohm;
  j["self_inductance_h"] = c.self_inductance_h;
  j["compensation_capacitance_f"] = c.compensation_capacitance_f;
  return j;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const std::string& text) {
  using detail::Json;
  std::vector<ValidationIssue> issues;

  detail::DuplicateKeyScanner scanner;
  Json::sax_parse(text, &scanner);
  issues = std::move(scanner.issues);
  // A syntax error is terminal; nothing below it can be trusted.
  if (!issues.empty() && issues.front().expected == "well-formed JSON")
    throw ValidationError(issues);

  const Json root = Json::parse(text);
  ScenarioConfig cfg;
  detail::ObjectCursor cur(&root, "$", issues);

  cfg.power_frequency_hz = cur.number("power_frequency_hz");
  cfg.budget_a2 = cur.number("budget_a2");
  cfg.deactivation_threshold = cur.number("deactivation_threshold");
  cfg.seed = static_cast<std::uint64_t>(cur.integer("seed"));

  if (const Json* coils = cur.get("coils")) {
    if (!coils->is_array())
      issues.push_back({"$.coils", "an array of coil objects",
                        std::string(coils->type_name())});
    else
      for (std::size_t i = 0; i < coils->size(); ++i)
        cfg.coils.push_back(detail::parse_coil(detail::ObjectCursor(
            &(*coils)[i], "$.coils[" + std::to_string(i) + "]", issues)));
  }

  {
    detail::ObjectCursor rx = cur.object("receiver");
    cfg.receiver.pose.position_mm = rx.vec3("position_mm");
    cfg.receiver.pose.axis = rx.vec3("axis");
    cfg.receiver.effective_area_turns_m2 = rx.number("effective_area_turns_m2");
    cfg.receiver.load_resistance_ohm = rx.number("load_resistance_ohm");
    cfg.receiver.motional_inductance_h = rx.number("motional_inductance_h");
    cfg.receiver.resonance_hz = rx.number("resonance_hz");
    cfg.receiver.ae_coil = detail::parse_ae_coil(rx.object("ae_coil"));
    rx.finish();
  }

  {
    detail::ObjectCursor rc = cur.object("rx_chain");
    cfg.rx_chain.channel_gain_db = rc.numbers("channel_gain_db");
    cfg.rx_chain.input_noise_density_dbm_hz = rc.number("input_noise_density_dbm_hz");
    cfg.rx_chain.noise_bandwidth_hz = rc.number("noise_bandwidth_hz");
    cfg.rx_chain.adc_bits = static_cast<int>(rc.integer("adc_bits"));
    cfg.rx_chain.ramp_full_scale_v = rc.number("ramp_full_scale_v");
    cfg.rx_chain.adc_clock_hz = rc.number("adc_clock_hz");
    cfg.rx_chain.ae_frequency_hz = rc.number("ae_frequency_hz");
    cfg.rx_chain.ae_cycles = static_cast<int>(rc.integer("ae_cycles"));
    cfg.rx_chain.warmup_cycles = static_cast<int>(rc.integer("warmup_cycles"));
    cfg.rx_chain.ae_current_a = rc.number("ae_current_a");
    rc.finish();
  }

  {
    detail::ObjectCursor lut = cur.object("pwm_lut");
    cfg.pwm_lut.duty = lut.numbers("duty");
    cfg.pwm_lut.current_a = lut.numbers("current_a");
    lut.finish();
  }

  {
    detail::ObjectCursor lp = cur.object("loop");
    cfg.loop.activation_hz = lp.number("activation_hz");
    cfg.loop.ring_margin_s = lp.number("ring_margin_s");
    cfg.loop.charge_time_s = lp.number("charge_time_s");
    cfg.loop.downlink_latency_s = lp.number("downlink_latency_s");
    lp.finish();
  }

  {
    detail::ObjectCursor bl = cur.object("baselines");
    cfg.baselines.single_small = detail::parse_coil(bl.object("single_small"));
    cfg.baselines.single_large = detail::parse_coil(bl.object("single_large"));
    bl.finish();
  }

  {
    detail::ObjectCursor tj = cur.object("trajectory");
    const std::string kind = tj.text("kind");
    if (kind == "static") {
      cfg.trajectory.kind = TrajectoryKind::Static;
    } else if (kind == "rotation_sine") {
      cfg.trajectory.kind = TrajectoryKind::RotationSine;
      cfg.trajectory.amplitude_deg = tj.number("amplitude_deg");
      cfg.trajectory.frequency_hz = tj.number("frequency_hz");
    } else if (tj.ok()) {
      issues.push_back({"$.trajectory.kind", "\"static\" or \"rotation_sine\"",
                        "\"" + kind + "\""});
    }
    cfg.trajectory.duration_s = tj.number("duration_s");
    tj.finish();
  }

  cur.finish();
  if (!issues.empty()) throw ValidationError(issues);

  cfg.validate();
  return cfg;
}

inline ScenarioConfig parse_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

inline std::string emit_scenario(const ScenarioConfig& cfg) {
  using detail::OrderedJson;
  OrderedJson j;
  j["power_frequency_hz"] = cfg.power_frequency_hz;
  j["budget_a2"] = cfg.budget_a2;
  j["deactivation_threshold"] = cfg.deactivation_threshold;
  j["seed"] = cfg.seed;
  j["coils"] = OrderedJson::array();
  for (const auto& c : cfg.coils) j["coils"].push_back(detail::emit_coil(c, true));
  {
    OrderedJson rx;
    rx["position_mm"] = detail::emit_vec3(cfg.receiver.pose.position_mm);
    rx["axis"] = detail::emit_vec3(cfg.receiver.pose.axis);
    rx["effective_area_turns_m2"] = cfg.receiver.effective_area_turns_m2;
    rx["load_resistance_ohm"] = cfg.receiver.load_resistance_ohm;
    rx["motional_inductance_h"] = cfg.receiver.motional_inductance_h;
    rx["resonance_hz"] = cfg.receiver.resonance_hz;
    rx["ae_coil"] = detail::emit_coil(cfg.receiver.ae_coil, false);
    j["receiver"] = std::move(rx);
  }
  {
    OrderedJson rc;
    rc["channel_gain_db"] = cfg.rx_chain.channel_gain_db;
    rc["input_noise_density_dbm_hz"] = cfg.rx_chain.input_noise_density_dbm_hz;
    rc["noise_bandwidth_hz"] = cfg.rx_chain.noise_bandwidth_hz;
    rc["adc_bits"] = cfg.rx_chain.adc_bits;
    rc["ramp_full_scale_v"] = cfg.rx_chain.ramp_full_scale_v;
    rc["adc_clock_hz"] = cfg.rx_chain.adc_clock_hz;
    rc["ae_frequency_hz"] = cfg.rx_chain.ae_frequency_hz;
    rc["ae_cycles"] = cfg.rx_chain.ae_cycles;
    rc["warmup_cycles"] = cfg.rx_chain.warmup_cycles;
    rc["ae_current_a"] = cfg.rx_chain.ae_current_a;
    j["rx_chain"] = std::move(rc);
  }
  j["pwm_lut"] = {{"duty", cfg.pwm_lut.duty}, {"current_a", cfg.pwm_lut.current_a}};
  j["loop"] = {{"activation_hz", cfg.loop.activation_hz},
               {"ring_margin_s", cfg.loop.ring_margin_s},
               {"charge_time_s", cfg.loop.charge_time_s},
               {"downlink_latency_s", cfg.loop.downlink_latency_s}};
  j["baselines"] = {{"single_small", detail::emit_coil(cfg.baselines.single_small, true)},
                    {"single_large", detail::emit_coil(cfg.baselines.single_large, true)}};
  {
    OrderedJson tj;
    if (cfg.trajectory.kind == TrajectoryKind::Static) {
      tj["kind"] = "static";
    } else {
      tj["kind"] = "rotation_sine";
      tj["amplitude_deg"] = cfg.trajectory.amplitude_deg;
      tj["frequency_hz"] = cfg.trajectory.frequency_hz;
    }
    tj["duration_s"] = cfg.trajectory.duration_s;
    j["trajectory"] = std::move(tj);
  }
  return j.dump(2) + "\n";
}

}  // namespace omniwpt
