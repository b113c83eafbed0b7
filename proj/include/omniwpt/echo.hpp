// SPDX-License-Identifier: Apache-2.0
//
// Active-echo sensing: the implant briefly re-radiates at a dedicated
// frequency, and each transmitter channel amplifies, ramp-digitizes and
// phase-compares the picked-up voltage to recover signed coupling estimates.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "omniwpt/common.hpp"
#include "omniwpt/magnetics.hpp"

namespace omniwpt {

// Analog front end shared by all channels plus the echo excitation itself.
struct RxChainConfig {
  std::vector<double> channel_gain_db;         // one entry per transmitter channel
  double input_noise_density_dbm_hz = -161.0;  // into 50 ohm
  double noise_bandwidth_hz = 100e3;
  int adc_bits = 8;
  double ramp_full_scale_v = 1.5;
  double adc_clock_hz = 400e6;
  double ae_frequency_hz = 1.35e6;
  int ae_cycles = 16;
  int warmup_cycles = 8;
  double ae_current_a = 0.02;

  void validate(const std::string& prefix = "rx_chain") const {
    std::vector<ValidationIssue> issues;
    if (channel_gain_db.empty())
      issues.push_back({prefix + ".channel_gain_db", "non-empty", "empty"});
    else {
      const auto [lo, hi] =
          std::minmax_element(channel_gain_db.begin(), channel_gain_db.end());
      if (*hi - *lo > 0.2)
        issues.push_back({prefix + ".channel_gain_db",
                          "channel mismatch <= 0.2 dB",
                          std::to_string(*hi - *lo) + " dB spread"});
      for (std::size_t i = 0; i < channel_gain_db.size(); ++i)
        if (!std::isfinite(channel_gain_db[i]))
          issues.push_back({prefix + ".channel_gain_db[" + std::to_string(i) + "]",
                            "finite", "non-finite"});
    }
    if (adc_bits < 1 || adc_bits > 16)
      issues.push_back({prefix + ".adc_bits", "in [1, 16]", std::to_string(adc_bits)});
    if (!(ramp_full_scale_v > 0.0))
      issues.push_back({prefix + ".ramp_full_scale_v", "> 0",
                        std::to_string(ramp_full_scale_v)});
    if (!(adc_clock_hz > 0.0))
      issues.push_back({prefix + ".adc_clock_hz", "> 0", std::to_string(adc_clock_hz)});
    if (!(ae_frequency_hz > 0.0))
      issues.push_back({prefix + ".ae_frequency_hz", "> 0",
                        std::to_string(ae_frequency_hz)});
    if (!(noise_bandwidth_hz > 0.0))
      issues.push_back({prefix + ".noise_bandwidth_hz", "> 0",
                        std::to_string(noise_bandwidth_hz)});
    if (ae_cycles < 1)
      issues.push_back({prefix + ".ae_cycles", ">= 1", std::to_string(ae_cycles)});
    if (warmup_cycles < 0)
      issues.push_back({prefix + ".warmup_cycles", ">= 0",
                        std::to_string(warmup_cycles)});
    if (!(ae_current_a > 0.0))
      issues.push_back({prefix + ".ae_current_a", "> 0", std::to_string(ae_current_a)});
    if (!issues.empty()) throw ValidationError(issues);
  }

  double gain_linear(std::size_t channel) const {
    return std::pow(10.0, channel_gain_db.at(channel) / 20.0);
  }
  double lsb_v() const { return ramp_full_scale_v / std::exp2(adc_bits); }
  int code_max() const { return (1 << adc_bits) - 1; }
  // RMS input-referred noise voltage across the 50-ohm front end.
  double input_noise_sigma_v() const {
    const double density_w_hz =
        std::pow(10.0, (input_noise_density_dbm_hz - 30.0) / 10.0);
    return std::sqrt(density_w_hz * noise_bandwidth_hz * 50.0);
  }
};

// Result of one sensing burst.  The ramp runs downward from full scale, so
// stronger channels finish first and carry smaller codes.
struct EchoReading {
  std::vector<int> amplitude_codes;      // per channel, 0 .. 2^bits - 1
  std::vector<int> completion_order;     // channel indices, first finisher first
  int reference_channel = 0;             // == completion_order.front()
  std::vector<int> relative_polarities;  // 0 = same sign as reference, 1 = opposed
  bool saturated = false;                // some channel hit the ramp top

  void validate() const {
    std::vector<ValidationIssue> issues;
    const std::size_t n = amplitude_codes.size();
    if (completion_order.size() != n)
      issues.push_back({"reading.completion_order", "size " + std::to_string(n),
                        "size " + std::to_string(completion_order.size())});
    if (relative_polarities.size() != n)
      issues.push_back({"reading.relative_polarities", "size " + std::to_string(n),
                        "size " + std::to_string(relative_polarities.size())});
    std::vector<bool> seen(n, false);
    for (std::size_t k = 0; k < completion_order.size(); ++k) {
      const int c = completion_order[k];
      if (c < 0 || static_cast<std::size_t>(c) >= n || seen[c]) {
        issues.push_back({"reading.completion_order[" + std::to_string(k) + "]",
                          "a permutation of channel indices", std::to_string(c)});
        break;
      }
      seen[c] = true;
      if (k > 0 && amplitude_codes[c] < amplitude_codes[completion_order[k - 1]])
        issues.push_back({"reading.completion_order[" + std::to_string(k) + "]",
                          "codes of later finishers must not be smaller",
                          std::to_string(amplitude_codes[c]) + " after " +
                              std::to_string(amplitude_codes[completion_order[k - 1]])});
    }
    if (!completion_order.empty() && reference_channel != completion_order.front())
      issues.push_back({"reading.reference_channel", "first finisher " +
                            std::to_string(completion_order.front()),
                        std::to_string(reference_channel)});
    for (std::size_t i = 0; i < relative_polarities.size(); ++i)
      if (relative_polarities[i] != 0 && relative_polarities[i] != 1)
        issues.push_back({"reading.relative_polarities[" + std::to_string(i) + "]",
                          "0 or 1", std::to_string(relative_polarities[i])});
    if (static_cast<std::size_t>(reference_channel) < relative_polarities.size() &&
        relative_polarities[reference_channel] != 0)
      issues.push_back({"reading.relative_polarities[reference]", "0",
                        std::to_string(relative_polarities[reference_channel])});
    if (!issues.empty()) throw ValidationError(issues);
  }
};

// Open-circuit voltage phasor each channel sees while the implant re-radiates
// at the echo frequency: V_i = j omega_ae M_i I_ae.  The transmitter tanks
// are in high-impedance mode and do not load the echo.
inline std::vector<std::complex<double>> ae_forward(
    const ReceiverModel& rx, const std::vector<CoilSpec>& tx_coils,
    double ae_current_a, double omega_ae, int segments = kFieldSegments) {
  std::vector<std::complex<double>> v;
  v.reserve(tx_coils.size());
  for (const auto& c : tx_coils) {
    const double m = ae_mutual(c, rx, segments);
    v.emplace_back(0.0, omega_ae * m * ae_current_a);
  }
  return v;
}

// Amplify, add input-referred noise, and digitize with the shared reverse
// ramp.  Throws AllWeakError when no channel rises above one LSB, i.e. the
// burst carried no usable signal anywhere.
inline EchoReading sense(const std::vector<std::complex<double>>& voltages,
                         const RxChainConfig& chain, std::uint64_t seed) {
  const std::size_t n = voltages.size();
  if (n != chain.channel_gain_db.size())
    throw DomainError("sense: " + std::to_string(n) + " voltages for " +
                      std::to_string(chain.channel_gain_db.size()) + " channels");
  std::mt19937_64 rng(seed);
  const double sigma_in = chain.input_noise_sigma_v();
  const double fs = chain.ramp_full_scale_v;
  const double steps = std::exp2(chain.adc_bits);

  EchoReading r;
  r.amplitude_codes.resize(n);
  bool any_signal = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double amp_in =
        std::max(0.0, std::abs(voltages[i]) + sigma_in * detail::gaussian(rng));
    const double amp_out = amp_in * chain.gain_linear(i);
    const int raw = static_cast<int>(std::ceil(steps * (1.0 - amp_out / fs)));
    if (raw <= 0) r.saturated = true;
    if (raw < static_cast<int>(steps)) any_signal = true;
    r.amplitude_codes[i] = std::clamp(raw, 0, chain.code_max());
  }
  if (!any_signal)
    throw AllWeakError("sense: all channels below one LSB; no echo detected");

  r.completion_order.resize(n);
  std::iota(r.completion_order.begin(), r.completion_order.end(), 0);
  std::stable_sort(r.completion_order.begin(), r.completion_order.end(),
                   [&](int a, int b) {
                     return r.amplitude_codes[a] < r.amplitude_codes[b];
                   });
  r.reference_channel = r.completion_order.front();

  const std::complex<double> vref = voltages[r.reference_channel];
  r.relative_polarities.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    r.relative_polarities[i] =
        std::real(voltages[i] * std::conj(vref)) < 0.0 ? 1 : 0;
  return r;
}

// Invert one reading into signed coupling estimates (henries), taking the
// reference channel's sign as positive.  Codes decode to the quantization-bin
// midpoint; a saturated channel (code 0) decodes to full scale, the best
// available lower bound.
inline std::vector<double> decode_couplings(const EchoReading& reading,
                                            const RxChainConfig& chain) {
  reading.validate();
  const double fs = chain.ramp_full_scale_v;
  const double steps = std::exp2(chain.adc_bits);
  const double omega_ae = 2.0 * kPi * chain.ae_frequency_hz;
  std::vector<double> m(reading.amplitude_codes.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const int c = reading.amplitude_codes[i];
    const double amp_out = c == 0 ? fs : fs * (1.0 - (c - 0.5) / steps);
    const double amp_in = amp_out / chain.gain_linear(i);
    const double sign = reading.relative_polarities[i] ? -1.0 : 1.0;
    m[i] = sign * amp_in / (omega_ae * chain.ae_current_a);
  }
  return m;
}

// Wall-clock cost of one sensing burst: oscillator warm-up plus the echo
// burst, ring-down margin before power resumes, then the ramp conversion.
inline double ae_cycle_duration(const RxChainConfig& chain,
                                double ring_updown_margin_s) {
  if (!(ring_updown_margin_s >= 0.0))
    throw DomainError("ae_cycle_duration: margin " +
                      std::to_string(ring_updown_margin_s) + " must be >= 0");
  return (chain.warmup_cycles + chain.ae_cycles) / chain.ae_frequency_hz +
         ring_updown_margin_s + std::exp2(chain.adc_bits) / chain.adc_clock_hz;
}

}  // namespace omniwpt
