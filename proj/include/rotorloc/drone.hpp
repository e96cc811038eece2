#pragma once

// Quadrotor sound model: four harmonically rich rotor sources and a rigid
// microphone array, both moving with the drone body. Rotor phases can be
// modulated by integer circular delays.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "rotorloc/acoustics.hpp"
#include "rotorloc/errors.hpp"
#include "rotorloc/geometry.hpp"
#include "rotorloc/rng.hpp"
#include "rotorloc/waveform.hpp"

namespace rotorloc {

// Per-harmonic rotor amplitude. The rotors sit centimeters from the array
// while an attacking speaker stands meters away, so propulsion should
// dominate the microphones by a wide margin at unit-scale attack bounds.
inline constexpr double kDefaultRotorAmplitude = 0.064;

struct DroneConfig {
  std::vector<Vec2> rotor_offsets;  // body frame, meters
  std::vector<Vec2> mic_offsets;
  Waveform rotor_waveform;  // exactly one period
  std::size_t period_samples = 0;

  std::size_t num_rotors() const { return rotor_offsets.size(); }
  std::size_t num_mics() const { return mic_offsets.size(); }
  double sample_rate() const { return rotor_waveform.sample_rate; }
};

struct DroneState {
  Vec2 position;
  double heading = 0.0;  // radians, counterclockwise
};

struct PhaseModulation {
  std::vector<std::size_t> rotor_delays;  // samples, applied circularly

  static PhaseModulation zero(std::size_t num_rotors) {
    return {std::vector<std::size_t>(num_rotors, 0)};
  }
  static PhaseModulation constant(std::size_t num_rotors, std::size_t delay) {
    return {std::vector<std::size_t>(num_rotors, delay)};
  }
};

inline void validate_drone(const DroneConfig& config) {
  if (config.rotor_offsets.empty()) throw InvalidDrone("drone needs rotors");
  if (config.mic_offsets.empty()) throw InvalidDrone("drone needs microphones");
  if (config.period_samples == 0) throw InvalidDrone("period must be positive");
  validate_waveform(config.rotor_waveform);
  if (config.rotor_waveform.samples.size() != config.period_samples) {
    throw InvalidDrone("rotor waveform must hold exactly one period");
  }
  if (!config.rotor_waveform.period_samples ||
      *config.rotor_waveform.period_samples != config.period_samples) {
    throw InvalidDrone("rotor waveform period tag disagrees with the drone");
  }
  const double m = mean(config.rotor_waveform.samples);
  const double scale = std::max(peak(config.rotor_waveform.samples), 1e-30);
  if (std::abs(m) > 1e-9 * scale) {
    throw InvalidDrone("rotor waveform must be zero mean");
  }
}

// One period of a rotor tone: harmonics of the period's fundamental with
// 1/k amplitude decay and seeded phases, re-centred to exactly zero mean.
inline Waveform make_rotor_waveform(std::size_t period_samples,
                                    double sample_rate, int num_harmonics,
                                    double amplitude, std::uint64_t seed) {
  Rng rng(seed);
  Waveform w;
  w.sample_rate = sample_rate;
  w.period_samples = period_samples;
  w.samples.assign(period_samples, 0.0);
  for (int k = 1; k <= num_harmonics; ++k) {
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    const double amp = amplitude / double(k);
    for (std::size_t t = 0; t < period_samples; ++t) {
      w.samples[t] += amp * std::sin(2.0 * std::numbers::pi * double(k) *
                                         double(t) / double(period_samples) +
                                     phase);
    }
  }
  const double m = mean(w.samples);
  for (double& s : w.samples) s -= m;
  return w;
}

inline DroneConfig make_default_drone(
    double amplitude = kDefaultRotorAmplitude) {
  DroneConfig config;
  config.rotor_offsets = {{0.1, 0.1}, {-0.1, 0.1}, {-0.1, -0.1}, {0.1, -0.1}};
  const double r = 0.15;
  config.mic_offsets = {{r, 0.0}, {0.0, r}, {-r, 0.0}, {0.0, -r}};
  config.period_samples = 1600;
  // Blade tones sit near 100 Hz, an order of magnitude above the 10 Hz
  // repetition rate, so the tone is built on a 100 Hz fundamental and tiled
  // across the modulation period.
  const Waveform tone = make_rotor_waveform(160, 16000.0, 6, amplitude, 29);
  config.rotor_waveform.sample_rate = tone.sample_rate;
  config.rotor_waveform.period_samples = config.period_samples;
  config.rotor_waveform.samples.resize(config.period_samples);
  for (std::size_t t = 0; t < config.period_samples; ++t) {
    config.rotor_waveform.samples[t] = tone.samples[t % tone.size()];
  }
  validate_drone(config);
  return config;
}

inline Waveform rotor_sound(const DroneConfig& config, std::size_t rotor,
                            const PhaseModulation& modulation) {
  if (rotor >= config.num_rotors()) {
    throw IndexOutOfRange("rotor index out of range");
  }
  if (modulation.rotor_delays.size() != config.num_rotors()) {
    throw ShapeMismatch("modulation must list one delay per rotor");
  }
  return circular_shift(config.rotor_waveform, modulation.rotor_delays[rotor]);
}

struct WorldPositions {
  std::vector<Vec2> rotors;
  std::vector<Vec2> mics;
};

inline WorldPositions world_positions(const DroneConfig& config,
                                      const DroneState& state) {
  WorldPositions wp;
  wp.rotors.reserve(config.num_rotors());
  wp.mics.reserve(config.num_mics());
  for (Vec2 o : config.rotor_offsets) {
    wp.rotors.push_back(state.position + rotated(o, state.heading));
  }
  for (Vec2 o : config.mic_offsets) {
    wp.mics.push_back(state.position + rotated(o, state.heading));
  }
  return wp;
}

// Steady-state microphone responses: one period per mic, summed over rotors.
inline std::vector<Waveform> scene_response(const Room& room,
                                            const DroneConfig& config,
                                            const DroneState& state,
                                            const PhaseModulation& modulation) {
  validate_drone(config);
  const WorldPositions wp = world_positions(config, state);
  for (Vec2 p : wp.rotors) {
    if (sdf(room, p) >= 0.0) {
      throw SourceOutsideRoom("rotor outside the room");
    }
  }
  for (Vec2 p : wp.mics) {
    if (sdf(room, p) >= 0.0) {
      throw SourceOutsideRoom("microphone outside the room");
    }
  }
  const double fs = config.sample_rate();
  std::vector<Waveform> out(config.num_mics());
  for (std::size_t m = 0; m < config.num_mics(); ++m) {
    Waveform acc;
    acc.sample_rate = fs;
    acc.period_samples = config.period_samples;
    acc.samples.assign(config.period_samples, 0.0);
    for (std::size_t r = 0; r < config.num_rotors(); ++r) {
      const std::size_t len =
          required_rir_length(room, wp.rotors[r], wp.mics[m], fs);
      const Rir rir = compute_rir(room, wp.rotors[r], wp.mics[m], fs, len);
      const Waveform resp = propagate(rotor_sound(config, r, modulation), rir,
                                      PropagateMode::kSteadyState);
      for (std::size_t t = 0; t < config.period_samples; ++t) {
        acc.samples[t] += resp.samples[t];
      }
    }
    out[m] = std::move(acc);
  }
  return out;
}

}  // namespace rotorloc
