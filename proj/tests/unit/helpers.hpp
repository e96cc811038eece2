#pragma once

// Shared fixtures for the unit tests: a small scene that keeps acoustics
// cheap, plus naive reference implementations to test against.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "rotorloc/attack.hpp"
#include "rotorloc/drone.hpp"
#include "rotorloc/geometry.hpp"
#include "rotorloc/harness.hpp"
#include "rotorloc/localizer.hpp"
#include "rotorloc/rng.hpp"

namespace testutil {

inline rotorloc::DroneConfig make_small_drone(std::size_t period = 200,
                                              double amplitude = 0.02) {
  rotorloc::DroneConfig drone;
  drone.rotor_offsets = {{0.06, 0.0}, {-0.06, 0.0}};
  drone.mic_offsets = {{0.0, 0.05}, {0.0, -0.05}};
  drone.period_samples = period;
  drone.rotor_waveform =
      rotorloc::make_rotor_waveform(period, 16000.0, 4, amplitude, 13);
  return drone;
}

struct SmallScene {
  rotorloc::Room room;
  rotorloc::DroneConfig drone;
  rotorloc::Dataset data;
  rotorloc::LocalizerModel model;
};

inline SmallScene make_small_scene(std::size_t period = 200) {
  SmallScene scene;
  scene.room = rotorloc::make_rectangle_room(2.0, 1.5, 0.6, 343.0, 1);
  scene.drone = make_small_drone(period);

  scene.data.num_mics = scene.drone.num_mics();
  scene.data.samples_per_channel = period;
  scene.data.sample_rate = scene.drone.sample_rate();
  scene.data.bounds = rotorloc::room_bounds(scene.room);
  const std::vector<rotorloc::DroneState> states = {
      {{0.6, 0.5}, 0.0}, {{1.2, 0.9}, 1.1}, {{1.5, 0.5}, 2.3}};
  const auto mod = rotorloc::PhaseModulation::zero(scene.drone.num_rotors());
  for (const rotorloc::DroneState& state : states) {
    const auto response =
        rotorloc::scene_response(scene.room, scene.drone, state, mod);
    rotorloc::Sample s;
    s.location = state.position;
    s.heading = state.heading;
    for (const rotorloc::Waveform& w : response) {
      s.waveforms.insert(s.waveforms.end(), w.samples.begin(),
                         w.samples.end());
    }
    scene.data.samples.push_back(std::move(s));
  }

  scene.model = rotorloc::make_localizer(scene.data.num_mics, period, 6, {8},
                                         true, 21);
  double energy = 0.0;
  std::size_t count = 0;
  for (const rotorloc::Sample& s : scene.data.samples) {
    for (double v : s.waveforms) energy += v * v;
    count += s.waveforms.size();
  }
  scene.model.input_scale = std::sqrt(energy / double(count));
  return scene;
}

inline rotorloc::PerturbationSpec make_test_spec(std::size_t period,
                                                 rotorloc::Vec2 source,
                                                 std::uint64_t seed,
                                                 double scale = 0.3) {
  rotorloc::PerturbationSpec spec;
  spec.basis = rotorloc::build_basis(double(period) / 16000.0, 100.0, 3000.0,
                                     16000.0);
  spec.source_location = source;
  rotorloc::Rng rng(seed);
  spec.amplitudes.resize(spec.basis.size());
  for (double& a : spec.amplitudes) a = scale * rng.normal();
  return spec;
}

inline std::vector<double> random_vector(std::size_t n, rotorloc::Rng& rng,
                                         double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline std::vector<std::complex<double>> naive_dft(
    const std::vector<std::complex<double>>& x, bool inverse = false) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n, {0.0, 0.0});
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t t = 0; t < n; ++t) {
      const double angle =
          sign * 2.0 * std::numbers::pi * double(k * t % n) / double(n);
      out[k] += x[t] * std::complex<double>{std::cos(angle), std::sin(angle)};
    }
    if (inverse) out[k] /= double(n);
  }
  return out;
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace testutil
