#pragma once

// JSON configuration for rooms, drones, training, attacks and experiments,
// plus JSON checkpoints for perturbation specs.

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "rotorloc/attack.hpp"
#include "rotorloc/drone.hpp"
#include "rotorloc/errors.hpp"
#include "rotorloc/geometry.hpp"
#include "rotorloc/harness.hpp"
#include "rotorloc/localizer.hpp"

namespace rotorloc::config {

using nlohmann::json;

struct ModelSpec {
  std::size_t subsample_dim = 32;
  std::vector<std::size_t> hidden_sizes = {96, 64};
  bool zero_mean_input = true;
  std::uint64_t seed = 5;
};

struct ExperimentConfig {
  Room room = make_rectangle_room(4.0, 3.0, 0.7);
  DroneConfig drone = make_default_drone();
  GridSpec grid;
  double eval_fraction = 0.2;
  std::uint64_t split_seed = 3;
  ModelSpec model;
  TrainConfig train;
  AttackConfig attack;
  std::vector<std::pair<double, double>> bounds_grid = {{1.0, 2.0}};
  std::vector<double> noise_levels = {0.0, 0.025, 0.05, 0.1};  // relative
};

namespace detail {

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("field '" + key + "': " + e.what());
  }
}

inline Vec2 vec2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError("expected a [x, y] pair");
  }
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace detail

inline Room room_from_json(const json& j) {
  Room room;
  if (j.contains("vertices")) {
    for (const json& v : j.at("vertices")) {
      room.vertices.push_back(detail::vec2_from_json(v));
    }
  } else {
    const double w = detail::get_or(j, "width", 4.0);
    const double h = detail::get_or(j, "height", 3.0);
    room.vertices = {{0.0, 0.0}, {w, 0.0}, {w, h}, {0.0, h}};
  }
  if (j.contains("reflection") && j.at("reflection").is_array()) {
    room.wall_reflection = j.at("reflection").get<std::vector<double>>();
  } else {
    room.wall_reflection.assign(room.vertices.size(),
                                detail::get_or(j, "reflection", 0.7));
  }
  room.speed_of_sound = detail::get_or(j, "speed_of_sound", 343.0);
  room.max_reflection_order = detail::get_or(j, "max_reflection_order", 3);
  validate_room(room);
  return room;
}

inline DroneConfig drone_from_json(const json& j) {
  DroneConfig drone;
  if (j.contains("rotor_offsets")) {
    for (const json& v : j.at("rotor_offsets")) {
      drone.rotor_offsets.push_back(detail::vec2_from_json(v));
    }
  } else {
    drone.rotor_offsets = {{0.1, 0.1}, {-0.1, 0.1}, {-0.1, -0.1}, {0.1, -0.1}};
  }
  if (j.contains("mic_offsets")) {
    for (const json& v : j.at("mic_offsets")) {
      drone.mic_offsets.push_back(detail::vec2_from_json(v));
    }
  } else {
    drone.mic_offsets = {{0.15, 0.0}, {0.0, 0.15}, {-0.15, 0.0}, {0.0, -0.15}};
  }
  drone.period_samples = detail::get_or<std::size_t>(j, "period_samples", 1600);
  const double fs = detail::get_or(j, "sample_rate", 16000.0);
  const int harmonics = detail::get_or(j, "harmonics", 6);
  const double amplitude =
      detail::get_or(j, "amplitude", kDefaultRotorAmplitude);
  const std::uint64_t seed = detail::get_or<std::uint64_t>(j, "waveform_seed", 29);
  drone.rotor_waveform =
      make_rotor_waveform(drone.period_samples, fs, harmonics, amplitude, seed);
  validate_drone(drone);
  return drone;
}

inline GridSpec grid_from_json(const json& j) {
  GridSpec grid;
  grid.resolution = detail::get_or(j, "resolution", grid.resolution);
  grid.orientations =
      detail::get_or<std::size_t>(j, "orientations", grid.orientations);
  grid.margin = detail::get_or(j, "margin", grid.margin);
  return grid;
}

inline ModelSpec model_from_json(const json& j) {
  ModelSpec spec;
  spec.subsample_dim =
      detail::get_or<std::size_t>(j, "subsample_dim", spec.subsample_dim);
  spec.hidden_sizes = detail::get_or<std::vector<std::size_t>>(
      j, "hidden", spec.hidden_sizes);
  spec.zero_mean_input =
      detail::get_or(j, "zero_mean_input", spec.zero_mean_input);
  spec.seed = detail::get_or<std::uint64_t>(j, "seed", spec.seed);
  return spec;
}

inline TrainConfig train_from_json(const json& j) {
  TrainConfig cfg;
  cfg.learning_rate = detail::get_or(j, "learning_rate", cfg.learning_rate);
  cfg.batch_size = detail::get_or<std::size_t>(j, "batch_size", cfg.batch_size);
  cfg.epochs = detail::get_or<std::size_t>(j, "epochs", cfg.epochs);
  cfg.seed = detail::get_or<std::uint64_t>(j, "seed", cfg.seed);
  return cfg;
}

inline AttackConfig attack_from_json(const json& j) {
  AttackConfig cfg;
  cfg.beta = detail::get_or(j, "beta", cfg.beta);
  cfg.gamma = detail::get_or(j, "gamma", cfg.gamma);
  cfg.lambda_amplitude =
      detail::get_or(j, "lambda_amplitude", cfg.lambda_amplitude);
  cfg.lambda_power = detail::get_or(j, "lambda_power", cfg.lambda_power);
  cfg.lambda_sdf = detail::get_or(j, "lambda_sdf", cfg.lambda_sdf);
  cfg.sdf_margin = detail::get_or(j, "sdf_margin", cfg.sdf_margin);
  cfg.f_min = detail::get_or(j, "f_min", cfg.f_min);
  cfg.f_max = detail::get_or(j, "f_max", cfg.f_max);
  cfg.max_iterations =
      detail::get_or<std::size_t>(j, "max_iterations", cfg.max_iterations);
  cfg.patience = detail::get_or<std::size_t>(j, "patience", cfg.patience);
  cfg.step_amplitudes =
      detail::get_or(j, "step_amplitudes", cfg.step_amplitudes);
  cfg.step_location = detail::get_or(j, "step_location", cfg.step_location);
  cfg.optimize_location =
      detail::get_or(j, "optimize_location", cfg.optimize_location);
  if (j.contains("target")) {
    cfg.target = detail::vec2_from_json(j.at("target"));
  }
  cfg.noise_std = detail::get_or(j, "noise_std", cfg.noise_std);
  cfg.seed = detail::get_or<std::uint64_t>(j, "seed", cfg.seed);
  return cfg;
}

inline ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("room")) cfg.room = room_from_json(j.at("room"));
  if (j.contains("drone")) cfg.drone = drone_from_json(j.at("drone"));
  if (j.contains("grid")) cfg.grid = grid_from_json(j.at("grid"));
  if (j.contains("split")) {
    cfg.eval_fraction =
        detail::get_or(j.at("split"), "eval_fraction", cfg.eval_fraction);
    cfg.split_seed =
        detail::get_or<std::uint64_t>(j.at("split"), "seed", cfg.split_seed);
  }
  if (j.contains("model")) cfg.model = model_from_json(j.at("model"));
  if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
  if (j.contains("attack")) cfg.attack = attack_from_json(j.at("attack"));
  if (j.contains("bounds_grid")) {
    cfg.bounds_grid.clear();
    for (const json& pair : j.at("bounds_grid")) {
      if (!pair.is_array() || pair.size() != 2) {
        throw ConfigError("bounds_grid entries must be [beta, gamma] pairs");
      }
      cfg.bounds_grid.emplace_back(pair.at(0).get<double>(),
                                   pair.at(1).get<double>());
    }
  }
  if (j.contains("noise_levels")) {
    cfg.noise_levels = j.at("noise_levels").get<std::vector<double>>();
  }
  return cfg;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline ExperimentConfig load_experiment(const std::string& path) {
  return experiment_from_json(load_json_file(path));
}

inline void save_spec(const std::string& path, const PerturbationSpec& spec) {
  json j;
  j["amplitudes"] = spec.amplitudes;
  j["source_location"] = {spec.source_location.x, spec.source_location.y};
  j["basis"]["period_samples"] = spec.basis.period_samples;
  j["basis"]["sample_rate"] = spec.basis.sample_rate;
  j["basis"]["harmonics"] = spec.basis.harmonics;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

inline PerturbationSpec load_spec(const std::string& path) {
  const json j = load_json_file(path);
  PerturbationSpec spec;
  try {
    spec.amplitudes = j.at("amplitudes").get<std::vector<double>>();
    spec.source_location = detail::vec2_from_json(j.at("source_location"));
    spec.basis.period_samples = j.at("basis").at("period_samples").get<std::size_t>();
    spec.basis.sample_rate = j.at("basis").at("sample_rate").get<double>();
    spec.basis.harmonics =
        j.at("basis").at("harmonics").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const double period_seconds =
      double(spec.basis.period_samples) / spec.basis.sample_rate;
  for (std::size_t m : spec.basis.harmonics) {
    spec.basis.frequencies.push_back(double(m) / period_seconds);
  }
  if (spec.amplitudes.size() != spec.basis.size()) {
    throw ConfigError(path + ": amplitudes disagree with basis");
  }
  return spec;
}

}  // namespace rotorloc::config
