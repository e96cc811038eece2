#pragma once

// Experiment harness: grid datasets over a room, train/eval splits, and
// evaluation of the localizer under clean, attacked and recovered inputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "rotorloc/attack.hpp"
#include "rotorloc/defense.hpp"
#include "rotorloc/drone.hpp"
#include "rotorloc/errors.hpp"
#include "rotorloc/geometry.hpp"
#include "rotorloc/localizer.hpp"
#include "rotorloc/rng.hpp"

namespace rotorloc {

struct GridSpec {
  double resolution = 0.25;      // meters between neighbouring locations
  std::size_t orientations = 8;  // evenly spaced headings per location
  double margin = 0.35;          // keep-out distance from the bounding box
};

inline double drone_footprint_radius(const DroneConfig& drone) {
  double r = 0.0;
  for (Vec2 o : drone.rotor_offsets) r = std::max(r, norm(o));
  for (Vec2 o : drone.mic_offsets) r = std::max(r, norm(o));
  return r;
}

// Grid locations inside the room at which the whole drone fits: axis-aligned
// lattice over the bounding box shrunk by the margin, then filtered so the
// center keeps footprint-plus-guard clearance from every wall.
inline std::vector<Vec2> grid_locations(const Room& room,
                                        const DroneConfig& drone,
                                        const GridSpec& grid) {
  validate_room(room);
  if (!(grid.resolution > 0.0)) throw ConfigError("grid resolution must be positive");
  if (grid.orientations == 0) throw ConfigError("need at least one orientation");
  const Bounds b = room_bounds(room);
  const double clearance = drone_footprint_radius(drone) + 0.02;
  std::vector<Vec2> cells;
  const double eps = 1e-9;
  for (double x = b.xmin + grid.margin; x <= b.xmax - grid.margin + eps;
       x += grid.resolution) {
    for (double y = b.ymin + grid.margin; y <= b.ymax - grid.margin + eps;
         y += grid.resolution) {
      const Vec2 p{x, y};
      if (sdf(room, p) < -clearance) cells.push_back(p);
    }
  }
  if (cells.empty()) throw EmptyGrid("no grid locations fit in the room");
  return cells;
}

// Clean scene responses over the location grid and evenly spaced headings.
inline Dataset generate_dataset(const Room& room, const DroneConfig& drone,
                                const GridSpec& grid) {
  validate_drone(drone);
  const std::vector<Vec2> cells = grid_locations(room, drone, grid);
  Dataset data;
  data.num_mics = drone.num_mics();
  data.samples_per_channel = drone.period_samples;
  data.sample_rate = drone.sample_rate();
  data.bounds = room_bounds(room);
  data.samples.resize(cells.size() * grid.orientations);
  const PhaseModulation mod = PhaseModulation::zero(drone.num_rotors());
  parallel_for(cells.size(), [&](std::size_t c) {
    for (std::size_t k = 0; k < grid.orientations; ++k) {
      const double heading =
          2.0 * std::numbers::pi * double(k) / double(grid.orientations);
      const DroneState state{cells[c], heading};
      const std::vector<Waveform> response =
          scene_response(room, drone, state, mod);
      Sample s;
      s.location = cells[c];
      s.heading = heading;
      s.waveforms.reserve(data.input_size());
      for (const Waveform& w : response) {
        s.waveforms.insert(s.waveforms.end(), w.samples.begin(),
                           w.samples.end());
      }
      data.samples[c * grid.orientations + k] = std::move(s);
    }
  });
  return data;
}

// Seeded shuffle split; both halves keep the original sample order.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                                 double eval_fraction,
                                                 std::uint64_t seed) {
  if (data.samples.empty()) throw EmptyDataset("cannot split no samples");
  if (!(eval_fraction >= 0.0 && eval_fraction <= 1.0)) {
    throw ConfigError("eval fraction must lie in [0, 1]");
  }
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  fisher_yates_shuffle(order, rng);
  const std::size_t eval_count =
      std::size_t(std::llround(eval_fraction * double(data.size())));
  std::vector<bool> in_eval(data.size(), false);
  for (std::size_t i = 0; i < eval_count; ++i) in_eval[order[i]] = true;

  Dataset train = data, eval = data;
  train.samples.clear();
  eval.samples.clear();
  for (std::size_t i = 0; i < data.size(); ++i) {
    (in_eval[i] ? eval : train).samples.push_back(data.samples[i]);
  }
  return {std::move(train), std::move(eval)};
}

struct EvalResult {
  std::vector<Vec2> predictions;   // meters
  std::vector<double> errors;      // normalized per-sample distance
  double rms = 0.0;                // scaled RMS over the set
};

namespace detail {

inline EvalResult finish_eval(const Dataset& data, std::vector<Vec2> preds) {
  EvalResult out;
  out.predictions = std::move(preds);
  out.errors.resize(data.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vec2 d = normalize_location(out.predictions[i], data.bounds) -
                   normalize_location(data.samples[i].location, data.bounds);
    out.errors[i] = norm(d);
    acc += norm2(d);
  }
  out.rms = std::sqrt(acc / double(data.size()));
  return out;
}

}  // namespace detail

// Clean condition, optionally under sensor noise.
inline EvalResult evaluate_clean(const LocalizerModel& model,
                                 const Dataset& data, double noise_std = 0.0,
                                 std::uint64_t seed = 17) {
  if (data.samples.empty()) throw EmptyDataset("cannot evaluate no samples");
  validate_dataset(data);
  Rng rng(seed);
  std::vector<Vec2> preds(data.size());
  std::vector<double> input;
  for (std::size_t i = 0; i < data.size(); ++i) {
    input = data.samples[i].waveforms;
    if (noise_std > 0.0) {
      for (double& v : input) v += noise_std * rng.normal();
    }
    preds[i] = denormalize_location(forward(model, input), data.bounds);
  }
  return detail::finish_eval(data, preds);
}

// Attacked condition: perturbation responses are synthesized through the
// acoustics for each sample state and added to the clean responses.
inline EvalResult evaluate_attacked(const LocalizerModel& model,
                                    const Room& room, const DroneConfig& drone,
                                    const Dataset& data,
                                    const PerturbationSpec& spec,
                                    double noise_std = 0.0,
                                    std::uint64_t seed = 17) {
  if (data.samples.empty()) throw EmptyDataset("cannot evaluate no samples");
  validate_dataset(data);
  const std::size_t p = data.samples_per_channel;
  std::vector<std::vector<double>> noise;
  if (noise_std > 0.0) {
    Rng rng(seed);
    noise.resize(data.size());
    for (auto& n : noise) {
      n.resize(data.input_size());
      for (double& v : n) v = noise_std * rng.normal();
    }
  }
  std::vector<Vec2> preds(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const DroneState state{data.samples[i].location, data.samples[i].heading};
    const std::vector<Waveform> sigma =
        perturbation_response(room, drone, state, spec);
    std::vector<double> input = data.samples[i].waveforms;
    for (std::size_t m = 0; m < sigma.size(); ++m) {
      for (std::size_t t = 0; t < p; ++t) {
        input[m * p + t] += sigma[m].samples[t % sigma[m].samples.size()];
      }
    }
    if (!noise.empty()) {
      for (std::size_t t = 0; t < input.size(); ++t) input[t] += noise[i][t];
    }
    preds[i] = denormalize_location(forward(model, input), data.bounds);
  });
  return detail::finish_eval(data, preds);
}

// Recovered condition: delineate per sample, subtract, localize.
inline EvalResult evaluate_recovered(const LocalizerModel& model,
                                     const Room& room,
                                     const DroneConfig& drone,
                                     const Dataset& data,
                                     const PerturbationSpec& spec,
                                     const DelineationOptions& options = {}) {
  if (data.samples.empty()) throw EmptyDataset("cannot evaluate no samples");
  validate_dataset(data);
  const std::size_t p = data.samples_per_channel;
  std::vector<Vec2> preds(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const DroneState state{data.samples[i].location, data.samples[i].heading};
    const std::vector<Waveform> sigma =
        perturbation_response(room, drone, state, spec);
    std::vector<double> observed = data.samples[i].waveforms;
    for (std::size_t m = 0; m < sigma.size(); ++m) {
      for (std::size_t t = 0; t < p; ++t) {
        observed[m * p + t] += sigma[m].samples[t % sigma[m].samples.size()];
      }
    }
    DelineationOptions opts = options;
    opts.seed = options.seed + i;
    const DelineationResult delineation =
        delineate(room, drone, state, spec, opts);
    preds[i] = recover_and_localize(model, observed, delineation, data.bounds);
  });
  return detail::finish_eval(data, preds);
}

// Per-location aggregation of per-sample errors: RMS over the orientations
// sharing a grid cell.
struct HeatmapCell {
  Vec2 location;
  double clean = 0.0;
  double attacked = 0.0;
  double recovered = 0.0;
};

inline std::vector<HeatmapCell> build_heatmap(const Dataset& data,
                                              const EvalResult& clean,
                                              const EvalResult& attacked,
                                              const EvalResult& recovered) {
  std::map<std::pair<long long, long long>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vec2 loc = data.samples[i].location;
    cells[{std::llround(loc.x * 1e6), std::llround(loc.y * 1e6)}].push_back(i);
  }
  std::vector<HeatmapCell> out;
  for (const auto& [key, idx] : cells) {
    HeatmapCell cell;
    cell.location = data.samples[idx.front()].location;
    double c = 0.0, a = 0.0, r = 0.0;
    for (std::size_t i : idx) {
      c += clean.errors[i] * clean.errors[i];
      a += attacked.errors[i] * attacked.errors[i];
      r += recovered.errors[i] * recovered.errors[i];
    }
    cell.clean = std::sqrt(c / double(idx.size()));
    cell.attacked = std::sqrt(a / double(idx.size()));
    cell.recovered = std::sqrt(r / double(idx.size()));
    out.push_back(cell);
  }
  return out;
}

}  // namespace rotorloc
