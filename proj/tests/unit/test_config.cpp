#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>

#include "helpers.hpp"
#include "rotorloc/config.hpp"

using namespace rotorloc;

namespace {

std::string write_temp_json(const std::string& name, const std::string& body) {
  const std::string path = "config_test_" + name + ".json";
  std::ofstream out(path);
  REQUIRE(out.good());
  out << body;
  return path;
}

}  // namespace

TEST_CASE("experiment json maps onto every section") {
  const std::string path = write_temp_json("full", R"({
    "room": {
      "vertices": [[0,0],[2,0],[2,1],[1,1],[1,1.5],[0,1.5]],
      "reflection": [0.5,0.6,0.7,0.8,0.9,0.4],
      "speed_of_sound": 340.0,
      "max_reflection_order": 2
    },
    "drone": {
      "rotor_offsets": [[0.05,0.0],[-0.05,0.0]],
      "mic_offsets": [[0.0,0.04],[0.0,-0.04]],
      "period_samples": 200,
      "sample_rate": 16000.0,
      "harmonics": 4,
      "amplitude": 0.015,
      "waveform_seed": 99
    },
    "grid": {"resolution": 0.5, "orientations": 2, "margin": 0.2},
    "split": {"eval_fraction": 0.3, "seed": 12},
    "model": {"subsample_dim": 16, "hidden": [24, 12], "zero_mean_input": false, "seed": 4},
    "train": {"learning_rate": 0.01, "batch_size": 8, "epochs": 7, "seed": 2},
    "attack": {
      "beta": 0.4, "gamma": 1.1, "lambda_amplitude": 2.0, "lambda_power": 3.0,
      "lambda_sdf": 4.0, "sdf_margin": 0.05, "f_min": 80.0, "f_max": 1500.0,
      "max_iterations": 33, "patience": 4, "step_amplitudes": 0.02,
      "step_location": 0.003, "optimize_location": true, "target": [1.2, 0.8],
      "noise_std": 0.01, "seed": 44
    },
    "bounds_grid": [[0.1, 0.5], [1.0, 2.0]],
    "noise_levels": [0.0, 0.1]
  })");

  const config::ExperimentConfig cfg = config::load_experiment(path);
  std::remove(path.c_str());

  REQUIRE(cfg.room.vertices.size() == 6);
  REQUIRE(cfg.room.vertices[3].x == 1.0);
  REQUIRE(cfg.room.wall_reflection[4] == 0.9);
  REQUIRE(cfg.room.speed_of_sound == 340.0);
  REQUIRE(cfg.room.max_reflection_order == 2);

  REQUIRE(cfg.drone.num_rotors() == 2);
  REQUIRE(cfg.drone.num_mics() == 2);
  REQUIRE(cfg.drone.period_samples == 200);
  REQUIRE(cfg.drone.rotor_waveform.samples.size() == 200);
  REQUIRE(cfg.drone.sample_rate() == 16000.0);

  REQUIRE(cfg.grid.resolution == 0.5);
  REQUIRE(cfg.grid.orientations == 2);
  REQUIRE(cfg.grid.margin == 0.2);
  REQUIRE(cfg.eval_fraction == 0.3);
  REQUIRE(cfg.split_seed == 12);

  REQUIRE(cfg.model.subsample_dim == 16);
  const std::vector<std::size_t> hidden = {24, 12};
  REQUIRE(cfg.model.hidden_sizes == hidden);
  REQUIRE(!cfg.model.zero_mean_input);
  REQUIRE(cfg.model.seed == 4);

  REQUIRE(cfg.train.learning_rate == 0.01);
  REQUIRE(cfg.train.batch_size == 8);
  REQUIRE(cfg.train.epochs == 7);
  REQUIRE(cfg.train.seed == 2);

  REQUIRE(cfg.attack.beta == 0.4);
  REQUIRE(cfg.attack.gamma == 1.1);
  REQUIRE(cfg.attack.lambda_amplitude == 2.0);
  REQUIRE(cfg.attack.lambda_power == 3.0);
  REQUIRE(cfg.attack.lambda_sdf == 4.0);
  REQUIRE(cfg.attack.sdf_margin == 0.05);
  REQUIRE(cfg.attack.f_min == 80.0);
  REQUIRE(cfg.attack.f_max == 1500.0);
  REQUIRE(cfg.attack.max_iterations == 33);
  REQUIRE(cfg.attack.patience == 4);
  REQUIRE(cfg.attack.step_amplitudes == 0.02);
  REQUIRE(cfg.attack.step_location == 0.003);
  REQUIRE(cfg.attack.optimize_location);
  REQUIRE(cfg.attack.target.has_value());
  REQUIRE(cfg.attack.target->x == 1.2);
  REQUIRE(cfg.attack.noise_std == 0.01);
  REQUIRE(cfg.attack.seed == 44);

  const std::vector<std::pair<double, double>> bounds = {{0.1, 0.5},
                                                         {1.0, 2.0}};
  REQUIRE(cfg.bounds_grid == bounds);
  const std::vector<double> noise = {0.0, 0.1};
  REQUIRE(cfg.noise_levels == noise);
}

TEST_CASE("missing sections fall back to defaults") {
  const std::string path = write_temp_json("empty", "{}");
  const config::ExperimentConfig cfg = config::load_experiment(path);
  std::remove(path.c_str());

  REQUIRE(cfg.room.vertices.size() == 4);
  REQUIRE(cfg.room.vertices[2].x == 4.0);
  REQUIRE(cfg.room.vertices[2].y == 3.0);
  REQUIRE(cfg.room.wall_reflection == std::vector<double>(4, 0.7));
  REQUIRE(cfg.drone.num_rotors() == 4);
  REQUIRE(cfg.drone.period_samples == 1600);
  REQUIRE(cfg.grid.resolution == 0.25);
  REQUIRE(cfg.eval_fraction == 0.2);
  REQUIRE(cfg.split_seed == 3);
  REQUIRE(cfg.model.subsample_dim == 32);
  const std::vector<std::size_t> hidden = {96, 64};
  REQUIRE(cfg.model.hidden_sizes == hidden);
  REQUIRE(cfg.model.zero_mean_input);
  REQUIRE(cfg.train.epochs == 200);
  REQUIRE(cfg.attack.beta == 1.0);
  REQUIRE(cfg.attack.gamma == 2.0);
  REQUIRE(!cfg.attack.target.has_value());
  const std::vector<std::pair<double, double>> bounds = {{1.0, 2.0}};
  REQUIRE(cfg.bounds_grid == bounds);
  const std::vector<double> noise = {0.0, 0.025, 0.05, 0.1};
  REQUIRE(cfg.noise_levels == noise);
}

TEST_CASE("scalar reflection fans out over the walls") {
  const std::string path = write_temp_json("refl", R"({
    "room": {"width": 5.0, "height": 2.0, "reflection": 0.45}
  })");
  const config::ExperimentConfig cfg = config::load_experiment(path);
  std::remove(path.c_str());
  REQUIRE(cfg.room.vertices[2].x == 5.0);
  REQUIRE(cfg.room.wall_reflection == std::vector<double>(4, 0.45));
}

TEST_CASE("config errors carry the offending field") {
  REQUIRE_THROWS_AS(config::load_experiment("no_such_config.json"),
                    ConfigError);

  const std::string bad_json = write_temp_json("syntax", "{ not json");
  REQUIRE_THROWS_AS(config::load_experiment(bad_json), ConfigError);
  std::remove(bad_json.c_str());

  const std::string bad_type = write_temp_json("type", R"({
    "train": {"epochs": "many"}
  })");
  REQUIRE_THROWS_WITH(config::load_experiment(bad_type),
                      Catch::Matchers::ContainsSubstring("epochs"));
  std::remove(bad_type.c_str());

  const std::string bad_pair = write_temp_json("pair", R"({
    "bounds_grid": [[1.0]]
  })");
  REQUIRE_THROWS_AS(config::load_experiment(bad_pair), ConfigError);
  std::remove(bad_pair.c_str());

  const std::string bad_room = write_temp_json("room", R"({
    "room": {"vertices": [[0,0],[1,0]]}
  })");
  REQUIRE_THROWS_AS(config::load_experiment(bad_room), InvalidRoom);
  std::remove(bad_room.c_str());
}

TEST_CASE("perturbation specs roundtrip through json") {
  const PerturbationSpec spec =
      testutil::make_test_spec(200, {0.7, 0.6}, 61, 0.25);
  const std::string path = "config_test_spec.json";
  config::save_spec(path, spec);

  const PerturbationSpec loaded = config::load_spec(path);
  REQUIRE(loaded.amplitudes == spec.amplitudes);
  REQUIRE(loaded.source_location.x == spec.source_location.x);
  REQUIRE(loaded.source_location.y == spec.source_location.y);
  REQUIRE(loaded.basis.period_samples == spec.basis.period_samples);
  REQUIRE(loaded.basis.sample_rate == spec.basis.sample_rate);
  REQUIRE(loaded.basis.harmonics == spec.basis.harmonics);
  REQUIRE(loaded.basis.frequencies.size() == spec.basis.frequencies.size());
  for (std::size_t k = 0; k < loaded.basis.size(); ++k) {
    REQUIRE(loaded.basis.frequencies[k] ==
            Catch::Approx(spec.basis.frequencies[k]).epsilon(1e-12));
  }
  std::remove(path.c_str());
}

TEST_CASE("spec loading rejects inconsistent files") {
  const std::string missing_field = write_temp_json("spec_missing", R"({
    "amplitudes": [0.1, 0.2],
    "source_location": [1.0, 1.0]
  })");
  REQUIRE_THROWS_AS(config::load_spec(missing_field), ConfigError);
  std::remove(missing_field.c_str());

  const std::string mismatched = write_temp_json("spec_mismatch", R"({
    "amplitudes": [0.1, 0.2, 0.3],
    "source_location": [1.0, 1.0],
    "basis": {"period_samples": 200, "sample_rate": 16000.0, "harmonics": [2, 3]}
  })");
  REQUIRE_THROWS_AS(config::load_spec(mismatched), ConfigError);
  std::remove(mismatched.c_str());
}
