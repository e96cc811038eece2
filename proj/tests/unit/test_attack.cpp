#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "helpers.hpp"
#include "rotorloc/attack.hpp"

using namespace rotorloc;

namespace {

// Localization loss computed straight through the acoustics, without the
// attack engine's cached spectra.
double reference_loss(const LocalizerModel& model, const Room& room,
                      const DroneConfig& drone, const Dataset& data,
                      const PerturbationSpec& spec) {
  double acc = 0.0;
  for (const Sample& s : data.samples) {
    const DroneState state{s.location, s.heading};
    const auto sigma = perturbation_response(room, drone, state, spec);
    std::vector<double> input = s.waveforms;
    const std::size_t p = data.samples_per_channel;
    for (std::size_t m = 0; m < sigma.size(); ++m) {
      for (std::size_t t = 0; t < p; ++t) {
        input[m * p + t] += sigma[m].samples[t % sigma[m].samples.size()];
      }
    }
    const Vec2 e = forward(model, input) -
                   normalize_location(s.location, data.bounds);
    acc += norm2(e);
  }
  return acc / double(data.size());
}

AttackConfig relaxed_config() {
  AttackConfig cfg;
  cfg.f_min = 100.0;
  cfg.f_max = 3000.0;
  cfg.beta = 1e9;  // keep every hinge inactive
  cfg.gamma = 1e9;
  cfg.lambda_sdf = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("frequency basis enumerates the in-band harmonics") {
  const FrequencyBasis basis = build_basis(0.1, 50.0, 2000.0, 16000.0);
  REQUIRE(basis.period_samples == 1600);
  REQUIRE(basis.size() == 196);
  REQUIRE(basis.harmonics.front() == 5);
  REQUIRE(basis.harmonics.back() == 200);
  REQUIRE(basis.frequencies.front() == Catch::Approx(50.0));
  REQUIRE(basis.frequencies.back() == Catch::Approx(2000.0));
  for (std::size_t k = 1; k < basis.size(); ++k) {
    REQUIRE(basis.harmonics[k] == basis.harmonics[k - 1] + 1);
  }
}

TEST_CASE("frequency basis respects the Nyquist limit") {
  const FrequencyBasis basis = build_basis(0.01, 100.0, 50000.0, 16000.0);
  REQUIRE(basis.period_samples == 160);
  // Harmonics stop strictly below half the sampling rate.
  REQUIRE(basis.harmonics.back() == 79);
  REQUIRE(basis.frequencies.back() == Catch::Approx(7900.0));
}

TEST_CASE("frequency basis rejects bad requests") {
  REQUIRE_THROWS_AS(build_basis(0.100003, 50.0, 2000.0, 16000.0), ConfigError);
  REQUIRE_THROWS_AS(build_basis(0.1, 0.0, 2000.0, 16000.0), ConfigError);
  REQUIRE_THROWS_AS(build_basis(0.1, 300.0, 200.0, 16000.0), ConfigError);
  REQUIRE_THROWS_AS(build_basis(0.00025, 1500.0, 1900.0, 16000.0), EmptyBasis);
}

TEST_CASE("perturbation synthesis sums the sine components") {
  PerturbationSpec spec;
  spec.basis = build_basis(0.0125, 100.0, 3000.0, 16000.0);
  spec.amplitudes.assign(spec.basis.size(), 0.0);
  spec.amplitudes[0] = 0.5;
  spec.amplitudes[3] = -0.2;
  const std::vector<double> s = synth_perturbation(spec);
  REQUIRE(s.size() == 200);
  for (std::size_t t = 0; t < s.size(); ++t) {
    const double w0 = 2.0 * std::numbers::pi *
                      double(spec.basis.harmonics[0]) / 200.0;
    const double w3 = 2.0 * std::numbers::pi *
                      double(spec.basis.harmonics[3]) / 200.0;
    const double want = 0.5 * std::sin(w0 * double(t)) -
                        0.2 * std::sin(w3 * double(t));
    REQUIRE(s[t] == Catch::Approx(want).margin(1e-12));
  }

  spec.amplitudes.pop_back();
  REQUIRE_THROWS_AS(synth_perturbation(spec), ShapeMismatch);
}

TEST_CASE("constraint losses hinge at their bounds") {
  PerturbationSpec spec;
  spec.basis = build_basis(0.0125, 100.0, 3000.0, 16000.0);
  spec.amplitudes.assign(spec.basis.size(), 0.0);
  spec.amplitudes[0] = 2.0;
  spec.source_location = {1.0, 0.75};
  const Room room = make_rectangle_room(2.0, 1.5, 0.6, 343.0, 1);

  AttackConfig cfg;
  cfg.beta = 3.0;
  cfg.gamma = 1e9;
  cfg.sdf_margin = 0.1;
  ConstraintBreakdown c = constraint_loss(spec, room, cfg);
  REQUIRE(c.amplitude_excess == 0.0);
  REQUIRE(c.power_excess == 0.0);
  // Center of the room: sdf = -0.75, margin 0.1, no excess.
  REQUIRE(c.sdf_excess == 0.0);
  REQUIRE(c.total == 0.0);

  cfg.beta = 1.5;
  cfg.gamma = 100.0;
  c = constraint_loss(spec, room, cfg);
  REQUIRE(c.amplitude_excess == Catch::Approx(0.5).margin(1e-9));
  // One sine of amplitude 2 over 200 samples carries energy 2^2/2 * 200.
  REQUIRE(c.power_excess == Catch::Approx(400.0 - 100.0).margin(1e-9));

  spec.source_location = {1.95, 0.75};
  cfg.lambda_amplitude = 2.0;
  cfg.lambda_power = 0.5;
  cfg.lambda_sdf = 3.0;
  c = constraint_loss(spec, room, cfg);
  REQUIRE(c.sdf_excess == Catch::Approx(0.05).margin(1e-9));
  REQUIRE(c.total == Catch::Approx(2.0 * c.amplitude_excess +
                                   0.5 * c.power_excess +
                                   3.0 * c.sdf_excess));
}

TEST_CASE("projection rescales the source inside both bounds") {
  PerturbationSpec spec;
  spec.basis = build_basis(0.0125, 100.0, 3000.0, 16000.0);
  spec.amplitudes.assign(spec.basis.size(), 0.0);
  Rng rng(97);
  for (double& a : spec.amplitudes) a = rng.normal();

  PerturbationSpec projected = spec;
  project_onto_bounds(projected, 0.4, 3.0);
  const std::vector<double> s = synth_perturbation(projected);
  double energy = 0.0;
  for (double v : s) energy += v * v;
  REQUIRE(peak(s) <= 0.4 + 1e-12);
  REQUIRE(energy <= 3.0 + 1e-9);
  // A pure rescale: direction in amplitude space is unchanged.
  const double ratio = projected.amplitudes[0] / spec.amplitudes[0];
  REQUIRE(ratio > 0.0);
  for (std::size_t k = 0; k < spec.amplitudes.size(); ++k) {
    REQUIRE(projected.amplitudes[k] ==
            Catch::Approx(ratio * spec.amplitudes[k]).margin(1e-12));
  }

  // Already feasible specs pass through untouched.
  PerturbationSpec loose = projected;
  project_onto_bounds(loose, 1e9, 1e9);
  REQUIRE(loose.amplitudes == projected.amplitudes);

  // Degenerate bounds silence the source entirely.
  PerturbationSpec silenced = spec;
  project_onto_bounds(silenced, 0.0, 0.0);
  for (double a : silenced.amplitudes) REQUIRE(a == 0.0);
}

TEST_CASE("engine loss matches the straight acoustic path") {
  const testutil::SmallScene scene = testutil::make_small_scene();
  const PerturbationSpec spec =
      testutil::make_test_spec(200, {0.5, 0.4}, 31, 0.05);
  AttackConfig cfg = relaxed_config();

  const ObjectiveResult res = adversarial_objective(
      scene.model, scene.room, scene.drone, scene.data, spec, cfg);
  const double want = reference_loss(scene.model, scene.room, scene.drone,
                                     scene.data, spec);
  REQUIRE(res.localization_loss == Catch::Approx(want).epsilon(1e-9));
  REQUIRE(res.objective == Catch::Approx(want).epsilon(1e-9));
  REQUIRE(res.constraints.total == 0.0);
}

TEST_CASE("zero amplitudes leave the clean loss") {
  const testutil::SmallScene scene = testutil::make_small_scene();
  PerturbationSpec spec =
      testutil::make_test_spec(200, {0.5, 0.4}, 32, 0.0);
  for (double a : spec.amplitudes) REQUIRE(a == 0.0);
  AttackConfig cfg = relaxed_config();
  const ObjectiveResult res = adversarial_objective(
      scene.model, scene.room, scene.drone, scene.data, spec, cfg);

  double clean = 0.0;
  for (const Sample& s : scene.data.samples) {
    const Vec2 e = forward(scene.model, s.waveforms) -
                   normalize_location(s.location, scene.data.bounds);
    clean += norm2(e);
  }
  clean /= double(scene.data.size());
  REQUIRE(res.localization_loss == Catch::Approx(clean).epsilon(1e-12));
}

TEST_CASE("amplitude gradient matches finite differences") {
  const testutil::SmallScene scene = testutil::make_small_scene();
  PerturbationSpec spec =
      testutil::make_test_spec(200, {0.5, 0.4}, 33, 0.05);
  AttackConfig cfg = relaxed_config();

  const ObjectiveResult res = adversarial_objective(
      scene.model, scene.room, scene.drone, scene.data, spec, cfg);
  const double h = 1e-6;
  double scale = 1e-12;
  for (double g : res.amplitude_gradient) scale = std::max(scale, std::abs(g));
  for (std::size_t k = 0; k < spec.amplitudes.size(); k += 5) {
    PerturbationSpec plus = spec, minus = spec;
    plus.amplitudes[k] += h;
    minus.amplitudes[k] -= h;
    const double op = adversarial_objective(scene.model, scene.room,
                                            scene.drone, scene.data, plus, cfg)
                          .objective;
    const double om = adversarial_objective(scene.model, scene.room,
                                            scene.drone, scene.data, minus,
                                            cfg)
                          .objective;
    const double fd = (op - om) / (2.0 * h);
    INFO("harmonic index " << k);
    REQUIRE(std::abs(res.amplitude_gradient[k] - fd) / scale < 1e-4);
  }
}

TEST_CASE("amplitude gradient includes active hinge terms") {
  const testutil::SmallScene scene = testutil::make_small_scene();
  PerturbationSpec spec =
      testutil::make_test_spec(200, {0.5, 0.4}, 34, 0.4);
  AttackConfig cfg = relaxed_config();
  cfg.beta = 0.1;    // strictly exceeded
  cfg.gamma = 0.05;  // strictly exceeded
  cfg.lambda_amplitude = 0.7;
  cfg.lambda_power = 0.9;

  const ObjectiveResult res = adversarial_objective(
      scene.model, scene.room, scene.drone, scene.data, spec, cfg);
  REQUIRE(res.constraints.amplitude_excess > 0.0);
  REQUIRE(res.constraints.power_excess > 0.0);

  const double h = 1e-7;
  double scale = 1e-12;
  for (double g : res.amplitude_gradient) scale = std::max(scale, std::abs(g));
  for (std::size_t k = 0; k < spec.amplitudes.size(); k += 7) {
    PerturbationSpec plus = spec, minus = spec;
    plus.amplitudes[k] += h;
    minus.amplitudes[k] -= h;
    const double op = adversarial_objective(scene.model, scene.room,
                                            scene.drone, scene.data, plus, cfg)
                          .objective;
    const double om = adversarial_objective(scene.model, scene.room,
                                            scene.drone, scene.data, minus,
                                            cfg)
                          .objective;
    const double fd = (op - om) / (2.0 * h);
    INFO("harmonic index " << k);
    REQUIRE(std::abs(res.amplitude_gradient[k] - fd) / scale < 1e-3);
  }
}

TEST_CASE("location gradient matches finite differences") {
  const testutil::SmallScene scene = testutil::make_small_scene();
  PerturbationSpec spec =
      testutil::make_test_spec(200, {0.5, 0.4}, 35, 0.05);
  AttackConfig cfg = relaxed_config();

  const ObjectiveResult res = adversarial_objective(
      scene.model, scene.room, scene.drone, scene.data, spec, cfg);
  const double h = 1e-5;
  const Vec2 p = spec.source_location;
  auto objective_at = [&](Vec2 loc) {
    PerturbationSpec moved = spec;
    moved.source_location = loc;
    return adversarial_objective(scene.model, scene.room, scene.drone,
                                 scene.data, moved, cfg)
        .objective;
  };
  const double fdx =
      (objective_at({p.x + h, p.y}) - objective_at({p.x - h, p.y})) / (2.0 * h);
  const double fdy =
      (objective_at({p.x, p.y + h}) - objective_at({p.x, p.y - h})) / (2.0 * h);
  const double scale = std::max({std::abs(fdx), std::abs(fdy), 1e-9});
  REQUIRE(std::abs(res.location_gradient.x - fdx) / scale < 1e-3);
  REQUIRE(std::abs(res.location_gradient.y - fdy) / scale < 1e-3);
}

TEST_CASE("pgd attack improves the adversarial loss and tracks its best") {
  const testutil::SmallScene scene = testutil::make_small_scene();
  AttackConfig cfg = relaxed_config();
  cfg.beta = 1.0;
  cfg.gamma = 2.0;
  cfg.max_iterations = 12;
  cfg.step_amplitudes = 0.05;

  const AttackReport report =
      pgd_attack(scene.model, scene.room, scene.drone, scene.data, cfg);
  REQUIRE(!report.iterations.empty());
  REQUIRE(report.iterations.size() <= 12);
  for (std::size_t i = 1; i < report.iterations.size(); ++i) {
    REQUIRE(report.iterations[i].best_objective >=
            report.iterations[i - 1].best_objective);
    REQUIRE(report.iterations[i].iteration == i);
  }
  REQUIRE(report.adversarial_rms > report.clean_rms);
  REQUIRE(report.spec.amplitudes.size() == report.spec.basis.size());
  REQUIRE(!report.target_rms.has_value());
  REQUIRE(report.workspace_bytes > 0);

  // Every iterate is projected, so the returned spec obeys the bounds.
  REQUIRE(report.final_constraints.amplitude_excess < 1e-9);
  REQUIRE(report.final_constraints.power_excess < 1e-9);
}

TEST_CASE("tiny bounds silence the attack") {
  const testutil::SmallScene scene = testutil::make_small_scene();
  AttackConfig cfg = relaxed_config();
  cfg.beta = 1e-8;
  cfg.gamma = 1e-12;
  cfg.lambda_amplitude = 1e6;
  cfg.lambda_power = 1e6;
  cfg.max_iterations = 10;

  const AttackReport report =
      pgd_attack(scene.model, scene.room, scene.drone, scene.data, cfg);
  const std::vector<double> s = synth_perturbation(report.spec);
  double energy = 0.0;
  for (double v : s) energy += v * v;
  REQUIRE(energy <= 1e-12 + 1e-15);
  REQUIRE(report.adversarial_rms ==
          Catch::Approx(report.clean_rms).epsilon(0.05));
}

TEST_CASE("early stopping respects the patience") {
  const testutil::SmallScene scene = testutil::make_small_scene();
  AttackConfig cfg = relaxed_config();
  cfg.max_iterations = 50;
  cfg.patience = 3;
  cfg.step_amplitudes = 0.0;  // nothing changes, so progress stalls at once
  const AttackReport report =
      pgd_attack(scene.model, scene.room, scene.drone, scene.data, cfg);
  REQUIRE(report.iterations.size() == 4);
}

TEST_CASE("targeted attacks report distance to the target") {
  const testutil::SmallScene scene = testutil::make_small_scene();
  AttackConfig cfg = relaxed_config();
  cfg.max_iterations = 6;
  const AttackReport report = targeted_attack(
      scene.model, scene.room, scene.drone, scene.data, cfg, {1.0, 0.75});
  REQUIRE(report.target_rms.has_value());

  REQUIRE_THROWS_AS(targeted_attack(scene.model, scene.room, scene.drone,
                                    scene.data, cfg, {9.0, 9.0}),
                    TargetOutsideRoom);
}

TEST_CASE("attack rejects inconsistent inputs") {
  const testutil::SmallScene scene = testutil::make_small_scene();
  AttackConfig cfg = relaxed_config();

  Dataset empty = scene.data;
  empty.samples.clear();
  REQUIRE_THROWS_AS(
      pgd_attack(scene.model, scene.room, scene.drone, empty, cfg),
      EmptyDataset);

  LocalizerModel wrong = make_localizer(2, 100, 4, {8}, true, 3);
  REQUIRE_THROWS_AS(
      pgd_attack(wrong, scene.room, scene.drone, scene.data, cfg),
      ShapeMismatch);
}
