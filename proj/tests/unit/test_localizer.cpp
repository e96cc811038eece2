#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "helpers.hpp"
#include "rotorloc/localizer.hpp"
#include "rotorloc/rng.hpp"

using namespace rotorloc;

namespace {

Dataset make_toy_dataset(std::size_t num_samples, std::size_t mics,
                         std::size_t n, std::uint64_t seed) {
  Dataset data;
  data.num_mics = mics;
  data.samples_per_channel = n;
  data.bounds = {0.0, 4.0, 0.0, 3.0};
  Rng rng(seed);
  for (std::size_t i = 0; i < num_samples; ++i) {
    Sample s;
    s.waveforms = testutil::random_vector(mics * n, rng, 0.05);
    s.location = {0.5 + 3.0 * rng.uniform(), 0.5 + 2.0 * rng.uniform()};
    s.heading = rng.uniform();
    data.samples.push_back(std::move(s));
  }
  return data;
}

double loss_of(const LocalizerModel& model, const Dataset& data) {
  double acc = 0.0;
  for (const Sample& s : data.samples) {
    const Vec2 e = forward(model, s.waveforms) -
                   normalize_location(s.location, data.bounds);
    acc += norm2(e);
  }
  return acc / double(data.size());
}

}  // namespace

TEST_CASE("normalized coordinates round trip") {
  const Bounds b{1.0, 5.0, -2.0, 1.0};
  const Vec2 p{2.5, -0.5};
  const Vec2 n = normalize_location(p, b);
  REQUIRE(n.x == Catch::Approx(0.375));
  REQUIRE(n.y == Catch::Approx(0.5));
  const Vec2 back = denormalize_location(n, b);
  REQUIRE(back.x == Catch::Approx(p.x));
  REQUIRE(back.y == Catch::Approx(p.y));
}

TEST_CASE("model construction and parameter count") {
  const LocalizerModel model = make_localizer(4, 100, 8, {16, 12}, true, 3);
  REQUIRE(model.input_size() == 400);
  REQUIRE(model.feature_dim() == 32);
  REQUIRE(model.layer_dims() == std::vector<std::size_t>{32, 16, 12, 2});
  REQUIRE(model.subsample.size() == 800);
  REQUIRE(model.weights.size() == 3);
  REQUIRE(model.weights[0].size() == 16 * 32);
  REQUIRE(model.biases[2].size() == 2);
  REQUIRE(model.parameter_count() ==
          800 + 16 * 32 + 16 + 12 * 16 + 12 + 2 * 12 + 2);
}

TEST_CASE("a purely linear model computes exactly what it should") {
  LocalizerModel model = make_localizer(2, 3, 2, {}, false, 5);
  model.input_scale = 2.0;
  model.subsample = {1.0, 0.0, -1.0, 0.5, 0.5, 0.5};
  model.weights[0] = {1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 1.0, 0.0};
  model.biases[0] = {0.25, -0.5};

  const std::vector<double> input = {2.0, 4.0, 6.0, 1.0, 0.0, -1.0};
  // Normalized input halves everything; features are per-channel dots.
  const std::vector<double> feat = {1.0 - 3.0, 0.5 * (1.0 + 2.0 + 3.0),
                                    0.5 + 0.5, 0.25 * (1.0 - 1.0)};
  const Vec2 y = forward(model, input);
  const double y0 = 0.25 + 1.0 * feat[0] + 2.0 * feat[1] + 3.0 * feat[2] +
                    4.0 * feat[3];
  const double y1 = -0.5 - 1.0 * feat[0] + 0.0 * feat[1] + 1.0 * feat[2];
  REQUIRE(y.x == Catch::Approx(y0));
  REQUIRE(y.y == Catch::Approx(y1));
}

TEST_CASE("zero mean input mode ignores per-channel offsets") {
  const LocalizerModel model = make_localizer(2, 10, 3, {4}, true, 7);
  Rng rng(8);
  const std::vector<double> input = testutil::random_vector(20, rng);
  std::vector<double> offset = input;
  for (std::size_t t = 0; t < 10; ++t) offset[t] += 3.7;
  for (std::size_t t = 10; t < 20; ++t) offset[t] -= 1.2;
  const Vec2 a = forward(model, input);
  const Vec2 b = forward(model, offset);
  REQUIRE(b.x == Catch::Approx(a.x).margin(1e-12));
  REQUIRE(b.y == Catch::Approx(a.y).margin(1e-12));
}

TEST_CASE("input offset is subtracted before scaling") {
  LocalizerModel model = make_localizer(1, 4, 2, {}, false, 6);
  model.input_scale = 0.5;
  model.input_offset = {1.0, -2.0, 0.5, 0.0};
  model.subsample = {1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0};
  model.weights[0] = {1.0, 0.0, 0.0, 1.0};
  model.biases[0] = {0.0, 0.0};
  const std::vector<double> input = {2.0, 1.0, 1.5, 3.0};
  // Centered input is {1, 3, 1, 3}; the scale of 0.5 then doubles it.
  const Vec2 y = forward(model, input);
  REQUIRE(y.x == Catch::Approx(2.0 + 6.0));
  REQUIRE(y.y == Catch::Approx(2.0 - 6.0));
}

TEST_CASE("forward rejects wrong input sizes") {
  const LocalizerModel model = make_localizer(2, 10, 3, {4}, true, 7);
  REQUIRE_THROWS_AS(forward(model, std::vector<double>(19, 0.0)),
                    ShapeMismatch);
}

TEST_CASE("input gradient matches finite differences") {
  for (const bool zero_mean : {false, true}) {
    LocalizerModel model = make_localizer(2, 6, 3, {5, 4}, zero_mean, 9);
    model.input_scale = 0.7;
    Rng rng(10);
    const std::vector<double> input = testutil::random_vector(12, rng);
    const Vec2 cot{0.8, -1.3};
    const std::vector<double> grad = input_gradient(model, input, cot);
    const double h = 1e-6;
    for (std::size_t i = 0; i < input.size(); ++i) {
      std::vector<double> plus = input, minus = input;
      plus[i] += h;
      minus[i] -= h;
      const Vec2 yp = forward(model, plus);
      const Vec2 ym = forward(model, minus);
      const double fd =
          (dot({yp.x, yp.y}, cot) - dot({ym.x, ym.y}, cot)) / (2.0 * h);
      REQUIRE(grad[i] == Catch::Approx(fd).margin(1e-6));
    }
  }
}

TEST_CASE("parameter gradients match finite differences") {
  LocalizerModel model = make_localizer(2, 5, 3, {4}, true, 11);
  model.input_scale = 0.9;
  Rng rng(12);
  const std::vector<double> input = testutil::random_vector(10, rng);
  const Vec2 cot{1.0, 0.5};

  ForwardTrace trace;
  forward(model, input, &trace);
  Gradients grads = make_gradients(model);
  accumulate_parameter_gradients(model, trace, cot, grads);

  const double h = 1e-6;
  auto fd_at = [&](double* param) {
    const double saved = *param;
    *param = saved + h;
    const Vec2 yp = forward(model, input);
    *param = saved - h;
    const Vec2 ym = forward(model, input);
    *param = saved;
    return (dot({yp.x, yp.y}, cot) - dot({ym.x, ym.y}, cot)) / (2.0 * h);
  };

  for (std::size_t i = 0; i < model.subsample.size(); i += 3) {
    REQUIRE(grads.subsample[i] ==
            Catch::Approx(fd_at(&model.subsample[i])).margin(1e-6));
  }
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    for (std::size_t i = 0; i < model.weights[l].size(); i += 2) {
      REQUIRE(grads.weights[l][i] ==
              Catch::Approx(fd_at(&model.weights[l][i])).margin(1e-6));
    }
    for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
      REQUIRE(grads.biases[l][i] ==
              Catch::Approx(fd_at(&model.biases[l][i])).margin(1e-6));
    }
  }
}

TEST_CASE("training memorizes a single sample") {
  Dataset data = make_toy_dataset(1, 2, 30, 13);
  LocalizerModel init = make_localizer(2, 30, 4, {8}, true, 14);
  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.batch_size = 1;
  cfg.epochs = 400;
  const TrainResult result = train(std::move(init), data, cfg);
  REQUIRE(result.epoch_loss.size() == 400);
  REQUIRE(result.epoch_loss.back() < 1e-4);
  REQUIRE(result.epoch_loss.back() < result.epoch_loss.front());
}

TEST_CASE("training freezes the dataset scale into the model") {
  Dataset data = make_toy_dataset(4, 2, 20, 15);
  double energy = 0.0;
  for (const Sample& s : data.samples) {
    for (double v : s.waveforms) energy += v * v;
  }
  const double rms = std::sqrt(energy / double(4 * 40));
  LocalizerModel init = make_localizer(2, 20, 4, {6}, true, 16);
  TrainConfig cfg;
  cfg.epochs = 1;
  const TrainResult result = train(std::move(init), data, cfg);
  REQUIRE(result.model.input_scale == Catch::Approx(rms));

  for (std::size_t j = 0; j < data.input_size(); j += 7) {
    double m = 0.0;
    for (const Sample& s : data.samples) m += s.waveforms[j];
    m /= double(data.size());
    REQUIRE(result.model.input_offset[j] == Catch::Approx(m).margin(1e-15));
  }
}

TEST_CASE("training with zero learning rate changes nothing else") {
  Dataset data = make_toy_dataset(3, 2, 15, 17);
  LocalizerModel init = make_localizer(2, 15, 3, {5}, true, 18);
  const std::vector<double> sub_before = init.subsample;
  const std::vector<double> w_before = init.weights[0];
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  const TrainResult result = train(std::move(init), data, cfg);
  REQUIRE(result.model.subsample == sub_before);
  REQUIRE(result.model.weights[0] == w_before);
}

TEST_CASE("training is deterministic in its seed") {
  Dataset data = make_toy_dataset(6, 2, 12, 19);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 2;
  const TrainResult a =
      train(make_localizer(2, 12, 3, {5}, true, 20), data, cfg);
  const TrainResult b =
      train(make_localizer(2, 12, 3, {5}, true, 20), data, cfg);
  REQUIRE(a.epoch_loss == b.epoch_loss);
  REQUIRE(a.model.subsample == b.model.subsample);
  REQUIRE(a.model.weights[0] == b.model.weights[0]);
}

TEST_CASE("training reduces the loss on a learnable dataset") {
  Dataset data = make_toy_dataset(8, 2, 25, 21);
  LocalizerModel init = make_localizer(2, 25, 4, {8}, true, 22);
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch_size = 4;
  const TrainResult result = train(std::move(init), data, cfg);
  REQUIRE(loss_of(result.model, data) < 0.5 * result.epoch_loss.front());
}

TEST_CASE("training validates its inputs") {
  Dataset empty;
  empty.num_mics = 2;
  empty.samples_per_channel = 10;
  empty.bounds = {0.0, 1.0, 0.0, 1.0};
  REQUIRE_THROWS_AS(
      train(make_localizer(2, 10, 2, {}, true, 1), empty, TrainConfig{}),
      EmptyDataset);

  Dataset data = make_toy_dataset(2, 2, 10, 23);
  REQUIRE_THROWS_AS(
      train(make_localizer(2, 11, 2, {}, true, 1), data, TrainConfig{}),
      ShapeMismatch);

  Dataset bad = make_toy_dataset(2, 2, 10, 24);
  bad.samples[0].location = {9.0, 9.0};
  REQUIRE_THROWS_AS(
      train(make_localizer(2, 10, 2, {}, true, 1), bad, TrainConfig{}),
      ShapeMismatch);

  Dataset short_wave = make_toy_dataset(2, 2, 10, 25);
  short_wave.samples[1].waveforms.pop_back();
  REQUIRE_THROWS_AS(validate_dataset(short_wave), ShapeMismatch);
}

TEST_CASE("scaled rms") {
  const Bounds b{0.0, 2.0, 0.0, 2.0};
  const std::vector<Vec2> preds = {{1.0, 1.0}, {2.0, 0.0}};
  const std::vector<Vec2> truth = {{1.0, 1.0}, {0.0, 0.0}};
  // Second pair differs by (1, 0) in normalized units.
  REQUIRE(scaled_rms(preds, truth, b) == Catch::Approx(std::sqrt(0.5)));
  REQUIRE_THROWS_AS(scaled_rms(preds, {{0.0, 0.0}}, b), LengthMismatch);
}
