#pragma once

// Compact differentiable localizer: a learned linear temporal subsampling
// shared across channels, a small tanh MLP, and a 2D output in normalized
// room coordinates. Gradients with respect to both parameters and inputs
// are computed analytically.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "rotorloc/errors.hpp"
#include "rotorloc/geometry.hpp"
#include "rotorloc/rng.hpp"

namespace rotorloc {

struct Sample {
  std::vector<double> waveforms;  // num_mics x samples_per_channel, row-major
  Vec2 location;
  double heading = 0.0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t num_mics = 0;
  std::size_t samples_per_channel = 0;
  double sample_rate = 16000.0;
  Bounds bounds;

  std::size_t size() const { return samples.size(); }
  std::size_t input_size() const { return num_mics * samples_per_channel; }
};

inline Vec2 normalize_location(Vec2 p, const Bounds& b) {
  return {(p.x - b.xmin) / b.width(), (p.y - b.ymin) / b.height()};
}

inline Vec2 denormalize_location(Vec2 p, const Bounds& b) {
  return {b.xmin + p.x * b.width(), b.ymin + p.y * b.height()};
}

inline void validate_dataset(const Dataset& data) {
  if (data.num_mics == 0 || data.samples_per_channel == 0) {
    throw ShapeMismatch("dataset dimensions must be positive");
  }
  if (!(data.bounds.width() > 0.0 && data.bounds.height() > 0.0)) {
    throw ShapeMismatch("dataset bounds must span a positive area");
  }
  for (const Sample& s : data.samples) {
    if (s.waveforms.size() != data.input_size()) {
      throw ShapeMismatch("sample waveform size disagrees with the dataset");
    }
    const Vec2 n = normalize_location(s.location, data.bounds);
    if (n.x < 0.0 || n.x > 1.0 || n.y < 0.0 || n.y > 1.0) {
      throw ShapeMismatch("sample location is outside the dataset bounds");
    }
  }
}

struct LocalizerModel {
  std::size_t num_mics = 0;
  std::size_t samples_per_channel = 0;
  std::size_t subsample_dim = 0;
  std::vector<std::size_t> hidden_sizes;
  bool zero_mean_input = true;
  double input_scale = 1.0;
  // Frozen per-entry offset subtracted before scaling. Training sets it to
  // the mean training response; the rotor tone is shared by every sample,
  // so without centering it drowns out the position-dependent residual.
  std::vector<double> input_offset;

  // Subsampling operator, subsample_dim x samples_per_channel, shared by
  // every channel. MLP layers follow, each out x in row-major plus bias;
  // hidden layers are tanh, the final layer is affine with 2 outputs.
  std::vector<double> subsample;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  std::size_t input_size() const { return num_mics * samples_per_channel; }
  std::size_t feature_dim() const { return num_mics * subsample_dim; }

  std::vector<std::size_t> layer_dims() const {
    std::vector<std::size_t> dims;
    dims.push_back(feature_dim());
    for (std::size_t h : hidden_sizes) dims.push_back(h);
    dims.push_back(2);
    return dims;
  }

  std::size_t parameter_count() const {
    std::size_t n = subsample.size();
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
  }
};

inline LocalizerModel make_localizer(std::size_t num_mics,
                                     std::size_t samples_per_channel,
                                     std::size_t subsample_dim,
                                     std::vector<std::size_t> hidden_sizes,
                                     bool zero_mean_input, std::uint64_t seed) {
  LocalizerModel model;
  model.num_mics = num_mics;
  model.samples_per_channel = samples_per_channel;
  model.subsample_dim = subsample_dim;
  model.hidden_sizes = std::move(hidden_sizes);
  model.zero_mean_input = zero_mean_input;
  model.input_offset.assign(model.input_size(), 0.0);

  Rng rng(seed);
  model.subsample.resize(subsample_dim * samples_per_channel);
  const double s_scale = 1.0 / std::sqrt(double(samples_per_channel));
  for (double& v : model.subsample) v = s_scale * rng.normal();

  const auto dims = model.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t in = dims[l], out = dims[l + 1];
    std::vector<double> w(out * in);
    const double w_scale = 1.0 / std::sqrt(double(in));
    for (double& v : w) v = w_scale * rng.normal();
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::vector<double>(out, 0.0));
  }
  return model;
}

struct ForwardTrace {
  std::vector<double> normalized;               // input after normalization
  std::vector<double> features;                 // after subsampling
  std::vector<std::vector<double>> activations; // per MLP layer output
};

namespace detail {

inline void check_input(const LocalizerModel& model, std::size_t n) {
  if (n != model.input_size()) {
    throw ShapeMismatch("input size disagrees with the model");
  }
  if (model.input_offset.size() != model.input_size()) {
    throw ShapeMismatch("model input offset size disagrees with the model");
  }
}

}  // namespace detail

inline Vec2 forward(const LocalizerModel& model,
                    const std::vector<double>& input, ForwardTrace* trace) {
  detail::check_input(model, input.size());
  const std::size_t channels = model.num_mics;
  const std::size_t n = model.samples_per_channel;
  const std::size_t sub = model.subsample_dim;

  std::vector<double> normalized(input.size());
  const double inv_scale = 1.0 / model.input_scale;
  const double* off = model.input_offset.data();
  for (std::size_t c = 0; c < channels; ++c) {
    double m = 0.0;
    if (model.zero_mean_input) {
      for (std::size_t t = 0; t < n; ++t) {
        m += input[c * n + t] - off[c * n + t];
      }
      m /= double(n);
    }
    for (std::size_t t = 0; t < n; ++t) {
      normalized[c * n + t] = (input[c * n + t] - off[c * n + t] - m) * inv_scale;
    }
  }

  std::vector<double> features(channels * sub, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t s = 0; s < sub; ++s) {
      const double* row = model.subsample.data() + s * n;
      const double* x = normalized.data() + c * n;
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) acc += row[t] * x[t];
      features[c * sub + s] = acc;
    }
  }

  std::vector<std::vector<double>> activations;
  const std::vector<double>* in = &features;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const std::size_t out_dim = model.biases[l].size();
    const std::size_t in_dim = in->size();
    std::vector<double> out(out_dim);
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double* row = model.weights[l].data() + o * in_dim;
      double acc = model.biases[l][o];
      for (std::size_t i = 0; i < in_dim; ++i) acc += row[i] * (*in)[i];
      out[o] = l + 1 < model.weights.size() ? std::tanh(acc) : acc;
    }
    activations.push_back(std::move(out));
    in = &activations.back();
  }

  const Vec2 y{activations.back()[0], activations.back()[1]};
  if (trace != nullptr) {
    trace->normalized = std::move(normalized);
    trace->features = std::move(features);
    trace->activations = std::move(activations);
  }
  return y;
}

inline Vec2 forward(const LocalizerModel& model,
                    const std::vector<double>& input) {
  return forward(model, input, nullptr);
}

namespace detail {

// Backpropagates a cotangent on the outputs down to the feature vector.
inline std::vector<double> backprop_to_features(const LocalizerModel& model,
                                                const ForwardTrace& trace,
                                                Vec2 cotangent) {
  std::vector<double> g = {cotangent.x, cotangent.y};
  for (std::size_t l = model.weights.size(); l-- > 0;) {
    const std::vector<double>& in_act =
        l == 0 ? trace.features : trace.activations[l - 1];
    const std::size_t in_dim = in_act.size();
    const std::size_t out_dim = model.biases[l].size();
    std::vector<double> g_in(in_dim, 0.0);
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double* row = model.weights[l].data() + o * in_dim;
      const double go = g[o];
      for (std::size_t i = 0; i < in_dim; ++i) g_in[i] += row[i] * go;
    }
    if (l > 0) {
      for (std::size_t i = 0; i < in_dim; ++i) {
        const double a = trace.activations[l - 1][i];
        g_in[i] *= 1.0 - a * a;
      }
    }
    g = std::move(g_in);
  }
  return g;
}

}  // namespace detail

// Gradient of cotangent . output with respect to the raw input samples.
inline std::vector<double> input_gradient(const LocalizerModel& model,
                                          const ForwardTrace& trace,
                                          Vec2 cotangent) {
  const std::size_t channels = model.num_mics;
  const std::size_t n = model.samples_per_channel;
  const std::size_t sub = model.subsample_dim;
  const std::vector<double> g_feat =
      detail::backprop_to_features(model, trace, cotangent);

  std::vector<double> g_raw(channels * n, 0.0);
  const double inv_scale = 1.0 / model.input_scale;
  for (std::size_t c = 0; c < channels; ++c) {
    double* gx = g_raw.data() + c * n;
    for (std::size_t s = 0; s < sub; ++s) {
      const double* row = model.subsample.data() + s * n;
      const double gf = g_feat[c * sub + s];
      if (gf == 0.0) continue;
      for (std::size_t t = 0; t < n; ++t) gx[t] += gf * row[t];
    }
    double m = 0.0;
    if (model.zero_mean_input) {
      for (std::size_t t = 0; t < n; ++t) m += gx[t];
      m /= double(n);
    }
    for (std::size_t t = 0; t < n; ++t) gx[t] = (gx[t] - m) * inv_scale;
  }
  return g_raw;
}

inline std::vector<double> input_gradient(const LocalizerModel& model,
                                          const std::vector<double>& input,
                                          Vec2 cotangent) {
  ForwardTrace trace;
  forward(model, input, &trace);
  return input_gradient(model, trace, cotangent);
}

struct Gradients {
  std::vector<double> subsample;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

inline Gradients make_gradients(const LocalizerModel& model) {
  Gradients g;
  g.subsample.assign(model.subsample.size(), 0.0);
  for (const auto& w : model.weights) g.weights.emplace_back(w.size(), 0.0);
  for (const auto& b : model.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

// Accumulates parameter gradients of cotangent . output for one sample.
inline void accumulate_parameter_gradients(const LocalizerModel& model,
                                           const ForwardTrace& trace,
                                           Vec2 cotangent, Gradients& grads) {
  std::vector<double> g = {cotangent.x, cotangent.y};
  for (std::size_t l = model.weights.size(); l-- > 0;) {
    const std::vector<double>& in_act =
        l == 0 ? trace.features : trace.activations[l - 1];
    const std::size_t in_dim = in_act.size();
    const std::size_t out_dim = model.biases[l].size();
    std::vector<double> g_in(in_dim, 0.0);
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double go = g[o];
      grads.biases[l][o] += go;
      double* wrow = grads.weights[l].data() + o * in_dim;
      const double* mrow = model.weights[l].data() + o * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) {
        wrow[i] += go * in_act[i];
        g_in[i] += mrow[i] * go;
      }
    }
    if (l > 0) {
      for (std::size_t i = 0; i < in_dim; ++i) {
        const double a = trace.activations[l - 1][i];
        g_in[i] *= 1.0 - a * a;
      }
    }
    g = std::move(g_in);
  }

  const std::size_t channels = model.num_mics;
  const std::size_t n = model.samples_per_channel;
  const std::size_t sub = model.subsample_dim;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* x = trace.normalized.data() + c * n;
    for (std::size_t s = 0; s < sub; ++s) {
      const double gf = g[c * sub + s];
      if (gf == 0.0) continue;
      double* row = grads.subsample.data() + s * n;
      for (std::size_t t = 0; t < n; ++t) row[t] += gf * x[t];
    }
  }
}

// Root mean square localization error after normalizing both predictions
// and targets by the room bounds.
inline double scaled_rms(const std::vector<Vec2>& predictions,
                         const std::vector<Vec2>& targets, const Bounds& b) {
  if (predictions.size() != targets.size() || predictions.empty()) {
    throw LengthMismatch("predictions and targets must pair up");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Vec2 d = normalize_location(predictions[i], b) -
                   normalize_location(targets[i], b);
    acc += norm2(d);
  }
  return std::sqrt(acc / double(predictions.size()));
}

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 200;
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

struct TrainResult {
  LocalizerModel model;
  std::vector<double> epoch_loss;  // mean squared normalized error
};

namespace detail {

struct AdamState {
  Gradients m;
  Gradients v;
  std::size_t step = 0;
};

inline void adam_update_array(std::vector<double>& param,
                              const std::vector<double>& grad,
                              std::vector<double>& m, std::vector<double>& v,
                              const TrainConfig& cfg, double c1, double c2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
    v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    param[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
  }
}

}  // namespace detail

// Minimizes mean squared error in normalized coordinates with Adam. Input
// normalization (the dataset's global RMS and mean response) is frozen into
// the model.
inline TrainResult train(LocalizerModel model, const Dataset& data,
                         const TrainConfig& cfg) {
  if (data.samples.empty()) throw EmptyDataset("cannot train on no samples");
  validate_dataset(data);
  if (data.num_mics != model.num_mics ||
      data.samples_per_channel != model.samples_per_channel) {
    throw ShapeMismatch("dataset dimensions disagree with the model");
  }

  double energy = 0.0;
  std::size_t count = 0;
  for (const Sample& s : data.samples) {
    for (double v : s.waveforms) energy += v * v;
    count += s.waveforms.size();
  }
  const double rms = std::sqrt(energy / double(count));
  model.input_scale = rms > 0.0 ? rms : 1.0;
  model.input_offset.assign(data.input_size(), 0.0);
  for (const Sample& s : data.samples) {
    for (std::size_t j = 0; j < s.waveforms.size(); ++j) {
      model.input_offset[j] += s.waveforms[j];
    }
  }
  for (double& v : model.input_offset) v /= double(data.size());

  std::vector<Vec2> targets(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    targets[i] = normalize_location(data.samples[i].location, data.bounds);
  }

  Rng rng(cfg.seed);
  detail::AdamState adam{make_gradients(model), make_gradients(model), 0};
  Gradients grads = make_gradients(model);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  result.epoch_loss.reserve(cfg.epochs);
  ForwardTrace trace;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    fisher_yates_shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / double(stop - start);
      grads.subsample.assign(grads.subsample.size(), 0.0);
      for (auto& w : grads.weights) w.assign(w.size(), 0.0);
      for (auto& b : grads.biases) b.assign(b.size(), 0.0);
      for (std::size_t i = start; i < stop; ++i) {
        const Sample& s = data.samples[order[i]];
        const Vec2 y = forward(model, s.waveforms, &trace);
        const Vec2 e = y - targets[order[i]];
        epoch_loss += norm2(e);
        accumulate_parameter_gradients(model, trace, e * (2.0 * inv_batch),
                                       grads);
      }
      ++adam.step;
      const double c1 = 1.0 - std::pow(cfg.adam_beta1, double(adam.step));
      const double c2 = 1.0 - std::pow(cfg.adam_beta2, double(adam.step));
      detail::adam_update_array(model.subsample, grads.subsample,
                                adam.m.subsample, adam.v.subsample, cfg, c1,
                                c2);
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        detail::adam_update_array(model.weights[l], grads.weights[l],
                                  adam.m.weights[l], adam.v.weights[l], cfg,
                                  c1, c2);
        detail::adam_update_array(model.biases[l], grads.biases[l],
                                  adam.m.biases[l], adam.v.biases[l], cfg, c1,
                                  c2);
      }
    }
    result.epoch_loss.push_back(epoch_loss / double(data.size()));
  }
  result.model = std::move(model);
  return result;
}

}  // namespace rotorloc
