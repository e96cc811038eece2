#pragma once

// Universal perturbation attacks on the localizer. The perturbation is a
// static loudspeaker at a chosen position playing a sum of sines at
// harmonics of the drone period, so the perturbed scene stays periodic.
// Amplitude, power and placement limits enter as hinge penalties in the
// objective, and every gradient step is followed by a projection that
// rescales the source waveform back inside the amplitude and power bounds,
// so returned perturbations are always playable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "rotorloc/acoustics.hpp"
#include "rotorloc/drone.hpp"
#include "rotorloc/errors.hpp"
#include "rotorloc/fft.hpp"
#include "rotorloc/geometry.hpp"
#include "rotorloc/localizer.hpp"
#include "rotorloc/parallel.hpp"
#include "rotorloc/rng.hpp"
#include "rotorloc/waveform.hpp"

namespace rotorloc {

struct FrequencyBasis {
  std::vector<std::size_t> harmonics;  // cycles per period
  std::vector<double> frequencies;     // Hz
  std::size_t period_samples = 0;
  double sample_rate = 16000.0;

  std::size_t size() const { return harmonics.size(); }
};

// All frequencies in [f_min, f_max] whose period divides the repetition
// period, i.e. harmonics m/T. Harmonics at or above Nyquist are excluded.
inline FrequencyBasis build_basis(double period_seconds, double f_min,
                                  double f_max, double sample_rate) {
  if (!(period_seconds > 0.0) || !(sample_rate > 0.0)) {
    throw ConfigError("period and sample rate must be positive");
  }
  if (!(f_min > 0.0) || !(f_max >= f_min)) {
    throw ConfigError("need 0 < f_min <= f_max");
  }
  const double p_exact = period_seconds * sample_rate;
  const long long p = std::llround(p_exact);
  if (p <= 0 || std::abs(p_exact - double(p)) > 1e-6) {
    throw ConfigError("period must be a whole number of samples");
  }

  FrequencyBasis basis;
  basis.period_samples = std::size_t(p);
  basis.sample_rate = sample_rate;
  long long lo = std::llround(std::ceil(f_min * period_seconds - 1e-9));
  long long hi = std::llround(std::floor(f_max * period_seconds + 1e-9));
  lo = std::max(lo, 1ll);
  hi = std::min(hi, (p - 1) / 2);
  for (long long m = lo; m <= hi; ++m) {
    basis.harmonics.push_back(std::size_t(m));
    basis.frequencies.push_back(double(m) / period_seconds);
  }
  if (basis.harmonics.empty()) {
    throw EmptyBasis("no harmonics in the requested band");
  }
  return basis;
}

struct PerturbationSpec {
  std::vector<double> amplitudes;  // one per basis frequency
  Vec2 source_location;
  FrequencyBasis basis;
};

// One period of the perturbation waveform at the source.
inline std::vector<double> synth_perturbation(const PerturbationSpec& spec) {
  if (spec.amplitudes.size() != spec.basis.size()) {
    throw ShapeMismatch("amplitudes must pair with basis frequencies");
  }
  const std::size_t p = spec.basis.period_samples;
  std::vector<double> s(p, 0.0);
  for (std::size_t k = 0; k < spec.basis.size(); ++k) {
    const double a = spec.amplitudes[k];
    if (a == 0.0) continue;
    const double w =
        2.0 * std::numbers::pi * double(spec.basis.harmonics[k]) / double(p);
    for (std::size_t t = 0; t < p; ++t) {
      s[t] += a * std::sin(w * double(t));
    }
  }
  return s;
}

inline Waveform perturbation_waveform(const PerturbationSpec& spec) {
  Waveform w;
  w.samples = synth_perturbation(spec);
  w.sample_rate = spec.basis.sample_rate;
  w.period_samples = spec.basis.period_samples;
  return w;
}

struct AttackConfig {
  double beta = 1.0;               // peak amplitude bound at the source
  double gamma = 2.0;              // per-period power bound at the source
  double lambda_amplitude = 1.0;
  double lambda_power = 1.0;
  double lambda_sdf = 1.0;
  double sdf_margin = 0.1;         // meters the source must keep from walls
  double f_min = 50.0;
  double f_max = 2000.0;
  std::size_t max_iterations = 100;
  std::size_t patience = 5;
  double step_amplitudes = 0.01;
  double step_location = 0.005;
  bool optimize_location = false;
  std::optional<Vec2> target;      // targeted mode when set
  double noise_std = 0.0;          // sensor noise, absolute units
  std::uint64_t seed = 7;
};

struct ConstraintBreakdown {
  double amplitude_excess = 0.0;  // max(0, peak - beta)
  double power_excess = 0.0;      // max(0, sum of squares - gamma)
  double sdf_excess = 0.0;        // max(0, sdf + margin)
  double total = 0.0;             // lambda-weighted sum
};

inline ConstraintBreakdown constraint_loss(const PerturbationSpec& spec,
                                           const Room& room,
                                           const AttackConfig& cfg) {
  const std::vector<double> s = synth_perturbation(spec);
  ConstraintBreakdown out;
  out.amplitude_excess = std::max(0.0, peak(s) - cfg.beta);
  double energy = 0.0;
  for (double v : s) energy += v * v;
  out.power_excess = std::max(0.0, energy - cfg.gamma);
  out.sdf_excess = std::max(0.0, sdf(room, spec.source_location) + cfg.sdf_margin);
  out.total = cfg.lambda_amplitude * out.amplitude_excess +
              cfg.lambda_power * out.power_excess +
              cfg.lambda_sdf * out.sdf_excess;
  return out;
}

// Scales the amplitudes so the synthesized source waveform satisfies both
// bounds. Power first: a uniform rescale is the exact projection onto the
// energy ball. The peak rescale afterwards only shrinks the energy, so the
// result satisfies both bounds simultaneously.
inline void project_onto_bounds(PerturbationSpec& spec, double beta,
                                double gamma) {
  std::vector<double> s = synth_perturbation(spec);
  double energy = 0.0;
  for (double v : s) energy += v * v;
  if (energy > gamma) {
    const double scale = energy > 0.0 ? std::sqrt(gamma / energy) : 0.0;
    for (double& a : spec.amplitudes) a *= scale;
    for (double& v : s) v *= scale;
  }
  const double pk = peak(s);
  if (pk > beta) {
    const double scale = pk > 0.0 ? beta / pk : 0.0;
    for (double& a : spec.amplitudes) a *= scale;
  }
}

// Steady-state responses of the perturbation source at each microphone of
// a drone state (reference path, straight through the acoustics).
inline std::vector<Waveform> perturbation_response(const Room& room,
                                                   const DroneConfig& config,
                                                   const DroneState& state,
                                                   const PerturbationSpec& spec) {
  const Waveform src = perturbation_waveform(spec);
  const WorldPositions wp = world_positions(config, state);
  std::vector<Waveform> out(wp.mics.size());
  for (std::size_t m = 0; m < wp.mics.size(); ++m) {
    const std::size_t len = required_rir_length(room, spec.source_location,
                                                wp.mics[m], src.sample_rate);
    const Rir rir = compute_rir(room, spec.source_location, wp.mics[m],
                                src.sample_rate, len);
    out[m] = propagate(src, rir, PropagateMode::kSteadyState);
  }
  return out;
}

struct ObjectiveResult {
  double objective = 0.0;          // value being ascended
  double localization_loss = 0.0;  // mean squared normalized error
  ConstraintBreakdown constraints;
  std::vector<double> amplitude_gradient;  // of the objective
  Vec2 location_gradient;                  // of the objective
};

struct IterationStats {
  std::size_t iteration = 0;
  double objective = 0.0;
  double localization_loss = 0.0;
  double best_objective = 0.0;
  double amplitude_excess = 0.0;
  double power_excess = 0.0;
  double sdf_excess = 0.0;
  double seconds = 0.0;
};

struct AttackReport {
  std::vector<IterationStats> iterations;
  PerturbationSpec spec;  // best found
  double clean_rms = 0.0;
  double adversarial_rms = 0.0;          // scaled RMS against the truth
  std::optional<double> target_rms;      // scaled RMS against the target
  ConstraintBreakdown final_constraints;
  std::size_t workspace_bytes = 0;
};

namespace detail {

using fft::cd;

// Precomputes, per dataset sample and microphone, the complex response of
// the room at each basis harmonic, so perturbation responses and their
// gradients reduce to weighted sums over cached sine tables.
class AttackEngine {
 public:
  AttackEngine(const LocalizerModel& model, const Room& room,
               const DroneConfig& drone, const Dataset& data,
               const AttackConfig& cfg)
      : model_(model), room_(room), drone_(drone), data_(data), cfg_(cfg) {
    if (data.samples.empty()) throw EmptyDataset("attack needs samples");
    validate_dataset(data);
    validate_drone(drone);
    if (data.num_mics != drone.num_mics() ||
        data.samples_per_channel != drone.period_samples) {
      throw ShapeMismatch("dataset dimensions disagree with the drone");
    }
    if (model.num_mics != data.num_mics ||
        model.samples_per_channel != data.samples_per_channel) {
      throw ShapeMismatch("dataset dimensions disagree with the model");
    }
    basis_ = build_basis(double(drone.period_samples) / drone.sample_rate(),
                         cfg.f_min, cfg.f_max, drone.sample_rate());
    if (cfg.target && sdf(room, *cfg.target) >= 0.0) {
      throw TargetOutsideRoom("target location must lie inside the room");
    }

    const std::size_t p = basis_.period_samples;
    const std::size_t nk = basis_.size();
    sin_table_.resize(nk * p);
    cos_table_.resize(nk * p);
    for (std::size_t k = 0; k < nk; ++k) {
      const double w =
          2.0 * std::numbers::pi * double(basis_.harmonics[k]) / double(p);
      for (std::size_t t = 0; t < p; ++t) {
        sin_table_[k * p + t] = std::sin(w * double(t));
        cos_table_[k * p + t] = std::cos(w * double(t));
      }
    }

    references_.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      references_[i] = cfg.target
                           ? normalize_location(*cfg.target, data.bounds)
                           : normalize_location(data.samples[i].location,
                                                data.bounds);
    }
    mic_positions_.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const DroneState state{data.samples[i].location,
                             data.samples[i].heading};
      mic_positions_[i] = world_positions(drone, state).mics;
    }
    response_bins_.assign(data.size() * drone.num_mics() * nk, cd{0.0, 0.0});
    workspace_bytes_ = (sin_table_.size() + cos_table_.size()) * sizeof(double) +
                       response_bins_.size() * sizeof(cd);
  }

  const FrequencyBasis& basis() const { return basis_; }
  std::size_t workspace_bytes() const { return workspace_bytes_; }

  // Room responses (and optionally their position derivatives) at the
  // basis harmonics for a perturbation source at `location`.
  void prepare(Vec2 location, bool with_jacobian) {
    if (prepared_ && location.x == prepared_location_.x &&
        location.y == prepared_location_.y &&
        (!with_jacobian || has_jacobian_)) {
      return;
    }
    if (sdf(room_, location) >= 0.0) {
      throw SourceOutsideRoom("perturbation source outside the room");
    }
    const std::size_t nk = basis_.size();
    const std::size_t mics = drone_.num_mics();
    const std::size_t p = basis_.period_samples;
    if (with_jacobian) {
      jac_x_bins_.assign(data_.size() * mics * nk, cd{0.0, 0.0});
      jac_y_bins_.assign(data_.size() * mics * nk, cd{0.0, 0.0});
    }
    const double fs = drone_.sample_rate();
    parallel_for(data_.size(), [&](std::size_t i) {
      for (std::size_t m = 0; m < mics; ++m) {
        const Vec2 mic = mic_positions_[i][m];
        const std::size_t len = required_rir_length(room_, location, mic, fs);
        const Rir rir = compute_rir(room_, location, mic, fs, len);
        const auto bins = fold_bins(rir.taps, p);
        cd* dst = response_bins_.data() + (i * mics + m) * nk;
        for (std::size_t k = 0; k < nk; ++k) dst[k] = bins[basis_.harmonics[k]];
        if (with_jacobian) {
          cd* jx = jac_x_bins_.data() + (i * mics + m) * nk;
          cd* jy = jac_y_bins_.data() + (i * mics + m) * nk;
          bool degenerate = false;
          try {
            const RirJacobian jac =
                rir_position_jacobian(room_, location, mic, fs, len);
            const auto bx = fold_bins(jac.dx, p);
            const auto by = fold_bins(jac.dy, p);
            for (std::size_t k = 0; k < nk; ++k) {
              jx[k] = bx[basis_.harmonics[k]];
              jy[k] = by[basis_.harmonics[k]];
            }
          } catch (const DegeneratePosition&) {
            degenerate = true;
          }
          if (degenerate) {
            // Source sitting on a microphone: the response is attenuation
            // floored there and the direction is undefined, so this pair
            // contributes no location gradient.
            for (std::size_t k = 0; k < nk; ++k) jx[k] = jy[k] = cd{0.0, 0.0};
          }
        }
      }
    });
    prepared_ = true;
    prepared_location_ = location;
    has_jacobian_ = with_jacobian;
    workspace_bytes_ =
        (sin_table_.size() + cos_table_.size()) * sizeof(double) +
        (response_bins_.size() + jac_x_bins_.size() + jac_y_bins_.size()) *
            sizeof(cd);
  }

  // Perturbation response at one microphone of one sample, from the bins.
  std::vector<double> response_from_bins(std::size_t sample, std::size_t mic,
                                         const PerturbationSpec& spec) const {
    const std::size_t nk = basis_.size();
    const std::size_t p = basis_.period_samples;
    std::vector<double> sigma(p, 0.0);
    const cd* bins = response_bins_.data() + (sample * drone_.num_mics() + mic) * nk;
    for (std::size_t k = 0; k < nk; ++k) {
      const double a = spec.amplitudes[k] * bins[k].real();
      const double b = spec.amplitudes[k] * bins[k].imag();
      if (a == 0.0 && b == 0.0) continue;
      const double* sk = sin_table_.data() + k * p;
      const double* ck = cos_table_.data() + k * p;
      for (std::size_t t = 0; t < p; ++t) sigma[t] += a * sk[t] + b * ck[t];
    }
    return sigma;
  }

  // Objective, localization loss, constraints and gradients for one spec.
  // The objective is ascended: localization loss enters positively in the
  // untargeted mode and negatively in the targeted mode, penalties always
  // negatively. `noise` may be null; otherwise it holds one fresh draw of
  // sensor noise per input entry.
  ObjectiveResult evaluate(const PerturbationSpec& spec,
                           const std::vector<double>* noise,
                           bool want_gradient) {
    if (spec.amplitudes.size() != basis_.size()) {
      throw ShapeMismatch("amplitudes must pair with basis frequencies");
    }
    prepare(spec.source_location, has_jacobian_);
    const std::size_t nk = basis_.size();
    const std::size_t p = basis_.period_samples;
    const std::size_t mics = drone_.num_mics();
    const std::size_t n = data_.size();
    const double sign = cfg_.target ? -1.0 : 1.0;

    const std::vector<double> source_wave = synth_perturbation(spec);

    std::vector<double> loss_slots(n, 0.0);
    std::vector<double> ga_slots;
    std::vector<Vec2> gl_slots;
    if (want_gradient) {
      ga_slots.assign(n * nk, 0.0);
      gl_slots.assign(n, Vec2{});
    }

    parallel_for(n, [&](std::size_t i) {
      std::vector<double> input = data_.samples[i].waveforms;
      for (std::size_t m = 0; m < mics; ++m) {
        const std::vector<double> sigma = response_from_bins(i, m, spec);
        double* dst = input.data() + m * p;
        for (std::size_t t = 0; t < p; ++t) dst[t] += sigma[t];
      }
      if (noise != nullptr) {
        const double* nz = noise->data() + i * input.size();
        for (std::size_t t = 0; t < input.size(); ++t) input[t] += nz[t];
      }
      ForwardTrace trace;
      const Vec2 y = forward(model_, input, &trace);
      const Vec2 e = y - references_[i];
      loss_slots[i] = norm2(e);
      if (!want_gradient) return;
      const std::vector<double> g = input_gradient(model_, trace, e * 2.0);
      double* ga = ga_slots.data() + i * nk;
      Vec2 gl{};
      for (std::size_t m = 0; m < mics; ++m) {
        const double* gm = g.data() + m * p;
        const cd* bins = response_bins_.data() + (i * mics + m) * nk;
        const cd* jx = has_jacobian_ ? jac_x_bins_.data() + (i * mics + m) * nk
                                     : nullptr;
        const cd* jy = has_jacobian_ ? jac_y_bins_.data() + (i * mics + m) * nk
                                     : nullptr;
        for (std::size_t k = 0; k < nk; ++k) {
          const double* sk = sin_table_.data() + k * p;
          const double* ck = cos_table_.data() + k * p;
          double ps = 0.0, pc = 0.0;
          for (std::size_t t = 0; t < p; ++t) {
            ps += gm[t] * sk[t];
            pc += gm[t] * ck[t];
          }
          ga[k] += bins[k].real() * ps + bins[k].imag() * pc;
          if (jx != nullptr) {
            gl.x += spec.amplitudes[k] * (jx[k].real() * ps + jx[k].imag() * pc);
            gl.y += spec.amplitudes[k] * (jy[k].real() * ps + jy[k].imag() * pc);
          }
        }
      }
      if (want_gradient) gl_slots[i] = gl;
    });

    ObjectiveResult out;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) loss += loss_slots[i];
    loss /= double(n);
    out.localization_loss = loss;

    out.constraints.amplitude_excess =
        std::max(0.0, peak(source_wave) - cfg_.beta);
    double energy = 0.0;
    for (double v : source_wave) energy += v * v;
    out.constraints.power_excess = std::max(0.0, energy - cfg_.gamma);
    out.constraints.sdf_excess = std::max(
        0.0, sdf(room_, spec.source_location) + cfg_.sdf_margin);
    out.constraints.total =
        cfg_.lambda_amplitude * out.constraints.amplitude_excess +
        cfg_.lambda_power * out.constraints.power_excess +
        cfg_.lambda_sdf * out.constraints.sdf_excess;
    out.objective = sign * loss - out.constraints.total;

    if (want_gradient) {
      out.amplitude_gradient.assign(nk, 0.0);
      Vec2 gl{};
      for (std::size_t i = 0; i < n; ++i) {
        const double* ga = ga_slots.data() + i * nk;
        for (std::size_t k = 0; k < nk; ++k) {
          out.amplitude_gradient[k] += ga[k];
        }
        gl += gl_slots[i];
      }
      const double inv_n = 1.0 / double(n);
      for (std::size_t k = 0; k < nk; ++k) {
        out.amplitude_gradient[k] *= sign * inv_n;
      }
      gl = gl * (sign * inv_n);

      if (out.constraints.amplitude_excess > 0.0) {
        std::size_t t_star = 0;
        double best = -1.0;
        for (std::size_t t = 0; t < p; ++t) {
          if (std::abs(source_wave[t]) > best) {
            best = std::abs(source_wave[t]);
            t_star = t;
          }
        }
        const double s = source_wave[t_star] >= 0.0 ? 1.0 : -1.0;
        for (std::size_t k = 0; k < nk; ++k) {
          out.amplitude_gradient[k] -=
              cfg_.lambda_amplitude * s * sin_table_[k * p + t_star];
        }
      }
      if (out.constraints.power_excess > 0.0) {
        for (std::size_t k = 0; k < nk; ++k) {
          const double* sk = sin_table_.data() + k * p;
          double d = 0.0;
          for (std::size_t t = 0; t < p; ++t) d += source_wave[t] * sk[t];
          out.amplitude_gradient[k] -= cfg_.lambda_power * 2.0 * d;
        }
      }
      if (out.constraints.sdf_excess > 0.0) {
        const Vec2 gs = sdf_gradient(room_, spec.source_location);
        gl -= gs * cfg_.lambda_sdf;
      }
      out.location_gradient = gl;
    }
    return out;
  }

  // Predictions on the dataset under a spec (no noise), plus clean ones.
  std::vector<Vec2> predict(const PerturbationSpec* spec) {
    if (spec != nullptr) prepare(spec->source_location, has_jacobian_);
    const std::size_t mics = drone_.num_mics();
    const std::size_t p = basis_.period_samples;
    std::vector<Vec2> preds(data_.size());
    parallel_for(data_.size(), [&](std::size_t i) {
      std::vector<double> input = data_.samples[i].waveforms;
      if (spec != nullptr) {
        for (std::size_t m = 0; m < mics; ++m) {
          const std::vector<double> sigma = response_from_bins(i, m, *spec);
          double* dst = input.data() + m * p;
          for (std::size_t t = 0; t < p; ++t) dst[t] += sigma[t];
        }
      }
      preds[i] = denormalize_location(forward(model_, input), data_.bounds);
    });
    return preds;
  }

 private:
  static std::vector<cd> fold_bins(const std::vector<double>& taps,
                                   std::size_t period) {
    std::vector<double> folded(period, 0.0);
    for (std::size_t i = 0; i < taps.size(); ++i) {
      folded[i % period] += taps[i];
    }
    return fft::dft_real(folded);
  }

  const LocalizerModel& model_;
  const Room& room_;
  const DroneConfig& drone_;
  const Dataset& data_;
  AttackConfig cfg_;
  FrequencyBasis basis_;
  std::vector<double> sin_table_, cos_table_;
  std::vector<Vec2> references_;
  std::vector<std::vector<Vec2>> mic_positions_;
  std::vector<cd> response_bins_, jac_x_bins_, jac_y_bins_;
  bool prepared_ = false;
  bool has_jacobian_ = false;
  Vec2 prepared_location_;
  std::size_t workspace_bytes_ = 0;
};

}  // namespace detail

// One-shot objective evaluation, mainly for inspection and testing.
inline ObjectiveResult adversarial_objective(const LocalizerModel& model,
                                             const Room& room,
                                             const DroneConfig& drone,
                                             const Dataset& data,
                                             const PerturbationSpec& spec,
                                             const AttackConfig& cfg) {
  detail::AttackEngine engine(model, room, drone, data, cfg);
  engine.prepare(spec.source_location, true);
  std::vector<double> noise;
  const std::vector<double>* noise_ptr = nullptr;
  if (cfg.noise_std > 0.0) {
    Rng rng(cfg.seed);
    noise.resize(data.size() * data.input_size());
    for (double& v : noise) v = cfg.noise_std * rng.normal();
    noise_ptr = &noise;
  }
  return engine.evaluate(spec, noise_ptr, true);
}

// Projected-gradient-style ascent with plain fixed steps, early stopping on
// the adversarial localization loss, and best-so-far reporting.
inline AttackReport pgd_attack(const LocalizerModel& model, const Room& room,
                               const DroneConfig& drone, const Dataset& data,
                               const AttackConfig& cfg) {
  detail::AttackEngine engine(model, room, drone, data, cfg);

  PerturbationSpec spec;
  spec.basis = engine.basis();
  spec.amplitudes.assign(spec.basis.size(), 0.0);
  spec.source_location = polygon_centroid(room.vertices);
  engine.prepare(spec.source_location, cfg.optimize_location);

  Rng rng(cfg.seed);
  std::vector<double> noise;
  const bool noisy = cfg.noise_std > 0.0;
  if (noisy) noise.resize(data.size() * data.input_size());

  const double sign = cfg.target ? -1.0 : 1.0;
  AttackReport report;
  PerturbationSpec best_spec = spec;
  double best_metric = -std::numeric_limits<double>::infinity();
  double best_objective = -std::numeric_limits<double>::infinity();
  std::size_t stall = 0;
  for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
    const auto tic = std::chrono::steady_clock::now();
    if (noisy) {
      for (double& v : noise) v = cfg.noise_std * rng.normal();
    }
    const ObjectiveResult res =
        engine.evaluate(spec, noisy ? &noise : nullptr, true);
    const double metric = sign * res.localization_loss;
    if (metric > best_metric) {
      best_metric = metric;
      best_spec = spec;
      stall = 0;
    } else {
      ++stall;
    }
    best_objective = std::max(best_objective, res.objective);
    const bool done =
        stall >= cfg.patience || iter + 1 == cfg.max_iterations;
    if (!done) {
      for (std::size_t k = 0; k < spec.amplitudes.size(); ++k) {
        spec.amplitudes[k] += cfg.step_amplitudes * res.amplitude_gradient[k];
      }
      project_onto_bounds(spec, cfg.beta, cfg.gamma);
      if (cfg.optimize_location) {
        const Vec2 cand =
            spec.source_location + res.location_gradient * cfg.step_location;
        if (sdf(room, cand) < -1e-3) {
          spec.source_location = cand;
          engine.prepare(cand, true);
        }
      }
    }
    const auto toc = std::chrono::steady_clock::now();
    IterationStats stats;
    stats.iteration = iter;
    stats.objective = res.objective;
    stats.localization_loss = res.localization_loss;
    stats.best_objective = best_objective;
    stats.amplitude_excess = res.constraints.amplitude_excess;
    stats.power_excess = res.constraints.power_excess;
    stats.sdf_excess = res.constraints.sdf_excess;
    stats.seconds = std::chrono::duration<double>(toc - tic).count();
    report.iterations.push_back(stats);
    if (done) break;
  }

  report.spec = best_spec;
  report.workspace_bytes = engine.workspace_bytes();
  report.final_constraints = constraint_loss(best_spec, room, cfg);

  std::vector<Vec2> truths(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    truths[i] = data.samples[i].location;
  }
  const std::vector<Vec2> clean_preds = engine.predict(nullptr);
  const std::vector<Vec2> adv_preds = engine.predict(&best_spec);
  report.clean_rms = scaled_rms(clean_preds, truths, data.bounds);
  report.adversarial_rms = scaled_rms(adv_preds, truths, data.bounds);
  if (cfg.target) {
    const std::vector<Vec2> targets(data.size(), *cfg.target);
    report.target_rms = scaled_rms(adv_preds, targets, data.bounds);
  }
  return report;
}

inline AttackReport targeted_attack(const LocalizerModel& model,
                                    const Room& room, const DroneConfig& drone,
                                    const Dataset& data, AttackConfig cfg,
                                    Vec2 target) {
  cfg.target = target;
  return pgd_attack(model, room, drone, data, cfg);
}

}  // namespace rotorloc
