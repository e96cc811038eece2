#pragma once

// Perturbation delineation. The drone shifts all rotor phases by j samples
// and the scene is probed at time j; because the steady-state rotor sound
// commutes with circular delays while a static perturbation does not, the
// probed values trace out the perturbation up to the constant at delay
// zero, which is taken as zero.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "rotorloc/attack.hpp"
#include "rotorloc/drone.hpp"
#include "rotorloc/errors.hpp"
#include "rotorloc/localizer.hpp"
#include "rotorloc/rng.hpp"
#include "rotorloc/waveform.hpp"

namespace rotorloc {

struct DelineationOptions {
  double noise_std = 0.0;   // sensor noise per probe, absolute units
  std::size_t repeats = 1;  // probes averaged per delay when noisy
  std::uint64_t seed = 11;
};

struct DelineationResult {
  // Recovered perturbation per microphone over one drone period, pinned to
  // zero at delay zero.
  std::vector<std::vector<double>> recovered;
  std::size_t num_probes = 0;
  // Largest deviation, per microphone, from the true perturbation with its
  // delay-zero value subtracted. Only available in simulation.
  std::vector<double> residual_max;
};

namespace detail {

using fft::cd;

// Evaluates probes s_mu(t = j; all rotors delayed by j) without rebuilding
// the scene per delay. Per microphone the rotor sound spectra are combined
// with the room responses once; a probe then applies the delay ramp and
// reads the response back at one instant.
class DelineationProbe {
 public:
  DelineationProbe(const Room& room, const DroneConfig& drone,
                   const DroneState& state) {
    validate_drone(drone);
    period_ = drone.period_samples;
    const WorldPositions wp = world_positions(drone, state);
    const double fs = drone.sample_rate();
    const std::vector<cd> source_spectrum =
        fft::dft_real(drone.rotor_waveform.samples);
    product_spectra_.assign(drone.num_mics(),
                            std::vector<cd>(period_, cd{0.0, 0.0}));
    for (std::size_t m = 0; m < drone.num_mics(); ++m) {
      for (std::size_t r = 0; r < drone.num_rotors(); ++r) {
        const std::size_t len =
            required_rir_length(room, wp.rotors[r], wp.mics[m], fs);
        const Rir rir = compute_rir(room, wp.rotors[r], wp.mics[m], fs, len);
        std::vector<double> folded(period_, 0.0);
        for (std::size_t i = 0; i < rir.taps.size(); ++i) {
          folded[i % period_] += rir.taps[i];
        }
        const std::vector<cd> response = fft::dft_real(folded);
        for (std::size_t k = 0; k < period_; ++k) {
          product_spectra_[m][k] += source_spectrum[k] * response[k];
        }
      }
    }
    roots_.resize(period_);
    for (std::size_t k = 0; k < period_; ++k) {
      const double angle = 2.0 * std::numbers::pi * double(k) / double(period_);
      roots_[k] = {std::cos(angle), std::sin(angle)};
    }
  }

  std::size_t period() const { return period_; }
  std::size_t num_mics() const { return product_spectra_.size(); }

  // Drone contribution to the probe at delay j, per microphone: the delay
  // ramp and the read-out at t = j are both applied bin by bin.
  std::vector<double> probe(std::size_t j) const {
    std::vector<double> out(num_mics(), 0.0);
    for (std::size_t m = 0; m < num_mics(); ++m) {
      cd acc{0.0, 0.0};
      const std::vector<cd>& q = product_spectra_[m];
      for (std::size_t k = 0; k < period_; ++k) {
        const cd ramp = std::conj(roots_[(j * k) % period_]);  // delay by j
        const cd readout = roots_[(j * k) % period_];          // evaluate at j
        acc += q[k] * ramp * readout;
      }
      out[m] = acc.real() / double(period_);
    }
    return out;
  }

 private:
  std::size_t period_ = 0;
  std::vector<std::vector<cd>> product_spectra_;
  std::vector<cd> roots_;
};

}  // namespace detail

// Sweeps the all-rotor modulation delay over a full period and recovers
// the perturbation at every microphone.
inline DelineationResult delineate(const Room& room, const DroneConfig& drone,
                                   const DroneState& state,
                                   const PerturbationSpec& spec,
                                   const DelineationOptions& options = {}) {
  if (spec.amplitudes.size() != spec.basis.size()) {
    throw ShapeMismatch("amplitudes must pair with basis frequencies");
  }
  if (spec.basis.period_samples == 0 ||
      drone.period_samples % spec.basis.period_samples != 0) {
    throw PeriodMismatch(
        "perturbation period must divide the drone period");
  }
  const std::size_t period = drone.period_samples;
  const std::size_t mics = drone.num_mics();
  const std::size_t rep = options.repeats == 0 ? 1 : options.repeats;

  detail::DelineationProbe probe_engine(room, drone, state);
  const std::vector<Waveform> sigma =
      perturbation_response(room, drone, state, spec);

  Rng rng(options.seed);
  DelineationResult result;
  result.recovered.assign(mics, std::vector<double>(period, 0.0));
  std::vector<double> baseline(mics, 0.0);
  std::vector<double> value(mics, 0.0);
  for (std::size_t j = 0; j < period; ++j) {
    std::fill(value.begin(), value.end(), 0.0);
    for (std::size_t r = 0; r < rep; ++r) {
      const std::vector<double> drone_part = probe_engine.probe(j);
      ++result.num_probes;
      for (std::size_t m = 0; m < mics; ++m) {
        double v = drone_part[m] +
                   sigma[m].samples[j % sigma[m].samples.size()];
        if (options.noise_std > 0.0) v += options.noise_std * rng.normal();
        value[m] += v;
      }
    }
    for (std::size_t m = 0; m < mics; ++m) {
      value[m] /= double(rep);
      if (j == 0) {
        baseline[m] = value[m];
      } else {
        result.recovered[m][j] = value[m] - baseline[m];
      }
    }
  }

  result.residual_max.assign(mics, 0.0);
  for (std::size_t m = 0; m < mics; ++m) {
    const std::vector<double>& s = sigma[m].samples;
    for (std::size_t j = 0; j < period; ++j) {
      const double truth = s[j % s.size()] - s[0];
      result.residual_max[m] = std::max(
          result.residual_max[m], std::abs(result.recovered[m][j] - truth));
    }
  }
  return result;
}

// Subtracts a recovered perturbation from observed waveforms and localizes.
inline Vec2 recover_and_localize(const LocalizerModel& model,
                                 const std::vector<double>& observed,
                                 const DelineationResult& delineation,
                                 const Bounds& bounds) {
  if (observed.size() != model.input_size()) {
    throw ShapeMismatch("observed waveforms disagree with the model");
  }
  if (delineation.recovered.size() != model.num_mics) {
    throw ShapeMismatch("recovered channels disagree with the model");
  }
  std::vector<double> cleaned = observed;
  const std::size_t p = model.samples_per_channel;
  for (std::size_t m = 0; m < model.num_mics; ++m) {
    if (delineation.recovered[m].size() != p) {
      throw ShapeMismatch("recovered period disagrees with the model");
    }
    for (std::size_t t = 0; t < p; ++t) {
      cleaned[m * p + t] -= delineation.recovered[m][t];
    }
  }
  return denormalize_location(forward(model, cleaned), bounds);
}

// Largest magnitude entry of the model's input gradient over both outputs;
// bounds the output shift caused by bounded input perturbations.
inline double delta_sensitivity(const LocalizerModel& model,
                                const std::vector<double>& input) {
  ForwardTrace trace;
  forward(model, input, &trace);
  const std::vector<double> gx = input_gradient(model, trace, {1.0, 0.0});
  const std::vector<double> gy = input_gradient(model, trace, {0.0, 1.0});
  return std::max(peak(gx), peak(gy));
}

}  // namespace rotorloc
