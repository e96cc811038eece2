#pragma once

// Sampled signals, optionally tagged with a period for steady-state work.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "rotorloc/errors.hpp"

namespace rotorloc {

struct Waveform {
  std::vector<double> samples;
  double sample_rate = 16000.0;
  std::optional<std::size_t> period_samples;

  std::size_t size() const { return samples.size(); }
};

inline void validate_waveform(const Waveform& w) {
  if (!(w.sample_rate > 0.0)) {
    throw RuntimeError("sample rate must be positive");
  }
  for (double s : w.samples) {
    if (!std::isfinite(s)) throw RuntimeError("waveform has non-finite samples");
  }
  if (w.period_samples) {
    if (*w.period_samples == 0) throw PeriodMismatch("period must be positive");
    if (w.samples.size() % *w.period_samples != 0) {
      throw PeriodMismatch("length must be a whole number of periods");
    }
  }
}

// Circular delay by `shift` samples: out[t] = w[(t - shift) mod n].
inline Waveform circular_shift(const Waveform& w, std::size_t shift) {
  Waveform out = w;
  const std::size_t n = w.samples.size();
  if (n == 0) return out;
  const std::size_t s = shift % n;
  for (std::size_t t = 0; t < n; ++t) {
    out.samples[t] = w.samples[(t + n - s) % n];
  }
  return out;
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double s : v) acc += s;
  return acc / double(v.size());
}

inline double rms(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double s : v) acc += s * s;
  return std::sqrt(acc / double(v.size()));
}

inline double peak(const std::vector<double>& v) {
  double m = 0.0;
  for (double s : v) m = std::max(m, std::abs(s));
  return m;
}

}  // namespace rotorloc
