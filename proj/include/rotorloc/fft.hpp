#pragma once

// FFT with cached plans: iterative radix-2 for powers of two, Bluestein's
// chirp-z for everything else. Unscaled forward transform, 1/n inverse.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "rotorloc/errors.hpp"

namespace rotorloc::fft {

using cd = std::complex<double>;

namespace detail {

struct Pow2Plan {
  std::size_t n = 0;
  std::vector<std::size_t> bitrev;
  std::vector<cd> roots;  // exp(-2*pi*i*k/n) for k < n/2
};

inline std::shared_ptr<const Pow2Plan> pow2_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const Pow2Plan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  auto plan = std::make_shared<Pow2Plan>();
  plan->n = n;
  plan->bitrev.resize(n);
  std::size_t log2n = 0;
  while ((std::size_t{1} << log2n) < n) ++log2n;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < log2n; ++b) {
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
    }
    plan->bitrev[i] = r;
  }
  plan->roots.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * double(k) / double(n);
    plan->roots[k] = {std::cos(angle), std::sin(angle)};
  }
  cache[n] = plan;
  return plan;
}

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline void transform_pow2(std::vector<cd>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  const auto plan = pow2_plan(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = plan->bitrev[i];
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        cd w = plan->roots[k * step];
        if (inverse) w = std::conj(w);
        const cd u = a[start + k];
        const cd v = a[start + k + half] * w;
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / double(n);
    for (cd& x : a) x *= inv;
  }
}

struct BluesteinPlan {
  std::size_t n = 0;
  std::size_t m = 0;           // pow2 convolution length
  std::vector<cd> chirp;       // exp(-i*pi*k^2/n) for k < n
  std::vector<cd> kernel_fft;  // forward pow2 transform of the chirp kernel
};

inline std::shared_ptr<const BluesteinPlan> bluestein_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const BluesteinPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  auto plan = std::make_shared<BluesteinPlan>();
  plan->n = n;
  plan->m = next_pow2(2 * n - 1);
  plan->chirp.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small and exact.
    const std::uint64_t q = (std::uint64_t(k) * k) % (2 * std::uint64_t(n));
    const double angle = -std::numbers::pi * double(q) / double(n);
    plan->chirp[k] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<cd> kernel(plan->m, cd{0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) {
    const cd v = std::conj(plan->chirp[k]);
    kernel[k] = v;
    if (k > 0) kernel[plan->m - k] = v;
  }
  transform_pow2(kernel, false);
  plan->kernel_fft = std::move(kernel);
  cache[n] = plan;
  return plan;
}

inline void transform_bluestein(std::vector<cd>& a, bool inverse) {
  const std::size_t n = a.size();
  if (inverse) {
    for (cd& x : a) x = std::conj(x);
    transform_bluestein(a, false);
    const double inv = 1.0 / double(n);
    for (cd& x : a) x = std::conj(x) * inv;
    return;
  }
  const auto plan = bluestein_plan(n);
  std::vector<cd> buf(plan->m, cd{0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) buf[k] = a[k] * plan->chirp[k];
  transform_pow2(buf, false);
  for (std::size_t k = 0; k < plan->m; ++k) buf[k] *= plan->kernel_fft[k];
  transform_pow2(buf, true);
  for (std::size_t k = 0; k < n; ++k) a[k] = buf[k] * plan->chirp[k];
}

}  // namespace detail

// Discrete Fourier transform of arbitrary length.
inline std::vector<cd> dft(std::vector<cd> a, bool inverse = false) {
  if (a.empty()) return a;
  if (detail::is_pow2(a.size())) {
    detail::transform_pow2(a, inverse);
  } else {
    detail::transform_bluestein(a, inverse);
  }
  return a;
}

inline std::vector<cd> dft_real(const std::vector<double>& x,
                                bool inverse = false) {
  std::vector<cd> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = cd{x[i], 0.0};
  return dft(std::move(a), inverse);
}

// Full linear convolution, length |a| + |b| - 1.
inline std::vector<double> linear_convolve(const std::vector<double>& a,
                                           const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t m = detail::next_pow2(out_len);
  std::vector<cd> fa(m, cd{0.0, 0.0}), fb(m, cd{0.0, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i) fa[i] = cd{a[i], 0.0};
  for (std::size_t i = 0; i < b.size(); ++i) fb[i] = cd{b[i], 0.0};
  detail::transform_pow2(fa, false);
  detail::transform_pow2(fb, false);
  for (std::size_t i = 0; i < m; ++i) fa[i] *= fb[i];
  detail::transform_pow2(fa, true);
  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
  return out;
}

// Circular convolution of two equal-length real signals.
inline std::vector<double> circular_convolve(const std::vector<double>& a,
                                             const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw LengthMismatch("circular convolution needs equal lengths");
  }
  if (a.empty()) return {};
  std::vector<cd> fa = dft_real(a);
  std::vector<cd> fb = dft_real(b);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  fa = dft(std::move(fa), true);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fa[i].real();
  return out;
}

}  // namespace rotorloc::fft
