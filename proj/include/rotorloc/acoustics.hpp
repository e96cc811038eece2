#pragma once

// Image source model for simple 2D polygons, band-limited impulse response
// synthesis, propagation, and analytic derivatives of the response with
// respect to the source position.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <tuple>
#include <vector>

#include "rotorloc/errors.hpp"
#include "rotorloc/fft.hpp"
#include "rotorloc/geometry.hpp"
#include "rotorloc/waveform.hpp"

namespace rotorloc {

// Half-width of the windowed-sinc interpolation kernel, in samples.
inline constexpr int kKernelHalfWidth = 32;
// Distances below this floor no longer increase the amplitude.
inline constexpr double kDistanceFloor = 0.05;

struct ImageSource {
  Vec2 position;
  double gain = 1.0;  // product of wall reflection coefficients
  int order = 0;
  // Row-major derivative of the image position with respect to the source
  // position: identity for the direct path, a product of reflection
  // matrices otherwise.
  std::array<double, 4> mirror{1.0, 0.0, 0.0, 1.0};
};

namespace detail {

struct WallLine {
  Vec2 point;
  Vec2 inward;  // unit normal pointing into the room
  double reflection;
};

inline std::vector<WallLine> wall_lines(const Room& room) {
  std::vector<WallLine> walls(room.num_walls());
  for (std::size_t i = 0; i < room.num_walls(); ++i) {
    const Vec2 e = room.wall_end(i) - room.wall_start(i);
    const Vec2 inward{-e.y, e.x};
    walls[i].point = room.wall_start(i);
    walls[i].inward = inward / norm(inward);
    walls[i].reflection = room.wall_reflection[i];
  }
  return walls;
}

inline std::array<double, 4> mat_mul(const std::array<double, 4>& a,
                                     const std::array<double, 4>& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

inline Vec2 mat_t_vec(const std::array<double, 4>& a, Vec2 v) {
  return {a[0] * v.x + a[2] * v.y, a[1] * v.x + a[3] * v.y};
}

}  // namespace detail

// Enumerates distinct image sources up to the given reflection order. An
// image is only reflected across a wall when it lies strictly on the
// interior side of that wall's line, and the previous wall is never
// repeated. Coinciding images (same order, position, gain) are merged; for
// rectangles this reproduces the classic mirror lattice.
inline std::vector<ImageSource> image_sources(const Room& room, Vec2 source,
                                              int max_order) {
  validate_room(room);
  if (sdf(room, source) >= 0.0) {
    throw SourceOutsideRoom("source must lie strictly inside the room");
  }
  const auto walls = detail::wall_lines(room);
  const Bounds b = room_bounds(room);
  const double eps = 1e-12 * std::max(b.width(), b.height());

  struct Node {
    Vec2 pos;
    double gain;
    int order;
    int last_wall;
    std::array<double, 4> mirror;
  };

  std::vector<ImageSource> out;
  std::map<std::tuple<int, std::int64_t, std::int64_t, std::int64_t>, bool>
      seen;
  auto emit = [&](const Node& node) {
    const auto key = std::make_tuple(
        node.order, std::llround(node.pos.x * 1e9),
        std::llround(node.pos.y * 1e9), std::llround(node.gain * 1e12));
    if (seen.emplace(key, true).second) {
      out.push_back({node.pos, node.gain, node.order, node.mirror});
    }
  };

  std::vector<Node> stack;
  stack.push_back({source, 1.0, 0, -1, {1.0, 0.0, 0.0, 1.0}});
  while (!stack.empty()) {
    const Node node = stack.back();
    stack.pop_back();
    emit(node);
    if (node.order == max_order) continue;
    for (std::size_t w = 0; w < walls.size(); ++w) {
      if (int(w) == node.last_wall) continue;
      const double s = dot(walls[w].inward, node.pos - walls[w].point);
      if (s <= eps) continue;
      Node child;
      child.pos = node.pos - walls[w].inward * (2.0 * s);
      child.gain = node.gain * walls[w].reflection;
      child.order = node.order + 1;
      child.last_wall = int(w);
      const Vec2 n = walls[w].inward;
      const std::array<double, 4> refl{1.0 - 2.0 * n.x * n.x,
                                       -2.0 * n.x * n.y, -2.0 * n.x * n.y,
                                       1.0 - 2.0 * n.y * n.y};
      child.mirror = detail::mat_mul(refl, node.mirror);
      stack.push_back(child);
    }
  }

  std::sort(out.begin(), out.end(), [](const ImageSource& a,
                                       const ImageSource& b) {
    if (a.order != b.order) return a.order < b.order;
    if (a.position.x != b.position.x) return a.position.x < b.position.x;
    if (a.position.y != b.position.y) return a.position.y < b.position.y;
    return a.gain < b.gain;
  });
  return out;
}

struct Rir {
  std::vector<double> taps;
  double sample_rate = 16000.0;
  Vec2 source;
  Vec2 mic;
};

namespace detail {

inline double sinc(double t) {
  const double u = std::numbers::pi * t;
  if (std::abs(u) < 1e-4) return 1.0 - u * u / 6.0;
  return std::sin(u) / u;
}

inline double sinc_derivative(double t) {
  const double u = std::numbers::pi * t;
  if (std::abs(u) < 1e-4) {
    return std::numbers::pi * (-u / 3.0 + u * u * u / 30.0);
  }
  return std::numbers::pi * (std::cos(u) - sinc(t)) / u;
}

inline double hann_window(double t) {
  return 0.5 * (1.0 + std::cos(std::numbers::pi * t / kKernelHalfWidth));
}

inline double delay_kernel(double t) {
  if (std::abs(t) >= kKernelHalfWidth) return 0.0;
  return sinc(t) * hann_window(t);
}

inline double delay_kernel_derivative(double t) {
  if (std::abs(t) >= kKernelHalfWidth) return 0.0;
  const double w = hann_window(t);
  const double dw = -0.5 * std::numbers::pi / kKernelHalfWidth *
                    std::sin(std::numbers::pi * t / kKernelHalfWidth);
  return sinc_derivative(t) * w + sinc(t) * dw;
}

inline double attenuation(double distance) {
  return 1.0 / std::max(distance, kDistanceFloor);
}

}  // namespace detail

// Shortest tap count that keeps every image's kernel inside the response.
inline std::size_t required_rir_length(const Room& room, Vec2 source, Vec2 mic,
                                       double sample_rate) {
  const auto images = image_sources(room, source, room.max_reflection_order);
  double max_delay = 0.0;
  for (const ImageSource& img : images) {
    if (img.gain == 0.0) continue;
    const double d = norm(img.position - mic);
    max_delay = std::max(max_delay, d * sample_rate / room.speed_of_sound);
  }
  return std::size_t(std::ceil(max_delay)) + kKernelHalfWidth + 2;
}

inline Rir compute_rir(const Room& room, Vec2 source, Vec2 mic,
                       double sample_rate, std::size_t length) {
  if (!(sample_rate > 0.0)) throw RuntimeError("sample rate must be positive");
  if (sdf(room, mic) >= 0.0) {
    throw SourceOutsideRoom("microphone must lie strictly inside the room");
  }
  const auto images = image_sources(room, source, room.max_reflection_order);

  Rir rir;
  rir.taps.assign(length, 0.0);
  rir.sample_rate = sample_rate;
  rir.source = source;
  rir.mic = mic;
  for (const ImageSource& img : images) {
    if (img.gain == 0.0) continue;
    const double d = norm(img.position - mic);
    const double delay = d * sample_rate / room.speed_of_sound;
    if (long(std::floor(delay)) + kKernelHalfWidth >= long(length)) {
      throw LengthTooShort("impulse response truncates an image arrival");
    }
    const double a = img.gain * detail::attenuation(d);
    const long n0 = std::max<long>(0, long(std::ceil(delay)) - kKernelHalfWidth);
    const long n1 =
        std::min<long>(long(length) - 1, long(std::floor(delay)) + kKernelHalfWidth);
    for (long n = n0; n <= n1; ++n) {
      rir.taps[std::size_t(n)] += a * detail::delay_kernel(double(n) - delay);
    }
  }
  return rir;
}

// Per-tap derivatives of the impulse response with respect to the source
// position.
struct RirJacobian {
  std::vector<double> dx;
  std::vector<double> dy;
  double sample_rate = 16000.0;
};

inline RirJacobian rir_position_jacobian(const Room& room, Vec2 source,
                                         Vec2 mic, double sample_rate,
                                         std::size_t length) {
  if (!(sample_rate > 0.0)) throw RuntimeError("sample rate must be positive");
  if (sdf(room, mic) >= 0.0) {
    throw SourceOutsideRoom("microphone must lie strictly inside the room");
  }
  if (norm(source - mic) <= kDistanceFloor) {
    throw DegeneratePosition("source too close to the microphone");
  }
  const auto images = image_sources(room, source, room.max_reflection_order);

  RirJacobian jac;
  jac.dx.assign(length, 0.0);
  jac.dy.assign(length, 0.0);
  jac.sample_rate = sample_rate;
  const double fs_over_c = sample_rate / room.speed_of_sound;
  for (const ImageSource& img : images) {
    if (img.gain == 0.0) continue;
    const Vec2 diff = img.position - mic;
    const double d = norm(diff);
    const double delay = d * fs_over_c;
    if (long(std::floor(delay)) + kKernelHalfWidth >= long(length)) {
      throw LengthTooShort("impulse response truncates an image arrival");
    }
    // d depends on the source through the image position; the chain rule
    // pulls the unit direction back through the mirror map.
    const Vec2 ddist = detail::mat_t_vec(img.mirror, diff / d);
    const double a = img.gain * detail::attenuation(d);
    const double da = d > kDistanceFloor ? -img.gain / (d * d) : 0.0;
    const long n0 = std::max<long>(0, long(std::ceil(delay)) - kKernelHalfWidth);
    const long n1 =
        std::min<long>(long(length) - 1, long(std::floor(delay)) + kKernelHalfWidth);
    for (long n = n0; n <= n1; ++n) {
      const double t = double(n) - delay;
      const double dtap = da * detail::delay_kernel(t) -
                          a * detail::delay_kernel_derivative(t) * fs_over_c;
      jac.dx[std::size_t(n)] += dtap * ddist.x;
      jac.dy[std::size_t(n)] += dtap * ddist.y;
    }
  }
  return jac;
}

enum class PropagateMode { kLinear, kSteadyState };

// Applies an impulse response to a signal. Linear mode performs a full
// convolution. Steady-state mode treats the signal as endlessly repeating
// and returns one period of the settled response, which equals a circular
// convolution with the period-folded impulse response.
inline Waveform propagate(const Waveform& signal, const Rir& rir,
                          PropagateMode mode = PropagateMode::kLinear) {
  if (signal.sample_rate != rir.sample_rate) {
    throw SampleRateMismatch("signal and impulse response sample rates differ");
  }
  Waveform out;
  out.sample_rate = signal.sample_rate;
  if (mode == PropagateMode::kLinear) {
    out.samples = fft::linear_convolve(signal.samples, rir.taps);
    return out;
  }
  if (!signal.period_samples) {
    throw PeriodMismatch("steady-state propagation needs a periodic signal");
  }
  validate_waveform(signal);
  const std::size_t period = *signal.period_samples;
  std::vector<double> folded(period, 0.0);
  for (std::size_t i = 0; i < rir.taps.size(); ++i) {
    folded[i % period] += rir.taps[i];
  }
  std::vector<double> one_period(signal.samples.begin(),
                                 signal.samples.begin() + long(period));
  out.samples = fft::circular_convolve(one_period, folded);
  out.period_samples = period;
  return out;
}

}  // namespace rotorloc
