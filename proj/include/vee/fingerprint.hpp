#ifndef VEE_FINGERPRINT_HPP
#define VEE_FINGERPRINT_HPP

// Edge-energy fingerprints: per-frame mean Sobel magnitude, strict local
// extrema of that series, and Hann-windowed DFT magnitudes around each
// extremum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "vee/error.hpp"

namespace vee {

// Row-major single-channel image. The pixel type is a template parameter so
// that callers can run the edge operator on widened intensities.
template <class Pixel>
struct BasicFrame {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<Pixel> pixels;

  BasicFrame() = default;
  BasicFrame(std::uint32_t w, std::uint32_t h, Pixel fill = Pixel{})
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
  BasicFrame(std::uint32_t w, std::uint32_t h, std::vector<Pixel> px)
      : width(w), height(h), pixels(std::move(px)) {}

  std::size_t size() const { return pixels.size(); }
  Pixel& at(std::uint32_t x, std::uint32_t y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Pixel& at(std::uint32_t x, std::uint32_t y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }

  void validate() const {
    if (width < 3 || height < 3) {
      throw InvalidInput("frame must be at least 3x3, got " + std::to_string(width) + "x" +
                         std::to_string(height));
    }
    if (pixels.size() != static_cast<std::size_t>(width) * height) {
      throw InvalidInput("frame pixel count does not match width*height");
    }
  }

  friend bool operator==(const BasicFrame&, const BasicFrame&) = default;
};

using Frame = BasicFrame<std::uint8_t>;

namespace detail {

template <class Pixel>
using WideOf = std::conditional_t<std::is_floating_point_v<Pixel>, double, std::int64_t>;

// Visits the 3x3 Sobel response of every pixel in row-major order, with
// replicate-edge padding at the borders.
template <class Pixel, class Visit>
void for_each_sobel(const BasicFrame<Pixel>& f, Visit&& visit) {
  using W = WideOf<Pixel>;
  const std::uint32_t w = f.width;
  const std::uint32_t h = f.height;
  for (std::uint32_t y = 0; y < h; ++y) {
    const std::uint32_t ym = y == 0 ? 0 : y - 1;
    const std::uint32_t yp = y + 1 == h ? y : y + 1;
    const Pixel* up = &f.pixels[static_cast<std::size_t>(ym) * w];
    const Pixel* mid = &f.pixels[static_cast<std::size_t>(y) * w];
    const Pixel* dn = &f.pixels[static_cast<std::size_t>(yp) * w];
    for (std::uint32_t x = 0; x < w; ++x) {
      const std::uint32_t xm = x == 0 ? 0 : x - 1;
      const std::uint32_t xp = x + 1 == w ? x : x + 1;
      const W gx = (W(up[xp]) + 2 * W(mid[xp]) + W(dn[xp])) - (W(up[xm]) + 2 * W(mid[xm]) + W(dn[xm]));
      const W gy = (W(dn[xm]) + 2 * W(dn[x]) + W(dn[xp])) - (W(up[xm]) + 2 * W(up[x]) + W(up[xp]));
      visit(x, y, gx, gy);
    }
  }
}

}  // namespace detail

/// Per-pixel Sobel gradient magnitude, row-major.
template <class Pixel>
std::vector<double> gradient_magnitudes(const BasicFrame<Pixel>& frame) {
  frame.validate();
  std::vector<double> out;
  out.reserve(frame.size());
  detail::for_each_sobel(frame, [&](std::uint32_t, std::uint32_t, auto gx, auto gy) {
    out.push_back(std::sqrt(static_cast<double>(gx * gx + gy * gy)));
  });
  return out;
}

/// Mean Sobel gradient magnitude over all pixels of the frame.
template <class Pixel>
double edge_energy(const BasicFrame<Pixel>& frame) {
  frame.validate();
  double sum = 0.0;
  detail::for_each_sobel(frame, [&](std::uint32_t, std::uint32_t, auto gx, auto gy) {
    sum += std::sqrt(static_cast<double>(gx * gx + gy * gy));
  });
  return sum / static_cast<double>(frame.size());
}

struct EdgeEnergySeries {
  std::vector<double> values;
  double frame_rate = 0.0;  // informational only

  std::size_t size() const { return values.size(); }
  friend bool operator==(const EdgeEnergySeries&, const EdgeEnergySeries&) = default;
};

inline EdgeEnergySeries ee_series(std::span<const Frame> frames, double frame_rate = 0.0) {
  EdgeEnergySeries series;
  series.frame_rate = frame_rate;
  series.values.reserve(frames.size());
  for (const auto& f : frames) {
    if (f.width != frames.front().width || f.height != frames.front().height) {
      throw InvalidInput("frame dimensions differ within one video");
    }
    series.values.push_back(edge_energy(f));
  }
  return series;
}

enum class ExtremumKind : std::uint8_t { maximum, minimum };

struct ExtremumPoint {
  std::size_t t = 0;
  ExtremumKind kind = ExtremumKind::maximum;

  friend bool operator==(const ExtremumPoint&, const ExtremumPoint&) = default;
};

/// Strict local extrema of `series`: e_t must be strictly above (or below)
/// every sample within +-min_separation. Plateaus never qualify. Points whose
/// [t - window_half, t + window_half] window or separation neighbourhood
/// leaves the series are dropped.
inline std::vector<ExtremumPoint> find_extrema(std::span<const double> series, std::size_t window_half,
                                               std::size_t min_separation) {
  if (min_separation < 1) throw InvalidInput("min_separation must be >= 1");
  std::vector<ExtremumPoint> out;
  const std::size_t margin = std::max(window_half, min_separation);
  if (series.size() < 2 * margin + 1) return out;
  for (std::size_t t = margin; t + margin < series.size(); ++t) {
    const double v = series[t];
    bool is_max = true;
    bool is_min = true;
    for (std::size_t d = 1; d <= min_separation && (is_max || is_min); ++d) {
      for (double n : {series[t - d], series[t + d]}) {
        is_max = is_max && v > n;
        is_min = is_min && v < n;
      }
    }
    if (is_max) out.push_back({t, ExtremumKind::maximum});
    else if (is_min) out.push_back({t, ExtremumKind::minimum});
  }
  return out;
}

struct Descriptor {
  std::vector<double> values;  // DFT magnitudes of bins 1..N_F
  std::size_t t = 0;           // frame index of the extremum

  std::size_t size() const { return values.size(); }
  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

struct FingerprintParams {
  std::size_t window_half = 100;   // N_T
  std::size_t feature_dim = 48;    // N_F
  std::size_t min_separation = 3;

  void validate() const {
    if (feature_dim < 1 || feature_dim > window_half) {
      throw InvalidInput("feature dimension must satisfy 1 <= N_F <= N_T (N_F=" + std::to_string(feature_dim) +
                         ", N_T=" + std::to_string(window_half) + ")");
    }
    if (min_separation < 1) throw InvalidInput("min_separation must be >= 1");
  }

  friend bool operator==(const FingerprintParams&, const FingerprintParams&) = default;
};

// Precomputes the symmetric Hann window and the twiddle table for a window of
// 2*N_T + 1 samples, then evaluates only the N_F requested DFT bins.
class DescriptorExtractor {
 public:
  DescriptorExtractor(std::size_t window_half, std::size_t feature_dim)
      : half_(window_half), dim_(feature_dim), len_(2 * window_half + 1) {
    FingerprintParams{window_half, feature_dim, 1}.validate();
    window_.resize(len_);
    cos_.resize(len_);
    sin_.resize(len_);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t n = 0; n < len_; ++n) {
      window_[n] = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(n) / static_cast<double>(2 * half_)));
      const double angle = two_pi * static_cast<double>(n) / static_cast<double>(len_);
      cos_[n] = std::cos(angle);
      sin_[n] = std::sin(angle);
    }
  }

  std::size_t window_half() const { return half_; }
  std::size_t feature_dim() const { return dim_; }
  std::span<const double> window() const { return window_; }

  Descriptor operator()(std::span<const double> series, std::size_t t) const {
    if (t < half_ || t + half_ >= series.size()) {
      throw ContractViolation("descriptor window around t=" + std::to_string(t) + " does not fit series of length " +
                              std::to_string(series.size()));
    }
    std::vector<double> windowed(len_);
    for (std::size_t n = 0; n < len_; ++n) windowed[n] = series[t - half_ + n] * window_[n];

    Descriptor d;
    d.t = t;
    d.values.resize(dim_);
    for (std::size_t k = 1; k <= dim_; ++k) {
      double re = 0.0;
      double im = 0.0;
      std::size_t phase = 0;  // k*n mod len, kept exact in integers
      for (std::size_t n = 0; n < len_; ++n) {
        re += windowed[n] * cos_[phase];
        im -= windowed[n] * sin_[phase];
        phase += k;
        if (phase >= len_) phase -= len_;
      }
      d.values[k - 1] = std::hypot(re, im);
    }
    return d;
  }

 private:
  std::size_t half_;
  std::size_t dim_;
  std::size_t len_;
  std::vector<double> window_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

inline Descriptor descriptor(std::span<const double> series, const ExtremumPoint& p, std::size_t window_half,
                             std::size_t feature_dim) {
  return DescriptorExtractor(window_half, feature_dim)(series, p.t);
}

/// Descriptors at every surviving extremum of an already computed series.
inline std::vector<Descriptor> fingerprint_series(std::span<const double> series, const FingerprintParams& params) {
  params.validate();
  const DescriptorExtractor extract(params.window_half, params.feature_dim);
  std::vector<Descriptor> out;
  for (const auto& p : find_extrema(series, params.window_half, params.min_separation)) {
    out.push_back(extract(series, p.t));
  }
  return out;
}

inline std::vector<Descriptor> fingerprint_video(std::span<const Frame> frames, const FingerprintParams& params) {
  params.validate();
  return fingerprint_series(ee_series(frames).values, params);
}

}  // namespace vee

#endif  // VEE_FINGERPRINT_HPP
