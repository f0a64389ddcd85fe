// faultmap/spectral.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>

#include "faultmap/core.hpp"

namespace faultmap {

/// Single-channel vibration signal.
struct SignalTrace {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;

  SignalTrace() = default;
  SignalTrace(std::vector<double> s, double rate) : samples(std::move(s)), sample_rate_hz(rate) {
    if (!(sample_rate_hz > 0.0))
      throw invalid_argument("SignalTrace: sample_rate_hz must be positive");
    for (double v : samples)
      if (!std::isfinite(v)) throw invalid_argument("SignalTrace: non-finite sample rejected");
  }
};

/// One STFT frame as dB magnitudes over window/2+1 bins.
struct Spectrum {
  std::vector<double> bins_db;
  double bin_width_hz = 0.0;
  std::size_t frame_index = 0;
};

/// Contiguous frequency bands over a spectrum's bins: breakpoints[0] == 0,
/// breakpoints.back() == bin count, strictly increasing. The vibration
/// pipeline uses 13 bands.
struct SegmentationScheme {
  std::vector<std::size_t> breakpoints;

  std::size_t band_count() const { return breakpoints.empty() ? 0 : breakpoints.size() - 1; }

  void validate(std::size_t bin_count) const {
    if (breakpoints.size() < 2)
      throw invalid_argument("SegmentationScheme: need at least one band");
    if (breakpoints.front() != 0)
      throw invalid_argument("SegmentationScheme: first breakpoint must be 0");
    if (breakpoints.back() != bin_count)
      throw invalid_argument("SegmentationScheme: last breakpoint " +
                             std::to_string(breakpoints.back()) + " does not cover " +
                             std::to_string(bin_count) + " bins");
    for (std::size_t s = 1; s < breakpoints.size(); ++s)
      if (breakpoints[s] <= breakpoints[s - 1])
        throw invalid_argument("SegmentationScheme: breakpoints must be strictly increasing");
  }
};

inline constexpr std::size_t kDefaultWindow = 4096;
inline constexpr std::size_t kDefaultHop = 2048;
inline constexpr std::size_t kDefaultBandCount = 13;
inline constexpr double kMagnitudeEpsilon = 1e-12;

/// Floor of the dB scale: the magnitude epsilon expressed in dB. Silent bins
/// land exactly here, and cumulative curves are shifted by it so increments
/// stay non-negative.
inline double db_floor() { return 20.0 * std::log10(kMagnitudeEpsilon); }

inline std::size_t frame_count(std::size_t length, std::size_t window, std::size_t hop) {
  return (length - window) / hop + 1;
}

/// Frames needed to cover a time span at the given hop, rounded to nearest.
inline std::size_t moving_average_span(double seconds, double sample_rate_hz, std::size_t hop) {
  if (!(seconds > 0.0) || !(sample_rate_hz > 0.0) || hop == 0)
    throw invalid_argument("moving_average_span: seconds, rate and hop must be positive");
  const double frames = seconds * sample_rate_hz / static_cast<double>(hop);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frames)));
}

namespace detail {

inline bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

/// Iterative radix-2 Cooley-Tukey, in place. Size must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> root(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= root;
      }
    }
  }
}

}  // namespace detail

/// Hann-windowed STFT frames converted to dB magnitude.
inline std::vector<Spectrum> stft_frames(const SignalTrace& trace,
                                         std::size_t window = kDefaultWindow,
                                         std::size_t hop = kDefaultHop) {
  if (!detail::is_power_of_two(window))
    throw invalid_argument("stft_frames: window must be a power of two, got " +
                           std::to_string(window));
  if (hop == 0 || hop > window)
    throw invalid_argument("stft_frames: hop must satisfy 0 < hop <= window");
  if (trace.samples.size() < window)
    throw invalid_argument("stft_frames: trace has " + std::to_string(trace.samples.size()) +
                           " samples; at least " + std::to_string(window) + " required");

  std::vector<double> hann(window);
  for (std::size_t k = 0; k < window; ++k)
    hann[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                   static_cast<double>(window));

  const std::size_t frames = frame_count(trace.samples.size(), window, hop);
  const std::size_t bins = window / 2 + 1;
  const double bin_width = trace.sample_rate_hz / static_cast<double>(window);

  std::vector<Spectrum> out;
  out.reserve(frames);
  std::vector<std::complex<double>> buffer(window);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * hop;
    for (std::size_t k = 0; k < window; ++k)
      buffer[k] = std::complex<double>(trace.samples[start + k] * hann[k], 0.0);
    detail::fft_radix2(buffer);
    Spectrum spectrum;
    spectrum.bins_db.resize(bins);
    spectrum.bin_width_hz = bin_width;
    spectrum.frame_index = f;
    for (std::size_t b = 0; b < bins; ++b)
      spectrum.bins_db[b] = 20.0 * std::log10(std::max(std::abs(buffer[b]), kMagnitudeEpsilon));
    out.push_back(std::move(spectrum));
  }
  return out;
}

/// Trailing moving average over dB bins: output i averages frames
/// max(0, i-span+1)..i. Length and frame indices are preserved.
inline std::vector<Spectrum> average_spectra(const std::vector<Spectrum>& spectra,
                                             std::size_t span_frames) {
  if (spectra.empty()) throw invalid_argument("average_spectra: no spectra given");
  if (span_frames < 1) throw invalid_argument("average_spectra: span_frames must be >= 1");
  const std::size_t bins = spectra.front().bins_db.size();
  for (const auto& s : spectra)
    if (s.bins_db.size() != bins)
      throw invalid_argument("average_spectra: inconsistent bin counts");

  std::vector<Spectrum> out(spectra.size());
  std::vector<double> acc(bins, 0.0);
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    for (std::size_t b = 0; b < bins; ++b) acc[b] += spectra[i].bins_db[b];
    if (i >= span_frames)
      for (std::size_t b = 0; b < bins; ++b) acc[b] -= spectra[i - span_frames].bins_db[b];
    const std::size_t have = std::min(i + 1, span_frames);
    out[i].bins_db.resize(bins);
    out[i].bin_width_hz = spectra[i].bin_width_hz;
    out[i].frame_index = spectra[i].frame_index;
    for (std::size_t b = 0; b < bins; ++b)
      out[i].bins_db[b] = acc[b] / static_cast<double>(have);
  }
  return out;
}

/// Element-wise mean of a spectra list; the reference the segmentation is
/// usually fitted on.
inline Spectrum mean_spectrum(const std::vector<Spectrum>& spectra) {
  if (spectra.empty()) throw invalid_argument("mean_spectrum: no spectra given");
  const std::size_t bins = spectra.front().bins_db.size();
  Spectrum out;
  out.bins_db.assign(bins, 0.0);
  out.bin_width_hz = spectra.front().bin_width_hz;
  out.frame_index = 0;
  for (const auto& s : spectra) {
    if (s.bins_db.size() != bins)
      throw invalid_argument("mean_spectrum: inconsistent bin counts");
    for (std::size_t b = 0; b < bins; ++b) out.bins_db[b] += s.bins_db[b];
  }
  for (std::size_t b = 0; b < bins; ++b) out.bins_db[b] /= static_cast<double>(spectra.size());
  return out;
}

/// Running sum of floor-shifted magnitudes; non-decreasing by construction.
inline std::vector<double> cumulative_magnitude(const Spectrum& spectrum) {
  std::vector<double> curve(spectrum.bins_db.size());
  const double floor_db = db_floor();
  double running = 0.0;
  for (std::size_t b = 0; b < spectrum.bins_db.size(); ++b) {
    running += spectrum.bins_db[b] - floor_db;
    curve[b] = running;
  }
  return curve;
}

namespace detail {

/// Least-squares line SSE over curve indices [a, b), O(1) from prefix sums.
struct SegmentCost {
  std::vector<long double> sy, syy, sxy;

  explicit SegmentCost(std::span<const double> y) {
    const std::size_t n = y.size();
    sy.resize(n + 1, 0.0L);
    syy.resize(n + 1, 0.0L);
    sxy.resize(n + 1, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
      sy[i + 1] = sy[i] + y[i];
      syy[i + 1] = syy[i] + static_cast<long double>(y[i]) * y[i];
      sxy[i + 1] = sxy[i] + static_cast<long double>(i) * y[i];
    }
  }

  double operator()(std::size_t a, std::size_t b) const {
    const std::size_t m = b - a;
    if (m <= 2) return 0.0;
    const long double n = static_cast<long double>(m);
    // Sums of x = a..b-1 and x^2 in closed form.
    auto sum_to = [](std::size_t t) {
      const long double v = static_cast<long double>(t);
      return v * (v - 1.0L) / 2.0L;
    };
    auto sum_sq_to = [](std::size_t t) {
      const long double v = static_cast<long double>(t);
      return (v - 1.0L) * v * (2.0L * v - 1.0L) / 6.0L;
    };
    const long double sx = sum_to(b) - sum_to(a);
    const long double sxx = sum_sq_to(b) - sum_sq_to(a);
    const long double syv = sy[b] - sy[a];
    const long double syyv = syy[b] - syy[a];
    const long double sxyv = sxy[b] - sxy[a];
    const long double sxx_c = sxx - sx * sx / n;
    const long double sxy_c = sxyv - sx * syv / n;
    const long double syy_c = syyv - syv * syv / n;
    if (sxx_c <= 0.0L) return std::max(0.0, static_cast<double>(syy_c));
    const long double sse = syy_c - sxy_c * sxy_c / sxx_c;
    return std::max(0.0, static_cast<double>(sse));
  }
};

}  // namespace detail

/// Optimal piecewise-linear segmentation of a curve into k contiguous
/// segments by exact dynamic programming over breakpoint placements.
/// SSE ties are broken toward the most even segment lengths.
inline SegmentationScheme segment_curve(std::span<const double> curve,
                                        std::size_t k = kDefaultBandCount) {
  const std::size_t n = curve.size();
  if (k < 1) throw invalid_argument("segment_curve: k must be >= 1");
  if (n <= k)
    throw invalid_argument("segment_curve: curve length " + std::to_string(n) +
                           " must exceed segment count " + std::to_string(k));

  const detail::SegmentCost cost(curve);
  const double ideal = static_cast<double>(n) / static_cast<double>(k);
  auto evenness = [ideal](std::size_t len) {
    const double d = static_cast<double>(len) - ideal;
    return d * d;
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // best[s][j]: minimal (sse, evenness) splitting curve[0..j) into s segments.
  std::vector<std::vector<double>> best_sse(k + 1, std::vector<double>(n + 1, kInf));
  std::vector<std::vector<double>> best_even(k + 1, std::vector<double>(n + 1, kInf));
  std::vector<std::vector<std::size_t>> from(k + 1, std::vector<std::size_t>(n + 1, 0));
  best_sse[0][0] = 0.0;
  best_even[0][0] = 0.0;

  auto lex_better = [](double sse_a, double even_a, double sse_b, double even_b) {
    const double tol = 1e-9 * (1.0 + std::min(sse_a, sse_b));
    if (sse_a < sse_b - tol) return true;
    if (sse_b < sse_a - tol) return false;
    return even_a < even_b;
  };

  for (std::size_t s = 1; s <= k; ++s) {
    for (std::size_t j = s; j + (k - s) <= n; ++j) {
      for (std::size_t a = s - 1; a < j; ++a) {
        if (best_sse[s - 1][a] == kInf) continue;
        const double sse = best_sse[s - 1][a] + cost(a, j);
        const double even = best_even[s - 1][a] + evenness(j - a);
        if (lex_better(sse, even, best_sse[s][j], best_even[s][j])) {
          best_sse[s][j] = sse;
          best_even[s][j] = even;
          from[s][j] = a;
        }
      }
    }
  }

  SegmentationScheme scheme;
  scheme.breakpoints.assign(k + 1, 0);
  scheme.breakpoints[k] = n;
  std::size_t j = n;
  for (std::size_t s = k; s > 0; --s) {
    j = from[s][j];
    scheme.breakpoints[s - 1] = j;
  }
  scheme.validate(n);
  return scheme;
}

/// Total SSE of the per-segment least-squares fits under a scheme.
inline double segmentation_sse(std::span<const double> curve, const SegmentationScheme& scheme) {
  scheme.validate(curve.size());
  const detail::SegmentCost cost(curve);
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < scheme.breakpoints.size(); ++s)
    total += cost(scheme.breakpoints[s], scheme.breakpoints[s + 1]);
  return total;
}

/// Per-band sums of raw dB magnitude.
inline std::vector<double> band_features(const Spectrum& spectrum,
                                         const SegmentationScheme& scheme) {
  scheme.validate(spectrum.bins_db.size());
  std::vector<double> features(scheme.band_count(), 0.0);
  for (std::size_t s = 0; s < scheme.band_count(); ++s)
    for (std::size_t b = scheme.breakpoints[s]; b < scheme.breakpoints[s + 1]; ++b)
      features[s] += spectrum.bins_db[b];
  return features;
}

/// End-to-end: STFT, trailing average, band sums. One row per averaged
/// spectrum, in time order, columns named band_00..band_NN.
inline FeatureMatrix featurize_trace(const SignalTrace& trace, const SegmentationScheme& scheme,
                                     std::size_t window = kDefaultWindow,
                                     std::size_t hop = kDefaultHop, std::size_t span_frames = 1) {
  const auto spectra = average_spectra(stft_frames(trace, window, hop), span_frames);
  scheme.validate(spectra.front().bins_db.size());
  Matrix rows(spectra.size(), scheme.band_count());
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    const auto features = band_features(spectra[i], scheme);
    std::copy(features.begin(), features.end(), rows.row(i).begin());
  }
  std::vector<std::string> names(scheme.band_count());
  for (std::size_t s = 0; s < names.size(); ++s) {
    names[s] = "band_" + std::string(s < 10 ? "0" : "") + std::to_string(s);
  }
  return FeatureMatrix(std::move(rows), std::move(names));
}

/// Fits the band layout on a reference trace: mean averaged spectrum,
/// cumulative magnitude curve, then the segmentation DP. The scheme is meant
/// to be fitted once on a normal-condition recording and reused.
inline SegmentationScheme fit_segmentation(const SignalTrace& reference,
                                           std::size_t window = kDefaultWindow,
                                           std::size_t hop = kDefaultHop,
                                           std::size_t span_frames = 1,
                                           std::size_t bands = kDefaultBandCount) {
  const auto spectra = average_spectra(stft_frames(reference, window, hop), span_frames);
  const auto curve = cumulative_magnitude(mean_spectrum(spectra));
  return segment_curve(curve, bands);
}

}  // namespace faultmap
