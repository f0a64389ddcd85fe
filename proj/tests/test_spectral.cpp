#include <catch2/catch.hpp>

#include <numbers>
#include <random>

#include "faultmap/spectral.hpp"

using namespace faultmap;

namespace {

SignalTrace sine_trace(double freq_hz, double rate_hz, std::size_t samples,
                       double amplitude = 1.0) {
  std::vector<double> s(samples);
  for (std::size_t i = 0; i < samples; ++i)
    s[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate_hz);
  return SignalTrace(std::move(s), rate_hz);
}

Spectrum random_spectrum(std::size_t bins, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> db(-120.0, 0.0);
  Spectrum s;
  s.bins_db.resize(bins);
  for (auto& v : s.bins_db) v = db(rng);
  s.bin_width_hz = 1.0;
  return s;
}

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

TEST_CASE("radix-2 fft matches a naive dft", "[spectral]") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> nd;
  const std::size_t n = 64;
  std::vector<std::complex<double>> buf(n);
  for (auto& v : buf) v = std::complex<double>(nd(rng), 0.0);
  const auto input = buf;
  detail::fft_radix2(buf);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> expected(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k * t) /
                           static_cast<double>(n);
      expected += input[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    CHECK(std::abs(buf[k] - expected) <= 1e-10);
  }
}

TEST_CASE("stft frame count follows the hop arithmetic", "[spectral]") {
  const SignalTrace trace(std::vector<double>(8192, 0.0), 12800.0);
  const auto frames = stft_frames(trace, 4096, 2048);
  CHECK(frames.size() == 3);
  CHECK(frames[0].bins_db.size() == 4096 / 2 + 1);
  CHECK(frames[0].bin_width_hz == Approx(12800.0 / 4096.0));
  CHECK(frames[2].frame_index == 2);
}

TEST_CASE("stft frame count formula holds across shapes", "[spectral]") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t window = std::size_t{1} << (4 + trial % 4);
    std::uniform_int_distribution<std::size_t> hop_dist(1, window);
    std::uniform_int_distribution<std::size_t> extra(0, 5000);
    const std::size_t hop = hop_dist(rng);
    const std::size_t len = window + extra(rng);
    const SignalTrace trace(std::vector<double>(len, 0.0), 1000.0);
    CHECK(stft_frames(trace, window, hop).size() == (len - window) / hop + 1);
  }
}

TEST_CASE("stft puts a pure tone in its analytic bin", "[spectral]") {
  // 1000 Hz at 12800 Hz with window 4096: bin 1000*4096/12800 = 320.
  const auto frames = stft_frames(sine_trace(1000.0, 12800.0, 16384), 4096, 2048);
  REQUIRE(!frames.empty());
  for (const auto& f : frames) CHECK(argmax(f.bins_db) == 320);
}

TEST_CASE("stft on silence sits at the dB floor", "[spectral]") {
  const auto frames = stft_frames(SignalTrace(std::vector<double>(4096, 0.0), 12800.0));
  for (double v : frames[0].bins_db) CHECK(v == Approx(db_floor()));
}

TEST_CASE("stft rejects short traces and bad shapes", "[spectral]") {
  const SignalTrace trace(std::vector<double>(100, 0.0), 1000.0);
  CHECK_THROWS_AS(stft_frames(trace, 4096, 2048), invalid_argument);
  CHECK_THROWS_WITH(stft_frames(trace, 4096, 2048), Catch::Contains("4096"));
  const SignalTrace longer(std::vector<double>(8192, 0.0), 1000.0);
  CHECK_THROWS_AS(stft_frames(longer, 4095, 2048), invalid_argument);
  CHECK_THROWS_AS(stft_frames(longer, 4096, 0), invalid_argument);
  CHECK_THROWS_AS(stft_frames(longer, 4096, 8192), invalid_argument);
}

TEST_CASE("moving average with span 1 is the identity", "[spectral]") {
  std::vector<Spectrum> spectra;
  for (int i = 0; i < 4; ++i) spectra.push_back(random_spectrum(16, 100 + i));
  const auto averaged = average_spectra(spectra, 1);
  for (std::size_t i = 0; i < spectra.size(); ++i)
    for (std::size_t b = 0; b < 16; ++b)
      CHECK(averaged[i].bins_db[b] == Approx(spectra[i].bins_db[b]).margin(1e-12));
}

TEST_CASE("moving average of constant spectra is unchanged", "[spectral]") {
  std::vector<Spectrum> spectra(10, random_spectrum(8, 7));
  const auto averaged = average_spectra(spectra, 4);
  for (const auto& s : averaged)
    for (std::size_t b = 0; b < 8; ++b)
      CHECK(s.bins_db[b] == Approx(spectra[0].bins_db[b]).margin(1e-10));
}

TEST_CASE("moving average is the trailing mean and preserves length", "[spectral]") {
  std::vector<Spectrum> spectra;
  for (int i = 0; i < 9; ++i) spectra.push_back(random_spectrum(5, 40 + i));
  const std::size_t span = 3;
  const auto averaged = average_spectra(spectra, span);
  REQUIRE(averaged.size() == spectra.size());
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    const std::size_t lo = i + 1 >= span ? i + 1 - span : 0;
    for (std::size_t b = 0; b < 5; ++b) {
      double mean = 0.0;
      for (std::size_t t = lo; t <= i; ++t) mean += spectra[t].bins_db[b];
      mean /= static_cast<double>(i - lo + 1);
      CHECK(averaged[i].bins_db[b] == Approx(mean).margin(1e-12));
    }
  }
  CHECK_THROWS_AS(average_spectra({}, 3), invalid_argument);
}

TEST_CASE("paper-rate span arithmetic gives 125 frames for 20 s", "[spectral]") {
  CHECK(moving_average_span(20.0, 12800.0, 2048) == 125);
}

TEST_CASE("a ten-minute trace at 12.8 kHz yields 3749 frames", "[spectral]") {
  CHECK(frame_count(7'680'000, 4096, 2048) == 3749);
}

TEST_CASE("moving average keeps a pure tone's peak bin", "[spectral]") {
  const auto frames = stft_frames(sine_trace(1000.0, 12800.0, 32768), 4096, 2048);
  const auto averaged = average_spectra(frames, 5);
  for (const auto& f : averaged) CHECK(argmax(f.bins_db) == 320);
}

TEST_CASE("cumulative magnitude is a shifted running sum", "[spectral]") {
  SECTION("single bin") {
    Spectrum s;
    s.bins_db = {-30.0};
    const auto curve = cumulative_magnitude(s);
    REQUIRE(curve.size() == 1);
    CHECK(curve[0] == Approx(-30.0 - db_floor()));
  }
  SECTION("two equal bins") {
    Spectrum s;
    s.bins_db = {-12.0, -12.0};
    const auto curve = cumulative_magnitude(s);
    const double m = -12.0 - db_floor();
    CHECK(curve[0] == Approx(m));
    CHECK(curve[1] == Approx(2.0 * m));
  }
  SECTION("random spectrum sums to the total shifted magnitude") {
    const Spectrum s = random_spectrum(64, 9);
    const auto curve = cumulative_magnitude(s);
    double total = 0.0;
    for (double v : s.bins_db) total += v - db_floor();
    CHECK(curve.back() == Approx(total).margin(1e-10));
    for (std::size_t b = 1; b < curve.size(); ++b) CHECK(curve[b] >= curve[b - 1]);
  }
}

namespace {

/// Thirteen distinct linear pieces separated by upward jumps, so every
/// sample belongs to exactly one line and the optimal breakpoints are the
/// knots themselves.
std::vector<double> knotted_curve(const std::vector<std::size_t>& knots, std::size_t length) {
  std::vector<double> curve(length);
  double value = 0.0;
  double slope = 1.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < length; ++i) {
    if (next < knots.size() && i == knots[next]) {
      slope = (next % 2 == 0) ? slope + 2.0 : slope - 1.0;
      value += 7.0;
      ++next;
    }
    curve[i] = value;
    value += slope;
  }
  return curve;
}

}  // namespace

TEST_CASE("segmentation recovers known knots with negligible SSE", "[spectral]") {
  const std::vector<std::size_t> knots = {20, 45, 60, 85, 110, 130, 155, 170, 200, 215, 240, 260};
  const auto curve = knotted_curve(knots, 280);
  const SegmentationScheme scheme = segment_curve(curve, 13);
  REQUIRE(scheme.band_count() == 13);
  CHECK(segmentation_sse(curve, scheme) <= 1e-8);
  for (std::size_t i = 0; i < knots.size(); ++i)
    CHECK(scheme.breakpoints[i + 1] == knots[i]);
}

TEST_CASE("segmenting a straight line prefers even lengths", "[spectral]") {
  std::vector<double> line(26);
  for (std::size_t i = 0; i < line.size(); ++i) line[i] = 3.0 * static_cast<double>(i) + 1.0;
  const SegmentationScheme scheme = segment_curve(line, 13);
  CHECK(segmentation_sse(line, scheme) <= 1e-10);
  for (std::size_t s = 0; s + 1 < scheme.breakpoints.size(); ++s)
    CHECK(scheme.breakpoints[s + 1] - scheme.breakpoints[s] == 2);
}

TEST_CASE("segmentation edge cases", "[spectral]") {
  std::vector<double> curve(10);
  for (std::size_t i = 0; i < curve.size(); ++i) curve[i] = static_cast<double>(i * i);
  SECTION("k = 1 covers the whole curve") {
    const SegmentationScheme scheme = segment_curve(curve, 1);
    CHECK(scheme.breakpoints == std::vector<std::size_t>{0, 10});
  }
  SECTION("k >= length is rejected") {
    CHECK_THROWS_AS(segment_curve(curve, 10), invalid_argument);
    CHECK_THROWS_AS(segment_curve(curve, 25), invalid_argument);
  }
}

TEST_CASE("segmentation SSE is non-increasing in k", "[spectral]") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> step(0.0, 2.0);
  std::vector<double> curve(60);
  double v = 0.0;
  for (auto& c : curve) {
    v += step(rng);
    c = v;
  }
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= 8; ++k) {
    const double sse = segmentation_sse(curve, segment_curve(curve, k));
    CHECK(sse <= previous + 1e-9);
    previous = sse;
  }
}

TEST_CASE("band features sum dB per band", "[spectral]") {
  SECTION("uniform spectrum with equal bands") {
    Spectrum s;
    s.bins_db.assign(26, -10.0);
    SegmentationScheme scheme;
    for (std::size_t b = 0; b <= 13; ++b) scheme.breakpoints.push_back(b * 2);
    const auto features = band_features(s, scheme);
    REQUIRE(features.size() == 13);
    for (double f : features) CHECK(f == Approx(-20.0));
  }
  SECTION("merged bands add up") {
    const Spectrum s = random_spectrum(30, 21);
    SegmentationScheme fine{{0, 10, 20, 30}};
    SegmentationScheme coarse{{0, 20, 30}};
    const auto f3 = band_features(s, fine);
    const auto f2 = band_features(s, coarse);
    CHECK(f2[0] == Approx(f3[0] + f3[1]).margin(1e-10));
    CHECK(f2[1] == Approx(f3[2]).margin(1e-12));
  }
  SECTION("random spectrum matches the per-band loop oracle") {
    const Spectrum s = random_spectrum(40, 33);
    SegmentationScheme scheme{{0, 7, 13, 25, 40}};
    const auto features = band_features(s, scheme);
    for (std::size_t band = 0; band < 4; ++band) {
      double expected = 0.0;
      for (std::size_t b = scheme.breakpoints[band]; b < scheme.breakpoints[band + 1]; ++b)
        expected += s.bins_db[b];
      CHECK(features[band] == Approx(expected).margin(1e-10));
    }
  }
  SECTION("mismatched bin count is rejected") {
    const Spectrum s = random_spectrum(16, 1);
    SegmentationScheme scheme{{0, 8, 20}};
    CHECK_THROWS_AS(band_features(s, scheme), invalid_argument);
  }
}

TEST_CASE("featurize_trace emits one named row per averaged frame", "[spectral]") {
  const auto trace = sine_trace(200.0, 2048.0, 4096 + 7 * 512);
  const SegmentationScheme scheme = fit_segmentation(trace, 1024, 512, 2, 13);
  const FeatureMatrix features = featurize_trace(trace, scheme, 1024, 512, 2);
  CHECK(features.n() == (trace.samples.size() - 1024) / 512 + 1);
  CHECK(features.d() == 13);
  CHECK(features.column_names.front() == "band_00");
  CHECK(features.column_names.back() == "band_12");
}

TEST_CASE("featurize_trace on silence gives identical rows", "[spectral]") {
  const SignalTrace trace(std::vector<double>(4096 * 3, 0.0), 12800.0);
  SegmentationScheme scheme{{0, 500, 1000, 2049}};
  const FeatureMatrix features = featurize_trace(trace, scheme, 4096, 2048, 2);
  for (std::size_t i = 1; i < features.n(); ++i)
    for (std::size_t j = 0; j < features.d(); ++j)
      CHECK(features.values(i, j) == Approx(features.values(0, j)));
}
