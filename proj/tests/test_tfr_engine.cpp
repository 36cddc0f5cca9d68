#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "ddf/errors.hpp"
#include "ddf/fft.hpp"
#include "ddf/rng.hpp"
#include "ddf/tfr_engine.hpp"
#include "oracles.hpp"

using namespace ddf;
using namespace ddf::tfr;
using cplx = std::complex<double>;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.gaussian();
  return x;
}

signal::Segment one_channel(std::vector<double> x) {
  signal::Segment seg;
  seg.channels.push_back(std::move(x));
  return seg;
}

// cos tone whose analytic extension is exactly on an FFT bin.
std::vector<double> on_bin_tone(std::size_t n, std::size_t bin) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = std::cos(2.0 * std::numbers::pi * static_cast<double>(bin) * static_cast<double>(i) /
                    static_cast<double>(n));
  return x;
}

double energy(const std::vector<cplx>& z) {
  double acc = 0.0;
  for (const auto& v : z) acc += std::norm(v);
  return acc;
}

double tfr_integral(const Tfr& t, std::size_t channel) {
  double acc = 0.0;
  for (double v : t.channels[channel].data) acc += v;
  return acc * t.time_step_s * t.freq_step_hz;
}

}  // namespace

TEST_CASE("fft matches the direct DFT, including non-power-of-two sizes") {
  for (std::size_t n : {8u, 12u, 16u, 30u, 37u}) {
    Rng rng(n);
    std::vector<cplx> x(n);
    for (auto& v : x) v = cplx(rng.gaussian(), rng.gaussian());
    auto fast = fft(x);
    auto direct = oracle::naive_dft(x);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(fast[k] - direct[k]) < 1e-9);
    auto back = ifft(fast);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(back[k] - x[k]) < 1e-9);
  }
}

TEST_CASE("analytic signal of an on-bin cosine is the matching complex tone") {
  const std::size_t n = 256, bin = 9;
  auto z = analytic_channel(on_bin_tone(n, bin));
  for (std::size_t i = 0; i < n; ++i) {
    double expected_im =
        std::sin(2.0 * std::numbers::pi * static_cast<double>(bin) * static_cast<double>(i) /
                 static_cast<double>(n));
    CHECK(std::abs(z[i].imag() - expected_im) < 1e-9);
  }
}

TEST_CASE("analytic signal keeps the real part exactly") {
  auto x = random_signal(200, 3);  // non power of two
  auto z = analytic_channel(x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(z[i].real() - x[i]) < 1e-9);
}

TEST_CASE("analytic signal energy follows the Parseval accounting") {
  // Oracle: ||z||^2 = (|X0|^2 + 4*sum_pos |Xk|^2 + |XN/2|^2) / N from the
  // spectrum of x.
  auto x = random_signal(128, 17);
  std::vector<cplx> spec(x.begin(), x.end());
  spec = fft(spec);
  double expected = std::norm(spec[0]) + std::norm(spec[64]);
  for (std::size_t k = 1; k < 64; ++k) expected += 4.0 * std::norm(spec[k]);
  expected /= 128.0;

  auto z = analytic_channel(x);
  CHECK(energy(z) == doctest::Approx(expected).epsilon(1e-9));

  // Zero-mean, zero-Nyquist signal: ||z||^2 = 2 ||x||^2 within 1e-6 relative.
  auto tone = on_bin_tone(128, 5);
  auto zt = analytic_channel(tone);
  double ex = 0.0;
  for (double v : tone) ex += v * v;
  CHECK(energy(zt) == doctest::Approx(2.0 * ex).epsilon(1e-6));
}

TEST_CASE("analytic signal rejects degenerate lengths") {
  CHECK_THROWS_AS(analytic_channel({1.0}), Error);
}

TEST_CASE("ambiguity function origin holds the signal energy") {
  auto z = analytic_channel(random_signal(64, 23));
  auto a = ambiguity_function(z);
  CHECK(a.at(0, 0).real() == doctest::Approx(energy(z)).epsilon(1e-12));
  CHECK(std::abs(a.at(0, 0).imag()) < 1e-9);
}

TEST_CASE("tone ambiguity concentrates on the zero-Doppler line") {
  const std::size_t n = 64;
  std::vector<cplx> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    double angle = 2.0 * std::numbers::pi * 10.0 * static_cast<double>(i) / static_cast<double>(n);
    z[i] = cplx(std::cos(angle), std::sin(angle));
  }
  auto a = ambiguity_function(z);
  std::vector<double> row_mass(n, 0.0);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t m = 0; m < n; ++m) row_mass[v] += std::abs(a.at(v, m));
  std::size_t best = 0;
  double others = 0.0;
  for (std::size_t v = 1; v < n; ++v) {
    if (row_mass[v] > row_mass[best]) best = v;
    others += row_mass[v];
  }
  CHECK(best == 0);
  // Edge truncation leaks a Dirichlet skirt into the other rows; the
  // zero-Doppler line still towers over their average.
  CHECK(row_mass[0] > 10.0 * others / static_cast<double>(n - 1));
}

TEST_CASE("ambiguity function is conjugate-symmetric under (nu, tau) reversal") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    Rng rng(seed);
    std::vector<cplx> z(64);
    for (auto& v : z) v = cplx(rng.gaussian(), rng.gaussian());
    auto a = ambiguity_function(z);
    for (std::size_t v = 0; v < 64; ++v)
      for (std::size_t m = 0; m < 64; ++m) {
        auto mirrored = a.at((64 - v) % 64, (64 - m) % 64);
        CHECK(std::abs(mirrored - std::conj(a.at(v, m))) < 1e-9);
      }
  }
}

TEST_CASE("ckd kernel values") {
  CkdParams params{1.0, 0.1, 0.1};
  std::vector<double> grid = {0.0, 0.05, 0.0999, 0.1, 0.25, -0.05, -0.3, 1.0};
  auto [g1, g2] = ckd_kernel(params, grid, grid);

  CHECK(g1[0] == 1.0);  // exp(c - c) at the origin
  CHECK(g2[0] == 1.0);
  CHECK(g1[1] == doctest::Approx(std::exp(-1.0 / 3.0)).epsilon(1e-12));
  CHECK(g1[1] == doctest::Approx(0.7165313105737893).epsilon(1e-12));
  CHECK(g1[3] == 0.0);  // |nu| == D: hard support boundary
  CHECK(g1[4] == 0.0);
  CHECK(g1[6] == 0.0);
  CHECK(g1[7] == 0.0);
  CHECK(g1[5] == doctest::Approx(g1[1]));  // even in nu

  for (double c : {0.5, 1.0, 4.0}) {
    auto [h1, h2] = ckd_kernel({c, 0.3, 0.7}, {0.0}, {0.0});
    CHECK(h1[0] == 1.0);
    CHECK(h2[0] == 1.0);
  }

  CHECK_THROWS_AS(ckd_kernel({0.0, 0.1, 0.1}, grid, grid), Error);
  CHECK_THROWS_AS(ckd_kernel({1.0, 0.0, 0.1}, grid, grid), Error);
  CHECK_THROWS_AS(ckd_kernel({1.0, 0.1, 1.5}, grid, grid), Error);
}

TEST_CASE("ckd tfr localizes an on-bin tone within one frequency bin") {
  const std::size_t n = 256;
  const double fs = 256.0;
  const std::size_t tone_bin = 20;  // analytic bin -> freq bin 40 of 256
  TfrConfig cfg;  // lambda 1, default kernel
  auto t = compute_ckd_tfr(one_channel(on_bin_tone(n, tone_bin)), cfg, fs);
  const auto& m = t.channels[0];
  REQUIRE(m.rows == n);
  REQUIRE(m.cols == n);
  const std::size_t expected = 2 * tone_bin;
  for (std::size_t r = 0; r < m.rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols; ++c)
      if (m.at(r, c) > m.at(r, best)) best = c;
    CHECK(std::abs(static_cast<double>(best) - static_cast<double>(expected)) <= 1.0);
  }
}

TEST_CASE("ckd tfr conserves the analytic energy within 2 percent") {
  TfrConfig cfg;
  const double fs = 512.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto x = random_signal(256, 100 + seed);
    auto z = analytic_channel(x);
    double target = energy(z) / fs;
    auto t = compute_ckd_tfr(one_channel(x), cfg, fs);
    CHECK(tfr_integral(t, 0) == doctest::Approx(target).epsilon(0.02));
  }
}

TEST_CASE("chirp ridge follows the instantaneous frequency") {
  const std::size_t n = 256;
  const double fs = 256.0;
  // f: 0.1 fs -> 0.3 fs across the segment.
  const double f0 = 0.1 * fs, f1 = 0.3 * fs;
  std::vector<double> x(n);
  const double k = (f1 - f0) / (static_cast<double>(n) / fs);
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / fs;
    x[i] = std::cos(2.0 * std::numbers::pi * (f0 * t + 0.5 * k * t * t));
  }
  TfrConfig cfg;
  auto t = compute_ckd_tfr(one_channel(x), cfg, fs);
  const auto& m = t.channels[0];

  double total_dev = 0.0;
  for (std::size_t r = 0; r < m.rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols; ++c)
      if (m.at(r, c) > m.at(r, best)) best = c;
    double inst_freq = f0 + k * (static_cast<double>(r) / fs);
    double expected_bin = inst_freq / t.freq_step_hz;
    total_dev += std::abs(static_cast<double>(best) - expected_bin);
  }
  CHECK(total_dev / static_cast<double>(m.rows) < 2.0);
}

TEST_CASE("wvd is real up to round-off and beats ckd on tone concentration") {
  const std::size_t n = 256;
  const double fs = 256.0;
  auto seg = one_channel(on_bin_tone(n, 24));

  double wvd_residue = 0.0, ckd_residue = 0.0;
  auto w = wvd(seg, fs, &wvd_residue);
  TfrConfig cfg;
  auto c = compute_ckd_tfr(seg, cfg, fs, &ckd_residue);
  CHECK(wvd_residue < 1e-9);
  CHECK(ckd_residue < 1e-9);

  // Mainlobe sharpness on interior rows: fraction of row magnitude within
  // one bin of the row peak. The unsmoothed view concentrates at least as
  // much mass at its ridge as the lag-smoothed one.
  auto mean_peak_fraction = [](const Matrix& m, std::size_t lo, std::size_t hi) {
    double acc = 0.0;
    for (std::size_t r = lo; r < hi; ++r) {
      std::size_t best = 0;
      double mass = 0.0;
      for (std::size_t col = 0; col < m.cols; ++col) {
        if (m.at(r, col) > m.at(r, best)) best = col;
        mass += std::abs(m.at(r, col));
      }
      double near = 0.0;
      for (std::size_t col = best == 0 ? 0 : best - 1; col <= std::min(m.cols - 1, best + 1); ++col)
        near += std::abs(m.at(r, col));
      acc += near / mass;
    }
    return acc / static_cast<double>(hi - lo);
  };
  CHECK(mean_peak_fraction(w.channels[0], 64, 192) >= mean_peak_fraction(c.channels[0], 64, 192));
}

TEST_CASE("ckd suppresses the two-tone cross-term") {
  const std::size_t n = 256;
  const double fs = 256.0;
  const std::size_t bin_a = 16, bin_b = 48;  // analytic bins
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = on_bin_tone(n, bin_a)[i] + on_bin_tone(n, bin_b)[i];

  auto w = wvd(one_channel(x), fs);
  TfrConfig cfg;  // D = E = 0.1
  auto c = compute_ckd_tfr(one_channel(x), cfg, fs);

  // Cross-term lives midway between the auto-terms.
  const std::size_t mid = bin_a + bin_b;  // freq-bin scale is 2x analytic bins
  auto band_energy = [mid](const Matrix& m) {
    double acc = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r)
      for (std::size_t col = mid - 4; col <= mid + 4; ++col) acc += std::abs(m.at(r, col));
    return acc;
  };
  double raw = band_energy(w.channels[0]);
  double smoothed = band_energy(c.channels[0]);
  CHECK(smoothed < 0.5 * raw);
}

TEST_CASE("tfr downsampling block-averages to the configured side") {
  Tfr t;
  t.time_step_s = 1.0 / 20000.0;
  t.freq_step_hz = 5.0;
  t.channels.push_back(Matrix(2000, 2048, 1.5));
  auto small = downsample_tfr(t, 0.064);
  REQUIRE(small.channels.size() == 1);
  CHECK(small.channels[0].rows == 128);
  CHECK(small.channels[0].cols == 128);
  for (double v : small.channels[0].data) CHECK(v == doctest::Approx(1.5));

  auto same = downsample_tfr(t, 1.0);
  CHECK(same.channels[0].rows == 2000);

  CHECK_THROWS_AS(downsample_tfr(t, 0.0004), Error);  // M < 2
}

TEST_CASE("compute_ckd_tfr applies the configured downsampling") {
  // 2000-sample segment at lambda 0.064 -> 128 x 128 per channel.
  auto x = random_signal(2000, 9);
  TfrConfig cfg;
  cfg.downsample_factor = 0.064;
  auto t = compute_ckd_tfr(one_channel(std::move(x)), cfg, 20000.0);
  CHECK(t.channels[0].rows == 128);
  CHECK(t.channels[0].cols == 128);
}

TEST_CASE("tfr computation is deterministic") {
  auto x = random_signal(128, 77);
  TfrConfig cfg;
  auto a = compute_ckd_tfr(one_channel(x), cfg, 128.0);
  auto b = compute_ckd_tfr(one_channel(x), cfg, 128.0);
  CHECK(a.channels[0].data == b.channels[0].data);
}

TEST_CASE("raw tfr round trip") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "ddf_tfr_io";
  fs::create_directories(dir);

  auto x = random_signal(64, 4);
  TfrConfig cfg;
  auto t = compute_ckd_tfr(one_channel(std::move(x)), cfg, 64.0);
  auto path = (dir / "t.bin").string();
  save_tfr_raw(t, path);
  auto back = load_tfr_raw(path);
  REQUIRE(back.channels.size() == 1);
  CHECK(back.time_step_s == t.time_step_s);
  CHECK(back.freq_step_hz == t.freq_step_hz);
  for (std::size_t i = 0; i < t.channels[0].data.size(); ++i)
    CHECK(static_cast<float>(back.channels[0].data[i]) ==
          static_cast<float>(t.channels[0].data[i]));
  fs::remove_all(dir);
}
