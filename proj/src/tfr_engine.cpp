#include "ddf/tfr_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ddf/errors.hpp"
#include "ddf/fft.hpp"

namespace ddf::tfr {

namespace {

using cplx = std::complex<double>;

// Signed wrap of an FFT-ordered index into [-n/2, n/2).
inline std::ptrdiff_t wrap_index(std::size_t i, std::size_t n) {
  return i < n / 2 ? static_cast<std::ptrdiff_t>(i)
                   : static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(n);
}

std::vector<double> fft_order_grid(std::size_t n) {
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i)
    grid[i] = static_cast<double>(wrap_index(i, n)) / (static_cast<double>(n) / 2.0);
  return grid;
}

double kernel_value(double pos, double c, double cutoff) {
  if (std::abs(pos) >= cutoff) return 0.0;
  return std::exp(c + c * cutoff * cutoff / (pos * pos - cutoff * cutoff));
}

// Instantaneous autocorrelation, lag-major: rows are wrapped lag indices m,
// cols are time n. K[m][n] = z[n+m] conj(z[n-m]), zero where either index
// falls outside the segment.
CMatrix autocorrelation_lag_major(const std::vector<cplx>& z) {
  const std::size_t n = z.size();
  CMatrix k(n, n);
  for (std::size_t mi = 0; mi < n; ++mi) {
    std::ptrdiff_t m = wrap_index(mi, n);
    cplx* row = k.row(mi);
    std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, std::max(-m, m));
    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1 + std::min<std::ptrdiff_t>(0, std::min(-m, m));
    for (std::ptrdiff_t t = lo; t <= hi; ++t)
      row[t] = z[static_cast<std::size_t>(t + m)] * std::conj(z[static_cast<std::size_t>(t - m)]);
  }
  return k;
}

// One channel of the smoothed distribution at full resolution. Returns the
// raw (unscaled) real matrix, rows = time (npad), cols = frequency (npad).
Matrix smoothed_tfd_channel(const std::vector<cplx>& z, const std::vector<double>& g1,
                            const std::vector<double>& g2, double* imag_residue) {
  const std::size_t n = z.size();

  // Lag-major so both FFT passes along time/Doppler run over contiguous rows.
  CMatrix a = autocorrelation_lag_major(z);
  std::vector<cplx> buf(n);
  for (std::size_t mi = 0; mi < n; ++mi) {
    cplx* row = a.row(mi);
    buf.assign(row, row + n);
    fft_pow2_inplace(buf, false);  // time -> Doppler
    const double ge = g2[mi];
    for (std::size_t v = 0; v < n; ++v) buf[v] *= ge * g1[v];
    fft_pow2_inplace(buf, true);  // Doppler -> time (unscaled inverse)
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) row[t] = buf[t] * inv_n;
  }

  // Lag -> frequency along each time column.
  Matrix out(n, n);
  double max_abs = 0.0;
  double max_imag = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t mi = 0; mi < n; ++mi) buf[mi] = a.at(mi, t);
    fft_pow2_inplace(buf, false);
    double* row = out.row(t);
    for (std::size_t f = 0; f < n; ++f) {
      row[f] = buf[f].real();
      max_abs = std::max(max_abs, std::abs(buf[f].real()));
      max_imag = std::max(max_imag, std::abs(buf[f].imag()));
    }
  }
  if (imag_residue != nullptr) *imag_residue = max_abs > 0.0 ? max_imag / max_abs : 0.0;
  return out;
}

Tfr compute_tfd(const signal::Segment& seg, double sample_rate_hz, double lambda,
                const std::vector<double>* g1_override, const std::vector<double>* g2_override,
                const CkdParams* params, double* imag_residue) {
  const std::size_t n = seg.length();
  if (n < 2) raise(Errc::degenerate_length, "segment shorter than 2 samples");
  if (!(sample_rate_hz > 0.0)) raise(Errc::invalid_spec, "sample_rate_hz must be positive");
  if (!(lambda > 0.0) || lambda > 1.0) raise(Errc::invalid_spec, "downsample factor must be in (0,1]");

  const std::size_t npad = next_power_of_two(n);

  std::vector<double> g1, g2;
  if (params != nullptr) {
    auto grids = ckd_kernel(*params, fft_order_grid(npad), fft_order_grid(npad));
    g1 = std::move(grids.first);
    g2 = std::move(grids.second);
  } else {
    g1 = *g1_override;
    g2 = *g2_override;
  }

  Tfr tfr;
  tfr.time_step_s = 1.0 / sample_rate_hz;
  // Lag runs in steps of two samples, so the frequency axis spans [0, fs/2).
  tfr.freq_step_hz = sample_rate_hz / (2.0 * static_cast<double>(npad));
  tfr.channels.reserve(seg.channels.size());

  const double scale = 2.0 / sample_rate_hz;  // dtau of the integer-lag sampling
  double worst_residue = 0.0;
  for (const auto& ch : seg.channels) {
    std::vector<double> padded(ch);
    padded.resize(npad, 0.0);
    auto z = analytic_channel(padded);
    double residue = 0.0;
    Matrix full = smoothed_tfd_channel(z, g1, g2, &residue);
    worst_residue = std::max(worst_residue, residue);

    // Crop the time axis back to the segment length.
    Matrix cropped(n, npad);
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t f = 0; f < npad; ++f) cropped.at(t, f) = full.at(t, f) * scale;
    tfr.channels.push_back(std::move(cropped));
  }
  if (imag_residue != nullptr) *imag_residue = worst_residue;

  if (lambda < 1.0) return downsample_tfr(tfr, lambda);
  return tfr;
}

}  // namespace

void CkdParams::validate() const {
  if (!(c > 0.0)) raise(Errc::invalid_params, "kernel shape c must be > 0");
  if (!(d_cutoff > 0.0) || d_cutoff > 1.0) raise(Errc::invalid_params, "d_cutoff must be in (0,1]");
  if (!(e_cutoff > 0.0) || e_cutoff > 1.0) raise(Errc::invalid_params, "e_cutoff must be in (0,1]");
}

std::vector<cplx> analytic_channel(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) raise(Errc::degenerate_length, "analytic signal needs >= 2 samples");

  std::vector<cplx> spec(n);
  for (std::size_t i = 0; i < n; ++i) spec[i] = cplx(x[i], 0.0);
  spec = fft(std::move(spec));

  // Keep DC (and Nyquist for even n), double positive bins, zero the rest.
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < half; ++k) spec[k] *= 2.0;
  if (n % 2 == 1 && half >= 1) spec[half] *= 2.0;
  for (std::size_t k = half + 1; k < n; ++k) spec[k] = cplx(0.0, 0.0);

  return ifft(std::move(spec));
}

AnalyticSegment analytic_signal(const signal::Segment& seg) {
  AnalyticSegment out;
  out.channels.reserve(seg.channels.size());
  for (const auto& ch : seg.channels) out.channels.push_back(analytic_channel(ch));
  return out;
}

CMatrix ambiguity_function(const std::vector<cplx>& z) {
  const std::size_t n = z.size();
  if (n < 2) raise(Errc::degenerate_length, "ambiguity function needs >= 2 samples");

  CMatrix k = autocorrelation_lag_major(z);
  // FFT each lag row over time; store Doppler-major for the (nu, tau) view.
  CMatrix a(n, n);
  std::vector<cplx> buf(n);
  for (std::size_t mi = 0; mi < n; ++mi) {
    cplx* row = k.row(mi);
    buf.assign(row, row + n);
    buf = fft(std::move(buf));
    for (std::size_t v = 0; v < n; ++v) a.at(v, mi) = buf[v];
  }
  return a;
}

std::pair<std::vector<double>, std::vector<double>> ckd_kernel(const CkdParams& params,
                                                               const std::vector<double>& doppler_grid,
                                                               const std::vector<double>& lag_grid) {
  params.validate();
  std::vector<double> g1(doppler_grid.size());
  std::vector<double> g2(lag_grid.size());
  for (std::size_t i = 0; i < doppler_grid.size(); ++i)
    g1[i] = kernel_value(doppler_grid[i], params.c, params.d_cutoff);
  for (std::size_t i = 0; i < lag_grid.size(); ++i)
    g2[i] = kernel_value(lag_grid[i], params.c, params.e_cutoff);
  return {std::move(g1), std::move(g2)};
}

Tfr compute_ckd_tfr(const signal::Segment& seg, const TfrConfig& cfg, double sample_rate_hz,
                    double* imag_residue) {
  cfg.ckd.validate();
  return compute_tfd(seg, sample_rate_hz, cfg.downsample_factor, nullptr, nullptr, &cfg.ckd,
                     imag_residue);
}

Tfr wvd(const signal::Segment& seg, double sample_rate_hz, double* imag_residue) {
  const std::size_t npad = next_power_of_two(seg.length());
  std::vector<double> ones(npad, 1.0);
  return compute_tfd(seg, sample_rate_hz, 1.0, &ones, &ones, nullptr, imag_residue);
}

Tfr downsample_tfr(const Tfr& in, double factor) {
  if (!(factor > 0.0) || factor > 1.0) raise(Errc::invalid_spec, "factor must be in (0,1]");
  if (factor == 1.0) return in;
  if (in.channels.empty()) raise(Errc::invalid_spec, "empty TFR");

  const std::size_t rows = in.channels.front().rows;
  const std::size_t cols = in.channels.front().cols;
  const auto m = static_cast<std::size_t>(std::llround(factor * static_cast<double>(rows)));
  if (m < 2) raise(Errc::factor_too_small, "downsampled side would be < 2");
  if (m > rows || m > cols) raise(Errc::factor_too_small, "block averaging cannot upsample");

  auto boundary = [](std::size_t i, std::size_t n, std::size_t blocks) {
    return (i * n) / blocks;
  };

  Tfr out;
  out.time_step_s = in.time_step_s * static_cast<double>(rows) / static_cast<double>(m);
  out.freq_step_hz = in.freq_step_hz * static_cast<double>(cols) / static_cast<double>(m);
  out.channels.reserve(in.channels.size());
  for (const auto& ch : in.channels) {
    Matrix small(m, m);
    for (std::size_t bi = 0; bi < m; ++bi) {
      std::size_t r0 = boundary(bi, rows, m), r1 = boundary(bi + 1, rows, m);
      for (std::size_t bj = 0; bj < m; ++bj) {
        std::size_t c0 = boundary(bj, cols, m), c1 = boundary(bj + 1, cols, m);
        double acc = 0.0;
        for (std::size_t r = r0; r < r1; ++r)
          for (std::size_t c = c0; c < c1; ++c) acc += ch.at(r, c);
        small.at(bi, bj) = acc / (static_cast<double>(r1 - r0) * static_cast<double>(c1 - c0));
      }
    }
    out.channels.push_back(std::move(small));
  }
  return out;
}

void save_tfr_csv(const Tfr& tfr, const std::string& base_path) {
  char buf[64];
  for (std::size_t q = 0; q < tfr.channels.size(); ++q) {
    std::string path = base_path + "_ch" + std::to_string(q) + ".csv";
    std::ofstream out(path);
    if (!out) raise(Errc::io_failure, "cannot write " + path);
    const auto& m = tfr.channels[q];
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c) {
        std::snprintf(buf, sizeof(buf), "%.10g", m.at(r, c));
        out << (c ? "," : "") << buf;
      }
      out << "\n";
    }
  }
}

void save_tfr_raw(const Tfr& tfr, const std::string& bin_path) {
  if (tfr.channels.empty()) raise(Errc::invalid_spec, "empty TFR");
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) raise(Errc::io_failure, "cannot write " + bin_path);
  for (const auto& m : tfr.channels)
    for (double v : m.data) {
      auto f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }

  nlohmann::json meta = {{"channels", tfr.channels.size()},
                         {"rows", tfr.channels.front().rows},
                         {"cols", tfr.channels.front().cols},
                         {"time_step_s", tfr.time_step_s},
                         {"freq_step_hz", tfr.freq_step_hz}};
  std::filesystem::path side(bin_path);
  side.replace_extension(".json");
  std::ofstream meta_out(side);
  if (!meta_out) raise(Errc::io_failure, "cannot write " + side.string());
  meta_out << meta.dump(2) << "\n";
}

Tfr load_tfr_raw(const std::string& bin_path) {
  std::filesystem::path side(bin_path);
  side.replace_extension(".json");
  std::ifstream meta_in(side);
  if (!meta_in) raise(Errc::io_failure, "missing sidecar " + side.string());
  nlohmann::json meta;
  meta_in >> meta;

  auto channels = meta.at("channels").get<std::size_t>();
  auto rows = meta.at("rows").get<std::size_t>();
  auto cols = meta.at("cols").get<std::size_t>();

  std::ifstream in(bin_path, std::ios::binary);
  if (!in) raise(Errc::io_failure, "cannot open " + bin_path);

  Tfr tfr;
  tfr.time_step_s = meta.at("time_step_s").get<double>();
  tfr.freq_step_hz = meta.at("freq_step_hz").get<double>();
  for (std::size_t q = 0; q < channels; ++q) {
    Matrix m(rows, cols);
    for (auto& v : m.data) {
      float f = 0.0f;
      in.read(reinterpret_cast<char*>(&f), sizeof(float));
      v = static_cast<double>(f);
    }
    if (!in) raise(Errc::io_failure, "short read on " + bin_path);
    tfr.channels.push_back(std::move(m));
  }
  return tfr;
}

}  // namespace ddf::tfr
