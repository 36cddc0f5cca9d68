#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "ddf/matrix.hpp"
#include "ddf/signal_core.hpp"

namespace ddf::tfr {

// Complex extension of a segment with no negative-frequency content.
struct AnalyticSegment {
  std::vector<std::vector<std::complex<double>>> channels;
};

// Compact-support kernel parameters: c is the shape, d_cutoff/e_cutoff the
// normalized Doppler and lag cutoffs in (0, 1].
struct CkdParams {
  double c = 1.0;
  double d_cutoff = 0.1;
  double e_cutoff = 0.1;

  void validate() const;
};

// Real time-frequency matrix per channel: rows = time bins, cols = frequency
// bins covering [0, fs/2).
struct Tfr {
  std::vector<Matrix> channels;
  double time_step_s = 0.0;
  double freq_step_hz = 0.0;
};

struct TfrConfig {
  double downsample_factor = 1.0;  // lambda in (0, 1]
  CkdParams ckd;
};

std::vector<std::complex<double>> analytic_channel(const std::vector<double>& x);
AnalyticSegment analytic_signal(const signal::Segment& seg);

// Doppler-lag transform of the instantaneous autocorrelation
// K[n,m] = z[n+m] conj(z[n-m]) (integer-lag convention, zero-padded edges).
// Rows are Doppler bins in FFT order, cols are wrapped lag indices.
CMatrix ambiguity_function(const std::vector<std::complex<double>>& z);

// Separable kernel samples over grids normalized to [-1, 1]; exact zeros
// outside the compact supports.
std::pair<std::vector<double>, std::vector<double>> ckd_kernel(const CkdParams& params,
                                                               const std::vector<double>& doppler_grid,
                                                               const std::vector<double>& lag_grid);

// Full CKD pipeline per channel: analytic signal -> ambiguity function ->
// kernel multiply -> 2D inverse -> real part; downsampled when lambda < 1.
// The segment is zero-padded to the next power of two internally and the
// time axis is cropped back. imag_residue, when given, receives the largest
// |imag| left before the real cast (per unit of the max |value|).
Tfr compute_ckd_tfr(const signal::Segment& seg, const TfrConfig& cfg, double sample_rate_hz,
                    double* imag_residue = nullptr);

// Unsmoothed special case (kernels identically one).
Tfr wvd(const signal::Segment& seg, double sample_rate_hz, double* imag_residue = nullptr);

// Non-overlapping block averaging of each channel down to M x M where
// M = round(factor * rows).
Tfr downsample_tfr(const Tfr& in, double factor);

// --- file egress/ingest for the CLI ---------------------------------------
// CSV: one file per channel (<base>_ch<q>.csv). Raw: float32 matrices back to
// back with a JSON sidecar carrying shape and steps.
void save_tfr_csv(const Tfr& tfr, const std::string& base_path);
void save_tfr_raw(const Tfr& tfr, const std::string& bin_path);
Tfr load_tfr_raw(const std::string& bin_path);

}  // namespace ddf::tfr
