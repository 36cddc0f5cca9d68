#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddf/errors.hpp"

namespace ddf::signal {

// Multichannel time-domain recording. All channels share one length and one
// sample rate; samples are stored as doubles regardless of the ingest format.
struct Recording {
  std::vector<std::vector<double>> channels;
  double sample_rate_hz = 0.0;

  int channel_count() const { return static_cast<int>(channels.size()); }
  std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
  double duration_s() const { return sample_rate_hz > 0 ? static_cast<double>(length()) / sample_rate_hz : 0.0; }

  void validate() const;
};

struct NoiseSpec {
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

// FIR filter with its group delay, so filtering can compensate the shift.
struct FilterSpec {
  std::vector<double> taps;
  int group_delay_samples = 0;
};

// One classification unit: Q x (L*fs) window of a recording.
struct Segment {
  std::vector<std::vector<double>> channels;

  std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
  int channel_count() const { return static_cast<int>(channels.size()); }
};

struct SegmentSet {
  std::vector<Segment> segments;
  double segment_len_s = 0.0;
  double sample_rate_hz = 0.0;

  std::size_t count() const { return segments.size(); }
};

// Adds white Gaussian noise scaled so the realized per-channel SNR equals
// spec.snr_db exactly. Deterministic given spec.seed.
Recording add_noise(const Recording& clean, const NoiseSpec& spec);

// Linear convolution with the taps, shifted left by the group delay and
// truncated to the original length.
Recording apply_filter(const Recording& rec, const FilterSpec& filt);

// Symmetric Hamming windowed-sinc lowpass; num_taps must be odd.
FilterSpec design_lowpass(double cutoff_hz, int num_taps, double sample_rate_hz);

// Rational-ratio resampling to target_rate_hz (windowed-sinc prefilter,
// polyphase evaluation). Upsampling is rejected.
Recording decimate(const Recording& rec, double target_rate_hz);

// Non-overlapping consecutive segments of duration segment_len_s; the
// trailing remainder is dropped.
SegmentSet segment(const Recording& rec, double segment_len_s);

double channel_energy(const std::vector<double>& samples);

// --- file ingest/egress ---------------------------------------------------
// CSV: one column per channel with a `ch0,ch1,...` header row.
// Raw: little-endian float32, channel-interleaved frames.
// Both use a JSON sidecar (same stem, .json extension) carrying
// sample_rate_hz, and channels for the raw format.
Recording load_recording_csv(const std::string& csv_path);
Recording load_recording_raw(const std::string& bin_path);
Recording load_recording(const std::string& path);
void save_recording_csv(const Recording& rec, const std::string& csv_path);
void save_recording_raw(const Recording& rec, const std::string& bin_path);

}  // namespace ddf::signal
