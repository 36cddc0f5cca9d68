#include "ddf/signal_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ddf/rng.hpp"

namespace ddf::signal {

namespace {

std::filesystem::path sidecar_path(const std::string& data_path) {
  std::filesystem::path p(data_path);
  p.replace_extension(".json");
  return p;
}

nlohmann::json read_sidecar(const std::string& data_path) {
  auto p = sidecar_path(data_path);
  std::ifstream in(p);
  if (!in) raise(Errc::io_failure, "missing sidecar " + p.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    raise(Errc::io_failure, "bad sidecar " + p.string() + ": " + e.what());
  }
  return j;
}

void write_sidecar(const std::string& data_path, const nlohmann::json& j) {
  auto p = sidecar_path(data_path);
  std::ofstream out(p);
  if (!out) raise(Errc::io_failure, "cannot write " + p.string());
  out << j.dump(2) << "\n";
}

}  // namespace

void Recording::validate() const {
  if (channels.empty()) raise(Errc::invalid_spec, "recording has no channels");
  if (!(sample_rate_hz > 0.0)) raise(Errc::invalid_spec, "sample_rate_hz must be positive");
  for (const auto& ch : channels) {
    if (ch.size() != channels.front().size())
      raise(Errc::invalid_spec, "channels differ in length");
  }
}

double channel_energy(const std::vector<double>& samples) {
  double e = 0.0;
  for (double v : samples) e += v * v;
  return e;
}

Recording add_noise(const Recording& clean, const NoiseSpec& spec) {
  clean.validate();
  if (!std::isfinite(spec.snr_db)) raise(Errc::invalid_spec, "snr_db must be finite");

  Recording out = clean;
  Rng rng(spec.seed);
  for (int q = 0; q < clean.channel_count(); ++q) {
    const auto& v = clean.channels[static_cast<std::size_t>(q)];
    double signal_energy = channel_energy(v);
    if (signal_energy <= 0.0)
      raise(Errc::zero_signal_energy, "channel " + std::to_string(q) + " has zero energy");

    std::vector<double> eta(v.size());
    for (auto& s : eta) s = rng.gaussian();
    double noise_energy = channel_energy(eta);
    if (noise_energy <= 0.0) raise(Errc::zero_noise_energy, "drawn noise is identically zero");

    // alpha from the realized noise energy, so the output SNR is exact.
    double alpha = std::pow(10.0, -spec.snr_db / 20.0) * std::sqrt(signal_energy / noise_energy);
    auto& o = out.channels[static_cast<std::size_t>(q)];
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = v[i] + alpha * eta[i];
  }
  return out;
}

Recording apply_filter(const Recording& rec, const FilterSpec& filt) {
  rec.validate();
  if (filt.taps.empty()) raise(Errc::invalid_spec, "filter has no taps");
  if (rec.length() <= filt.taps.size())
    raise(Errc::signal_too_short, "recording not longer than the filter");

  const auto& h = filt.taps;
  const std::size_t n = rec.length();
  Recording out;
  out.sample_rate_hz = rec.sample_rate_hz;
  out.channels.resize(rec.channels.size());

  for (std::size_t q = 0; q < rec.channels.size(); ++q) {
    const auto& x = rec.channels[q];
    auto& y = out.channels[q];
    y.assign(n, 0.0);
    // y[i] = (h * x)[i + delay], truncated to the original length.
    for (std::size_t i = 0; i < n; ++i) {
      std::ptrdiff_t center = static_cast<std::ptrdiff_t>(i) + filt.group_delay_samples;
      double acc = 0.0;
      for (std::size_t k = 0; k < h.size(); ++k) {
        std::ptrdiff_t src = center - static_cast<std::ptrdiff_t>(k);
        if (src >= 0 && src < static_cast<std::ptrdiff_t>(n)) acc += h[k] * x[static_cast<std::size_t>(src)];
      }
      y[i] = acc;
    }
  }
  return out;
}

FilterSpec design_lowpass(double cutoff_hz, int num_taps, double sample_rate_hz) {
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate_hz / 2.0))
    raise(Errc::invalid_cutoff, "cutoff must lie in (0, fs/2)");
  if (num_taps < 1 || num_taps % 2 == 0)
    raise(Errc::even_tap_count, "tap count must be odd");

  FilterSpec spec;
  spec.taps.resize(static_cast<std::size_t>(num_taps));
  spec.group_delay_samples = (num_taps - 1) / 2;

  const double fc = cutoff_hz / sample_rate_hz;  // cycles per sample
  const int mid = spec.group_delay_samples;
  // Build one half and mirror it so the symmetry is exact in the last bit.
  for (int i = 0; i <= mid; ++i) {
    int m = i - mid;
    double sinc = (m == 0) ? 2.0 * fc
                           : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (num_taps - 1));
    spec.taps[static_cast<std::size_t>(i)] = sinc * window;
    spec.taps[static_cast<std::size_t>(num_taps - 1 - i)] = sinc * window;
  }
  // Unit DC gain.
  double sum = std::accumulate(spec.taps.begin(), spec.taps.end(), 0.0);
  for (auto& t : spec.taps) t /= sum;
  return spec;
}

Recording decimate(const Recording& rec, double target_rate_hz) {
  rec.validate();
  if (target_rate_hz > rec.sample_rate_hz)
    raise(Errc::upsample_requested, "target rate above the source rate");
  if (target_rate_hz == rec.sample_rate_hz) return rec;

  // Find a small rational up/down = target/source.
  const int max_den = 1024;
  double ratio = target_rate_hz / rec.sample_rate_hz;
  int up = 0, down = 0;
  double best_err = 1e-9;
  for (int d = 1; d <= max_den; ++d) {
    int n = static_cast<int>(std::lround(ratio * d));
    if (n < 1) continue;
    double err = std::abs(ratio - static_cast<double>(n) / d);
    if (err < best_err) {
      up = n;
      down = d;
      best_err = err;
      if (err == 0.0) break;
    }
  }
  if (up == 0) raise(Errc::irrational_ratio, "rate ratio has no small rational form");
  int g = std::gcd(up, down);
  up /= g;
  down /= g;

  // Windowed-sinc prefilter at the tighter Nyquist, designed at the
  // upsampled rate with gain `up` to preserve amplitudes.
  const int half = 10 * std::max(up, down);
  const int num_taps = 2 * half + 1;
  const double fc = 0.5 / std::max(up, down);  // cycles per upsampled sample
  std::vector<double> taps(static_cast<std::size_t>(num_taps));
  for (int i = 0; i <= half; ++i) {
    int m = i - half;
    double sinc = (m == 0) ? 2.0 * fc
                           : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (num_taps - 1));
    taps[static_cast<std::size_t>(i)] = sinc * window;
    taps[static_cast<std::size_t>(num_taps - 1 - i)] = sinc * window;
  }
  double dc = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (auto& t : taps) t = t / dc * static_cast<double>(up);

  const std::size_t n_in = rec.length();
  const std::size_t n_out = (n_in * static_cast<std::size_t>(up)) / static_cast<std::size_t>(down);
  if (n_out == 0) raise(Errc::signal_too_short, "recording too short to resample");

  Recording out;
  out.sample_rate_hz = rec.sample_rate_hz * static_cast<double>(up) / static_cast<double>(down);
  out.channels.resize(rec.channels.size());

  for (std::size_t q = 0; q < rec.channels.size(); ++q) {
    const auto& x = rec.channels[q];
    auto& y = out.channels[q];
    y.assign(n_out, 0.0);
    // Output sample i sits at upsampled index i*down; only every `up`-th
    // upsampled sample is nonzero, so walk the taps in steps of `up`.
    for (std::size_t i = 0; i < n_out; ++i) {
      std::intmax_t center = static_cast<std::intmax_t>(i) * down + half;
      double acc = 0.0;
      std::intmax_t rem = center % up;
      for (std::intmax_t k = rem; k < num_taps; k += up) {
        std::intmax_t src = (center - k) / up;
        if (src >= 0 && src < static_cast<std::intmax_t>(n_in))
          acc += taps[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(src)];
      }
      y[i] = acc;
    }
  }
  return out;
}

SegmentSet segment(const Recording& rec, double segment_len_s) {
  rec.validate();
  double samples_f = segment_len_s * rec.sample_rate_hz;
  auto samples = static_cast<std::size_t>(std::llround(samples_f));
  if (samples < 2 || std::abs(samples_f - static_cast<double>(samples)) > 1e-6)
    raise(Errc::invalid_spec, "segment length must span a whole number of samples >= 2");

  const std::size_t p = rec.length() / samples;
  if (p == 0) raise(Errc::segment_too_long, "segment longer than the recording");

  SegmentSet set;
  set.segment_len_s = segment_len_s;
  set.sample_rate_hz = rec.sample_rate_hz;
  set.segments.resize(p);
  for (std::size_t s = 0; s < p; ++s) {
    auto& seg = set.segments[s];
    seg.channels.resize(rec.channels.size());
    for (std::size_t q = 0; q < rec.channels.size(); ++q) {
      const auto& ch = rec.channels[q];
      seg.channels[q].assign(ch.begin() + static_cast<std::ptrdiff_t>(s * samples),
                             ch.begin() + static_cast<std::ptrdiff_t>((s + 1) * samples));
    }
  }
  return set;
}

Recording load_recording_csv(const std::string& csv_path) {
  auto meta = read_sidecar(csv_path);
  if (!meta.contains("sample_rate_hz")) raise(Errc::io_failure, "sidecar lacks sample_rate_hz");

  std::ifstream in(csv_path);
  if (!in) raise(Errc::io_failure, "cannot open " + csv_path);

  std::string line;
  if (!std::getline(in, line)) raise(Errc::io_failure, "empty csv " + csv_path);
  std::size_t channels = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;

  Recording rec;
  rec.sample_rate_hz = meta["sample_rate_hz"].get<double>();
  rec.channels.resize(channels);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t q = 0; q < channels; ++q) {
      if (!std::getline(ss, cell, ','))
        raise(Errc::io_failure, "short row in " + csv_path);
      rec.channels[q].push_back(std::stod(cell));
    }
  }
  rec.validate();
  return rec;
}

Recording load_recording_raw(const std::string& bin_path) {
  auto meta = read_sidecar(bin_path);
  if (!meta.contains("sample_rate_hz") || !meta.contains("channels"))
    raise(Errc::io_failure, "sidecar needs sample_rate_hz and channels");
  auto channels = meta["channels"].get<std::size_t>();
  if (channels == 0) raise(Errc::io_failure, "channels must be >= 1");

  std::ifstream in(bin_path, std::ios::binary);
  if (!in) raise(Errc::io_failure, "cannot open " + bin_path);
  in.seekg(0, std::ios::end);
  auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::size_t values = bytes / sizeof(float);
  if (values % channels != 0) raise(Errc::io_failure, "raw size not a multiple of the frame size");

  std::vector<float> buf(values);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(values * sizeof(float)));
  if (!in) raise(Errc::io_failure, "short read on " + bin_path);

  Recording rec;
  rec.sample_rate_hz = meta["sample_rate_hz"].get<double>();
  rec.channels.assign(channels, {});
  std::size_t frames = values / channels;
  for (auto& ch : rec.channels) ch.reserve(frames);
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t q = 0; q < channels; ++q)
      rec.channels[q].push_back(static_cast<double>(buf[i * channels + q]));
  rec.validate();
  return rec;
}

Recording load_recording(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".csv") return load_recording_csv(path);
  return load_recording_raw(path);
}

void save_recording_csv(const Recording& rec, const std::string& csv_path) {
  rec.validate();
  std::ofstream out(csv_path);
  if (!out) raise(Errc::io_failure, "cannot write " + csv_path);
  for (int q = 0; q < rec.channel_count(); ++q) out << (q ? "," : "") << "ch" << q;
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < rec.length(); ++i) {
    for (std::size_t q = 0; q < rec.channels.size(); ++q) {
      std::snprintf(buf, sizeof(buf), "%.10g", rec.channels[q][i]);
      out << (q ? "," : "") << buf;
    }
    out << "\n";
  }
  write_sidecar(csv_path, {{"sample_rate_hz", rec.sample_rate_hz}, {"channels", rec.channel_count()}});
}

void save_recording_raw(const Recording& rec, const std::string& bin_path) {
  rec.validate();
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) raise(Errc::io_failure, "cannot write " + bin_path);
  for (std::size_t i = 0; i < rec.length(); ++i) {
    for (std::size_t q = 0; q < rec.channels.size(); ++q) {
      auto v = static_cast<float>(rec.channels[q][i]);
      out.write(reinterpret_cast<const char*>(&v), sizeof(float));
    }
  }
  write_sidecar(bin_path, {{"sample_rate_hz", rec.sample_rate_hz}, {"channels", rec.channel_count()}});
}

}  // namespace ddf::signal
