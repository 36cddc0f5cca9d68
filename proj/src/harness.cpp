#include "ddf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "ddf/errors.hpp"
#include "ddf/parallel.hpp"
#include "ddf/rng.hpp"

namespace ddf::harness {

namespace {

using nlohmann::json;

std::vector<double> make_segment_wave(const ClassDef& def, std::size_t samples, double fs, Rng& rng,
                                      double progress) {
  std::vector<double> x(samples);
  const double dt = 1.0 / fs;
  const double duration = static_cast<double>(samples) * dt;

  const double drift = 1.0 + def.freq_drift_frac * (2.0 * progress - 1.0);
  const double fj = drift * (1.0 + def.freq_jitter_frac * rng.uniform(-1.0, 1.0));
  const double amp = def.amplitude * (1.0 + def.amp_jitter_frac * rng.uniform(-1.0, 1.0));
  const double phase = def.phase_jitter_rad * rng.uniform(-1.0, 1.0);

  switch (def.waveform) {
    case Waveform::up_chirp:
    case Waveform::down_chirp: {
      const double f0 = def.f_start_hz * fj;
      const double f1 = def.f_end_hz * fj;
      const double k = (f1 - f0) / duration;
      for (std::size_t i = 0; i < samples; ++i) {
        double t = static_cast<double>(i) * dt;
        x[i] = amp * std::sin(2.0 * std::numbers::pi * (f0 * t + 0.5 * k * t * t) + phase);
      }
      break;
    }
    case Waveform::am_tone: {
      const double fc = def.f_start_hz * fj;
      const double fm = def.am_rate_hz;
      const double mod_phase = 2.0 * std::numbers::pi * rng.uniform();
      for (std::size_t i = 0; i < samples; ++i) {
        double t = static_cast<double>(i) * dt;
        double env = 1.0 + def.am_depth * std::sin(2.0 * std::numbers::pi * fm * t + mod_phase);
        x[i] = amp * env * std::sin(2.0 * std::numbers::pi * fc * t + phase);
      }
      break;
    }
    case Waveform::burst: {
      const double tc = duration * (def.burst_center_frac + 0.1 * rng.uniform(-1.0, 1.0));
      const double sigma = duration * def.burst_width_frac * fj;
      for (std::size_t i = 0; i < samples; ++i) {
        double t = static_cast<double>(i) * dt;
        double arg = (t - tc) / sigma;
        x[i] = amp * std::exp(-0.5 * arg * arg) * rng.gaussian();
      }
      break;
    }
  }
  return x;
}

std::string noise_tag_of(const SynthSpec& spec) {
  if (!spec.snr_db.has_value()) return "clean";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%gdB", *spec.snr_db);
  return buf;
}

json classifier_to_json(const clf::ClassifierSpec& s) {
  return {{"kind", clf::kind_to_string(s.kind)},  {"learning_rate", s.learning_rate},
          {"epochs", s.epochs},                   {"hidden_units", s.hidden_units},
          {"l2", s.l2},                           {"k_neighbors", s.k_neighbors}};
}

clf::ClassifierSpec classifier_from_json(const json& j) {
  clf::ClassifierSpec s;
  s.kind = clf::kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("learning_rate")) s.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("epochs")) s.epochs = j["epochs"].get<int>();
  if (j.contains("hidden_units")) s.hidden_units = j["hidden_units"].get<int>();
  if (j.contains("l2")) s.l2 = j["l2"].get<double>();
  if (j.contains("k_neighbors")) s.k_neighbors = j["k_neighbors"].get<int>();
  return s;
}

json class_def_to_json(const ClassDef& d) {
  return {{"waveform", waveform_to_string(d.waveform)},
          {"f_start_hz", d.f_start_hz},
          {"f_end_hz", d.f_end_hz},
          {"am_rate_hz", d.am_rate_hz},
          {"am_depth", d.am_depth},
          {"burst_center_frac", d.burst_center_frac},
          {"burst_width_frac", d.burst_width_frac},
          {"amplitude", d.amplitude},
          {"phase_jitter_rad", d.phase_jitter_rad},
          {"freq_jitter_frac", d.freq_jitter_frac},
          {"amp_jitter_frac", d.amp_jitter_frac},
          {"freq_drift_frac", d.freq_drift_frac}};
}

ClassDef class_def_from_json(const json& j) {
  ClassDef d;
  d.waveform = waveform_from_string(j.at("waveform").get<std::string>());
  auto get = [&j](const char* key, double fallback) {
    return j.contains(key) ? j[key].get<double>() : fallback;
  };
  d.f_start_hz = get("f_start_hz", d.f_start_hz);
  d.f_end_hz = get("f_end_hz", d.f_end_hz);
  d.am_rate_hz = get("am_rate_hz", d.am_rate_hz);
  d.am_depth = get("am_depth", d.am_depth);
  d.burst_center_frac = get("burst_center_frac", d.burst_center_frac);
  d.burst_width_frac = get("burst_width_frac", d.burst_width_frac);
  d.amplitude = get("amplitude", d.amplitude);
  d.phase_jitter_rad = get("phase_jitter_rad", d.phase_jitter_rad);
  d.freq_jitter_frac = get("freq_jitter_frac", d.freq_jitter_frac);
  d.amp_jitter_frac = get("amp_jitter_frac", d.amp_jitter_frac);
  d.freq_drift_frac = get("freq_drift_frac", d.freq_drift_frac);
  return d;
}

json synth_to_json(const SynthSpec& s) {
  json j = {{"class_count", s.class_count},
            {"segments_per_class", s.segments_per_class},
            {"segment_len_s", s.segment_len_s},
            {"sample_rate_hz", s.sample_rate_hz},
            {"seed", s.seed}};
  if (s.snr_db.has_value())
    j["snr_db"] = *s.snr_db;
  else
    j["snr_db"] = nullptr;
  if (!s.classes.empty()) {
    json arr = json::array();
    for (const auto& c : s.classes) arr.push_back(class_def_to_json(c));
    j["classes"] = arr;
  }
  return j;
}

SynthSpec synth_from_json(const json& j) {
  SynthSpec s;
  if (j.contains("class_count")) s.class_count = j["class_count"].get<int>();
  if (j.contains("segments_per_class")) s.segments_per_class = j["segments_per_class"].get<int>();
  if (j.contains("segment_len_s")) s.segment_len_s = j["segment_len_s"].get<double>();
  if (j.contains("sample_rate_hz")) s.sample_rate_hz = j["sample_rate_hz"].get<double>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("snr_db") && !j["snr_db"].is_null()) s.snr_db = j["snr_db"].get<double>();
  if (j.contains("classes"))
    for (const auto& c : j["classes"]) s.classes.push_back(class_def_from_json(c));
  return s;
}

}  // namespace

Waveform waveform_from_string(const std::string& s) {
  if (s == "up_chirp") return Waveform::up_chirp;
  if (s == "down_chirp") return Waveform::down_chirp;
  if (s == "am_tone") return Waveform::am_tone;
  if (s == "burst") return Waveform::burst;
  raise(Errc::invalid_spec, "unknown waveform '" + s + "'");
}

const char* waveform_to_string(Waveform w) {
  switch (w) {
    case Waveform::up_chirp: return "up_chirp";
    case Waveform::down_chirp: return "down_chirp";
    case Waveform::am_tone: return "am_tone";
    case Waveform::burst: return "burst";
  }
  return "?";
}

void SynthSpec::validate() const {
  if (class_count < 2) raise(Errc::invalid_spec, "class_count must be >= 2");
  if (segments_per_class < 1) raise(Errc::invalid_spec, "segments_per_class must be >= 1");
  if (!(segment_len_s > 0.0)) raise(Errc::invalid_spec, "segment_len_s must be positive");
  if (!(sample_rate_hz > 0.0)) raise(Errc::invalid_spec, "sample_rate_hz must be positive");
  if (!classes.empty() && static_cast<int>(classes.size()) != class_count)
    raise(Errc::invalid_spec, "classes list must match class_count");
  if (snr_db.has_value() && !std::isfinite(*snr_db))
    raise(Errc::invalid_spec, "snr_db must be finite");
}

std::vector<ClassDef> default_class_defs(int class_count, double sample_rate_hz) {
  // Four base families; the two chirps share a band so only the slope sign
  // separates them, which is where the TF view earns its keep.
  const double fs = sample_rate_hz;
  std::vector<ClassDef> base(4);
  base[0].waveform = Waveform::up_chirp;
  base[0].f_start_hz = 0.11 * fs;
  base[0].f_end_hz = 0.23 * fs;
  base[0].freq_jitter_frac = 0.08;  // the band wanders; only the slope is stable
  base[0].freq_drift_frac = 0.1;
  base[1].waveform = Waveform::down_chirp;
  base[1].f_start_hz = 0.23 * fs;
  base[1].f_end_hz = 0.11 * fs;
  base[1].freq_jitter_frac = 0.08;
  base[1].freq_drift_frac = 0.1;
  base[2].waveform = Waveform::am_tone;
  base[2].f_start_hz = 0.17 * fs;
  base[2].am_rate_hz = 24.0 * fs / 2560.0;
  base[2].am_depth = 0.8;
  base[2].freq_jitter_frac = 0.08;
  base[2].freq_drift_frac = 0.1;
  base[3].waveform = Waveform::burst;
  base[3].burst_center_frac = 0.5;
  base[3].burst_width_frac = 0.15;

  std::vector<ClassDef> defs;
  defs.reserve(static_cast<std::size_t>(class_count));
  for (int c = 0; c < class_count; ++c) {
    ClassDef d = base[static_cast<std::size_t>(c % 4)];
    // Extra classes shift their band upward so every class stays distinct.
    double shift = 0.05 * fs * static_cast<double>(c / 4);
    d.f_start_hz += shift;
    d.f_end_hz += (d.waveform == Waveform::up_chirp || d.waveform == Waveform::down_chirp) ? shift : 0.0;
    defs.push_back(d);
  }
  return defs;
}

SynthSpec load_synth_spec(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) raise(Errc::io_failure, "cannot open " + json_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    raise(Errc::invalid_spec, std::string("bad synth spec json: ") + e.what());
  }
  try {
    if (j.contains("dataset") && j["dataset"].contains("synth"))
      return synth_from_json(j["dataset"]["synth"]);
    return synth_from_json(j);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(Errc::invalid_spec, std::string("bad synth spec json: ") + e.what());
  }
}

SynthDataset synth_dataset(const SynthSpec& spec) {
  spec.validate();

  SynthDataset ds;
  ds.spec = spec;
  if (ds.spec.classes.empty())
    ds.spec.classes = default_class_defs(spec.class_count, spec.sample_rate_hz);

  auto samples_f = spec.segment_len_s * spec.sample_rate_hz;
  auto samples = static_cast<std::size_t>(std::llround(samples_f));
  if (samples < 2) raise(Errc::invalid_spec, "segment shorter than 2 samples");

  ds.class_recordings.reserve(static_cast<std::size_t>(spec.class_count));
  for (int c = 0; c < spec.class_count; ++c) {
    Rng rng(Rng::mix(spec.seed, static_cast<std::uint64_t>(c)));
    signal::Recording rec;
    rec.sample_rate_hz = spec.sample_rate_hz;
    rec.channels.resize(1);
    rec.channels[0].reserve(static_cast<std::size_t>(spec.segments_per_class) * samples);
    for (int s = 0; s < spec.segments_per_class; ++s) {
      double progress = spec.segments_per_class > 1
                            ? static_cast<double>(s) / static_cast<double>(spec.segments_per_class - 1)
                            : 0.5;
      auto wave = make_segment_wave(ds.spec.classes[static_cast<std::size_t>(c)], samples,
                                    spec.sample_rate_hz, rng, progress);
      if (spec.snr_db.has_value()) {
        signal::Recording one;
        one.sample_rate_hz = spec.sample_rate_hz;
        one.channels.push_back(std::move(wave));
        signal::NoiseSpec noise{*spec.snr_db,
                                Rng::mix(spec.seed, 0x10000 + static_cast<std::uint64_t>(c) * 65536 +
                                                        static_cast<std::uint64_t>(s))};
        one = signal::add_noise(one, noise);
        wave = std::move(one.channels[0]);
      }
      rec.channels[0].insert(rec.channels[0].end(), wave.begin(), wave.end());
    }
    ds.class_recordings.push_back(std::move(rec));
  }
  return ds;
}

void save_dataset(const SynthDataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);

  json manifest = synth_to_json(ds.spec);
  manifest["files"] = json::array();
  for (std::size_t c = 0; c < ds.class_recordings.size(); ++c) {
    std::string name = "class" + std::to_string(c) + ".bin";
    signal::save_recording_raw(ds.class_recordings[c], (fs::path(dir) / name).string());
    manifest["files"].push_back(name);
  }
  std::ofstream out(fs::path(dir) / "dataset.json");
  if (!out) raise(Errc::io_failure, "cannot write dataset.json under " + dir);
  out << manifest.dump(2) << "\n";
}

SynthDataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "dataset.json");
  if (!in) raise(Errc::io_failure, "missing dataset.json under " + dir);
  json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    raise(Errc::io_failure, std::string("bad dataset.json: ") + e.what());
  }

  SynthDataset ds;
  ds.spec = synth_from_json(manifest);
  for (const auto& name : manifest.at("files")) {
    ds.class_recordings.push_back(
        signal::load_recording_raw((fs::path(dir) / name.get<std::string>()).string()));
  }
  if (ds.class_recordings.empty()) raise(Errc::io_failure, "dataset has no recordings");
  return ds;
}

std::vector<std::vector<int>> SplitPlan::unlabeled_train() const {
  return {splits[1], splits[2], splits[3], splits[4], splits[5], splits[6]};
}

std::vector<int> SplitPlan::test_ids() const {
  std::vector<int> out = splits[8];
  out.insert(out.end(), splits[9].begin(), splits[9].end());
  return out;
}

SplitPlan make_temporal_splits(const std::vector<std::vector<int>>& ids_per_class) {
  SplitPlan plan;
  for (const auto& ids : ids_per_class) {
    const std::size_t n = ids.size();
    if (n < 10) raise(Errc::too_few_segments, "need >= 10 segments per class for ten splits");
    for (std::size_t k = 0; k < 10; ++k) {
      std::size_t lo = k * n / 10;
      std::size_t hi = (k + 1) * n / 10;
      plan.splits[k].insert(plan.splits[k].end(), ids.begin() + static_cast<std::ptrdiff_t>(lo),
                            ids.begin() + static_cast<std::ptrdiff_t>(hi));
    }
  }
  return plan;
}

double evaluate(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (predictions.size() != truth.size())
    raise(Errc::length_mismatch, "prediction and truth lengths differ");
  if (predictions.empty()) raise(Errc::invalid_spec, "nothing to evaluate");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

Aggregate aggregate(const std::vector<double>& values) {
  if (values.empty()) raise(Errc::invalid_spec, "nothing to aggregate");
  Aggregate agg;
  for (double v : values) agg.mean += v;
  agg.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
    agg.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  agg.ci95_half = 1.96 * agg.stddev / std::sqrt(static_cast<double>(values.size()));
  return agg;
}

bool deployment_gate(double original_acc, double updated_acc, double min_gain) {
  if (original_acc < 0.0 || original_acc > 1.0 || updated_acc < 0.0 || updated_acc > 1.0)
    raise(Errc::invalid_spec, "accuracies must lie in [0, 1]");
  if (min_gain < 0.0) raise(Errc::invalid_spec, "min_gain must be >= 0");
  return updated_acc - original_acc >= min_gain;
}

Experiment default_experiment() {
  Experiment exp;
  exp.tfr_config.downsample_factor = 0.064;
  exp.tfr_config.ckd = {1.0, 0.1, 0.1};

  exp.time_spec.kind = clf::Kind::mlp;
  exp.time_spec.learning_rate = 0.05;
  exp.time_spec.epochs = 250;
  exp.time_spec.hidden_units = 32;
  exp.time_spec.l2 = 1e-4;

  exp.tf_spec.kind = clf::Kind::mlp;
  exp.tf_spec.learning_rate = 0.1;
  exp.tf_spec.epochs = 250;
  exp.tf_spec.hidden_units = 24;
  exp.tf_spec.l2 = 1e-4;

  exp.ssl_config.xi = 0.5;
  exp.ssl_config.steps = 7;
  exp.ssl_config.repetitions = 3;
  exp.ssl_config.seed = 7;
  return exp;
}

Experiment load_experiment(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) raise(Errc::io_failure, "cannot open " + json_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    raise(Errc::invalid_spec, std::string("bad experiment json: ") + e.what());
  }

  Experiment exp = default_experiment();
  try {
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      if (d.contains("dir")) exp.dataset_dir = d["dir"].get<std::string>();
      if (d.contains("synth")) exp.synth = synth_from_json(d["synth"]);
    }
    if (j.contains("tfr")) {
      const auto& t = j["tfr"];
      if (t.contains("downsample_factor"))
        exp.tfr_config.downsample_factor = t["downsample_factor"].get<double>();
      if (t.contains("ckd")) {
        const auto& k = t["ckd"];
        if (k.contains("c")) exp.tfr_config.ckd.c = k["c"].get<double>();
        if (k.contains("d_cutoff")) exp.tfr_config.ckd.d_cutoff = k["d_cutoff"].get<double>();
        if (k.contains("e_cutoff")) exp.tfr_config.ckd.e_cutoff = k["e_cutoff"].get<double>();
      }
    }
    if (j.contains("time_classifier")) exp.time_spec = classifier_from_json(j["time_classifier"]);
    if (j.contains("tf_classifier")) exp.tf_spec = classifier_from_json(j["tf_classifier"]);
    if (j.contains("ssl")) {
      const auto& s = j["ssl"];
      if (s.contains("xi")) exp.ssl_config.xi = s["xi"].get<double>();
      if (s.contains("steps")) exp.ssl_config.steps = s["steps"].get<int>();
      if (s.contains("repetitions")) exp.ssl_config.repetitions = s["repetitions"].get<int>();
      if (s.contains("seed")) exp.ssl_config.seed = s["seed"].get<std::uint64_t>();
      if (s.contains("fit_fusion_on_labeled_only"))
        exp.ssl_config.fit_fusion_on_labeled_only = s["fit_fusion_on_labeled_only"].get<bool>();
    }
    if (j.contains("gate_min_gain")) exp.gate_min_gain = j["gate_min_gain"].get<double>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(Errc::invalid_spec, std::string("bad experiment json: ") + e.what());
  }
  return exp;
}

void save_experiment(const Experiment& exp, const std::string& json_path) {
  json j;
  if (!exp.dataset_dir.empty())
    j["dataset"] = {{"dir", exp.dataset_dir}};
  else
    j["dataset"] = {{"synth", synth_to_json(exp.synth)}};
  j["tfr"] = {{"downsample_factor", exp.tfr_config.downsample_factor},
              {"ckd",
               {{"c", exp.tfr_config.ckd.c},
                {"d_cutoff", exp.tfr_config.ckd.d_cutoff},
                {"e_cutoff", exp.tfr_config.ckd.e_cutoff}}}};
  j["time_classifier"] = classifier_to_json(exp.time_spec);
  j["tf_classifier"] = classifier_to_json(exp.tf_spec);
  j["ssl"] = {{"xi", exp.ssl_config.xi},
              {"steps", exp.ssl_config.steps},
              {"repetitions", exp.ssl_config.repetitions},
              {"seed", exp.ssl_config.seed},
              {"fit_fusion_on_labeled_only", exp.ssl_config.fit_fusion_on_labeled_only}};
  j["gate_min_gain"] = exp.gate_min_gain;

  std::ofstream out(json_path);
  if (!out) raise(Errc::io_failure, "cannot write " + json_path);
  out << j.dump(2) << "\n";
}

PreparedData prepare_data(const Experiment& exp, bool with_tf) {
  SynthDataset ds = exp.dataset_dir.empty() ? synth_dataset(exp.synth) : load_dataset(exp.dataset_dir);

  PreparedData prep;
  prep.noise_tag = noise_tag_of(ds.spec);

  // Segment every class recording; ids are class-major, temporal within.
  std::vector<signal::SegmentSet> sets;
  sets.reserve(ds.class_recordings.size());
  std::vector<std::vector<int>> ids_per_class(ds.class_recordings.size());
  std::size_t total = 0;
  for (std::size_t c = 0; c < ds.class_recordings.size(); ++c) {
    sets.push_back(signal::segment(ds.class_recordings[c], ds.spec.segment_len_s));
    for (std::size_t s = 0; s < sets.back().count(); ++s)
      ids_per_class[c].push_back(static_cast<int>(total + s));
    total += sets.back().count();
  }

  std::vector<const signal::Segment*> all;
  all.reserve(total);
  for (std::size_t c = 0; c < sets.size(); ++c)
    for (const auto& seg : sets[c].segments) all.push_back(&seg);

  ssl::DataBundle& bundle = prep.bundle;
  bundle.class_count = static_cast<int>(ds.class_recordings.size());
  bundle.labels.resize(total);
  for (std::size_t c = 0; c < ids_per_class.size(); ++c)
    for (int id : ids_per_class[c]) bundle.labels[static_cast<std::size_t>(id)] = static_cast<int>(c);

  const std::size_t q = all.empty() ? 0 : all.front()->channels.size();
  const std::size_t seg_len = all.empty() ? 0 : all.front()->length();
  bundle.time_features.view_tag = "time";
  bundle.time_features.values = Matrix(total, q * seg_len);
  for (std::size_t i = 0; i < total; ++i) {
    double* row = bundle.time_features.values.row(i);
    for (std::size_t ch = 0; ch < q; ++ch)
      row = std::copy(all[i]->channels[ch].begin(), all[i]->channels[ch].end(), row);
  }

  if (with_tf) {
    // Shape probe on the first segment, then a parallel map; slot writes keep
    // the result identical to the sequential order.
    tfr::Tfr probe = tfr::compute_ckd_tfr(*all.front(), exp.tfr_config, ds.spec.sample_rate_hz);
    const std::size_t m_rows = probe.channels.front().rows;
    const std::size_t m_cols = probe.channels.front().cols;
    const std::size_t width = q * m_rows * m_cols;
    bundle.tf_features.view_tag = "tf";
    bundle.tf_features.values = Matrix(total, width);

    const auto fill_row = [&](std::size_t i) {
      tfr::Tfr t = i == 0 ? probe : tfr::compute_ckd_tfr(*all[i], exp.tfr_config, ds.spec.sample_rate_hz);
      double* row = bundle.tf_features.values.row(i);
      double peak = 0.0;
      for (const auto& chm : t.channels)
        for (double v : chm.data) peak = std::max(peak, std::abs(v));
      const double scale = peak > 0.0 ? 1.0 / peak : 1.0;
      std::size_t off = 0;
      for (const auto& chm : t.channels)
        for (double v : chm.data) row[off++] = v * scale;
    };
    parallel_for(total, fill_row);
  }

  prep.plan = make_temporal_splits(ids_per_class);
  return prep;
}

RunOutput run_experiment(const Experiment& exp, const PreparedData& data, ssl::Method method) {
  ssl::BranchSpecs branches{exp.time_spec, exp.tf_spec};
  ssl::EvalSplit eval{data.plan.validation(), data.plan.test_ids()};

  RunOutput out;
  if (method == ssl::Method::ddf) {
    out.reports = ssl::run_ddf(exp.ssl_config, branches, data.bundle, data.plan.labeled(),
                               data.plan.unlabeled_train(), eval, &out.final_states);
  } else {
    out.reports = ssl::run_self_training(exp.ssl_config, branches, data.bundle, data.plan.labeled(),
                                         data.plan.unlabeled_train(), eval, &out.final_states);
  }

  const char* method_name = method == ssl::Method::ddf ? "ddf" : "self-training";
  const int steps = exp.ssl_config.steps;
  for (int s = 1; s <= steps; ++s) {
    std::vector<double> accs;
    for (const auto& rep : out.reports) accs.push_back(rep[static_cast<std::size_t>(s - 1)].acc_fused_test);
    Aggregate agg = aggregate(accs);
    ResultRow row;
    row.method = method_name;
    row.noise = data.noise_tag;
    row.xi = exp.ssl_config.xi;
    row.training_pct = s * 10;
    row.repetitions = static_cast<int>(out.reports.size());
    row.acc_mean = agg.mean;
    row.acc_std = agg.stddev;
    row.ci95_half = agg.ci95_half;
    out.table.rows.push_back(row);
  }

  std::vector<double> first, last;
  for (const auto& rep : out.reports) {
    first.push_back(rep.front().acc_time_test);
    last.push_back(rep.back().acc_time_test);
  }
  out.gate_original = aggregate(first).mean;
  out.gate_updated = aggregate(last).mean;
  out.gate_replace = deployment_gate(out.gate_original, out.gate_updated, exp.gate_min_gain);
  return out;
}

ResultsTable sweep_threshold(const std::vector<double>& grid, const Experiment& exp,
                             const PreparedData& data) {
  if (grid.empty()) raise(Errc::invalid_spec, "threshold grid is empty");

  ssl::BranchSpecs branches{exp.time_spec, exp.tf_spec};
  ssl::EvalSplit eval{data.plan.validation(), data.plan.test_ids()};

  ResultsTable table;
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    ssl::SslConfig cfg = exp.ssl_config;
    cfg.xi = grid[g];
    auto reports = ssl::run_ddf(cfg, branches, data.bundle, data.plan.labeled(),
                                data.plan.unlabeled_train(), eval);
    std::vector<double> accs;
    for (const auto& rep : reports) accs.push_back(rep.back().acc_fused_val);
    Aggregate agg = aggregate(accs);

    ResultRow row;
    row.method = "ddf";
    row.noise = data.noise_tag;
    row.xi = grid[g];
    row.training_pct = cfg.steps * 10;
    row.repetitions = cfg.repetitions;
    row.acc_mean = agg.mean;
    row.acc_std = agg.stddev;
    row.ci95_half = agg.ci95_half;
    table.rows.push_back(row);
    if (table.rows[g].acc_mean > table.rows[best].acc_mean) best = g;
  }
  table.rows[best].selected = true;
  return table;
}

std::vector<double> parse_grid(const std::string& text) {
  // Either "lo:hi:step" or a comma-separated list.
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    double lo = 0.0, hi = 0.0, step = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(text);
    if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0)
      raise(Errc::invalid_spec, "grid must be lo:hi:step");
    for (double v = lo; v <= hi + 1e-12; v += step) grid.push_back(v);
  } else {
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty()) grid.push_back(std::stod(cell));
    }
  }
  if (grid.empty()) raise(Errc::invalid_spec, "grid is empty");
  for (double v : grid)
    if (v < 0.0 || v >= 1.0) raise(Errc::invalid_spec, "grid thresholds must lie in [0, 1)");
  return grid;
}

}  // namespace ddf::harness
