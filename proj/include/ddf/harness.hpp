#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddf/classifiers.hpp"
#include "ddf/signal_core.hpp"
#include "ddf/ssl_pipeline.hpp"
#include "ddf/tfr_engine.hpp"

namespace ddf::harness {

// --- synthetic data ---------------------------------------------------------

enum class Waveform { up_chirp, down_chirp, am_tone, burst };

Waveform waveform_from_string(const std::string& s);
const char* waveform_to_string(Waveform w);

struct ClassDef {
  Waveform waveform = Waveform::up_chirp;
  double f_start_hz = 0.0;  // chirp start / AM carrier
  double f_end_hz = 0.0;    // chirp end
  double am_rate_hz = 0.0;
  double am_depth = 0.0;
  double burst_center_frac = 0.5;
  double burst_width_frac = 0.15;
  double amplitude = 1.0;
  double phase_jitter_rad = 3.141592653589793;  // full phase randomization
  double freq_jitter_frac = 0.05;
  double amp_jitter_frac = 0.1;
  // Slow multiplicative drift of the characteristic frequencies across the
  // recording (run-up style), so temporal splits are not i.i.d.
  double freq_drift_frac = 0.0;
};

struct SynthSpec {
  int class_count = 4;
  int segments_per_class = 400;
  double segment_len_s = 0.1;
  double sample_rate_hz = 2560.0;
  std::optional<double> snr_db;  // nullopt = clean
  std::vector<ClassDef> classes;  // empty -> defaults for class_count
  std::uint64_t seed = 1;

  void validate() const;
};

std::vector<ClassDef> default_class_defs(int class_count, double sample_rate_hz);

// Accepts either a bare SynthSpec document or a full experiment document
// carrying dataset.synth.
SynthSpec load_synth_spec(const std::string& json_path);

// One recording per class, segments back to back in temporal order. Noise,
// when requested, is drawn per segment so each segment hits the exact SNR.
struct SynthDataset {
  std::vector<signal::Recording> class_recordings;
  SynthSpec spec;
};

SynthDataset synth_dataset(const SynthSpec& spec);

void save_dataset(const SynthDataset& ds, const std::string& dir);
SynthDataset load_dataset(const std::string& dir);

// --- temporal splits --------------------------------------------------------

// Ten per-class contiguous temporal tenths: split 1 labeled, 2-7 unlabeled
// training, 8 validation, 9-10 test.
struct SplitPlan {
  std::array<std::vector<int>, 10> splits;

  const std::vector<int>& labeled() const { return splits[0]; }
  std::vector<std::vector<int>> unlabeled_train() const;
  const std::vector<int>& validation() const { return splits[7]; }
  std::vector<int> test_ids() const;
};

SplitPlan make_temporal_splits(const std::vector<std::vector<int>>& ids_per_class);

// --- evaluation -------------------------------------------------------------

double evaluate(const std::vector<int>& predictions, const std::vector<int>& truth);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;     // sample std over repetitions
  double ci95_half = 0.0;  // normal approximation
};
Aggregate aggregate(const std::vector<double>& values);

// Replace the deployed model iff the retrained one gains at least min_gain.
bool deployment_gate(double original_acc, double updated_acc, double min_gain);

// --- results tables ---------------------------------------------------------

struct ResultRow {
  std::string method;
  std::string noise;  // "clean" or e.g. "-5dB"
  double xi = 0.0;
  int training_pct = 0;
  int repetitions = 0;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  double ci95_half = 0.0;
  bool selected = false;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
};

void write_results_csv(const ResultsTable& table, const std::string& path);
ResultsTable read_results_csv(const std::string& path);

// Writes results.csv under out_dir, plus line/bar SVG plots when requested.
void report(const ResultsTable& table, const std::string& out_dir, bool plots);

void write_accuracy_lines_svg(const ResultsTable& table, const std::string& path);
void write_accuracy_bars_svg(const ResultsTable& table, const std::string& path);
void write_tfr_heatmap_svg(const tfr::Tfr& tfr, std::size_t channel, const std::string& path);

// --- experiment assembly ----------------------------------------------------

struct Experiment {
  SynthSpec synth;
  std::string dataset_dir;  // nonempty -> load instead of synthesizing
  tfr::TfrConfig tfr_config;
  clf::ClassifierSpec time_spec;
  clf::ClassifierSpec tf_spec;
  ssl::SslConfig ssl_config;
  double gate_min_gain = 0.01;
};

Experiment default_experiment();
Experiment load_experiment(const std::string& json_path);
void save_experiment(const Experiment& exp, const std::string& json_path);

// Feature views + split plan for one dataset. with_tf=false skips the TFR
// pass (self-training does not need it).
struct PreparedData {
  ssl::DataBundle bundle;
  SplitPlan plan;
  std::string noise_tag;
};

PreparedData prepare_data(const Experiment& exp, bool with_tf);

struct RunOutput {
  std::vector<std::vector<ssl::StepReport>> reports;
  std::vector<ssl::SslState> final_states;  // one per repetition
  ResultsTable table;
  double gate_original = 0.0;
  double gate_updated = 0.0;
  bool gate_replace = false;
};

RunOutput run_experiment(const Experiment& exp, const PreparedData& data, ssl::Method method);

// Validation-accuracy sweep over confidence thresholds; the argmax row is
// marked selected (ties toward the smaller threshold).
ResultsTable sweep_threshold(const std::vector<double>& grid, const Experiment& exp,
                             const PreparedData& data);

// "0.0:0.9:0.1" -> {0.0, 0.1, ..., 0.9}
std::vector<double> parse_grid(const std::string& text);

}  // namespace ddf::harness
