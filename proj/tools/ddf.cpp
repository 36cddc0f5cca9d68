// ddf: synthesize data, preprocess recordings, compute TFRs, and run the
// dual-domain semi-supervised experiments from the command line.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddf/errors.hpp"
#include "ddf/harness.hpp"
#include "ddf/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_synth(const std::string& spec_path, const std::string& out_dir) {
  ddf::harness::SynthSpec spec;
  if (!spec_path.empty()) spec = ddf::harness::load_synth_spec(spec_path);
  auto ds = ddf::harness::synth_dataset(spec);
  ddf::harness::save_dataset(ds, out_dir);
  std::size_t total = 0;
  for (const auto& rec : ds.class_recordings) total += rec.length();
  std::cout << "wrote " << ds.class_recordings.size() << " class recordings (" << total
            << " samples total) to " << out_dir << "\n";
  return 0;
}

int run_preprocess(const std::string& in_dir, const std::string& out_dir,
                   std::optional<double> snr_db, std::optional<double> lowpass_hz, int taps,
                   std::optional<double> decimate_to, std::uint64_t seed) {
  auto ds = ddf::harness::load_dataset(in_dir);
  for (std::size_t c = 0; c < ds.class_recordings.size(); ++c) {
    auto& rec = ds.class_recordings[c];
    if (lowpass_hz.has_value()) {
      auto filt = ddf::signal::design_lowpass(*lowpass_hz, taps, rec.sample_rate_hz);
      rec = ddf::signal::apply_filter(rec, filt);
    }
    if (decimate_to.has_value()) rec = ddf::signal::decimate(rec, *decimate_to);
    if (snr_db.has_value()) rec = ddf::signal::add_noise(rec, {*snr_db, ddf::Rng::mix(seed, c)});
  }
  if (decimate_to.has_value()) ds.spec.sample_rate_hz = *decimate_to;
  ds.spec.snr_db = snr_db;
  ddf::harness::save_dataset(ds, out_dir);
  std::cout << "preprocessed " << ds.class_recordings.size() << " recordings into " << out_dir
            << "\n";
  return 0;
}

int run_tfr(const std::string& in_path, const std::string& params_path, const std::string& out_path,
            bool as_csv, const std::string& svg_path) {
  ddf::tfr::TfrConfig cfg;
  if (!params_path.empty()) {
    std::ifstream in(params_path);
    if (!in) ddf::raise(ddf::Errc::io_failure, "cannot open " + params_path);
    json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      ddf::raise(ddf::Errc::invalid_spec, std::string("bad tfr params: ") + e.what());
    }
    if (j.contains("downsample_factor")) cfg.downsample_factor = j["downsample_factor"].get<double>();
    if (j.contains("ckd")) {
      const auto& k = j["ckd"];
      if (k.contains("c")) cfg.ckd.c = k["c"].get<double>();
      if (k.contains("d_cutoff")) cfg.ckd.d_cutoff = k["d_cutoff"].get<double>();
      if (k.contains("e_cutoff")) cfg.ckd.e_cutoff = k["e_cutoff"].get<double>();
    }
  }

  auto rec = ddf::signal::load_recording(in_path);
  ddf::signal::Segment seg;
  seg.channels = rec.channels;
  auto tfr = ddf::tfr::compute_ckd_tfr(seg, cfg, rec.sample_rate_hz);

  if (as_csv) {
    std::string base = out_path;
    if (fs::path(base).extension() == ".csv") base = fs::path(base).replace_extension("").string();
    ddf::tfr::save_tfr_csv(tfr, base);
    std::cout << "wrote per-channel CSVs with base " << base << "\n";
  } else {
    ddf::tfr::save_tfr_raw(tfr, out_path);
    std::cout << "wrote " << out_path << " (" << tfr.channels.front().rows << "x"
              << tfr.channels.front().cols << " x " << tfr.channels.size() << " channels)\n";
  }
  if (!svg_path.empty()) {
    ddf::harness::write_tfr_heatmap_svg(tfr, 0, svg_path);
    std::cout << "wrote heatmap " << svg_path << "\n";
  }
  return 0;
}

int run_run(const std::string& config_path, const std::string& method_name,
            const std::string& out_dir, bool plots) {
  auto exp = config_path.empty() ? ddf::harness::default_experiment()
                                 : ddf::harness::load_experiment(config_path);
  auto method = method_name == "self-training" ? ddf::ssl::Method::self_training
                                               : ddf::ssl::Method::ddf;

  auto data = ddf::harness::prepare_data(exp, method == ddf::ssl::Method::ddf);
  auto out = ddf::harness::run_experiment(exp, data, method);

  fs::create_directories(out_dir);
  ddf::ssl::write_step_reports_csv(
      out.reports, (fs::path(out_dir) / ("steps_" + method_name + ".csv")).string());
  ddf::harness::report(out.table, out_dir, plots);

  if (!out.final_states.empty()) {
    const auto& state = out.final_states.front();
    state.time_model.save((fs::path(out_dir) / "time_model.bin").string());
    if (method == ddf::ssl::Method::ddf) {
      state.tf_model.save((fs::path(out_dir) / "tf_model.bin").string());
      ddf::fusion::save_weights_json(state.weights,
                                     (fs::path(out_dir) / "fusion_weights.json").string());
    }
  }

  json gate = {{"original_acc", out.gate_original},
               {"updated_acc", out.gate_updated},
               {"min_gain", exp.gate_min_gain},
               {"decision", out.gate_replace ? "replace" : "keep"}};
  std::ofstream gate_out(fs::path(out_dir) / "gate.json");
  gate_out << gate.dump(2) << "\n";

  for (const auto& row : out.table.rows)
    std::cout << row.method << " " << row.noise << " " << row.training_pct << "% : " << row.acc_mean
              << " +/- " << row.acc_std << "\n";
  std::cout << "deployment gate: " << (out.gate_replace ? "replace" : "keep") << " (original "
            << out.gate_original << ", updated " << out.gate_updated << ")\n";
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& grid_text,
              const std::string& out_dir, bool plots) {
  auto exp = config_path.empty() ? ddf::harness::default_experiment()
                                 : ddf::harness::load_experiment(config_path);
  auto grid = ddf::harness::parse_grid(grid_text);
  auto data = ddf::harness::prepare_data(exp, true);
  auto table = ddf::harness::sweep_threshold(grid, exp, data);

  fs::create_directories(out_dir);
  ddf::harness::write_results_csv(table, (fs::path(out_dir) / "sweep.csv").string());
  if (plots)
    ddf::harness::write_accuracy_bars_svg(table, (fs::path(out_dir) / "sweep_bars.svg").string());

  for (const auto& row : table.rows)
    std::cout << "xi=" << row.xi << " : " << row.acc_mean << " +/- " << row.acc_std
              << (row.selected ? "  <- selected" : "") << "\n";
  return 0;
}

int run_report(const std::string& in_dir, const std::string& out_dir, bool plots) {
  std::string src = (fs::path(in_dir) / "results.csv").string();
  if (!fs::exists(src)) src = (fs::path(in_dir) / "sweep.csv").string();
  if (!fs::exists(src))
    ddf::raise(ddf::Errc::io_failure, "no results.csv or sweep.csv in " + in_dir);

  auto table = ddf::harness::read_results_csv(src);
  ddf::harness::report(table, out_dir.empty() ? in_dir : out_dir, plots);
  for (const auto& row : table.rows)
    std::cout << row.method << " " << row.noise << " xi=" << row.xi << " " << row.training_pct
              << "% : " << row.acc_mean << " +/- " << row.acc_std
              << (row.selected ? "  <- selected" : "") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-domain fusion pipeline for semi-supervised time-series classification"};
  app.require_subcommand(1);

  std::string spec_path, out_dir = "out", in_path, params_path, config_path;
  std::string method = "ddf", grid_text = "0.0:0.9:0.1", svg_path, report_in, report_out;
  bool plots = false, as_csv = false;
  std::optional<double> snr_db, lowpass_hz, decimate_to;
  int taps = 63;
  std::uint64_t seed = 1;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  synth->add_option("--spec", spec_path, "Synth spec JSON (defaults used when omitted)");
  synth->add_option("--out", out_dir, "Output dataset directory")->required();

  auto* preprocess = app.add_subcommand("preprocess", "Filter/decimate/corrupt a dataset");
  preprocess->add_option("--in", in_path, "Input dataset directory")->required();
  preprocess->add_option("--out", out_dir, "Output dataset directory")->required();
  preprocess->add_option("--snr", snr_db, "Add white Gaussian noise at this SNR (dB)");
  preprocess->add_option("--lowpass-hz", lowpass_hz, "Lowpass cutoff before decimation");
  preprocess->add_option("--taps", taps, "Lowpass tap count (odd)");
  preprocess->add_option("--decimate-to", decimate_to, "Target sample rate (Hz)");
  preprocess->add_option("--seed", seed, "Noise seed");

  auto* tfr_cmd = app.add_subcommand("tfr", "Compute the CKD TFR of a recording");
  tfr_cmd->add_option("--in", in_path, "Input recording (.bin or .csv with sidecar)")->required();
  tfr_cmd->add_option("--params", params_path, "TFR params JSON");
  tfr_cmd->add_option("--out", out_dir, "Output path (.bin, or base path with --csv)")->required();
  tfr_cmd->add_flag("--csv", as_csv, "Write per-channel CSVs instead of raw");
  tfr_cmd->add_option("--svg", svg_path, "Also write an SVG heatmap of channel 0");

  auto* run = app.add_subcommand("run", "Run a semi-supervised experiment");
  run->add_option("--config", config_path, "Experiment JSON (defaults used when omitted)");
  run->add_option("--method", method, "ddf or self-training")
      ->check(CLI::IsMember({"ddf", "self-training"}));
  run->add_option("--out", out_dir, "Results directory")->required();
  run->add_flag("--plots", plots, "Write SVG plots");

  auto* sweep = app.add_subcommand("sweep", "Sweep the confidence threshold");
  sweep->add_option("--config", config_path, "Experiment JSON (defaults used when omitted)");
  sweep->add_option("--grid", grid_text, "Threshold grid lo:hi:step or comma list");
  sweep->add_option("--out", out_dir, "Results directory")->required();
  sweep->add_flag("--plots", plots, "Write SVG plots");

  auto* rep = app.add_subcommand("report", "Re-render tables and plots from results");
  rep->add_option("--in", report_in, "Directory holding results.csv or sweep.csv")->required();
  rep->add_option("--out", report_out, "Output directory (default: --in)");
  rep->add_flag("--plots", plots, "Write SVG plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return run_synth(spec_path, out_dir);
    if (preprocess->parsed())
      return run_preprocess(in_path, out_dir, snr_db, lowpass_hz, taps, decimate_to, seed);
    if (tfr_cmd->parsed()) return run_tfr(in_path, params_path, out_dir, as_csv, svg_path);
    if (run->parsed()) return run_run(config_path, method, out_dir, plots);
    if (sweep->parsed()) return run_sweep(config_path, grid_text, out_dir, plots);
    if (rep->parsed()) return run_report(report_in, report_out, plots);
  } catch (const ddf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
