#include "ddf/ssl_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "ddf/errors.hpp"
#include "ddf/rng.hpp"

namespace ddf::ssl {

namespace {

clf::FeatureMatrix gather_rows(const clf::FeatureMatrix& all, const std::vector<int>& ids) {
  clf::FeatureMatrix out;
  out.view_tag = all.view_tag;
  out.values = Matrix(ids.size(), all.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double* src = all.values.row(static_cast<std::size_t>(ids[i]));
    std::copy(src, src + all.cols(), out.values.row(i));
  }
  return out;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::vector<int> truth_of(const DataBundle& data, const std::vector<int>& ids) {
  std::vector<int> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out[i] = data.labels[static_cast<std::size_t>(ids[i])];
  return out;
}

struct EvalResult {
  double time = 0.0, tf = 0.0, fused = 0.0;
};

EvalResult evaluate_on(const SslState& state, const SslContext& ctx, const std::vector<int>& ids) {
  EvalResult res;
  if (ids.empty()) return res;
  const DataBundle& data = *ctx.data;
  auto truth = truth_of(data, ids);

  auto yt = state.time_model.predict(gather_rows(data.time_features, ids));
  res.time = accuracy(fusion::decide(fusion::standardize(yt.values)), truth);
  if (state.method == Method::self_training) {
    res.tf = std::nan("");
    res.fused = res.time;
    return res;
  }
  auto ytf = state.tf_model.predict(gather_rows(data.tf_features, ids));
  res.tf = accuracy(fusion::decide(fusion::standardize(ytf.values)), truth);
  auto fused = fusion::standardize(fusion::fuse(yt, ytf, state.weights));
  res.fused = accuracy(fusion::decide(fused), truth);
  return res;
}

std::string format_acc(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void SslConfig::validate() const {
  if (!(xi >= 0.0) || xi >= 1.0) raise(Errc::invalid_spec, "xi must lie in [0, 1)");
  if (steps < 1) raise(Errc::invalid_spec, "steps must be >= 1");
  if (repetitions < 1) raise(Errc::invalid_spec, "repetitions must be >= 1");
}

void Pool::check_disjoint() const {
  std::unordered_set<int> seen;
  auto add = [&seen](int id) {
    if (!seen.insert(id).second)
      raise(Errc::invalid_spec, "pool partitions overlap at id " + std::to_string(id));
  };
  for (int id : labeled_ids) add(id);
  for (const auto& p : pseudo) add(p.id);
  for (int id : residue) add(id);
}

Candidates threshold_select(const clf::LogitsMatrix& fused, const std::vector<int>& ids, double xi) {
  if (fused.sample_count() != ids.size())
    raise(Errc::shape_mismatch, "ids do not match the fused matrix width");
  Candidates out(fused.class_count());
  for (std::size_t p = 0; p < fused.sample_count(); ++p) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < fused.class_count(); ++c)
      if (fused.values.at(c, p) > fused.values.at(best, p)) best = c;
    double conf = fused.values.at(best, p);
    if (conf > xi) out[best].push_back({ids[p], static_cast<int>(best), conf});
  }
  return out;
}

SelectionSet balance_classes(const Candidates& candidates) {
  SelectionSet sel;
  sel.per_class.resize(candidates.size());
  if (candidates.empty()) return sel;

  std::size_t k = candidates.front().size();
  for (const auto& list : candidates) k = std::min(k, list.size());
  if (k == 0) return sel;

  for (std::size_t c = 0; c < candidates.size(); ++c) {
    auto list = candidates[c];
    std::sort(list.begin(), list.end(), [](const PseudoLabel& a, const PseudoLabel& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      return a.id < b.id;
    });
    list.resize(k);
    sel.per_class[c] = std::move(list);
  }
  return sel;
}

SslState init_state(const SslContext& ctx, const std::vector<int>& labeled_ids, Method method,
                    int repetition) {
  SslState state;
  state.method = method;
  state.repetition = repetition;
  state.run_seed = Rng::mix(ctx.cfg.seed, static_cast<std::uint64_t>(repetition));
  state.pool.labeled_ids = labeled_ids;
  state.pool.labeled_labels = truth_of(*ctx.data, labeled_ids);
  return state;
}

StepReport ddf_step(SslState& state, const SslContext& ctx, const std::vector<int>& next_split) {
  const DataBundle& data = *ctx.data;
  if (state.pool.labeled_ids.empty()) raise(Errc::empty_labeled_pool, "no labeled samples");

  {
    std::unordered_set<int> held(state.pool.labeled_ids.begin(), state.pool.labeled_ids.end());
    for (const auto& p : state.pool.pseudo) held.insert(p.id);
    for (int id : state.pool.residue) held.insert(id);
    for (int id : next_split)
      if (held.count(id))
        raise(Errc::invalid_spec, "next split overlaps the pool at id " + std::to_string(id));
  }

  state.step_index += 1;
  const int step = state.step_index;

  // Training pool: labeled plus accumulated pseudo-labels, both treated as
  // ground truth.
  std::vector<int> train_ids = state.pool.labeled_ids;
  std::vector<int> train_labels = state.pool.labeled_labels;
  for (const auto& p : state.pool.pseudo) {
    train_ids.push_back(p.id);
    train_labels.push_back(p.label);
  }

  auto x_time = gather_rows(data.time_features, train_ids);
  clf::ClassifierSpec time_spec = ctx.branches.time_spec;
  time_spec.seed = Rng::mix(state.run_seed, static_cast<std::uint64_t>(step) * 4 + 0);
  state.time_model = clf::fit(time_spec, x_time, train_labels, data.class_count);

  if (state.method == Method::ddf) {
    auto x_tf = gather_rows(data.tf_features, train_ids);
    clf::ClassifierSpec tf_spec = ctx.branches.tf_spec;
    tf_spec.seed = Rng::mix(state.run_seed, static_cast<std::uint64_t>(step) * 4 + 1);
    state.tf_model = clf::fit(tf_spec, x_tf, train_labels, data.class_count);

    const bool labeled_only = ctx.cfg.fit_fusion_on_labeled_only;
    const std::vector<int>& fit_ids = labeled_only ? state.pool.labeled_ids : train_ids;
    const std::vector<int>& fit_labels = labeled_only ? state.pool.labeled_labels : train_labels;
    auto yt_fit = state.time_model.predict(gather_rows(data.time_features, fit_ids));
    auto ytf_fit = state.tf_model.predict(gather_rows(data.tf_features, fit_ids));
    auto truth = fusion::OneHotLabels::from_labels(fit_labels, data.class_count);
    state.weights = fusion::fit_fusion_weights(yt_fit, ytf_fit, truth);
  }

  // Pseudo-label the unlabeled samples available at this step.
  std::vector<int> available = state.pool.residue;
  available.insert(available.end(), next_split.begin(), next_split.end());

  std::size_t accepted = 0;
  if (!available.empty()) {
    auto yt_u = state.time_model.predict(gather_rows(data.time_features, available));
    clf::LogitsMatrix scored;
    if (state.method == Method::ddf) {
      auto ytf_u = state.tf_model.predict(gather_rows(data.tf_features, available));
      scored = fusion::standardize(fusion::fuse(yt_u, ytf_u, state.weights));
    } else {
      scored = fusion::standardize(yt_u.values);
    }

    auto selection = balance_classes(threshold_select(scored, available, ctx.cfg.xi));
    std::unordered_set<int> taken;
    for (const auto& list : selection.per_class)
      for (const auto& p : list) {
        state.pool.pseudo.push_back(p);
        taken.insert(p.id);
        ++accepted;
      }
    state.pool.residue.clear();
    for (int id : available)
      if (!taken.count(id)) state.pool.residue.push_back(id);
  }
  state.pool.check_disjoint();

  StepReport report;
  report.repetition = state.repetition;
  report.step = step;
  report.pool_labeled = state.pool.labeled_ids.size();
  report.pool_pseudo = state.pool.pseudo.size();
  report.accepted = accepted;
  report.weights = state.weights;
  EvalResult val = evaluate_on(state, ctx, ctx.eval.validation_ids);
  EvalResult test = evaluate_on(state, ctx, ctx.eval.test_ids);
  report.acc_time_val = val.time;
  report.acc_tf_val = val.tf;
  report.acc_fused_val = val.fused;
  report.acc_time_test = test.time;
  report.acc_tf_test = test.tf;
  report.acc_fused_test = test.fused;
  return report;
}

namespace {

std::vector<std::vector<StepReport>> run_impl(const SslConfig& cfg, const BranchSpecs& branches,
                                              const DataBundle& data,
                                              const std::vector<int>& labeled_ids,
                                              const std::vector<std::vector<int>>& unlabeled_splits,
                                              const EvalSplit& eval, Method method,
                                              std::vector<SslState>* final_states) {
  cfg.validate();
  if (data.class_count < 2) raise(Errc::invalid_spec, "class_count must be >= 2");

  SslContext ctx;
  ctx.data = &data;
  ctx.branches = branches;
  ctx.cfg = cfg;
  ctx.eval = eval;

  std::vector<std::vector<StepReport>> all;
  all.reserve(static_cast<std::size_t>(cfg.repetitions));
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    SslState state = init_state(ctx, labeled_ids, method, rep);
    std::vector<StepReport> reports;
    reports.reserve(static_cast<std::size_t>(cfg.steps));
    for (int step = 1; step <= cfg.steps; ++step) {
      // Step 1 is purely supervised; step k >= 2 offers unlabeled split k-2.
      static const std::vector<int> kNone;
      const std::vector<int>& split =
          (step >= 2 && static_cast<std::size_t>(step - 2) < unlabeled_splits.size())
              ? unlabeled_splits[static_cast<std::size_t>(step - 2)]
              : kNone;
      reports.push_back(ddf_step(state, ctx, split));
    }
    if (final_states != nullptr) final_states->push_back(state);
    all.push_back(std::move(reports));
  }
  return all;
}

}  // namespace

std::vector<std::vector<StepReport>> run_ddf(const SslConfig& cfg, const BranchSpecs& branches,
                                             const DataBundle& data,
                                             const std::vector<int>& labeled_ids,
                                             const std::vector<std::vector<int>>& unlabeled_splits,
                                             const EvalSplit& eval,
                                             std::vector<SslState>* final_states) {
  if (data.tf_features.values.rows != data.time_features.values.rows)
    raise(Errc::shape_mismatch, "time and tf views disagree on P");
  return run_impl(cfg, branches, data, labeled_ids, unlabeled_splits, eval, Method::ddf,
                  final_states);
}

std::vector<std::vector<StepReport>> run_self_training(
    const SslConfig& cfg, const BranchSpecs& branches, const DataBundle& data,
    const std::vector<int>& labeled_ids, const std::vector<std::vector<int>>& unlabeled_splits,
    const EvalSplit& eval, std::vector<SslState>* final_states) {
  return run_impl(cfg, branches, data, labeled_ids, unlabeled_splits, eval, Method::self_training,
                  final_states);
}

void write_step_reports_csv(const std::vector<std::vector<StepReport>>& reports,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path);
  out << "repetition,step,pool_labeled,pool_pseudo,accepted,acc_time,acc_tf,acc_fused\n";
  for (const auto& rep : reports)
    for (const auto& r : rep) {
      out << r.repetition << ',' << r.step << ',' << r.pool_labeled << ',' << r.pool_pseudo << ','
          << r.accepted << ',' << format_acc(r.acc_time_test) << ',' << format_acc(r.acc_tf_test)
          << ',' << format_acc(r.acc_fused_test) << "\n";
    }
  if (!out) raise(Errc::io_failure, "short write on " + path);
}

std::vector<std::vector<StepReport>> read_step_reports_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_failure, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) raise(Errc::io_failure, "empty csv " + path);

  std::vector<std::vector<StepReport>> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    StepReport r;
    auto next = [&]() {
      if (!std::getline(ss, cell, ',')) raise(Errc::io_failure, "short row in " + path);
      return cell;
    };
    r.repetition = std::stoi(next());
    r.step = std::stoi(next());
    r.pool_labeled = std::stoul(next());
    r.pool_pseudo = std::stoul(next());
    r.accepted = std::stoul(next());
    r.acc_time_test = std::stod(next());
    r.acc_tf_test = std::stod(next());
    r.acc_fused_test = std::stod(next());
    if (reports.empty() || reports.back().back().repetition != r.repetition) reports.push_back({});
    reports.back().push_back(r);
  }
  return reports;
}

}  // namespace ddf::ssl
