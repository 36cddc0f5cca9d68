#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddf/classifiers.hpp"
#include "ddf/fusion.hpp"

namespace ddf::ssl {

struct SslConfig {
  double xi = 0.5;          // confidence threshold, strict
  int steps = 7;
  int repetitions = 3;
  std::uint64_t seed = 0;
  bool fit_fusion_on_labeled_only = false;

  void validate() const;
};

// Feature views plus ground truth for every segment id in [0, P).
struct DataBundle {
  clf::FeatureMatrix time_features;
  clf::FeatureMatrix tf_features;  // may stay empty for self-training
  std::vector<int> labels;
  int class_count = 0;

  std::size_t sample_count() const { return time_features.rows(); }
};

struct BranchSpecs {
  clf::ClassifierSpec time_spec;
  clf::ClassifierSpec tf_spec;
};

struct EvalSplit {
  std::vector<int> validation_ids;
  std::vector<int> test_ids;
};

struct PseudoLabel {
  int id = 0;
  int label = 0;
  double confidence = 0.0;
};

// Labeled / pseudo-labeled / still-unlabeled partitions; the three never
// overlap.
struct Pool {
  std::vector<int> labeled_ids;
  std::vector<int> labeled_labels;
  std::vector<PseudoLabel> pseudo;
  std::vector<int> residue;  // offered to the selector but not accepted yet

  void check_disjoint() const;
};

// Unbalanced per-class candidate lists from thresholding.
using Candidates = std::vector<std::vector<PseudoLabel>>;

// Balanced selection: every class list has the same length.
struct SelectionSet {
  std::vector<std::vector<PseudoLabel>> per_class;

  std::size_t per_class_count() const { return per_class.empty() ? 0 : per_class.front().size(); }
  std::size_t total() const { return per_class.size() * per_class_count(); }
};

enum class Method { ddf, self_training };

struct StepReport {
  int repetition = 0;
  int step = 0;  // 1-based
  std::size_t pool_labeled = 0;
  std::size_t pool_pseudo = 0;
  std::size_t accepted = 0;
  double acc_time_val = 0.0, acc_tf_val = 0.0, acc_fused_val = 0.0;
  double acc_time_test = 0.0, acc_tf_test = 0.0, acc_fused_test = 0.0;
  fusion::FusionWeights weights;
};

struct SslContext {
  const DataBundle* data = nullptr;
  BranchSpecs branches;
  SslConfig cfg;
  EvalSplit eval;
};

struct SslState {
  Pool pool;
  int step_index = 0;  // completed steps
  int repetition = 0;
  std::uint64_t run_seed = 0;
  Method method = Method::ddf;
  clf::Model time_model;
  clf::Model tf_model;
  fusion::FusionWeights weights;
};

// Sample p is a candidate for its argmax class iff its max fused score
// strictly exceeds xi.
Candidates threshold_select(const clf::LogitsMatrix& fused, const std::vector<int>& ids, double xi);

// Keeps the top-k per class by confidence (ties: lower id), with k the
// smallest class candidate count. k = 0 empties the whole selection.
SelectionSet balance_classes(const Candidates& candidates);

SslState init_state(const SslContext& ctx, const std::vector<int>& labeled_ids, Method method,
                    int repetition);

// One training step: fit both branches on labeled+pseudo, refit fusion,
// pseudo-label the residue plus next_split, absorb the balanced selection.
StepReport ddf_step(SslState& state, const SslContext& ctx, const std::vector<int>& next_split);

// final_states, when given, receives one end-of-run state per repetition so
// callers can persist the trained models.
std::vector<std::vector<StepReport>> run_ddf(const SslConfig& cfg, const BranchSpecs& branches,
                                             const DataBundle& data,
                                             const std::vector<int>& labeled_ids,
                                             const std::vector<std::vector<int>>& unlabeled_splits,
                                             const EvalSplit& eval,
                                             std::vector<SslState>* final_states = nullptr);

// Same loop with the TF and fusion branches removed: the time model
// pseudo-labels from its own standardized predictions.
std::vector<std::vector<StepReport>> run_self_training(
    const SslConfig& cfg, const BranchSpecs& branches, const DataBundle& data,
    const std::vector<int>& labeled_ids, const std::vector<std::vector<int>>& unlabeled_splits,
    const EvalSplit& eval, std::vector<SslState>* final_states = nullptr);

// steps CSV: repetition,step,pool_labeled,pool_pseudo,accepted,acc_time,acc_tf,acc_fused
void write_step_reports_csv(const std::vector<std::vector<StepReport>>& reports,
                            const std::string& path);
std::vector<std::vector<StepReport>> read_step_reports_csv(const std::string& path);

}  // namespace ddf::ssl
