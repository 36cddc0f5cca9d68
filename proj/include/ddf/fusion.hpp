#pragma once

#include <string>
#include <vector>

#include "ddf/classifiers.hpp"
#include "ddf/matrix.hpp"

namespace ddf::fusion {

// Per-class weight pair for the two views. Least squares does not constrain
// the sign, so entries may be negative.
struct FusionWeights {
  std::vector<double> beta_time;
  std::vector<double> beta_tf;
};

struct OneHotLabels {
  Matrix values;  // N x P, exactly one 1 per column

  static OneHotLabels from_labels(const std::vector<int>& labels, int class_count);
  void validate() const;
};

struct FusionFitInfo {
  std::vector<int> singular_classes;  // rank-deficient normal equations
  std::vector<int> zero_classes;      // both rows identically zero -> beta [0,0]
};

// Per-class 2x2 normal equations over the stacked class-n rows of the two
// models; rank-deficient systems fall back to the minimum-norm solution.
FusionWeights fit_fusion_weights(const clf::LogitsMatrix& yt, const clf::LogitsMatrix& ytf,
                                 const OneHotLabels& truth, FusionFitInfo* info = nullptr);

// Row n of the result = beta_time[n] * yt row n + beta_tf[n] * ytf row n.
Matrix fuse(const clf::LogitsMatrix& yt, const clf::LogitsMatrix& ytf, const FusionWeights& w);

// Shifts any non-positive column to strictly positive values (epsilon 1e-6)
// and normalizes each column to sum to one.
clf::LogitsMatrix standardize(const Matrix& raw);

// Per-column argmax; ties break toward the lowest class index.
std::vector<int> decide(const clf::LogitsMatrix& fused);

void save_weights_json(const FusionWeights& w, const std::string& path);
FusionWeights load_weights_json(const std::string& path);

}  // namespace ddf::fusion
