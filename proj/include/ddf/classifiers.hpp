#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddf/matrix.hpp"

namespace ddf::clf {

enum class Kind { softmax_regression, mlp, knn };

Kind kind_from_string(const std::string& s);
const char* kind_to_string(Kind k);

struct ClassifierSpec {
  Kind kind = Kind::softmax_regression;
  double learning_rate = 0.1;
  int epochs = 200;
  int hidden_units = 32;   // mlp
  double l2 = 0.0;
  int k_neighbors = 5;     // knn
  std::uint64_t seed = 0;

  void validate() const;
};

// P samples x d features, row-major, tagged with the view it came from.
struct FeatureMatrix {
  Matrix values;
  std::string view_tag;

  std::size_t rows() const { return values.rows; }
  std::size_t cols() const { return values.cols; }
  void validate() const;  // rejects NaN/Inf
};

// N x P column-stochastic prediction matrix.
struct LogitsMatrix {
  Matrix values;

  std::size_t class_count() const { return values.rows; }
  std::size_t sample_count() const { return values.cols; }
  void validate() const;
};

// Immutable trained classifier. Trainable kinds pack their weights into
// params(); knn keeps its training set there.
class Model {
 public:
  Model() = default;

  const ClassifierSpec& spec() const { return spec_; }
  int class_count() const { return class_count_; }
  int feature_dim() const { return feature_dim_; }
  const std::vector<double>& params() const { return params_; }

  LogitsMatrix predict(const FeatureMatrix& x) const;

  // JSON header + raw little-endian float64 parameter block; bit-exact
  // round trip.
  void save(const std::string& path) const;
  static Model load(const std::string& path);

  static Model fit(const ClassifierSpec& spec, const FeatureMatrix& x, const std::vector<int>& y,
                   int class_count);

 private:
  ClassifierSpec spec_;
  int class_count_ = 0;
  int feature_dim_ = 0;
  std::vector<double> params_;
  std::vector<std::int32_t> stored_labels_;  // knn training labels
};

inline Model fit(const ClassifierSpec& spec, const FeatureMatrix& x, const std::vector<int>& y,
                 int class_count) {
  return Model::fit(spec, x, y, class_count);
}

inline LogitsMatrix predict(const Model& model, const FeatureMatrix& x) { return model.predict(x); }

// Max relative error between the analytic loss gradient and central finite
// differences (step 1e-5) at the seeded initial parameters. Only meaningful
// for the trainable kinds on small instances.
double gradient_check(const ClassifierSpec& spec, const FeatureMatrix& x, const std::vector<int>& y,
                      int class_count);

}  // namespace ddf::clf
