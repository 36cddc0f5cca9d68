#include "ddf/fusion.hpp"

#include <cassert>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ddf/errors.hpp"

namespace ddf::fusion {

namespace {

// Minimum-norm solution of the symmetric PSD 2x2 system [[a,b],[b,c]] x = r
// via its eigendecomposition; eigenvalues below 1e-12 of the largest are
// treated as zero rank.
struct Solve2 {
  double x0 = 0.0, x1 = 0.0;
  bool singular = false;
  bool zero = false;
};

Solve2 solve_psd2(double a, double b, double c, double r0, double r1) {
  Solve2 out;
  double tr = a + c;
  double disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4.0 * b * b));
  double l1 = 0.5 * (tr + disc);
  double l2 = 0.5 * (tr - disc);
  double lmax = std::max(std::abs(l1), std::abs(l2));
  if (lmax <= 0.0) {
    out.singular = true;
    out.zero = true;
    return out;
  }

  // Eigenvector for l1; the second is its perpendicular.
  double v0, v1;
  if (std::abs(b) > 1e-300) {
    v0 = l1 - c;
    v1 = b;
  } else if (a >= c) {
    v0 = 1.0;
    v1 = 0.0;
  } else {
    v0 = 0.0;
    v1 = 1.0;
  }
  double norm = std::hypot(v0, v1);
  v0 /= norm;
  v1 /= norm;
  double u0 = -v1, u1 = v0;  // eigenvector for l2

  const double tol = 1e-12 * lmax;
  double acc0 = 0.0, acc1 = 0.0;
  int rank = 0;
  if (l1 > tol) {
    double proj = (v0 * r0 + v1 * r1) / l1;
    acc0 += proj * v0;
    acc1 += proj * v1;
    ++rank;
  }
  if (l2 > tol) {
    double proj = (u0 * r0 + u1 * r1) / l2;
    acc0 += proj * u0;
    acc1 += proj * u1;
    ++rank;
  }
  out.x0 = acc0;
  out.x1 = acc1;
  out.singular = rank < 2;
  return out;
}

}  // namespace

OneHotLabels OneHotLabels::from_labels(const std::vector<int>& labels, int class_count) {
  if (class_count < 1) raise(Errc::invalid_spec, "class_count must be >= 1");
  OneHotLabels out;
  out.values = Matrix(static_cast<std::size_t>(class_count), labels.size());
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] < 0 || labels[p] >= class_count)
      raise(Errc::invalid_spec, "label outside [0, N)");
    out.values.at(static_cast<std::size_t>(labels[p]), p) = 1.0;
  }
  return out;
}

void OneHotLabels::validate() const {
  for (std::size_t p = 0; p < values.cols; ++p) {
    int ones = 0;
    for (std::size_t c = 0; c < values.rows; ++c) {
      double v = values.at(c, p);
      if (v != 0.0 && v != 1.0) raise(Errc::invalid_spec, "one-hot entries must be 0 or 1");
      if (v == 1.0) ++ones;
    }
    if (ones != 1) raise(Errc::invalid_spec, "one-hot column must hold exactly one 1");
  }
}

FusionWeights fit_fusion_weights(const clf::LogitsMatrix& yt, const clf::LogitsMatrix& ytf,
                                 const OneHotLabels& truth, FusionFitInfo* info) {
  const std::size_t n = yt.class_count();
  const std::size_t p = yt.sample_count();
  if (ytf.class_count() != n || ytf.sample_count() != p || truth.values.rows != n ||
      truth.values.cols != p)
    raise(Errc::shape_mismatch, "fusion inputs disagree on N or P");
  if (p < 2) raise(Errc::shape_mismatch, "fusion fit needs P >= 2");

  FusionWeights w;
  w.beta_time.resize(n);
  w.beta_tf.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double* rt = yt.values.row(c);
    const double* rtf = ytf.values.row(c);
    const double* ry = truth.values.row(c);
    double a = 0.0, b = 0.0, cc = 0.0, r0 = 0.0, r1 = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      a += rt[i] * rt[i];
      b += rt[i] * rtf[i];
      cc += rtf[i] * rtf[i];
      r0 += rt[i] * ry[i];
      r1 += rtf[i] * ry[i];
    }
    Solve2 sol = solve_psd2(a, b, cc, r0, r1);
    w.beta_time[c] = sol.x0;
    w.beta_tf[c] = sol.x1;
    if (info != nullptr) {
      if (sol.singular) info->singular_classes.push_back(static_cast<int>(c));
      if (sol.zero) info->zero_classes.push_back(static_cast<int>(c));
    }
  }
  return w;
}

Matrix fuse(const clf::LogitsMatrix& yt, const clf::LogitsMatrix& ytf, const FusionWeights& w) {
  const std::size_t n = yt.class_count();
  const std::size_t p = yt.sample_count();
  if (ytf.class_count() != n || ytf.sample_count() != p || w.beta_time.size() != n ||
      w.beta_tf.size() != n)
    raise(Errc::shape_mismatch, "fuse inputs disagree on N or P");

  Matrix out(n, p);
  for (std::size_t c = 0; c < n; ++c) {
    const double bt = w.beta_time[c];
    const double btf = w.beta_tf[c];
    const double* rt = yt.values.row(c);
    const double* rtf = ytf.values.row(c);
    double* ro = out.row(c);
    for (std::size_t i = 0; i < p; ++i) ro[i] = bt * rt[i] + btf * rtf[i];
  }
  return out;
}

clf::LogitsMatrix standardize(const Matrix& raw) {
  constexpr double kEps = 1e-6;
  clf::LogitsMatrix out;
  out.values = raw;
  for (std::size_t p = 0; p < raw.cols; ++p) {
    double mn = raw.at(0, p);
    for (std::size_t c = 1; c < raw.rows; ++c) mn = std::min(mn, raw.at(c, p));
    if (!std::isfinite(mn)) raise(Errc::invalid_spec, "fused matrix holds NaN/Inf");
    double shift = mn <= 0.0 ? -mn + kEps : 0.0;
    double sum = 0.0;
    for (std::size_t c = 0; c < raw.rows; ++c) {
      double v = raw.at(c, p) + shift;
      out.values.at(c, p) = v;
      sum += v;
    }
    assert(sum > 0.0);  // cannot occur: entries are strictly positive after the shift
    for (std::size_t c = 0; c < raw.rows; ++c) out.values.at(c, p) /= sum;
  }
  return out;
}

std::vector<int> decide(const clf::LogitsMatrix& fused) {
  std::vector<int> labels(fused.sample_count());
  for (std::size_t p = 0; p < fused.sample_count(); ++p) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < fused.class_count(); ++c)
      if (fused.values.at(c, p) > fused.values.at(best, p)) best = c;
    labels[p] = static_cast<int>(best);
  }
  return labels;
}

void save_weights_json(const FusionWeights& w, const std::string& path) {
  nlohmann::json j = {{"beta_time", w.beta_time}, {"beta_tf", w.beta_tf}};
  std::ofstream out(path);
  if (!out) raise(Errc::io_failure, "cannot write " + path);
  out << j.dump(2) << "\n";
}

FusionWeights load_weights_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_failure, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    raise(Errc::io_failure, std::string("bad weights file: ") + e.what());
  }
  FusionWeights w;
  w.beta_time = j.at("beta_time").get<std::vector<double>>();
  w.beta_tf = j.at("beta_tf").get<std::vector<double>>();
  if (w.beta_time.size() != w.beta_tf.size())
    raise(Errc::shape_mismatch, "beta vectors differ in length");
  return w;
}

}  // namespace ddf::fusion
