#include "ddf/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "ddf/errors.hpp"
#include "ddf/rng.hpp"

namespace ddf::clf {

namespace {

constexpr char kMagic[8] = {'D', 'D', 'F', 'M', 'D', 'L', '0', '1'};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

void softmax_column(const double* scores, double* out, std::size_t n) {
  double m = scores[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, scores[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(scores[i] - m);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
}

// --- softmax regression: params = [W (N*d), b (N)] -------------------------

std::size_t softmax_param_count(std::size_t n, std::size_t d) { return n * d + n; }

LossGrad softmax_loss_grad(const std::vector<double>& params, const Matrix& x,
                           const std::vector<int>& y, std::size_t n, double l2) {
  const std::size_t p = x.rows, d = x.cols;
  const double* w = params.data();
  const double* b = params.data() + n * d;

  LossGrad out;
  out.grad.assign(params.size(), 0.0);
  double* gw = out.grad.data();
  double* gb = out.grad.data() + n * d;

  std::vector<double> scores(n), probs(n);
  for (std::size_t i = 0; i < p; ++i) {
    const double* xi = x.row(i);
    for (std::size_t c = 0; c < n; ++c) {
      const double* wc = w + c * d;
      double s = b[c];
      for (std::size_t j = 0; j < d; ++j) s += wc[j] * xi[j];
      scores[c] = s;
    }
    softmax_column(scores.data(), probs.data(), n);
    out.loss -= std::log(std::max(probs[static_cast<std::size_t>(y[i])], 1e-300));
    for (std::size_t c = 0; c < n; ++c) {
      double delta = probs[c] - (static_cast<int>(c) == y[i] ? 1.0 : 0.0);
      gb[c] += delta;
      double* gwc = gw + c * d;
      for (std::size_t j = 0; j < d; ++j) gwc[j] += delta * xi[j];
    }
  }

  const double inv_p = 1.0 / static_cast<double>(p);
  out.loss *= inv_p;
  for (auto& g : out.grad) g *= inv_p;
  // L2 on the weights only.
  double reg = 0.0;
  for (std::size_t i = 0; i < n * d; ++i) {
    reg += w[i] * w[i];
    gw[i] += l2 * w[i];
  }
  out.loss += 0.5 * l2 * reg;
  return out;
}

// --- one-hidden-layer tanh MLP: params = [W1 (h*d), b1, W2 (N*h), b2] ------

std::size_t mlp_param_count(std::size_t n, std::size_t d, std::size_t h) {
  return h * d + h + n * h + n;
}

LossGrad mlp_loss_grad(const std::vector<double>& params, const Matrix& x, const std::vector<int>& y,
                       std::size_t n, std::size_t h, double l2) {
  const std::size_t p = x.rows, d = x.cols;
  const double* w1 = params.data();
  const double* b1 = w1 + h * d;
  const double* w2 = b1 + h;
  const double* b2 = w2 + n * h;

  LossGrad out;
  out.grad.assign(params.size(), 0.0);
  double* gw1 = out.grad.data();
  double* gb1 = gw1 + h * d;
  double* gw2 = gb1 + h;
  double* gb2 = gw2 + n * h;

  std::vector<double> act(h), scores(n), probs(n), dact(h);
  for (std::size_t i = 0; i < p; ++i) {
    const double* xi = x.row(i);
    for (std::size_t u = 0; u < h; ++u) {
      const double* w1u = w1 + u * d;
      double s = b1[u];
      for (std::size_t j = 0; j < d; ++j) s += w1u[j] * xi[j];
      act[u] = std::tanh(s);
    }
    for (std::size_t c = 0; c < n; ++c) {
      const double* w2c = w2 + c * h;
      double s = b2[c];
      for (std::size_t u = 0; u < h; ++u) s += w2c[u] * act[u];
      scores[c] = s;
    }
    softmax_column(scores.data(), probs.data(), n);
    out.loss -= std::log(std::max(probs[static_cast<std::size_t>(y[i])], 1e-300));

    std::fill(dact.begin(), dact.end(), 0.0);
    for (std::size_t c = 0; c < n; ++c) {
      double delta = probs[c] - (static_cast<int>(c) == y[i] ? 1.0 : 0.0);
      gb2[c] += delta;
      double* gw2c = gw2 + c * h;
      const double* w2c = w2 + c * h;
      for (std::size_t u = 0; u < h; ++u) {
        gw2c[u] += delta * act[u];
        dact[u] += delta * w2c[u];
      }
    }
    for (std::size_t u = 0; u < h; ++u) {
      double dpre = dact[u] * (1.0 - act[u] * act[u]);
      gb1[u] += dpre;
      double* gw1u = gw1 + u * d;
      for (std::size_t j = 0; j < d; ++j) gw1u[j] += dpre * xi[j];
    }
  }

  const double inv_p = 1.0 / static_cast<double>(p);
  out.loss *= inv_p;
  for (auto& g : out.grad) g *= inv_p;
  double reg = 0.0;
  for (std::size_t i = 0; i < h * d; ++i) {
    reg += w1[i] * w1[i];
    gw1[i] += l2 * w1[i];
  }
  for (std::size_t i = 0; i < n * h; ++i) {
    reg += w2[i] * w2[i];
    gw2[i] += l2 * w2[i];
  }
  out.loss += 0.5 * l2 * reg;
  return out;
}

std::vector<double> initial_params(const ClassifierSpec& spec, std::size_t n, std::size_t d) {
  if (spec.kind == Kind::softmax_regression) {
    // Convex objective: zero init, so zero logits before training.
    return std::vector<double>(softmax_param_count(n, d), 0.0);
  }
  const auto h = static_cast<std::size_t>(spec.hidden_units);
  std::vector<double> params(mlp_param_count(n, d, h), 0.0);
  Rng rng(spec.seed);
  double r1 = std::sqrt(6.0 / static_cast<double>(d + h));
  for (std::size_t i = 0; i < h * d; ++i) params[i] = rng.uniform(-r1, r1);
  double r2 = std::sqrt(6.0 / static_cast<double>(h + n));
  double* w2 = params.data() + h * d + h;
  for (std::size_t i = 0; i < n * h; ++i) w2[i] = rng.uniform(-r2, r2);
  return params;
}

LossGrad loss_grad(const ClassifierSpec& spec, const std::vector<double>& params, const Matrix& x,
                   const std::vector<int>& y, std::size_t n) {
  if (spec.kind == Kind::softmax_regression) return softmax_loss_grad(params, x, y, n, spec.l2);
  return mlp_loss_grad(params, x, y, n, static_cast<std::size_t>(spec.hidden_units), spec.l2);
}

void check_training_inputs(const FeatureMatrix& x, const std::vector<int>& y, int class_count) {
  x.validate();
  if (x.rows() != y.size()) raise(Errc::shape_mismatch, "feature rows != label count");
  if (class_count < 2) raise(Errc::invalid_spec, "class_count must be >= 2");
  std::vector<char> seen(static_cast<std::size_t>(class_count), 0);
  for (int label : y) {
    if (label < 0 || label >= class_count) raise(Errc::invalid_spec, "label outside [0, N)");
    seen[static_cast<std::size_t>(label)] = 1;
  }
  for (int c = 0; c < class_count; ++c)
    if (!seen[static_cast<std::size_t>(c)])
      raise(Errc::missing_class, "class " + std::to_string(c) + " absent from training labels");
}

}  // namespace

Kind kind_from_string(const std::string& s) {
  if (s == "softmax_regression") return Kind::softmax_regression;
  if (s == "mlp") return Kind::mlp;
  if (s == "knn") return Kind::knn;
  raise(Errc::invalid_spec, "unknown classifier kind '" + s + "'");
}

const char* kind_to_string(Kind k) {
  switch (k) {
    case Kind::softmax_regression: return "softmax_regression";
    case Kind::mlp: return "mlp";
    case Kind::knn: return "knn";
  }
  return "?";
}

void ClassifierSpec::validate() const {
  if (kind != Kind::knn) {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      raise(Errc::invalid_spec, "learning_rate must be positive");
    if (epochs < 0) raise(Errc::invalid_spec, "epochs must be >= 0");
    if (l2 < 0.0 || !std::isfinite(l2)) raise(Errc::invalid_spec, "l2 must be >= 0");
  }
  if (kind == Kind::mlp && hidden_units < 1) raise(Errc::invalid_spec, "hidden_units must be >= 1");
  if (kind == Kind::knn && k_neighbors < 1) raise(Errc::invalid_spec, "k_neighbors must be >= 1");
}

void FeatureMatrix::validate() const {
  if (values.rows == 0 || values.cols == 0) raise(Errc::invalid_spec, "empty feature matrix");
  for (double v : values.data)
    if (!std::isfinite(v)) raise(Errc::non_finite_features, "feature matrix holds NaN/Inf");
}

void LogitsMatrix::validate() const {
  if (values.rows == 0 || values.cols == 0) raise(Errc::invalid_spec, "empty logits matrix");
  for (std::size_t p = 0; p < values.cols; ++p) {
    double sum = 0.0;
    for (std::size_t c = 0; c < values.rows; ++c) {
      double v = values.at(c, p);
      if (!std::isfinite(v) || v < 0.0) raise(Errc::invalid_spec, "logits must be finite and >= 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) raise(Errc::invalid_spec, "logits column does not sum to 1");
  }
}

Model Model::fit(const ClassifierSpec& spec, const FeatureMatrix& x, const std::vector<int>& y,
                 int class_count) {
  spec.validate();
  check_training_inputs(x, y, class_count);

  Model model;
  model.spec_ = spec;
  model.class_count_ = class_count;
  model.feature_dim_ = static_cast<int>(x.cols());

  if (spec.kind == Kind::knn) {
    model.params_ = x.values.data;
    model.stored_labels_.assign(y.begin(), y.end());
    return model;
  }

  auto n = static_cast<std::size_t>(class_count);
  model.params_ = initial_params(spec, n, x.cols());
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    LossGrad lg = loss_grad(spec, model.params_, x.values, y, n);
    if (!std::isfinite(lg.loss))
      raise(Errc::diverged_loss, "loss became non-finite at epoch " + std::to_string(epoch));
    for (std::size_t i = 0; i < model.params_.size(); ++i)
      model.params_[i] -= spec.learning_rate * lg.grad[i];
  }
  return model;
}

LogitsMatrix Model::predict(const FeatureMatrix& x) const {
  x.validate();
  if (static_cast<int>(x.cols()) != feature_dim_)
    raise(Errc::shape_mismatch, "feature width does not match the model");

  const auto n = static_cast<std::size_t>(class_count_);
  const std::size_t p = x.rows(), d = x.cols();
  LogitsMatrix out;
  out.values = Matrix(n, p);

  if (spec_.kind == Kind::knn) {
    const std::size_t train_rows = stored_labels_.size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(spec_.k_neighbors), train_rows);
    std::vector<std::pair<double, std::size_t>> dist(train_rows);
    std::vector<double> class_weight(n);
    for (std::size_t i = 0; i < p; ++i) {
      const double* xi = x.values.row(i);
      for (std::size_t t = 0; t < train_rows; ++t) {
        const double* xt = params_.data() + t * d;
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          double diff = xi[j] - xt[j];
          acc += diff * diff;
        }
        dist[t] = {acc, t};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      std::fill(class_weight.begin(), class_weight.end(), 0.0);
      double total = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        double w = 1.0 / (std::sqrt(dist[t].first) + 1e-12);
        class_weight[static_cast<std::size_t>(stored_labels_[dist[t].second])] += w;
        total += w;
      }
      for (std::size_t c = 0; c < n; ++c) out.values.at(c, i) = class_weight[c] / total;
    }
    return out;
  }

  std::vector<double> scores(n), probs(n), act;
  const double* w1 = params_.data();
  for (std::size_t i = 0; i < p; ++i) {
    const double* xi = x.values.row(i);
    if (spec_.kind == Kind::softmax_regression) {
      const double* b = params_.data() + n * d;
      for (std::size_t c = 0; c < n; ++c) {
        const double* wc = w1 + c * d;
        double s = b[c];
        for (std::size_t j = 0; j < d; ++j) s += wc[j] * xi[j];
        scores[c] = s;
      }
    } else {
      const auto h = static_cast<std::size_t>(spec_.hidden_units);
      const double* b1 = w1 + h * d;
      const double* w2 = b1 + h;
      const double* b2 = w2 + n * h;
      act.resize(h);
      for (std::size_t u = 0; u < h; ++u) {
        const double* w1u = w1 + u * d;
        double s = b1[u];
        for (std::size_t j = 0; j < d; ++j) s += w1u[j] * xi[j];
        act[u] = std::tanh(s);
      }
      for (std::size_t c = 0; c < n; ++c) {
        const double* w2c = w2 + c * h;
        double s = b2[c];
        for (std::size_t u = 0; u < h; ++u) s += w2c[u] * act[u];
        scores[c] = s;
      }
    }
    softmax_column(scores.data(), probs.data(), n);
    for (std::size_t c = 0; c < n; ++c) out.values.at(c, i) = probs[c];
  }
  return out;
}

double gradient_check(const ClassifierSpec& spec, const FeatureMatrix& x, const std::vector<int>& y,
                      int class_count) {
  spec.validate();
  if (spec.kind == Kind::knn) raise(Errc::invalid_spec, "gradient check needs a trainable kind");
  check_training_inputs(x, y, class_count);

  const auto n = static_cast<std::size_t>(class_count);
  std::vector<double> params = initial_params(spec, n, x.cols());
  LossGrad analytic = loss_grad(spec, params, x.values, y, n);

  const double step = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double saved = params[i];
    params[i] = saved + step;
    double up = loss_grad(spec, params, x.values, y, n).loss;
    params[i] = saved - step;
    double down = loss_grad(spec, params, x.values, y, n).loss;
    params[i] = saved;
    double numeric = (up - down) / (2.0 * step);
    double denom = std::max({std::abs(analytic.grad[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic.grad[i] - numeric) / denom);
  }
  return worst;
}

void Model::save(const std::string& path) const {
  nlohmann::json header = {{"kind", kind_to_string(spec_.kind)},
                           {"class_count", class_count_},
                           {"feature_dim", feature_dim_},
                           {"learning_rate", spec_.learning_rate},
                           {"epochs", spec_.epochs},
                           {"hidden_units", spec_.hidden_units},
                           {"l2", spec_.l2},
                           {"k_neighbors", spec_.k_neighbors},
                           {"seed", spec_.seed},
                           {"param_count", params_.size()},
                           {"label_count", stored_labels_.size()}};
  std::string head = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_failure, "cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  auto len = static_cast<std::uint32_t>(head.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(params_.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(stored_labels_.data()),
            static_cast<std::streamsize>(stored_labels_.size() * sizeof(std::int32_t)));
  if (!out) raise(Errc::io_failure, "short write on " + path);
}

Model Model::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_failure, "cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    raise(Errc::io_failure, "not a model file: " + path);
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string head(len, '\0');
  in.read(head.data(), len);
  if (!in) raise(Errc::io_failure, "truncated header in " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(head);
  } catch (const std::exception& e) {
    raise(Errc::io_failure, std::string("bad model header: ") + e.what());
  }

  Model model;
  model.spec_.kind = kind_from_string(header.at("kind").get<std::string>());
  model.spec_.learning_rate = header.at("learning_rate").get<double>();
  model.spec_.epochs = header.at("epochs").get<int>();
  model.spec_.hidden_units = header.at("hidden_units").get<int>();
  model.spec_.l2 = header.at("l2").get<double>();
  model.spec_.k_neighbors = header.at("k_neighbors").get<int>();
  model.spec_.seed = header.at("seed").get<std::uint64_t>();
  model.class_count_ = header.at("class_count").get<int>();
  model.feature_dim_ = header.at("feature_dim").get<int>();

  model.params_.resize(header.at("param_count").get<std::size_t>());
  in.read(reinterpret_cast<char*>(model.params_.data()),
          static_cast<std::streamsize>(model.params_.size() * sizeof(double)));
  model.stored_labels_.resize(header.at("label_count").get<std::size_t>());
  in.read(reinterpret_cast<char*>(model.stored_labels_.data()),
          static_cast<std::streamsize>(model.stored_labels_.size() * sizeof(std::int32_t)));
  if (!in) raise(Errc::io_failure, "truncated payload in " + path);
  return model;
}

}  // namespace ddf::clf
