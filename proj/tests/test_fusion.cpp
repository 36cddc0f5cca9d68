#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ddf/errors.hpp"
#include "ddf/fusion.hpp"
#include "ddf/rng.hpp"
#include "oracles.hpp"

using namespace ddf;
using namespace ddf::fusion;

namespace {

clf::LogitsMatrix logits_from_rows(const std::vector<std::vector<double>>& rows) {
  clf::LogitsMatrix m;
  m.values = Matrix(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.values.at(r, c) = rows[r][c];
  return m;
}

// Random column-stochastic matrix.
clf::LogitsMatrix random_logits(std::size_t n, std::size_t p, Rng& rng) {
  clf::LogitsMatrix m;
  m.values = Matrix(n, p);
  for (std::size_t c = 0; c < p; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double v = 0.05 + rng.uniform();
      m.values.at(r, c) = v;
      sum += v;
    }
    for (std::size_t r = 0; r < n; ++r) m.values.at(r, c) /= sum;
  }
  return m;
}

double class_sse(const clf::LogitsMatrix& yt, const clf::LogitsMatrix& ytf,
                 const OneHotLabels& truth, std::size_t cls, double bt, double btf) {
  double acc = 0.0;
  for (std::size_t p = 0; p < yt.sample_count(); ++p) {
    double fit = bt * yt.values.at(cls, p) + btf * ytf.values.at(cls, p);
    double diff = fit - truth.values.at(cls, p);
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

TEST_CASE("exact-fit design recovers the [1, 0] weights") {
  auto yt = logits_from_rows({{1, 0, 0, 1}, {0, 1, 1, 0}});
  auto ytf = logits_from_rows({{0.5, 0.5, 0.5, 0.5}, {0.5, 0.5, 0.5, 0.5}});
  auto truth = OneHotLabels::from_labels({0, 1, 1, 0}, 2);
  auto w = fit_fusion_weights(yt, ytf, truth);
  CHECK(w.beta_time[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(w.beta_tf[0] == doctest::Approx(0.0).scale(1).epsilon(1e-10));
}

TEST_CASE("identical model rows fall back to the minimum-norm split") {
  auto yt = logits_from_rows({{1, 0, 0, 1}, {0, 1, 1, 0}});
  auto truth = OneHotLabels::from_labels({0, 1, 1, 0}, 2);
  FusionFitInfo info;
  auto w = fit_fusion_weights(yt, yt, truth, &info);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(w.beta_time[c] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(w.beta_tf[c] == doctest::Approx(0.5).epsilon(1e-10));
  }
  CHECK(info.singular_classes.size() == 2);
  CHECK(info.zero_classes.empty());
}

TEST_CASE("weights match the dense least-squares oracle on a fixed instance") {
  auto yt = logits_from_rows({{0.9, 0.2, 0.8, 0.1}, {0.1, 0.8, 0.2, 0.9}});
  auto ytf = logits_from_rows({{0.6, 0.5, 0.4, 0.3}, {0.4, 0.5, 0.6, 0.7}});
  auto truth = OneHotLabels::from_labels({0, 1, 0, 1}, 2);
  auto w = fit_fusion_weights(yt, ytf, truth);

  std::vector<double> design = {0.9, 0.6, 0.2, 0.5, 0.8, 0.4, 0.1, 0.3};
  std::vector<double> target = {1, 0, 1, 0};
  auto expected = oracle::dense_lstsq(design, 4, 2, target);
  CHECK(std::abs(w.beta_time[0] - expected[0]) < 1e-10);
  CHECK(std::abs(w.beta_tf[0] - expected[1]) < 1e-10);
}

TEST_CASE("fitted weights beat both single-model baselines on random instances") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 2 + (rng.next_u64() % 4);  // up to 5 classes
    std::size_t p = 4 + (rng.next_u64() % 47);
    auto yt = random_logits(n, p, rng);
    auto ytf = random_logits(n, p, rng);
    std::vector<int> labels(p);
    for (auto& l : labels) l = static_cast<int>(rng.next_u64() % n);
    auto truth = OneHotLabels::from_labels(labels, static_cast<int>(n));

    auto w = fit_fusion_weights(yt, ytf, truth);
    for (std::size_t c = 0; c < n; ++c) {
      double fitted = class_sse(yt, ytf, truth, c, w.beta_time[c], w.beta_tf[c]);
      CHECK(fitted <= class_sse(yt, ytf, truth, c, 1.0, 0.0) + 1e-9);
      CHECK(fitted <= class_sse(yt, ytf, truth, c, 0.0, 1.0) + 1e-9);

      // And they agree with the independent dense solver.
      std::vector<double> design(p * 2), target(p);
      for (std::size_t i = 0; i < p; ++i) {
        design[i * 2] = yt.values.at(c, i);
        design[i * 2 + 1] = ytf.values.at(c, i);
        target[i] = truth.values.at(c, i);
      }
      auto expected = oracle::dense_lstsq(design, p, 2, target);
      CHECK(std::abs(w.beta_time[c] - expected[0]) < 1e-8);
      CHECK(std::abs(w.beta_tf[c] - expected[1]) < 1e-8);
    }
  }
}

TEST_CASE("all-zero class rows yield zero weights and a warning flag") {
  auto yt = logits_from_rows({{0, 0, 0}, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}});
  auto ytf = logits_from_rows({{0, 0, 0}, {0.4, 0.4, 0.4}, {0.6, 0.6, 0.6}});
  auto truth = OneHotLabels::from_labels({1, 2, 1}, 3);
  FusionFitInfo info;
  auto w = fit_fusion_weights(yt, ytf, truth, &info);
  CHECK(w.beta_time[0] == 0.0);
  CHECK(w.beta_tf[0] == 0.0);
  REQUIRE(info.zero_classes.size() == 1);
  CHECK(info.zero_classes[0] == 0);
}

TEST_CASE("fit_fusion_weights rejects mismatched shapes") {
  auto yt = logits_from_rows({{1, 0}, {0, 1}});
  auto ytf = logits_from_rows({{1, 0, 0}, {0, 1, 1}});
  auto truth = OneHotLabels::from_labels({0, 1}, 2);
  CHECK_THROWS_AS(fit_fusion_weights(yt, ytf, truth), Error);
}

TEST_CASE("fuse with identity weights returns the time view exactly") {
  Rng rng(5);
  auto yt = random_logits(3, 6, rng);
  auto ytf = random_logits(3, 6, rng);
  FusionWeights w{{1, 1, 1}, {0, 0, 0}};
  auto fused = fuse(yt, ytf, w);
  CHECK(fused.data == yt.values.data);
}

TEST_CASE("averaging two equal views is the identity") {
  Rng rng(6);
  auto yt = random_logits(4, 5, rng);
  FusionWeights w{{0.5, 0.5, 0.5, 0.5}, {0.5, 0.5, 0.5, 0.5}};
  auto fused = fuse(yt, yt, w);
  for (std::size_t i = 0; i < fused.data.size(); ++i)
    CHECK(fused.data[i] == doctest::Approx(yt.values.data[i]).epsilon(1e-15));
}

TEST_CASE("hand-computed two-class fusion") {
  auto yt = logits_from_rows({{0.6}, {0.4}});
  auto ytf = logits_from_rows({{0.2}, {0.8}});
  FusionWeights w{{1.0, 0.5}, {0.5, 1.0}};
  auto fused = fuse(yt, ytf, w);
  CHECK(fused.at(0, 0) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(fused.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("standardize leaves a positive unit column nearly unchanged") {
  Matrix raw(3, 1);
  raw.at(0, 0) = 0.5;
  raw.at(1, 0) = 0.3;
  raw.at(2, 0) = 0.2;
  auto out = standardize(raw);
  CHECK(out.values.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.values.at(1, 0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(out.values.at(2, 0) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("standardize shifts non-positive columns") {
  Matrix raw(3, 1);
  raw.at(0, 0) = 2.0;
  raw.at(1, 0) = -1.0;
  raw.at(2, 0) = 1.0;
  auto out = standardize(raw);
  out.validate();
  CHECK(out.values.at(0, 0) == doctest::Approx(0.6).epsilon(1e-5));
  CHECK(out.values.at(1, 0) == doctest::Approx(2e-7).epsilon(1e-2));
  CHECK(out.values.at(2, 0) == doctest::Approx(0.4).epsilon(1e-5));
  for (double v : out.values.data) CHECK(v > 0.0);
}

TEST_CASE("standardize maps a constant positive column to uniform") {
  Matrix raw(3, 2, 4.2);
  auto out = standardize(raw);
  for (double v : out.values.data) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("standardize preserves the argmax of positive columns") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix raw(4, 8);
    for (auto& v : raw.data) v = 0.01 + rng.uniform();
    auto out = standardize(raw);
    for (std::size_t p = 0; p < 8; ++p) {
      std::size_t before = 0, after = 0;
      for (std::size_t c = 1; c < 4; ++c) {
        if (raw.at(c, p) > raw.at(before, p)) before = c;
        if (out.values.at(c, p) > out.values.at(after, p)) after = c;
      }
      CHECK(before == after);
    }
  }
}

TEST_CASE("decide takes the per-column argmax with low-index ties") {
  auto fused = logits_from_rows({{0.2, 0.5}, {0.5, 0.5}, {0.3, 0.0}});
  auto labels = decide(fused);
  CHECK(labels[0] == 1);
  CHECK(labels[1] == 0);  // tie breaks toward class 0
}

TEST_CASE("identity-weight fusion of a perfect classifier reproduces the labels") {
  auto yt = logits_from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  auto ytf = logits_from_rows(
      {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}});
  FusionWeights w{{1, 1, 1}, {0, 0, 0}};
  auto labels = decide(standardize(fuse(yt, ytf, w)));
  CHECK(labels == std::vector<int>{0, 1, 2});
}

TEST_CASE("fusion weights serialize to json and back bit-exactly") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "ddf_fusion_io";
  fs::create_directories(dir);

  FusionWeights w{{0.123456789012345, -1.5, 3.0}, {1e-9, 0.5, -0.25}};
  auto p1 = (dir / "w1.json").string();
  auto p2 = (dir / "w2.json").string();
  save_weights_json(w, p1);
  auto back = load_weights_json(p1);
  CHECK(back.beta_time == w.beta_time);
  CHECK(back.beta_tf == w.beta_tf);

  save_weights_json(back, p2);
  std::ifstream f1(p1), f2(p2);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  fs::remove_all(dir);
}
