#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "ddf/rng.hpp"
#include "ddf/errors.hpp"
#include "ddf/ssl_pipeline.hpp"

using namespace ddf;
using namespace ddf::ssl;

namespace {

clf::LogitsMatrix logits_from_rows(const std::vector<std::vector<double>>& rows) {
  clf::LogitsMatrix m;
  m.values = Matrix(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.values.at(r, c) = rows[r][c];
  return m;
}

// Small separable dataset: per-class Gaussian clusters in both views. The tf
// view is cleaner (tighter clusters) than the time view.
DataBundle make_bundle(std::size_t per_class, int classes, std::uint64_t seed,
                       double time_noise = 1.2, double tf_noise = 0.3) {
  Rng rng(seed);
  const std::size_t total = per_class * static_cast<std::size_t>(classes);
  const std::size_t d = 4;
  DataBundle data;
  data.class_count = classes;
  data.time_features.view_tag = "time";
  data.time_features.values = Matrix(total, d);
  data.tf_features.view_tag = "tf";
  data.tf_features.values = Matrix(total, d);
  data.labels.resize(total);
  for (int c = 0; c < classes; ++c) {
    for (std::size_t s = 0; s < per_class; ++s) {
      std::size_t row = static_cast<std::size_t>(c) * per_class + s;
      data.labels[row] = c;
      for (std::size_t j = 0; j < d; ++j) {
        double mean = (j == static_cast<std::size_t>(c) % d) ? 2.0 : -1.0;
        data.time_features.values.at(row, j) = mean + time_noise * rng.gaussian();
        data.tf_features.values.at(row, j) = mean + tf_noise * rng.gaussian();
      }
    }
  }
  return data;
}

// ids are class-major and temporally ordered within a class; slice per-class
// chunks into role sets the way the ten-split harness protocol does.
struct SmallSplits {
  std::vector<int> labeled;
  std::vector<std::vector<int>> unlabeled;
  EvalSplit eval;
};

SmallSplits make_splits(std::size_t per_class, int classes) {
  SmallSplits sp;
  sp.unlabeled.resize(6);
  for (int c = 0; c < classes; ++c) {
    auto base = static_cast<int>(static_cast<std::size_t>(c) * per_class);
    auto chunk = per_class / 10;
    for (std::size_t k = 0; k < 10; ++k) {
      for (std::size_t i = k * chunk; i < (k + 1) * chunk; ++i) {
        int id = base + static_cast<int>(i);
        if (k == 0)
          sp.labeled.push_back(id);
        else if (k <= 6)
          sp.unlabeled[k - 1].push_back(id);
        else if (k == 7)
          sp.eval.validation_ids.push_back(id);
        else
          sp.eval.test_ids.push_back(id);
      }
    }
  }
  return sp;
}

BranchSpecs fast_branches() {
  BranchSpecs b;
  b.time_spec.kind = clf::Kind::softmax_regression;
  b.time_spec.learning_rate = 0.3;
  b.time_spec.epochs = 60;
  b.tf_spec.kind = clf::Kind::softmax_regression;
  b.tf_spec.learning_rate = 0.3;
  b.tf_spec.epochs = 60;
  return b;
}

}  // namespace

TEST_CASE("threshold_select applies the strict confidence rule") {
  auto fused = logits_from_rows({{0.9, 0.6, 0.2}, {0.1, 0.4, 0.8}});
  std::vector<int> ids = {10, 11, 12};

  SUBCASE("xi 0.7 keeps only the confident columns") {
    auto cand = threshold_select(fused, ids, 0.7);
    REQUIRE(cand.size() == 2);
    REQUIRE(cand[0].size() == 1);
    CHECK(cand[0][0].id == 10);
    REQUIRE(cand[1].size() == 1);
    CHECK(cand[1][0].id == 12);
  }

  SUBCASE("xi 0 keeps every column") {
    auto cand = threshold_select(fused, ids, 0.0);
    CHECK(cand[0].size() + cand[1].size() == 3);
  }

  SUBCASE("a max exactly at xi is rejected") {
    auto tie = logits_from_rows({{0.5}, {0.5}});
    auto cand = threshold_select(tie, {1}, 0.5);
    CHECK(cand[0].empty());
    CHECK(cand[1].empty());
  }
}

TEST_CASE("balance_classes trims to the scarcest class") {
  Candidates cand(3);
  for (int i = 0; i < 10; ++i) cand[0].push_back({i, 0, 0.5 + 0.04 * i});
  for (int i = 0; i < 4; ++i) cand[1].push_back({100 + i, 1, 0.6 + 0.05 * i});
  for (int i = 0; i < 7; ++i) cand[2].push_back({200 + i, 2, 0.9 - 0.03 * i});

  auto sel = balance_classes(cand);
  CHECK(sel.per_class_count() == 4);
  CHECK(sel.total() == 12);
  // Class 0 keeps its most confident four: ids 9, 8, 7, 6.
  std::set<int> kept;
  for (const auto& p : sel.per_class[0]) kept.insert(p.id);
  CHECK(kept == std::set<int>{6, 7, 8, 9});
}

TEST_CASE("balance_classes with equal counts keeps everything") {
  Candidates cand(2);
  cand[0] = {{1, 0, 0.9}, {2, 0, 0.8}};
  cand[1] = {{3, 1, 0.7}, {4, 1, 0.95}};
  auto sel = balance_classes(cand);
  CHECK(sel.per_class_count() == 2);
}

TEST_CASE("an empty class empties the whole selection") {
  Candidates cand(3);
  cand[0] = {{1, 0, 0.9}};
  cand[2] = {{5, 2, 0.99}};
  auto sel = balance_classes(cand);
  CHECK(sel.total() == 0);
}

TEST_CASE("confidence ties break toward the lower segment id") {
  Candidates cand(1);
  cand[0] = {{42, 0, 0.8}, {7, 0, 0.8}, {99, 0, 0.9}};
  // Force k = 2 by adding a second class with two candidates.
  cand.push_back({{1, 1, 0.6}, {2, 1, 0.5}});
  auto sel = balance_classes(cand);
  REQUIRE(sel.per_class_count() == 2);
  CHECK(sel.per_class[0][0].id == 99);
  CHECK(sel.per_class[0][1].id == 7);
}

TEST_CASE("step one trains supervised only and consumes no unlabeled data") {
  auto data = make_bundle(30, 3, 1);
  auto sp = make_splits(30, 3);
  SslConfig cfg;
  cfg.steps = 1;
  cfg.repetitions = 1;
  cfg.xi = 0.0;
  auto reports = run_ddf(cfg, fast_branches(), data, sp.labeled, sp.unlabeled, sp.eval);
  REQUIRE(reports.size() == 1);
  REQUIRE(reports[0].size() == 1);
  CHECK(reports[0][0].accepted == 0);
  CHECK(reports[0][0].pool_pseudo == 0);
  CHECK(reports[0][0].pool_labeled == sp.labeled.size());
}

TEST_CASE("after step k exactly k-1 splits have been offered") {
  auto data = make_bundle(30, 3, 2);
  auto sp = make_splits(30, 3);

  SslContext ctx;
  ctx.data = &data;
  ctx.branches = fast_branches();
  ctx.cfg.xi = 0.0;
  ctx.eval = sp.eval;
  auto state = init_state(ctx, sp.labeled, Method::ddf, 0);

  std::set<int> offered;
  for (int step = 1; step <= 4; ++step) {
    const std::vector<int> none;
    const auto& split = step >= 2 ? sp.unlabeled[static_cast<std::size_t>(step - 2)] : none;
    ddf_step(state, ctx, split);
    offered.insert(split.begin(), split.end());

    // Everything offered so far is now either pseudo-labeled or residue.
    std::set<int> held;
    for (const auto& p : state.pool.pseudo) held.insert(p.id);
    for (int id : state.pool.residue) held.insert(id);
    CHECK(held == offered);
    CHECK(offered.size() == static_cast<std::size_t>(step - 1) * sp.unlabeled[0].size());
  }
}

TEST_CASE("a prohibitive threshold keeps the pseudo pool empty") {
  auto data = make_bundle(30, 3, 3);
  auto sp = make_splits(30, 3);
  SslConfig cfg;
  cfg.xi = 0.999;
  cfg.steps = 4;
  cfg.repetitions = 1;
  auto branches = fast_branches();
  branches.time_spec.epochs = 20;  // soft, unsaturated predictions
  branches.tf_spec.epochs = 20;
  auto reports = run_ddf(cfg, branches, data, sp.labeled, sp.unlabeled, sp.eval);
  for (const auto& r : reports[0]) {
    CHECK(r.accepted == 0);
    CHECK(r.pool_pseudo == 0);
  }
}

TEST_CASE("selection invariants hold at every step") {
  auto data = make_bundle(40, 3, 4);
  auto sp = make_splits(40, 3);

  SslContext ctx;
  ctx.data = &data;
  ctx.branches = fast_branches();
  ctx.cfg.xi = 0.5;
  ctx.eval = sp.eval;
  auto state = init_state(ctx, sp.labeled, Method::ddf, 0);

  std::size_t prev_pool = 0;
  for (int step = 1; step <= 5; ++step) {
    std::size_t pseudo_before = state.pool.pseudo.size();
    const std::vector<int> none;
    const auto& split = step >= 2 ? sp.unlabeled[static_cast<std::size_t>(step - 2)] : none;
    auto report = ddf_step(state, ctx, split);

    // Disjointness is asserted inside ddf_step; re-check from the outside.
    state.pool.check_disjoint();

    // Monotone pool.
    CHECK(state.pool.labeled_ids.size() + state.pool.pseudo.size() >= prev_pool);
    prev_pool = state.pool.labeled_ids.size() + state.pool.pseudo.size();

    // Newly accepted labels are balanced and strictly above threshold.
    std::map<int, std::size_t> per_class;
    for (std::size_t i = pseudo_before; i < state.pool.pseudo.size(); ++i) {
      const auto& p = state.pool.pseudo[i];
      per_class[p.label] += 1;
      CHECK(p.confidence > ctx.cfg.xi);
    }
    if (!per_class.empty()) {
      std::size_t first = per_class.begin()->second;
      for (const auto& [cls, count] : per_class) CHECK(count == first);
      CHECK(per_class.size() == 3);
    }
    CHECK(report.accepted == state.pool.pseudo.size() - pseudo_before);
  }
}

TEST_CASE("runs are deterministic given the seed") {
  auto data = make_bundle(30, 3, 5);
  auto sp = make_splits(30, 3);
  SslConfig cfg;
  cfg.xi = 0.4;
  cfg.steps = 4;
  cfg.repetitions = 2;
  cfg.seed = 99;
  auto a = run_ddf(cfg, fast_branches(), data, sp.labeled, sp.unlabeled, sp.eval);
  auto b = run_ddf(cfg, fast_branches(), data, sp.labeled, sp.unlabeled, sp.eval);
  REQUIRE(a.size() == b.size());
  for (std::size_t rep = 0; rep < a.size(); ++rep) {
    for (std::size_t s = 0; s < a[rep].size(); ++s) {
      CHECK(a[rep][s].acc_fused_test == b[rep][s].acc_fused_test);
      CHECK(a[rep][s].acc_time_val == b[rep][s].acc_time_val);
      CHECK(a[rep][s].accepted == b[rep][s].accepted);
      CHECK(a[rep][s].weights.beta_time == b[rep][s].weights.beta_time);
    }
  }
}

TEST_CASE("self-training matches ddf's supervised first step given one seed") {
  auto data = make_bundle(30, 3, 6);
  auto sp = make_splits(30, 3);
  SslConfig cfg;
  cfg.xi = 0.999;
  cfg.steps = 1;
  cfg.repetitions = 1;
  cfg.seed = 4242;
  auto branches = fast_branches();
  auto ddf_reports = run_ddf(cfg, branches, data, sp.labeled, sp.unlabeled, sp.eval);
  auto st_reports = run_self_training(cfg, branches, data, sp.labeled, sp.unlabeled, sp.eval);
  CHECK(ddf_reports[0][0].acc_time_test == st_reports[0][0].acc_time_test);
  CHECK(ddf_reports[0][0].acc_time_val == st_reports[0][0].acc_time_val);
}

TEST_CASE("self-training reports its own accuracy as the system accuracy") {
  auto data = make_bundle(30, 3, 7);
  auto sp = make_splits(30, 3);
  SslConfig cfg;
  cfg.xi = 0.5;
  cfg.steps = 3;
  cfg.repetitions = 1;
  auto reports = run_self_training(cfg, fast_branches(), data, sp.labeled, sp.unlabeled, sp.eval);
  std::size_t prev = 0;
  for (const auto& r : reports[0]) {
    CHECK(r.acc_fused_test == r.acc_time_test);
    CHECK(std::isnan(r.acc_tf_test));
    CHECK(r.pool_pseudo >= prev);  // monotone
    prev = r.pool_pseudo;
  }
}

TEST_CASE("empty labeled pool is rejected") {
  auto data = make_bundle(30, 3, 8);
  auto sp = make_splits(30, 3);
  SslContext ctx;
  ctx.data = &data;
  ctx.branches = fast_branches();
  ctx.eval = sp.eval;
  auto state = init_state(ctx, {}, Method::ddf, 0);
  CHECK_THROWS_AS(ddf_step(state, ctx, sp.unlabeled[0]), Error);
}

TEST_CASE("an overlapping next split is rejected") {
  auto data = make_bundle(30, 3, 9);
  auto sp = make_splits(30, 3);
  SslContext ctx;
  ctx.data = &data;
  ctx.branches = fast_branches();
  ctx.eval = sp.eval;
  auto state = init_state(ctx, sp.labeled, Method::ddf, 0);
  CHECK_THROWS_AS(ddf_step(state, ctx, sp.labeled), Error);
}

TEST_CASE("step report csv round-trips byte for byte") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "ddf_ssl_io";
  fs::create_directories(dir);

  auto data = make_bundle(30, 3, 10);
  auto sp = make_splits(30, 3);
  SslConfig cfg;
  cfg.steps = 3;
  cfg.repetitions = 2;
  auto reports = run_ddf(cfg, fast_branches(), data, sp.labeled, sp.unlabeled, sp.eval);

  auto p1 = (dir / "steps1.csv").string();
  auto p2 = (dir / "steps2.csv").string();
  write_step_reports_csv(reports, p1);
  auto back = read_step_reports_csv(p1);
  write_step_reports_csv(back, p2);

  std::ifstream f1(p1), f2(p2);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK(!b1.empty());
  fs::remove_all(dir);
}

TEST_CASE("fusion weights can be fit on the labeled pool only") {
  auto data = make_bundle(30, 3, 12);
  auto sp = make_splits(30, 3);
  SslConfig cfg;
  cfg.xi = 0.2;
  cfg.steps = 3;
  cfg.repetitions = 1;
  cfg.seed = 5;

  auto with_pseudo = run_ddf(cfg, fast_branches(), data, sp.labeled, sp.unlabeled, sp.eval);
  cfg.fit_fusion_on_labeled_only = true;
  auto labeled_only = run_ddf(cfg, fast_branches(), data, sp.labeled, sp.unlabeled, sp.eval);

  // Same supervised first step either way; later steps fit the fusion on
  // different pools once pseudo-labels exist.
  CHECK(with_pseudo[0][0].weights.beta_time == labeled_only[0][0].weights.beta_time);
  CHECK(with_pseudo[0][2].weights.beta_time != labeled_only[0][2].weights.beta_time);
}
