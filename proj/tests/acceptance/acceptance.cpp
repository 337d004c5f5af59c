// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reckit/baselines.hpp"
#include "reckit/batch.hpp"
#include "reckit/crossfold.hpp"
#include "reckit/error.hpp"
#include "reckit/experiment.hpp"
#include "reckit/knn.hpp"
#include "reckit/metrics.hpp"
#include "reckit/mf.hpp"
#include "reckit/random.hpp"
#include "reckit/registry.hpp"
#include "reckit/topn.hpp"

namespace fs = std::filesystem;
using namespace reckit;

namespace {

const fs::path kSource = RECKIT_SOURCE_DIR;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << std::fixed << x;
  return s.str();
}

std::string sci(double x) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << x;
  return s.str();
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "FAILED ") + what);
  }
};

// Random explicit table with half-star ratings and tied timestamps.
RatingTable random_table(Rng& rng, std::size_t n_users, std::size_t n_items, std::size_t min_per_user,
                         double density) {
  std::vector<std::string> users, items;
  std::vector<double> ratings;
  std::vector<std::int64_t> ts;
  for (std::size_t u = 0; u < n_users; ++u) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n_items; ++i) {
      const bool forced = n_items - i <= min_per_user - std::min(count, min_per_user);
      if (!forced && rng.uniform01() >= density) continue;
      users.push_back("u" + std::to_string(u));
      items.push_back("i" + std::to_string(i));
      ratings.push_back(1.0 + 0.5 * static_cast<double>(rng.uniform_index(9)));
      ts.push_back(static_cast<std::int64_t>(rng.uniform_index(20)));
      ++count;
    }
  }
  return RatingTable::from_columns(std::move(users), std::move(items), std::move(ratings), std::move(ts));
}

const AlgorithmSummary* summary_for(const ExperimentResult& r, const std::string& label) {
  for (const auto& s : r.summaries)
    if (s.label == label) return &s;
  return nullptr;
}

double metric_of(const AlgorithmSummary& s, const std::string& name) {
  for (const auto& [k, v] : s.metrics)
    if (k == name) return v;
  return kMissing;
}

// 1 ------------------------------------------------------------------------

Outcome end_to_end() {
  Outcome o;
  auto config = ExperimentConfig::from_file(kSource / "configs" / "basic.ini");
  const fs::path ml100k = kSource / "data" / "ml-100k" / "u.data";
  if (fs::exists(ml100k)) {
    config.data.path = ml100k;
    o.notes.push_back("data ml-100k");
  } else {
    o.notes.push_back("data synthetic-100 (ml-100k not present)");
  }
  const auto start = Clock::now();
  const auto ratings = load_experiment_data(config.data);
  const auto result = run_experiment(config, ratings);
  const double secs = seconds_since(start);
  const auto* als = summary_for(result, "als");
  o.require(als != nullptr, "als summary present");
  if (!als) return o;
  const double rmse = als->rmse.value_or(kMissing);
  const double ndcg = metric_of(*als, "ndcg");
  o.require(std::isfinite(rmse), "RMSE " + fmt(rmse) + " finite");
  o.require(ndcg > 0.0 && ndcg <= 1.0, "nDCG " + fmt(ndcg) + " in (0,1]");
  o.require(secs <= 600.0, "runtime " + fmt(secs, 1) + "s <= 600s");
  return o;
}

// 2 ------------------------------------------------------------------------

Outcome accuracy_ordering() {
  Outcome o;
  auto config = ExperimentConfig::from_file(kSource / "configs" / "ordering.ini");
  const fs::path ml100k = kSource / "data" / "ml-100k" / "u.data";
  if (fs::exists(ml100k)) {
    config.data.path = ml100k;
    config.data.format = RatingFormat::kMl100kTsv;
    o.notes.push_back("data ml-100k");
  } else {
    o.notes.push_back("data synthetic 943x1682 surrogate (ml-100k not present)");
  }
  config.algorithms.push_back({"ii-explicit", "item-item", {{"feedback", "explicit"}}});
  const auto start = Clock::now();
  const auto ratings = load_experiment_data(config.data);
  const auto result = run_experiment(config, ratings);
  const double secs = seconds_since(start);

  auto rmse = [&](const std::string& label) {
    const auto* s = summary_for(result, label);
    return s && s->rmse ? *s->rmse : kMissing;
  };
  auto ndcg = [&](const std::string& label) {
    const auto* s = summary_for(result, label);
    return s ? metric_of(*s, "ndcg") : kMissing;
  };
  const double r_als = rmse("als"), r_bias = rmse("bias"), r_mean = rmse("mean");
  const double n_ii = ndcg("ii"), n_pop = ndcg("pop"), n_rand = ndcg("random");
  o.require(r_bias - r_als > 0.01, "RMSE als " + fmt(r_als) + " < bias " + fmt(r_bias) + " by > 0.01");
  o.require(r_mean - r_bias > 0.01, "RMSE bias " + fmt(r_bias) + " < mean " + fmt(r_mean) + " by > 0.01");
  o.require(n_ii - n_pop > 0.01, "nDCG item-item " + fmt(n_ii) + " > popular " + fmt(n_pop) + " by > 0.01");
  o.require(n_pop - n_rand > 0.01, "nDCG popular " + fmt(n_pop) + " > random " + fmt(n_rand) + " by > 0.01");
  o.notes.push_back("info: explicit item-item nDCG " + fmt(ndcg("ii-explicit")));
  o.require(secs <= 1800.0, "runtime " + fmt(secs, 1) + "s <= 1800s");
  return o;
}

// 3 ------------------------------------------------------------------------

bool bias_oracle(Rng& rng) {
  auto t = random_table(rng, 1 + rng.uniform_index(5), 1 + rng.uniform_index(5), 1, 0.5);
  const double gu = rng.uniform01() < 0.5 ? 0.0 : rng.uniform(0.0, 5.0);
  const double gi = rng.uniform01() < 0.5 ? 0.0 : rng.uniform(0.0, 5.0);
  const auto& us = t.users();
  const auto& is = t.items();
  const auto& rs = t.ratings();
  double mu = 0;
  for (double r : rs) mu += r;
  mu /= static_cast<double>(rs.size());
  std::map<std::string, std::pair<double, double>> ia, ua;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    ia[is[k]].first += rs[k] - mu;
    ia[is[k]].second += 1;
  }
  std::map<std::string, double> bi, bu;
  for (auto& [i, a] : ia) bi[i] = a.first / (a.second + gi);
  for (std::size_t k = 0; k < rs.size(); ++k) {
    ua[us[k]].first += rs[k] - mu - bi[is[k]];
    ua[us[k]].second += 1;
  }
  for (auto& [u, a] : ua) bu[u] = a.first / (a.second + gu);
  Bias bias(BiasOptions{.user_damping = gu, .item_damping = gi});
  bias.fit(t);
  std::vector<std::string> items;
  for (auto& [i, b] : bi) items.push_back(i);
  for (auto& [u, b] : bu) {
    const auto got = bias.predict_for_user(u, items);
    for (std::size_t k = 0; k < items.size(); ++k)
      if (!(std::abs(got[k] - (mu + b + bi[items[k]])) <= 1e-9)) return false;
  }
  return true;
}

bool cosine_oracle(Rng& rng, double& worst) {
  const auto nu = 2 + rng.uniform_index(6), ni = 2 + rng.uniform_index(6);
  auto t = random_table(rng, nu, ni, 2, 0.6);
  const auto ds = build_dataset(t);
  std::vector<std::vector<double>> c(ds.n_users(), std::vector<double>(ds.n_items(), 0.0));
  for (std::size_t u = 0; u < ds.n_users(); ++u) {
    auto cols = ds.by_user.row_cols(static_cast<std::int32_t>(u));
    auto vals = ds.by_user.row_values(static_cast<std::int32_t>(u));
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    for (std::size_t k = 0; k < cols.size(); ++k) c[u][cols[k]] = vals[k] - mean;
  }
  ItemItem ii(KnnOptions{.nnbrs = 100});
  ii.fit(t);
  bool ok = true;
  for (std::size_t i = 0; i < ds.n_items(); ++i)
    for (std::size_t j = 0; j < ds.n_items(); ++j) {
      double want = 0;
      if (i != j) {
        double dot = 0, a = 0, b = 0;
        for (std::size_t u = 0; u < ds.n_users(); ++u) {
          dot += c[u][i] * c[u][j];
          a += c[u][i] * c[u][i];
          b += c[u][j] * c[u][j];
        }
        want = a > 0 && b > 0 ? dot / std::sqrt(a * b) : 0.0;
        if (want <= 1e-6) want = 0.0;
      }
      const auto pi = ii.items().position(ds.items.id(static_cast<std::int32_t>(i)));
      const auto pj = ii.items().position(ds.items.id(static_cast<std::int32_t>(j)));
      const double diff = std::abs(ii.similarities().lookup(pi, pj) - want);
      worst = std::max(worst, diff);
      ok = ok && diff <= 1e-12;
    }
  return ok;
}

bool cg_oracle(Rng& rng, double& worst) {
  // 5 users x 6 items: solve each user's row against fixed item factors.
  const Eigen::Index f = 3;
  FactorMatrix y(6, f);
  for (Eigen::Index k = 0; k < y.size(); ++k) y.data()[k] = rng.uniform(-1, 1);
  const Eigen::MatrixXd gram = y.transpose() * y;
  const double weight = 40.0, reg = 0.1;
  bool ok = true;
  for (int u = 0; u < 5; ++u) {
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
    for (std::int32_t i = 0; i < 6; ++i)
      if (rng.uniform01() < 0.5) {
        cols.push_back(i);
        vals.push_back(1.0 + static_cast<double>(rng.uniform_index(4)));
      }
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(f, f) * reg;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(f);
    for (Eigen::Index i = 0; i < 6; ++i) {
      double c = 1.0, p = 0.0;
      for (std::size_t k = 0; k < cols.size(); ++k)
        if (cols[k] == i) {
          c = 1.0 + weight * vals[k];
          p = 1.0;
        }
      const Eigen::VectorXd yi = y.row(i).transpose();
      a += c * yi * yi.transpose();
      b += c * p * yi;
    }
    const Eigen::VectorXd direct = a.ldlt().solve(b);
    Eigen::VectorXd x(f);
    for (Eigen::Index g = 0; g < f; ++g) x(g) = rng.uniform(-0.01, 0.01);
    implicit_cg_solve(gram, y, cols, vals, weight, reg, 10, x);
    const double diff = (x - direct).cwiseAbs().maxCoeff();
    worst = std::max(worst, diff);
    ok = ok && diff <= 1e-4;
  }
  return ok;
}

bool reclist_oracle(Rng& rng) {
  const std::vector<std::string> names{"ndcg", "precision", "recall", "ap", "recip_rank"};
  const auto n_users = 1 + rng.uniform_index(10), n_items = 1 + rng.uniform_index(20);
  RecList recs;
  recs.groups.push_back({"algorithm", {}});
  struct Row {
    std::string g, u, i;
    std::int64_t rank;
  };
  std::vector<Row> rows;
  for (const std::string g : {"A", "B"})
    for (std::size_t u = 0; u < n_users; ++u) {
      if (rng.uniform01() < 0.3) continue;
      auto picks = rng.sample(n_items, rng.uniform_index(std::min<std::size_t>(n_items, 8) + 1));
      for (std::size_t k = 0; k < picks.size(); ++k)
        rows.push_back({g, "u" + std::to_string(u), "i" + std::to_string(picks[k]),
                        static_cast<std::int64_t>(k + 1)});
    }
  rng.shuffle(std::span(rows));
  for (const auto& r : rows) {
    recs.groups[0].values.push_back(r.g);
    recs.users.push_back(r.u);
    recs.items.push_back(r.i);
    recs.scores.push_back(0.0);
    recs.ranks.push_back(r.rank);
  }
  auto test = random_table(rng, n_users, n_items, 0, 0.3);
  const bool include_missing = rng.uniform01() < 0.5;
  const auto got = reclist_analysis(recs, test, names, {.include_missing = include_missing});

  std::set<std::string> users(test.users().begin(), test.users().end());
  std::set<std::string> groups;
  for (const auto& r : rows) groups.insert(r.g);
  if (groups.empty()) groups.insert("");
  std::size_t k = 0;
  for (const auto& g : groups)
    for (const auto& u : users) {
      std::vector<std::pair<std::int64_t, std::string>> list;
      for (const auto& r : rows)
        if (r.g == g && r.u == u) list.emplace_back(r.rank, r.i);
      if (list.empty() && !include_missing) continue;
      std::sort(list.begin(), list.end());
      std::vector<std::string> items;
      for (auto& [rank, i] : list) items.push_back(i);
      Truth t;
      for (std::size_t r = 0; r < test.size(); ++r)
        if (test.users()[r] == u) t.gains[test.items()[r]] = test.ratings()[r];
      if (k >= got.rows.size() || got.rows[k].user != u) return false;
      if (!rows.empty() && got.rows[k].group != std::vector<std::string>{g}) return false;
      for (std::size_t m = 0; m < names.size(); ++m) {
        const double want = list_metric(names[m])(items, t);
        const double have = got.rows[k].values[m];
        if (std::bit_cast<std::uint64_t>(want) != std::bit_cast<std::uint64_t>(have)) return false;
      }
      ++k;
    }
  return k == got.rows.size();
}

Outcome oracle_equivalences() {
  Outcome o;
  auto timed = [&](const std::string& name, int trials, const std::function<bool(Rng&)>& fn,
                   const std::string& extra = {}) {
    Rng rng(std::hash<std::string>{}(name));
    const auto start = Clock::now();
    int bad = 0;
    for (int t = 0; t < trials; ++t) bad += fn(rng) ? 0 : 1;
    const double secs = seconds_since(start);
    o.require(bad == 0 && secs <= 1.0, name + ": " + std::to_string(trials - bad) + "/" +
                                           std::to_string(trials) + extra + " in " + fmt(secs, 3) + "s");
  };
  timed("bias vs averaging (1e-9)", 200, bias_oracle);
  double cos_worst = 0, cg_worst = 0;
  timed("item-item vs dense cosine (1e-12)", 100, [&](Rng& r) { return cosine_oracle(r, cos_worst); });
  o.notes.back() += ", max diff " + sci(cos_worst);
  timed("cg vs direct solve (1e-4)", 50, [&](Rng& r) { return cg_oracle(r, cg_worst); });
  o.notes.back() += ", max diff " + sci(cg_worst);
  timed("reclist_analysis vs loop (exact)", 200, reclist_oracle);
  return o;
}

// 4 ------------------------------------------------------------------------

bool non_increasing(const std::vector<double>& xs, std::size_t& worst_step) {
  for (std::size_t k = 1; k < xs.size(); ++k)
    if (xs[k] > xs[k - 1] + 1e-10 * std::abs(xs[k - 1])) {
      worst_step = k;
      return false;
    }
  return true;
}

Outcome optimization_invariants() {
  Outcome o;
  Rng rng(4);
  {
    auto t = random_table(rng, 50, 60, 2, 0.3);
    BiasedMF mf(BiasedMFOptions{.features = 10, .reg = 0.05, .iterations = 20});
    mf.fit(t);
    std::size_t at = 0;
    const bool ok = non_increasing(mf.loss_history(), at) && mf.loss_history().size() == 40;
    o.require(ok, "biased-mf objective non-increasing over " + std::to_string(mf.loss_history().size()) +
                      " half-sweeps (20 rounds), " + fmt(mf.loss_history().front()) + " -> " +
                      fmt(mf.loss_history().back()));
  }
  {
    auto t = random_table(rng, 50, 60, 2, 0.2);
    ImplicitMF mf(ImplicitMFOptions{.features = 10, .iterations = 20});
    mf.fit(t);
    std::vector<double> rounds;
    for (std::size_t k = 1; k < mf.loss_history().size(); k += 2) rounds.push_back(mf.loss_history()[k]);
    std::size_t at = 0;
    o.require(non_increasing(rounds, at), "implicit-mf loss non-increasing over " +
                                              std::to_string(rounds.size()) + " rounds");
  }
  {
    int bad = 0, checked = 0;
    double worst = 0;
    const double lo = 1.0, hi = 5.0, h = 1e-6;
    while (checked < 1000) {
      const double rating = rng.uniform(lo, hi), est = rng.uniform(1.5, 4.5);
      const double p = rng.uniform(-0.5, 0.5), q = rng.uniform(-0.5, 0.5), reg = rng.uniform(0.0, 0.1);
      if (est + p * q <= lo + 0.01 || est + p * q >= hi - 0.01) continue;
      auto loss = [&](double pp, double qq) {
        const double e = rating - std::clamp(est + pp * qq, lo, hi);
        return 0.5 * e * e + 0.5 * reg * (pp * pp + qq * qq);
      };
      const double gp = (loss(p + h, q) - loss(p - h, q)) / (2 * h);
      const double gq = (loss(p, q + h) - loss(p, q - h)) / (2 * h);
      const auto s = funk_sgd_step(rating, est, p, q, 1.0, reg, lo, hi);
      const double diff = std::max(std::abs(s.user_delta + gp), std::abs(s.item_delta + gq));
      worst = std::max(worst, diff);
      bad += diff <= 1e-6 ? 0 : 1;
      ++checked;
    }
    o.require(bad == 0, "funk-svd step vs central differences: " + std::to_string(checked - bad) + "/" +
                            std::to_string(checked) + " within 1e-6, max diff " + sci(worst));
  }
  return o;
}

// 5 ------------------------------------------------------------------------

Outcome rank_one_recovery() {
  Outcome o;
  const std::vector<double> a{1.0, -2.0, 0.5, 0.5}, b{2.0, -1.0, -1.5, 0.5};
  std::vector<std::string> users, items;
  std::vector<double> r;
  for (std::size_t u = 0; u < 4; ++u)
    for (std::size_t i = 0; i < 4; ++i) {
      users.push_back("u" + std::to_string(u));
      items.push_back("i" + std::to_string(i));
      r.push_back(3.0 + a[u] * b[i]);
    }
  BiasedMF mf(BiasedMFOptions{.features = 1, .reg = 1e-6, .iterations = 20});
  mf.fit(RatingTable::from_columns(users, items, r));
  double sq = 0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const std::vector<std::string> one{items[k]};
    const double e = mf.predict_for_user(users[k], one)[0] - r[k];
    sq += e * e;
  }
  const double rmse = std::sqrt(sq / static_cast<double>(r.size()));
  o.require(rmse <= 1e-3, "training RMSE " + sci(rmse) + " <= 1e-3");
  return o;
}

// 6 ------------------------------------------------------------------------

using Pair = std::pair<std::string, std::string>;

std::multiset<Pair> pairs_of(const RatingTable& t) {
  std::multiset<Pair> out;
  for (std::size_t r = 0; r < t.size(); ++r) out.emplace(t.users()[r], t.items()[r]);
  return out;
}

Outcome split_properties() {
  Outcome o;
  Rng rng(6);
  int violations = 0, trials = 0, infeasible = 0;
  std::map<std::string, int> by_kind;
  auto fail = [&](bool bad) { violations += bad ? 1 : 0; };
  for (; trials < 1000; ++trials) {
    const auto nu = 2 + rng.uniform_index(25), ni = 3 + rng.uniform_index(25);
    auto t = random_table(rng, nu, ni, 2, 0.3);
    const auto all = pairs_of(t);
    bool expect_feasible = true;
    const auto seed = rng.next();
    const int method = static_cast<int>(rng.uniform_index(4));
    try {
      if (method < 2) {
        const RowSelector sel = [&] {
          switch (rng.uniform_index(4)) {
            case 0: return RowSelector::sample_n(1 + rng.uniform_index(4));
            case 1: return RowSelector::sample_frac(rng.uniform(0.1, 0.6));
            case 2: return RowSelector::last_n(1 + rng.uniform_index(4));
            default: return RowSelector::last_frac(rng.uniform(0.1, 0.6));
          }
        }();
        std::map<std::string, std::vector<std::size_t>> rows_of;
        for (std::size_t r = 0; r < t.size(); ++r) rows_of[t.users()[r]].push_back(r);
        std::size_t eligible = 0;
        for (auto& [u, rows] : rows_of) eligible += sel.eligible(rows.size()) ? 1 : 0;
        const std::size_t k = 2 + rng.uniform_index(4);
        const std::size_t size = method == 1 ? 1 + rng.uniform_index(std::max<std::size_t>(eligible / k, 1)) : 0;
        expect_feasible = method == 0 ? eligible >= k : k * size <= eligible;
        auto run = [&] {
          return method == 0 ? partition_users(t, k, sel, seed) : sample_users(t, k, size, sel, seed);
        };
        const auto folds = run();
        const auto again = run();
        ++by_kind[method == 0 ? "partition_users" : "sample_users"];
        fail(folds.size() != k);
        std::set<std::string> test_users;
        for (std::size_t f = 0; f < folds.size(); ++f) {
          const auto& fold = folds[f];
          fail(!(fold.train == again[f].train && fold.test == again[f].test));
          auto train = pairs_of(fold.train), test = pairs_of(fold.test);
          std::multiset<Pair> joined = train;
          joined.insert(test.begin(), test.end());
          fail(joined != all);
          std::map<std::string, std::size_t> test_count;
          for (const auto& u : fold.test.users()) ++test_count[u];
          if (method == 1) fail(test_count.size() != size);
          for (const auto& [u, c] : test_count) {
            fail(!test_users.insert(u).second);
            fail(!sel.eligible(rows_of[u].size()));
            fail(c != sel.count_for(rows_of[u].size()));
            if (sel.uses_timestamps()) {
              std::int64_t min_test = INT64_MAX, max_train = INT64_MIN;
              for (std::size_t r = 0; r < fold.test.size(); ++r)
                if (fold.test.users()[r] == u) min_test = std::min(min_test, fold.test.timestamps()[r]);
              for (std::size_t r = 0; r < fold.train.size(); ++r)
                if (fold.train.users()[r] == u) max_train = std::max(max_train, fold.train.timestamps()[r]);
              fail(min_test < max_train);
            }
          }
        }
        if (method == 0) fail(test_users.size() != eligible);
      } else {
        const std::size_t k = 2 + rng.uniform_index(4);
        const bool disjoint = rng.uniform01() < 0.5;
        const std::size_t size = 1 + rng.uniform_index(std::max<std::size_t>(t.size() / k, 1));
        expect_feasible = method == 2 ? t.size() >= k : (disjoint ? k * size <= t.size() : size <= t.size());
        auto run = [&] {
          return method == 2 ? partition_rows(t, k, seed) : sample_rows(t, k, size, seed, disjoint);
        };
        const auto folds = run();
        const auto again = run();
        ++by_kind[method == 2 ? "partition_rows" : "sample_rows"];
        fail(folds.size() != k);
        std::multiset<Pair> tested;
        std::size_t lo = SIZE_MAX, hi = 0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
          const auto& fold = folds[f];
          fail(!(fold.train == again[f].train && fold.test == again[f].test));
          auto train = pairs_of(fold.train), test = pairs_of(fold.test);
          std::multiset<Pair> joined = train;
          joined.insert(test.begin(), test.end());
          fail(joined != all);
          if (method == 3) fail(fold.test.size() != size);
          lo = std::min(lo, fold.test.size());
          hi = std::max(hi, fold.test.size());
          if (method == 2 || disjoint) {
            for (const auto& p : test) fail(tested.count(p) != 0);
          }
          tested.insert(test.begin(), test.end());
        }
        if (method == 2) {
          fail(tested != all);
          fail(hi - lo > 1);
        }
      }
    } catch (const InfeasibleSplitError&) {
      ++infeasible;
      fail(expect_feasible);
    }
  }
  std::string kinds;
  for (auto& [k, n] : by_kind) kinds += " " + k + "=" + std::to_string(n);
  o.require(violations == 0, std::to_string(trials) + " trials," + kinds + ", " + std::to_string(infeasible) +
                                 " rejected as infeasible, " + std::to_string(violations) + " violations");
  o.require(infeasible < trials / 10, "at most 10% of generated splits infeasible");
  return o;
}

// 7 ------------------------------------------------------------------------

const std::vector<std::pair<std::string, nlohmann::json>> kAlgos{
    {"bias", {}},
    {"popular", {}},
    {"random", {{"seed", 5}}},
    {"user-user", {{"nnbrs", 3}}},
    {"item-item", {{"nnbrs", 4}}},
    {"item-item", {{"feedback", "implicit"}}},
    {"biased-mf", {{"features", 3}, {"iterations", 3}}},
    {"implicit-mf", {{"features", 3}, {"iterations", 3}}},
    {"funk-svd", {{"features", 2}, {"epochs", 5}}},
};

Outcome parallel_determinism() {
  Outcome o;
  Rng rng(7);
  int mismatches = 0;
  for (int combo = 0; combo < 20; ++combo) {
    const auto& [name, params] = kAlgos[combo % kAlgos.size()];
    const auto nu = 5 + rng.uniform_index(40), ni = 5 + rng.uniform_index(50);
    auto train = random_table(rng, nu, ni, 2, 0.3);
    auto rec = adapt_to_recommender(make_algorithm(name, params));
    rec->fit(train);
    std::vector<std::string> pu, pi;
    for (int k = 0; k < 300; ++k) {
      pu.push_back("u" + std::to_string(rng.uniform_index(nu + 2)));
      pi.push_back("i" + std::to_string(rng.uniform_index(ni + 2)));
    }
    const auto pairs = RatingTable::from_columns(pu, pi);
    std::vector<std::string> users;
    for (std::size_t u = 0; u < nu + 3; ++u) users.push_back("u" + std::to_string(rng.uniform_index(nu + 3)));
    const std::size_t n = 1 + rng.uniform_index(15);
    const auto* pred = dynamic_cast<const Predictor*>(rec.get());
    std::string base;
    for (std::size_t workers : {1, 2, 8}) {
      std::ostringstream out;
      if (pred) write_predictions_csv(out, batch_predict(*pred, pairs, workers));
      write_reclist_csv(out, batch_recommend(*rec, users, n, nullptr, workers).recs);
      if (workers == 1)
        base = out.str();
      else if (out.str() != base)
        ++mismatches;
    }
  }
  o.require(mismatches == 0, "20 model/input combinations x workers {1,2,8}: " + std::to_string(mismatches) +
                                 " mismatches");
  return o;
}

// 8 ------------------------------------------------------------------------

Outcome serialization() {
  Outcome o;
  Rng rng(8);
  const auto dir = fs::temp_directory_path() / "reckit-acceptance";
  fs::create_directories(dir);
  for (const auto& name : algorithm_names()) {
    nlohmann::json params = nlohmann::json::object();
    if (name == "biased-mf" || name == "implicit-mf") params = {{"features", 5}, {"iterations", 5}};
    if (name == "funk-svd") params = {{"features", 3}, {"epochs", 10}};
    auto train = random_table(rng, 30, 40, 2, 0.3);
    auto algo = adapt_to_recommender(make_algorithm(name, params));
    algo->fit(train);
    const auto path = dir / (name + ".model");
    save_model(*algo, path);
    auto loaded = std::dynamic_pointer_cast<Recommender>(load_model(path));
    int bad = loaded ? 0 : 100;
    const auto* p0 = dynamic_cast<const Predictor*>(algo.get());
    const auto* p1 = loaded ? dynamic_cast<const Predictor*>(loaded.get()) : nullptr;
    for (int probe = 0; loaded && probe < 100; ++probe) {
      const auto user = "u" + std::to_string(rng.uniform_index(33));
      std::vector<std::string> items;
      for (std::size_t k = 0, m = 1 + rng.uniform_index(10); k < m; ++k)
        items.push_back("i" + std::to_string(rng.uniform_index(44)));
      bool same = true;
      if (p0) {
        const auto a = p0->predict_for_user(user, items), b = p1->predict_for_user(user, items);
        for (std::size_t k = 0; k < a.size(); ++k)
          same = same && std::bit_cast<std::uint64_t>(a[k]) == std::bit_cast<std::uint64_t>(b[k]);
      }
      const auto a = algo->recommend(user, 10), b = loaded->recommend(user, 10);
      same = same && a.size() == b.size();
      for (std::size_t k = 0; same && k < a.size(); ++k)
        same = a[k].item == b[k].item &&
               std::bit_cast<std::uint64_t>(a[k].score) == std::bit_cast<std::uint64_t>(b[k].score);
      bad += same ? 0 : 1;
    }
    o.require(bad == 0, name + " " + std::to_string(100 - bad) + "/100 probes bit-exact");
  }
  fs::remove_all(dir);
  return o;
}

// 9 ------------------------------------------------------------------------

Outcome metric_units() {
  Outcome o;
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
  const std::vector<double> p{3, 4}, t{3, 2};
  const double r = rmse(p, t);
  o.require(near(r, std::sqrt(2.0)), "RMSE [3,4] vs [3,2] = " + fmt(r, 12) + " (sqrt 2)");
  Truth rel;
  rel.gains = {{"a", 1.0}, {"c", 1.0}};
  const std::vector<std::string> abc{"a", "b", "c"};
  const double ap = avg_precision(abc, rel);
  o.require(near(ap, 5.0 / 6.0), "AP relevant at ranks 1,3 = " + fmt(ap, 12) + " (5/6)");
  Truth third;
  third.gains = {{"c", 1.0}};
  const double nd = ndcg(abc, third);
  o.require(near(nd, 1.0 / std::log2(3.0)), "nDCG relevant at rank 3 = " + fmt(nd, 12) + " (1/log2 3)");
  Truth fourth;
  fourth.gains = {{"d", 1.0}};
  const std::vector<std::string> abcd{"a", "b", "c", "d"};
  const double rr = recip_rank(abcd, fourth);
  o.require(near(rr, 0.25), "reciprocal rank first relevant at 4 = " + fmt(rr, 12) + " (0.25)");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    Outcome (*fn)();
  };
  const std::vector<Criterion> criteria{
      {1, "end-to-end pipeline", end_to_end},
      {2, "accuracy ordering", accuracy_ordering},
      {3, "oracle equivalences", oracle_equivalences},
      {4, "optimization invariants", optimization_invariants},
      {5, "rank-1 recovery", rank_one_recovery},
      {6, "split properties", split_properties},
      {7, "determinism under parallelism", parallel_determinism},
      {8, "serialization round trip", serialization},
      {9, "metric unit values", metric_units},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << " - " << c.title << " ("
              << fmt(seconds_since(start), 1) << "s)";
    for (const auto& n : o.notes) std::cout << "; " << n;
    std::cout << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? 0 : 1;
}
