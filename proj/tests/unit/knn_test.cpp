#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "reckit/dataset.hpp"
#include "reckit/error.hpp"
#include "reckit/knn.hpp"
#include "support.hpp"

namespace reckit {
namespace {

using testing::table;
using Dense = std::vector<std::vector<double>>;

// Dense oracle: user-centered (or binary) item columns and their cosines.
struct DenseModel {
  Dense centered;  // users x items, NaN where unrated
  std::vector<double> means;
  Dense sims;      // items x items, 0 on the diagonal
};

DenseModel dense_oracle(const Dataset& ds, bool explicit_ratings) {
  const auto nu = ds.n_users(), ni = ds.n_items();
  DenseModel m;
  m.centered.assign(nu, std::vector<double>(ni, kMissing));
  m.means.assign(nu, 0.0);
  for (std::size_t u = 0; u < nu; ++u) {
    auto cols = ds.by_user.row_cols(static_cast<std::int32_t>(u));
    auto vals = ds.by_user.row_values(static_cast<std::int32_t>(u));
    double sum = 0;
    for (double v : vals) sum += v;
    if (explicit_ratings) m.means[u] = sum / static_cast<double>(vals.size());
    for (std::size_t k = 0; k < cols.size(); ++k)
      m.centered[u][cols[k]] = explicit_ratings ? vals[k] - m.means[u] : 1.0;
  }
  m.sims.assign(ni, std::vector<double>(ni, 0.0));
  for (std::size_t i = 0; i < ni; ++i)
    for (std::size_t j = 0; j < ni; ++j) {
      if (i == j) continue;
      double dot = 0, ni2 = 0, nj2 = 0;
      for (std::size_t u = 0; u < nu; ++u) {
        const double a = std::isnan(m.centered[u][i]) ? 0 : m.centered[u][i];
        const double b = std::isnan(m.centered[u][j]) ? 0 : m.centered[u][j];
        dot += a * b;
        ni2 += a * a;
        nj2 += b * b;
      }
      m.sims[i][j] = ni2 > 0 && nj2 > 0 ? dot / std::sqrt(ni2 * nj2) : 0.0;
    }
  return m;
}

TEST(ItemSimilarities, MatchDenseCosineOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    auto t = testing::random_table(rng, 2 + rng.uniform_index(6), 2 + rng.uniform_index(6), 2, 0.6);
    const bool explicit_ratings = trial % 3 != 0;
    auto ds = build_dataset(explicit_ratings ? t : RatingTable::from_columns(t.users(), t.items()));
    const auto oracle = dense_oracle(ds, explicit_ratings);
    ItemItem ii(KnnOptions{.nnbrs = 50});
    ii.fit(explicit_ratings ? t : RatingTable::from_columns(t.users(), t.items()));
    const auto& sims = ii.similarities();
    const auto& idx = ii.items();
    for (std::size_t i = 0; i < ds.n_items(); ++i)
      for (std::size_t j = 0; j < ds.n_items(); ++j) {
        const double want = oracle.sims[i][j] > 1e-6 ? oracle.sims[i][j] : 0.0;
        const auto pi = idx.position(ds.items.id(static_cast<std::int32_t>(i)));
        const auto pj = idx.position(ds.items.id(static_cast<std::int32_t>(j)));
        EXPECT_NEAR(sims.lookup(pi, pj), want, 1e-12);
        // Stored values are exactly symmetric.
        EXPECT_EQ(sims.lookup(pi, pj), sims.lookup(pj, pi));
      }
    for (double s : sims.sims) {
      EXPECT_GT(s, 1e-6);
      EXPECT_LE(s, 1.0);
    }
  }
}

TEST(ItemSimilarities, ParallelEqualsSequential) {
  Rng rng(4);
  auto t = testing::random_table(rng, 40, 150, 3, 0.2);
  auto ds = build_dataset(t);
  const auto a = item_similarities(ds.by_item, 1e-6, 0, 1);
  const auto b = item_similarities(ds.by_item, 1e-6, 0, 8);
  EXPECT_EQ(a.row_ptr, b.row_ptr);
  EXPECT_EQ(a.neighbors, b.neighbors);
  EXPECT_EQ(a.sims, b.sims);
}

TEST(ItemItem, IdenticalColumnsHaveUnitSimilarity) {
  auto t2 = table({"a", "a", "a", "b", "b", "b"}, {"x", "y", "z", "x", "y", "z"}, {1, 1, 4, 5, 5, 2});
  ItemItem ii;
  ii.fit(t2);
  const auto x = ii.items().position("x"), y = ii.items().position("y");
  EXPECT_DOUBLE_EQ(ii.similarities().lookup(x, y), 1.0);
  ItemItem disjoint;
  disjoint.fit(table({"a", "a", "b", "b"}, {"x", "y", "z", "w"}, {1, 3, 2, 5}));
  EXPECT_EQ(disjoint.similarities().lookup(0, 2), 0.0);
}

// score(u, i) = mu_u + sum s_ij c_uj / sum |s_ij| over the nnbrs most similar
// items u rated with s_ij > min_sim.
TEST(ItemItem, PredictionsMatchDenseOracle) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    auto t = testing::random_table(rng, 2 + rng.uniform_index(6), 2 + rng.uniform_index(7), 2, 0.6);
    auto ds = build_dataset(t);
    const auto oracle = dense_oracle(ds, true);
    const std::size_t k = 1 + rng.uniform_index(4);
    ItemItem ii(KnnOptions{.nnbrs = k});
    ii.fit(t);
    std::vector<std::string> all = ds.items.ids();
    for (std::size_t u = 0; u < ds.n_users(); ++u) {
      const auto got = ii.predict_for_user(ds.users.id(static_cast<std::int32_t>(u)), all);
      for (std::size_t i = 0; i < ds.n_items(); ++i) {
        std::vector<std::pair<double, std::size_t>> nbrs;
        for (std::size_t j = 0; j < ds.n_items(); ++j)
          if (!std::isnan(oracle.centered[u][j]) && oracle.sims[i][j] > 1e-6)
            nbrs.emplace_back(oracle.sims[i][j], j);
        std::sort(nbrs.begin(), nbrs.end(), [](auto& a, auto& b) {
          return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        if (nbrs.size() > k) {
          // Skip cases where the cut falls inside a near-tie.
          if (std::abs(nbrs[k - 1].first - nbrs[k].first) < 1e-9) continue;
          nbrs.resize(k);
        }
        if (nbrs.empty()) {
          EXPECT_TRUE(is_missing(got[i]));
          continue;
        }
        double num = 0, den = 0;
        for (auto [s, j] : nbrs) {
          num += s * oracle.centered[u][j];
          den += std::abs(s);
        }
        EXPECT_NEAR(got[i], oracle.means[u] + num / den, 1e-9);
      }
    }
  }
}

TEST(ItemItem, SingleNeighborClosedForm) {
  // User a: x=4, y=2 (mean 3, centered x=+1). Item z's only rated neighbor for a is x.
  auto t = table({"a", "a", "b", "b", "b", "c", "c"}, {"x", "y", "x", "z", "y", "x", "z"},
                 {4, 2, 5, 4, 1, 2, 1});
  ItemItem ii(KnnOptions{.nnbrs = 1});
  ii.fit(t);
  const auto x = ii.items().position("x"), z = ii.items().position("z");
  const double s = ii.similarities().lookup(z, x);
  ASSERT_GT(s, 0.0);
  std::vector<std::string> items{"z"};
  EXPECT_DOUBLE_EQ(ii.predict_for_user("a", items)[0], 4.0);
}

TEST(ItemItem, NoRatedNeighborsIsMissing) {
  auto t = table({"a", "a", "b", "b"}, {"x", "y", "z", "w"}, {1, 3, 2, 5});
  ItemItem ii;
  ii.fit(t);
  std::vector<std::string> items{"z", "unknown"};
  auto s = ii.predict_for_user("a", items);
  EXPECT_TRUE(is_missing(s[0]));
  EXPECT_TRUE(is_missing(s[1]));
}

TEST(ItemItemProperty, WeightedAverageStaysInHull) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    auto t = testing::random_table(rng, 3 + rng.uniform_index(6), 3 + rng.uniform_index(6), 2, 0.6);
    ItemItem ii;
    ii.fit(t);
    auto ds = build_dataset(t);
    for (std::size_t u = 0; u < ds.n_users(); ++u) {
      const auto uid = ds.users.id(static_cast<std::int32_t>(u));
      auto vals = ds.by_user.row_values(static_cast<std::int32_t>(u));
      const double lo = *std::min_element(vals.begin(), vals.end());
      const double hi = *std::max_element(vals.begin(), vals.end());
      for (double s : ii.predict_for_user(uid, ds.items.ids()))
        if (!is_missing(s)) {
          EXPECT_GE(s, lo - 1e-9);
          EXPECT_LE(s, hi + 1e-9);
        }
    }
  }
}

TEST(ItemItemProperty, FreshRatingsReproduceKnownUser) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto t = testing::random_table(rng, 3 + rng.uniform_index(6), 3 + rng.uniform_index(8), 2, 0.5);
    for (bool explicit_ratings : {true, false}) {
      auto data = explicit_ratings ? t : RatingTable::from_columns(t.users(), t.items());
      ItemItem ii;
      ii.fit(data);
      auto ds = build_dataset(data);
      for (std::size_t u = 0; u < ds.n_users(); ++u) {
        const auto uid = ds.users.id(static_cast<std::int32_t>(u));
        UserHistory h;
        for (std::size_t r = 0; r < data.size(); ++r)
          if (data.users()[r] == uid) {
            h.items.push_back(data.items()[r]);
            h.ratings.push_back(explicit_ratings ? data.ratings()[r] : 1.0);
          }
        const auto known = ii.predict_for_user(uid, ds.items.ids());
        const auto fresh = ii.predict_for_user("never-seen", ds.items.ids(), &h);
        for (std::size_t k = 0; k < known.size(); ++k) {
          if (is_missing(known[k]))
            EXPECT_TRUE(is_missing(fresh[k]));
          else
            EXPECT_EQ(known[k], fresh[k]);
        }
      }
    }
  }
}

TEST(UserUser, TwoUserClosedForm) {
  // u: x=1, y=3 (mean 2). v: x=2, y=3, z=4 (mean 3). Only v rated z.
  auto t = table({"u", "u", "v", "v", "v"}, {"x", "y", "x", "y", "z"}, {1, 3, 2, 3, 4});
  UserUser uu;
  uu.fit(t);
  std::vector<std::string> items{"z"};
  EXPECT_DOUBLE_EQ(uu.predict_for_user("u", items)[0], 3.0);
}

TEST(UserUser, OrthogonalUsersGiveMissing) {
  // u centered (x=-1, y=+1); v centered (x=-1, y=-1... ) -> dot 0.
  auto t = table({"u", "u", "v", "v", "v"}, {"x", "y", "x", "y", "z"}, {1, 3, 1, 1, 4});
  UserUser uu;
  uu.fit(t);
  std::vector<std::string> items{"z", "nobody-rated"};
  auto s = uu.predict_for_user("u", items);
  EXPECT_TRUE(is_missing(s[0]));
  EXPECT_TRUE(is_missing(s[1]));
}

TEST(UserUser, CenteredRowsHaveZeroMean) {
  Rng rng(14);
  auto t = testing::random_table(rng, 12, 10, 2, 0.5);
  UserUser uu;
  uu.fit(t);
  const auto& c = uu.centered();
  for (std::int32_t u = 0; u < c.n_rows; ++u) {
    double sum = 0;
    for (double v : c.row_values(u)) sum += v;
    EXPECT_LE(std::abs(sum), 1e-9);
  }
}

// A user's own rows as fresh ratings for an unseen id, against a model that
// never saw that user, reproduce the known-user predictions of the full model.
TEST(UserUserProperty, FreshRatingsReproduceKnownUser) {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    auto t = testing::random_table(rng, 3 + rng.uniform_index(6), 3 + rng.uniform_index(8), 2, 0.5);
    auto ds = build_dataset(t);
    const auto target = ds.users.id(static_cast<std::int32_t>(rng.uniform_index(ds.n_users())));
    std::vector<std::size_t> others, mine;
    for (std::size_t r = 0; r < t.size(); ++r) (t.users()[r] == target ? mine : others).push_back(r);
    std::vector<std::size_t> order = others;
    order.insert(order.end(), mine.begin(), mine.end());
    const auto full_table = t.take(order);
    const auto rest_table = t.take(others);

    UserUser full, rest;
    full.fit(full_table);
    rest.fit(rest_table);
    UserHistory h;
    for (auto r : mine) {
      h.items.push_back(t.items()[r]);
      h.ratings.push_back(t.ratings()[r]);
    }
    const auto items = build_dataset(rest_table).items.ids();
    const auto known = full.predict_for_user(target, items);
    const auto fresh = rest.predict_for_user("never-seen", items, &h);
    for (std::size_t k = 0; k < known.size(); ++k) {
      if (is_missing(known[k]))
        EXPECT_TRUE(is_missing(fresh[k]));
      else
        EXPECT_EQ(known[k], fresh[k]);
    }
  }
}

TEST(Knn, ParameterValidation) {
  EXPECT_THROW(KnnOptions::from_json({{"nnbrs", 0}}, true), ParameterError);
  EXPECT_THROW(KnnOptions::from_json({{"save_nbrs", 3}}, false), ParameterError);
  EXPECT_THROW(KnnOptions::from_json({{"aggregate", "max"}}, true), ParameterError);
  EXPECT_EQ(KnnOptions::from_json({{"feedback", "implicit"}}, true).feedback, Feedback::kImplicit);
}

}  // namespace
}  // namespace reckit
