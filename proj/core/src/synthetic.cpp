#include "reckit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "reckit/error.hpp"
#include "reckit/random.hpp"

namespace reckit {

RatingTable synthetic_ratings(const SyntheticOptions& opts) {
  if (opts.users == 0 || opts.items == 0) throw ParameterError("synthetic data needs users and items");
  if (opts.min_per_user > opts.items) throw ParameterError("min_per_user exceeds item count");
  Rng rng(opts.seed);
  const auto f = static_cast<Eigen::Index>(opts.features);
  const double scale = opts.features ? 1.0 / std::sqrt(static_cast<double>(opts.features)) : 0.0;

  // P, Q drive rating values; E, F drive which items get rated.
  Eigen::MatrixXd P(static_cast<Eigen::Index>(opts.users), f), Q(static_cast<Eigen::Index>(opts.items), f);
  Eigen::MatrixXd E(P.rows(), f), F(Q.rows(), f);
  Eigen::VectorXd user_bias(P.rows()), item_bias(Q.rows()), log_pop(Q.rows());
  for (Eigen::Index u = 0; u < P.rows(); ++u) {
    user_bias(u) = 0.4 * rng.normal();
    for (Eigen::Index k = 0; k < f; ++k) P(u, k) = rng.normal() * scale * 1.2;
    for (Eigen::Index k = 0; k < f; ++k) E(u, k) = rng.normal() * scale;
  }
  // Popularity rank is a random permutation so popular items are not simply low ids.
  std::vector<std::size_t> pop_rank(opts.items);
  std::iota(pop_rank.begin(), pop_rank.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(pop_rank));
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    log_pop(i) = -opts.popularity_skew * std::log(1.0 + static_cast<double>(pop_rank[i]));
    // Popular items tend to be rated higher.
    item_bias(i) = 0.5 * rng.normal() + 0.15 * (log_pop(i) + 4.0);
    for (Eigen::Index k = 0; k < f; ++k) Q(i, k) = rng.normal() * scale * 1.2;
    for (Eigen::Index k = 0; k < f; ++k) F(i, k) = rng.normal();
  }

  std::vector<std::string> users, items;
  std::vector<double> ratings;
  std::vector<std::int64_t> timestamps;
  std::int64_t clock = 874724710;
  const double extra_mean = std::max(0.0, opts.mean_per_user - static_cast<double>(opts.min_per_user));

  std::vector<std::pair<double, Eigen::Index>> keys(opts.items);
  for (Eigen::Index u = 0; u < P.rows(); ++u) {
    double e = rng.uniform01();
    while (e <= 0.0) e = rng.uniform01();
    auto count = opts.min_per_user + static_cast<std::size_t>(-std::log(e) * extra_mean);
    count = std::min(count, opts.items);

    const Eigen::VectorXd affinity = Q * P.row(u).transpose();
    const Eigen::VectorXd exposure = F * E.row(u).transpose();
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
      double g = rng.uniform01();
      while (g <= 0.0) g = rng.uniform01();
      const double gumbel = -std::log(-std::log(g));
      keys[static_cast<std::size_t>(i)] = {log_pop(i) + opts.taste * exposure(i) + gumbel, i};
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count), keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });

    for (std::size_t k = 0; k < count; ++k) {
      const auto i = keys[k].second;
      const double raw = 3.5 + user_bias(u) + item_bias(i) + affinity(i) + opts.noise * rng.normal();
      users.push_back(std::to_string(u + 1));
      items.push_back(std::to_string(i + 1));
      ratings.push_back(std::clamp(std::round(raw), 1.0, 5.0));
      clock += 1 + static_cast<std::int64_t>(rng.uniform_index(3600));
      timestamps.push_back(clock);
    }
  }
  return RatingTable::from_columns(std::move(users), std::move(items), std::move(ratings),
                                   std::move(timestamps));
}

}  // namespace reckit
