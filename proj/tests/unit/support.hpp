#pragma once

#include <string>
#include <vector>

#include "reckit/random.hpp"
#include "reckit/table.hpp"

namespace reckit::testing {

inline RatingTable table(std::vector<std::string> users, std::vector<std::string> items,
                         std::vector<double> ratings) {
  return RatingTable::from_columns(std::move(users), std::move(items), std::move(ratings));
}

// Dense-ish random explicit table: each user rates a random subset of items
// (at least min_per_user), ratings are half stars in [1, 5], timestamps are
// random with deliberate ties.
inline RatingTable random_table(Rng& rng, std::size_t n_users, std::size_t n_items,
                                std::size_t min_per_user = 1, double density = 0.5) {
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

}  // namespace reckit::testing
