#pragma once

#include <cstdint>

#include "reckit/table.hpp"

namespace reckit {

// Generator for MovieLens-shaped explicit data: integer stars 1..5, a
// skewed item popularity curve, one low-rank structure deciding which items
// a user rates and a second one deciding how highly.
struct SyntheticOptions {
  std::size_t users = 943;
  std::size_t items = 1682;
  std::size_t features = 8;
  std::size_t min_per_user = 20;
  double mean_per_user = 106.0;
  // Zipf exponent of item popularity.
  double popularity_skew = 0.9;
  // Weight of the low-rank exposure term in the choice of rated items.
  double taste = 2.0;
  double noise = 0.8;
  std::uint64_t seed = 42;
};

// Rows are grouped by user, users "1".."N", items "1".."M", with strictly
// increasing timestamps inside each user's history.
RatingTable synthetic_ratings(const SyntheticOptions& opts = {});

}  // namespace reckit
