#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "reckit/dataset.hpp"
#include "reckit/table.hpp"

namespace reckit {

// Chooses which of a test user's rows become test data.
class RowSelector {
 public:
  enum class Kind { kSampleN, kSampleFrac, kLastN, kLastFrac };

  static RowSelector sample_n(std::size_t n);
  static RowSelector sample_frac(double f);
  static RowSelector last_n(std::size_t n);
  static RowSelector last_frac(double f);

  // Parses "n:5", "frac:0.2", "last-n:5", "last-frac:0.2".
  static RowSelector parse(std::string_view spec);
  std::string to_string() const;

  Kind kind() const { return kind_; }
  bool uses_timestamps() const { return kind_ == Kind::kLastN || kind_ == Kind::kLastFrac; }

  // Number of test rows taken from a user with `rows` ratings. Fractions
  // round to nearest with a minimum of 1.
  std::size_t count_for(std::size_t rows) const;

  // A user is eligible for testing only if some rows stay in training.
  bool eligible(std::size_t rows) const { return count_for(rows) < rows; }

  bool operator==(const RowSelector&) const = default;

 private:
  RowSelector(Kind k, std::size_t n, double f) : kind_(k), n_(n), frac_(f) {}
  Kind kind_;
  std::size_t n_;
  double frac_;
};

struct TrainTestPair {
  RatingTable train;
  RatingTable test;
  std::size_t fold_index = 0;
  std::uint64_t seed = 0;
};

// Splits eligible users into k near-equal groups; group j supplies fold j's
// test users. The first (users mod k) groups receive one extra user.
std::vector<TrainTestPair> partition_users(const RatingTable& ratings, std::size_t k,
                                           const RowSelector& select, std::uint64_t seed);

// k disjoint samples of exactly `size` eligible users each.
std::vector<TrainTestPair> sample_users(const RatingTable& ratings, std::size_t k, std::size_t size,
                                        const RowSelector& select, std::uint64_t seed);

std::vector<TrainTestPair> partition_rows(const RatingTable& ratings, std::size_t k,
                                          std::uint64_t seed);

std::vector<TrainTestPair> sample_rows(const RatingTable& ratings, std::size_t k, std::size_t size,
                                       std::uint64_t seed, bool disjoint);

struct UserCandidates {
  std::string user;
  std::vector<std::string> items;
};

// For every test user (first-appearance order): their test items followed by
// n_negatives items drawn uniformly from universe items the user has not
// rated in `rated` or `test`.
std::vector<UserCandidates> select_item_candidates(const RatingTable& test,
                                                   const RatingTable& rated,
                                                   std::size_t n_negatives, const Index& universe,
                                                   std::uint64_t seed);

}  // namespace reckit
