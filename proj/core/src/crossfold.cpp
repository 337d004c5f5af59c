#include "reckit/crossfold.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "reckit/csv.hpp"
#include "reckit/error.hpp"
#include "reckit/random.hpp"

namespace reckit {

RowSelector RowSelector::sample_n(std::size_t n) {
  if (n == 0) throw ParameterError("SampleN requires n >= 1");
  return {Kind::kSampleN, n, 0.0};
}

RowSelector RowSelector::sample_frac(double f) {
  if (!(f > 0.0 && f < 1.0)) throw ParameterError("SampleFrac requires 0 < f < 1");
  return {Kind::kSampleFrac, 0, f};
}

RowSelector RowSelector::last_n(std::size_t n) {
  if (n == 0) throw ParameterError("LastN requires n >= 1");
  return {Kind::kLastN, n, 0.0};
}

RowSelector RowSelector::last_frac(double f) {
  if (!(f > 0.0 && f < 1.0)) throw ParameterError("LastFrac requires 0 < f < 1");
  return {Kind::kLastFrac, 0, f};
}

RowSelector RowSelector::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) throw ParameterError("bad selector '" + std::string(spec) + "'");
  const auto kind = spec.substr(0, colon);
  const auto arg = spec.substr(colon + 1);
  try {
    if (kind == "n") return sample_n(static_cast<std::size_t>(parse_int(arg, 0)));
    if (kind == "frac") return sample_frac(parse_double(arg, 0));
    if (kind == "last-n") return last_n(static_cast<std::size_t>(parse_int(arg, 0)));
    if (kind == "last-frac") return last_frac(parse_double(arg, 0));
  } catch (const ParseError&) {
    throw ParameterError("bad selector argument in '" + std::string(spec) + "'");
  }
  throw ParameterError("unknown selector '" + std::string(spec) + "'");
}

std::string RowSelector::to_string() const {
  switch (kind_) {
    case Kind::kSampleN: return "n:" + std::to_string(n_);
    case Kind::kSampleFrac: return "frac:" + format_double(frac_);
    case Kind::kLastN: return "last-n:" + std::to_string(n_);
    case Kind::kLastFrac: return "last-frac:" + format_double(frac_);
  }
  return {};
}

std::size_t RowSelector::count_for(std::size_t rows) const {
  switch (kind_) {
    case Kind::kSampleN:
    case Kind::kLastN: return n_;
    case Kind::kSampleFrac:
    case Kind::kLastFrac: {
      const auto c = static_cast<std::size_t>(std::llround(frac_ * static_cast<double>(rows)));
      return std::max<std::size_t>(c, 1);
    }
  }
  return 0;
}

namespace {

// Rows of one user that the selector moves to test, in input order.
std::vector<std::size_t> select_rows(const RatingTable& t, const std::vector<std::size_t>& rows,
                                     const RowSelector& sel, Rng& rng) {
  const std::size_t want = std::min(sel.count_for(rows.size()), rows.size());
  std::vector<std::size_t> picked;
  if (sel.uses_timestamps()) {
    const auto& ts = t.timestamps();
    std::vector<std::size_t> order = rows;
    // Stable: among equal timestamps the later input row counts as newer.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });
    picked.assign(order.end() - static_cast<std::ptrdiff_t>(want), order.end());
  } else {
    for (auto pos : rng.sample(rows.size(), want)) picked.push_back(rows[pos]);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

TrainTestPair build_fold(const RatingTable& t, const std::vector<std::size_t>& test_rows,
                         std::size_t fold, std::uint64_t seed) {
  std::vector<char> is_test(t.size(), 0);
  for (auto r : test_rows) is_test[r] = 1;
  std::vector<std::size_t> train_rows;
  train_rows.reserve(t.size() - test_rows.size());
  for (std::size_t r = 0; r < t.size(); ++r)
    if (!is_test[r]) train_rows.push_back(r);
  std::vector<std::size_t> sorted_test = test_rows;
  std::sort(sorted_test.begin(), sorted_test.end());
  return {t.take(train_rows), t.take(sorted_test), fold, seed};
}

// Eligible user groups, shuffled by the generator.
std::vector<std::vector<std::size_t>> eligible_users(const RatingTable& t, const RowSelector& sel,
                                                     Rng& rng) {
  if (sel.uses_timestamps() && !t.has_timestamps())
    throw SchemaError("timestamp selectors require a timestamp column");
  auto groups = t.rows_by_user();
  std::vector<std::vector<std::size_t>> keep;
  for (auto& g : groups)
    if (sel.eligible(g.size())) keep.push_back(std::move(g));
  rng.shuffle(std::span(keep));
  return keep;
}

std::vector<TrainTestPair> folds_from_user_groups(
    const RatingTable& t, const std::vector<std::vector<std::size_t>>& users,
    const std::vector<std::size_t>& fold_sizes, const RowSelector& sel, Rng& rng,
    std::uint64_t seed) {
  std::vector<TrainTestPair> out;
  std::size_t next = 0;
  for (std::size_t f = 0; f < fold_sizes.size(); ++f) {
    std::vector<std::size_t> test_rows;
    for (std::size_t j = 0; j < fold_sizes[f]; ++j) {
      auto rows = select_rows(t, users[next++], sel, rng);
      test_rows.insert(test_rows.end(), rows.begin(), rows.end());
    }
    out.push_back(build_fold(t, test_rows, f, seed));
  }
  return out;
}

std::vector<std::size_t> near_equal_sizes(std::size_t n, std::size_t k) {
  std::vector<std::size_t> sizes(k, n / k);
  for (std::size_t j = 0; j < n % k; ++j) ++sizes[j];
  return sizes;
}

}  // namespace

std::vector<TrainTestPair> partition_users(const RatingTable& ratings, std::size_t k,
                                           const RowSelector& select, std::uint64_t seed) {
  if (k < 2) throw ParameterError("partitioning requires k >= 2");
  Rng rng(seed);
  auto users = eligible_users(ratings, select, rng);
  if (k > users.size())
    throw InfeasibleSplitError("cannot partition " + std::to_string(users.size()) +
                               " eligible users into " + std::to_string(k) + " folds");
  return folds_from_user_groups(ratings, users, near_equal_sizes(users.size(), k), select, rng, seed);
}

std::vector<TrainTestPair> sample_users(const RatingTable& ratings, std::size_t k, std::size_t size,
                                        const RowSelector& select, std::uint64_t seed) {
  if (k < 1 || size < 1) throw InfeasibleSplitError("sampling requires k >= 1 and size >= 1");
  Rng rng(seed);
  auto users = eligible_users(ratings, select, rng);
  if (k * size > users.size())
    throw InfeasibleSplitError("need " + std::to_string(k * size) + " eligible users, have " +
                               std::to_string(users.size()));
  return folds_from_user_groups(ratings, users, std::vector<std::size_t>(k, size), select, rng, seed);
}

std::vector<TrainTestPair> partition_rows(const RatingTable& ratings, std::size_t k,
                                          std::uint64_t seed) {
  if (k < 2) throw ParameterError("partitioning requires k >= 2");
  if (ratings.size() < k)
    throw InfeasibleSplitError("cannot partition " + std::to_string(ratings.size()) + " rows into " +
                               std::to_string(k) + " folds");
  Rng rng(seed);
  std::vector<std::size_t> rows(ratings.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  rng.shuffle(std::span(rows));
  std::vector<TrainTestPair> out;
  std::size_t start = 0;
  const auto sizes = near_equal_sizes(rows.size(), k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> test(rows.begin() + static_cast<std::ptrdiff_t>(start),
                                  rows.begin() + static_cast<std::ptrdiff_t>(start + sizes[f]));
    start += sizes[f];
    out.push_back(build_fold(ratings, test, f, seed));
  }
  return out;
}

std::vector<TrainTestPair> sample_rows(const RatingTable& ratings, std::size_t k, std::size_t size,
                                       std::uint64_t seed, bool disjoint) {
  if (k < 1 || size < 1) throw InfeasibleSplitError("sampling requires k >= 1 and size >= 1");
  const std::size_t need = disjoint ? k * size : size;
  if (need > ratings.size())
    throw InfeasibleSplitError("need " + std::to_string(need) + " rows, have " +
                               std::to_string(ratings.size()));
  Rng rng(seed);
  std::vector<TrainTestPair> out;
  if (disjoint) {
    auto picked = rng.sample(ratings.size(), k * size);
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> test(picked.begin() + static_cast<std::ptrdiff_t>(f * size),
                                    picked.begin() + static_cast<std::ptrdiff_t>((f + 1) * size));
      out.push_back(build_fold(ratings, test, f, seed));
    }
  } else {
    for (std::size_t f = 0; f < k; ++f)
      out.push_back(build_fold(ratings, rng.sample(ratings.size(), size), f, seed));
  }
  return out;
}

std::vector<UserCandidates> select_item_candidates(const RatingTable& test,
                                                   const RatingTable& rated,
                                                   std::size_t n_negatives, const Index& universe,
                                                   std::uint64_t seed) {
  std::unordered_map<std::string_view, std::unordered_set<std::string_view>> seen;
  for (std::size_t r = 0; r < rated.size(); ++r) seen[rated.users()[r]].insert(rated.items()[r]);
  for (std::size_t r = 0; r < test.size(); ++r) seen[test.users()[r]].insert(test.items()[r]);

  std::vector<UserCandidates> out;
  for (const auto& rows : test.rows_by_user()) {
    const auto& user = test.users()[rows.front()];
    UserCandidates uc{user, {}};
    for (auto r : rows) uc.items.push_back(test.items()[r]);

    const auto& mine = seen[user];
    std::vector<std::int32_t> pool;
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(universe.size()); ++i)
      if (!mine.contains(universe.id(i))) pool.push_back(i);
    if (n_negatives > pool.size())
      throw InfeasibleSplitError("user '" + user + "' has only " + std::to_string(pool.size()) +
                                 " unrated items, need " + std::to_string(n_negatives));
    Rng rng(mix_seed(seed, stable_hash(user)));
    for (auto pos : rng.sample(pool.size(), n_negatives)) uc.items.push_back(universe.id(pool[pos]));
    out.push_back(std::move(uc));
  }
  return out;
}

}  // namespace reckit
