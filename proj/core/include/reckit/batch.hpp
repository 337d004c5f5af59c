#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "reckit/algorithm.hpp"
#include "reckit/metrics.hpp"
#include "reckit/table.hpp"

namespace reckit {

// Scores every (user, item) row of `pairs`, in input order. Users are the
// unit of parallel work; workers = 0 means default_workers().
PredictionTable batch_predict(const Predictor& algo, const RatingTable& pairs,
                              std::size_t workers = 0);

using CandidateMap = std::unordered_map<std::string, std::vector<std::string>>;

struct BatchRecommendations {
  RecList recs;
  // Requested users, de-duplicated, in first-seen order.
  std::vector<std::string> users;
  // Users whose list came back empty.
  std::vector<std::string> empty_users;
};

// Top-n lists for each user, concatenated in user order. When `candidates`
// is given, users absent from it get the recommender's default candidates.
BatchRecommendations batch_recommend(const Recommender& algo, std::span<const std::string> users,
                                     std::size_t n, const CandidateMap* candidates = nullptr,
                                     std::size_t workers = 0);

}  // namespace reckit
