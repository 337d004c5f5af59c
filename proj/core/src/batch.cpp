#include "reckit/batch.hpp"

#include <unordered_set>

#include "reckit/parallel.hpp"

namespace reckit {

PredictionTable batch_predict(const Predictor& algo, const RatingTable& pairs, std::size_t workers) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    auto [it, fresh] = rows.try_emplace(pairs.users()[r]);
    if (fresh) order.push_back(pairs.users()[r]);
    it->second.push_back(r);
  }

  PredictionTable out;
  out.users = pairs.users();
  out.items = pairs.items();
  out.predictions.assign(pairs.size(), kMissing);
  if (pairs.has_ratings()) out.ratings = pairs.ratings();

  parallel_for(order.size(), workers, [&](std::size_t u) {
    const auto& user_rows = rows.at(order[u]);
    std::vector<std::string> items;
    items.reserve(user_rows.size());
    for (auto r : user_rows) items.push_back(pairs.items()[r]);
    const auto scores = algo.predict_for_user(order[u], items);
    for (std::size_t k = 0; k < user_rows.size(); ++k) out.predictions[user_rows[k]] = scores[k];
  });
  return out;
}

BatchRecommendations batch_recommend(const Recommender& algo, std::span<const std::string> users,
                                     std::size_t n, const CandidateMap* candidates,
                                     std::size_t workers) {
  BatchRecommendations out;
  std::unordered_set<std::string> seen;
  for (const auto& u : users)
    if (seen.insert(u).second) out.users.push_back(u);

  std::vector<std::vector<ScoredItem>> lists(out.users.size());
  parallel_for(out.users.size(), workers, [&](std::size_t k) {
    const std::vector<std::string>* cands = nullptr;
    if (candidates) {
      auto it = candidates->find(out.users[k]);
      if (it != candidates->end()) cands = &it->second;
    }
    lists[k] = algo.recommend(out.users[k], n, cands);
  });

  for (std::size_t k = 0; k < lists.size(); ++k) {
    if (lists[k].empty()) out.empty_users.push_back(out.users[k]);
    for (std::size_t r = 0; r < lists[k].size(); ++r) {
      out.recs.users.push_back(out.users[k]);
      out.recs.items.push_back(lists[k][r].item);
      out.recs.scores.push_back(lists[k][r].score);
      out.recs.ranks.push_back(static_cast<std::int64_t>(r + 1));
    }
  }
  return out;
}

}  // namespace reckit
