#include "reckit/topn.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "reckit/archive.hpp"
#include "reckit/error.hpp"
#include "reckit/registry.hpp"

namespace reckit {

std::vector<ScoredItem> rank_by_score(std::span<const std::string> items,
                                      std::span<const double> scores, std::optional<std::size_t> n,
                                      const Index& order) {
  struct Entry {
    double score;
    std::int64_t pos;
    std::size_t src;
  };
  std::vector<Entry> entries;
  entries.reserve(items.size());
  const auto unknown = static_cast<std::int64_t>(order.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (is_missing(scores[k])) continue;
    const auto p = order.position(items[k]);
    entries.push_back({scores[k], p < 0 ? unknown : p, k});
  }
  auto before = [&](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.pos != b.pos) return a.pos < b.pos;
    return items[a.src] < items[b.src];
  };
  const std::size_t keep = n ? std::min(*n, entries.size()) : entries.size();
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep),
                    entries.end(), before);
  std::vector<ScoredItem> out;
  out.reserve(keep);
  for (std::size_t k = 0; k < keep; ++k) out.push_back({items[entries[k].src], entries[k].score});
  return out;
}

void UnratedItems::fit(const RatingTable& ratings, const FitExtras&) {
  auto ds = build_dataset(ratings);
  users_ = std::move(ds.users);
  items_ = std::move(ds.items);
  rated_ = std::move(ds.by_user);
  fitted_ = true;
}

void UnratedItems::save(ModelArchive& ar) const {
  ar.put_index("users", users_);
  ar.put_index("items", items_);
  ar.put_csr("rated", rated_);
}

void UnratedItems::load(const ModelArchive& ar) {
  users_ = ar.index("users");
  items_ = ar.index("items");
  rated_ = ar.csr("rated");
  fitted_ = true;
}

std::vector<std::int32_t> UnratedItems::candidate_positions(std::string_view user,
                                                            const UserHistory* history) const {
  if (!fitted_) throw FitError("candidate selector used before fit");
  std::vector<char> excluded(items_.size(), 0);
  if (const auto u = users_.position(user); u >= 0)
    for (auto i : rated_.row_cols(u)) excluded[i] = 1;
  if (history)
    for (const auto& it : history->items)
      if (const auto i = items_.position(it); i >= 0) excluded[i] = 1;
  std::vector<std::int32_t> out;
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(items_.size()); ++i)
    if (!excluded[i]) out.push_back(i);
  return out;
}

std::vector<std::string> UnratedItems::candidates(std::string_view user,
                                                  const UserHistory* history) const {
  std::vector<std::string> out;
  for (auto i : candidate_positions(user, history)) out.push_back(items_.id(i));
  return out;
}

TopN::TopN(std::shared_ptr<Predictor> scorer, std::shared_ptr<CandidateSelector> selector)
    : scorer_(std::move(scorer)), selector_(std::move(selector)) {
  if (!scorer_ || !selector_) throw ParameterError("TopN needs a scorer and a candidate selector");
}

nlohmann::json TopN::params() const {
  return {{"scorer", scorer_->name()}, {"selector", selector_->name()}};
}

void TopN::fit(const RatingTable& ratings, const FitExtras& extras) {
  scorer_->fit(ratings, extras);
  selector_->fit(ratings, extras);
  items_ = Index();
  for (const auto& it : ratings.items()) items_.intern(it);
  fitted_ = true;
}

void TopN::save(ModelArchive& ar) const {
  ar.put_index("items", items_);
  ar.child("scorer") = archive_of(*scorer_);
  ar.child("selector") = archive_of(*selector_);
}

void TopN::load(const ModelArchive& ar) {
  items_ = ar.index("items");
  scorer_ = std::dynamic_pointer_cast<Predictor>(algorithm_from_archive(ar.child("scorer")));
  selector_ =
      std::dynamic_pointer_cast<CandidateSelector>(algorithm_from_archive(ar.child("selector")));
  if (!scorer_ || !selector_) throw ModelFormatError("TopN components have the wrong type");
  fitted_ = true;
}

std::vector<double> TopN::predict_for_user(std::string_view user, std::span<const std::string> items,
                                           const UserHistory* history) const {
  return scorer_->predict_for_user(user, items, history);
}

std::vector<ScoredItem> TopN::recommend(std::string_view user, std::optional<std::size_t> n,
                                        const std::vector<std::string>* candidates,
                                        const UserHistory* history) const {
  if (!fitted_) throw FitError("TopN used before fit");
  std::vector<std::string> chosen;
  if (candidates == nullptr) {
    chosen = selector_->candidates(user, history);
    candidates = &chosen;
  }
  const auto scores = scorer_->predict_for_user(user, *candidates, history);
  return rank_by_score(*candidates, scores, n, items_);
}

Fallback::Fallback(std::shared_ptr<Predictor> primary, std::shared_ptr<Predictor> fallback)
    : primary_(std::move(primary)), fallback_(std::move(fallback)) {
  if (!primary_ || !fallback_) throw ParameterError("Fallback needs two predictors");
}

nlohmann::json Fallback::params() const {
  return {{"primary", primary_->name()}, {"fallback", fallback_->name()}};
}

void Fallback::fit(const RatingTable& ratings, const FitExtras& extras) {
  primary_->fit(ratings, extras);
  fallback_->fit(ratings, extras);
}

void Fallback::save(ModelArchive& ar) const {
  ar.child("primary") = archive_of(*primary_);
  ar.child("fallback") = archive_of(*fallback_);
}

void Fallback::load(const ModelArchive& ar) {
  primary_ = std::dynamic_pointer_cast<Predictor>(algorithm_from_archive(ar.child("primary")));
  fallback_ = std::dynamic_pointer_cast<Predictor>(algorithm_from_archive(ar.child("fallback")));
  if (!primary_ || !fallback_) throw ModelFormatError("Fallback components must be predictors");
}

std::vector<double> Fallback::predict_for_user(std::string_view user,
                                               std::span<const std::string> items,
                                               const UserHistory* history) const {
  auto scores = primary_->predict_for_user(user, items, history);
  std::vector<std::string> holes;
  std::vector<std::size_t> where;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (is_missing(scores[k])) {
      holes.push_back(items[k]);
      where.push_back(k);
    }
  }
  if (holes.empty()) return scores;
  const auto filled = fallback_->predict_for_user(user, holes, history);
  for (std::size_t k = 0; k < where.size(); ++k) scores[where[k]] = filled[k];
  return scores;
}

std::shared_ptr<Recommender> adapt_to_recommender(std::shared_ptr<Algorithm> algo) {
  if (auto rec = std::dynamic_pointer_cast<Recommender>(algo)) return rec;
  if (auto pred = std::dynamic_pointer_cast<Predictor>(algo)) return std::make_shared<TopN>(pred);
  throw ParameterError("algorithm '" + (algo ? algo->name() : std::string("null")) +
                       "' can neither predict nor recommend");
}

}  // namespace reckit
