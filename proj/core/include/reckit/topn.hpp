#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reckit/algorithm.hpp"
#include "reckit/dataset.hpp"

namespace reckit {

// Orders (item, score) pairs by score descending, ties by position in
// `order` (items absent from it go last, by id), drops missing scores, and
// keeps at most n.
std::vector<ScoredItem> rank_by_score(std::span<const std::string> items,
                                      std::span<const double> scores, std::optional<std::size_t> n,
                                      const Index& order);

// Candidates are every training item the user has not rated. Items in a
// supplied history are removed as well.
class UnratedItems : public CandidateSelector {
 public:
  std::string name() const override { return "unrated"; }
  nlohmann::json params() const override { return nlohmann::json::object(); }
  void fit(const RatingTable& ratings, const FitExtras& extras = {}) override;
  bool fitted() const override { return fitted_; }
  void save(ModelArchive& archive) const override;
  void load(const ModelArchive& archive) override;

  std::vector<std::string> candidates(std::string_view user,
                                      const UserHistory* history = nullptr) const override;

  // Same as candidates(), as item positions.
  std::vector<std::int32_t> candidate_positions(std::string_view user,
                                                const UserHistory* history = nullptr) const;

  const Index& items() const { return items_; }

 private:
  bool fitted_ = false;
  Index users_;
  Index items_;
  CsrMatrix rated_;
};

// Turns a Predictor into a Recommender by scoring candidates and keeping the
// best n.
class TopN : public Predictor, public Recommender {
 public:
  explicit TopN(std::shared_ptr<Predictor> scorer,
                std::shared_ptr<CandidateSelector> selector = std::make_shared<UnratedItems>());

  std::string name() const override { return "topn"; }
  nlohmann::json params() const override;
  void fit(const RatingTable& ratings, const FitExtras& extras = {}) override;
  bool fitted() const override { return fitted_; }
  void save(ModelArchive& archive) const override;
  void load(const ModelArchive& archive) override;

  std::vector<double> predict_for_user(std::string_view user, std::span<const std::string> items,
                                       const UserHistory* history = nullptr) const override;

  std::vector<ScoredItem> recommend(std::string_view user, std::optional<std::size_t> n = std::nullopt,
                                    const std::vector<std::string>* candidates = nullptr,
                                    const UserHistory* history = nullptr) const override;

  const std::shared_ptr<Predictor>& scorer() const { return scorer_; }
  const std::shared_ptr<CandidateSelector>& selector() const { return selector_; }

 private:
  std::shared_ptr<Predictor> scorer_;
  std::shared_ptr<CandidateSelector> selector_;
  Index items_;
  bool fitted_ = false;
};

// Uses the primary predictor's score where it has one, the fallback's
// elsewhere.
class Fallback : public Predictor {
 public:
  Fallback(std::shared_ptr<Predictor> primary, std::shared_ptr<Predictor> fallback);

  std::string name() const override { return "fallback"; }
  nlohmann::json params() const override;
  void fit(const RatingTable& ratings, const FitExtras& extras = {}) override;
  bool fitted() const override { return primary_->fitted() && fallback_->fitted(); }
  void save(ModelArchive& archive) const override;
  void load(const ModelArchive& archive) override;

  std::vector<double> predict_for_user(std::string_view user, std::span<const std::string> items,
                                       const UserHistory* history = nullptr) const override;

 private:
  std::shared_ptr<Predictor> primary_;
  std::shared_ptr<Predictor> fallback_;
};

// Returns algo itself when it already recommends; wraps a Predictor in TopN
// with the unrated-items selector. Throws ParameterError otherwise.
std::shared_ptr<Recommender> adapt_to_recommender(std::shared_ptr<Algorithm> algo);

}  // namespace reckit
