#pragma once

#include <cstdint>
#include <vector>

#include "reckit/algorithm.hpp"
#include "reckit/dataset.hpp"
#include "reckit/topn.hpp"

namespace reckit {

struct BiasOptions {
  double user_damping = 0.0;
  double item_damping = 0.0;
  // Switching both off leaves a global-mean predictor.
  bool item_terms = true;
  bool user_terms = true;

  static BiasOptions from_json(const nlohmann::json& params);
  nlohmann::json to_json() const;
};

// Global mean plus damped item offsets, then damped user offsets computed on
// what the item offsets leave over:
//   b_i = sum_{u in R_i} (r_ui - mu) / (|R_i| + item_damping)
//   b_u = sum_{i in R_u} (r_ui - mu - b_i) / (|R_u| + user_damping)
struct BiasModel {
  double mean = 0.0;
  std::vector<double> item_offsets;
  std::vector<double> user_offsets;

  static BiasModel fit(const Dataset& ds, const BiasOptions& opts);

  // Negative positions stand for unknown users/items and contribute 0.
  double predict(std::int32_t user, std::int32_t item) const {
    double v = mean;
    if (user >= 0) v += user_offsets[static_cast<std::size_t>(user)];
    if (item >= 0) v += item_offsets[static_cast<std::size_t>(item)];
    return v;
  }

  // r_ui - prediction for every stored entry, aligned with by_user.values.
  std::vector<double> residuals(const Dataset& ds) const;

  void save(ModelArchive& ar) const;
  static BiasModel load(const ModelArchive& ar);
};

class Bias : public Predictor {
 public:
  explicit Bias(BiasOptions opts = {}) : opts_(opts) {}

  std::string name() const override { return "bias"; }
  nlohmann::json params() const override { return opts_.to_json(); }
  void fit(const RatingTable& ratings, const FitExtras& extras = {}) override;
  bool fitted() const override { return fitted_; }
  void save(ModelArchive& archive) const override;
  void load(const ModelArchive& archive) override;

  std::vector<double> predict_for_user(std::string_view user, std::span<const std::string> items,
                                       const UserHistory* history = nullptr) const override;

  const BiasModel& model() const { return model_; }
  const Index& users() const { return users_; }
  const Index& items() const { return items_; }

 private:
  BiasOptions opts_;
  bool fitted_ = false;
  Index users_;
  Index items_;
  BiasModel model_;
};

// Ranks candidates by how many distinct training users interacted with them.
class Popular : public Recommender {
 public:
  std::string name() const override { return "popular"; }
  nlohmann::json params() const override { return nlohmann::json::object(); }
  void fit(const RatingTable& ratings, const FitExtras& extras = {}) override;
  bool fitted() const override { return selector_.fitted(); }
  void save(ModelArchive& archive) const override;
  void load(const ModelArchive& archive) override;

  std::vector<ScoredItem> recommend(std::string_view user, std::optional<std::size_t> n = std::nullopt,
                                    const std::vector<std::string>* candidates = nullptr,
                                    const UserHistory* history = nullptr) const override;

  // Interaction count per item position.
  const std::vector<double>& counts() const { return counts_; }

 private:
  UnratedItems selector_;
  std::vector<double> counts_;
};

// Uniform sample without replacement from the candidates. The stream is
// derived from (seed, user), so a user always gets the same list. Scores are
// L, L-1, ..., 1 in draw order.
class Random : public Recommender {
 public:
  explicit Random(std::uint64_t seed = 42) : seed_(seed) {}

  std::string name() const override { return "random"; }
  nlohmann::json params() const override { return {{"seed", seed_}}; }
  void fit(const RatingTable& ratings, const FitExtras& extras = {}) override;
  bool fitted() const override { return selector_.fitted(); }
  void save(ModelArchive& archive) const override;
  void load(const ModelArchive& archive) override;

  std::vector<ScoredItem> recommend(std::string_view user, std::optional<std::size_t> n = std::nullopt,
                                    const std::vector<std::string>* candidates = nullptr,
                                    const UserHistory* history = nullptr) const override;

 private:
  std::uint64_t seed_;
  UnratedItems selector_;
};

}  // namespace reckit
