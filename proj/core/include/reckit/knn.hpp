#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reckit/algorithm.hpp"
#include "reckit/dataset.hpp"

namespace reckit {

enum class Aggregate { kWeightedAverage, kSum };
enum class Feedback { kAuto, kExplicit, kImplicit };

struct KnnOptions {
  std::size_t nnbrs = 20;
  std::size_t min_nbrs = 1;
  double min_sim = 1e-6;
  // Item-item only: neighbors kept per item after fit; 0 keeps all.
  std::size_t save_nbrs = 0;
  // kAuto: explicit when the training table has ratings.
  Feedback feedback = Feedback::kAuto;
  // Unset: weighted average for explicit data, sum for implicit data.
  std::optional<Aggregate> aggregate;

  static KnnOptions from_json(const nlohmann::json& params, bool item_based);
  nlohmann::json to_json(bool item_based) const;
};

// A user's ratings as (item position, centered value) sorted by position,
// plus the mean that was removed.
struct CenteredVector {
  std::vector<std::int32_t> items;
  std::vector<double> values;
  double mean = 0.0;
  double norm = 0.0;
};

// Centers fresh ratings the same way fit centers a training row. Items
// unknown to `index` count toward the mean and norm but are not returned.
CenteredVector center_history(const UserHistory& history, const Index& index, bool explicit_ratings);

// User-user collaborative filtering with cosine similarity over
// mean-centered rating vectors:
//   score(u,i) = mu_u + sum_{v in N} s_uv (r_vi - mu_v) / sum_{v in N} |s_uv|
// where N is the nnbrs most similar users who rated i with s_uv > min_sim.
class UserUser : public Predictor {
 public:
  explicit UserUser(KnnOptions opts = {}) : opts_(opts) {}

  std::string name() const override { return "user-user"; }
  nlohmann::json params() const override { return opts_.to_json(false); }
  void fit(const RatingTable& ratings, const FitExtras& extras = {}) override;
  bool fitted() const override { return fitted_; }
  void save(ModelArchive& archive) const override;
  void load(const ModelArchive& archive) override;

  std::vector<double> predict_for_user(std::string_view user, std::span<const std::string> items,
                                       const UserHistory* history = nullptr) const override;

  const std::vector<double>& user_means() const { return means_; }
  const std::vector<double>& user_norms() const { return norms_; }
  // Centered ratings, one row per user.
  const CsrMatrix& centered() const { return by_user_; }

 private:
  KnnOptions opts_;
  bool fitted_ = false;
  bool explicit_ = true;
  Index users_;
  Index items_;
  CsrMatrix by_user_;
  CsrMatrix by_item_;
  std::vector<double> means_;
  std::vector<double> norms_;
};

// Per-item neighbor lists, each sorted by similarity descending (ties by
// neighbor position ascending).
struct SimilarityTable {
  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int32_t> neighbors;
  std::vector<double> sims;

  std::size_t size() const { return neighbors.size(); }
  std::size_t n_items() const { return row_ptr.size() - 1; }
  std::span<const std::int32_t> row_neighbors(std::int32_t i) const {
    return {neighbors.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }
  std::span<const double> row_sims(std::int32_t i) const {
    return {sims.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }
  // Similarity of (i, j), or 0 when j is not stored as a neighbor of i.
  double lookup(std::int32_t i, std::int32_t j) const;
};

// Cosine between columns of the item-by-user matrix. Only pairs with
// similarity above min_sim are kept; the diagonal is excluded.
SimilarityTable item_similarities(const CsrMatrix& by_item, double min_sim, std::size_t save_nbrs,
                                  std::size_t workers = 0);

// Item-item collaborative filtering. Item columns are centered by user means;
// prediction is mu_u plus the similarity-weighted average of the user's
// centered ratings of the nnbrs most similar items they rated.
class ItemItem : public Predictor {
 public:
  explicit ItemItem(KnnOptions opts = {}) : opts_(opts) {}

  std::string name() const override { return "item-item"; }
  nlohmann::json params() const override { return opts_.to_json(true); }
  void fit(const RatingTable& ratings, const FitExtras& extras = {}) override;
  bool fitted() const override { return fitted_; }
  void save(ModelArchive& archive) const override;
  void load(const ModelArchive& archive) override;

  std::vector<double> predict_for_user(std::string_view user, std::span<const std::string> items,
                                       const UserHistory* history = nullptr) const override;

  const SimilarityTable& similarities() const { return sims_; }
  const Index& items() const { return items_; }

 private:
  KnnOptions opts_;
  bool fitted_ = false;
  bool explicit_ = true;
  Index users_;
  Index items_;
  CsrMatrix by_user_;  // centered
  std::vector<double> means_;
  SimilarityTable sims_;
};

}  // namespace reckit
