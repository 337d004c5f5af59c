#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "reckit/table.hpp"

namespace reckit {

// One row per requested (user, item) pair. Missing predictions are NaN.
// Group columns (e.g. algorithm, fold) come first when present.
struct PredictionTable {
  std::vector<ExtraColumn> groups;
  std::vector<std::string> users;
  std::vector<std::string> items;
  std::vector<double> predictions;
  std::optional<std::vector<double>> ratings;

  std::size_t size() const { return users.size(); }
};

// Ranked recommendation rows; rank is 1-based within (groups, user).
struct RecList {
  std::vector<ExtraColumn> groups;
  std::vector<std::string> users;
  std::vector<std::string> items;
  std::vector<double> scores;
  std::vector<std::int64_t> ranks;

  std::size_t size() const { return users.size(); }
  void append(const RecList& other);
};

enum class MissingPolicy { kError, kIgnore };

// Throw UndefinedMetricError when no pair is scored.
double rmse(std::span<const double> predictions, std::span<const double> truth,
            MissingPolicy missing = MissingPolicy::kError);
double mae(std::span<const double> predictions, std::span<const double> truth,
           MissingPolicy missing = MissingPolicy::kError);

struct UserAccuracy {
  std::string user;
  double rmse;
  double mae;
};

// Per-user accuracy over a prediction table that carries ratings. Users whose
// predictions are all missing are skipped under kIgnore.
std::vector<UserAccuracy> per_user_accuracy(const PredictionTable& preds,
                                            MissingPolicy missing = MissingPolicy::kError);

// A user's relevant test items with their gain values (rating, or 1 when
// the truth has no ratings).
struct Truth {
  std::unordered_map<std::string, double> gains;

  std::size_t size() const { return gains.size(); }
  bool relevant(const std::string& item) const { return gains.contains(item); }
};

enum class Gain { kBinary, kRating };

// List metrics. `recs` is in rank order.
double precision(std::span<const std::string> recs, const Truth& truth);  // NaN for an empty list
double recall(std::span<const std::string> recs, const Truth& truth);
// Recall with the denominator capped at the list length.
double recall_capped(std::span<const std::string> recs, const Truth& truth);
double hit(std::span<const std::string> recs, const Truth& truth);
double recip_rank(std::span<const std::string> recs, const Truth& truth);
// Sum of precision@k at each relevant rank k, over |truth|.
double avg_precision(std::span<const std::string> recs, const Truth& truth);
// DCG with discount 1/log2(max(rank, 2)), over the DCG of all truth items
// sorted by gain. 0 when the ideal DCG is 0.
double ndcg(std::span<const std::string> recs, const Truth& truth, Gain gain = Gain::kBinary);

using ListMetricFn = double (*)(std::span<const std::string>, const Truth&);

// Known names: precision, recall, recall.capped, hit, recip_rank, ap,
// ndcg (binary gain), ndcg.rating.
ListMetricFn list_metric(const std::string& name);
bool is_list_metric(const std::string& name);

struct AnalysisOptions {
  // Score truth users without a list in a group as if given an empty list.
  bool include_missing = true;
  // Only truth rows with rating >= min_rating are relevant.
  std::optional<double> min_rating;
};

// Per-(group, user) metric values, rows sorted by group values then user.
struct MetricTable {
  std::vector<std::string> group_names;
  std::vector<std::string> metric_names;
  struct Row {
    std::vector<std::string> group;
    std::string user;
    std::vector<double> values;
  };
  std::vector<Row> rows;

  // Mean of each metric per group, ignoring NaN.
  MetricTable summary() const;
};

std::unordered_map<std::string, Truth> build_truth(const RatingTable& test,
                                                   std::optional<double> min_rating = std::nullopt);

// Groups recommendations by (group columns, user), orders each list by rank,
// pairs it with that user's truth, and evaluates every named metric. Users
// with recommendations but no truth are dropped. Throws SchemaError on
// duplicate (group, user, rank).
MetricTable reclist_analysis(const RecList& recs, const RatingTable& truth,
                             const std::vector<std::string>& metrics,
                             const AnalysisOptions& opts = {});

void write_predictions_csv(std::ostream& out, const PredictionTable& preds);
void write_reclist_csv(std::ostream& out, const RecList& recs);
void write_metrics_csv(std::ostream& out, const MetricTable& table);
PredictionTable read_predictions_csv(const std::filesystem::path& path);
RecList read_reclist_csv(const std::filesystem::path& path);

}  // namespace reckit
