#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reckit/crossfold.hpp"
#include "reckit/csv.hpp"
#include "reckit/metrics.hpp"
#include "reckit/synthetic.hpp"
#include "reckit/table.hpp"

namespace reckit {

struct DataSpec {
  std::optional<std::filesystem::path> path;
  RatingFormat format = RatingFormat::kMl100kTsv;
  // Used when no path is given.
  std::optional<SyntheticOptions> synthetic;
};

struct SplitSpec {
  // part-users, sample-users, part-rows or sample-rows.
  std::string method = "part-users";
  std::size_t k = 5;
  RowSelector select = RowSelector::sample_n(5);
  // Sample size for the sample-* methods.
  std::size_t size = 0;
  std::uint64_t seed = 42;
};

struct AlgorithmSpec {
  std::string label;
  std::string algo;
  nlohmann::json params = nlohmann::json::object();
};

// INI layout:
//
//   [data]        path, format (csv | ml100k), or synthetic = true plus
//                 users, items, seed, features, taste, popularity_skew, noise
//   [split]       method, k, select, size, seed
//   [run]         n, workers, metrics (comma list), predict, output
//   [algorithm:LABEL]
//                 algo = registry name; every other key is a hyperparameter
//
// Relative paths resolve against the config file's directory.
struct ExperimentConfig {
  DataSpec data;
  SplitSpec split;
  std::vector<AlgorithmSpec> algorithms;
  std::size_t n = 20;
  std::size_t workers = 0;
  std::vector<std::string> metrics{"ndcg"};
  bool predict = true;
  std::optional<std::filesystem::path> output;

  static ExperimentConfig parse(std::istream& in, const std::filesystem::path& base_dir = {});
  // Also checks that the data file exists, so a bad path fails before any work.
  static ExperimentConfig from_file(const std::filesystem::path& path);
};

struct AlgorithmSummary {
  std::string label;
  std::optional<double> rmse;
  std::optional<double> mae;
  std::size_t predicted = 0;
  std::size_t unpredicted = 0;
  std::vector<std::pair<std::string, double>> metrics;
};

struct ExperimentResult {
  // Group columns: algorithm, fold.
  PredictionTable predictions;
  RecList recs;
  MetricTable per_user;
  std::vector<std::string> empty_list_users;
  std::vector<AlgorithmSummary> summaries;
  double seconds = 0.0;
};

RatingTable load_experiment_data(const DataSpec& data);
std::vector<TrainTestPair> make_splits(const RatingTable& ratings, const SplitSpec& split);

// Split, then for each fold and algorithm: fit, adapt to a recommender,
// predict the test pairs, recommend n items per test user, and evaluate.
ExperimentResult run_experiment(const ExperimentConfig& config, const RatingTable& ratings);

// predictions.csv, recommendations.csv, metrics.csv, summary.csv and a
// run.json sidecar.
void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                              const std::filesystem::path& dir);

void print_summary(std::ostream& out, const ExperimentResult& result);

}  // namespace reckit
