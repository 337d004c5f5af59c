// reckit: split, train, predict, recommend, eval, experiment, synth.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "reckit/batch.hpp"
#include "reckit/crossfold.hpp"
#include "reckit/csv.hpp"
#include "reckit/error.hpp"
#include "reckit/experiment.hpp"
#include "reckit/metrics.hpp"
#include "reckit/registry.hpp"
#include "reckit/synthetic.hpp"
#include "reckit/topn.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInfeasible = 4;

using namespace reckit;

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// Writes to the file when given, else stdout.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
  } else {
    auto out = open_out(path);
    fn(out);
  }
}

struct SplitArgs {
  std::string ratings, format = "csv", method = "part-users", select = "n:5", out;
  std::size_t k = 5, size = 0;
  std::uint64_t seed = 42;
};

int cmd_split(const SplitArgs& a) {
  const auto table = load_ratings(a.ratings, parse_rating_format(a.format));
  SplitSpec spec;
  spec.method = a.method;
  spec.k = a.k;
  spec.select = RowSelector::parse(a.select);
  spec.size = a.size;
  spec.seed = a.seed;
  const auto folds = make_splits(table, spec);

  nlohmann::json manifest;
  manifest["method"] = a.method;
  manifest["k"] = a.k;
  if (a.method.ends_with("users")) manifest["select"] = spec.select.to_string();
  if (a.method.starts_with("sample")) manifest["size"] = a.size;
  manifest["seed"] = a.seed;
  manifest["source"] = std::filesystem::path(a.ratings).filename().string();
  manifest["folds"] = nlohmann::json::array();
  for (const auto& f : folds) {
    const auto j = std::to_string(f.fold_index + 1);
    const auto train = a.out + ".train-" + j + ".csv";
    const auto test = a.out + ".test-" + j + ".csv";
    write_ratings_csv(std::filesystem::path(train), f.train);
    write_ratings_csv(std::filesystem::path(test), f.test);
    manifest["folds"].push_back({{"fold", f.fold_index + 1},
                                 {"train", std::filesystem::path(train).filename().string()},
                                 {"test", std::filesystem::path(test).filename().string()},
                                 {"train_rows", f.train.size()},
                                 {"test_rows", f.test.size()}});
  }
  auto out = open_out(a.out + ".folds.json");
  out << manifest.dump(2) << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string algo, ratings, format = "csv", out;
  std::vector<std::string> params;
};

int cmd_train(const TrainArgs& a) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& kv : a.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ParameterError("--param expects key=value, got '" + kv + "'");
    params[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  auto algo = make_algorithm(a.algo, params);
  const auto table = load_ratings(a.ratings, parse_rating_format(a.format));
  auto rec = adapt_to_recommender(algo);
  rec->fit(table);
  save_model(*rec, a.out);
  return kExitOk;
}

struct BatchArgs {
  std::string model, input, out;
  std::size_t n = 10, workers = 0;
  std::string candidates;
};

int cmd_predict(const BatchArgs& a) {
  auto algo = load_model(a.model);
  auto pred = std::dynamic_pointer_cast<Predictor>(algo);
  if (!pred) throw ParameterError("model '" + algo->name() + "' cannot predict ratings");
  const auto pairs = load_ratings(a.input, RatingFormat::kCsvHeader);
  const auto preds = batch_predict(*pred, pairs, a.workers);
  emit(a.out, [&](std::ostream& os) { write_predictions_csv(os, preds); });
  return kExitOk;
}

int cmd_recommend(const BatchArgs& a) {
  auto rec = adapt_to_recommender(load_model(a.model));
  const auto doc = read_csv_file(a.input);
  const auto uc = doc.column("user");
  if (uc < 0) throw SchemaError("users file needs a 'user' column");
  std::vector<std::string> users;
  for (const auto& row : doc.rows) users.push_back(row[static_cast<std::size_t>(uc)]);

  std::optional<CandidateMap> cands;
  if (!a.candidates.empty()) {
    const auto table = load_ratings(a.candidates, RatingFormat::kCsvHeader);
    cands.emplace();
    for (std::size_t r = 0; r < table.size(); ++r) (*cands)[table.users()[r]].push_back(table.items()[r]);
  }
  const auto result = batch_recommend(*rec, users, a.n, cands ? &*cands : nullptr, a.workers);
  emit(a.out, [&](std::ostream& os) { write_reclist_csv(os, result.recs); });

  nlohmann::json manifest{{"users", result.users.size()},
                          {"n", a.n},
                          {"rows", result.recs.size()},
                          {"empty_lists", result.empty_users}};
  if (!a.out.empty() && a.out != "-") {
    auto out = open_out(a.out + ".manifest.json");
    out << manifest.dump(2) << '\n';
  } else if (!result.empty_users.empty()) {
    std::cerr << result.empty_users.size() << " users received empty lists\n";
  }
  return kExitOk;
}

struct EvalArgs {
  std::string recs, preds, truth, out;
  std::string metrics = "ndcg";
  std::optional<double> min_rating;
  bool exclude_missing = false;
};

int cmd_eval(const EvalArgs& a) {
  std::vector<std::string> list_metrics;
  bool accuracy = false;
  std::vector<std::string> wanted;
  {
    std::stringstream ss(a.metrics);
    std::string m;
    while (std::getline(ss, m, ','))
      if (!m.empty()) wanted.push_back(m);
  }
  for (const auto& m : wanted) {
    if (m == "rmse" || m == "mae")
      accuracy = true;
    else if (is_list_metric(m))
      list_metrics.push_back(m);
    else
      throw ParameterError("unknown metric '" + m + "'");
  }
  if (!list_metrics.empty() && (a.recs.empty() || a.truth.empty()))
    throw ParameterError("list metrics need --recs and --truth");
  if (accuracy && a.preds.empty()) throw ParameterError("rmse/mae need --preds");

  if (!list_metrics.empty()) {
    const auto recs = read_reclist_csv(a.recs);
    if (recs.size() == 0) throw EmptyInputError("recommendation file has no rows");
    const auto truth = load_ratings(a.truth, RatingFormat::kCsvHeader);
    AnalysisOptions opts;
    opts.include_missing = !a.exclude_missing;
    opts.min_rating = a.min_rating;
    const auto table = reclist_analysis(recs, truth, list_metrics, opts);
    const auto summary = table.summary();
    if (!a.out.empty()) {
      auto per_user = open_out(a.out + ".metrics.csv");
      write_metrics_csv(per_user, table);
      auto out = open_out(a.out + ".summary.csv");
      write_metrics_csv(out, summary);
    }
    write_metrics_csv(std::cout, summary);
  }

  if (accuracy) {
    const auto preds = read_predictions_csv(a.preds);
    if (preds.size() == 0) throw EmptyInputError("prediction file has no rows");
    if (!preds.ratings) throw SchemaError("predictions need a rating column for rmse/mae");
    std::map<std::vector<std::string>, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (std::size_t r = 0; r < preds.size(); ++r) {
      std::vector<std::string> key;
      for (const auto& g : preds.groups) key.push_back(g.values[r]);
      auto& [p, t] = groups[key];
      p.push_back(preds.predictions[r]);
      t.push_back((*preds.ratings)[r]);
    }
    std::vector<std::string> header;
    for (const auto& g : preds.groups) header.push_back(g.name);
    header.insert(header.end(), {"rmse", "mae", "scored", "unscored"});
    auto write = [&](std::ostream& os) {
      write_csv_row(os, header);
      for (const auto& [key, pt] : groups) {
        std::size_t unscored = 0;
        for (double x : pt.first) unscored += is_missing(x);
        auto row = key;
        row.push_back(format_double(rmse(pt.first, pt.second, MissingPolicy::kIgnore)));
        row.push_back(format_double(mae(pt.first, pt.second, MissingPolicy::kIgnore)));
        row.push_back(std::to_string(pt.first.size() - unscored));
        row.push_back(std::to_string(unscored));
        write_csv_row(os, row);
      }
    };
    if (!a.out.empty()) {
      auto out = open_out(a.out + ".accuracy.csv");
      write(out);
    }
    write(std::cout);
  }
  return kExitOk;
}

struct ExperimentArgs {
  std::string config, output;
  std::optional<std::size_t> workers;
};

int cmd_experiment(const ExperimentArgs& a) {
  auto cfg = ExperimentConfig::from_file(a.config);
  if (!a.output.empty()) cfg.output = a.output;
  if (a.workers) cfg.workers = *a.workers;
  const auto ratings = load_experiment_data(cfg.data);
  const auto result = run_experiment(cfg, ratings);
  if (cfg.output) write_experiment_outputs(result, cfg, *cfg.output);
  print_summary(std::cout, result);
  return kExitOk;
}

struct SynthArgs {
  SyntheticOptions opts;
  std::string format = "ml100k", out;
};

int cmd_synth(const SynthArgs& a) {
  const auto table = synthetic_ratings(a.opts);
  emit(a.out, [&](std::ostream& os) {
    if (parse_rating_format(a.format) == RatingFormat::kCsvHeader) {
      write_ratings_csv(os, table);
      return;
    }
    for (std::size_t r = 0; r < table.size(); ++r)
      os << table.users()[r] << '\t' << table.items()[r] << '\t' << format_double(table.ratings()[r])
         << '\t' << table.timestamps()[r] << '\n';
  });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline recommender experiments over rating files"};
  app.require_subcommand(1);
  const std::vector<std::string> methods{"part-users", "sample-users", "part-rows", "sample-rows"};
  const std::vector<std::string> formats{"csv", "csv-header", "ml100k", "ml100k-tsv"};

  SplitArgs split;
  auto* s = app.add_subcommand("split", "Write train/test fold files");
  s->add_option("--ratings", split.ratings, "Rating file")->required();
  s->add_option("--format", split.format, "Input format")->check(CLI::IsMember(formats));
  s->add_option("--method", split.method, "Split method")->check(CLI::IsMember(methods));
  s->add_option("--k", split.k, "Number of folds");
  s->add_option("--select", split.select, "Test row selector: n:N, frac:F, last-n:N, last-frac:F");
  s->add_option("--size", split.size, "Users or rows per sample (sample-* methods)");
  s->add_option("--seed", split.seed, "Random seed");
  s->add_option("--out", split.out, "Output prefix")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Fit an algorithm and save the model");
  t->add_option("--algo", train.algo, "Algorithm")->required()->check(CLI::IsMember(algorithm_names()));
  t->add_option("--param", train.params, "Hyperparameter key=value (repeatable)");
  t->add_option("--ratings", train.ratings, "Training ratings")->required();
  t->add_option("--format", train.format, "Input format")->check(CLI::IsMember(formats));
  t->add_option("--out", train.out, "Model file")->required();

  BatchArgs predict;
  auto* p = app.add_subcommand("predict", "Predict ratings for (user,item) pairs");
  p->add_option("--model", predict.model, "Model file")->required();
  p->add_option("--pairs", predict.input, "CSV with user,item[,rating]")->required();
  p->add_option("--workers", predict.workers, "Worker threads (0 = default)");
  p->add_option("--out", predict.out, "Output CSV (default stdout)");

  BatchArgs recommend;
  auto* r = app.add_subcommand("recommend", "Produce top-n lists for users");
  r->add_option("--model", recommend.model, "Model file")->required();
  r->add_option("--users", recommend.input, "CSV with a user column")->required();
  r->add_option("--n", recommend.n, "List length");
  r->add_option("--candidates", recommend.candidates, "CSV of user,item candidate pairs");
  r->add_option("--workers", recommend.workers, "Worker threads (0 = default)");
  r->add_option("--out", recommend.out, "Output CSV (default stdout)");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Compute list and accuracy metrics");
  e->add_option("--recs", eval.recs, "Recommendation CSV");
  e->add_option("--preds", eval.preds, "Prediction CSV");
  e->add_option("--truth", eval.truth, "Test ratings CSV");
  e->add_option("--metrics", eval.metrics, "Comma-separated metric names");
  e->add_option("--min-rating", eval.min_rating, "Relevance threshold on test ratings");
  e->add_flag("--exclude-missing", eval.exclude_missing, "Drop truth users that received no list");
  e->add_option("--out", eval.out, "Output prefix");

  ExperimentArgs exp;
  auto* x = app.add_subcommand("experiment", "Run a configured experiment end to end");
  x->add_option("config", exp.config, "INI config file")->required();
  x->add_option("--output", exp.output, "Output directory (overrides the config)");
  x->add_option("--workers", exp.workers, "Worker threads (overrides the config)");

  SynthArgs synth;
  auto* y = app.add_subcommand("synth", "Generate synthetic MovieLens-shaped ratings");
  y->add_option("--users", synth.opts.users, "User count");
  y->add_option("--items", synth.opts.items, "Item count");
  y->add_option("--seed", synth.opts.seed, "Random seed");
  y->add_option("--format", synth.format, "Output format")->check(CLI::IsMember(formats));
  y->add_option("--out", synth.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s) return cmd_split(split);
    if (*t) return cmd_train(train);
    if (*p) return cmd_predict(predict);
    if (*r) return cmd_recommend(recommend);
    if (*e) return cmd_eval(eval);
    if (*x) return cmd_experiment(exp);
    if (*y) return cmd_synth(synth);
  } catch (const InfeasibleSplitError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitInfeasible;
  } catch (const ParameterError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
