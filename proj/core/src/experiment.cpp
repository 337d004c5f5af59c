#include "reckit/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "reckit/batch.hpp"
#include "reckit/error.hpp"
#include "reckit/registry.hpp"
#include "reckit/topn.hpp"

namespace reckit {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto b = part.find_first_not_of(" \t");
    const auto e = part.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(part.substr(b, e - b + 1));
  }
  return out;
}

template <typename T>
T read_value(const pt::ptree& section, const std::string& section_name, const std::string& key,
             T fallback) {
  auto v = section.get_optional<std::string>(pt::ptree::path_type(key, '\0'));
  if (!v) return fallback;
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      return *v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (*v == "true" || *v == "yes" || *v == "1") return true;
      if (*v == "false" || *v == "no" || *v == "0") return false;
      throw ParameterError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      std::size_t used = 0;
      const T x = static_cast<T>(std::stod(*v, &used));
      if (used != v->size()) throw ParameterError("");
      return x;
    } else {
      std::size_t used = 0;
      const auto x = std::stoull(*v, &used);
      if (used != v->size() || v->front() == '-') throw ParameterError("");
      return static_cast<T>(x);
    }
  } catch (const std::exception&) {
    throw ParameterError("[" + section_name + "] " + key + ": invalid value '" + *v + "'");
  }
}

void reject_unknown(const pt::ptree& section, const std::string& name,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, _] : section) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ParameterError("[" + name + "] unknown key '" + key + "'");
  }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParameterError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  ExperimentConfig cfg;
  bool have_data = false;
  for (const auto& [name, section] : tree) {
    if (name == "data") {
      have_data = true;
      reject_unknown(section, name, {"path", "format", "synthetic", "users", "items", "seed", "features", "taste",
                                      "popularity_skew", "noise"});
      if (auto p = section.get_optional<std::string>("path")) cfg.data.path = resolve(*p, base_dir);
      cfg.data.format = parse_rating_format(read_value<std::string>(section, name, "format", "ml100k"));
      if (read_value(section, name, "synthetic", false)) {
        SyntheticOptions s;
        s.users = read_value(section, name, "users", s.users);
        s.items = read_value(section, name, "items", s.items);
        s.seed = read_value(section, name, "seed", s.seed);
        s.features = read_value(section, name, "features", s.features);
        s.taste = read_value(section, name, "taste", s.taste);
        s.popularity_skew = read_value(section, name, "popularity_skew", s.popularity_skew);
        s.noise = read_value(section, name, "noise", s.noise);
        cfg.data.synthetic = s;
      }
      if (cfg.data.path && cfg.data.synthetic)
        throw ParameterError("[data] set either path or synthetic, not both");
      if (!cfg.data.path && !cfg.data.synthetic) throw ParameterError("[data] needs a path");
    } else if (name == "split") {
      reject_unknown(section, name, {"method", "k", "select", "size", "seed"});
      cfg.split.method = read_value(section, name, "method", cfg.split.method);
      cfg.split.k = read_value(section, name, "k", cfg.split.k);
      if (auto sel = section.get_optional<std::string>("select")) cfg.split.select = RowSelector::parse(*sel);
      cfg.split.size = read_value(section, name, "size", cfg.split.size);
      cfg.split.seed = read_value(section, name, "seed", cfg.split.seed);
    } else if (name == "run") {
      reject_unknown(section, name, {"n", "workers", "metrics", "predict", "output"});
      cfg.n = read_value(section, name, "n", cfg.n);
      cfg.workers = read_value(section, name, "workers", cfg.workers);
      if (auto m = section.get_optional<std::string>("metrics")) cfg.metrics = split_list(*m);
      cfg.predict = read_value(section, name, "predict", cfg.predict);
      if (auto o = section.get_optional<std::string>("output")) cfg.output = resolve(*o, base_dir);
    } else if (name.starts_with("algorithm:")) {
      AlgorithmSpec spec;
      spec.label = name.substr(10);
      if (spec.label.empty()) throw ParameterError("[" + name + "] needs a label");
      for (const auto& [key, value] : section) {
        if (key == "algo")
          spec.algo = value.data();
        else
          spec.params[key] = value.data();
      }
      if (spec.algo.empty()) throw ParameterError("[" + name + "] needs algo = <name>");
      // Fail on bad names or hyperparameters before any data is touched.
      make_algorithm(spec.algo, spec.params);
      cfg.algorithms.push_back(std::move(spec));
    } else {
      throw ParameterError("unknown section [" + name + "]");
    }
  }
  if (!have_data) throw ParameterError("config has no [data] section");
  if (cfg.algorithms.empty()) throw ParameterError("config has no [algorithm:...] section");
  static const char* methods[] = {"part-users", "sample-users", "part-rows", "sample-rows"};
  if (std::find(std::begin(methods), std::end(methods), cfg.split.method) == std::end(methods))
    throw ParameterError("unknown split method '" + cfg.split.method + "'");
  for (const auto& m : cfg.metrics)
    if (!is_list_metric(m) && m != "rmse" && m != "mae")
      throw ParameterError("unknown metric '" + m + "'");
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto cfg = parse(in, path.parent_path());
  if (cfg.data.path && !std::filesystem::is_regular_file(*cfg.data.path))
    throw IoError("data file not found: " + cfg.data.path->string());
  return cfg;
}

RatingTable load_experiment_data(const DataSpec& data) {
  if (data.path) return load_ratings(*data.path, data.format);
  return synthetic_ratings(data.synthetic.value_or(SyntheticOptions{}));
}

std::vector<TrainTestPair> make_splits(const RatingTable& ratings, const SplitSpec& split) {
  if (split.method == "part-users") return partition_users(ratings, split.k, split.select, split.seed);
  if (split.method == "sample-users")
    return sample_users(ratings, split.k, split.size, split.select, split.seed);
  if (split.method == "part-rows") return partition_rows(ratings, split.k, split.seed);
  if (split.method == "sample-rows") return sample_rows(ratings, split.k, split.size, split.seed, true);
  throw ParameterError("unknown split method '" + split.method + "'");
}

namespace {

void push_group(std::vector<ExtraColumn>& groups, const std::string& algo, const std::string& fold,
                std::size_t count) {
  if (groups.empty()) groups = {{"algorithm", {}}, {"fold", {}}};
  groups[0].values.insert(groups[0].values.end(), count, algo);
  groups[1].values.insert(groups[1].values.end(), count, fold);
}

void append_predictions(PredictionTable& all, const PredictionTable& part, const std::string& algo,
                        const std::string& fold) {
  push_group(all.groups, algo, fold, part.size());
  all.users.insert(all.users.end(), part.users.begin(), part.users.end());
  all.items.insert(all.items.end(), part.items.begin(), part.items.end());
  all.predictions.insert(all.predictions.end(), part.predictions.begin(), part.predictions.end());
  if (part.ratings) {
    if (!all.ratings) all.ratings.emplace();
    all.ratings->insert(all.ratings->end(), part.ratings->begin(), part.ratings->end());
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const RatingTable& ratings) {
  const auto start = std::chrono::steady_clock::now();
  const auto folds = make_splits(ratings, config.split);

  std::vector<std::string> list_metrics;
  for (const auto& m : config.metrics)
    if (is_list_metric(m)) list_metrics.push_back(m);

  ExperimentResult result;
  result.per_user.group_names = {"algorithm", "fold"};
  result.per_user.metric_names = list_metrics;

  for (const auto& fold : folds) {
    const auto fold_id = std::to_string(fold.fold_index + 1);
    std::vector<std::string> test_users;
    {
      std::unordered_set<std::string> seen;
      for (const auto& u : fold.test.users())
        if (seen.insert(u).second) test_users.push_back(u);
    }
    for (const auto& spec : config.algorithms) {
      auto algo = make_algorithm(spec.algo, spec.params);
      auto rec = adapt_to_recommender(algo);
      rec->fit(fold.train);

      if (config.predict) {
        if (auto pred = std::dynamic_pointer_cast<Predictor>(rec)) {
          append_predictions(result.predictions, batch_predict(*pred, fold.test, config.workers),
                             spec.label, fold_id);
        }
      }

      auto batch = batch_recommend(*rec, test_users, config.n, nullptr, config.workers);
      for (auto& u : batch.empty_users) result.empty_list_users.push_back(spec.label + "/" + fold_id + "/" + u);
      push_group(batch.recs.groups, spec.label, fold_id, batch.recs.size());

      if (!list_metrics.empty()) {
        RecList keyed = batch.recs;
        keyed.groups.resize(1);
        auto table = reclist_analysis(keyed, fold.test, list_metrics);
        for (auto& row : table.rows) {
          if (row.group.empty()) row.group = {spec.label};
          row.group.push_back(fold_id);
          result.per_user.rows.push_back(std::move(row));
        }
      }
      result.recs.append(batch.recs);
    }
  }

  for (const auto& spec : config.algorithms) {
    AlgorithmSummary s;
    s.label = spec.label;
    std::vector<double> p, t;
    for (std::size_t r = 0; r < result.predictions.size(); ++r) {
      if (result.predictions.groups[0].values[r] != spec.label) continue;
      if (is_missing(result.predictions.predictions[r])) {
        ++s.unpredicted;
        continue;
      }
      ++s.predicted;
      p.push_back(result.predictions.predictions[r]);
      t.push_back((*result.predictions.ratings)[r]);
    }
    if (!p.empty()) {
      s.rmse = rmse(p, t);
      s.mae = mae(p, t);
    }
    for (std::size_t m = 0; m < list_metrics.size(); ++m) {
      double acc = 0.0;
      std::size_t n = 0;
      for (const auto& row : result.per_user.rows) {
        if (row.group[0] != spec.label || std::isnan(row.values[m])) continue;
        acc += row.values[m];
        ++n;
      }
      s.metrics.emplace_back(list_metrics[m], n ? acc / static_cast<double>(n) : kMissing);
    }
    result.summaries.push_back(std::move(s));
  }

  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                              const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("predictions.csv");
    write_predictions_csv(out, result.predictions);
  }
  {
    auto out = open("recommendations.csv");
    write_reclist_csv(out, result.recs);
  }
  {
    auto out = open("metrics.csv");
    write_metrics_csv(out, result.per_user);
  }
  {
    auto out = open("summary.csv");
    std::vector<std::string> header{"algorithm", "rmse", "mae"};
    for (const auto& m : result.per_user.metric_names) header.push_back(m);
    write_csv_row(out, header);
    for (const auto& s : result.summaries) {
      std::vector<std::string> row{s.label, s.rmse ? format_double(*s.rmse) : "",
                                   s.mae ? format_double(*s.mae) : ""};
      for (const auto& [_, v] : s.metrics) row.push_back(std::isnan(v) ? "" : format_double(v));
      write_csv_row(out, row);
    }
  }
  {
    nlohmann::json run;
    run["split"] = {{"method", config.split.method},
                    {"k", config.split.k},
                    {"select", config.split.select.to_string()},
                    {"seed", config.split.seed}};
    run["n"] = config.n;
    run["algorithms"] = nlohmann::json::array();
    for (const auto& a : config.algorithms)
      run["algorithms"].push_back({{"label", a.label}, {"algo", a.algo}, {"params", a.params}});
    run["empty_lists"] = result.empty_list_users;
    run["seconds"] = result.seconds;
    auto out = open("run.json");
    out << run.dump(2) << '\n';
  }
}

void print_summary(std::ostream& out, const ExperimentResult& result) {
  for (const auto& s : result.summaries) {
    out << s.label << ":";
    if (s.rmse) out << " RMSE " << format_double(*s.rmse) << " MAE " << format_double(*s.mae);
    for (const auto& [name, v] : s.metrics) out << ' ' << name << ' ' << format_double(v);
    if (s.unpredicted) out << " (" << s.unpredicted << " pairs unscored)";
    out << '\n';
  }
}

}  // namespace reckit
