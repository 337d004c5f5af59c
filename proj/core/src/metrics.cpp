#include "reckit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "reckit/algorithm.hpp"
#include "reckit/csv.hpp"
#include "reckit/error.hpp"

namespace reckit {

void RecList::append(const RecList& other) {
  if (groups.empty() && users.empty()) {
    *this = other;
    return;
  }
  if (groups.size() != other.groups.size()) throw SchemaError("grouping columns differ");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].name != other.groups[g].name) throw SchemaError("grouping columns differ");
    groups[g].values.insert(groups[g].values.end(), other.groups[g].values.begin(),
                            other.groups[g].values.end());
  }
  users.insert(users.end(), other.users.begin(), other.users.end());
  items.insert(items.end(), other.items.begin(), other.items.end());
  scores.insert(scores.end(), other.scores.begin(), other.scores.end());
  ranks.insert(ranks.end(), other.ranks.begin(), other.ranks.end());
}

namespace {

template <typename Fn>
double mean_error(std::span<const double> preds, std::span<const double> truth, MissingPolicy missing,
                  Fn&& fn) {
  if (preds.size() != truth.size()) throw SchemaError("predictions and truth differ in length");
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    if (is_missing(preds[k])) {
      if (missing == MissingPolicy::kError) throw UndefinedMetricError("missing prediction in input");
      continue;
    }
    acc += fn(preds[k] - truth[k]);
    ++n;
  }
  if (n == 0) throw UndefinedMetricError("no scored pairs");
  return acc / static_cast<double>(n);
}

}  // namespace

double rmse(std::span<const double> predictions, std::span<const double> truth, MissingPolicy missing) {
  return std::sqrt(mean_error(predictions, truth, missing, [](double e) { return e * e; }));
}

double mae(std::span<const double> predictions, std::span<const double> truth, MissingPolicy missing) {
  return mean_error(predictions, truth, missing, [](double e) { return std::abs(e); });
}

std::vector<UserAccuracy> per_user_accuracy(const PredictionTable& preds, MissingPolicy missing) {
  if (!preds.ratings) throw SchemaError("prediction table carries no ratings");
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t r = 0; r < preds.size(); ++r) {
    auto [it, fresh] = rows.try_emplace(preds.users[r]);
    if (fresh) order.push_back(preds.users[r]);
    it->second.push_back(r);
  }
  std::vector<UserAccuracy> out;
  for (const auto& user : order) {
    std::vector<double> p, t;
    for (auto r : rows[user]) {
      p.push_back(preds.predictions[r]);
      t.push_back((*preds.ratings)[r]);
    }
    if (missing == MissingPolicy::kIgnore &&
        std::all_of(p.begin(), p.end(), [](double x) { return is_missing(x); }))
      continue;
    out.push_back({user, rmse(p, t, missing), mae(p, t, missing)});
  }
  return out;
}

double precision(std::span<const std::string> recs, const Truth& truth) {
  if (recs.empty()) return kMissing;
  std::size_t good = 0;
  for (const auto& it : recs) good += truth.relevant(it);
  return static_cast<double>(good) / static_cast<double>(recs.size());
}

double recall(std::span<const std::string> recs, const Truth& truth) {
  if (truth.size() == 0) return 0.0;
  std::size_t good = 0;
  for (const auto& it : recs) good += truth.relevant(it);
  return static_cast<double>(good) / static_cast<double>(truth.size());
}

double recall_capped(std::span<const std::string> recs, const Truth& truth) {
  if (truth.size() == 0) return 0.0;
  std::size_t good = 0;
  for (const auto& it : recs) good += truth.relevant(it);
  const auto denom = std::min(truth.size(), recs.size());
  return denom == 0 ? 0.0 : static_cast<double>(good) / static_cast<double>(denom);
}

double hit(std::span<const std::string> recs, const Truth& truth) {
  for (const auto& it : recs)
    if (truth.relevant(it)) return 1.0;
  return 0.0;
}

double recip_rank(std::span<const std::string> recs, const Truth& truth) {
  for (std::size_t k = 0; k < recs.size(); ++k)
    if (truth.relevant(recs[k])) return 1.0 / static_cast<double>(k + 1);
  return 0.0;
}

double avg_precision(std::span<const std::string> recs, const Truth& truth) {
  if (truth.size() == 0) return 0.0;
  double acc = 0.0;
  std::size_t good = 0;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    if (truth.relevant(recs[k])) {
      ++good;
      acc += static_cast<double>(good) / static_cast<double>(k + 1);
    }
  }
  return acc / static_cast<double>(truth.size());
}

namespace {

double discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(std::max<std::size_t>(rank, 2))); }

}  // namespace

double ndcg(std::span<const std::string> recs, const Truth& truth, Gain gain) {
  auto gain_of = [&](double g) { return gain == Gain::kBinary ? 1.0 : g; };
  double dcg = 0.0;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    auto it = truth.gains.find(recs[k]);
    if (it != truth.gains.end()) dcg += gain_of(it->second) * discount(k + 1);
  }
  std::vector<double> ideal;
  ideal.reserve(truth.size());
  for (const auto& [item, g] : truth.gains) ideal.push_back(gain_of(g));
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t k = 0; k < ideal.size(); ++k) idcg += ideal[k] * discount(k + 1);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

namespace {

double ndcg_binary(std::span<const std::string> r, const Truth& t) { return ndcg(r, t, Gain::kBinary); }
double ndcg_rating(std::span<const std::string> r, const Truth& t) { return ndcg(r, t, Gain::kRating); }

const std::map<std::string, ListMetricFn>& metric_table() {
  static const std::map<std::string, ListMetricFn> table{
      {"precision", &precision},   {"recall", &recall}, {"recall.capped", &recall_capped},
      {"hit", &hit},               {"recip_rank", &recip_rank}, {"ap", &avg_precision},
      {"ndcg", &ndcg_binary},      {"ndcg.rating", &ndcg_rating}};
  return table;
}

}  // namespace

bool is_list_metric(const std::string& name) { return metric_table().contains(name); }

ListMetricFn list_metric(const std::string& name) {
  auto it = metric_table().find(name);
  if (it == metric_table().end()) throw ParameterError("unknown list metric '" + name + "'");
  return it->second;
}

std::unordered_map<std::string, Truth> build_truth(const RatingTable& test,
                                                   std::optional<double> min_rating) {
  std::unordered_map<std::string, Truth> out;
  for (std::size_t r = 0; r < test.size(); ++r) {
    auto& t = out[test.users()[r]];
    const double g = test.has_ratings() ? test.ratings()[r] : 1.0;
    if (min_rating && test.has_ratings() && g < *min_rating) continue;
    t.gains[test.items()[r]] = g;
  }
  return out;
}

MetricTable reclist_analysis(const RecList& recs, const RatingTable& truth,
                             const std::vector<std::string>& metrics, const AnalysisOptions& opts) {
  std::vector<ListMetricFn> fns;
  for (const auto& m : metrics) fns.push_back(list_metric(m));

  MetricTable out;
  for (const auto& g : recs.groups) out.group_names.push_back(g.name);
  out.metric_names = metrics;

  using Key = std::pair<std::vector<std::string>, std::string>;
  std::map<Key, std::vector<std::size_t>> cells;
  std::set<std::vector<std::string>> group_keys;
  for (std::size_t r = 0; r < recs.size(); ++r) {
    std::vector<std::string> g;
    for (const auto& col : recs.groups) g.push_back(col.values[r]);
    group_keys.insert(g);
    cells[{std::move(g), recs.users[r]}].push_back(r);
  }

  const auto truths = build_truth(truth, opts.min_rating);
  std::vector<std::string> items;
  for (auto& [key, rows] : cells) {
    std::sort(rows.begin(), rows.end(),
              [&](std::size_t a, std::size_t b) { return recs.ranks[a] < recs.ranks[b]; });
    for (std::size_t k = 1; k < rows.size(); ++k)
      if (recs.ranks[rows[k]] == recs.ranks[rows[k - 1]])
        throw SchemaError("duplicate rank " + std::to_string(recs.ranks[rows[k]]) + " for user '" +
                          key.second + "'");
  }

  std::map<Key, MetricTable::Row> rows_out;
  for (const auto& [key, rows] : cells) {
    auto t = truths.find(key.second);
    if (t == truths.end()) continue;
    items.clear();
    for (auto r : rows) items.push_back(recs.items[r]);
    MetricTable::Row row{key.first, key.second, {}};
    for (auto fn : fns) row.values.push_back(fn(items, t->second));
    rows_out.emplace(key, std::move(row));
  }
  if (opts.include_missing) {
    if (group_keys.empty()) group_keys.insert(std::vector<std::string>{});
    for (const auto& g : group_keys) {
      for (const auto& [user, t] : truths) {
        Key key{g, user};
        if (rows_out.contains(key)) continue;
        MetricTable::Row row{g, user, {}};
        for (auto fn : fns) row.values.push_back(fn({}, t));
        rows_out.emplace(std::move(key), std::move(row));
      }
    }
  }
  for (auto& [key, row] : rows_out) out.rows.push_back(std::move(row));
  return out;
}

MetricTable MetricTable::summary() const {
  MetricTable s;
  s.group_names = group_names;
  s.metric_names = metric_names;
  std::map<std::vector<std::string>, std::pair<std::vector<double>, std::vector<std::size_t>>> acc;
  for (const auto& row : rows) {
    auto& [sum, count] = acc[row.group];
    sum.resize(metric_names.size(), 0.0);
    count.resize(metric_names.size(), 0);
    for (std::size_t m = 0; m < row.values.size(); ++m) {
      if (std::isnan(row.values[m])) continue;
      sum[m] += row.values[m];
      ++count[m];
    }
  }
  for (const auto& [g, sc] : acc) {
    MetricTable::Row row{g, "", {}};
    for (std::size_t m = 0; m < metric_names.size(); ++m)
      row.values.push_back(sc.second[m] ? sc.first[m] / static_cast<double>(sc.second[m]) : kMissing);
    s.rows.push_back(std::move(row));
  }
  return s;
}

namespace {

std::string cell(double v) { return is_missing(v) ? std::string() : format_double(v); }

double parse_cell(const std::string& s, std::size_t line) {
  return s.empty() ? kMissing : parse_double(s, line);
}

}  // namespace

void write_predictions_csv(std::ostream& out, const PredictionTable& preds) {
  std::vector<std::string> header;
  for (const auto& g : preds.groups) header.push_back(g.name);
  header.insert(header.end(), {"user", "item", "prediction"});
  if (preds.ratings) header.emplace_back("rating");
  write_csv_row(out, header);
  std::vector<std::string> row;
  for (std::size_t r = 0; r < preds.size(); ++r) {
    row.clear();
    for (const auto& g : preds.groups) row.push_back(g.values[r]);
    row.push_back(preds.users[r]);
    row.push_back(preds.items[r]);
    row.push_back(cell(preds.predictions[r]));
    if (preds.ratings) row.push_back(format_double((*preds.ratings)[r]));
    write_csv_row(out, row);
  }
}

void write_reclist_csv(std::ostream& out, const RecList& recs) {
  std::vector<std::string> header;
  for (const auto& g : recs.groups) header.push_back(g.name);
  header.insert(header.end(), {"user", "item", "score", "rank"});
  write_csv_row(out, header);
  std::vector<std::string> row;
  for (std::size_t r = 0; r < recs.size(); ++r) {
    row.clear();
    for (const auto& g : recs.groups) row.push_back(g.values[r]);
    row.push_back(recs.users[r]);
    row.push_back(recs.items[r]);
    row.push_back(cell(recs.scores[r]));
    row.push_back(std::to_string(recs.ranks[r]));
    write_csv_row(out, row);
  }
}

void write_metrics_csv(std::ostream& out, const MetricTable& table) {
  std::vector<std::string> header = table.group_names;
  const bool per_user = !table.rows.empty() && !table.rows.front().user.empty();
  if (per_user) header.emplace_back("user");
  header.insert(header.end(), table.metric_names.begin(), table.metric_names.end());
  write_csv_row(out, header);
  for (const auto& r : table.rows) {
    std::vector<std::string> row = r.group;
    if (per_user) row.push_back(r.user);
    for (double v : r.values) row.push_back(cell(v));
    write_csv_row(out, row);
  }
}

PredictionTable read_predictions_csv(const std::filesystem::path& path) {
  const auto doc = read_csv_file(path);
  const auto uc = doc.column("user"), ic = doc.column("item"), pc = doc.column("prediction");
  if (uc < 0 || ic < 0 || pc < 0)
    throw SchemaError("predictions need user, item and prediction columns");
  const auto rc = doc.column("rating");
  PredictionTable p;
  for (std::size_t c = 0; c < doc.header.size(); ++c) {
    const auto sc = static_cast<std::ptrdiff_t>(c);
    if (sc != uc && sc != ic && sc != pc && sc != rc) p.groups.push_back({doc.header[c], {}});
  }
  if (rc >= 0) p.ratings.emplace();
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    std::size_t g = 0;
    for (std::size_t c = 0; c < doc.header.size(); ++c) {
      const auto sc = static_cast<std::ptrdiff_t>(c);
      if (sc != uc && sc != ic && sc != pc && sc != rc) p.groups[g++].values.push_back(row[c]);
    }
    p.users.push_back(row[uc]);
    p.items.push_back(row[ic]);
    p.predictions.push_back(parse_cell(row[pc], doc.row_lines[r]));
    if (rc >= 0) p.ratings->push_back(parse_double(row[rc], doc.row_lines[r]));
  }
  return p;
}

RecList read_reclist_csv(const std::filesystem::path& path) {
  const auto doc = read_csv_file(path);
  const auto uc = doc.column("user"), ic = doc.column("item"), kc = doc.column("rank");
  if (uc < 0 || ic < 0 || kc < 0) throw SchemaError("recommendations need user, item and rank columns");
  const auto sc = doc.column("score");
  RecList recs;
  auto is_group = [&](std::ptrdiff_t c) { return c != uc && c != ic && c != kc && c != sc; };
  for (std::size_t c = 0; c < doc.header.size(); ++c)
    if (is_group(static_cast<std::ptrdiff_t>(c))) recs.groups.push_back({doc.header[c], {}});
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    std::size_t g = 0;
    for (std::size_t c = 0; c < doc.header.size(); ++c)
      if (is_group(static_cast<std::ptrdiff_t>(c))) recs.groups[g++].values.push_back(row[c]);
    recs.users.push_back(row[uc]);
    recs.items.push_back(row[ic]);
    recs.scores.push_back(sc >= 0 ? parse_cell(row[sc], doc.row_lines[r]) : kMissing);
    recs.ranks.push_back(parse_int(row[kc], doc.row_lines[r]));
  }
  return recs;
}

}  // namespace reckit
