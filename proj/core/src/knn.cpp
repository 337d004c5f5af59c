#include "reckit/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reckit/archive.hpp"
#include "reckit/error.hpp"
#include "reckit/parallel.hpp"
#include "reckit/params.hpp"

namespace reckit {

namespace {

Aggregate parse_aggregate(const std::string& s) {
  if (s == "weighted-average") return Aggregate::kWeightedAverage;
  if (s == "sum") return Aggregate::kSum;
  throw ParameterError("unknown aggregate '" + s + "'");
}

Feedback parse_feedback(const std::string& s) {
  if (s == "auto") return Feedback::kAuto;
  if (s == "explicit") return Feedback::kExplicit;
  if (s == "implicit") return Feedback::kImplicit;
  throw ParameterError("unknown feedback mode '" + s + "'");
}

const char* feedback_name(Feedback f) {
  switch (f) {
    case Feedback::kExplicit: return "explicit";
    case Feedback::kImplicit: return "implicit";
    default: return "auto";
  }
}

bool resolve_explicit(Feedback f, const RatingTable& ratings) {
  if (f == Feedback::kImplicit) return false;
  if (f == Feedback::kExplicit && !ratings.has_ratings())
    throw FitError("explicit-feedback k-NN requires a rating column");
  return ratings.has_ratings();
}

Aggregate resolve_aggregate(const KnnOptions& o, bool explicit_ratings) {
  if (o.aggregate) return *o.aggregate;
  return explicit_ratings ? Aggregate::kWeightedAverage : Aggregate::kSum;
}

// Replaces ratings with user-centered values (or 1.0 in implicit mode) and
// returns the means.
std::vector<double> center_rows(CsrMatrix& m, bool explicit_ratings) {
  std::vector<double> means(static_cast<std::size_t>(m.n_rows), 0.0);
  for (std::int32_t r = 0; r < m.n_rows; ++r) {
    const auto begin = m.row_ptr[r], end = m.row_ptr[r + 1];
    if (!explicit_ratings) {
      for (auto k = begin; k < end; ++k) m.values[k] = 1.0;
      continue;
    }
    double acc = 0.0;
    for (auto k = begin; k < end; ++k) acc += m.values[k];
    const double mean = end > begin ? acc / static_cast<double>(end - begin) : 0.0;
    for (auto k = begin; k < end; ++k) m.values[k] -= mean;
    means[r] = mean;
  }
  return means;
}

double row_norm(std::span<const double> vals) {
  double acc = 0.0;
  for (double v : vals) acc += v * v;
  return std::sqrt(acc);
}

double aggregate(Aggregate how, double mean, double weighted, double abs_weights) {
  if (how == Aggregate::kSum) return mean + weighted;
  return mean + weighted / abs_weights;
}

}  // namespace

KnnOptions KnnOptions::from_json(const nlohmann::json& params, bool item_based) {
  ParamReader rd(params);
  KnnOptions o;
  o.nnbrs = rd.get("nnbrs", o.nnbrs);
  o.min_nbrs = rd.get("min_nbrs", o.min_nbrs);
  o.min_sim = rd.get("min_sim", o.min_sim);
  if (item_based) o.save_nbrs = rd.get("save_nbrs", o.save_nbrs);
  o.feedback = parse_feedback(rd.get<std::string>("feedback", "auto"));
  const auto agg = rd.get<std::string>("aggregate", "");
  if (!agg.empty()) o.aggregate = parse_aggregate(agg);
  rd.finish(item_based ? "item-item" : "user-user");
  if (o.nnbrs < 1) throw ParameterError("nnbrs must be >= 1");
  if (o.min_nbrs < 1) throw ParameterError("min_nbrs must be >= 1");
  return o;
}

nlohmann::json KnnOptions::to_json(bool item_based) const {
  nlohmann::json j = {{"nnbrs", nnbrs},
                      {"min_nbrs", min_nbrs},
                      {"min_sim", min_sim},
                      {"feedback", feedback_name(feedback)}};
  if (item_based) j["save_nbrs"] = save_nbrs;
  if (aggregate) j["aggregate"] = *aggregate == Aggregate::kSum ? "sum" : "weighted-average";
  return j;
}

CenteredVector center_history(const UserHistory& history, const Index& index, bool explicit_ratings) {
  if (explicit_ratings && history.ratings.size() != history.items.size())
    throw SchemaError("history items and ratings differ in length");
  // Last entry per item wins, as in build_dataset.
  std::vector<std::pair<std::int32_t, double>> known;
  std::vector<double> unknown;
  std::unordered_map<std::string_view, std::size_t> last;
  for (std::size_t k = 0; k < history.items.size(); ++k) last[history.items[k]] = k;
  for (std::size_t k = 0; k < history.items.size(); ++k) {
    if (last[history.items[k]] != k) continue;
    const double v = explicit_ratings ? history.ratings[k] : 1.0;
    if (const auto p = index.position(history.items[k]); p >= 0)
      known.emplace_back(p, v);
    else
      unknown.push_back(v);
  }
  std::sort(known.begin(), known.end());

  CenteredVector cv;
  const std::size_t n = known.size() + unknown.size();
  if (explicit_ratings && n > 0) {
    double acc = 0.0;
    for (const auto& [p, v] : known) acc += v;
    for (double v : unknown) acc += v;
    cv.mean = acc / static_cast<double>(n);
  }
  double sq = 0.0;
  for (const auto& [p, v] : known) {
    const double c = v - cv.mean;
    cv.items.push_back(p);
    cv.values.push_back(c);
    sq += c * c;
  }
  for (double v : unknown) sq += (v - cv.mean) * (v - cv.mean);
  cv.norm = std::sqrt(sq);
  return cv;
}

void UserUser::fit(const RatingTable& ratings, const FitExtras&) {
  explicit_ = resolve_explicit(opts_.feedback, ratings);
  auto ds = build_dataset(ratings);
  means_ = center_rows(ds.by_user, explicit_);
  norms_.resize(ds.n_users());
  for (std::int32_t u = 0; u < ds.by_user.n_rows; ++u) norms_[u] = row_norm(ds.by_user.row_values(u));
  by_item_ = ds.by_user.transpose();
  by_user_ = std::move(ds.by_user);
  users_ = std::move(ds.users);
  items_ = std::move(ds.items);
  fitted_ = true;
}

void UserUser::save(ModelArchive& ar) const {
  ar.put("explicit", std::vector<std::int64_t>{explicit_ ? 1 : 0});
  ar.put_index("users", users_);
  ar.put_index("items", items_);
  ar.put_csr("centered", by_user_);
  ar.put("means", means_);
  ar.put("norms", norms_);
}

void UserUser::load(const ModelArchive& ar) {
  explicit_ = ar.ints("explicit").at(0) != 0;
  users_ = ar.index("users");
  items_ = ar.index("items");
  by_user_ = ar.csr("centered");
  by_item_ = by_user_.transpose();
  means_ = ar.doubles("means");
  norms_ = ar.doubles("norms");
  fitted_ = true;
}

std::vector<double> UserUser::predict_for_user(std::string_view user,
                                               std::span<const std::string> items,
                                               const UserHistory* history) const {
  if (!fitted_) throw FitError("user-user used before fit");
  std::vector<double> out(items.size(), kMissing);
  const auto self = users_.position(user);

  CenteredVector mine;
  if (history) {
    mine = center_history(*history, items_, explicit_);
  } else if (self >= 0) {
    auto cols = by_user_.row_cols(self);
    auto vals = by_user_.row_values(self);
    mine.items.assign(cols.begin(), cols.end());
    mine.values.assign(vals.begin(), vals.end());
    mine.mean = means_[self];
    mine.norm = norms_[self];
  } else {
    return out;
  }

  // Dot products with every user sharing an item, in item order.
  std::vector<double> sim(users_.size(), 0.0);
  for (std::size_t k = 0; k < mine.items.size(); ++k) {
    const auto j = mine.items[k];
    auto vs = by_item_.row_cols(j);
    auto cs = by_item_.row_values(j);
    for (std::size_t t = 0; t < vs.size(); ++t) sim[vs[t]] += mine.values[k] * cs[t];
  }
  for (std::size_t v = 0; v < sim.size(); ++v) {
    const double d = mine.norm * norms_[v];
    sim[v] = d > 0.0 ? std::min(sim[v] / d, 1.0) : 0.0;
  }
  if (self >= 0) sim[self] = 0.0;

  const auto how = resolve_aggregate(opts_, explicit_);
  struct Nbr {
    double sim;
    std::int32_t user;
    double value;
  };
  std::vector<Nbr> nbrs;
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto i = items_.position(items[k]);
    if (i < 0) continue;
    nbrs.clear();
    auto vs = by_item_.row_cols(i);
    auto cs = by_item_.row_values(i);
    for (std::size_t t = 0; t < vs.size(); ++t)
      if (vs[t] != self && sim[vs[t]] > opts_.min_sim) nbrs.push_back({sim[vs[t]], vs[t], cs[t]});
    if (nbrs.size() < opts_.min_nbrs) continue;
    const std::size_t keep = std::min(opts_.nnbrs, nbrs.size());
    std::partial_sort(nbrs.begin(), nbrs.begin() + static_cast<std::ptrdiff_t>(keep), nbrs.end(),
                      [](const Nbr& a, const Nbr& b) {
                        return a.sim != b.sim ? a.sim > b.sim : a.user < b.user;
                      });
    double weighted = 0.0, weights = 0.0;
    for (std::size_t t = 0; t < keep; ++t) {
      weighted += nbrs[t].sim * nbrs[t].value;
      weights += std::abs(nbrs[t].sim);
    }
    out[k] = aggregate(how, mine.mean, weighted, weights);
  }
  return out;
}

double SimilarityTable::lookup(std::int32_t i, std::int32_t j) const {
  auto ns = row_neighbors(i);
  auto ss = row_sims(i);
  for (std::size_t k = 0; k < ns.size(); ++k)
    if (ns[k] == j) return ss[k];
  return 0.0;
}

SimilarityTable item_similarities(const CsrMatrix& by_item, double min_sim, std::size_t save_nbrs,
                                  std::size_t workers) {
  const auto n_items = by_item.n_rows;
  const CsrMatrix by_user = by_item.transpose();
  std::vector<double> norms(static_cast<std::size_t>(n_items));
  for (std::int32_t i = 0; i < n_items; ++i) norms[i] = row_norm(by_item.row_values(i));

  constexpr std::int32_t kBlock = 64;
  const auto n_blocks = static_cast<std::size_t>((n_items + kBlock - 1) / kBlock);
  std::vector<std::vector<std::pair<std::int32_t, double>>> rows(static_cast<std::size_t>(n_items));

  parallel_for(n_blocks, workers, [&](std::size_t b) {
    std::vector<double> acc(static_cast<std::size_t>(n_items), 0.0);
    std::vector<char> seen(static_cast<std::size_t>(n_items), 0);
    std::vector<std::int32_t> touched;
    const auto lo = static_cast<std::int32_t>(b) * kBlock;
    const auto hi = std::min(n_items, lo + kBlock);
    for (std::int32_t i = lo; i < hi; ++i) {
      touched.clear();
      auto us = by_item.row_cols(i);
      auto cs = by_item.row_values(i);
      for (std::size_t k = 0; k < us.size(); ++k) {
        auto js = by_user.row_cols(us[k]);
        auto vs = by_user.row_values(us[k]);
        for (std::size_t t = 0; t < js.size(); ++t) {
          if (!seen[js[t]]) {
            seen[js[t]] = 1;
            touched.push_back(js[t]);
          }
          acc[js[t]] += cs[k] * vs[t];
        }
      }
      auto& row = rows[i];
      for (auto j : touched) {
        const double d = norms[i] * norms[j];
        if (j != i && d > 0.0) {
          const double s = std::min(acc[j] / d, 1.0);
          if (s > min_sim) row.emplace_back(j, s);
        }
        acc[j] = 0.0;
        seen[j] = 0;
      }
      std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
      });
      if (save_nbrs > 0 && row.size() > save_nbrs) row.resize(save_nbrs);
    }
  });

  SimilarityTable table;
  table.row_ptr.reserve(static_cast<std::size_t>(n_items) + 1);
  for (const auto& row : rows) {
    for (const auto& [j, s] : row) {
      table.neighbors.push_back(j);
      table.sims.push_back(s);
    }
    table.row_ptr.push_back(static_cast<std::int64_t>(table.neighbors.size()));
  }
  return table;
}

void ItemItem::fit(const RatingTable& ratings, const FitExtras&) {
  explicit_ = resolve_explicit(opts_.feedback, ratings);
  auto ds = build_dataset(ratings);
  means_ = center_rows(ds.by_user, explicit_);
  sims_ = item_similarities(ds.by_user.transpose(), opts_.min_sim, opts_.save_nbrs);
  by_user_ = std::move(ds.by_user);
  users_ = std::move(ds.users);
  items_ = std::move(ds.items);
  fitted_ = true;
}

void ItemItem::save(ModelArchive& ar) const {
  ar.put("explicit", std::vector<std::int64_t>{explicit_ ? 1 : 0});
  ar.put_index("users", users_);
  ar.put_index("items", items_);
  ar.put_csr("centered", by_user_);
  ar.put("means", means_);
  ar.put("sims.row_ptr", sims_.row_ptr);
  ar.put("sims.neighbors", std::vector<std::int64_t>(sims_.neighbors.begin(), sims_.neighbors.end()));
  ar.put("sims.values", sims_.sims);
}

void ItemItem::load(const ModelArchive& ar) {
  explicit_ = ar.ints("explicit").at(0) != 0;
  users_ = ar.index("users");
  items_ = ar.index("items");
  by_user_ = ar.csr("centered");
  means_ = ar.doubles("means");
  sims_.row_ptr = ar.ints("sims.row_ptr");
  const auto& nb = ar.ints("sims.neighbors");
  sims_.neighbors.assign(nb.begin(), nb.end());
  sims_.sims = ar.doubles("sims.values");
  if (sims_.row_ptr.size() != items_.size() + 1 || sims_.neighbors.size() != sims_.sims.size())
    throw ModelFormatError("similarity table does not match item index");
  fitted_ = true;
}

std::vector<double> ItemItem::predict_for_user(std::string_view user,
                                               std::span<const std::string> items,
                                               const UserHistory* history) const {
  if (!fitted_) throw FitError("item-item used before fit");
  std::vector<double> out(items.size(), kMissing);

  std::vector<double> rated(items_.size(), kMissing);
  double mean = 0.0;
  if (history) {
    const auto cv = center_history(*history, items_, explicit_);
    for (std::size_t k = 0; k < cv.items.size(); ++k) rated[cv.items[k]] = cv.values[k];
    mean = cv.mean;
  } else if (const auto u = users_.position(user); u >= 0) {
    auto cols = by_user_.row_cols(u);
    auto vals = by_user_.row_values(u);
    for (std::size_t k = 0; k < cols.size(); ++k) rated[cols[k]] = vals[k];
    mean = means_[u];
  } else {
    return out;
  }

  const auto how = resolve_aggregate(opts_, explicit_);
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto i = items_.position(items[k]);
    if (i < 0) continue;
    auto ns = sims_.row_neighbors(i);
    auto ss = sims_.row_sims(i);
    std::size_t used = 0;
    double weighted = 0.0, weights = 0.0;
    for (std::size_t t = 0; t < ns.size() && used < opts_.nnbrs; ++t) {
      const double r = rated[ns[t]];
      if (is_missing(r)) continue;
      weighted += ss[t] * r;
      weights += std::abs(ss[t]);
      ++used;
    }
    if (used < opts_.min_nbrs) continue;
    out[k] = aggregate(how, mean, weighted, weights);
  }
  return out;
}

}  // namespace reckit
