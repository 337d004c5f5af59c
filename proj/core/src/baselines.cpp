#include "reckit/baselines.hpp"

#include "reckit/archive.hpp"
#include "reckit/error.hpp"
#include "reckit/params.hpp"
#include "reckit/random.hpp"

namespace reckit {

BiasOptions BiasOptions::from_json(const nlohmann::json& params) {
  ParamReader rd(params);
  BiasOptions o;
  o.user_damping = rd.get("user_damping", o.user_damping);
  o.item_damping = rd.get("item_damping", o.item_damping);
  o.item_terms = rd.get("items", o.item_terms);
  o.user_terms = rd.get("users", o.user_terms);
  rd.finish("bias");
  if (o.user_damping < 0 || o.item_damping < 0) throw ParameterError("damping must be >= 0");
  return o;
}

nlohmann::json BiasOptions::to_json() const {
  return {{"user_damping", user_damping},
          {"item_damping", item_damping},
          {"items", item_terms},
          {"users", user_terms}};
}

BiasModel BiasModel::fit(const Dataset& ds, const BiasOptions& opts) {
  const auto& R = ds.by_user;
  if (R.nnz() == 0) throw FitError("bias model needs at least one rating");
  BiasModel m;
  double total = 0.0;
  for (double v : R.values) total += v;
  m.mean = total / static_cast<double>(R.nnz());

  const auto& C = ds.by_item;
  m.item_offsets.assign(ds.n_items(), 0.0);
  for (std::int32_t i = 0; opts.item_terms && i < C.n_rows; ++i) {
    double acc = 0.0;
    for (double v : C.row_values(i)) acc += v - m.mean;
    m.item_offsets[i] = acc / (static_cast<double>(C.row_size(i)) + opts.item_damping);
  }

  m.user_offsets.assign(ds.n_users(), 0.0);
  for (std::int32_t u = 0; opts.user_terms && u < R.n_rows; ++u) {
    auto cols = R.row_cols(u);
    auto vals = R.row_values(u);
    double acc = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) acc += vals[k] - m.mean - m.item_offsets[cols[k]];
    m.user_offsets[u] = acc / (static_cast<double>(cols.size()) + opts.user_damping);
  }
  return m;
}

std::vector<double> BiasModel::residuals(const Dataset& ds) const {
  const auto& R = ds.by_user;
  std::vector<double> out(R.nnz());
  for (std::int32_t u = 0; u < R.n_rows; ++u)
    for (auto k = R.row_ptr[u]; k < R.row_ptr[u + 1]; ++k)
      out[k] = R.values[k] - predict(u, R.col_idx[k]);
  return out;
}

void BiasModel::save(ModelArchive& ar) const {
  ar.put("bias.mean", std::vector<double>{mean});
  ar.put("bias.items", item_offsets);
  ar.put("bias.users", user_offsets);
}

BiasModel BiasModel::load(const ModelArchive& ar) {
  BiasModel m;
  const auto& mu = ar.doubles("bias.mean");
  if (mu.size() != 1) throw ModelFormatError("bad bias mean");
  m.mean = mu[0];
  m.item_offsets = ar.doubles("bias.items");
  m.user_offsets = ar.doubles("bias.users");
  return m;
}

void Bias::fit(const RatingTable& ratings, const FitExtras&) {
  if (!ratings.has_ratings()) throw FitError("bias model requires a rating column");
  auto ds = build_dataset(ratings);
  model_ = BiasModel::fit(ds, opts_);
  users_ = std::move(ds.users);
  items_ = std::move(ds.items);
  fitted_ = true;
}

void Bias::save(ModelArchive& ar) const {
  ar.put_index("users", users_);
  ar.put_index("items", items_);
  model_.save(ar);
}

void Bias::load(const ModelArchive& ar) {
  users_ = ar.index("users");
  items_ = ar.index("items");
  model_ = BiasModel::load(ar);
  if (model_.user_offsets.size() != users_.size() || model_.item_offsets.size() != items_.size())
    throw ModelFormatError("bias offsets do not match indexes");
  fitted_ = true;
}

std::vector<double> Bias::predict_for_user(std::string_view user, std::span<const std::string> items,
                                           const UserHistory*) const {
  if (!fitted_) throw FitError("bias model used before fit");
  const auto u = users_.position(user);
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(model_.predict(u, items_.position(it)));
  return out;
}

void Popular::fit(const RatingTable& ratings, const FitExtras& extras) {
  selector_.fit(ratings, extras);
  const auto ds = build_dataset(ratings);
  counts_.assign(ds.n_items(), 0.0);
  for (std::int32_t i = 0; i < ds.by_item.n_rows; ++i)
    counts_[i] = static_cast<double>(ds.by_item.row_size(i));
}

void Popular::save(ModelArchive& ar) const {
  selector_.save(ar.child("selector"));
  ar.put("counts", counts_);
}

void Popular::load(const ModelArchive& ar) {
  selector_.load(ar.child("selector"));
  counts_ = ar.doubles("counts");
  if (counts_.size() != selector_.items().size()) throw ModelFormatError("popularity counts mismatch");
}

std::vector<ScoredItem> Popular::recommend(std::string_view user, std::optional<std::size_t> n,
                                           const std::vector<std::string>* candidates,
                                           const UserHistory* history) const {
  if (!fitted()) throw FitError("popular used before fit");
  const auto& items = selector_.items();
  std::vector<std::string> ids;
  std::vector<double> scores;
  if (candidates) {
    ids = *candidates;
    for (const auto& it : ids) {
      const auto i = items.position(it);
      scores.push_back(i < 0 ? kMissing : counts_[i]);
    }
  } else {
    for (auto i : selector_.candidate_positions(user, history)) {
      ids.push_back(items.id(i));
      scores.push_back(counts_[i]);
    }
  }
  return rank_by_score(ids, scores, n, items);
}

void Random::fit(const RatingTable& ratings, const FitExtras& extras) { selector_.fit(ratings, extras); }

void Random::save(ModelArchive& ar) const { selector_.save(ar.child("selector")); }

void Random::load(const ModelArchive& ar) {
  seed_ = ar.params.value("seed", seed_);
  selector_.load(ar.child("selector"));
}

std::vector<ScoredItem> Random::recommend(std::string_view user, std::optional<std::size_t> n,
                                          const std::vector<std::string>* candidates,
                                          const UserHistory* history) const {
  if (!fitted()) throw FitError("random used before fit");
  std::vector<std::string> chosen;
  if (!candidates) {
    chosen = selector_.candidates(user, history);
    candidates = &chosen;
  }
  const std::size_t len = n ? std::min(*n, candidates->size()) : candidates->size();
  Rng rng(mix_seed(seed_, stable_hash(user)));
  std::vector<ScoredItem> out;
  out.reserve(len);
  for (auto pos : rng.sample(candidates->size(), len))
    out.push_back({(*candidates)[pos], static_cast<double>(len - out.size())});
  return out;
}

}  // namespace reckit
