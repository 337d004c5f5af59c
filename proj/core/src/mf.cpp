#include "reckit/mf.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "reckit/archive.hpp"
#include "reckit/csv.hpp"
#include "reckit/error.hpp"
#include "reckit/parallel.hpp"
#include "reckit/params.hpp"
#include "reckit/random.hpp"

namespace reckit {

namespace {

FactorMatrix random_factors(std::size_t rows, std::size_t cols, Rng& rng) {
  FactorMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-0.01, 0.01);
  return m;
}

void put_factors(ModelArchive& ar, const std::string& key, const FactorMatrix& m) {
  ar.put(key + ".shape", std::vector<std::int64_t>{m.rows(), m.cols()});
  ar.put(key, std::vector<double>(m.data(), m.data() + m.size()));
}

FactorMatrix get_factors(const ModelArchive& ar, const std::string& key) {
  const auto& shape = ar.ints(key + ".shape");
  const auto& data = ar.doubles(key);
  if (shape.size() != 2 || static_cast<std::size_t>(shape[0] * shape[1]) != data.size())
    throw ModelFormatError("bad factor matrix '" + key + "'");
  FactorMatrix m(shape[0], shape[1]);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

bool all_finite(const FactorMatrix& m) { return m.allFinite(); }

// Residual matrix r - bias with the same sparsity as by_user, and its
// transpose for the item half-sweeps.
std::pair<CsrMatrix, CsrMatrix> residual_views(const Dataset& ds, const BiasModel& bias) {
  CsrMatrix by_user = ds.by_user;
  by_user.values = bias.residuals(ds);
  CsrMatrix by_item = by_user.transpose();
  return {std::move(by_user), std::move(by_item)};
}

double biased_mf_loss(const CsrMatrix& resid, const FactorMatrix& users, const FactorMatrix& items,
                      const CsrMatrix& resid_t, double reg) {
  double err = 0.0;
  for (std::int32_t u = 0; u < resid.n_rows; ++u) {
    auto cols = resid.row_cols(u);
    auto vals = resid.row_values(u);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double e = vals[k] - users.row(u).dot(items.row(cols[k]));
      err += e * e;
    }
  }
  double pen = 0.0;
  for (std::int32_t u = 0; u < resid.n_rows; ++u)
    pen += static_cast<double>(resid.row_size(u)) * users.row(u).squaredNorm();
  for (std::int32_t i = 0; i < resid_t.n_rows; ++i)
    pen += static_cast<double>(resid_t.row_size(i)) * items.row(i).squaredNorm();
  return err + reg * pen;
}

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

void require_explicit(const RatingTable& ratings, const char* algo) {
  if (!ratings.has_ratings()) throw FitError(std::string(algo) + " requires a rating column");
  if (ratings.empty()) throw FitError(std::string(algo) + " needs at least one rating");
}

}  // namespace

BiasedMFOptions BiasedMFOptions::from_json(const nlohmann::json& params) {
  ParamReader rd(params);
  BiasedMFOptions o;
  o.features = rd.get("features", o.features);
  o.reg = rd.get("reg", o.reg);
  o.iterations = rd.get("iterations", o.iterations);
  o.damping = rd.get("damping", o.damping);
  o.seed = rd.get("seed", o.seed);
  rd.finish("biased-mf");
  return o;
}

nlohmann::json BiasedMFOptions::to_json() const {
  return {{"features", features}, {"reg", reg}, {"iterations", iterations}, {"damping", damping},
          {"seed", seed}};
}

BiasedMF::BiasedMF(BiasedMFOptions opts) : opts_(opts) {
  if (opts_.features < 1) throw ParameterError("biased-mf needs features >= 1");
  if (opts_.reg < 0 || opts_.damping < 0) throw ParameterError("reg and damping must be >= 0");
}

void coordinate_descent_row(std::span<const std::int32_t> cols, std::span<const double> residuals,
                            const FactorMatrix& other, double reg,
                            Eigen::Ref<Eigen::RowVectorXd> row) {
  const auto n = cols.size();
  std::vector<double> err(n);
  for (std::size_t k = 0; k < n; ++k) err[k] = residuals[k] - row.dot(other.row(cols[k]));
  const double ridge = reg * static_cast<double>(n);
  for (Eigen::Index g = 0; g < row.size(); ++g) {
    const double old = row(g);
    double num = 0.0, den = ridge;
    for (std::size_t k = 0; k < n; ++k) {
      const double q = other(cols[k], g);
      num += q * (err[k] + old * q);
      den += q * q;
    }
    if (den <= 0.0) continue;
    const double fresh = num / den;
    const double delta = fresh - old;
    for (std::size_t k = 0; k < n; ++k) err[k] -= delta * other(cols[k], g);
    row(g) = fresh;
  }
}

void BiasedMF::fit(const RatingTable& ratings, const FitExtras&) {
  require_explicit(ratings, "biased-mf");
  auto ds = build_dataset(ratings);
  if (opts_.features > std::min(ds.n_users(), ds.n_items()))
    std::clog << "warning: biased-mf features (" << opts_.features
              << ") exceed min(users, items)\n";
  bias_ = BiasModel::fit(ds, {opts_.damping, opts_.damping});
  auto [resid, resid_t] = residual_views(ds, bias_);

  Rng rng(opts_.seed);
  user_features_ = random_factors(ds.n_users(), opts_.features, rng);
  item_features_ = random_factors(ds.n_items(), opts_.features, rng);
  losses_.clear();

  auto sweep = [&](const CsrMatrix& rows, const FactorMatrix& other, FactorMatrix& mine) {
    parallel_for(static_cast<std::size_t>(rows.n_rows), opts_.workers, [&](std::size_t r) {
      const auto row = static_cast<std::int32_t>(r);
      coordinate_descent_row(rows.row_cols(row), rows.row_values(row), other, opts_.reg,
                             mine.row(row));
    });
    if (!all_finite(mine)) throw FitError("biased-mf diverged (non-finite factors)");
    losses_.push_back(biased_mf_loss(resid, user_features_, item_features_, resid_t, opts_.reg));
  };

  for (std::size_t it = 0; it < opts_.iterations; ++it) {
    sweep(resid, item_features_, user_features_);
    sweep(resid_t, user_features_, item_features_);
  }
  users_ = std::move(ds.users);
  items_ = std::move(ds.items);
  fitted_ = true;
}

void BiasedMF::save(ModelArchive& ar) const {
  ar.put_index("users", users_);
  ar.put_index("items", items_);
  bias_.save(ar);
  put_factors(ar, "user_features", user_features_);
  put_factors(ar, "item_features", item_features_);
}

void BiasedMF::load(const ModelArchive& ar) {
  users_ = ar.index("users");
  items_ = ar.index("items");
  bias_ = BiasModel::load(ar);
  user_features_ = get_factors(ar, "user_features");
  item_features_ = get_factors(ar, "item_features");
  if (static_cast<std::size_t>(user_features_.rows()) != users_.size() ||
      static_cast<std::size_t>(item_features_.rows()) != items_.size())
    throw ModelFormatError("factor matrices do not match indexes");
  fitted_ = true;
}

std::vector<double> BiasedMF::predict_for_user(std::string_view user,
                                               std::span<const std::string> items,
                                               const UserHistory*) const {
  if (!fitted_) throw FitError("biased-mf used before fit");
  const auto u = users_.position(user);
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& it : items) {
    const auto i = items_.position(it);
    double v = bias_.predict(u, i);
    if (u >= 0 && i >= 0) v += user_features_.row(u).dot(item_features_.row(i));
    out.push_back(v);
  }
  return out;
}

ImplicitMFOptions ImplicitMFOptions::from_json(const nlohmann::json& params) {
  ParamReader rd(params);
  ImplicitMFOptions o;
  o.features = rd.get("features", o.features);
  o.reg = rd.get("reg", o.reg);
  o.weight = rd.get("weight", o.weight);
  o.iterations = rd.get("iterations", o.iterations);
  o.cg_steps = rd.get("cg_steps", o.cg_steps);
  o.seed = rd.get("seed", o.seed);
  rd.finish("implicit-mf");
  return o;
}

nlohmann::json ImplicitMFOptions::to_json() const {
  return {{"features", features}, {"reg", reg},           {"weight", weight},
          {"iterations", iterations}, {"cg_steps", cg_steps}, {"seed", seed}};
}

ImplicitMF::ImplicitMF(ImplicitMFOptions opts) : opts_(opts) {
  if (opts_.features < 1) throw ParameterError("implicit-mf needs features >= 1");
  if (opts_.reg < 0 || opts_.weight < 0) throw ParameterError("reg and weight must be >= 0");
}

void implicit_cg_solve(const Eigen::MatrixXd& gram, const FactorMatrix& other,
                       std::span<const std::int32_t> cols, std::span<const double> values,
                       double weight, double reg, std::size_t cg_steps,
                       Eigen::Ref<Eigen::VectorXd> x) {
  const auto f = gram.rows();
  auto apply = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out = gram * v + reg * v;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto y = other.row(cols[k]);
      out += (weight * values[k] * y.dot(v)) * y.transpose();
    }
    return out;
  };
  Eigen::VectorXd b = Eigen::VectorXd::Zero(f);
  for (std::size_t k = 0; k < cols.size(); ++k)
    if (values[k] > 0.0) b += (1.0 + weight * values[k]) * other.row(cols[k]).transpose();

  Eigen::VectorXd r = b - apply(x);
  Eigen::VectorXd p = r;
  double rs = r.squaredNorm();
  for (std::size_t step = 0; step < cg_steps && rs > 0.0; ++step) {
    const Eigen::VectorXd ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rs / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rs_next = r.squaredNorm();
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
}

double implicit_loss(const CsrMatrix& by_user, const FactorMatrix& users, const FactorMatrix& items,
                     double weight, double reg) {
  const Eigen::MatrixXd xtx = users.transpose() * users;
  const Eigen::MatrixXd yty = items.transpose() * items;
  double loss = xtx.cwiseProduct(yty).sum();
  for (std::int32_t u = 0; u < by_user.n_rows; ++u) {
    auto cols = by_user.row_cols(u);
    auto vals = by_user.row_values(u);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double s = users.row(u).dot(items.row(cols[k]));
      const double c = 1.0 + weight * vals[k];
      const double pref = vals[k] > 0.0 ? 1.0 : 0.0;
      loss += c * (pref - s) * (pref - s) - s * s;
    }
  }
  return loss + reg * (users.squaredNorm() + items.squaredNorm());
}

void ImplicitMF::fit(const RatingTable& ratings, const FitExtras&) {
  if (ratings.has_ratings())
    for (double v : ratings.ratings())
      if (v < 0.0) throw ParameterError("implicit-mf requires nonnegative interaction values");
  auto ds = build_dataset(ratings);
  const CsrMatrix& by_user = ds.by_user;
  const CsrMatrix& by_item = ds.by_item;

  Rng rng(opts_.seed);
  user_features_ = random_factors(ds.n_users(), opts_.features, rng);
  item_features_ = random_factors(ds.n_items(), opts_.features, rng);
  losses_.clear();

  auto half = [&](const CsrMatrix& rows, const FactorMatrix& other, FactorMatrix& mine) {
    const Eigen::MatrixXd gram = other.transpose() * other;
    parallel_for(static_cast<std::size_t>(rows.n_rows), opts_.workers, [&](std::size_t r) {
      const auto row = static_cast<std::int32_t>(r);
      Eigen::VectorXd x = mine.row(row).transpose();
      implicit_cg_solve(gram, other, rows.row_cols(row), rows.row_values(row), opts_.weight,
                        opts_.reg, opts_.cg_steps, x);
      mine.row(row) = x.transpose();
    });
    if (!mine.allFinite()) throw FitError("implicit-mf diverged (non-finite factors)");
    losses_.push_back(implicit_loss(by_user, user_features_, item_features_, opts_.weight, opts_.reg));
  };

  for (std::size_t it = 0; it < opts_.iterations; ++it) {
    half(by_user, item_features_, user_features_);
    half(by_item, user_features_, item_features_);
  }
  users_ = std::move(ds.users);
  items_ = std::move(ds.items);
  fitted_ = true;
}

void ImplicitMF::save(ModelArchive& ar) const {
  ar.put_index("users", users_);
  ar.put_index("items", items_);
  put_factors(ar, "user_features", user_features_);
  put_factors(ar, "item_features", item_features_);
}

void ImplicitMF::load(const ModelArchive& ar) {
  users_ = ar.index("users");
  items_ = ar.index("items");
  user_features_ = get_factors(ar, "user_features");
  item_features_ = get_factors(ar, "item_features");
  if (static_cast<std::size_t>(user_features_.rows()) != users_.size() ||
      static_cast<std::size_t>(item_features_.rows()) != items_.size())
    throw ModelFormatError("factor matrices do not match indexes");
  fitted_ = true;
}

std::vector<double> ImplicitMF::predict_for_user(std::string_view user,
                                                 std::span<const std::string> items,
                                                 const UserHistory*) const {
  if (!fitted_) throw FitError("implicit-mf used before fit");
  std::vector<double> out(items.size(), kMissing);
  const auto u = users_.position(user);
  if (u < 0) return out;
  for (std::size_t k = 0; k < items.size(); ++k)
    if (const auto i = items_.position(items[k]); i >= 0)
      out[k] = user_features_.row(u).dot(item_features_.row(i));
  return out;
}

FunkSVDOptions FunkSVDOptions::from_json(const nlohmann::json& params) {
  ParamReader rd(params);
  FunkSVDOptions o;
  o.features = rd.get("features", o.features);
  o.lrate = rd.get("lrate", o.lrate);
  o.reg = rd.get("reg", o.reg);
  o.epochs = rd.get("epochs", o.epochs);
  o.damping = rd.get("damping", o.damping);
  const auto range = rd.get<nlohmann::json>("range", nullptr);
  rd.finish("funk-svd");
  if (range.is_array() && range.size() == 2) {
    o.range = std::pair{range[0].get<double>(), range[1].get<double>()};
  } else if (range.is_string()) {
    const auto s = range.get<std::string>();
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw ParameterError("range must be 'lo,hi'");
    o.range = std::pair{parse_double(s.substr(0, comma), 0), parse_double(s.substr(comma + 1), 0)};
  } else if (!range.is_null()) {
    throw ParameterError("range must be 'lo,hi' or [lo, hi]");
  }
  if (o.range && !(o.range->first < o.range->second)) throw ParameterError("range needs lo < hi");
  return o;
}

nlohmann::json FunkSVDOptions::to_json() const {
  nlohmann::json j = {{"features", features}, {"lrate", lrate},     {"reg", reg},
                      {"epochs", epochs},     {"damping", damping}};
  if (range) j["range"] = {range->first, range->second};
  return j;
}

FunkSVD::FunkSVD(FunkSVDOptions opts) : opts_(opts) {
  if (opts_.features < 1) throw ParameterError("funk-svd needs features >= 1");
  if (opts_.lrate <= 0 || opts_.reg < 0) throw ParameterError("funk-svd needs lrate > 0, reg >= 0");
}

FunkStep funk_sgd_step(double rating, double estimate, double p, double q, double lrate, double reg,
                       double lo, double hi) {
  const double err = rating - clamp(estimate + p * q, lo, hi);
  return {lrate * (err * q - reg * p), lrate * (err * p - reg * q)};
}

void FunkSVD::fit(const RatingTable& ratings, const FitExtras&) {
  require_explicit(ratings, "funk-svd");
  auto ds = build_dataset(ratings);
  const auto& R = ds.by_user;
  if (opts_.range) {
    std::tie(lo_, hi_) = *opts_.range;
  } else {
    const auto [mn, mx] = std::minmax_element(R.values.begin(), R.values.end());
    lo_ = *mn;
    hi_ = *mx;
  }
  bias_ = BiasModel::fit(ds, {opts_.damping, opts_.damping});

  const auto nnz = R.nnz();
  std::vector<std::int32_t> users(nnz);
  for (std::int32_t u = 0; u < R.n_rows; ++u)
    for (auto k = R.row_ptr[u]; k < R.row_ptr[u + 1]; ++k) users[k] = u;
  std::vector<double> estimate(nnz);
  for (std::size_t k = 0; k < nnz; ++k) estimate[k] = bias_.predict(users[k], R.col_idx[k]);

  const auto f = static_cast<Eigen::Index>(opts_.features);
  user_features_ = FactorMatrix::Constant(static_cast<Eigen::Index>(ds.n_users()), f, 0.1);
  item_features_ = FactorMatrix::Constant(static_cast<Eigen::Index>(ds.n_items()), f, 0.1);

  for (Eigen::Index g = 0; g < f; ++g) {
    for (std::size_t epoch = 0; epoch < opts_.epochs; ++epoch) {
      for (std::size_t k = 0; k < nnz; ++k) {
        double& p = user_features_(users[k], g);
        double& q = item_features_(R.col_idx[k], g);
        const auto step = funk_sgd_step(R.values[k], estimate[k], p, q, opts_.lrate, opts_.reg, lo_, hi_);
        p += step.user_delta;
        q += step.item_delta;
      }
    }
    for (std::size_t k = 0; k < nnz; ++k)
      estimate[k] = clamp(estimate[k] + user_features_(users[k], g) * item_features_(R.col_idx[k], g),
                          lo_, hi_);
  }
  if (!user_features_.allFinite() || !item_features_.allFinite())
    throw FitError("funk-svd diverged (non-finite factors)");
  users_ = std::move(ds.users);
  items_ = std::move(ds.items);
  fitted_ = true;
}

void FunkSVD::save(ModelArchive& ar) const {
  ar.put_index("users", users_);
  ar.put_index("items", items_);
  bias_.save(ar);
  put_factors(ar, "user_features", user_features_);
  put_factors(ar, "item_features", item_features_);
  ar.put("range", std::vector<double>{lo_, hi_});
}

void FunkSVD::load(const ModelArchive& ar) {
  users_ = ar.index("users");
  items_ = ar.index("items");
  bias_ = BiasModel::load(ar);
  user_features_ = get_factors(ar, "user_features");
  item_features_ = get_factors(ar, "item_features");
  const auto& range = ar.doubles("range");
  if (range.size() != 2) throw ModelFormatError("bad rating range");
  lo_ = range[0];
  hi_ = range[1];
  fitted_ = true;
}

std::vector<double> FunkSVD::predict_for_user(std::string_view user,
                                              std::span<const std::string> items,
                                              const UserHistory*) const {
  if (!fitted_) throw FitError("funk-svd used before fit");
  const auto u = users_.position(user);
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& it : items) {
    const auto i = items_.position(it);
    double v = bias_.predict(u, i);
    if (u >= 0 && i >= 0) v += user_features_.row(u).dot(item_features_.row(i));
    out.push_back(clamp(v, lo_, hi_));
  }
  return out;
}

}  // namespace reckit
