#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reckit/algorithm.hpp"
#include "reckit/baselines.hpp"
#include "reckit/dataset.hpp"

namespace reckit {

using FactorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BiasedMFOptions {
  std::size_t features = 50;
  double reg = 0.1;
  std::size_t iterations = 20;
  double damping = 0.0;  // applied to both user and item bias terms
  std::uint64_t seed = 42;
  std::size_t workers = 0;  // threads for the half-sweeps; not persisted

  static BiasedMFOptions from_json(const nlohmann::json& params);
  nlohmann::json to_json() const;
};

// Explicit-feedback MF on the residuals of a bias model, trained by
// alternating least squares where each half-sweep is one pass of
// coordinate descent over the features of every row.
class BiasedMF : public Predictor {
 public:
  explicit BiasedMF(BiasedMFOptions opts = {});

  std::string name() const override { return "biased-mf"; }
  nlohmann::json params() const override { return opts_.to_json(); }
  void fit(const RatingTable& ratings, const FitExtras& extras = {}) override;
  bool fitted() const override { return fitted_; }
  void save(ModelArchive& archive) const override;
  void load(const ModelArchive& archive) override;

  std::vector<double> predict_for_user(std::string_view user, std::span<const std::string> items,
                                       const UserHistory* history = nullptr) const override;

  // Regularized objective after every half-sweep (user, item, user, ...):
  //   sum e_ui^2 + reg * (sum_u |R_u| |p_u|^2 + sum_i |R_i| |q_i|^2)
  const std::vector<double>& loss_history() const { return losses_; }

  const BiasModel& bias() const { return bias_; }
  const FactorMatrix& user_features() const { return user_features_; }
  const FactorMatrix& item_features() const { return item_features_; }
  const Index& users() const { return users_; }
  const Index& items() const { return items_; }

 private:
  BiasedMFOptions opts_;
  bool fitted_ = false;
  Index users_;
  Index items_;
  BiasModel bias_;
  FactorMatrix user_features_;
  FactorMatrix item_features_;
  std::vector<double> losses_;
};

// One coordinate-descent pass over the features of a single row. `residuals`
// holds r_ui - bias for the row's entries and `cols` the opposite-side rows
// they touch; `row` is updated in place. Each feature g becomes
//   sum_k q_kg (e_k + p_g q_kg) / (sum_k q_kg^2 + reg * n)
// with e_k = residual_k - p.q_k kept current after every feature.
void coordinate_descent_row(std::span<const std::int32_t> cols, std::span<const double> residuals,
                            const FactorMatrix& other, double reg, Eigen::Ref<Eigen::RowVectorXd> row);

struct ImplicitMFOptions {
  std::size_t features = 50;
  double reg = 0.1;
  double weight = 40.0;
  std::size_t iterations = 20;
  std::size_t cg_steps = 3;
  std::uint64_t seed = 42;
  std::size_t workers = 0;

  static ImplicitMFOptions from_json(const nlohmann::json& params);
  nlohmann::json to_json() const;
};

// Solves (Y'Y + Y'(C_u - I)Y + reg I) x = Y' C_u p_u by conjugate gradient,
// starting from x and running at most cg_steps iterations. Only the rows in
// `cols` have confidence above 1: c = 1 + weight * value, p = [value > 0].
void implicit_cg_solve(const Eigen::MatrixXd& gram, const FactorMatrix& other,
                       std::span<const std::int32_t> cols, std::span<const double> values,
                       double weight, double reg, std::size_t cg_steps, Eigen::Ref<Eigen::VectorXd> x);

// Implicit-feedback ALS with confidence weighting; each half-step solves the
// per-row normal equations with a few conjugate gradient iterations.
class ImplicitMF : public Predictor {
 public:
  explicit ImplicitMF(ImplicitMFOptions opts = {});

  std::string name() const override { return "implicit-mf"; }
  nlohmann::json params() const override { return opts_.to_json(); }
  void fit(const RatingTable& ratings, const FitExtras& extras = {}) override;
  bool fitted() const override { return fitted_; }
  void save(ModelArchive& archive) const override;
  void load(const ModelArchive& archive) override;

  std::vector<double> predict_for_user(std::string_view user, std::span<const std::string> items,
                                       const UserHistory* history = nullptr) const override;

  // sum_{u,i} c_ui (p_ui - x_u.y_i)^2 + reg (|X|^2 + |Y|^2), recorded after
  // every half-step.
  const std::vector<double>& loss_history() const { return losses_; }

  const FactorMatrix& user_features() const { return user_features_; }
  const FactorMatrix& item_features() const { return item_features_; }

 private:
  ImplicitMFOptions opts_;
  bool fitted_ = false;
  Index users_;
  Index items_;
  FactorMatrix user_features_;
  FactorMatrix item_features_;
  std::vector<double> losses_;
};

// Full implicit objective for the given factors.
double implicit_loss(const CsrMatrix& by_user, const FactorMatrix& users, const FactorMatrix& items,
                     double weight, double reg);

struct FunkSVDOptions {
  std::size_t features = 50;
  double lrate = 0.001;
  double reg = 0.015;
  std::size_t epochs = 100;  // per feature
  double damping = 0.0;
  std::optional<std::pair<double, double>> range;  // default: observed min/max

  static FunkSVDOptions from_json(const nlohmann::json& params);
  nlohmann::json to_json() const;
};

struct FunkStep {
  double user_delta;
  double item_delta;
};

// One stochastic gradient step for a single rating on feature values (p, q),
// where `estimate` is the clamped prediction from the bias and earlier
// features. e = rating - clamp(estimate + p q);
// dp = lrate (e q - reg p), dq = lrate (e p - reg q), both from pre-update values.
FunkStep funk_sgd_step(double rating, double estimate, double p, double q, double lrate, double reg,
                       double lo, double hi);

// Simon Funk's feature-at-a-time gradient descent on bias residuals.
class FunkSVD : public Predictor {
 public:
  explicit FunkSVD(FunkSVDOptions opts = {});

  std::string name() const override { return "funk-svd"; }
  nlohmann::json params() const override { return opts_.to_json(); }
  void fit(const RatingTable& ratings, const FitExtras& extras = {}) override;
  bool fitted() const override { return fitted_; }
  void save(ModelArchive& archive) const override;
  void load(const ModelArchive& archive) override;

  std::vector<double> predict_for_user(std::string_view user, std::span<const std::string> items,
                                       const UserHistory* history = nullptr) const override;

  const BiasModel& bias() const { return bias_; }
  const FactorMatrix& user_features() const { return user_features_; }
  const FactorMatrix& item_features() const { return item_features_; }
  std::pair<double, double> range() const { return {lo_, hi_}; }

 private:
  FunkSVDOptions opts_;
  bool fitted_ = false;
  Index users_;
  Index items_;
  BiasModel bias_;
  FactorMatrix user_features_;
  FactorMatrix item_features_;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

}  // namespace reckit
