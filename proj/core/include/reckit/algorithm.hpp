#pragma once

#include <any>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "reckit/table.hpp"

namespace reckit {

class ModelArchive;

// Marker for "no score": NaN. Test with is_missing, never with ==.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double x) { return std::isnan(x); }

struct ScoredItem {
  std::string item;
  double score;

  bool operator==(const ScoredItem&) const = default;
};

// Ratings supplied at query time, possibly for a user the model never saw.
struct UserHistory {
  std::vector<std::string> items;
  std::vector<double> ratings;
};

// Named side data passed through fit; built-in algorithms ignore it.
using FitExtras = std::map<std::string, std::any>;

// Anything that learns from ratings. fit replaces all learned state.
class Algorithm {
 public:
  virtual ~Algorithm() = default;

  // Registry name, e.g. "item-item".
  virtual std::string name() const = 0;
  virtual nlohmann::json params() const = 0;

  virtual void fit(const RatingTable& ratings, const FitExtras& extras = {}) = 0;
  virtual bool fitted() const = 0;

  virtual void save(ModelArchive& archive) const = 0;
  virtual void load(const ModelArchive& archive) = 0;
};

// Scores arbitrary (user, item) pairs. Returns one value per requested item,
// kMissing where no score can be produced.
class Predictor : public virtual Algorithm {
 public:
  virtual std::vector<double> predict_for_user(std::string_view user,
                                               std::span<const std::string> items,
                                               const UserHistory* history = nullptr) const = 0;
};

// Produces ranked lists, best first.
class Recommender : public virtual Algorithm {
 public:
  virtual std::vector<ScoredItem> recommend(std::string_view user,
                                            std::optional<std::size_t> n = std::nullopt,
                                            const std::vector<std::string>* candidates = nullptr,
                                            const UserHistory* history = nullptr) const = 0;
};

// Supplies the items to rank when the caller gives no candidate list.
class CandidateSelector : public virtual Algorithm {
 public:
  virtual std::vector<std::string> candidates(std::string_view user,
                                              const UserHistory* history = nullptr) const = 0;
};

}  // namespace reckit
