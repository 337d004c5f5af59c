#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "reckit/error.hpp"

namespace reckit {

// Reads typed hyperparameters out of a JSON object and rejects keys nobody
// asked for. Numeric strings are accepted so "--param k=20" works.
class ParamReader {
 public:
  explicit ParamReader(const nlohmann::json& params) : params_(params) {
    if (!params_.is_null() && !params_.is_object())
      throw ParameterError("hyperparameters must be a key/value object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (params_.is_null() || !params_.contains(key)) return fallback;
    const auto& v = params_.at(key);
    if constexpr (std::is_same_v<T, nlohmann::json>) return v;
    try {
      if (v.is_string()) {
        if constexpr (std::is_same_v<T, std::string>) {
          return v.get<std::string>();
        } else {
          return nlohmann::json::parse(v.get<std::string>()).get<T>();
        }
      }
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ParameterError("invalid value for hyperparameter '" + key + "': " + v.dump());
    }
  }

  // Call after all get() calls.
  void finish(const std::string& algorithm) const {
    if (params_.is_null()) return;
    for (const auto& [key, _] : params_.items())
      if (!used_.contains(key))
        throw ParameterError("unknown hyperparameter '" + key + "' for " + algorithm);
  }

 private:
  const nlohmann::json& params_;
  std::set<std::string> used_;
};

}  // namespace reckit
