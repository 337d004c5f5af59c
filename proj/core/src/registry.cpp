#include "reckit/registry.hpp"

#include "reckit/baselines.hpp"
#include "reckit/error.hpp"
#include "reckit/knn.hpp"
#include "reckit/mf.hpp"
#include "reckit/params.hpp"
#include "reckit/topn.hpp"

namespace reckit {

const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names{"bias",      "popular",    "random",
                                              "user-user", "item-item",  "biased-mf",
                                              "implicit-mf", "funk-svd"};
  return names;
}

std::shared_ptr<Algorithm> make_algorithm(std::string_view name, const nlohmann::json& params) {
  if (name == "bias") return std::make_shared<Bias>(BiasOptions::from_json(params));
  if (name == "popular") {
    ParamReader(params).finish("popular");
    return std::make_shared<Popular>();
  }
  if (name == "random") {
    ParamReader rd(params);
    const auto seed = rd.get<std::uint64_t>("seed", 42);
    rd.finish("random");
    return std::make_shared<Random>(seed);
  }
  if (name == "user-user") return std::make_shared<UserUser>(KnnOptions::from_json(params, false));
  if (name == "item-item") return std::make_shared<ItemItem>(KnnOptions::from_json(params, true));
  if (name == "biased-mf") return std::make_shared<BiasedMF>(BiasedMFOptions::from_json(params));
  if (name == "implicit-mf") return std::make_shared<ImplicitMF>(ImplicitMFOptions::from_json(params));
  if (name == "funk-svd") return std::make_shared<FunkSVD>(FunkSVDOptions::from_json(params));
  throw ParameterError("unknown algorithm '" + std::string(name) + "'");
}

ModelArchive archive_of(const Algorithm& algo) {
  if (!algo.fitted()) throw FitError("cannot save unfitted algorithm '" + algo.name() + "'");
  ModelArchive ar;
  ar.algorithm = algo.name();
  ar.params = algo.params();
  algo.save(ar);
  return ar;
}

std::shared_ptr<Algorithm> algorithm_from_archive(const ModelArchive& ar) {
  std::shared_ptr<Algorithm> algo;
  // Composites get placeholder parts; load() replaces them.
  if (ar.algorithm == "topn") {
    algo = std::make_shared<TopN>(std::make_shared<Bias>());
  } else if (ar.algorithm == "fallback") {
    algo = std::make_shared<Fallback>(std::make_shared<Bias>(), std::make_shared<Bias>());
  } else if (ar.algorithm == "unrated") {
    algo = std::make_shared<UnratedItems>();
  } else {
    try {
      algo = make_algorithm(ar.algorithm, ar.params);
    } catch (const ParameterError& e) {
      throw ModelFormatError(std::string("cannot restore model: ") + e.what());
    }
  }
  algo->load(ar);
  return algo;
}

void save_model(const Algorithm& algo, const std::filesystem::path& path) {
  write_archive(path, archive_of(algo));
}

std::shared_ptr<Algorithm> load_model(const std::filesystem::path& path) {
  return algorithm_from_archive(read_archive(path));
}

}  // namespace reckit
