#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "reckit/algorithm.hpp"
#include "reckit/archive.hpp"

namespace reckit {

// Names accepted by make_algorithm.
const std::vector<std::string>& algorithm_names();

// Builds an unfitted algorithm from its registry name and hyperparameters.
// Throws ParameterError for unknown names or parameters.
std::shared_ptr<Algorithm> make_algorithm(std::string_view name,
                                          const nlohmann::json& params = nlohmann::json::object());

ModelArchive archive_of(const Algorithm& algo);
std::shared_ptr<Algorithm> algorithm_from_archive(const ModelArchive& archive);

void save_model(const Algorithm& algo, const std::filesystem::path& path);
std::shared_ptr<Algorithm> load_model(const std::filesystem::path& path);

}  // namespace reckit
