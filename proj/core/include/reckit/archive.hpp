#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "reckit/dataset.hpp"

namespace reckit {

inline constexpr char kModelMagic[8] = {'R', 'E', 'C', 'K', 'I', 'T', 'M', '\0'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

using ArchiveArray =
    std::variant<std::vector<double>, std::vector<std::int64_t>, std::vector<std::string>>;

// In-memory image of a saved model: algorithm name, hyperparameters, named
// payload arrays, and nested archives for composite algorithms.
//
// File layout (little-endian):
//   magic[8] "RECKITM\0", u32 format version, then one section:
//   str algorithm, str params-json, u32 n_arrays,
//     { str name, u8 type (0=f64,1=i64,2=str), u64 len, payload },
//   u32 n_children, { str key, section }
// where str = u32 byte length followed by the bytes.
class ModelArchive {
 public:
  std::string algorithm;
  nlohmann::json params = nlohmann::json::object();

  void put(const std::string& key, ArchiveArray data);
  const std::vector<double>& doubles(const std::string& key) const;
  const std::vector<std::int64_t>& ints(const std::string& key) const;
  const std::vector<std::string>& strings(const std::string& key) const;
  bool has(const std::string& key) const;

  void put_index(const std::string& key, const Index& index);
  Index index(const std::string& key) const;
  void put_csr(const std::string& key, const CsrMatrix& m);
  CsrMatrix csr(const std::string& key) const;

  ModelArchive& child(const std::string& key);
  const ModelArchive& child(const std::string& key) const;

  const std::vector<std::pair<std::string, ArchiveArray>>& arrays() const { return arrays_; }
  const std::vector<std::pair<std::string, ModelArchive>>& children() const { return children_; }

 private:
  const ArchiveArray& find(const std::string& key) const;

  std::vector<std::pair<std::string, ArchiveArray>> arrays_;
  std::vector<std::pair<std::string, ModelArchive>> children_;
};

void write_archive(std::ostream& out, const ModelArchive& archive);
// Throws ModelFormatError on bad magic, truncation, or a newer version.
ModelArchive read_archive(std::istream& in);

void write_archive(const std::filesystem::path& path, const ModelArchive& archive);
ModelArchive read_archive(const std::filesystem::path& path);

}  // namespace reckit
