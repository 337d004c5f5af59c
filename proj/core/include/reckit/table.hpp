#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reckit {

// A column the library does not interpret. Values are kept as raw text so
// they are written back exactly as they were read.
struct ExtraColumn {
  std::string name;
  std::vector<std::string> values;

  bool operator==(const ExtraColumn&) const = default;
};

// Columnar (user, item, rating?, timestamp?) interactions plus any number
// of pass-through columns. Users and items are opaque strings.
class RatingTable {
 public:
  RatingTable() = default;

  static RatingTable from_columns(std::vector<std::string> users, std::vector<std::string> items,
                                  std::optional<std::vector<double>> ratings = std::nullopt,
                                  std::optional<std::vector<std::int64_t>> timestamps = std::nullopt);

  std::size_t size() const { return users_.size(); }
  bool empty() const { return users_.empty(); }

  bool has_ratings() const { return ratings_.has_value(); }
  bool has_timestamps() const { return timestamps_.has_value(); }

  const std::vector<std::string>& users() const { return users_; }
  const std::vector<std::string>& items() const { return items_; }
  // Throw SchemaError when the column is absent.
  const std::vector<double>& ratings() const;
  const std::vector<std::int64_t>& timestamps() const;

  const std::vector<ExtraColumn>& extras() const { return extras_; }
  void add_extra(std::string name, std::vector<std::string> values);

  // Column names in output order; user and item always first.
  std::vector<std::string> column_names() const;

  // Rows at the given positions, in the given order, all columns kept.
  RatingTable take(std::span<const std::size_t> rows) const;

  // Distinct users in order of first appearance.
  std::vector<std::string> distinct_users() const;

  // Row positions grouped by user, groups in first-appearance order.
  std::vector<std::vector<std::size_t>> rows_by_user() const;

  static RatingTable concat(std::span<const RatingTable> parts);

  bool operator==(const RatingTable&) const = default;

 private:
  std::vector<std::string> users_;
  std::vector<std::string> items_;
  std::optional<std::vector<double>> ratings_;
  std::optional<std::vector<std::int64_t>> timestamps_;
  std::vector<ExtraColumn> extras_;
};

}  // namespace reckit
