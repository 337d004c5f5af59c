#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "reckit/table.hpp"

namespace reckit {

// Bidirectional map between opaque identifiers and dense positions [0, n),
// assigned in insertion order.
class Index {
 public:
  Index() = default;
  explicit Index(std::vector<std::string> ids);

  // Position of id, adding it if new.
  std::int32_t intern(std::string_view id);

  std::optional<std::int32_t> find(std::string_view id) const;
  // -1 when absent.
  std::int32_t position(std::string_view id) const;
  const std::string& id(std::int32_t pos) const { return ids_.at(static_cast<std::size_t>(pos)); }

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  bool operator==(const Index& o) const { return ids_ == o.ids_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::int32_t, Hash, std::equal_to<>> lookup_;
};

// Compressed sparse rows with column indices sorted ascending within a row.
struct CsrMatrix {
  std::int32_t n_rows = 0;
  std::int32_t n_cols = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return col_idx.size(); }
  std::size_t row_size(std::int32_t r) const {
    return static_cast<std::size_t>(row_ptr[r + 1] - row_ptr[r]);
  }
  std::span<const std::int32_t> row_cols(std::int32_t r) const {
    return {col_idx.data() + row_ptr[r], row_size(r)};
  }
  std::span<const double> row_values(std::int32_t r) const {
    return {values.data() + row_ptr[r], row_size(r)};
  }

  CsrMatrix transpose() const;

  // Builds from (row, col, value) triples that contain no duplicate cells.
  static CsrMatrix from_triples(std::int32_t n_rows, std::int32_t n_cols,
                                std::span<const std::int32_t> rows, std::span<const std::int32_t> cols,
                                std::span<const double> vals);

  bool operator==(const CsrMatrix&) const = default;
};

// Indexed view of a rating table: the user-by-item matrix and its transpose.
// Values are ratings, or 1.0 when the table has no rating column.
struct Dataset {
  Index users;
  Index items;
  CsrMatrix by_user;
  CsrMatrix by_item;
  bool explicit_ratings = false;

  std::size_t n_users() const { return users.size(); }
  std::size_t n_items() const { return items.size(); }
};

// Duplicate (user, item) rows resolve to the last occurrence. Throws
// EmptyInputError on an empty table.
Dataset build_dataset(const RatingTable& ratings);

// Flattens the by-user matrix back to (user, item, rating) rows, ordered by
// user position then item position.
RatingTable flatten(const Dataset& ds);

}  // namespace reckit
