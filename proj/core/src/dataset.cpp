#include "reckit/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "reckit/error.hpp"

namespace reckit {

Index::Index(std::vector<std::string> ids) {
  for (auto& id : ids) {
    if (find(id)) throw SchemaError("duplicate identifier '" + id + "' in index");
    intern(id);
  }
}

std::int32_t Index::intern(std::string_view id) {
  if (auto it = lookup_.find(id); it != lookup_.end()) return it->second;
  const auto pos = static_cast<std::int32_t>(ids_.size());
  ids_.emplace_back(id);
  lookup_.emplace(ids_.back(), pos);
  return pos;
}

std::optional<std::int32_t> Index::find(std::string_view id) const {
  if (auto it = lookup_.find(id); it != lookup_.end()) return it->second;
  return std::nullopt;
}

std::int32_t Index::position(std::string_view id) const {
  auto it = lookup_.find(id);
  return it == lookup_.end() ? -1 : it->second;
}

CsrMatrix CsrMatrix::from_triples(std::int32_t n_rows, std::int32_t n_cols,
                                  std::span<const std::int32_t> rows,
                                  std::span<const std::int32_t> cols, std::span<const double> vals) {
  CsrMatrix m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.row_ptr.assign(static_cast<std::size_t>(n_rows) + 1, 0);
  for (auto r : rows) ++m.row_ptr[r + 1];
  for (std::int32_t r = 0; r < n_rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a] != rows[b] ? rows[a] < rows[b] : cols[a] < cols[b];
  });
  m.col_idx.reserve(order.size());
  m.values.reserve(order.size());
  for (auto k : order) {
    m.col_idx.push_back(cols[k]);
    m.values.push_back(vals[k]);
  }
  return m;
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t;
  t.n_rows = n_cols;
  t.n_cols = n_rows;
  t.row_ptr.assign(static_cast<std::size_t>(n_cols) + 1, 0);
  for (auto c : col_idx) ++t.row_ptr[c + 1];
  for (std::int32_t c = 0; c < n_cols; ++c) t.row_ptr[c + 1] += t.row_ptr[c];
  t.col_idx.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::int64_t> fill(t.row_ptr.begin(), t.row_ptr.end() - 1);
  // Walking rows in order keeps each transposed row sorted.
  for (std::int32_t r = 0; r < n_rows; ++r) {
    for (auto k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const auto dst = fill[col_idx[k]]++;
      t.col_idx[dst] = r;
      t.values[dst] = values[k];
    }
  }
  return t;
}

Dataset build_dataset(const RatingTable& ratings) {
  if (ratings.empty()) throw EmptyInputError("cannot index an empty rating table");
  Dataset ds;
  ds.explicit_ratings = ratings.has_ratings();
  const std::size_t n = ratings.size();
  std::vector<std::int32_t> u(n), i(n);
  for (std::size_t r = 0; r < n; ++r) {
    u[r] = ds.users.intern(ratings.users()[r]);
    i[r] = ds.items.intern(ratings.items()[r]);
  }

  // Keep the last row of every (user, item) cell.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return u[a] != u[b] ? u[a] < u[b] : i[a] < i[b];
  });
  std::vector<std::int32_t> ru, ri;
  std::vector<double> rv;
  ru.reserve(n);
  ri.reserve(n);
  rv.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = order[k];
    if (k + 1 < n && u[order[k + 1]] == u[row] && i[order[k + 1]] == i[row]) continue;
    ru.push_back(u[row]);
    ri.push_back(i[row]);
    rv.push_back(ds.explicit_ratings ? ratings.ratings()[row] : 1.0);
  }

  const auto nu = static_cast<std::int32_t>(ds.users.size());
  const auto ni = static_cast<std::int32_t>(ds.items.size());
  ds.by_user = CsrMatrix::from_triples(nu, ni, ru, ri, rv);
  ds.by_item = ds.by_user.transpose();
  return ds;
}

RatingTable flatten(const Dataset& ds) {
  std::vector<std::string> users, items;
  std::vector<double> vals;
  for (std::int32_t r = 0; r < ds.by_user.n_rows; ++r) {
    auto cols = ds.by_user.row_cols(r);
    auto vs = ds.by_user.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      users.push_back(ds.users.id(r));
      items.push_back(ds.items.id(cols[k]));
      vals.push_back(vs[k]);
    }
  }
  return RatingTable::from_columns(std::move(users), std::move(items), std::move(vals));
}

}  // namespace reckit
