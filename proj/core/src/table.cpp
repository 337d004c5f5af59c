#include "reckit/table.hpp"

#include <unordered_map>

#include "reckit/error.hpp"

namespace reckit {

RatingTable RatingTable::from_columns(std::vector<std::string> users, std::vector<std::string> items,
                                      std::optional<std::vector<double>> ratings,
                                      std::optional<std::vector<std::int64_t>> timestamps) {
  if (users.size() != items.size()) throw SchemaError("user and item columns differ in length");
  if (ratings && ratings->size() != users.size())
    throw SchemaError("rating column length does not match");
  if (timestamps && timestamps->size() != users.size())
    throw SchemaError("timestamp column length does not match");
  RatingTable t;
  t.users_ = std::move(users);
  t.items_ = std::move(items);
  t.ratings_ = std::move(ratings);
  t.timestamps_ = std::move(timestamps);
  return t;
}

const std::vector<double>& RatingTable::ratings() const {
  if (!ratings_) throw SchemaError("table has no rating column");
  return *ratings_;
}

const std::vector<std::int64_t>& RatingTable::timestamps() const {
  if (!timestamps_) throw SchemaError("table has no timestamp column");
  return *timestamps_;
}

void RatingTable::add_extra(std::string name, std::vector<std::string> values) {
  if (values.size() != size()) throw SchemaError("column '" + name + "' length does not match");
  if (name == "user" || name == "item" || name == "rating" || name == "timestamp")
    throw SchemaError("column '" + name + "' is reserved");
  for (const auto& e : extras_)
    if (e.name == name) throw SchemaError("duplicate column '" + name + "'");
  extras_.push_back({std::move(name), std::move(values)});
}

std::vector<std::string> RatingTable::column_names() const {
  std::vector<std::string> names{"user", "item"};
  if (ratings_) names.emplace_back("rating");
  if (timestamps_) names.emplace_back("timestamp");
  for (const auto& e : extras_) names.push_back(e.name);
  return names;
}

namespace {

template <typename T>
std::vector<T> gather(const std::vector<T>& src, std::span<const std::size_t> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(src.at(r));
  return out;
}

}  // namespace

RatingTable RatingTable::take(std::span<const std::size_t> rows) const {
  RatingTable t;
  t.users_ = gather(users_, rows);
  t.items_ = gather(items_, rows);
  if (ratings_) t.ratings_ = gather(*ratings_, rows);
  if (timestamps_) t.timestamps_ = gather(*timestamps_, rows);
  for (const auto& e : extras_) t.extras_.push_back({e.name, gather(e.values, rows)});
  return t;
}

std::vector<std::string> RatingTable::distinct_users() const {
  std::vector<std::string> out;
  std::unordered_map<std::string_view, bool> seen;
  for (const auto& u : users_)
    if (seen.emplace(u, true).second) out.push_back(u);
  return out;
}

std::vector<std::vector<std::size_t>> RatingTable::rows_by_user() const {
  std::vector<std::vector<std::size_t>> groups;
  std::unordered_map<std::string_view, std::size_t> slot;
  for (std::size_t r = 0; r < users_.size(); ++r) {
    auto [it, fresh] = slot.emplace(users_[r], groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(r);
  }
  return groups;
}

RatingTable RatingTable::concat(std::span<const RatingTable> parts) {
  if (parts.empty()) return {};
  const auto names = parts.front().column_names();
  RatingTable out;
  if (parts.front().ratings_) out.ratings_.emplace();
  if (parts.front().timestamps_) out.timestamps_.emplace();
  for (const auto& e : parts.front().extras_) out.extras_.push_back({e.name, {}});
  for (const auto& p : parts) {
    if (p.column_names() != names) throw SchemaError("cannot concatenate tables with different columns");
    out.users_.insert(out.users_.end(), p.users_.begin(), p.users_.end());
    out.items_.insert(out.items_.end(), p.items_.begin(), p.items_.end());
    if (out.ratings_) out.ratings_->insert(out.ratings_->end(), p.ratings_->begin(), p.ratings_->end());
    if (out.timestamps_)
      out.timestamps_->insert(out.timestamps_->end(), p.timestamps_->begin(), p.timestamps_->end());
    for (std::size_t c = 0; c < out.extras_.size(); ++c)
      out.extras_[c].values.insert(out.extras_[c].values.end(), p.extras_[c].values.begin(),
                                   p.extras_[c].values.end());
  }
  return out;
}

}  // namespace reckit
