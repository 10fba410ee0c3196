#include "cfrank/comparisons.hpp"

#include <algorithm>
#include <istream>
#include <unordered_map>

#include "cfrank/error.hpp"
#include "text_util.hpp"

namespace cfrank {

ComparisonSet ComparisonSet::from_ratings(const RatingsMatrix& r) {
  ComparisonSet s;
  s.n_users_ = r.n_users();
  s.n_items_ = r.n_items();
  s.pair_ptr_.assign(r.n_users() + 1, 0);
  for (std::size_t i = 0; i < r.n_users(); ++i) {
    auto pairs = enumerate_comparisons(r, i);
    s.pairs_.insert(s.pairs_.end(), pairs.begin(), pairs.end());
    s.pair_ptr_[i + 1] = s.pairs_.size();
  }
  s.build_local();
  return s;
}

ComparisonSet ComparisonSet::from_rows(std::size_t n_users, std::size_t n_items,
                                       std::vector<Row> rows) {
  ComparisonSet s;
  s.n_users_ = n_users;
  s.n_items_ = n_items;
  for (const auto& row : rows) {
    if (row.user < 0 || static_cast<std::size_t>(row.user) >= n_users || row.j < 0 ||
        row.k < 0 || static_cast<std::size_t>(row.j) >= n_items ||
        static_cast<std::size_t>(row.k) >= n_items)
      throw DataError("comparison index out of range");
    if (row.j == row.k) throw DataError("comparison of an item with itself");
    if (row.y != 1 && row.y != -1) throw DataError("comparison label must be +1 or -1");
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.user < b.user; });
  s.pair_ptr_.assign(n_users + 1, 0);
  s.pairs_.reserve(rows.size());
  for (const auto& row : rows) {
    s.pairs_.push_back({row.j, row.k, row.y});
    ++s.pair_ptr_[row.user + 1];
  }
  for (std::size_t i = 0; i < n_users; ++i) s.pair_ptr_[i + 1] += s.pair_ptr_[i];
  s.build_local();
  return s;
}

void ComparisonSet::build_local() {
  item_ptr_.assign(n_users_ + 1, 0);
  items_.clear();
  local_.resize(pairs_.size());
  std::vector<std::int32_t> touched;
  for (std::size_t i = 0; i < n_users_; ++i) {
    touched.clear();
    for (const auto& c : user(i)) {
      touched.push_back(c.j);
      touched.push_back(c.k);
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    auto pos = [&](std::int32_t item) {
      return static_cast<std::int32_t>(std::lower_bound(touched.begin(), touched.end(), item) -
                                       touched.begin());
    };
    for (std::size_t p = pair_ptr_[i]; p < pair_ptr_[i + 1]; ++p)
      local_[p] = {pos(pairs_[p].j), pos(pairs_[p].k), static_cast<double>(pairs_[p].y)};
    items_.insert(items_.end(), touched.begin(), touched.end());
    item_ptr_[i + 1] = items_.size();
  }
}

ComparisonSet load_comparisons(std::istream& in, const std::vector<std::int64_t>* user_ids,
                               const std::vector<std::int64_t>* item_ids) {
  auto index = [](const std::vector<std::int64_t>* ids) {
    std::unordered_map<std::int64_t, std::int32_t> idx;
    if (ids)
      for (std::size_t p = 0; p < ids->size(); ++p) idx.emplace((*ids)[p], static_cast<std::int32_t>(p));
    return idx;
  };
  auto uidx = index(user_ids), iidx = index(item_ids);
  auto resolve = [](const auto& idx, const std::vector<std::int64_t>* ids, std::int64_t id,
                    std::size_t line, std::int64_t& max_seen) -> std::int32_t {
    if (ids) {
      auto it = idx.find(id);
      if (it == idx.end()) throw ParseError("unknown id " + std::to_string(id), line);
      return it->second;
    }
    if (id < 0 || id > INT32_MAX) throw ParseError("id out of range", line);
    max_seen = std::max(max_seen, id);
    return static_cast<std::int32_t>(id);
  };

  std::vector<ComparisonSet::Row> rows;
  std::int64_t max_user = -1, max_item = -1;
  std::string line;
  std::size_t line_no = 0;
  std::optional<detail::Separator> sep;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_skippable(line)) continue;
    if (!sep) sep = detail::detect_separator(detail::trim(line));
    auto f = detail::split_fields(line, *sep);
    if (f.size() != 4) throw ParseError("expected 'user j k Y'", line_no);
    auto u = detail::require_number<std::int64_t>(f[0], line_no, "user id");
    auto j = detail::require_number<std::int64_t>(f[1], line_no, "item id");
    auto k = detail::require_number<std::int64_t>(f[2], line_no, "item id");
    auto y = detail::require_number<int>(f[3], line_no, "label");
    if (y != 1 && y != -1) throw ParseError("label must be 1 or -1", line_no);
    rows.push_back({resolve(uidx, user_ids, u, line_no, max_user),
                    resolve(iidx, item_ids, j, line_no, max_item),
                    resolve(iidx, item_ids, k, line_no, max_item), static_cast<std::int8_t>(y)});
  }
  std::size_t n_users = user_ids ? user_ids->size() : static_cast<std::size_t>(max_user + 1);
  std::size_t n_items = item_ids ? item_ids->size() : static_cast<std::size_t>(max_item + 1);
  return ComparisonSet::from_rows(n_users, n_items, std::move(rows));
}

ComparisonSet load_comparisons_file(const std::string& path,
                                    const std::vector<std::int64_t>* user_ids,
                                    const std::vector<std::int64_t>* item_ids) {
  auto in = detail::open_input(path);
  return load_comparisons(in, user_ids, item_ids);
}

}  // namespace cfrank
