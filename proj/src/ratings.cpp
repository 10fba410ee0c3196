#include "cfrank/ratings.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "cfrank/error.hpp"
#include "text_util.hpp"

namespace cfrank {

std::string to_string(FeedbackMode mode) {
  switch (mode) {
    case FeedbackMode::kExplicit: return "explicit";
    case FeedbackMode::kImplicit: return "implicit";
    case FeedbackMode::kReal: return "real";
  }
  return "explicit";
}

FeedbackMode parse_feedback_mode(const std::string& s) {
  if (s == "explicit") return FeedbackMode::kExplicit;
  if (s == "implicit") return FeedbackMode::kImplicit;
  if (s == "real") return FeedbackMode::kReal;
  throw ConfigError("unknown feedback mode '" + s + "' (expected explicit|implicit|real)");
}

namespace {

std::vector<std::int64_t> identity_ids(std::size_t n) {
  std::vector<std::int64_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::int64_t{0});
  return ids;
}

void check_value(double v, FeedbackMode mode, const Triple& t) {
  auto where = [&] {
    return "(" + std::to_string(t.user) + ", " + std::to_string(t.item) + ")";
  };
  if (!std::isfinite(v)) throw DataError("non-finite rating at " + where());
  switch (mode) {
    case FeedbackMode::kExplicit:
      if (v < 1.0 || v != std::floor(v) || v > 1e6)
        throw DataError("explicit rating must be an integer level >= 1 at " + where());
      break;
    case FeedbackMode::kImplicit:
      if (v != 1.0) throw DataError("implicit rating must be 1 at " + where());
      break;
    case FeedbackMode::kReal: break;
  }
}

}  // namespace

RatingsMatrix RatingsMatrix::from_triples(std::size_t n_users, std::size_t n_items,
                                          std::vector<Triple> triples, FeedbackMode mode,
                                          std::vector<std::int64_t> user_ids,
                                          std::vector<std::int64_t> item_ids,
                                          std::vector<Triple> observed_zeros) {
  RatingsMatrix r;
  r.n_users_ = n_users;
  r.n_items_ = n_items;
  r.mode_ = mode;
  r.user_ids_ = user_ids.empty() ? identity_ids(n_users) : std::move(user_ids);
  r.item_ids_ = item_ids.empty() ? identity_ids(n_items) : std::move(item_ids);
  if (r.user_ids_.size() != n_users || r.item_ids_.size() != n_items)
    throw DataError("id table size does not match matrix shape");

  auto id_str = [&](const Triple& t) {
    return "(user " + std::to_string(r.user_ids_[t.user]) + ", item " +
           std::to_string(r.item_ids_[t.item]) + ")";
  };
  auto check_range = [&](const Triple& t) {
    if (t.user < 0 || static_cast<std::size_t>(t.user) >= n_users || t.item < 0 ||
        static_cast<std::size_t>(t.item) >= n_items)
      throw DataError("index out of range: user " + std::to_string(t.user) + ", item " +
                      std::to_string(t.item));
  };
  auto by_pos = [](const Triple& a, const Triple& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  };

  for (const auto& t : triples) {
    check_range(t);
    check_value(t.value, mode, t);
  }
  std::sort(triples.begin(), triples.end(), by_pos);
  for (std::size_t p = 1; p < triples.size(); ++p)
    if (triples[p].user == triples[p - 1].user && triples[p].item == triples[p - 1].item)
      throw DataError("duplicate rating for " + id_str(triples[p]));

  if (!observed_zeros.empty() && mode != FeedbackMode::kImplicit)
    throw DataError("observed zeros are only meaningful in implicit mode");
  for (const auto& t : observed_zeros) check_range(t);
  std::sort(observed_zeros.begin(), observed_zeros.end(), by_pos);
  for (std::size_t p = 1; p < observed_zeros.size(); ++p)
    if (observed_zeros[p].user == observed_zeros[p - 1].user &&
        observed_zeros[p].item == observed_zeros[p - 1].item)
      throw DataError("duplicate rating for " + id_str(observed_zeros[p]));
  {
    // A pair cannot be both a 1 and an observed 0.
    std::size_t a = 0;
    for (const auto& z : observed_zeros) {
      while (a < triples.size() && by_pos(triples[a], z)) ++a;
      if (a < triples.size() && triples[a].user == z.user && triples[a].item == z.item)
        throw DataError("duplicate rating for " + id_str(z));
    }
  }

  r.user_ptr_.assign(n_users + 1, 0);
  r.item_ptr_.assign(n_items + 1, 0);
  for (const auto& t : triples) {
    ++r.user_ptr_[t.user + 1];
    ++r.item_ptr_[t.item + 1];
  }
  std::partial_sum(r.user_ptr_.begin(), r.user_ptr_.end(), r.user_ptr_.begin());
  std::partial_sum(r.item_ptr_.begin(), r.item_ptr_.end(), r.item_ptr_.begin());
  r.user_entries_.resize(triples.size());
  r.item_entries_.resize(triples.size());
  std::vector<std::size_t> item_fill(r.item_ptr_.begin(), r.item_ptr_.end() - 1);
  for (std::size_t p = 0; p < triples.size(); ++p) {
    const auto& t = triples[p];
    r.user_entries_[p] = {t.item, t.value};
    // Triples are sorted by (user, item), so item columns fill in user order.
    r.item_entries_[item_fill[t.item]++] = {t.user, t.value};
  }

  r.zero_ptr_.assign(n_users + 1, 0);
  for (const auto& t : observed_zeros) ++r.zero_ptr_[t.user + 1];
  std::partial_sum(r.zero_ptr_.begin(), r.zero_ptr_.end(), r.zero_ptr_.begin());
  r.zero_items_.reserve(observed_zeros.size());
  for (const auto& t : observed_zeros) r.zero_items_.push_back(t.item);

  switch (mode) {
    case FeedbackMode::kImplicit: r.levels_ = 2; break;
    case FeedbackMode::kExplicit: {
      double mx = 0.0;
      for (const auto& t : triples) mx = std::max(mx, t.value);
      r.levels_ = static_cast<int>(mx);
      break;
    }
    case FeedbackMode::kReal: r.levels_ = 0; break;
  }
  return r;
}

std::span<const std::int32_t> RatingsMatrix::observed_zeros(std::size_t i) const {
  if (zero_ptr_.empty()) return {};
  return {zero_items_.data() + zero_ptr_[i], zero_ptr_[i + 1] - zero_ptr_[i]};
}

const double* RatingsMatrix::find(std::size_t i, std::size_t j) const {
  auto row = user(i);
  auto it = std::lower_bound(row.begin(), row.end(), static_cast<std::int32_t>(j),
                             [](const Rating& e, std::int32_t idx) { return e.index < idx; });
  if (it == row.end() || it->index != static_cast<std::int32_t>(j)) return nullptr;
  return &it->value;
}

std::vector<Triple> RatingsMatrix::triples() const {
  std::vector<Triple> out;
  out.reserve(nnz());
  for (std::size_t i = 0; i < n_users_; ++i)
    for (const auto& e : user(i)) out.push_back({static_cast<std::int32_t>(i), e.index, e.value});
  return out;
}

std::vector<Triple> RatingsMatrix::zero_triples() const {
  std::vector<Triple> out;
  out.reserve(zero_items_.size());
  for (std::size_t i = 0; i < n_users_; ++i)
    for (auto j : observed_zeros(i)) out.push_back({static_cast<std::int32_t>(i), j, 0.0});
  return out;
}

RatingsMatrix RatingsMatrix::with_triples(std::vector<Triple> triples,
                                          std::vector<Triple> observed_zeros) const {
  return from_triples(n_users_, n_items_, std::move(triples), mode_, user_ids_, item_ids_,
                      std::move(observed_zeros));
}

// ---------------------------------------------------------------------------
// text I/O

RatingsMatrix load_ratings(std::istream& in, FeedbackMode mode,
                           const std::vector<std::int64_t>* user_ids,
                           const std::vector<std::int64_t>* item_ids) {
  struct Raw {
    std::int64_t user, item;
    double value;
    std::size_t line;
  };
  std::vector<Raw> raw;
  std::optional<detail::Separator> sep;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_skippable(line)) continue;
    if (!sep) sep = detail::detect_separator(detail::trim(line));
    auto fields = detail::split_fields(line, *sep);
    if (fields.size() < 3)
      throw ParseError("expected 'user item rating', got " + std::to_string(fields.size()) +
                           " field(s)",
                       line_no);
    Raw r{detail::require_number<std::int64_t>(fields[0], line_no, "user id"),
          detail::require_number<std::int64_t>(fields[1], line_no, "item id"),
          detail::require_number<double>(fields[2], line_no, "rating"), line_no};
    if (r.user < 0 || r.item < 0) throw ParseError("ids must be non-negative", line_no);
    raw.push_back(r);
  }

  auto build_index = [](const std::vector<std::int64_t>& ids) {
    std::unordered_map<std::int64_t, std::int32_t> idx;
    idx.reserve(ids.size());
    for (std::size_t p = 0; p < ids.size(); ++p) idx.emplace(ids[p], static_cast<std::int32_t>(p));
    return idx;
  };
  auto collect = [&](auto get) {
    std::vector<std::int64_t> ids;
    ids.reserve(raw.size());
    for (const auto& r : raw) ids.push_back(get(r));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  };
  std::vector<std::int64_t> uids =
      user_ids ? *user_ids : collect([](const Raw& r) { return r.user; });
  std::vector<std::int64_t> iids =
      item_ids ? *item_ids : collect([](const Raw& r) { return r.item; });
  auto uidx = build_index(uids);
  auto iidx = build_index(iids);

  std::vector<Triple> triples;
  std::vector<Triple> zeros;
  std::map<std::pair<std::int32_t, std::int32_t>, std::size_t> seen_lines;
  triples.reserve(raw.size());
  for (const auto& r : raw) {
    auto u = uidx.find(r.user);
    auto it = iidx.find(r.item);
    if (u == uidx.end()) throw ParseError("unknown user id " + std::to_string(r.user), r.line);
    if (it == iidx.end()) throw ParseError("unknown item id " + std::to_string(r.item), r.line);
    Triple t{u->second, it->second, r.value};
    if (mode == FeedbackMode::kImplicit) {
      if (r.value == 0.0) {
        zeros.push_back(t);
        continue;
      }
      if (r.value != 1.0) throw ParseError("implicit rating must be 0 or 1", r.line);
    } else if (mode == FeedbackMode::kExplicit) {
      if (r.value < 1.0 || r.value != std::floor(r.value))
        throw ParseError("explicit rating must be an integer level >= 1", r.line);
    }
    triples.push_back(t);
  }
  const std::size_t n_users = uids.size(), n_items = iids.size();
  return RatingsMatrix::from_triples(n_users, n_items, std::move(triples), mode, std::move(uids),
                                     std::move(iids), std::move(zeros));
}

RatingsMatrix load_ratings_file(const std::string& path, FeedbackMode mode,
                                const std::vector<std::int64_t>* user_ids,
                                const std::vector<std::int64_t>* item_ids) {
  auto in = detail::open_input(path);
  return load_ratings(in, mode, user_ids, item_ids);
}

void save_ratings(std::ostream& out, const RatingsMatrix& r) {
  const auto& uids = r.user_ids();
  const auto& iids = r.item_ids();
  for (std::size_t i = 0; i < r.n_users(); ++i) {
    // Merge ones and observed zeros so lines stay sorted by item.
    auto row = r.user(i);
    auto zeros = r.observed_zeros(i);
    std::size_t a = 0, b = 0;
    while (a < row.size() || b < zeros.size()) {
      bool take_row = b >= zeros.size() || (a < row.size() && row[a].index < zeros[b]);
      std::int32_t item = take_row ? row[a].index : zeros[b];
      double value = take_row ? row[a].value : 0.0;
      out << uids[i] << '\t' << iids[item] << '\t' << detail::format_double(value) << '\n';
      take_row ? ++a : ++b;
    }
  }
}

void save_ratings_file(const std::string& path, const RatingsMatrix& r) {
  auto out = detail::open_output(path);
  save_ratings(out, r);
}

void save_id_map(std::ostream& out, const std::vector<std::int64_t>& ids) {
  for (std::size_t p = 0; p < ids.size(); ++p) out << ids[p] << ' ' << p << '\n';
}

std::vector<std::int64_t> load_id_map(std::istream& in) {
  std::vector<std::pair<std::size_t, std::int64_t>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_skippable(line)) continue;
    auto f = detail::split_fields(line, detail::Separator::kSpace);
    if (f.size() != 2) throw ParseError("expected 'external_id internal_index'", line_no);
    rows.emplace_back(detail::require_number<std::size_t>(f[1], line_no, "index"),
                      detail::require_number<std::int64_t>(f[0], line_no, "id"));
  }
  std::vector<std::int64_t> ids(rows.size(), -1);
  for (const auto& [idx, id] : rows) {
    if (idx >= ids.size() || ids[idx] != -1) throw DataError("id map indices are not dense");
    ids[idx] = id;
  }
  return ids;
}

// ---------------------------------------------------------------------------
// splitting

TrainTestSplit split_fixed_count(const RatingsMatrix& r, std::size_t n_train,
                                 std::size_t min_test, std::uint64_t seed) {
  if (n_train < 1 || min_test < 1) throw ConfigError("n_train and min_test must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Triple> train, test;
  std::size_t survivors = 0;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < r.n_users(); ++i) {
    auto row = r.user(i);
    if (row.size() < n_train + min_test) continue;
    ++survivors;
    order.resize(row.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: the first n_train positions become the train draw.
    for (std::size_t p = 0; p < n_train; ++p) {
      std::uniform_int_distribution<std::size_t> pick(p, row.size() - 1);
      std::swap(order[p], order[pick(rng)]);
    }
    std::vector<bool> is_train(row.size(), false);
    for (std::size_t p = 0; p < n_train; ++p) is_train[order[p]] = true;
    for (std::size_t p = 0; p < row.size(); ++p) {
      Triple t{static_cast<std::int32_t>(i), row[p].index, row[p].value};
      (is_train[p] ? train : test).push_back(t);
    }
  }
  if (survivors == 0)
    throw DataError("empty split: no user has at least " + std::to_string(n_train + min_test) +
                    " ratings");
  TrainTestSplit s;
  s.train = r.with_triples(std::move(train));
  s.test = r.with_triples(std::move(test));
  s.seed = seed;
  s.per_user_train_count = n_train;
  s.min_test = min_test;
  return s;
}

void save_split(const std::string& dir, const TrainTestSplit& split) {
  std::filesystem::create_directories(dir);
  save_ratings_file(dir + "/train.txt", split.train);
  save_ratings_file(dir + "/test.txt", split.test);
  {
    auto out = detail::open_output(dir + "/users.map");
    save_id_map(out, split.train.user_ids());
  }
  {
    auto out = detail::open_output(dir + "/items.map");
    save_id_map(out, split.train.item_ids());
  }
  auto out = detail::open_output(dir + "/manifest.txt");
  out << "# train/test split manifest\n"
      << "seed=" << split.seed << '\n'
      << "per_user_train_count=" << split.per_user_train_count << '\n'
      << "min_test=" << split.min_test << '\n'
      << "mode=" << to_string(split.train.mode()) << '\n'
      << "n_users=" << split.train.n_users() << '\n'
      << "n_items=" << split.train.n_items() << '\n'
      << "train_nnz=" << split.train.nnz() << '\n'
      << "test_nnz=" << split.test.nnz() << '\n';
}

TrainTestSplit load_split(const std::string& dir) {
  std::map<std::string, std::string> kv;
  {
    auto in = detail::open_input(dir + "/manifest.txt");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::is_skippable(line)) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
      kv[std::string(detail::trim(line.substr(0, eq)))] =
          std::string(detail::trim(line.substr(eq + 1)));
    }
  }
  auto get = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError("split manifest missing '" + key + "'");
    return it->second;
  };
  FeedbackMode mode = parse_feedback_mode(get("mode"));
  std::vector<std::int64_t> uids, iids;
  {
    auto in = detail::open_input(dir + "/users.map");
    uids = load_id_map(in);
  }
  {
    auto in = detail::open_input(dir + "/items.map");
    iids = load_id_map(in);
  }
  TrainTestSplit s;
  s.train = load_ratings_file(dir + "/train.txt", mode, &uids, &iids);
  s.test = load_ratings_file(dir + "/test.txt", mode, &uids, &iids);
  s.seed = std::stoull(get("seed"));
  s.per_user_train_count = std::stoull(get("per_user_train_count"));
  s.min_test = std::stoull(get("min_test"));
  return s;
}

RatingsMatrix binarize(const RatingsMatrix& r, int threshold) {
  if (r.mode() != FeedbackMode::kExplicit) throw DataError("binarize requires explicit ratings");
  if (threshold < 1 || threshold > r.levels())
    throw ConfigError("binarize threshold " + std::to_string(threshold) + " outside 1.." +
                      std::to_string(r.levels()));
  std::vector<Triple> ones, zeros;
  for (const auto& t : r.triples()) {
    if (t.value >= threshold)
      ones.push_back({t.user, t.item, 1.0});
    else
      zeros.push_back({t.user, t.item, 0.0});
  }
  return RatingsMatrix::from_triples(r.n_users(), r.n_items(), std::move(ones),
                                     FeedbackMode::kImplicit, r.user_ids(), r.item_ids(),
                                     std::move(zeros));
}

std::vector<Comparison> enumerate_comparisons(const RatingsMatrix& r, std::size_t user) {
  std::vector<Comparison> out;
  auto row = r.user(user);
  for (std::size_t a = 0; a < row.size(); ++a)
    for (std::size_t b = a + 1; b < row.size(); ++b) {
      if (row[a].value == row[b].value) continue;
      if (row[a].value > row[b].value)
        out.push_back({row[a].index, row[b].index, 1});
      else
        out.push_back({row[b].index, row[a].index, 1});
    }
  return out;
}

}  // namespace cfrank
