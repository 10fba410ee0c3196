#include "cfrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "cfrank/error.hpp"
#include "cfrank/fenwick.hpp"
#include "text_util.hpp"

namespace cfrank {

namespace {

// Strict total order: higher score first, then lower item index.
struct RankOrder {
  std::span<const double> scores;
  bool operator()(std::int32_t a, std::int32_t b) const {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  }
};

double relevance(const double* value, double threshold) {
  return value && *value >= threshold ? 1.0 : 0.0;
}

std::size_t count_relevant(const RatingsMatrix& test, std::size_t i, double threshold) {
  std::size_t n = 0;
  for (const auto& e : test.user(i))
    if (e.value >= threshold) ++n;
  return n;
}

void require_k(std::size_t k) {
  if (k < 1) throw ConfigError("cut-off k must be >= 1");
}

void require_shapes(const FactorModel& model, const RatingsMatrix& r) {
  if (model.n_users() < r.n_users() || model.n_items() < r.n_items())
    throw DataError("model is smaller than the evaluation data");
}

double dcg_gain(double rating) { return std::exp2(rating) - 1.0; }
double discount(std::size_t position) { return std::log2(static_cast<double>(position) + 1.0); }

}  // namespace

std::vector<std::int32_t> top_k(std::span<const double> scores,
                                std::vector<std::int32_t> candidates, std::size_t k) {
  RankOrder order{scores};
  if (k == 0 || k >= candidates.size()) {
    std::sort(candidates.begin(), candidates.end(), order);
    return candidates;
  }
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), order);
  candidates.resize(k);
  return candidates;
}

std::vector<std::int32_t> unrated_candidates(const RatingsMatrix& train, std::size_t user) {
  std::vector<std::int32_t> out;
  out.reserve(train.n_items());
  auto row = user < train.n_users() ? train.user(user) : std::span<const Rating>{};
  std::size_t p = 0;
  for (std::int32_t j = 0; j < static_cast<std::int32_t>(train.n_items()); ++j) {
    while (p < row.size() && row[p].index < j) ++p;
    if (p < row.size() && row[p].index == j) continue;
    out.push_back(j);
  }
  return out;
}

double ndcg_at_k(const FactorModel& model, const RatingsMatrix& test, std::size_t k) {
  require_k(k);
  require_shapes(model, test);
  double total = 0.0;
  std::size_t users = 0;
  std::vector<double> scores(test.n_items(), 0.0);
  for (std::size_t i = 0; i < test.n_users(); ++i) {
    auto row = test.user(i);
    if (row.empty()) continue;
    ++users;
    std::vector<std::int32_t> items;
    std::vector<double> ratings;
    for (const auto& e : row) {
      items.push_back(e.index);
      ratings.push_back(e.value);
      scores[e.index] = model.predict(i, e.index);
    }
    auto ranked = top_k(scores, items, k);
    double dcg = 0.0;
    for (std::size_t l = 0; l < ranked.size(); ++l)
      dcg += dcg_gain(*test.find(i, ranked[l])) / discount(l + 1);
    std::size_t cut = std::min(k, ratings.size());
    std::partial_sort(ratings.begin(), ratings.begin() + static_cast<std::ptrdiff_t>(cut),
                      ratings.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t l = 0; l < cut; ++l) idcg += dcg_gain(ratings[l]) / discount(l + 1);
    // All-zero gains (e.g. implicit zeros) make every order ideal.
    total += idcg > 0.0 ? dcg / idcg : 1.0;
  }
  return users ? total / static_cast<double>(users) : 0.0;
}

double precision_at_k_explicit(const FactorModel& model, const RatingsMatrix& train,
                               const RatingsMatrix& test, std::size_t k, double threshold) {
  require_k(k);
  require_shapes(model, test);
  std::size_t hits = 0, users = 0;
  for (std::size_t i = 0; i < test.n_users(); ++i) {
    if (test.user(i).empty()) continue;
    ++users;
    auto scores = model.scores(i);
    auto ranked = top_k(scores, unrated_candidates(train, i), k);
    for (auto j : ranked) hits += static_cast<std::size_t>(relevance(test.find(i, j), threshold));
  }
  return users ? static_cast<double>(hits) / static_cast<double>(users * k) : 0.0;
}

double precision_at_k_implicit(const FactorModel& model, const RatingsMatrix& train,
                               const RatingsMatrix& test, std::size_t k) {
  return precision_at_k_explicit(model, train, test, k, 1.0);
}

double pairwise_error(const FactorModel& model, const ComparisonSet& test) {
  if (test.size() == 0) throw DataError("pairwise error of an empty comparison set");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.n_users(); ++i)
    for (const auto& c : test.user(i)) {
      double margin = c.y * (model.predict(i, c.j) - model.predict(i, c.k));
      if (margin <= 0.0) ++wrong;
    }
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

double pairwise_error(const FactorModel& model, const RatingsMatrix& test) {
  require_shapes(model, test);
  std::size_t wrong = 0, total = 0;
  std::vector<double> levels;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < test.n_users(); ++i) {
    auto row = test.user(i);
    const std::size_t d = row.size();
    if (d < 2) continue;
    // Dense level index per entry.
    levels.clear();
    for (const auto& e : row) levels.push_back(e.value);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::vector<std::size_t> level(d);
    std::vector<std::size_t> per_level(levels.size(), 0);
    std::vector<double> score(d);
    for (std::size_t p = 0; p < d; ++p) {
      level[p] = static_cast<std::size_t>(
          std::lower_bound(levels.begin(), levels.end(), row[p].value) - levels.begin());
      ++per_level[level[p]];
      score[p] = model.predict(i, row[p].index);
    }
    std::size_t same = 0;
    for (auto c : per_level) same += c * (c - 1) / 2;
    total += d * (d - 1) / 2 - same;

    // Scan by descending score; a pair (hi, lo) is wrong when lo's score is
    // >= hi's score, i.e. lo is already inserted when hi's group is queried.
    order.resize(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    FenwickTree<double> seen(levels.size());
    std::size_t g = 0;
    while (g < d) {
      std::size_t h = g;
      while (h < d && score[order[h]] == score[order[g]]) ++h;
      for (std::size_t p = g; p < h; ++p) seen.add(level[order[p]], 1.0);
      for (std::size_t p = g; p < h; ++p)
        wrong += static_cast<std::size_t>(seen.prefix(level[order[p]]));
      g = h;
    }
  }
  if (total == 0) throw DataError("pairwise error of an empty comparison set");
  return static_cast<double>(wrong) / static_cast<double>(total);
}

double map_score(const FactorModel& model, const RatingsMatrix& train, const RatingsMatrix& test,
                 double threshold) {
  require_shapes(model, test);
  double total = 0.0;
  std::size_t users = 0;
  for (std::size_t i = 0; i < test.n_users(); ++i) {
    if (test.user(i).empty()) continue;
    ++users;
    std::size_t relevant = count_relevant(test, i, threshold);
    if (relevant == 0) continue;
    auto scores = model.scores(i);
    auto ranked = top_k(scores, unrated_candidates(train, i), 0);
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t l = 0; l < ranked.size() && hits < relevant; ++l)
      if (relevance(test.find(i, ranked[l]), threshold) > 0.0) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(l + 1);
      }
    total += ap / static_cast<double>(relevant);
  }
  return users ? total / static_cast<double>(users) : 0.0;
}

double recall_at_k(const FactorModel& model, const RatingsMatrix& train, const RatingsMatrix& test,
                   std::size_t k, double threshold) {
  require_k(k);
  require_shapes(model, test);
  double total = 0.0;
  std::size_t users = 0;
  for (std::size_t i = 0; i < test.n_users(); ++i) {
    if (test.user(i).empty()) continue;
    ++users;
    std::size_t relevant = count_relevant(test, i, threshold);
    if (relevant == 0) continue;
    auto scores = model.scores(i);
    auto ranked = top_k(scores, unrated_candidates(train, i), k);
    std::size_t hits = 0;
    for (auto j : ranked) hits += static_cast<std::size_t>(relevance(test.find(i, j), threshold));
    total += static_cast<double>(hits) / static_cast<double>(relevant);
  }
  return users ? total / static_cast<double>(users) : 0.0;
}

double hlu(const FactorModel& model, const RatingsMatrix& train, const RatingsMatrix& test,
           double halflife, double neutral, std::size_t k) {
  if (!(halflife > 1.0)) throw ConfigError("half-life must be > 1");
  require_shapes(model, test);
  double total = 0.0;
  std::size_t users = 0;
  for (std::size_t i = 0; i < test.n_users(); ++i) {
    if (test.user(i).empty()) continue;
    ++users;
    auto scores = model.scores(i);
    auto ranked = top_k(scores, unrated_candidates(train, i), k);
    double u = 0.0;
    for (std::size_t l = 0; l < ranked.size(); ++l) {
      const double* v = test.find(i, ranked[l]);
      double gain = std::max((v ? *v : 0.0) - neutral, 0.0);
      if (gain > 0.0) u += gain / std::exp2(static_cast<double>(l) / (halflife - 1.0));
    }
    total += u;
  }
  return users ? total / static_cast<double>(users) : 0.0;
}

double rmse(const FactorModel& model, const RatingsMatrix& test) {
  require_shapes(model, test);
  if (test.nnz() == 0) throw DataError("rmse of an empty test set");
  double sse = 0.0;
  for (std::size_t i = 0; i < test.n_users(); ++i)
    for (const auto& e : test.user(i)) {
      double err = e.value - model.predict(i, e.index);
      sse += err * err;
    }
  return std::sqrt(sse / static_cast<double>(test.nnz()));
}

// ---------------------------------------------------------------------------

namespace reference {

namespace {

// Full ranking by an explicit comparison sort over (score, index) pairs.
std::vector<std::int32_t> full_ranking(const std::vector<double>& scores,
                                       const std::vector<std::int32_t>& candidates) {
  std::vector<std::pair<double, std::int32_t>> keyed;
  for (auto j : candidates) keyed.emplace_back(scores[j], j);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  std::vector<std::int32_t> out;
  for (const auto& [s, j] : keyed) out.push_back(j);
  return out;
}

// 1-based rank of `item` among candidates, by counting who beats it.
std::size_t rank_of(const std::vector<double>& scores, const std::vector<std::int32_t>& candidates,
                    std::int32_t item) {
  std::size_t better = 0;
  for (auto j : candidates)
    if (scores[j] > scores[item] || (scores[j] == scores[item] && j < item)) ++better;
  return better + 1;
}

}  // namespace

double ndcg_at_k(const FactorModel& model, const RatingsMatrix& test, std::size_t k) {
  double total = 0.0;
  std::size_t users = 0;
  for (std::size_t i = 0; i < test.n_users(); ++i) {
    auto row = test.user(i);
    if (row.empty()) continue;
    ++users;
    auto scores = model.scores(i);
    std::vector<std::int32_t> items;
    std::vector<double> ideal;
    for (const auto& e : row) {
      items.push_back(e.index);
      ideal.push_back(e.value);
    }
    auto ranked = full_ranking(scores, items);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double dcg = 0.0, idcg = 0.0;
    for (std::size_t l = 0; l < ranked.size() && l < k; ++l) {
      dcg += (std::pow(2.0, *test.find(i, ranked[l])) - 1.0) / std::log2(l + 2.0);
      idcg += (std::pow(2.0, ideal[l]) - 1.0) / std::log2(l + 2.0);
    }
    total += idcg > 0.0 ? dcg / idcg : 1.0;
  }
  return users ? total / static_cast<double>(users) : 0.0;
}

double precision_at_k(const FactorModel& model, const RatingsMatrix& train,
                      const RatingsMatrix& test, std::size_t k, double threshold) {
  double hits = 0.0;
  std::size_t users = 0;
  for (std::size_t i = 0; i < test.n_users(); ++i) {
    if (test.user(i).empty()) continue;
    ++users;
    auto ranked = full_ranking(model.scores(i), unrated_candidates(train, i));
    for (std::size_t l = 0; l < ranked.size() && l < k; ++l) {
      const double* v = test.find(i, ranked[l]);
      if (v && *v >= threshold) hits += 1.0;
    }
  }
  return users ? hits / static_cast<double>(users * k) : 0.0;
}

double pairwise_error(const FactorModel& model, const RatingsMatrix& test) {
  std::size_t wrong = 0, total = 0;
  for (std::size_t i = 0; i < test.n_users(); ++i)
    for (const auto& c : enumerate_comparisons(test, i)) {
      ++total;
      if (model.predict(i, c.j) <= model.predict(i, c.k)) ++wrong;
    }
  if (total == 0) throw DataError("pairwise error of an empty comparison set");
  return static_cast<double>(wrong) / static_cast<double>(total);
}

double map_score(const FactorModel& model, const RatingsMatrix& train, const RatingsMatrix& test,
                 double threshold) {
  double total = 0.0;
  std::size_t users = 0;
  for (std::size_t i = 0; i < test.n_users(); ++i) {
    if (test.user(i).empty()) continue;
    ++users;
    auto scores = model.scores(i);
    auto candidates = unrated_candidates(train, i);
    std::vector<std::size_t> ranks;
    for (const auto& e : test.user(i))
      if (e.value >= threshold && !train.find(i, e.index))
        ranks.push_back(rank_of(scores, candidates, e.index));
    std::size_t relevant = 0;
    for (const auto& e : test.user(i)) relevant += e.value >= threshold;
    if (relevant == 0) continue;
    std::sort(ranks.begin(), ranks.end());
    double ap = 0.0;
    for (std::size_t h = 0; h < ranks.size(); ++h)
      ap += static_cast<double>(h + 1) / static_cast<double>(ranks[h]);
    total += ap / static_cast<double>(relevant);
  }
  return users ? total / static_cast<double>(users) : 0.0;
}

double recall_at_k(const FactorModel& model, const RatingsMatrix& train,
                   const RatingsMatrix& test, std::size_t k, double threshold) {
  double total = 0.0;
  std::size_t users = 0;
  for (std::size_t i = 0; i < test.n_users(); ++i) {
    if (test.user(i).empty()) continue;
    ++users;
    auto scores = model.scores(i);
    auto candidates = unrated_candidates(train, i);
    std::size_t relevant = 0, hits = 0;
    for (const auto& e : test.user(i)) {
      if (e.value < threshold) continue;
      ++relevant;
      if (!train.find(i, e.index) && rank_of(scores, candidates, e.index) <= k) ++hits;
    }
    if (relevant) total += static_cast<double>(hits) / static_cast<double>(relevant);
  }
  return users ? total / static_cast<double>(users) : 0.0;
}

double hlu(const FactorModel& model, const RatingsMatrix& train, const RatingsMatrix& test,
           double halflife, double neutral, std::size_t k) {
  double total = 0.0;
  std::size_t users = 0;
  for (std::size_t i = 0; i < test.n_users(); ++i) {
    if (test.user(i).empty()) continue;
    ++users;
    auto scores = model.scores(i);
    auto candidates = unrated_candidates(train, i);
    for (const auto& e : test.user(i)) {
      if (train.find(i, e.index)) continue;
      double gain = std::max(e.value - neutral, 0.0);
      if (gain <= 0.0) continue;
      std::size_t l = rank_of(scores, candidates, e.index);
      if (k == 0 || l <= k) total += gain / std::pow(2.0, (static_cast<double>(l) - 1.0) / (halflife - 1.0));
    }
  }
  return users ? total / static_cast<double>(users) : 0.0;
}

double rmse(const FactorModel& model, const RatingsMatrix& test) {
  long double sse = 0.0L;
  auto triples = test.triples();
  for (const auto& t : triples) {
    long double err = t.value - model.predict(t.user, t.item);
    sse += err * err;
  }
  return static_cast<double>(std::sqrt(sse / static_cast<long double>(triples.size())));
}

}  // namespace reference

void write_metrics_report(std::ostream& out, const std::vector<MetricLine>& lines) {
  for (const auto& l : lines)
    out << l.name << '\t' << l.k << '\t' << detail::format_double(l.value) << '\n';
}

std::vector<MetricLine> read_metrics_report(std::istream& in) {
  std::vector<MetricLine> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_skippable(line)) continue;
    auto f = detail::split_fields(line, detail::Separator::kTab);
    if (f.size() != 3) throw ParseError("expected 'metric k value'", line_no);
    lines.push_back({std::string(f[0]), detail::require_number<std::size_t>(f[1], line_no, "k"),
                     detail::require_number<double>(f[2], line_no, "value")});
  }
  return lines;
}

}  // namespace cfrank
