#pragma once

// Ranking and rating metrics. Score ties are broken by ascending item index
// everywhere, so every metric is a deterministic function of the scores.
//
// Evaluated users are those with at least one test entry. Candidate sets:
//   - NDCG ranks only the user's test items;
//   - precision/recall/MAP/HLU rank every item the user did not have in
//     training (observed and unobserved alike).

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cfrank/comparisons.hpp"
#include "cfrank/factor_model.hpp"
#include "cfrank/ratings.hpp"

namespace cfrank {

/// Top-k of `candidates` by descending score (ties: ascending item index).
/// k = 0 or k >= |candidates| ranks everything.
std::vector<std::int32_t> top_k(std::span<const double> scores,
                                std::vector<std::int32_t> candidates, std::size_t k);

/// Items user i did not have in training.
std::vector<std::int32_t> unrated_candidates(const RatingsMatrix& train, std::size_t user);

/// Mean over users of DCG@k / IDCG@k with gain 2^rating - 1 and discount
/// log2(position + 1). Throws ConfigError for k < 1.
double ndcg_at_k(const FactorModel& model, const RatingsMatrix& test, std::size_t k);

/// sum_i |hits in top k| / (n_eval * k); a test entry is a hit when it is a
/// stored 1. Users with fewer than k candidates keep the k denominator.
double precision_at_k_implicit(const FactorModel& model, const RatingsMatrix& train,
                               const RatingsMatrix& test, std::size_t k);
/// As above with relevance = test rating >= threshold.
double precision_at_k_explicit(const FactorModel& model, const RatingsMatrix& train,
                               const RatingsMatrix& test, std::size_t k, double threshold = 4.0);

/// Fraction of comparisons the model orders wrongly; equal scores count as
/// wrong.
double pairwise_error(const FactorModel& model, const ComparisonSet& test);
/// Same metric over the comparisons induced by test ratings, computed per
/// user by sorting plus a Fenwick count in O(d log d).
double pairwise_error(const FactorModel& model, const RatingsMatrix& test);

/// Relevance for MAP / recall / HLU: test value >= threshold (1 for implicit data).
double map_score(const FactorModel& model, const RatingsMatrix& train, const RatingsMatrix& test,
                 double threshold = 1.0);
double recall_at_k(const FactorModel& model, const RatingsMatrix& train,
                   const RatingsMatrix& test, std::size_t k, double threshold = 1.0);

/// Half-life utility: mean over users of
/// sum_l max(R_{i,pi_l} - neutral, 0) / 2^((l - 1) / (halflife - 1)),
/// l the rank position, R = 0 for items absent from test. k = 0 uses the
/// whole candidate list. Throws ConfigError unless halflife > 1.
double hlu(const FactorModel& model, const RatingsMatrix& train, const RatingsMatrix& test,
           double halflife, double neutral, std::size_t k = 0);

double rmse(const FactorModel& model, const RatingsMatrix& test);

/// Quadratic / full-sort reference implementations of the metrics above.
namespace reference {
double ndcg_at_k(const FactorModel& model, const RatingsMatrix& test, std::size_t k);
double precision_at_k(const FactorModel& model, const RatingsMatrix& train,
                      const RatingsMatrix& test, std::size_t k, double threshold);
double pairwise_error(const FactorModel& model, const RatingsMatrix& test);
double map_score(const FactorModel& model, const RatingsMatrix& train, const RatingsMatrix& test,
                 double threshold);
double recall_at_k(const FactorModel& model, const RatingsMatrix& train,
                   const RatingsMatrix& test, std::size_t k, double threshold);
double hlu(const FactorModel& model, const RatingsMatrix& train, const RatingsMatrix& test,
           double halflife, double neutral, std::size_t k);
double rmse(const FactorModel& model, const RatingsMatrix& test);
}  // namespace reference

struct MetricLine {
  std::string name;
  std::size_t k = 0;
  double value = 0.0;
};

/// Tab-separated "metric k value" lines in the given order.
void write_metrics_report(std::ostream& out, const std::vector<MetricLine>& lines);
std::vector<MetricLine> read_metrics_report(std::istream& in);

}  // namespace cfrank
