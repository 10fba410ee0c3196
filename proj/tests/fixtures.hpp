#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "cfrank/graph.hpp"
#include "cfrank/matrix.hpp"
#include "cfrank/ratings.hpp"

namespace fixture {

using cfrank::FeedbackMode;
using cfrank::Matrix;
using cfrank::RatingsMatrix;
using cfrank::Triple;

inline Matrix gaussian(std::size_t rows, std::size_t cols, double sd, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  cfrank::fill_gaussian(m, sd, rng);
  return m;
}

// Each user rates between lo and hi distinct items, values uniform on 1..levels.
inline RatingsMatrix random_explicit(std::size_t n, std::size_t m, int levels, std::size_t lo,
                                     std::size_t hi, std::mt19937_64& rng) {
  std::vector<Triple> t;
  std::vector<std::int32_t> pool(m);
  std::iota(pool.begin(), pool.end(), 0);
  std::uniform_int_distribution<int> level(1, levels);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> deg(lo, std::min(hi, m));
    std::size_t d = deg(rng);
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t p = 0; p < d; ++p)
      t.push_back({static_cast<std::int32_t>(i), pool[p], static_cast<double>(level(rng))});
  }
  return RatingsMatrix::from_triples(n, m, std::move(t), FeedbackMode::kExplicit);
}

inline RatingsMatrix random_real(std::size_t n, std::size_t m, double density,
                                 std::mt19937_64& rng) {
  std::vector<Triple> t;
  std::bernoulli_distribution coin(density);
  std::normal_distribution<double> val(0.0, 2.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (coin(rng)) t.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), val(rng)});
  return RatingsMatrix::from_triples(n, m, std::move(t), FeedbackMode::kReal);
}

inline RatingsMatrix random_implicit(std::size_t n, std::size_t m, double density,
                                     double zero_density, std::mt19937_64& rng) {
  std::vector<Triple> ones, zeros;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double x = unif(rng);
      Triple t{static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), 1.0};
      if (x < density)
        ones.push_back(t);
      else if (x < density + zero_density)
        zeros.push_back({t.user, t.item, 0.0});
    }
  return RatingsMatrix::from_triples(n, m, std::move(ones), FeedbackMode::kImplicit, {}, {},
                                     std::move(zeros));
}

inline cfrank::Graph random_graph(std::size_t n, double p, std::mt19937_64& rng,
                                  bool weighted = false) {
  std::vector<cfrank::Edge> e;
  std::bernoulli_distribution coin(p);
  std::uniform_real_distribution<double> w(0.5, 2.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (coin(rng))
        e.push_back({static_cast<std::int32_t>(a), static_cast<std::int32_t>(b),
                     weighted ? w(rng) : 1.0});
  return cfrank::Graph::from_edges(n, std::move(e));
}

// Explicit 1..5 ratings shaped like the 100k Movielens release: 943 users,
// 1682 items, popularity-skewed item choice and heavy-tailed user activity.
// Values come from a rank-10 model with user/item offsets and noise.
inline RatingsMatrix movielens_like(std::uint64_t seed) {
  const std::size_t n = 943, m = 1682, r = 10;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix u(n, r), v(m, r);
  for (double& x : u.storage()) x = g(rng) / std::sqrt(static_cast<double>(r));
  for (double& x : v.storage()) x = g(rng) / std::sqrt(static_cast<double>(r));
  std::vector<double> bu(n), bi(m), pop(m);
  for (double& x : bu) x = 0.5 * g(rng);
  for (double& x : bi) x = 0.5 * g(rng);
  for (std::size_t j = 0; j < m; ++j) pop[j] = 1.0 / (static_cast<double>(j) + 10.0);
  std::lognormal_distribution<double> activity(std::log(65.0), 0.8);
  std::exponential_distribution<double> ex(1.0);
  std::vector<Triple> t;
  std::vector<std::pair<double, std::int32_t>> key(m);
  for (std::size_t i = 0; i < n; ++i) {
    auto d = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(activity(rng))), 20, 700);
    for (std::size_t j = 0; j < m; ++j) key[j] = {ex(rng) / pop[j], static_cast<std::int32_t>(j)};
    std::partial_sort(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(d), key.end());
    for (std::size_t p = 0; p < d; ++p) {
      auto j = static_cast<std::size_t>(key[p].second);
      double s = 3.5 + bu[i] + bi[j] + 2.0 * cfrank::dot(u.row(i), v.row(j)) + 0.5 * g(rng);
      t.push_back({static_cast<std::int32_t>(i), key[p].second, std::clamp(std::round(s), 1.0, 5.0)});
    }
  }
  return RatingsMatrix::from_triples(n, m, std::move(t), FeedbackMode::kExplicit);
}

// One-class data: each user's `per_user` positives are drawn without
// replacement with probability proportional to exp(u.v) (Gumbel top-k).
inline RatingsMatrix implicit_lowrank(std::size_t n, std::size_t m, std::size_t rank,
                                      std::size_t per_user, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix u(n, rank), v(m, rank);
  for (double& x : u.storage()) x = g(rng);
  for (double& x : v.storage()) x = g(rng);
  std::exponential_distribution<double> ex(1.0);
  std::vector<Triple> t;
  std::vector<std::pair<double, std::int32_t>> key(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j)
      key[j] = {std::log(ex(rng)) - cfrank::dot(u.row(i), v.row(j)), static_cast<std::int32_t>(j)};
    std::partial_sort(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(per_user), key.end());
    for (std::size_t p = 0; p < per_user; ++p)
      t.push_back({static_cast<std::int32_t>(i), key[p].second, 1.0});
  }
  return RatingsMatrix::from_triples(n, m, std::move(t), FeedbackMode::kImplicit);
}

}  // namespace fixture
