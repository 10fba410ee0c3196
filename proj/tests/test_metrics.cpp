#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cfrank/error.hpp"
#include "cfrank/metrics.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cfrank;

namespace {

FactorModel random_model(std::size_t n, std::size_t m, std::size_t r, std::mt19937_64& rng) {
  FactorModel f;
  f.user_factors = fixture::gaussian(n, r, 1.0, rng);
  f.item_factors = fixture::gaussian(m, r, 1.0, rng);
  return f;
}

// Rank-1 model whose scores for every user are the given item values.
FactorModel fixed_scores(std::size_t n, const std::vector<double>& s) {
  FactorModel f;
  f.user_factors = Matrix(n, 1, 1.0);
  f.item_factors = Matrix(s.size(), 1);
  for (std::size_t j = 0; j < s.size(); ++j) f.item_factors(j, 0) = s[j];
  return f;
}

struct Data {
  RatingsMatrix train, test;
};

Data explicit_data(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto r = fixture::random_explicit(25, 30, 5, 6, 14, rng);
  auto s = split_fixed_count(r, 4, 1, seed);
  return {s.train, s.test};
}

}  // namespace

TEST_CASE("top_k breaks ties by item index") {
  std::vector<double> s{1.0, 3.0, 3.0, 2.0, 3.0};
  CHECK(top_k(s, {0, 1, 2, 3, 4}, 3) == std::vector<std::int32_t>{1, 2, 4});
  CHECK(top_k(s, {4, 3, 2, 1, 0}, 0) == std::vector<std::int32_t>{1, 2, 4, 3, 0});
  CHECK(top_k(s, {0, 3}, 10) == std::vector<std::int32_t>{3, 0});
}

TEST_CASE("ndcg on a hand-computed example") {
  auto test = RatingsMatrix::from_triples(1, 4, {{0, 0, 3}, {0, 1, 1}, {0, 2, 2}}, FeedbackMode::kExplicit);
  auto model = fixed_scores(1, {0.1, 0.9, 0.5, 0.0});
  double dcg = 1.0 / std::log2(2.0) + 3.0 / std::log2(3.0) + 7.0 / std::log2(4.0);
  double idcg = 7.0 / std::log2(2.0) + 3.0 / std::log2(3.0) + 1.0 / std::log2(4.0);
  CHECK(ndcg_at_k(model, test, 3) == doctest::Approx(dcg / idcg).epsilon(1e-12));
  CHECK(ndcg_at_k(model, test, 1) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK_THROWS_AS(ndcg_at_k(model, test, 0), ConfigError);
}

TEST_CASE("fast metrics agree with the reference implementations") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    auto d = explicit_data(seed);
    std::mt19937_64 rng(seed);
    auto m = random_model(25, 30, 3, rng);
    for (std::size_t k : {1, 3, 5, 10})
      CHECK(ndcg_at_k(m, d.test, k) == doctest::Approx(reference::ndcg_at_k(m, d.test, k)).epsilon(1e-12));
    for (std::size_t k : {1, 5})
      CHECK(precision_at_k_explicit(m, d.train, d.test, k, 4.0) ==
            doctest::Approx(reference::precision_at_k(m, d.train, d.test, k, 4.0)).epsilon(1e-12));
    CHECK(pairwise_error(m, d.test) == doctest::Approx(reference::pairwise_error(m, d.test)).epsilon(1e-12));
    CHECK(map_score(m, d.train, d.test, 4.0) ==
          doctest::Approx(reference::map_score(m, d.train, d.test, 4.0)).epsilon(1e-12));
    CHECK(recall_at_k(m, d.train, d.test, 5, 4.0) ==
          doctest::Approx(reference::recall_at_k(m, d.train, d.test, 5, 4.0)).epsilon(1e-12));
    CHECK(hlu(m, d.train, d.test, 5.0, 3.0) ==
          doctest::Approx(reference::hlu(m, d.train, d.test, 5.0, 3.0, 0)).epsilon(1e-12));
    CHECK(rmse(m, d.test) == doctest::Approx(reference::rmse(m, d.test)).epsilon(1e-12));
  }
}

TEST_CASE("ndcg agrees with a textbook evaluation") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto d = explicit_data(seed);
    std::mt19937_64 rng(seed + 50);
    auto m = random_model(25, 30, 3, rng);
    double total = 0.0;
    std::size_t users = 0;
    for (std::size_t i = 0; i < d.test.n_users(); ++i) {
      auto row = d.test.user(i);
      if (row.empty()) continue;
      std::vector<int> items;
      std::vector<double> gain(30, 0.0), ideal;
      for (const auto& e : row) {
        items.push_back(e.index);
        gain[e.index] = e.value;
        ideal.push_back(e.value);
      }
      auto order = oracle::full_ranking(m.scores(i), items);
      std::vector<double> got;
      for (int j : order) got.push_back(gain[j]);
      std::sort(ideal.rbegin(), ideal.rend());
      total += oracle::dcg(got, 5) / oracle::dcg(ideal, 5);
      ++users;
    }
    CHECK(ndcg_at_k(m, d.test, 5) == doctest::Approx(total / users).epsilon(1e-12));
  }
}

TEST_CASE("metrics stay in range") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto d = explicit_data(seed);
    std::mt19937_64 rng(seed + 7);
    auto m = random_model(25, 30, 4, rng);
    for (double x : {ndcg_at_k(m, d.test, 10), precision_at_k_explicit(m, d.train, d.test, 5),
                     pairwise_error(m, d.test), map_score(m, d.train, d.test, 4.0),
                     recall_at_k(m, d.train, d.test, 5, 4.0)}) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    CHECK(hlu(m, d.train, d.test, 5.0, 3.0) >= 0.0);
    CHECK(rmse(m, d.test) >= 0.0);
  }
}

TEST_CASE("ranking metrics are invariant to monotone score transforms") {
  auto d = explicit_data(3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::vector<double> s(30);
  for (double& x : s) x = unif(rng);
  std::vector<double> t = s;
  for (double& x : t) x = std::exp(3.0 * x) + 1.0;
  auto a = fixed_scores(25, s), b = fixed_scores(25, t);
  CHECK(ndcg_at_k(a, d.test, 5) == doctest::Approx(ndcg_at_k(b, d.test, 5)).epsilon(1e-12));
  CHECK(pairwise_error(a, d.test) == pairwise_error(b, d.test));
  CHECK(precision_at_k_explicit(a, d.train, d.test, 3) == precision_at_k_explicit(b, d.train, d.test, 3));
  CHECK(map_score(a, d.train, d.test, 4.0) == doctest::Approx(map_score(b, d.train, d.test, 4.0)));
}

TEST_CASE("negating distinct scores complements the pairwise error") {
  std::mt19937_64 rng(12);
  auto r = fixture::random_explicit(20, 15, 5, 4, 10, rng);
  auto m = random_model(20, 15, 3, rng);
  FactorModel neg = m;
  for (double& x : neg.item_factors.storage()) x = -x;
  CHECK(pairwise_error(m, r) + pairwise_error(neg, r) == doctest::Approx(1.0).epsilon(1e-12));
  auto pairs = ComparisonSet::from_ratings(r);
  CHECK(pairwise_error(m, pairs) == doctest::Approx(pairwise_error(m, r)).epsilon(1e-12));
}

TEST_CASE("tied scores count as wrong") {
  auto test = RatingsMatrix::from_triples(1, 3, {{0, 0, 1}, {0, 1, 2}, {0, 2, 3}}, FeedbackMode::kExplicit);
  auto flat = fixed_scores(1, {1.0, 1.0, 1.0});
  CHECK(pairwise_error(flat, test) == 1.0);
  auto perfect = fixed_scores(1, {0.0, 1.0, 2.0});
  CHECK(pairwise_error(perfect, test) == 0.0);
  auto no_pairs = RatingsMatrix::from_triples(1, 3, {{0, 0, 2}, {0, 1, 2}}, FeedbackMode::kExplicit);
  CHECK_THROWS_AS(pairwise_error(perfect, no_pairs), DataError);
}

TEST_CASE("implicit precision uses every untrained item as a candidate") {
  auto train = RatingsMatrix::from_triples(2, 5, {{0, 4, 1}, {1, 0, 1}}, FeedbackMode::kImplicit);
  auto test = RatingsMatrix::from_triples(2, 5, {{0, 3, 1}, {1, 1, 1}, {1, 2, 1}}, FeedbackMode::kImplicit);
  auto model = fixed_scores(2, {0.0, 1.0, 2.0, 3.0, 4.0});
  // user 0 ranks 3,2,1,0 ; user 1 ranks 4,3,2,1
  CHECK(precision_at_k_implicit(model, train, test, 1) == doctest::Approx(0.5));
  CHECK(precision_at_k_implicit(model, train, test, 3) == doctest::Approx((1.0 + 1.0) / 6.0));
  CHECK(unrated_candidates(train, 0) == std::vector<std::int32_t>{0, 1, 2, 3});
  CHECK(recall_at_k(model, train, test, 3) == doctest::Approx((1.0 + 0.5) / 2.0));
  double ap0 = 1.0, ap1 = (1.0 / 3.0 + 2.0 / 4.0) / 2.0;
  CHECK(map_score(model, train, test) == doctest::Approx((ap0 + ap1) / 2.0));
}

TEST_CASE("half-life utility") {
  auto train = RatingsMatrix::from_triples(1, 4, {}, FeedbackMode::kExplicit);
  auto test = RatingsMatrix::from_triples(1, 4, {{0, 0, 5}, {0, 2, 4}}, FeedbackMode::kExplicit);
  auto model = fixed_scores(1, {3.0, 2.0, 1.0, 0.0});
  double want = 2.0 + 1.0 / std::pow(2.0, 2.0 / 4.0);
  CHECK(hlu(model, train, test, 5.0, 3.0) == doctest::Approx(want).epsilon(1e-12));
  CHECK(hlu(model, train, test, 5.0, 3.0, 1) == doctest::Approx(2.0));
  CHECK_THROWS_AS(hlu(model, train, test, 1.0, 3.0), ConfigError);
}

TEST_CASE("rmse") {
  auto test = RatingsMatrix::from_triples(1, 2, {{0, 0, 3}, {0, 1, 1}}, FeedbackMode::kReal);
  auto model = fixed_scores(1, {2.0, 2.0});
  CHECK(rmse(model, test) == doctest::Approx(1.0));
}

TEST_CASE("metrics report round-trip") {
  std::vector<MetricLine> lines{{"ndcg", 10, 0.75}, {"pairwise_error", 0, 0.1 + 0.2}, {"rmse", 0, 1.0 / 3.0}};
  std::stringstream ss;
  write_metrics_report(ss, lines);
  auto back = read_metrics_report(ss);
  REQUIRE(back.size() == 3);
  for (std::size_t q = 0; q < 3; ++q) {
    CHECK(back[q].name == lines[q].name);
    CHECK(back[q].k == lines[q].k);
    CHECK(back[q].value == lines[q].value);
  }
}
