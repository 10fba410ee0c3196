#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "cfrank/comparisons.hpp"
#include "cfrank/error.hpp"
#include "cfrank/factor_model.hpp"
#include "cfrank/fenwick.hpp"
#include "cfrank/ratings.hpp"
#include "cfrank/synthetic.hpp"
#include "fixtures.hpp"

using namespace cfrank;

namespace {

std::map<std::pair<int, int>, double> as_map(const RatingsMatrix& r) {
  std::map<std::pair<int, int>, double> out;
  for (const auto& t : r.triples()) out[{t.user, t.item}] = t.value;
  return out;
}

}  // namespace

TEST_CASE("load_ratings remaps sparse ids in ascending order") {
  std::istringstream in("# header\n10\t7\t4\n3\t7\t5\n10\t2\t1\n\n");
  auto r = load_ratings(in, FeedbackMode::kExplicit);
  CHECK(r.n_users() == 2);
  CHECK(r.n_items() == 2);
  CHECK(r.nnz() == 3);
  CHECK(r.user_ids() == std::vector<std::int64_t>{3, 10});
  CHECK(r.item_ids() == std::vector<std::int64_t>{2, 7});
  REQUIRE(r.find(1, 1));
  CHECK(*r.find(1, 1) == 4.0);
  CHECK(*r.find(0, 1) == 5.0);
  CHECK(r.find(0, 0) == nullptr);
  CHECK(r.levels() == 5);
}

TEST_CASE("separators are detected per file") {
  for (std::string text : {"1,2,3\n2,1,4\n", "1 2 3\n2 1 4\n", "1\t2\t3\n2\t1\t4\n"}) {
    std::istringstream in(text);
    auto r = load_ratings(in, FeedbackMode::kExplicit);
    CHECK(r.nnz() == 2);
  }
}

TEST_CASE("extra fields such as timestamps are ignored") {
  std::istringstream in("1\t2\t3\t881250949\n");
  CHECK(load_ratings(in, FeedbackMode::kExplicit).nnz() == 1);
}

TEST_CASE("empty input gives an empty matrix") {
  std::istringstream in("");
  auto r = load_ratings(in, FeedbackMode::kExplicit);
  CHECK(r.n_users() == 0);
  CHECK(r.n_items() == 0);
  CHECK(r.nnz() == 0);
}

TEST_CASE("malformed lines report their line number") {
  std::istringstream in("1 2 3\n# c\n1 x 3\n");
  try {
    load_ratings(in, FeedbackMode::kExplicit);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.code() == ExitCode::kData);
  }
  std::istringstream short_line("1 2\n");
  CHECK_THROWS_AS(load_ratings(short_line, FeedbackMode::kExplicit), ParseError);
}

TEST_CASE("duplicate pairs are a data error naming the pair") {
  std::istringstream in("5 6 1\n7 6 2\n5 6 3\n");
  try {
    load_ratings(in, FeedbackMode::kExplicit);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find("user 5") != std::string::npos);
    CHECK(msg.find("item 6") != std::string::npos);
  }
}

TEST_CASE("mode checks on values") {
  std::istringstream frac("1 1 2.5\n");
  CHECK_THROWS_AS(load_ratings(frac, FeedbackMode::kExplicit), Error);
  std::istringstream two("1 1 2\n");
  CHECK_THROWS_AS(load_ratings(two, FeedbackMode::kImplicit), Error);
  std::istringstream implicit("1 1 1\n1 2 0\n2 2 1\n");
  auto r = load_ratings(implicit, FeedbackMode::kImplicit);
  CHECK(r.nnz() == 2);
  CHECK(r.n_observed_zeros() == 1);
  REQUIRE(r.observed_zeros(0).size() == 1);
  CHECK(r.observed_zeros(0)[0] == 1);
}

TEST_CASE("by-user and by-item views hold identical triples") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = fixture::random_explicit(40, 30, 5, 0, 25, rng);
    std::set<std::tuple<int, int, double>> a, b;
    for (std::size_t i = 0; i < r.n_users(); ++i) {
      auto row = r.user(i);
      for (std::size_t p = 0; p < row.size(); ++p) {
        if (p > 0) CHECK(row[p - 1].index < row[p].index);
        a.insert({static_cast<int>(i), row[p].index, row[p].value});
      }
    }
    for (std::size_t j = 0; j < r.n_items(); ++j) {
      auto col = r.item(j);
      for (std::size_t p = 0; p < col.size(); ++p) {
        if (p > 0) CHECK(col[p - 1].index < col[p].index);
        b.insert({col[p].index, static_cast<int>(j), col[p].value});
      }
    }
    CHECK(a == b);
    CHECK(a.size() == r.nnz());
  }
}

TEST_CASE("ratings round-trip through text with external ids") {
  std::mt19937_64 rng(3);
  auto r = fixture::random_real(25, 17, 0.3, rng);
  std::vector<std::int64_t> uid(25), iid(17);
  for (std::size_t i = 0; i < uid.size(); ++i) uid[i] = 1000 + 7 * static_cast<std::int64_t>(i);
  for (std::size_t j = 0; j < iid.size(); ++j) iid[j] = 3 * static_cast<std::int64_t>(j) + 1;
  auto withids = RatingsMatrix::from_triples(25, 17, r.triples(), FeedbackMode::kReal, uid, iid);
  std::stringstream ss;
  save_ratings(ss, withids);
  auto back = load_ratings(ss, FeedbackMode::kReal, &uid, &iid);
  CHECK(back.triples() == withids.triples());

  std::stringstream ms;
  save_id_map(ms, uid);
  CHECK(load_id_map(ms) == uid);
}

TEST_CASE("unknown ids under an explicit table are rejected") {
  std::vector<std::int64_t> users{1, 2}, items{5};
  std::istringstream in("1 5 3\n3 5 2\n");
  CHECK_THROWS_AS(load_ratings(in, FeedbackMode::kExplicit, &users, &items), ParseError);
}

TEST_CASE("enumerate_comparisons matches a brute-force double loop") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto r = fixture::random_explicit(5, 60, 5, 0, 50, rng);
    for (std::size_t i = 0; i < r.n_users(); ++i) {
      auto row = r.user(i);
      std::size_t brute = 0;
      for (std::size_t a = 0; a < row.size(); ++a)
        for (std::size_t b = a + 1; b < row.size(); ++b)
          if (row[a].value != row[b].value) ++brute;
      auto pairs = enumerate_comparisons(r, i);
      CHECK(pairs.size() == brute);
      for (const auto& c : pairs) {
        CHECK(c.y == 1);
        CHECK(*r.find(i, c.j) > *r.find(i, c.k));
      }
    }
  }
}

TEST_CASE("comparison sets keep consistent local positions") {
  std::mt19937_64 rng(8);
  auto r = fixture::random_explicit(12, 20, 4, 2, 12, rng);
  auto c = ComparisonSet::from_ratings(r);
  std::size_t total = 0;
  for (std::size_t i = 0; i < c.n_users(); ++i) {
    auto items = c.items(i);
    auto pairs = c.user(i);
    auto local = c.local(i);
    REQUIRE(pairs.size() == local.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      CHECK(items[local[p].p] == pairs[p].j);
      CHECK(items[local[p].q] == pairs[p].k);
      CHECK(local[p].y == static_cast<double>(pairs[p].y));
    }
    total += pairs.size();
  }
  CHECK(total == c.size());
  CHECK_THROWS_AS(ComparisonSet::from_rows(2, 2, {{0, 1, 1, 1}}), Error);
  CHECK_THROWS_AS(ComparisonSet::from_rows(2, 2, {{0, 0, 1, 2}}), Error);
}

TEST_CASE("pair files load with dense ids") {
  std::istringstream in("0 1 2 1\n1 0 2 -1\n");
  auto c = load_comparisons(in);
  CHECK(c.n_users() == 2);
  CHECK(c.n_items() == 3);
  CHECK(c.size() == 2);
  CHECK(c.user(1)[0].y == -1);
}

TEST_CASE("split_fixed_count is deterministic and disjoint") {
  std::mt19937_64 rng(21);
  auto r = fixture::random_explicit(60, 80, 5, 5, 40, rng);
  auto a = split_fixed_count(r, 10, 5, 99);
  auto b = split_fixed_count(r, 10, 5, 99);
  CHECK(a.train.triples() == b.train.triples());
  CHECK(a.test.triples() == b.test.triples());
  auto c = split_fixed_count(r, 10, 5, 100);
  CHECK(c.train.triples() != a.train.triples());

  auto all = as_map(r);
  for (std::size_t i = 0; i < r.n_users(); ++i) {
    const std::size_t d = r.user(i).size();
    if (d < 15) {
      CHECK(a.train.user(i).empty());
      CHECK(a.test.user(i).empty());
      continue;
    }
    CHECK(a.train.user(i).size() == 10);
    CHECK(a.test.user(i).size() == d - 10);
    for (const auto& e : a.train.user(i)) CHECK(a.test.find(i, e.index) == nullptr);
  }
  for (const auto& t : a.train.triples()) CHECK(all.at({t.user, t.item}) == t.value);
  for (const auto& t : a.test.triples()) CHECK(all.at({t.user, t.item}) == t.value);
  CHECK_THROWS_AS(split_fixed_count(r, 1000, 1, 1), DataError);
  CHECK_THROWS_AS(split_fixed_count(r, 0, 1, 1), ConfigError);
}

TEST_CASE("split directory round-trip") {
  std::mt19937_64 rng(4);
  auto r = fixture::random_explicit(30, 40, 5, 12, 30, rng);
  auto s = split_fixed_count(r, 8, 3, 17);
  auto dir = std::filesystem::temp_directory_path() / "cfrank_split_rt";
  std::filesystem::remove_all(dir);
  save_split(dir.string(), s);
  auto back = load_split(dir.string());
  CHECK(back.train.triples() == s.train.triples());
  CHECK(back.test.triples() == s.test.triples());
  CHECK(back.seed == 17);
  CHECK(back.per_user_train_count == 8);
  CHECK(back.min_test == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("binarize keeps low ratings as observed zeros") {
  std::istringstream in("1 1 5\n1 2 2\n2 1 4\n2 3 3\n");
  auto r = load_ratings(in, FeedbackMode::kExplicit);
  auto b = binarize(r, 4);
  CHECK(b.mode() == FeedbackMode::kImplicit);
  CHECK(b.nnz() == 2);
  CHECK(b.n_observed_zeros() == 2);
  CHECK(b.observed_zeros(0).size() == 1);
  CHECK(b.observed_zeros(0)[0] == 1);
  CHECK_THROWS_AS(binarize(r, 9), ConfigError);
  CHECK_THROWS_AS(binarize(b, 1), DataError);
}

TEST_CASE("synthetic propagation is the weighted neighbor sum") {
  Graph g = Graph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  Matrix u(3, 1);
  u(0, 0) = 1.0;
  u(1, 0) = 2.0;
  u(2, 0) = 4.0;
  auto next = propagate(u, g, 0.6);
  CHECK(next(0, 0) == doctest::Approx(0.6 * 2.0 + 0.4 * 1.0));
  CHECK(next(1, 0) == doctest::Approx(0.6 * (1.0 + 4.0) + 0.4 * 2.0));
  CHECK(next(2, 0) == doctest::Approx(0.6 * 2.0 + 0.4 * 4.0));
}

TEST_CASE("synthetic data has exact sample counts and consistent ratings") {
  SyntheticSpec s;
  s.n_users = 120;
  s.n_items = 40;
  s.rank = 4;
  s.edge_prob = 0.03;
  s.train_frac = 0.1;
  s.test_frac = 0.05;
  auto d = generate_synthetic(s, 9);
  CHECK(d.train.nnz() == 480);
  CHECK(d.test.nnz() == 240);
  for (const auto& t : d.train.triples()) {
    CHECK(d.test.find(t.user, t.item) == nullptr);
    CHECK(t.value == doctest::Approx(dot(d.user_factors.row(t.user), d.item_factors.row(t.item))));
  }
  auto again = generate_synthetic(s, 9);
  CHECK(again.train.triples() == d.train.triples());
  CHECK(again.graph == d.graph);
  s.influence_weight = 1.5;
  CHECK_THROWS_AS(generate_synthetic(s, 1), ConfigError);
  s.influence_weight = 0.5;
  s.train_frac = 0.8;
  s.test_frac = 0.3;
  CHECK_THROWS_AS(generate_synthetic(s, 1), ConfigError);
}

TEST_CASE("fenwick prefix and suffix sums agree with brute force") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pos(0, 16), val(-5, 5);
  FenwickTree<double> f(17);
  std::vector<double> brute(17, 0.0);
  for (int step = 0; step < 500; ++step) {
    int p = pos(rng);
    double x = val(rng);
    f.add(p, x);
    brute[p] += x;
    int q = pos(rng);
    double pre = 0.0, suf = 0.0;
    for (int t = 0; t < q; ++t) pre += brute[t];
    for (int t = q; t < 17; ++t) suf += brute[t];
    CHECK(f.prefix(q) == pre);
    CHECK(f.suffix(q) == suf);
  }
  f.clear();
  CHECK(f.total() == 0.0);
  CHECK(f.prefix(17) == 0.0);
}

TEST_CASE("level accumulator queries strict level ranges") {
  LevelAccumulator acc(5);
  acc.insert(0, 1.0, true);
  acc.insert(2, 2.0, true);
  acc.insert(2, 3.0, true);
  acc.insert(4, 4.0, true);
  auto lo = acc.below(2);
  CHECK(lo.count == 1.0);
  CHECK(lo.sum == 1.0);
  auto hi = acc.above(2);
  CHECK(hi.count == 1.0);
  CHECK(hi.sum == 4.0);
  CHECK(hi.sumsq == 16.0);
  CHECK(acc.above(4).count == 0.0);
  CHECK(acc.below(0).count == 0.0);
}

TEST_CASE("model and log round-trip bit-exactly") {
  std::mt19937_64 rng(21);
  FactorModel m;
  m.algorithm = "primal-crpp-with-a-long-tag";
  m.user_factors = fixture::gaussian(4, 3, 1.0, rng);
  m.item_factors = fixture::gaussian(5, 3, 1.0, rng);
  m.item_factors(0, 0) = 0.1 + 0.2;
  m.log = {{0, 12.5, std::numeric_limits<double>::quiet_NaN(), 0.0}, {1, 1.0 / 3.0, 0.25, 0.5, 0.125}};
  std::stringstream ss;
  save_model(ss, m);
  auto back = load_model(ss);
  CHECK(back.algorithm == m.algorithm);
  CHECK(back.user_factors == m.user_factors);
  CHECK(back.item_factors == m.item_factors);
  CHECK_FALSE(back.side_factors.has_value());

  m.side_factors = fixture::gaussian(2, 3, 1.0, rng);
  std::stringstream s2;
  save_model(s2, m);
  back = load_model(s2);
  REQUIRE(back.side_factors.has_value());
  CHECK(*back.side_factors == *m.side_factors);

  std::stringstream s3;
  save_log(s3, m.log);
  auto log = load_log(s3);
  REQUIRE(log.size() == 2);
  CHECK(std::isnan(log[0].metric));
  CHECK(log[1] == m.log[1]);

  std::istringstream bad("CF-MODEL v1\nmode mf\n2 2 1\nU 2\n0.5\n");
  CHECK_THROWS_AS(load_model(bad), ParseError);
}
