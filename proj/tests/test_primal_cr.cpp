#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cfrank/bench.hpp"
#include "cfrank/error.hpp"
#include "cfrank/metrics.hpp"
#include "cfrank/primal_cr.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cfrank;

namespace {

struct Problem {
  RatingsMatrix r;
  ComparisonSet pairs;
  Matrix u, v;
};

Problem make_problem(std::uint64_t seed, std::size_t n = 8, std::size_t m = 12, std::size_t rank = 3,
                     double sd = 0.8) {
  std::mt19937_64 rng(seed);
  Problem p;
  p.r = fixture::random_explicit(n, m, 5, 3, 9, rng);
  p.pairs = ComparisonSet::from_ratings(p.r);
  p.u = fixture::gaussian(n, rank, sd, rng);
  p.v = fixture::gaussian(m, rank, sd, rng);
  return p;
}

double max_rel(const Matrix& a, const Matrix& b) { return oracle::rel_dev(a, b); }

}  // namespace

TEST_CASE("objective kernels agree with the brute-force pair sum") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto p = make_problem(seed);
    const double lambda = 0.3;
    double want = oracle::cr_objective(p.u, p.v, oracle::pairs_of(p.r), lambda);
    CHECK(cr_objective(p.u, p.v, p.pairs, lambda) == doctest::Approx(want).epsilon(1e-10));
    CHECK(cr_objective(p.u, p.v, CrData(p.pairs), lambda) == doctest::Approx(want).epsilon(1e-10));
    CHECK(cr_objective(p.u, p.v, CrData(p.r), lambda) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("naive gradient agrees with finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = make_problem(seed);
    auto pairs = oracle::pairs_of(p.r);
    auto f = [&](const Matrix& x) { return oracle::cr_objective(p.u, x, pairs, 0.5); };
    auto fd = oracle::fd_gradient(f, p.v);
    CHECK(max_rel(grad_v_naive(p.u, p.v, p.pairs, 0.5), fd) < 1e-5);
    CHECK(max_rel(grad_v_naive(p.u, p.v, p.r, 0.5), fd) < 1e-5);
  }
}

TEST_CASE("fast and scan gradients match the naive gradient") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    auto p = make_problem(seed, 10, 15, 4, seed % 3 == 0 ? 0.1 : 1.0);
    auto naive = grad_v_naive(p.u, p.v, p.pairs, 0.2);
    CHECK(max_rel(grad_v_fast(p.u, p.v, p.pairs, 0.2), naive) < 1e-10);
    CHECK(max_rel(grad_v_scan_pp(p.u, p.v, p.r, 0.2), naive) < 1e-10);
    CHECK(max_rel(grad_v(p.u, p.v, CrData(p.r), 0.2), naive) < 1e-10);
    CHECK(max_rel(grad_v(p.u, p.v, CrData(p.pairs), 0.2, 3), naive) < 1e-10);
  }
}

TEST_CASE("hessian-vector kernels match the dense hessian") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto p = make_problem(seed, 6, 9, 3, seed % 2 ? 0.2 : 1.0);
    std::mt19937_64 rng(seed + 100);
    auto a = fixture::gaussian(p.v.rows(), p.v.cols(), 1.0, rng);
    auto h = oracle::cr_hessian_v(p.u, p.v, oracle::pairs_of(p.r), 0.7);
    auto want = oracle::times(h, a);
    CHECK(max_rel(hessvec_v_fast(p.u, p.v, p.pairs, 0.7, a), want) < 1e-10);
    CHECK(max_rel(hessvec_v_scan_pp(p.u, p.v, p.r, 0.7, a), want) < 1e-10);
    CHECK(max_rel(hessvec_v(p.u, p.v, CrData(p.r), 0.7, a, 2), want) < 1e-10);
  }
}

TEST_CASE("hessian-vector product is the directional derivative of the gradient") {
  auto p = make_problem(21, 6, 9, 3, 0.3);
  std::mt19937_64 rng(5);
  auto a = fixture::gaussian(p.v.rows(), p.v.cols(), 1.0, rng);
  const double h = 1e-7;
  Matrix vp = p.v, vm = p.v;
  for (std::size_t q = 0; q < a.size(); ++q) {
    vp.flat()[q] += h * a.flat()[q];
    vm.flat()[q] -= h * a.flat()[q];
  }
  auto gp = grad_v_naive(p.u, vp, p.pairs, 0.4), gm = grad_v_naive(p.u, vm, p.pairs, 0.4);
  Matrix fd(a.rows(), a.cols());
  for (std::size_t q = 0; q < a.size(); ++q) fd.flat()[q] = (gp.flat()[q] - gm.flat()[q]) / (2 * h);
  CHECK(max_rel(hessvec_v_fast(p.u, p.v, p.pairs, 0.4, a), fd) < 1e-5);
}

TEST_CASE("user objective and gradient") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = make_problem(seed);
    auto all = oracle::pairs_of(p.r);
    for (std::size_t i = 0; i < p.r.n_users(); ++i) {
      std::vector<oracle::Pair> mine;
      for (const auto& q : all)
        if (q.user == i) mine.push_back({0, q.hi, q.lo});
      Matrix ui(1, p.u.cols());
      for (std::size_t t = 0; t < p.u.cols(); ++t) ui(0, t) = p.u(i, t);
      auto f = [&](const Matrix& x) {
        return oracle::cr_objective(x, p.v, mine, 0.3) - 0.5 * 0.3 * oracle::sq_frob(p.v);
      };
      for (const CrData& d : {CrData(p.pairs), CrData(p.r)}) {
        CHECK(user_objective(i, p.u.row(i), p.v, d, 0.3) == doctest::Approx(f(ui)).epsilon(1e-10));
        auto g = user_gradient(i, p.u.row(i), p.v, d, 0.3);
        Matrix gm(1, g.size());
        std::copy(g.begin(), g.end(), gm.flat().begin());
        CHECK(max_rel(gm, oracle::fd_gradient(f, ui)) < 1e-5);
      }
    }
  }
}

TEST_CASE("each half step never increases the objective") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = make_problem(seed, 15, 20, 4);
    CrHyper h;
    h.lambda = 0.5;
    h.rank = 4;
    for (const CrData& d : {CrData(p.pairs), CrData(p.r)}) {
      Matrix u = p.u, v = p.v;
      double f = cr_objective(u, v, d, h.lambda);
      for (int it = 0; it < 5; ++it) {
        auto rep = newton_update_v(u, v, d, h);
        CHECK(rep.objective_before == doctest::Approx(f).epsilon(1e-10));
        CHECK(rep.objective_after <= f + 1e-12);
        double fv = cr_objective(u, v, d, h.lambda);
        CHECK(fv == doctest::Approx(rep.objective_after).epsilon(1e-10));
        double fu = update_u_ranksvm(u, v, d, h);
        CHECK(fu <= fv + 1e-12);
        CHECK(fu == doctest::Approx(cr_objective(u, v, d, h.lambda)).epsilon(1e-10));
        f = fu;
      }
    }
  }
}

TEST_CASE("scan kernels are invariant to the order of tied items") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto r = fixture::random_explicit(6, 10, 3, 4, 10, rng);
    auto u = fixture::gaussian(6, 2, 1.0, rng);
    auto v = fixture::gaussian(10, 2, 1.0, rng);
    for (std::size_t j = 0; j + 1 < 10; j += 3)
      for (std::size_t t = 0; t < 2; ++t) v(j + 1, t) = v(j, t);
    std::vector<std::int32_t> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Triple> t2;
    for (const auto& t : r.triples()) t2.push_back({t.user, perm[t.item], t.value});
    auto rp = RatingsMatrix::from_triples(6, 10, t2, FeedbackMode::kExplicit);
    Matrix vp(10, 2);
    for (std::size_t j = 0; j < 10; ++j)
      for (std::size_t t = 0; t < 2; ++t) vp(perm[j], t) = v(j, t);

    auto g = grad_v_scan_pp(u, v, r, 0.1);
    auto gp = grad_v_scan_pp(u, vp, rp, 0.1);
    Matrix back(10, 2);
    for (std::size_t j = 0; j < 10; ++j)
      for (std::size_t t = 0; t < 2; ++t) back(j, t) = gp(perm[j], t);
    CHECK(max_rel(back, g) < 1e-12);
    CHECK(max_rel(g, grad_v_naive(u, v, ComparisonSet::from_ratings(r), 0.1)) < 1e-10);
    CHECK(cr_objective(u, vp, CrData(rp), 0.1) ==
          doctest::Approx(cr_objective(u, v, CrData(r), 0.1)).epsilon(1e-12));
  }
}

TEST_CASE("real-valued and implicit data are ranked by value") {
  std::mt19937_64 rng(23);
  auto r = fixture::random_real(7, 9, 0.6, rng);
  auto u = fixture::gaussian(7, 3, 1.0, rng);
  auto v = fixture::gaussian(9, 3, 1.0, rng);
  auto pairs = ComparisonSet::from_ratings(r);
  auto naive = grad_v_naive(u, v, pairs, 0.2);
  CHECK(max_rel(grad_v_scan_pp(u, v, r, 0.2), naive) < 1e-10);
  auto imp = fixture::random_implicit(7, 9, 0.3, 0.3, rng);
  auto ip = ComparisonSet::from_ratings(imp);
  CHECK(max_rel(grad_v_scan_pp(u, v, imp, 0.2), grad_v_naive(u, v, ip, 0.2)) < 1e-10);
}

TEST_CASE("training decreases the objective and fits the training order") {
  std::mt19937_64 rng(4);
  auto r = fixture::random_explicit(40, 30, 5, 8, 15, rng);
  CrHyper h;
  h.rank = 5;
  h.lambda = 1.0;
  h.outer_iterations = 8;
  for (auto variant : {CrVariant::kPrimalCr, CrVariant::kPrimalCrPlusPlus}) {
    auto model = train_primal_cr(r, h, variant, {&r});
    CHECK(model.algorithm == (variant == CrVariant::kPrimalCr ? "primal-cr" : "primal-crpp"));
    REQUIRE(model.log.size() >= 2);
    for (std::size_t e = 1; e < model.log.size(); ++e)
      CHECK(model.log[e].objective <= model.log[e - 1].objective + 1e-9);
    CHECK(model.log.back().metric2 < 0.5 * model.log.front().metric2);
    CHECK(pairwise_error(model, r) < 0.2);
  }
  auto a = train_primal_cr(r, h, CrVariant::kPrimalCr);
  auto b = train_primal_cr(r, h, CrVariant::kPrimalCrPlusPlus);
  CHECK(a.log.size() == b.log.size());
  CHECK(a.log.back().objective == doctest::Approx(b.log.back().objective).epsilon(1e-6));
  auto c = train_primal_cr(r, h, CrVariant::kPrimalCrPlusPlus);
  CHECK(b.user_factors == c.user_factors);
  CHECK(b.item_factors == c.item_factors);
}

TEST_CASE("explicit comparison input trains directly") {
  auto pairs = ComparisonSet::from_rows(3, 4, {{0, 0, 1, 1}, {0, 2, 3, -1}, {1, 1, 2, 1}, {2, 3, 0, 1}});
  CrHyper h;
  h.rank = 2;
  h.lambda = 0.1;
  h.outer_iterations = 20;
  auto model = train_primal_cr(pairs, h);
  CHECK(model.predict(0, 0) > model.predict(0, 1));
  CHECK(model.predict(0, 3) > model.predict(0, 2));
  CHECK(model.predict(1, 1) > model.predict(1, 2));
  CHECK(model.predict(2, 3) > model.predict(2, 0));
}

TEST_CASE("invalid settings are rejected") {
  std::mt19937_64 rng(1);
  auto r = fixture::random_explicit(5, 5, 5, 2, 4, rng);
  CrHyper h;
  h.lambda = -1;
  CHECK_THROWS_AS(train_primal_cr(r, h, CrVariant::kPrimalCrPlusPlus), ConfigError);
  h = CrHyper{};
  h.rank = 0;
  CHECK_THROWS_AS(train_primal_cr(r, h, CrVariant::kPrimalCr), ConfigError);
  h = CrHyper{};
  h.tolerance = 0.0;
  CHECK_THROWS_AS(train_primal_cr(r, h, CrVariant::kPrimalCrPlusPlus), ConfigError);
}

TEST_CASE("benchmark data, slopes and table") {
  auto r = bench_ratings(20, 30, 7, 5, 4);
  CHECK(r.nnz() == 140);
  for (std::size_t i = 0; i < 20; ++i) CHECK(r.user(i).size() == 7);
  CHECK_THROWS_AS(bench_ratings(2, 5, 6, 5, 1), ConfigError);

  CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
  CHECK(loglog_slope({10, 100}, {5, 50}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(loglog_slope({2, 2}, {1, 3}), DataError);
  CHECK_THROWS_AS(loglog_slope({1, 2}, {0, 3}), DataError);

  BenchSpec spec;
  spec.users = 30;
  spec.rank = 4;
  spec.degrees = {5, 10};
  spec.reps = 2;
  spec.kernels = {"crpp", "naive"};
  auto cells = run_bench(spec);
  REQUIRE(cells.size() == 4);
  for (const auto& c : cells) {
    CHECK(c.min_seconds > 0.0);
    CHECK(c.min_seconds <= c.mean_seconds);
    CHECK(c.ratings == 30 * c.degree);
  }
  auto slopes = bench_slopes(cells);
  CHECK(slopes.size() == 2);
  std::ostringstream out;
  write_bench_table(out, cells);
  CHECK(out.str().rfind("kernel\tdegree", 0) == 0);
  CHECK(out.str().find("# slope\tnaive") != std::string::npos);
  spec.kernels = {"bogus"};
  CHECK_THROWS_AS(run_bench(spec), ConfigError);
}
