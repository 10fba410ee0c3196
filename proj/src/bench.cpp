#include "cfrank/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "cfrank/error.hpp"
#include "cfrank/primal_cr.hpp"
#include "text_util.hpp"

namespace cfrank {

RatingsMatrix bench_ratings(std::size_t users, std::size_t items, std::size_t degree, int levels,
                            std::uint64_t seed) {
  if (degree > items) throw ConfigError("degree exceeds the item count");
  if (levels < 1) throw ConfigError("levels must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> level(1, levels);
  std::vector<std::int32_t> pool(items);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<Triple> triples;
  triples.reserve(users * degree);
  for (std::size_t i = 0; i < users; ++i) {
    for (std::size_t p = 0; p < degree; ++p) {
      std::uniform_int_distribution<std::size_t> pick(p, items - 1);
      std::swap(pool[p], pool[pick(rng)]);
      triples.push_back({static_cast<std::int32_t>(i), pool[p], static_cast<double>(level(rng))});
    }
  }
  return RatingsMatrix::from_triples(users, items, std::move(triples), FeedbackMode::kExplicit);
}

namespace {

using Clock = std::chrono::steady_clock;

template <class Fn>
double seconds(Fn&& fn) {
  auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::vector<BenchCell> run_bench(const BenchSpec& spec) {
  if (spec.degrees.empty()) throw ConfigError("benchmark grid is empty");
  if (spec.reps < 1) throw ConfigError("repetitions must be >= 1");
  for (const auto& k : spec.kernels)
    if (k != "crpp" && k != "crpp_grad" && k != "naive")
      throw ConfigError("unknown benchmark kernel '" + k + "' (expected crpp|crpp_grad|naive)");
  const std::size_t items = 2 * *std::max_element(spec.degrees.begin(), spec.degrees.end());
  CrHyper h;
  h.rank = spec.rank;
  h.threads = spec.threads;
  h.cg_max_iterations = 10;
  h.u_newton_iterations = 1;
  h.u_cg_iterations = 5;

  struct Job {
    std::string kernel;
    std::size_t degree;
    std::size_t data;
    std::vector<double> times;
  };
  std::vector<RatingsMatrix> data;
  std::vector<Matrix> u0, v0;
  std::vector<Job> jobs;
  for (std::size_t degree : spec.degrees) {
    data.push_back(bench_ratings(spec.users, items, degree, spec.levels, spec.seed + degree));
    std::mt19937_64 rng(spec.seed);
    const double sd = 1.0 / std::sqrt(static_cast<double>(spec.rank));
    u0.emplace_back(spec.users, spec.rank);
    v0.emplace_back(items, spec.rank);
    fill_gaussian(v0.back(), sd, rng);
    fill_gaussian(u0.back(), sd, rng);
    for (const auto& kernel : spec.kernels) jobs.push_back({kernel, degree, data.size() - 1, {}});
  }

  auto run = [&](const Job& job) {
    const auto& r = data[job.data];
    const auto& u = u0[job.data];
    const auto& v = v0[job.data];
    if (job.kernel == "crpp") {
      Matrix uu = u, vv = v;
      CrData d(r);
      newton_update_v(uu, vv, d, h);
      update_u_ranksvm(uu, vv, d, h);
    } else if (job.kernel == "crpp_grad") {
      volatile double sink = grad_v_scan_pp(u, v, r, h.lambda, spec.threads).flat()[0];
      (void)sink;
    } else {
      volatile double sink = grad_v_naive(u, v, r, h.lambda).flat()[0];
      (void)sink;
    }
  };

  // one untimed warm-up pass, then repetitions interleaved across cells so
  // slow phases of the host hit every cell alike
  for (const auto& job : jobs) run(job);
  for (int rep = 0; rep < spec.reps; ++rep)
    for (auto& job : jobs) job.times.push_back(seconds([&] { run(job); }));

  std::vector<BenchCell> cells;
  for (const auto& job : jobs) {
    const auto& t = job.times;
    double mean = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
    double var = 0.0;
    for (double x : t) var += (x - mean) * (x - mean);
    double sd = t.size() > 1 ? std::sqrt(var / static_cast<double>(t.size() - 1)) : 0.0;
    cells.push_back({job.kernel, job.degree, spec.rank, data[job.data].nnz(), mean, sd,
                     *std::min_element(t.begin(), t.end()), spec.reps});
  }
  return cells;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("slope needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t p = 0; p < x.size(); ++p) {
    if (!(x[p] > 0.0) || !(y[p] > 0.0)) throw DataError("log-log slope needs positive values");
    double lx = std::log(x[p]), ly = std::log(y[p]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double den = n * sxx - sx * sx;
  if (!(den > 0.0)) throw DataError("slope needs two distinct x values");
  return (n * sxy - sx * sy) / den;
}

std::map<std::string, double> bench_slopes(const std::vector<BenchCell>& cells) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_kernel;
  for (const auto& c : cells) {
    by_kernel[c.kernel].first.push_back(static_cast<double>(c.ratings));
    by_kernel[c.kernel].second.push_back(c.min_seconds);
  }
  std::map<std::string, double> out;
  for (const auto& [k, xy] : by_kernel)
    if (xy.first.size() >= 2) out[k] = loglog_slope(xy.first, xy.second);
  return out;
}

void write_bench_table(std::ostream& out, const std::vector<BenchCell>& cells) {
  out << "kernel\tdegree\trank\tratings\tmean_s\tstddev_s\tmin_s\treps\n";
  for (const auto& c : cells)
    out << c.kernel << '\t' << c.degree << '\t' << c.rank << '\t' << c.ratings << '\t'
        << detail::format_double(c.mean_seconds) << '\t' << detail::format_double(c.stddev_seconds) << '\t'
        << detail::format_double(c.min_seconds) << '\t' << c.reps << '\n';
  for (const auto& [k, s] : bench_slopes(cells))
    out << "# slope\t" << k << '\t' << detail::format_double(s) << '\n';
}

}  // namespace cfrank
