#pragma once

// Timing harness for the pairwise kernels over a grid of ratings-per-user
// values, with log-log slope fits of time against total ratings.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cfrank/ratings.hpp"

namespace cfrank {

struct BenchSpec {
  std::size_t users = 2000;
  std::size_t rank = 32;
  std::vector<std::size_t> degrees{50, 100, 200, 400};
  int levels = 5;
  int reps = 3;
  /// crpp: one Primal-CR++ outer iteration; crpp_grad: scan gradient only;
  /// naive: pair-by-pair gradient.
  std::vector<std::string> kernels{"crpp", "naive"};
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct BenchCell {
  std::string kernel;
  std::size_t degree = 0;
  std::size_t rank = 0;
  std::size_t ratings = 0;
  double mean_seconds = 0.0;
  double stddev_seconds = 0.0;
  double min_seconds = 0.0;
  int reps = 0;
};

/// Each user rates `degree` distinct items (out of 2 * max degree) with
/// levels drawn uniformly from 1..levels.
RatingsMatrix bench_ratings(std::size_t users, std::size_t items, std::size_t degree, int levels,
                            std::uint64_t seed);

std::vector<BenchCell> run_bench(const BenchSpec& spec);

/// Least-squares slope of log(y) against log(x). Needs two distinct x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Slope of fastest time against ratings, per kernel with at least two cells.
std::map<std::string, double> bench_slopes(const std::vector<BenchCell>& cells);

/// Tab-separated table followed by "# slope kernel value" lines.
void write_bench_table(std::ostream& out, const std::vector<BenchCell>& cells);

}  // namespace cfrank
