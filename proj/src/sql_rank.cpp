#include "cfrank/sql_rank.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "cfrank/error.hpp"
#include "cfrank/metrics.hpp"
#include "cfrank/parallel.hpp"

namespace cfrank {

void ListHyper::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (rank < 1) throw ConfigError("rank must be >= 1");
  if (!(rho_neg >= 0.0)) throw ConfigError("negative ratio must be >= 0");
  if (!(step > 0.0)) throw ConfigError("step size must be > 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("decay must lie in (0, 1]");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

std::size_t cutoff(std::size_t k, std::size_t len) { return k == 0 ? len : std::min(k, len); }

// log D_j = log sum_{l >= j} phi(s_l), by a backward log-space scan.
void suffix_log_sums(const std::vector<double>& sig, std::vector<double>& log_d) {
  const std::size_t len = sig.size();
  log_d.resize(len);
  double acc = -std::numeric_limits<double>::infinity();
  for (std::size_t j = len; j-- > 0;) {
    acc = log_add(acc, sig[j]);
    log_d[j] = acc;
  }
}

// Per-user work: scores of the list, their sigmoids and the gradient of the
// user's loss with respect to each score.
struct ListKernel {
  std::vector<double> s, sig, log_d, grad_s;

  void load(std::span<const std::int32_t> list, std::span<const double> ui, const Matrix& v) {
    s.resize(list.size());
    sig.resize(list.size());
    for (std::size_t p = 0; p < list.size(); ++p) {
      s[p] = dot(ui, v.row(list[p]));
      sig[p] = sigmoid(s[p]);
    }
    suffix_log_sums(sig, log_d);
  }

  double loss(std::size_t k) const {
    double f = 0.0;
    for (std::size_t j = 0; j < cutoff(k, s.size()); ++j) f += log_d[j] - sig[j];
    return f;
  }

  // d loss / d s_p = sigma'(s_p) (phi(s_p) sum_{j <= min(K-1, p)} 1/D_j - [p < K]).
  void score_gradient(std::size_t k) {
    const std::size_t len = s.size(), kk = cutoff(k, len);
    grad_s.resize(len);
    double prefix = 0.0;
    for (std::size_t p = 0; p < len; ++p) {
      if (p < kk) prefix += std::exp(-log_d[p]);
      double dsig = sig[p] * (1.0 - sig[p]);
      grad_s[p] = dsig * (std::exp(sig[p]) * prefix - (p < kk ? 1.0 : 0.0));
    }
  }
};

void check_batch(const Matrix& u, const Matrix& v, const PermutationBatch& batch) {
  if (u.rows() != batch.n_users() || v.rows() != batch.n_items || u.cols() != v.cols())
    throw DataError("dimension mismatch between factors and permutation batch");
}

}  // namespace

double log_perm_prob(std::span<const double> s, std::span<const std::int32_t> pi, std::size_t k) {
  std::vector<char> seen(s.size(), 0);
  for (auto idx : pi) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= s.size())
      throw DataError("invalid permutation: index " + std::to_string(idx) + " out of range");
    if (seen[idx]) throw DataError("invalid permutation: index " + std::to_string(idx) + " repeated");
    seen[idx] = 1;
  }
  std::vector<double> sig(pi.size()), log_d;
  for (std::size_t p = 0; p < pi.size(); ++p) sig[p] = sigmoid(s[pi[p]]);
  suffix_log_sums(sig, log_d);
  double lp = 0.0;
  for (std::size_t j = 0; j < cutoff(k, pi.size()); ++j) lp += sig[j] - log_d[j];
  return lp;
}

double perm_prob(std::span<const double> s, std::span<const std::int32_t> pi, std::size_t k) {
  return std::exp(log_perm_prob(s, pi, k));
}

namespace {

std::vector<std::int32_t> queue_user(const RatingsMatrix& r, std::size_t user, double rho_neg,
                                     ListMode mode, std::uint64_t seed, bool* short_of_negatives) {
  auto row = r.user(user);
  if (row.empty())
    throw DataError("user " + std::to_string(user) + " has no observed entries to rank");
  std::mt19937_64 rng(seed);
  std::vector<Rating> entries(row.begin(), row.end());
  std::shuffle(entries.begin(), entries.end(), rng);
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Rating& a, const Rating& b) { return a.value > b.value; });
  std::vector<std::int32_t> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.index);
  if (mode != ListMode::kImplicit) return out;

  const auto wanted = static_cast<std::size_t>(std::llround(rho_neg * static_cast<double>(row.size())));
  std::vector<std::int32_t> pool = unrated_candidates(r, user);
  std::size_t take = std::min(wanted, pool.size());
  if (short_of_negatives) *short_of_negatives = take < wanted;
  for (std::size_t p = 0; p < take; ++p) {
    std::uniform_int_distribution<std::size_t> pick(p, pool.size() - 1);
    std::swap(pool[p], pool[pick(rng)]);
    out.push_back(pool[p]);
  }
  return out;
}

}  // namespace

std::vector<std::int32_t> stochastic_queuing(const RatingsMatrix& r, std::size_t user,
                                             double rho_neg, ListMode mode, std::uint64_t seed) {
  if (user >= r.n_users()) throw DataError("user index out of range");
  if (!(rho_neg >= 0.0)) throw ConfigError("negative ratio must be >= 0");
  return queue_user(r, user, rho_neg, mode, seed, nullptr);
}

PermutationBatch PermutationBatch::from_lists(std::size_t n_items,
                                              const std::vector<std::vector<std::int32_t>>& lists) {
  PermutationBatch b;
  b.n_items = n_items;
  std::vector<char> seen(n_items, 0);
  for (const auto& list : lists) {
    for (auto j : list) {
      if (j < 0 || static_cast<std::size_t>(j) >= n_items)
        throw DataError("invalid permutation: item " + std::to_string(j) + " out of range");
      if (seen[j]) throw DataError("invalid permutation: item " + std::to_string(j) + " repeated");
      seen[j] = 1;
    }
    for (auto j : list) seen[j] = 0;
    b.items.insert(b.items.end(), list.begin(), list.end());
    b.ptr.push_back(b.items.size());
    b.observed.push_back(list.size());
  }
  return b;
}

PermutationBatch draw_batch(const RatingsMatrix& r, double rho_neg, ListMode mode,
                            std::uint64_t seed, std::size_t threads) {
  if (!(rho_neg >= 0.0)) throw ConfigError("negative ratio must be >= 0");
  const std::size_t n = r.n_users();
  std::vector<std::vector<std::int32_t>> lists(n);
  std::vector<char> short_of(n, 0);
  parallel_blocks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (r.user(i).empty()) continue;
      bool s = false;
      lists[i] = queue_user(r, i, rho_neg, mode, mix64(seed ^ mix64(i)), &s);
      short_of[i] = s;
    }
  });
  PermutationBatch b;
  b.n_items = r.n_items();
  b.seed = seed;
  b.includes_negatives = mode == ListMode::kImplicit;
  for (std::size_t i = 0; i < n; ++i) {
    b.items.insert(b.items.end(), lists[i].begin(), lists[i].end());
    b.ptr.push_back(b.items.size());
    b.observed.push_back(r.user(i).size());
    b.short_users += short_of[i];
  }
  return b;
}

double sql_objective(const Matrix& u, const Matrix& v, const PermutationBatch& batch,
                     double lambda, std::size_t k) {
  check_batch(u, v, batch);
  ListKernel kern;
  double f = 0.0;
  for (std::size_t i = 0; i < batch.n_users(); ++i) {
    auto list = batch.user(i);
    if (list.empty()) continue;
    kern.load(list, u.row(i), v);
    f += kern.loss(k);
  }
  return f + 0.5 * lambda * (frobenius_sq(u) + frobenius_sq(v));
}

Matrix grad_v_listwise(const Matrix& u, const Matrix& v, const PermutationBatch& batch,
                       double lambda, std::size_t k, std::size_t threads) {
  check_batch(u, v, batch);
  const std::size_t n = batch.n_users();
  const std::size_t blocks = std::max<std::size_t>(1, std::min(threads, std::max<std::size_t>(n, 1)));
  std::vector<Matrix> parts(blocks, Matrix(v.rows(), v.cols()));
  parallel_blocks(n, blocks, [&](std::size_t b, std::size_t begin, std::size_t end) {
    ListKernel kern;
    for (std::size_t i = begin; i < end; ++i) {
      auto list = batch.user(i);
      if (list.empty()) continue;
      kern.load(list, u.row(i), v);
      kern.score_gradient(k);
      for (std::size_t p = 0; p < list.size(); ++p)
        axpy(kern.grad_s[p], u.row(i), parts[b].row(list[p]));
    }
  });
  for (std::size_t b = 1; b < blocks; ++b) axpy(1.0, parts[b].flat(), parts[0].flat());
  axpy(lambda, v.flat(), parts[0].flat());
  return std::move(parts[0]);
}

Matrix grad_u_listwise(const Matrix& u, const Matrix& v, const PermutationBatch& batch,
                       double lambda, std::size_t k, std::size_t threads) {
  check_batch(u, v, batch);
  Matrix g(u.rows(), u.cols());
  parallel_blocks(batch.n_users(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    ListKernel kern;
    for (std::size_t i = begin; i < end; ++i) {
      auto list = batch.user(i);
      if (!list.empty()) {
        kern.load(list, u.row(i), v);
        kern.score_gradient(k);
        for (std::size_t p = 0; p < list.size(); ++p) axpy(kern.grad_s[p], v.row(list[p]), g.row(i));
      }
      axpy(lambda, u.row(i), g.row(i));
    }
  });
  return g;
}

void sql_gradient_naive(const Matrix& u, const Matrix& v, const PermutationBatch& batch,
                        double lambda, std::size_t k, Matrix& grad_u, Matrix& grad_v) {
  check_batch(u, v, batch);
  grad_u = Matrix(u.rows(), u.cols());
  grad_v = Matrix(v.rows(), v.cols());
  for (std::size_t i = 0; i < batch.n_users(); ++i) {
    auto list = batch.user(i);
    const std::size_t len = list.size();
    for (std::size_t j = 0; j < cutoff(k, len); ++j) {
      // -log phi(s_j)
      double sj = sigmoid(dot(u.row(i), v.row(list[j])));
      double c = -sj * (1.0 - sj);
      axpy(c, u.row(i), grad_v.row(list[j]));
      axpy(c, v.row(list[j]), grad_u.row(i));
      // + log sum_{l >= j} phi(s_l)
      double denom = 0.0;
      for (std::size_t l = j; l < len; ++l) denom += std::exp(sigmoid(dot(u.row(i), v.row(list[l]))));
      for (std::size_t l = j; l < len; ++l) {
        double sl = sigmoid(dot(u.row(i), v.row(list[l])));
        double w = std::exp(sl) * sl * (1.0 - sl) / denom;
        axpy(w, u.row(i), grad_v.row(list[l]));
        axpy(w, v.row(list[l]), grad_u.row(i));
      }
    }
  }
  axpy(lambda, u.flat(), grad_u.flat());
  axpy(lambda, v.flat(), grad_v.flat());
}

namespace {

using Clock = std::chrono::steady_clock;

// x <- x - ss * g, halving ss until the objective does not rise.
template <class Objective>
double descend(Matrix& x, const Matrix& g, double ss, double f_before, Objective objective) {
  for (int t = 0; t < 40; ++t, ss *= 0.5) {
    Matrix trial = x;
    axpy(-ss, g.flat(), trial.flat());
    double f = objective(trial);
    if (std::isfinite(f) && f <= f_before) {
      x = std::move(trial);
      return f;
    }
  }
  return f_before;
}

}  // namespace

FactorModel train_sql_rank(const RatingsMatrix& train, const ListHyper& hyper, ListMode mode,
                           ListValidation val) {
  hyper.validate();
  if (val.test && (val.test->n_users() > train.n_users() || val.test->n_items() != train.n_items()))
    throw DataError("validation data shape differs from training data");
  const double sd = 1.0 / std::sqrt(static_cast<double>(hyper.rank));
  std::mt19937_64 rng(hyper.seed);
  FactorModel model;
  model.algorithm = "sql-rank";
  model.item_factors = Matrix(train.n_items(), hyper.rank);
  model.user_factors = Matrix(train.n_users(), hyper.rank);
  fill_gaussian(model.item_factors, sd, rng);
  fill_gaussian(model.user_factors, sd, rng);
  Matrix& u = model.user_factors;
  Matrix& v = model.item_factors;

  auto epoch_seed = [&](int epoch) {
    return mix64(hyper.seed ^ (0xd1b54a32d192ed03ULL * static_cast<std::uint64_t>(epoch + 1)));
  };
  auto precision = [&]() {
    if (!val.test) return std::numeric_limits<double>::quiet_NaN();
    return mode == ListMode::kImplicit
               ? precision_at_k_implicit(model, train, *val.test, val.k)
               : precision_at_k_explicit(model, train, *val.test, val.k, val.threshold);
  };

  auto t0 = Clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  PermutationBatch batch = draw_batch(train, hyper.rho_neg, mode, epoch_seed(0), hyper.threads);
  double f = sql_objective(u, v, batch, hyper.lambda, hyper.k);
  model.log.push_back({0, f, precision(), seconds()});

  double ss = hyper.step;
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    if (hyper.stochastic_queuing)
      batch = draw_batch(train, hyper.rho_neg, mode, epoch_seed(epoch), hyper.threads);
    double before = sql_objective(u, v, batch, hyper.lambda, hyper.k);
    if (!std::isfinite(before))
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    Matrix gu = grad_u_listwise(u, v, batch, hyper.lambda, hyper.k, hyper.threads);
    double mid = descend(u, gu, ss, before, [&](const Matrix& trial) {
      return sql_objective(trial, v, batch, hyper.lambda, hyper.k);
    });
    Matrix gv = grad_v_listwise(u, v, batch, hyper.lambda, hyper.k, hyper.threads);
    f = descend(v, gv, ss, mid, [&](const Matrix& trial) {
      return sql_objective(u, trial, batch, hyper.lambda, hyper.k);
    });
    if (!std::isfinite(f) || !all_finite(u) || !all_finite(v))
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    model.log.push_back({epoch, f, precision(), seconds()});
    ss *= hyper.decay;
  }
  return model;
}

}  // namespace cfrank
