#include "cfrank/primal_cr.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "cfrank/error.hpp"
#include "cfrank/fenwick.hpp"
#include "cfrank/metrics.hpp"
#include "cfrank/parallel.hpp"

namespace cfrank {

void CrHyper::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (rank < 1) throw ConfigError("rank must be >= 1");
  if (outer_iterations < 0) throw ConfigError("outer iterations must be >= 0");
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw ConfigError("tolerance must lie in (0, 1)");
  if (cg_max_iterations < 1) throw ConfigError("CG iterations must be >= 1");
  if (!(cg_tolerance > 0.0 && cg_tolerance < 1.0))
    throw ConfigError("CG tolerance must lie in (0, 1)");
  if (!(ls_shrink > 0.0 && ls_shrink < 1.0)) throw ConfigError("line-search shrink must lie in (0, 1)");
  if (!(ls_c1 > 0.0 && ls_c1 < 1.0)) throw ConfigError("Armijo constant must lie in (0, 1)");
  if (ls_max_steps < 1) throw ConfigError("line-search steps must be >= 1");
  if (u_newton_iterations < 1) throw ConfigError("user Newton iterations must be >= 1");
  if (u_cg_iterations < 0) throw ConfigError("user CG iterations must be >= 0");
  if (!(u_tolerance > 0.0 && u_tolerance < 1.0)) throw ConfigError("user tolerance must lie in (0, 1)");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

CrData::CrData(const RatingsMatrix& ratings) : data_(&ratings) {}

const ComparisonSet* CrData::pairs() const noexcept {
  auto p = std::get_if<const ComparisonSet*>(&data_);
  return p ? *p : nullptr;
}

const RatingsMatrix* CrData::ratings() const noexcept {
  auto p = std::get_if<const RatingsMatrix*>(&data_);
  return p ? *p : nullptr;
}

std::size_t CrData::n_users() const noexcept {
  return pairs() ? pairs()->n_users() : ratings()->n_users();
}

std::size_t CrData::n_items() const noexcept {
  return pairs() ? pairs()->n_items() : ratings()->n_items();
}

namespace {

void check_shapes(const Matrix& u, const Matrix& v, std::size_t n_users, std::size_t n_items) {
  if (u.rows() != n_users || v.rows() != n_items || u.cols() != v.cols())
    throw DataError("dimension mismatch between factors and comparisons");
}

// Per-user view used by all kernels: the user's items, their scores
// m_p = u.v_item(p), and either the local pair list or the rating levels.
class UserKernel {
 public:
  explicit UserKernel(const CrData& data) : data_(data) {}

  void load(std::size_t i, std::span<const double> u, const Matrix& v) {
    items_.clear();
    if (const auto* c = data_.pairs()) {
      auto it = c->items(i);
      items_.assign(it.begin(), it.end());
      pairs_ = c->local(i);
      has_pairs_ = !pairs_.empty();
    } else {
      load_levels(data_.ratings()->user(i));
    }
    const std::size_t d = items_.size();
    m_.resize(d);
    for (std::size_t p = 0; p < d; ++p) m_[p] = dot(u, v.row(items_[p]));
    if (data_.is_scan()) {
      order_.resize(d);
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
        return m_[a] < m_[b] || (m_[a] == m_[b] && a < b);
      });
    }
  }

  std::size_t size() const noexcept { return items_.size(); }
  bool has_pairs() const noexcept { return has_pairs_; }
  std::int32_t item(std::size_t p) const { return items_[p]; }
  const std::vector<double>& scores() const noexcept { return m_; }

  /// sum over active pairs of (1 - (m_hi - m_lo))^2.
  double loss() const {
    if (!data_.is_scan()) {
      double s = 0.0;
      for (const auto& lp : pairs_) {
        auto [hi, lo] = orient(lp);
        double d = m_[hi] - m_[lo];
        if (d <= 1.0) s += (1.0 - d) * (1.0 - d);
      }
      return s;
    }
    const std::size_t d = size();
    if (d == 0) return 0.0;
    // Centering keeps the expanded square well conditioned.
    const double c = m_[order_[d / 2]];
    LevelAccumulator acc(n_levels_);
    double s = 0.0;
    std::size_t ptr = d;
    for (std::size_t idx = d; idx-- > 0;) {
      const std::size_t j = order_[idx];
      while (ptr > 0 && m_[j] - m_[order_[ptr - 1]] <= 1.0) {
        --ptr;
        acc.insert(level_[order_[ptr]], m_[order_[ptr]] - c, true);
      }
      auto st = acc.below(level_[j]);
      double a = 1.0 - (m_[j] - c);
      s += st.count * a * a + 2.0 * a * st.sum + st.sumsq;
    }
    return s;
  }

  /// t_p = sum over active pairs where p is the higher item of
  /// 2 (x_p - x_lo - kappa), minus the same for pairs where p is the lower
  /// item. kappa = 1 with x = m gives the gradient coefficients, kappa = 0
  /// with x = u.a gives the Hessian-vector coefficients.
  void coeffs(const std::vector<double>& x, double kappa, std::vector<double>& t) const {
    const std::size_t d = size();
    t.assign(d, 0.0);
    if (!data_.is_scan()) {
      for (const auto& lp : pairs_) {
        auto [hi, lo] = orient(lp);
        if (m_[hi] - m_[lo] <= 1.0) {
          double c = 2.0 * (x[hi] - x[lo] - kappa);
          t[hi] += c;
          t[lo] -= c;
        }
      }
      return;
    }
    if (d == 0) return;
    LevelAccumulator acc(n_levels_);
    // p as the higher item: partners sit on lower levels with m_p - m_k <= 1.
    std::size_t ptr = d;
    for (std::size_t idx = d; idx-- > 0;) {
      const std::size_t j = order_[idx];
      while (ptr > 0 && m_[j] - m_[order_[ptr - 1]] <= 1.0) {
        --ptr;
        acc.insert(level_[order_[ptr]], x[order_[ptr]]);
      }
      auto st = acc.below(level_[j]);
      t[j] += 2.0 * (st.count * (x[j] - kappa) - st.sum);
    }
    // p as the lower item: partners sit on higher levels with m_k - m_p <= 1.
    acc.clear();
    ptr = 0;
    for (std::size_t idx = 0; idx < d; ++idx) {
      const std::size_t j = order_[idx];
      while (ptr < d && m_[order_[ptr]] - m_[j] <= 1.0) {
        acc.insert(level_[order_[ptr]], x[order_[ptr]]);
        ++ptr;
      }
      auto st = acc.above(level_[j]);
      t[j] += 2.0 * (st.count * (x[j] + kappa) - st.sum);
    }
  }

 private:
  static std::pair<std::size_t, std::size_t> orient(const LocalPair& lp) {
    return lp.y > 0 ? std::pair<std::size_t, std::size_t>(lp.p, lp.q)
                    : std::pair<std::size_t, std::size_t>(lp.q, lp.p);
  }

  void load_levels(std::span<const Rating> row) {
    const RatingsMatrix& r = *data_.ratings();
    level_.resize(row.size());
    for (const auto& e : row) items_.push_back(e.index);
    if (r.mode() == FeedbackMode::kExplicit) {
      n_levels_ = static_cast<std::size_t>(r.levels());
      for (std::size_t p = 0; p < row.size(); ++p)
        level_[p] = static_cast<std::size_t>(row[p].value) - 1;
    } else {
      values_.clear();
      for (const auto& e : row) values_.push_back(e.value);
      std::sort(values_.begin(), values_.end());
      values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
      n_levels_ = std::max<std::size_t>(values_.size(), 1);
      for (std::size_t p = 0; p < row.size(); ++p)
        level_[p] = static_cast<std::size_t>(
            std::lower_bound(values_.begin(), values_.end(), row[p].value) - values_.begin());
    }
    has_pairs_ = false;
    for (std::size_t p = 1; p < row.size() && !has_pairs_; ++p)
      has_pairs_ = level_[p] != level_[0];
  }

  const CrData& data_;
  std::vector<std::int32_t> items_;
  std::vector<double> m_;
  bool has_pairs_ = false;
  std::span<const LocalPair> pairs_;
  std::vector<std::size_t> level_;
  std::vector<double> values_;
  std::size_t n_levels_ = 0;
  std::vector<std::size_t> order_;
};

// Sums per-user contributions into an m x r matrix. Each block of users
// owns a buffer; buffers are merged in block order.
template <class Fn>
Matrix accumulate_items(const CrData& data, const Matrix& v, std::size_t threads, Fn per_user) {
  const std::size_t n = data.n_users();
  const std::size_t blocks = std::max<std::size_t>(1, std::min(threads, std::max<std::size_t>(n, 1)));
  std::vector<Matrix> parts(blocks, Matrix(v.rows(), v.cols()));
  parallel_blocks(n, blocks, [&](std::size_t b, std::size_t begin, std::size_t end) {
    UserKernel kernel(data);
    std::vector<double> x, t;
    for (std::size_t i = begin; i < end; ++i) per_user(kernel, i, x, t, parts[b]);
  });
  for (std::size_t b = 1; b < blocks; ++b) axpy(1.0, parts[b].flat(), parts[0].flat());
  return std::move(parts[0]);
}

Matrix grad_v_kernel(const Matrix& u, const Matrix& v, const CrData& data, double lambda,
                     std::size_t threads) {
  check_shapes(u, v, data.n_users(), data.n_items());
  Matrix g = accumulate_items(data, v, threads,
                              [&](UserKernel& k, std::size_t i, std::vector<double>&,
                                  std::vector<double>& t, Matrix& out) {
                                k.load(i, u.row(i), v);
                                if (!k.has_pairs()) return;
                                k.coeffs(k.scores(), 1.0, t);
                                for (std::size_t p = 0; p < k.size(); ++p)
                                  if (t[p] != 0.0) axpy(t[p], u.row(i), out.row(k.item(p)));
                              });
  axpy(lambda, v.flat(), g.flat());
  return g;
}

Matrix hessvec_kernel(const Matrix& u, const Matrix& v, const CrData& data, double lambda,
                      const Matrix& a, std::size_t threads) {
  check_shapes(u, v, data.n_users(), data.n_items());
  if (a.rows() != v.rows() || a.cols() != v.cols())
    throw DataError("dimension mismatch: direction must have the shape of V");
  Matrix h = accumulate_items(data, v, threads,
                              [&](UserKernel& k, std::size_t i, std::vector<double>& b,
                                  std::vector<double>& t, Matrix& out) {
                                k.load(i, u.row(i), v);
                                if (!k.has_pairs()) return;
                                b.resize(k.size());
                                for (std::size_t p = 0; p < k.size(); ++p)
                                  b[p] = dot(u.row(i), a.row(k.item(p)));
                                k.coeffs(b, 0.0, t);
                                for (std::size_t p = 0; p < k.size(); ++p)
                                  if (t[p] != 0.0) axpy(t[p], u.row(i), out.row(k.item(p)));
                              });
  axpy(lambda, a.flat(), h.flat());
  return h;
}

void add_pair_gradient(std::span<const double> ui, const Matrix& v, std::int32_t hi,
                       std::int32_t lo, Matrix& g) {
  double d = dot(ui, v.row(hi)) - dot(ui, v.row(lo));
  if (d <= 1.0) {
    double c = 2.0 * (d - 1.0);
    axpy(c, ui, g.row(hi));
    axpy(-c, ui, g.row(lo));
  }
}

}  // namespace

double cr_objective(const Matrix& u, const Matrix& v, const ComparisonSet& pairs, double lambda) {
  check_shapes(u, v, pairs.n_users(), pairs.n_items());
  double s = 0.0;
  for (std::size_t i = 0; i < pairs.n_users(); ++i)
    for (const auto& c : pairs.user(i)) {
      double a = c.y * (dot(u.row(i), v.row(c.j)) - dot(u.row(i), v.row(c.k)));
      double slack = std::max(0.0, 1.0 - a);
      s += slack * slack;
    }
  return s + 0.5 * lambda * (frobenius_sq(u) + frobenius_sq(v));
}

double cr_objective(const Matrix& u, const Matrix& v, const CrData& data, double lambda,
                    std::size_t threads) {
  check_shapes(u, v, data.n_users(), data.n_items());
  const std::size_t n = data.n_users();
  const std::size_t blocks = std::max<std::size_t>(1, std::min(threads, std::max<std::size_t>(n, 1)));
  std::vector<double> parts(blocks, 0.0);
  parallel_blocks(n, blocks, [&](std::size_t b, std::size_t begin, std::size_t end) {
    UserKernel kernel(data);
    for (std::size_t i = begin; i < end; ++i) {
      kernel.load(i, u.row(i), v);
      if (kernel.has_pairs()) parts[b] += kernel.loss();
    }
  });
  double s = 0.0;
  for (double p : parts) s += p;
  return s + 0.5 * lambda * (frobenius_sq(u) + frobenius_sq(v));
}

Matrix grad_v_naive(const Matrix& u, const Matrix& v, const ComparisonSet& pairs, double lambda) {
  check_shapes(u, v, pairs.n_users(), pairs.n_items());
  Matrix g(v.rows(), v.cols());
  for (std::size_t i = 0; i < pairs.n_users(); ++i)
    for (const auto& c : pairs.user(i)) {
      if (c.y > 0)
        add_pair_gradient(u.row(i), v, c.j, c.k, g);
      else
        add_pair_gradient(u.row(i), v, c.k, c.j, g);
    }
  axpy(lambda, v.flat(), g.flat());
  return g;
}

Matrix grad_v_naive(const Matrix& u, const Matrix& v, const RatingsMatrix& ratings, double lambda) {
  check_shapes(u, v, ratings.n_users(), ratings.n_items());
  Matrix g(v.rows(), v.cols());
  for (std::size_t i = 0; i < ratings.n_users(); ++i)
    for (const auto& c : enumerate_comparisons(ratings, i)) add_pair_gradient(u.row(i), v, c.j, c.k, g);
  axpy(lambda, v.flat(), g.flat());
  return g;
}

Matrix grad_v_fast(const Matrix& u, const Matrix& v, const ComparisonSet& pairs, double lambda,
                   std::size_t threads) {
  return grad_v_kernel(u, v, CrData(pairs), lambda, threads);
}

Matrix grad_v_scan_pp(const Matrix& u, const Matrix& v, const RatingsMatrix& ratings,
                      double lambda, std::size_t threads) {
  return grad_v_kernel(u, v, CrData(ratings), lambda, threads);
}

Matrix grad_v(const Matrix& u, const Matrix& v, const CrData& data, double lambda,
              std::size_t threads) {
  return grad_v_kernel(u, v, data, lambda, threads);
}

Matrix hessvec_v_fast(const Matrix& u, const Matrix& v, const ComparisonSet& pairs, double lambda,
                      const Matrix& a, std::size_t threads) {
  return hessvec_kernel(u, v, CrData(pairs), lambda, a, threads);
}

Matrix hessvec_v_scan_pp(const Matrix& u, const Matrix& v, const RatingsMatrix& ratings,
                         double lambda, const Matrix& a, std::size_t threads) {
  return hessvec_kernel(u, v, CrData(ratings), lambda, a, threads);
}

Matrix hessvec_v(const Matrix& u, const Matrix& v, const CrData& data, double lambda,
                 const Matrix& a, std::size_t threads) {
  return hessvec_kernel(u, v, data, lambda, a, threads);
}

double user_objective(std::size_t user, std::span<const double> u_row, const Matrix& v,
                      const CrData& data, double lambda) {
  UserKernel k(data);
  k.load(user, u_row, v);
  return (k.has_pairs() ? k.loss() : 0.0) + 0.5 * lambda * squared_norm(u_row);
}

std::vector<double> user_gradient(std::size_t user, std::span<const double> u_row, const Matrix& v,
                                  const CrData& data, double lambda) {
  UserKernel k(data);
  k.load(user, u_row, v);
  std::vector<double> g(u_row.begin(), u_row.end());
  for (double& x : g) x *= lambda;
  if (!k.has_pairs()) return g;
  std::vector<double> t;
  k.coeffs(k.scores(), 1.0, t);
  for (std::size_t p = 0; p < k.size(); ++p) axpy(t[p], v.row(k.item(p)), g);
  return g;
}

NewtonReport newton_update_v(const Matrix& u, Matrix& v, const CrData& data, const CrHyper& hyper) {
  hyper.validate();
  NewtonReport rep;
  const double lambda = hyper.lambda;
  rep.objective_before = cr_objective(u, v, data, lambda, hyper.threads);
  rep.objective_after = rep.objective_before;

  Matrix g = grad_v(u, v, data, lambda, hyper.threads);
  const double rr0 = squared_norm(g.flat());
  if (rr0 == 0.0) return rep;

  // Conjugate gradient on H delta = g.
  Matrix delta(v.rows(), v.cols());
  Matrix res = g, p = g;
  double rr = rr0;
  for (int it = 0; it < hyper.cg_max_iterations; ++it) {
    Matrix hp = hessvec_v(u, v, data, lambda, p, hyper.threads);
    double php = dot(p.flat(), hp.flat());
    if (!(php > 1e-14 * squared_norm(p.flat()))) {
      if (it == 0) {
        delta = g;
        rep.gradient_fallback = true;
      }
      break;
    }
    double alpha = rr / php;
    axpy(alpha, p.flat(), delta.flat());
    axpy(-alpha, hp.flat(), res.flat());
    ++rep.cg_iterations;
    double rr_new = squared_norm(res.flat());
    if (std::sqrt(rr_new) < hyper.cg_tolerance * std::sqrt(rr0)) break;
    double beta = rr_new / rr;
    for (std::size_t q = 0; q < p.size(); ++q) p.flat()[q] = res.flat()[q] + beta * p.flat()[q];
    rr = rr_new;
  }

  double slope = dot(g.flat(), delta.flat());
  if (!(slope > 0.0)) {
    delta = g;
    slope = rr0;
    rep.gradient_fallback = true;
  }

  double s = 1.0;
  for (int ls = 0; ls < hyper.ls_max_steps; ++ls, s *= hyper.ls_shrink) {
    Matrix trial = v;
    axpy(-s, delta.flat(), trial.flat());
    double f = cr_objective(u, trial, data, lambda, hyper.threads);
    if (std::isfinite(f) && f <= rep.objective_before - hyper.ls_c1 * s * slope) {
      v = std::move(trial);
      rep.step = s;
      rep.objective_after = f;
      return rep;
    }
  }
  return rep;
}

namespace {

// Newton's method on one user's rankSVM problem, with CG run to high
// accuracy since the system is only r x r.
void solve_user(UserKernel& k, std::size_t i, std::span<double> u, const Matrix& v,
                const CrHyper& hyper) {
  const std::size_t r = u.size();
  const double lambda = hyper.lambda;
  k.load(i, u, v);
  if (!k.has_pairs()) {
    std::fill(u.begin(), u.end(), 0.0);
    return;
  }
  std::vector<double> t, b, g(r), delta(r), res(r), p(r), hp(r), trial(r);
  auto objective = [&]() { return k.loss() + 0.5 * lambda * squared_norm(trial); };
  auto apply_vt = [&](std::span<double> out) {
    for (std::size_t q = 0; q < k.size(); ++q)
      if (t[q] != 0.0) axpy(t[q], v.row(k.item(q)), out);
  };

  double f0 = k.loss() + 0.5 * lambda * squared_norm(u);
  double g0 = -1.0;
  for (int it = 0; it < hyper.u_newton_iterations; ++it) {
    k.coeffs(k.scores(), 1.0, t);
    for (std::size_t q = 0; q < r; ++q) g[q] = lambda * u[q];
    apply_vt(g);
    double gn = std::sqrt(squared_norm(g));
    if (g0 < 0.0) g0 = gn;
    if (gn <= hyper.u_tolerance * std::max(1.0, g0)) break;

    std::fill(delta.begin(), delta.end(), 0.0);
    res = g;
    p = g;
    double rr = gn * gn;
    const double rr0 = rr;
    const std::size_t cg_cap =
        hyper.u_cg_iterations > 0 ? static_cast<std::size_t>(hyper.u_cg_iterations) : 2 * r + 2;
    for (std::size_t cg = 0; cg < cg_cap; ++cg) {
      b.resize(k.size());
      for (std::size_t q = 0; q < k.size(); ++q) b[q] = dot(p, v.row(k.item(q)));
      k.coeffs(b, 0.0, t);
      for (std::size_t q = 0; q < r; ++q) hp[q] = lambda * p[q];
      apply_vt(hp);
      double php = dot(p, hp);
      if (!(php > 0.0)) break;
      double alpha = rr / php;
      axpy(alpha, p, delta);
      axpy(-alpha, hp, res);
      double rr_new = squared_norm(res);
      if (rr_new <= 1e-24 * rr0) break;
      for (std::size_t q = 0; q < r; ++q) p[q] = res[q] + (rr_new / rr) * p[q];
      rr = rr_new;
    }
    double slope = dot(g, delta);
    if (!(slope > 0.0)) {
      delta = g;
      slope = gn * gn;
    }

    bool accepted = false;
    double s = 1.0;
    for (int ls = 0; ls < hyper.ls_max_steps; ++ls, s *= hyper.ls_shrink) {
      for (std::size_t q = 0; q < r; ++q) trial[q] = u[q] - s * delta[q];
      k.load(i, trial, v);
      double f = objective();
      if (std::isfinite(f) && f <= f0 - hyper.ls_c1 * s * slope) {
        std::copy(trial.begin(), trial.end(), u.begin());
        accepted = f < f0;
        f0 = f;
        break;
      }
    }
    if (!accepted) {
      k.load(i, u, v);
      break;
    }
  }
}

}  // namespace

double update_u_ranksvm(Matrix& u, const Matrix& v, const CrData& data, const CrHyper& hyper) {
  hyper.validate();
  check_shapes(u, v, data.n_users(), data.n_items());
  parallel_blocks(data.n_users(), hyper.threads,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    UserKernel kernel(data);
                    for (std::size_t i = begin; i < end; ++i)
                      solve_user(kernel, i, u.row(i), v, hyper);
                  });
  return cr_objective(u, v, data, hyper.lambda, hyper.threads);
}

namespace {

using Clock = std::chrono::steady_clock;

void validation_metrics(const Matrix& u, const Matrix& v, CrValidation val, EpochRecord& rec) {
  if (!val.test) return;
  FactorModel m;
  m.user_factors = u;
  m.item_factors = v;
  rec.metric = ndcg_at_k(m, *val.test, 10);
  try {
    rec.metric2 = pairwise_error(m, *val.test);
  } catch (const DataError&) {
    // no comparable pairs in the held-out data
  }
}

FactorModel train_impl(const CrData& data, const CrHyper& hyper, CrValidation val,
                       const std::string& algorithm) {
  hyper.validate();
  if (val.test && (val.test->n_users() > data.n_users() || val.test->n_items() != data.n_items()))
    throw DataError("validation data shape differs from training data");
  const double sd = 1.0 / std::sqrt(static_cast<double>(hyper.rank));
  std::mt19937_64 rng(hyper.seed);
  Matrix v(data.n_items(), hyper.rank), u(data.n_users(), hyper.rank);
  fill_gaussian(v, sd, rng);
  fill_gaussian(u, sd, rng);

  FactorModel model;
  model.algorithm = algorithm;
  auto t0 = Clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  double obj = cr_objective(u, v, data, hyper.lambda, hyper.threads);
  EpochRecord rec{0, obj, std::numeric_limits<double>::quiet_NaN(), 0.0};
  validation_metrics(u, v, val, rec);
  rec.seconds = seconds();
  model.log.push_back(rec);

  for (int epoch = 1; epoch <= hyper.outer_iterations; ++epoch) {
    newton_update_v(u, v, data, hyper);
    double next = update_u_ranksvm(u, v, data, hyper);
    if (!std::isfinite(next) || !all_finite(u) || !all_finite(v))
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    EpochRecord r{epoch, next, std::numeric_limits<double>::quiet_NaN(), 0.0};
    validation_metrics(u, v, val, r);
    r.seconds = seconds();
    model.log.push_back(r);
    double decrease = obj - next;
    obj = next;
    if (decrease < hyper.tolerance * std::abs(r.objective)) break;
  }
  model.user_factors = std::move(u);
  model.item_factors = std::move(v);
  return model;
}

}  // namespace

FactorModel train_primal_cr(const RatingsMatrix& train, const CrHyper& hyper, CrVariant variant,
                            CrValidation val) {
  if (variant == CrVariant::kPrimalCrPlusPlus)
    return train_impl(CrData(train), hyper, val, "primal-crpp");
  ComparisonSet pairs = ComparisonSet::from_ratings(train);
  return train_impl(CrData(pairs), hyper, val, "primal-cr");
}

FactorModel train_primal_cr(const ComparisonSet& train, const CrHyper& hyper, CrValidation val) {
  return train_impl(CrData(train), hyper, val, "primal-cr");
}

}  // namespace cfrank
