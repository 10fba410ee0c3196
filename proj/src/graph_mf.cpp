#include "cfrank/graph_mf.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "cfrank/error.hpp"
#include "cfrank/parallel.hpp"

namespace cfrank {

void MfHyper::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(mu >= 0.0)) throw ConfigError("mu must be >= 0");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  if (rank < 1) throw ConfigError("rank must be >= 1");
  if (!(step > 0.0)) throw ConfigError("step size must be > 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("decay must lie in (0, 1]");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

namespace {

constexpr std::uint64_t kShuffleSalt = 0x2545f4914f6cdd1dULL;

void check_dims(bool ok, const std::string& what) {
  if (!ok) throw DataError("dimension mismatch: " + what);
}

void check_factors(const RatingsMatrix& r, const Matrix& u, const Matrix& v) {
  check_dims(u.rows() >= r.n_users(), "U has fewer rows than users");
  check_dims(v.rows() == r.n_items(), "V rows differ from item count");
  check_dims(u.cols() == v.cols(), "U and V ranks differ");
}

void check_graph(const Graph& g, const Matrix& u) {
  check_dims(g.n() == u.rows(), "graph node count differs from U rows");
}

double data_sse(const RatingsMatrix& r, const Matrix& u, const Matrix& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.n_users(); ++i)
    for (const auto& e : r.user(i)) {
      double err = e.value - dot(u.row(i), v.row(e.index));
      s += err * err;
    }
  return s;
}

void add_data_gradient(const RatingsMatrix& r, const Matrix& u, const Matrix& v, Matrix& gu,
                       Matrix& gv) {
  for (std::size_t i = 0; i < r.n_users(); ++i)
    for (const auto& e : r.user(i)) {
      double err = e.value - dot(u.row(i), v.row(e.index));
      axpy(-2.0 * err, v.row(e.index), gu.row(i));
      axpy(-2.0 * err, u.row(i), gv.row(e.index));
    }
}

void add_scaled(Matrix& out, double alpha, const Matrix& x) {
  axpy(alpha, x.flat(), out.flat());
}

// out_a += 2 mu sum_b w_ab (u_a - u_b)
void add_laplacian_gradient(const Graph& g, const Matrix& u, double mu, Matrix& out) {
  if (mu == 0.0) return;
  for (std::size_t a = 0; a < g.n(); ++a)
    for (const auto& nb : g.neighbors(a)) {
      axpy(2.0 * mu * nb.weight, u.row(a), out.row(a));
      axpy(-2.0 * mu * nb.weight, u.row(nb.node), out.row(a));
    }
}

Matrix zeros_like(const Matrix& m) { return Matrix(m.rows(), m.cols()); }

}  // namespace

double laplacian_term(const Matrix& u, const Graph& g) {
  check_graph(g, u);
  double s = 0.0;
  for (std::size_t a = 0; a < g.n(); ++a)
    for (const auto& nb : g.neighbors(a)) {
      if (static_cast<std::size_t>(nb.node) <= a) continue;
      double d = 0.0;
      auto ua = u.row(a), ub = u.row(nb.node);
      for (std::size_t t = 0; t < ua.size(); ++t) d += (ua[t] - ub[t]) * (ua[t] - ub[t]);
      s += nb.weight * d;
    }
  return s;
}

double grmf_objective(const RatingsMatrix& r, const Matrix& u, const Matrix& v, const Graph& g,
                      double lambda, double mu) {
  check_factors(r, u, v);
  check_graph(g, u);
  double obj = data_sse(r, u, v) + 0.5 * lambda * (frobenius_sq(u) + frobenius_sq(v));
  if (mu != 0.0) obj += mu * laplacian_term(u, g);
  return obj;
}

void grmf_gradient(const RatingsMatrix& r, const Matrix& u, const Matrix& v, const Graph& g,
                   double lambda, double mu, Matrix& grad_u, Matrix& grad_v) {
  check_factors(r, u, v);
  check_graph(g, u);
  grad_u = zeros_like(u);
  grad_v = zeros_like(v);
  add_data_gradient(r, u, v, grad_u, grad_v);
  add_scaled(grad_u, lambda, u);
  add_scaled(grad_v, lambda, v);
  add_laplacian_gradient(g, u, mu, grad_u);
}

// ---------------------------------------------------------------------------
// Weighted implicit objective.

namespace {

// Gram matrix sum over rows [0, rows) of m, accumulated per block and merged
// in block order.
std::vector<double> gram(const Matrix& m, std::size_t rows, std::size_t threads) {
  const std::size_t r = m.cols();
  std::size_t blocks = std::max<std::size_t>(1, std::min(threads, std::max<std::size_t>(rows, 1)));
  std::vector<std::vector<double>> parts(blocks, std::vector<double>(r * r, 0.0));
  parallel_blocks(rows, blocks, [&](std::size_t b, std::size_t begin, std::size_t end) {
    auto& p = parts[b];
    for (std::size_t i = begin; i < end; ++i) {
      auto x = m.row(i);
      for (std::size_t s = 0; s < r; ++s)
        for (std::size_t t = 0; t < r; ++t) p[s * r + t] += x[s] * x[t];
    }
  });
  std::vector<double> out(r * r, 0.0);
  for (const auto& p : parts)
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += p[t];
  return out;
}

double quad_form(const std::vector<double>& a, std::span<const double> x) {
  const std::size_t r = x.size();
  double s = 0.0;
  for (std::size_t p = 0; p < r; ++p) {
    double row = 0.0;
    for (std::size_t q = 0; q < r; ++q) row += a[p * r + q] * x[q];
    s += x[p] * row;
  }
  return s;
}

void add_mat_vec(double alpha, const std::vector<double>& a, std::span<const double> x,
                 std::span<double> out) {
  const std::size_t r = x.size();
  for (std::size_t p = 0; p < r; ++p) {
    double row = 0.0;
    for (std::size_t q = 0; q < r; ++q) row += a[p * r + q] * x[q];
    out[p] += alpha * row;
  }
}

double grwmf_objective_impl(const RatingsMatrix& r, const Matrix& u, const Matrix& v,
                            const Graph& g, double lambda, double mu, double rho,
                            std::size_t threads) {
  check_factors(r, u, v);
  check_graph(g, u);
  auto vtv = gram(v, v.rows(), threads);
  const std::size_t n = r.n_users();
  std::size_t blocks = std::max<std::size_t>(1, std::min(threads, std::max<std::size_t>(n, 1)));
  std::vector<double> parts(blocks, 0.0);
  parallel_blocks(n, blocks, [&](std::size_t b, std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      auto ui = u.row(i);
      double zero_part = quad_form(vtv, ui);
      for (const auto& e : r.user(i)) {
        double pred = dot(ui, v.row(e.index));
        s += (e.value - pred) * (e.value - pred);
        zero_part -= pred * pred;
      }
      s += rho * zero_part;
    }
    parts[b] = s;
  });
  double obj = 0.0;
  for (double p : parts) obj += p;
  obj += 0.5 * lambda * (frobenius_sq(u) + frobenius_sq(v));
  if (mu != 0.0) obj += mu * laplacian_term(u, g);
  return obj;
}

void grwmf_gradient_impl(const RatingsMatrix& r, const Matrix& u, const Matrix& v, const Graph& g,
                         double lambda, double mu, double rho, std::size_t threads,
                         Matrix& grad_u, Matrix& grad_v) {
  check_factors(r, u, v);
  check_graph(g, u);
  const std::size_t n = r.n_users();
  grad_u = zeros_like(u);
  grad_v = zeros_like(v);
  auto vtv = gram(v, v.rows(), threads);
  auto utu = gram(u, n, threads);
  parallel_blocks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto ui = u.row(i);
      auto gi = grad_u.row(i);
      for (const auto& e : r.user(i)) {
        double pred = dot(ui, v.row(e.index));
        axpy(-2.0 * (e.value - pred) - 2.0 * rho * pred, v.row(e.index), gi);
      }
      add_mat_vec(2.0 * rho, vtv, ui, gi);
    }
  });
  parallel_blocks(v.rows(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      auto vj = v.row(j);
      auto gj = grad_v.row(j);
      for (const auto& e : r.item(j)) {
        double pred = dot(u.row(e.index), vj);
        axpy(-2.0 * (e.value - pred) - 2.0 * rho * pred, u.row(e.index), gj);
      }
      add_mat_vec(2.0 * rho, utu, vj, gj);
    }
  });
  add_scaled(grad_u, lambda, u);
  add_scaled(grad_v, lambda, v);
  add_laplacian_gradient(g, u, mu, grad_u);
}

}  // namespace

double grwmf_objective(const RatingsMatrix& r, const Matrix& u, const Matrix& v, const Graph& g,
                       double lambda, double mu, double rho) {
  return grwmf_objective_impl(r, u, v, g, lambda, mu, rho, 1);
}

void grwmf_gradient(const RatingsMatrix& r, const Matrix& u, const Matrix& v, const Graph& g,
                    double lambda, double mu, double rho, Matrix& grad_u, Matrix& grad_v) {
  grwmf_gradient_impl(r, u, v, g, lambda, mu, rho, 1, grad_u, grad_v);
}

// ---------------------------------------------------------------------------
// Co-Factor.

namespace {

void check_cofactor(const RatingsMatrix& r, const RatingsMatrix& side, const Matrix& u,
                    const Matrix& v, const Matrix& v_side) {
  check_factors(r, u, v);
  check_dims(side.n_users() == u.rows(), "side matrix rows differ from U rows");
  check_dims(r.n_users() == u.rows(), "U rows differ from user count");
  check_dims(v_side.rows() == side.n_items(), "V' rows differ from side columns");
  check_dims(v_side.cols() == u.cols(), "V' rank differs");
}

}  // namespace

double cofactor_objective(const RatingsMatrix& r, const RatingsMatrix& side, const Matrix& u,
                          const Matrix& v, const Matrix& v_side, double lambda) {
  check_cofactor(r, side, u, v, v_side);
  return data_sse(r, u, v) + data_sse(side, u, v_side) +
         0.5 * lambda * (frobenius_sq(u) + frobenius_sq(v) + frobenius_sq(v_side));
}

void cofactor_gradient(const RatingsMatrix& r, const RatingsMatrix& side, const Matrix& u,
                       const Matrix& v, const Matrix& v_side, double lambda, Matrix& grad_u,
                       Matrix& grad_v, Matrix& grad_v_side) {
  check_cofactor(r, side, u, v, v_side);
  grad_u = zeros_like(u);
  grad_v = zeros_like(v);
  grad_v_side = zeros_like(v_side);
  add_data_gradient(r, u, v, grad_u, grad_v);
  add_data_gradient(side, u, v_side, grad_u, grad_v_side);
  add_scaled(grad_u, lambda, u);
  add_scaled(grad_v, lambda, v);
  add_scaled(grad_v_side, lambda, v_side);
}

RatingsMatrix graph_as_matrix(const Graph& g) {
  std::vector<Triple> triples;
  triples.reserve(2 * g.num_edges());
  for (std::size_t a = 0; a < g.n(); ++a)
    for (const auto& nb : g.neighbors(a))
      triples.push_back({static_cast<std::int32_t>(a), nb.node, nb.weight});
  return RatingsMatrix::from_triples(g.n(), g.n(), std::move(triples), FeedbackMode::kReal);
}

// ---------------------------------------------------------------------------
// Training.

namespace {

using Clock = std::chrono::steady_clock;

enum class Kind : std::uint8_t { kRating, kEdge, kSide };

struct Sample {
  Kind kind;
  std::int32_t a;  // U row
  std::int32_t b;  // V row, U row or V' row
  double value;    // rating, edge weight or side value
};

template <bool Atomic>
inline double load(const double& x) {
  if constexpr (Atomic)
    return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
  else
    return x;
}

template <bool Atomic>
inline void store(double& x, double value) {
  if constexpr (Atomic)
    std::atomic_ref<double>(x).store(value, std::memory_order_relaxed);
  else
    x = value;
}

struct SgdState {
  Matrix u, v, v_side;
  std::vector<double> inv_u, inv_v, inv_side;  // 1 / samples touching the row
};

// One SGD step on the per-sample objective. The l2 term of each row is
// spread evenly over the samples that touch it, so an epoch sums to the full
// objective.
template <bool Atomic>
void sgd_step(const Sample& s, double step, double lambda, double mu, SgdState& st) {
  const std::size_t r = st.u.cols();
  double* x = st.u.row(s.a).data();
  if (s.kind == Kind::kEdge) {
    double* y = st.u.row(s.b).data();
    const double la = lambda * st.inv_u[s.a], lb = lambda * st.inv_u[s.b];
    const double c = 2.0 * mu * s.value;
    for (std::size_t t = 0; t < r; ++t) {
      double xt = load<Atomic>(x[t]), yt = load<Atomic>(y[t]);
      double d = xt - yt;
      store<Atomic>(x[t], xt - step * (c * d + la * xt));
      store<Atomic>(y[t], yt - step * (-c * d + lb * yt));
    }
    return;
  }
  double* y;
  double ly;
  if (s.kind == Kind::kRating) {
    y = st.v.row(s.b).data();
    ly = lambda * st.inv_v[s.b];
  } else {
    y = st.v_side.row(s.b).data();
    ly = lambda * st.inv_side[s.b];
  }
  const double lx = lambda * st.inv_u[s.a];
  double pred = 0.0;
  for (std::size_t t = 0; t < r; ++t) pred += load<Atomic>(x[t]) * load<Atomic>(y[t]);
  const double err = s.value - pred;
  for (std::size_t t = 0; t < r; ++t) {
    double xt = load<Atomic>(x[t]), yt = load<Atomic>(y[t]);
    store<Atomic>(x[t], xt - step * (-2.0 * err * yt + lx * xt));
    store<Atomic>(y[t], yt - step * (-2.0 * err * xt + ly * yt));
  }
}

std::vector<double> inverse_counts(const std::vector<std::size_t>& counts) {
  std::vector<double> inv(counts.size(), 0.0);
  for (std::size_t p = 0; p < counts.size(); ++p)
    if (counts[p]) inv[p] = 1.0 / static_cast<double>(counts[p]);
  return inv;
}

// Rows that no sample touches only carry the l2 term, whose minimizer is 0.
void zero_untouched(Matrix& m, const std::vector<std::size_t>& counts) {
  for (std::size_t p = 0; p < counts.size(); ++p)
    if (!counts[p]) std::fill(m.row(p).begin(), m.row(p).end(), 0.0);
}

double validation_rmse(const Matrix& u, const Matrix& v, Validation val) {
  if (!val.data || val.data->nnz() == 0) return std::numeric_limits<double>::quiet_NaN();
  const auto& d = *val.data;
  check_dims(d.n_users() <= u.rows() && d.n_items() == v.rows(), "validation data shape");
  return std::sqrt(data_sse(d, u, v) / static_cast<double>(d.nnz()));
}

struct SgdProblem {
  std::string algorithm;
  const RatingsMatrix* train = nullptr;
  const Graph* graph = nullptr;        // may be empty of edges
  const RatingsMatrix* side = nullptr; // Co-Factor only
};

double sgd_objective(const SgdProblem& p, const SgdState& st, const MfHyper& h) {
  if (p.side) return cofactor_objective(*p.train, *p.side, st.u, st.v, st.v_side, h.lambda);
  return grmf_objective(*p.train, st.u, st.v, *p.graph, h.lambda, h.mu);
}

FactorModel sgd_train(const SgdProblem& p, const MfHyper& h, Validation val) {
  h.validate();
  const RatingsMatrix& train = *p.train;
  const std::size_t n_u = p.graph->n();
  if (n_u < train.n_users())
    throw DataError("graph has " + std::to_string(n_u) + " nodes but the data has " +
                    std::to_string(train.n_users()) + " users");
  const bool use_edges = p.graph && h.mu > 0.0;

  std::vector<Sample> samples;
  samples.reserve(train.nnz() + (use_edges ? p.graph->num_edges() : 0) +
                  (p.side ? p.side->nnz() : 0));
  std::vector<std::size_t> cu(n_u, 0), cv(train.n_items(), 0),
      cs(p.side ? p.side->n_items() : 0, 0);
  for (std::size_t i = 0; i < train.n_users(); ++i)
    for (const auto& e : train.user(i)) {
      samples.push_back({Kind::kRating, static_cast<std::int32_t>(i), e.index, e.value});
      ++cu[i];
      ++cv[e.index];
    }
  if (use_edges)
    for (const auto& e : p.graph->edges()) {
      samples.push_back({Kind::kEdge, e.a, e.b, e.weight});
      ++cu[e.a];
      ++cu[e.b];
    }
  if (p.side)
    for (std::size_t i = 0; i < p.side->n_users(); ++i)
      for (const auto& e : p.side->user(i)) {
        samples.push_back({Kind::kSide, static_cast<std::int32_t>(i), e.index, e.value});
        ++cu[i];
        ++cs[e.index];
      }

  SgdState st;
  const double init_sd = 1.0 / std::sqrt(static_cast<double>(h.rank));
  std::mt19937_64 init_rng(h.seed);
  st.v = Matrix(train.n_items(), h.rank);
  st.u = Matrix(n_u, h.rank);
  fill_gaussian(st.v, init_sd, init_rng);
  fill_gaussian(st.u, init_sd, init_rng);
  if (p.side) {
    st.v_side = Matrix(p.side->n_items(), h.rank);
    fill_gaussian(st.v_side, init_sd, init_rng);
  }
  zero_untouched(st.u, cu);
  zero_untouched(st.v, cv);
  zero_untouched(st.v_side, cs);
  st.inv_u = inverse_counts(cu);
  st.inv_v = inverse_counts(cv);
  st.inv_side = inverse_counts(cs);

  std::mt19937_64 shuffle_rng(h.seed ^ kShuffleSalt);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  FactorModel model;
  model.algorithm = p.algorithm;
  auto t0 = Clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  double best_obj = sgd_objective(p, st, h);
  if (!std::isfinite(best_obj)) throw NumericalError("objective is not finite at epoch 0");
  SgdState best = st;
  model.log.push_back({0, best_obj, validation_rmse(st.u, st.v, val), seconds()});

  double step = h.step;
  const bool hogwild = !h.deterministic && h.threads > 1;
  for (int epoch = 1; epoch <= h.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    if (hogwild) {
      parallel_blocks(order.size(), h.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t q = begin; q < end; ++q)
          sgd_step<true>(samples[order[q]], step, h.lambda, h.mu, st);
      });
    } else {
      for (auto q : order) sgd_step<false>(samples[q], step, h.lambda, h.mu, st);
    }
    double obj = sgd_objective(p, st, h);
    if (!std::isfinite(obj))
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                           " (objective is not finite)");
    if (obj < best_obj) {
      best_obj = obj;
      best.u = st.u;
      best.v = st.v;
      best.v_side = st.v_side;
    }
    step *= h.decay;
    model.log.push_back({epoch, best_obj, validation_rmse(best.u, best.v, val), seconds()});
  }

  model.user_factors = Matrix(train.n_users(), h.rank);
  std::copy_n(best.u.flat().begin(), train.n_users() * h.rank,
              model.user_factors.flat().begin());
  model.item_factors = std::move(best.v);
  if (p.side) model.side_factors = std::move(best.v_side);
  return model;
}

}  // namespace

FactorModel mf_train(const RatingsMatrix& train, const MfHyper& hyper, Validation val) {
  Graph empty(train.n_users());
  MfHyper h = hyper;
  h.mu = 0.0;
  return sgd_train({"mf", &train, &empty, nullptr}, h, val);
}

FactorModel grmf_train(const RatingsMatrix& train, const Graph& g, const MfHyper& hyper,
                       Validation val) {
  return sgd_train({"grmf", &train, &g, nullptr}, hyper, val);
}

FactorModel cofactor_train(const RatingsMatrix& train, const RatingsMatrix& side,
                           const MfHyper& hyper, Validation val) {
  if (side.n_users() != train.n_users())
    throw DataError("side matrix must have one row per user");
  Graph empty(train.n_users());
  MfHyper h = hyper;
  h.mu = 0.0;
  return sgd_train({"cofactor", &train, &empty, &side}, h, val);
}

FactorModel grwmf_train(const RatingsMatrix& train, const Graph& g, const MfHyper& hyper,
                        Validation val) {
  hyper.validate();
  const std::size_t n_u = g.n();
  if (n_u < train.n_users())
    throw DataError("graph has " + std::to_string(n_u) + " nodes but the data has " +
                    std::to_string(train.n_users()) + " users");
  const double init_sd = 1.0 / std::sqrt(static_cast<double>(hyper.rank));
  std::mt19937_64 init_rng(hyper.seed);
  Matrix v(train.n_items(), hyper.rank), u(n_u, hyper.rank);
  fill_gaussian(v, init_sd, init_rng);
  fill_gaussian(u, init_sd, init_rng);

  auto objective = [&](const Matrix& uu, const Matrix& vv) {
    return grwmf_objective_impl(train, uu, vv, g, hyper.lambda, hyper.mu, hyper.rho,
                                hyper.threads);
  };

  FactorModel model;
  model.algorithm = "grwmf";
  auto t0 = Clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  double obj = objective(u, v);
  if (!std::isfinite(obj)) throw NumericalError("objective is not finite at epoch 0");
  model.log.push_back({0, obj, validation_rmse(u, v, val), seconds()});

  // Gradient descent with a bold-driver step: grow after an accepted step,
  // halve and retry after a rejected one.
  double step = hyper.step;
  Matrix gu, gv;
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    grwmf_gradient_impl(train, u, v, g, hyper.lambda, hyper.mu, hyper.rho, hyper.threads, gu, gv);
    bool accepted = false;
    bool finite_seen = false;
    for (int attempt = 0; attempt < 50 && !accepted; ++attempt) {
      Matrix tu = u, tv = v;
      add_scaled(tu, -step, gu);
      add_scaled(tv, -step, gv);
      double trial = objective(tu, tv);
      if (std::isfinite(trial)) finite_seen = true;
      if (std::isfinite(trial) && trial < obj) {
        u = std::move(tu);
        v = std::move(tv);
        obj = trial;
        accepted = true;
        step /= hyper.decay;
      } else {
        step *= 0.5;
      }
    }
    if (!finite_seen)
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                           " (objective is not finite)");
    model.log.push_back({epoch, obj, validation_rmse(u, v, val), seconds()});
    if (!accepted) break;
  }

  model.user_factors = Matrix(train.n_users(), hyper.rank);
  std::copy_n(u.flat().begin(), train.n_users() * hyper.rank, model.user_factors.flat().begin());
  model.item_factors = std::move(v);
  return model;
}

double rgg(double rmse_no_graph, double rmse_with_g, double rmse_with_x) {
  double den = rmse_no_graph - rmse_with_g;
  if (!(den > 0.0))
    throw DataError("relative graph gain is undefined: RMSE without graph must exceed RMSE with graph");
  return ((rmse_no_graph - rmse_with_x) / den - 1.0) * 100.0;
}

}  // namespace cfrank
