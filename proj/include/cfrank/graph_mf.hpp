#pragma once

// Pointwise matrix factorization family: plain MF, graph-regularized MF
// (explicit feedback), graph-regularized weighted MF (implicit feedback) and
// Co-Factor. Each accepts the raw user graph or the DNA-augmented graph; in
// the augmented case U carries one extra row per pseudo-node during training
// and those rows are dropped from the returned model.

#include <cstdint>

#include "cfrank/factor_model.hpp"
#include "cfrank/graph.hpp"
#include "cfrank/matrix.hpp"
#include "cfrank/ratings.hpp"

namespace cfrank {

struct MfHyper {
  double lambda = 0.1;   // l2 weight
  double mu = 0.0;       // graph weight
  double rho = 0.01;     // confidence of zero entries (implicit only), in (0, 1)
  std::size_t rank = 10;
  double step = 0.01;    // initial SGD / GD step size
  double decay = 0.95;   // multiplicative step decay per epoch
  int epochs = 50;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool deterministic = true;

  void validate() const;
};

/// Laplacian quadratic form trace(U^T (D - W) U) = sum over undirected
/// edges of w_ab * ||u_a - u_b||^2.
double laplacian_term(const Matrix& u, const Graph& g);

/// sum_Omega (R_ij - u_i.v_j)^2 + lambda/2 (|U|^2 + |V|^2) + mu * laplacian_term(U, G).
/// U may have more rows than R has users (pseudo-nodes).
double grmf_objective(const RatingsMatrix& r, const Matrix& u, const Matrix& v, const Graph& g,
                      double lambda, double mu);
void grmf_gradient(const RatingsMatrix& r, const Matrix& u, const Matrix& v, const Graph& g,
                   double lambda, double mu, Matrix& grad_u, Matrix& grad_v);

/// Weighted implicit objective: every entry that is not a stored 1 counts as
/// a zero with weight rho. The zero part is evaluated through the Gram
/// identity sum_ij (u_i.v_j)^2 = sum_i u_i^T (V^T V) u_i in O((nnz + n + m) r^2).
double grwmf_objective(const RatingsMatrix& r, const Matrix& u, const Matrix& v, const Graph& g,
                       double lambda, double mu, double rho);
void grwmf_gradient(const RatingsMatrix& r, const Matrix& u, const Matrix& v, const Graph& g,
                    double lambda, double mu, double rho, Matrix& grad_u, Matrix& grad_v);

/// sum_{Omega_R} (R - u.v)^2 + sum_{Omega_S} (S - u.v')^2 + lambda/2 (|U|^2 + |V|^2 + |V'|^2).
double cofactor_objective(const RatingsMatrix& r, const RatingsMatrix& side, const Matrix& u,
                          const Matrix& v, const Matrix& v_side, double lambda);
void cofactor_gradient(const RatingsMatrix& r, const RatingsMatrix& side, const Matrix& u,
                       const Matrix& v, const Matrix& v_side, double lambda, Matrix& grad_u,
                       Matrix& grad_v, Matrix& grad_v_side);

/// Graph adjacency as an n x n real-valued side matrix (both directions).
RatingsMatrix graph_as_matrix(const Graph& g);

/// Optional held-out data whose RMSE is logged each epoch.
struct Validation {
  const RatingsMatrix* data = nullptr;
};

FactorModel mf_train(const RatingsMatrix& train, const MfHyper& hyper, Validation val = {});
FactorModel grmf_train(const RatingsMatrix& train, const Graph& g, const MfHyper& hyper,
                       Validation val = {});
FactorModel grwmf_train(const RatingsMatrix& train, const Graph& g, const MfHyper& hyper,
                        Validation val = {});
FactorModel cofactor_train(const RatingsMatrix& train, const RatingsMatrix& side,
                           const MfHyper& hyper, Validation val = {});

/// Relative graph gain in percent:
/// ((no_graph - with_x) / (no_graph - with_g) - 1) * 100.
/// Throws DataError when no_graph - with_g <= 0.
double rgg(double rmse_no_graph, double rmse_with_g, double rmse_with_x);

}  // namespace cfrank
