#pragma once

// Pairwise collaborative ranking with the squared hinge loss
//   f(U, V) = sum_{(i,j,k)} max(0, 1 - Y_ijk u_i.(v_j - v_k))^2 + lambda/2 (|U|^2 + |V|^2).
// V is updated by truncated Newton (CG on the Hessian), each u_i by an
// independent r-dimensional Newton solve.
//
// Two kernel families share the solver:
//   - pair kernels walk an explicit comparison list, O(|Omega| + d1 d2 r);
//   - scan kernels never form pairs; they sort each user's items by score
//     and sweep them with level-indexed Fenwick accumulators,
//     O(d1 d2 (r + log d2)).
// A pair (hi, lo) is active when m_hi - m_lo <= 1, evaluated in that exact
// floating-point form by every kernel.

#include <cstdint>
#include <span>
#include <variant>

#include "cfrank/comparisons.hpp"
#include "cfrank/factor_model.hpp"
#include "cfrank/matrix.hpp"
#include "cfrank/ratings.hpp"

namespace cfrank {

struct CrHyper {
  double lambda = 1.0;
  std::size_t rank = 10;
  int outer_iterations = 30;
  double tolerance = 1e-4;     // stop on relative objective decrease below this
  int cg_max_iterations = 25;
  double cg_tolerance = 1e-2;  // ||r_k|| < cg_tolerance * ||r_0||
  double ls_shrink = 0.5;
  double ls_c1 = 1e-4;
  int ls_max_steps = 30;
  int u_newton_iterations = 10;
  int u_cg_iterations = 0;     // per-user CG cap, 0 = 2 r + 2
  double u_tolerance = 1e-9;   // per-user stop: ||grad|| <= u_tolerance * max(1, ||grad_0||)
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  void validate() const;
};

enum class CrVariant { kPrimalCr, kPrimalCrPlusPlus };

/// Training data for the pairwise solver: an explicit comparison set (pair
/// kernels) or a ratings matrix whose comparisons stay implicit (scan
/// kernels). Holds a non-owning pointer.
class CrData {
 public:
  explicit CrData(const ComparisonSet& pairs) : data_(&pairs) {}
  /// Explicit ratings must be integers in 1..L; other modes are ranked by value.
  explicit CrData(const RatingsMatrix& ratings);

  bool is_scan() const noexcept { return std::holds_alternative<const RatingsMatrix*>(data_); }
  const ComparisonSet* pairs() const noexcept;
  const RatingsMatrix* ratings() const noexcept;
  std::size_t n_users() const noexcept;
  std::size_t n_items() const noexcept;

 private:
  std::variant<const ComparisonSet*, const RatingsMatrix*> data_;
};

/// Scalar-by-scalar evaluation straight from the comparison list.
double cr_objective(const Matrix& u, const Matrix& v, const ComparisonSet& pairs, double lambda);
/// Kernel evaluation (pair or scan), O(d2 r) per user plus the kernel cost.
double cr_objective(const Matrix& u, const Matrix& v, const CrData& data, double lambda,
                    std::size_t threads = 1);

/// Gradient in V (m x r, row j = d f / d v_j) by adding one pair at a time.
Matrix grad_v_naive(const Matrix& u, const Matrix& v, const ComparisonSet& pairs, double lambda);
/// Same, enumerating each user's induced comparisons on the fly.
Matrix grad_v_naive(const Matrix& u, const Matrix& v, const RatingsMatrix& ratings, double lambda);
Matrix grad_v_fast(const Matrix& u, const Matrix& v, const ComparisonSet& pairs, double lambda,
                   std::size_t threads = 1);
Matrix grad_v_scan_pp(const Matrix& u, const Matrix& v, const RatingsMatrix& ratings,
                      double lambda, std::size_t threads = 1);
Matrix grad_v(const Matrix& u, const Matrix& v, const CrData& data, double lambda,
              std::size_t threads = 1);

/// Hessian of f(V) times a (m x r, same layout as V).
Matrix hessvec_v_fast(const Matrix& u, const Matrix& v, const ComparisonSet& pairs, double lambda,
                      const Matrix& a, std::size_t threads = 1);
Matrix hessvec_v_scan_pp(const Matrix& u, const Matrix& v, const RatingsMatrix& ratings,
                         double lambda, const Matrix& a, std::size_t threads = 1);
Matrix hessvec_v(const Matrix& u, const Matrix& v, const CrData& data, double lambda,
                 const Matrix& a, std::size_t threads = 1);

/// Per-user rankSVM objective h_i(u) = sum_{pairs of i} L(.) + lambda/2 |u|^2
/// and its gradient.
double user_objective(std::size_t user, std::span<const double> u_row, const Matrix& v,
                      const CrData& data, double lambda);
std::vector<double> user_gradient(std::size_t user, std::span<const double> u_row, const Matrix& v,
                                  const CrData& data, double lambda);

struct NewtonReport {
  int cg_iterations = 0;
  double step = 0.0;  // accepted line-search step, 0 when V was left unchanged
  bool gradient_fallback = false;
  double objective_before = 0.0;
  double objective_after = 0.0;
};

/// One truncated Newton step on V with Armijo backtracking.
NewtonReport newton_update_v(const Matrix& u, Matrix& v, const CrData& data, const CrHyper& hyper);

/// Solves every user's rankSVM subproblem with V fixed. Returns the full
/// objective afterwards.
double update_u_ranksvm(Matrix& u, const Matrix& v, const CrData& data, const CrHyper& hyper);

/// Held-out ratings; NDCG@10 goes to EpochRecord::metric and pairwise error
/// to EpochRecord::metric2.
struct CrValidation {
  const RatingsMatrix* test = nullptr;
};

/// Alternates V and U updates until the relative objective decrease falls
/// below hyper.tolerance or hyper.outer_iterations is reached. Primal-CR
/// materializes the comparisons; Primal-CR++ scans the ratings.
FactorModel train_primal_cr(const RatingsMatrix& train, const CrHyper& hyper, CrVariant variant,
                            CrValidation val = {});
FactorModel train_primal_cr(const ComparisonSet& train, const CrHyper& hyper,
                            CrValidation val = {});

}  // namespace cfrank
