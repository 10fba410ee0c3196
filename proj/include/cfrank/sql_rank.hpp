#pragma once

// Listwise collaborative ranking. A user's list Pi is scored by the
// sequential-draw (Plackett-Luce) probability with phi(x) = exp(sigmoid(x)):
//   P(Pi) = prod_{j <= min(k, len)} phi(s_{Pi_j}) / sum_{l >= j} phi(s_{Pi_l}).
// Ties and missing entries are handled by re-drawing Pi every epoch
// (stochastic queuing).

#include <cstdint>
#include <span>
#include <vector>

#include "cfrank/factor_model.hpp"
#include "cfrank/matrix.hpp"
#include "cfrank/ratings.hpp"

namespace cfrank {

enum class ListMode { kExplicit, kImplicit };

struct ListHyper {
  double lambda = 0.01;
  std::size_t rank = 10;
  std::size_t k = 0;      // top-k truncation, 0 = full list
  double rho_neg = 3.0;   // sampled negatives per observed item (implicit mode)
  double step = 0.1;
  double decay = 0.95;
  int epochs = 50;
  bool stochastic_queuing = true;  // false: one list drawn once and reused
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  void validate() const;
};

double sigmoid(double x);

/// log P(pi) over the items listed in pi (a permutation of a subset of the
/// scored items). k = 0 means the whole list. Throws DataError when pi
/// repeats an index or points outside s.
double log_perm_prob(std::span<const double> s, std::span<const std::int32_t> pi, std::size_t k = 0);
double perm_prob(std::span<const double> s, std::span<const std::int32_t> pi, std::size_t k = 0);

/// Observed items by rating, highest first, uniformly shuffled within equal
/// ratings. Implicit mode then appends round(rho_neg * m~) distinct items
/// drawn uniformly from the items the user has no positive for (fewer when
/// not enough exist). Throws DataError when the user has no observed entry.
std::vector<std::int32_t> stochastic_queuing(const RatingsMatrix& r, std::size_t user,
                                             double rho_neg, ListMode mode, std::uint64_t seed);

/// One ranked list per user (empty for users without observed entries).
struct PermutationBatch {
  std::size_t n_items = 0;
  std::vector<std::size_t> ptr{0};
  std::vector<std::int32_t> items;
  std::vector<std::size_t> observed;  // leading observed entries per user
  bool includes_negatives = false;
  std::uint64_t seed = 0;
  std::size_t short_users = 0;  // users that had fewer unobserved items than requested

  std::size_t n_users() const noexcept { return ptr.size() - 1; }
  std::span<const std::int32_t> user(std::size_t i) const {
    return {items.data() + ptr[i], ptr[i + 1] - ptr[i]};
  }

  /// Builds a batch from explicit per-user lists.
  static PermutationBatch from_lists(std::size_t n_items,
                                     const std::vector<std::vector<std::int32_t>>& lists);
};

/// Draws a batch; user i's list uses a seed derived from (seed, i) only, so
/// the result does not depend on the thread count.
PermutationBatch draw_batch(const RatingsMatrix& r, double rho_neg, ListMode mode,
                            std::uint64_t seed, std::size_t threads = 1);

/// -sum_i log P(Pi_i) + lambda/2 (|U|^2 + |V|^2), in O(n len r).
double sql_objective(const Matrix& u, const Matrix& v, const PermutationBatch& batch,
                     double lambda, std::size_t k = 0);

/// Analytic gradients of sql_objective in V and U, O(n len r).
Matrix grad_v_listwise(const Matrix& u, const Matrix& v, const PermutationBatch& batch,
                       double lambda, std::size_t k = 0, std::size_t threads = 1);
Matrix grad_u_listwise(const Matrix& u, const Matrix& v, const PermutationBatch& batch,
                       double lambda, std::size_t k = 0, std::size_t threads = 1);

/// Double-loop reference gradients, O(n len^2 r).
void sql_gradient_naive(const Matrix& u, const Matrix& v, const PermutationBatch& batch,
                        double lambda, std::size_t k, Matrix& grad_u, Matrix& grad_v);

/// Held-out data for the per-epoch precision@k log (metric column).
struct ListValidation {
  const RatingsMatrix* test = nullptr;
  std::size_t k = 1;
  double threshold = 4.0;  // relevance cut in explicit mode
};

/// Each epoch draws a batch (or reuses the first one when stochastic
/// queuing is off), then takes a gradient step on U and one on V with step
/// size step * decay^epoch. A step that would raise the objective is halved
/// until it does not.
FactorModel train_sql_rank(const RatingsMatrix& train, const ListHyper& hyper, ListMode mode,
                           ListValidation val = {});

}  // namespace cfrank
