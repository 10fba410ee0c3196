#include "cfrank/synthetic.hpp"

#include <random>

#include "cfrank/error.hpp"

namespace cfrank {

void SyntheticSpec::validate() const {
  if (n_users == 0 || n_items == 0 || rank == 0)
    throw ConfigError("synthetic spec needs n_users, n_items, rank >= 1");
  if (!(influence_weight >= 0.0 && influence_weight <= 1.0))
    throw ConfigError("influence weight must lie in [0, 1]");
  if (propagation_steps < 0) throw ConfigError("propagation steps must be >= 0");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw ConfigError("edge probability must lie in [0, 1]");
  if (train_frac < 0.0 || test_frac < 0.0 || train_frac + test_frac > 1.0)
    throw ConfigError("train and test fractions must be >= 0 and sum to at most 1");
}

Matrix propagate(const Matrix& u, const Graph& g, double w) {
  Matrix next(u.rows(), u.cols());
  for (std::size_t i = 0; i < u.rows(); ++i) {
    auto out = next.row(i);
    axpy(1.0 - w, u.row(i), out);
    for (const auto& nb : g.neighbors(i)) axpy(w, u.row(nb.node), out);
  }
  return next;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = spec.n_users, m = spec.n_items, r = spec.rank;
  // Independent streams so changing one knob does not reshuffle the others.
  std::mt19937_64 factor_rng(seed);
  std::mt19937_64 graph_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 sample_rng(seed ^ 0xc2b2ae3d27d4eb4fULL);

  SyntheticData data;
  data.user_factors = Matrix(n, r);
  data.item_factors = Matrix(m, r);
  fill_gaussian(data.user_factors, 1.0, factor_rng);
  fill_gaussian(data.item_factors, 1.0, factor_rng);

  std::vector<Edge> edges;
  std::bernoulli_distribution coin(spec.edge_prob);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(graph_rng))
        edges.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), 1.0});
  data.graph = Graph::from_edges(n, std::move(edges));

  for (int t = 0; t < spec.propagation_steps; ++t)
    data.user_factors = propagate(data.user_factors, data.graph, spec.influence_weight);

  // Sequential selection sampling over all n*m cells: every cell is
  // assigned to train, test or neither with the exact target counts.
  const std::uint64_t total = static_cast<std::uint64_t>(n) * m;
  std::uint64_t need_train = static_cast<std::uint64_t>(spec.train_frac * static_cast<double>(total));
  std::uint64_t need_test = static_cast<std::uint64_t>(spec.test_frac * static_cast<double>(total));
  std::vector<Triple> train, test;
  train.reserve(need_train);
  test.reserve(need_test);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uint64_t remaining = total;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j, --remaining) {
      if (need_train + need_test == 0) break;
      double x = unif(sample_rng) * static_cast<double>(remaining);
      bool to_train = x < static_cast<double>(need_train);
      bool to_test = !to_train && x < static_cast<double>(need_train + need_test);
      if (!to_train && !to_test) continue;
      Triple t{static_cast<std::int32_t>(i), static_cast<std::int32_t>(j),
               dot(data.user_factors.row(i), data.item_factors.row(j))};
      if (to_train) {
        train.push_back(t);
        --need_train;
      } else {
        test.push_back(t);
        --need_test;
      }
    }
  data.train = RatingsMatrix::from_triples(n, m, std::move(train), FeedbackMode::kReal);
  data.test = RatingsMatrix::from_triples(n, m, std::move(test), FeedbackMode::kReal);
  return data;
}

}  // namespace cfrank
