#include "cfrank/graph.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "cfrank/error.hpp"
#include "text_util.hpp"

namespace cfrank {

Graph Graph::from_edges(std::size_t n, std::vector<Edge> edges) {
  Graph g(n);
  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& e : edges) {
    if (e.a < 0 || e.b < 0 || static_cast<std::size_t>(e.a) >= n ||
        static_cast<std::size_t>(e.b) >= n)
      throw DataError("edge (" + std::to_string(e.a) + ", " + std::to_string(e.b) +
                      ") out of range for " + std::to_string(n) + " nodes");
    if (e.a == e.b) continue;
    directed.push_back(e);
    directed.push_back({e.b, e.a, e.weight});
  }
  std::stable_sort(directed.begin(), directed.end(), [](const Edge& x, const Edge& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  // Keep the last occurrence of each (a, b).
  std::vector<Edge> unique;
  unique.reserve(directed.size());
  for (const auto& e : directed) {
    if (!unique.empty() && unique.back().a == e.a && unique.back().b == e.b)
      unique.back().weight = e.weight;
    else
      unique.push_back(e);
  }
  for (const auto& e : unique) ++g.ptr_[e.a + 1];
  std::partial_sum(g.ptr_.begin(), g.ptr_.end(), g.ptr_.begin());
  g.adj_.reserve(unique.size());
  for (const auto& e : unique) g.adj_.push_back({e.b, e.weight});
  return g;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (std::size_t i = 0; i < n_; ++i)
    for (const auto& nb : neighbors(i))
      if (static_cast<std::size_t>(nb.node) > i)
        out.push_back({static_cast<std::int32_t>(i), nb.node, nb.weight});
  return out;
}

Graph load_graph(std::istream& in, std::size_t n, const std::vector<std::int64_t>* ids) {
  std::unordered_map<std::int64_t, std::int32_t> index;
  if (ids)
    for (std::size_t p = 0; p < ids->size(); ++p)
      index.emplace((*ids)[p], static_cast<std::int32_t>(p));

  std::vector<Edge> edges;
  std::int64_t max_id = -1;
  std::string line;
  std::size_t line_no = 0;
  std::optional<detail::Separator> sep;
  std::size_t header_nodes = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("# nodes ", 0) == 0) {
      header_nodes = detail::require_number<std::size_t>(detail::trim(line.substr(8)), line_no,
                                                         "node count");
      continue;
    }
    if (detail::is_skippable(line)) continue;
    if (!sep) sep = detail::detect_separator(detail::trim(line));
    auto f = detail::split_fields(line, *sep);
    if (f.size() < 2 || f.size() > 3) throw ParseError("expected 'u v [w]'", line_no);
    auto u = detail::require_number<std::int64_t>(f[0], line_no, "node id");
    auto v = detail::require_number<std::int64_t>(f[1], line_no, "node id");
    double w = f.size() == 3 ? detail::require_number<double>(f[2], line_no, "weight") : 1.0;
    if (u < 0 || v < 0) throw ParseError("node ids must be non-negative", line_no);
    if (ids) {
      auto a = index.find(u), b = index.find(v);
      if (a == index.end() || b == index.end()) continue;
      edges.push_back({a->second, b->second, w});
    } else {
      if (u > INT32_MAX || v > INT32_MAX) throw ParseError("node id too large", line_no);
      edges.push_back({static_cast<std::int32_t>(u), static_cast<std::int32_t>(v), w});
      max_id = std::max({max_id, u, v});
    }
  }
  std::size_t nodes = ids ? ids->size() : static_cast<std::size_t>(max_id + 1);
  if (n == 0 && !ids && header_nodes != 0) n = header_nodes;
  if (n != 0) {
    if (!ids && static_cast<std::size_t>(max_id + 1) > n)
      throw DataError("graph references node " + std::to_string(max_id) + " but n = " +
                      std::to_string(n));
    nodes = n;
  }
  return Graph::from_edges(nodes, std::move(edges));
}

Graph load_graph_file(const std::string& path, std::size_t n,
                      const std::vector<std::int64_t>* ids) {
  auto in = detail::open_input(path);
  return load_graph(in, n, ids);
}

void save_graph(std::ostream& out, const Graph& g) {
  out << "# nodes " << g.n() << '\n';
  for (const auto& e : g.edges())
    out << e.a << '\t' << e.b << '\t' << detail::format_double(e.weight) << '\n';
}

void save_graph_file(const std::string& path, const Graph& g) {
  auto out = detail::open_output(path);
  save_graph(out, g);
}

std::vector<int> bfs_distances(const Graph& g, std::size_t source, int max_depth) {
  std::vector<int> dist(g.n(), -1);
  std::deque<std::size_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    auto v = queue.front();
    queue.pop_front();
    if (dist[v] >= max_depth) continue;
    for (const auto& nb : g.neighbors(v))
      if (dist[nb.node] < 0) {
        dist[nb.node] = dist[v] + 1;
        queue.push_back(nb.node);
      }
  }
  return dist;
}

Graph graph_power(const Graph& g, int depth) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < g.n(); ++i) {
    auto dist = bfs_distances(g, i, depth);
    for (std::size_t j = i + 1; j < g.n(); ++j)
      if (dist[j] > 0) edges.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), 1.0});
  }
  return Graph::from_edges(g.n(), std::move(edges));
}

Graph graph_polynomial(const Graph& g, const std::vector<double>& weights) {
  const std::size_t n = g.n();
  std::vector<std::vector<Neighbor>> power(n), next(n);
  for (std::size_t i = 0; i < n; ++i) power[i].assign(g.neighbors(i).begin(), g.neighbors(i).end());
  std::vector<double> acc(n, 0.0), total(n, 0.0);
  std::vector<std::int32_t> touched;
  std::vector<std::vector<Neighbor>> sum(n);
  for (std::size_t p = 0; p < weights.size(); ++p) {
    if (p > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        touched.clear();
        for (const auto& a : power[i])
          for (const auto& b : g.neighbors(a.node)) {
            if (acc[b.node] == 0.0) touched.push_back(b.node);
            acc[b.node] += a.weight * b.weight;
          }
        std::sort(touched.begin(), touched.end());
        next[i].clear();
        for (auto j : touched) {
          if (acc[j] != 0.0) next[i].push_back({j, acc[j]});
          acc[j] = 0.0;
        }
      }
      power.swap(next);
    }
    if (weights[p] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      touched.clear();
      for (const auto& e : sum[i]) {
        touched.push_back(e.node);
        total[e.node] = e.weight;
      }
      for (const auto& e : power[i]) {
        if (total[e.node] == 0.0) touched.push_back(e.node);
        total[e.node] += weights[p] * e.weight;
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      sum[i].clear();
      for (auto j : touched) {
        if (total[j] != 0.0) sum[i].push_back({j, total[j]});
        total[j] = 0.0;
      }
    }
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& e : sum[i])
      if (static_cast<std::size_t>(e.node) > i)
        edges.push_back({static_cast<std::int32_t>(i), e.node, e.weight});
  return Graph::from_edges(n, std::move(edges));
}

}  // namespace cfrank
