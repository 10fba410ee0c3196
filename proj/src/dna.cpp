#include "cfrank/dna.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "cfrank/error.hpp"
#include "cfrank/parallel.hpp"
#include "text_util.hpp"

namespace cfrank {

DnaEncoding::DnaEncoding(std::size_t n, const DnaConfig& cfg, std::vector<std::size_t> row_ptr,
                         std::vector<std::uint32_t> bits)
    : n_(n), cfg_(cfg), ptr_(std::move(row_ptr)), bits_(std::move(bits)) {
  if (ptr_.size() != n + 1 || ptr_.back() != bits_.size())
    throw DataError("malformed DNA encoding row pointers");
  for (std::size_t i = 0; i < n; ++i) {
    auto r = row(i);
    for (std::size_t p = 0; p < r.size(); ++p) {
      if (r[p] >= cfg_.bits) throw DataError("DNA bit index out of range");
      if (p > 0 && r[p] <= r[p - 1]) throw DataError("DNA row bits must be strictly increasing");
    }
  }
}

bool DnaEncoding::test(std::size_t i, std::size_t bit) const {
  auto r = row(i);
  return std::binary_search(r.begin(), r.end(), static_cast<std::uint32_t>(bit));
}

bool DnaEncoding::contains(std::size_t i, std::uint64_t node) const {
  for (auto p : hasher().positions(node))
    if (!test(i, p)) return false;
  return true;
}

bool operator==(const DnaEncoding& a, const DnaEncoding& b) {
  auto same_theta = a.cfg_.theta == b.cfg_.theta ||
                    (std::isnan(a.cfg_.theta) && std::isnan(b.cfg_.theta));
  return a.n_ == b.n_ && a.cfg_.bits == b.cfg_.bits && a.cfg_.hashes == b.cfg_.hashes &&
         a.cfg_.depth == b.cfg_.depth && same_theta && a.cfg_.seed1 == b.cfg_.seed1 &&
         a.cfg_.seed2 == b.cfg_.seed2 && a.ptr_ == b.ptr_ && a.bits_ == b.bits_;
}

DnaEncoding dna_encode(const Graph& g, const DnaConfig& cfg) {
  if (cfg.depth < 0) throw ConfigError("DNA depth must be >= 0");
  if (!(cfg.theta > 0.0)) throw ConfigError("DNA saturation cap theta must be > 0");
  const BloomHasher hasher(cfg.bits, cfg.hashes, cfg.seed1, cfg.seed2);
  const std::size_t n = g.n();
  const std::size_t words = (cfg.bits + 63) / 64;

  std::vector<std::uint64_t> prev(n * words, 0), next(n * words, 0);
  {
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) {
      hasher.positions(i, pos);
      for (auto p : pos) prev[i * words + (p >> 6)] |= std::uint64_t{1} << (p & 63);
    }
  }
  auto popcount = [&](const std::uint64_t* w) {
    std::size_t s = 0;
    for (std::size_t t = 0; t < words; ++t) s += static_cast<std::size_t>(std::popcount(w[t]));
    return s;
  };

  for (int round = 1; round <= cfg.depth; ++round) {
    parallel_blocks(n, cfg.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        std::uint64_t* dst = next.data() + i * words;
        std::copy_n(prev.data() + i * words, words, dst);
        const bool capped = std::isfinite(cfg.theta);
        for (const auto& nb : g.neighbors(i)) {
          if (capped && bloom_size_estimate(popcount(dst), cfg.bits, cfg.hashes) > cfg.theta)
            break;
          const std::uint64_t* src = prev.data() + static_cast<std::size_t>(nb.node) * words;
          for (std::size_t t = 0; t < words; ++t) dst[t] |= src[t];
        }
      }
    });
    std::swap(prev, next);
  }

  std::vector<std::size_t> ptr(n + 1, 0);
  std::vector<std::uint32_t> bits;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* w = prev.data() + i * words;
    for (std::size_t t = 0; t < words; ++t) {
      std::uint64_t x = w[t];
      while (x) {
        bits.push_back(static_cast<std::uint32_t>(t * 64 + std::countr_zero(x)));
        x &= x - 1;
      }
    }
    ptr[i + 1] = bits.size();
  }
  return DnaEncoding(n, cfg, std::move(ptr), std::move(bits));
}

Graph augment_graph(const Graph& g, const DnaEncoding& b) {
  if (b.n() != g.n())
    throw DataError("DNA encoding has " + std::to_string(b.n()) + " rows but graph has " +
                    std::to_string(g.n()) + " nodes");
  auto edges = g.edges();
  edges.reserve(edges.size() + b.nnz());
  const auto n = static_cast<std::int32_t>(g.n());
  for (std::size_t i = 0; i < b.n(); ++i)
    for (auto bit : b.row(i))
      edges.push_back({static_cast<std::int32_t>(i), n + static_cast<std::int32_t>(bit), 1.0});
  return Graph::from_edges(g.n() + b.bits(), std::move(edges));
}

RatingsMatrix bipartite_view(const DnaEncoding& b) {
  std::vector<Triple> ones;
  ones.reserve(b.nnz());
  for (std::size_t i = 0; i < b.n(); ++i)
    for (auto bit : b.row(i))
      ones.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(bit), 1.0});
  return RatingsMatrix::from_triples(b.n(), b.bits(), std::move(ones), FeedbackMode::kImplicit);
}

// File layout:
//   GRAPH-DNA v1
//   n <n> c <c> k <k> d <d> theta <theta|inf> seeds <s1> <s2>
//   one line per row: <count> <bit> <bit> ...
void save_dna(std::ostream& out, const DnaEncoding& b) {
  const auto& cfg = b.config();
  out << "GRAPH-DNA v1\n"
      << "n " << b.n() << " c " << cfg.bits << " k " << cfg.hashes << " d " << cfg.depth
      << " theta " << (std::isinf(cfg.theta) ? std::string("inf") : detail::format_double(cfg.theta))
      << " seeds " << cfg.seed1 << ' ' << cfg.seed2 << '\n';
  for (std::size_t i = 0; i < b.n(); ++i) {
    auto r = b.row(i);
    out << r.size();
    for (auto bit : r) out << ' ' << bit;
    out << '\n';
  }
}

DnaEncoding load_dna(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || detail::trim(line) != "GRAPH-DNA v1")
    throw ParseError("missing 'GRAPH-DNA v1' header", line_no);
  ++line_no;
  if (!std::getline(in, line)) throw ParseError("missing DNA parameter line", line_no);
  auto f = detail::split_fields(line, detail::Separator::kSpace);
  if (f.size() != 13 || f[0] != "n" || f[2] != "c" || f[4] != "k" || f[6] != "d" ||
      f[8] != "theta" || f[10] != "seeds")
    throw ParseError("malformed DNA parameter line", line_no);
  DnaConfig cfg;
  auto n = detail::require_number<std::size_t>(f[1], line_no, "n");
  cfg.bits = detail::require_number<std::size_t>(f[3], line_no, "c");
  cfg.hashes = detail::require_number<std::size_t>(f[5], line_no, "k");
  cfg.depth = detail::require_number<int>(f[7], line_no, "d");
  cfg.theta = f[9] == "inf" ? std::numeric_limits<double>::infinity()
                            : detail::require_number<double>(f[9], line_no, "theta");
  cfg.seed1 = detail::require_number<std::uint64_t>(f[11], line_no, "seed");
  cfg.seed2 = detail::require_number<std::uint64_t>(f[12], line_no, "seed");

  std::vector<std::size_t> ptr{0};
  std::vector<std::uint32_t> bits;
  for (std::size_t i = 0; i < n; ++i) {
    ++line_no;
    if (!std::getline(in, line)) throw ParseError("DNA file ends before row " + std::to_string(i), line_no);
    auto row = detail::split_fields(line, detail::Separator::kSpace);
    if (row.empty()) throw ParseError("empty DNA row", line_no);
    auto count = detail::require_number<std::size_t>(row[0], line_no, "row count");
    if (row.size() != count + 1) throw ParseError("DNA row count does not match entries", line_no);
    for (std::size_t p = 1; p < row.size(); ++p)
      bits.push_back(detail::require_number<std::uint32_t>(row[p], line_no, "bit index"));
    ptr.push_back(bits.size());
  }
  return DnaEncoding(n, cfg, std::move(ptr), std::move(bits));
}

void save_dna_file(const std::string& path, const DnaEncoding& b) {
  auto out = detail::open_output(path);
  save_dna(out, b);
}

DnaEncoding load_dna_file(const std::string& path) {
  auto in = detail::open_input(path);
  return load_dna(in);
}

}  // namespace cfrank
