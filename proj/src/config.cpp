#include "cfrank/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>

#include "cfrank/bloom.hpp"
#include "cfrank/error.hpp"
#include "text_util.hpp"

namespace cfrank {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"algorithm", "", "mf | grmf | grwmf | cofactor | primal-cr | primal-crpp | sql-rank"},
      {"mode", "explicit", "feedback mode of ratings files: explicit | implicit | real"},
      {"input", "", "input ratings file"},
      {"train", "", "training ratings file"},
      {"test", "", "test ratings file (also used for per-epoch validation)"},
      {"user_map", "", "user id map (\"external_id index\" lines) fixing user indices"},
      {"item_map", "", "item id map fixing item indices"},
      {"graph", "", "user graph file"},
      {"dna", "", "DNA encoding file"},
      {"graph_source", "raw", "graph used by graph methods: raw | dna | none"},
      {"model", "", "model file"},
      {"output", "", "output directory or file"},
      {"seed", "1", "random seed"},
      {"threads", "1", "worker threads"},
      {"deterministic", "true", "bitwise-reproducible training"},
      // split
      {"train_count", "10", "training ratings kept per user"},
      {"min_test", "1", "minimum test ratings for a user to be kept"},
      {"binarize", "0", "explicit ratings >= this become 1 (0 = off)"},
      // synth
      {"users", "1000", "synthetic users"},
      {"items", "200", "synthetic items"},
      {"synth_rank", "10", "rank of the synthetic factors"},
      {"influence", "0.6", "graph influence weight w"},
      {"steps", "3", "propagation steps T"},
      {"edge_prob", "0.005", "Erdos-Renyi edge probability"},
      {"train_frac", "0.05", "fraction of cells sampled for training"},
      {"test_frac", "0.02", "fraction of cells sampled for testing"},
      // encode
      {"bits", "0", "Bloom filter bits c (0 = size from capacity and epsilon)"},
      {"hashes", "0", "hash functions k (0 = optimal for c and capacity)"},
      {"capacity", "0", "expected neighbourhood size"},
      {"epsilon", "0.1", "target false-positive rate"},
      {"depth", "3", "DNA depth d"},
      {"theta", "inf", "saturation threshold"},
      // train
      {"rank", "10", "latent dimension r"},
      {"lambda", "0.1", "l2 weight"},
      {"mu", "0", "graph weight"},
      {"rho", "0.01", "confidence of zero entries (grwmf)"},
      {"step", "0.01", "initial step size"},
      {"decay", "0.95", "step decay per epoch"},
      {"epochs", "50", "training epochs"},
      {"outer_iterations", "30", "Primal-CR outer iterations"},
      {"tolerance", "1e-4", "Primal-CR relative objective tolerance"},
      {"cg_max_iterations", "25", "CG iterations per Newton step"},
      {"cg_tolerance", "1e-2", "CG relative residual"},
      {"list_k", "0", "SQL-Rank top-k truncation (0 = full list)"},
      {"rho_neg", "3", "SQL-Rank negatives per observed item"},
      {"sq", "true", "SQL-Rank stochastic queuing"},
      // eval
      {"eval_k", "10", "cut-off for NDCG, precision and recall"},
      {"threshold", "4", "relevance threshold for explicit precision"},
      {"halflife", "5", "HLU half-life"},
      {"neutral", "0", "HLU neutral rating"},
      {"rgg_no_graph", "", "RMSE without graph"},
      {"rgg_with_g", "", "RMSE with raw graph"},
      {"rgg_with_x", "", "RMSE with the evaluated graph"},
      // bench
      {"bench_users", "2000", "users in the benchmark data"},
      {"bench_rank", "32", "rank in the benchmark"},
      {"bench_degrees", "50,100,200,400", "ratings per user grid"},
      {"bench_levels", "5", "rating levels in the benchmark data"},
      {"bench_reps", "3", "repetitions per cell"},
      {"bench_kernels", "crpp,naive", "kernels to time: crpp, cr, naive"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) {
    entries_[k.name] = {k.default_value, ConfigLayer::kDefault};
    values_[k.name] = k.default_value;
  }
}

void RunConfig::set(const std::string& key, const std::string& value, ConfigLayer layer) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  if (layer < it->second.layer) return;
  it->second = {value, layer};
  values_[key] = value;
}

void RunConfig::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_skippable(line)) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    std::string key(detail::trim(std::string_view(line).substr(0, eq)));
    std::string value(detail::trim(std::string_view(line).substr(eq + 1)));
    if (entries_.find(key) == entries_.end())
      throw ParseError("unknown configuration key '" + key + "'", line_no);
    set(key, value, ConfigLayer::kFile);
  }
}

void RunConfig::load_file(const std::string& path) {
  auto in = detail::open_input(path);
  load(in);
}

void RunConfig::apply_env(const std::function<const char*(const char*)>& lookup) {
  for (const auto& k : config_keys()) {
    std::string name = "CFRANK_" + k.name;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (const char* v = lookup(name.c_str())) set(k.name, v, ConfigLayer::kEnv);
  }
}

void RunConfig::apply_env() {
  apply_env([](const char* name) { return std::getenv(name); });
}

void RunConfig::save(std::ostream& out) const {
  for (const auto& k : config_keys()) out << k.name << '=' << values_.at(k.name) << '\n';
}

void RunConfig::save_file(const std::string& path) const {
  auto out = detail::open_output(path);
  save(out);
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second;
}

ConfigLayer RunConfig::layer(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second.layer;
}

const std::string& RunConfig::require(const std::string& key) const {
  const auto& v = get(key);
  if (v.empty()) throw ConfigError("missing required option '" + key + "'");
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  const auto& v = require(key);
  if (v == "inf") return std::numeric_limits<double>::infinity();
  auto x = detail::parse_number<double>(v);
  if (!x) throw ConfigError("option '" + key + "' expects a number, got '" + v + "'");
  return *x;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const auto& v = require(key);
  auto x = detail::parse_number<std::int64_t>(v);
  if (!x) throw ConfigError("option '" + key + "' expects an integer, got '" + v + "'");
  return *x;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  auto x = get_int(key);
  if (x < 0) throw ConfigError("option '" + key + "' must be >= 0");
  return static_cast<std::size_t>(x);
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& v = require(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("option '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::size_t> RunConfig::get_size_list(const std::string& key) const {
  std::vector<std::size_t> out;
  for (auto f : detail::split_fields(require(key), detail::Separator::kComma)) {
    auto x = detail::parse_number<std::size_t>(detail::trim(f));
    if (!x) throw ConfigError("option '" + key + "' expects a comma-separated list of integers");
    out.push_back(*x);
  }
  return out;
}

MfHyper RunConfig::mf_hyper() const {
  MfHyper h;
  h.lambda = get_double("lambda");
  h.mu = get_double("mu");
  h.rho = get_double("rho");
  h.rank = get_size("rank");
  h.step = get_double("step");
  h.decay = get_double("decay");
  h.epochs = static_cast<int>(get_int("epochs"));
  h.seed = static_cast<std::uint64_t>(get_int("seed"));
  h.threads = get_size("threads");
  h.deterministic = get_bool("deterministic");
  h.validate();
  return h;
}

CrHyper RunConfig::cr_hyper() const {
  CrHyper h;
  h.lambda = get_double("lambda");
  h.rank = get_size("rank");
  h.outer_iterations = static_cast<int>(get_int("outer_iterations"));
  h.tolerance = get_double("tolerance");
  h.cg_max_iterations = static_cast<int>(get_int("cg_max_iterations"));
  h.cg_tolerance = get_double("cg_tolerance");
  h.seed = static_cast<std::uint64_t>(get_int("seed"));
  h.threads = get_size("threads");
  h.validate();
  return h;
}

ListHyper RunConfig::list_hyper() const {
  ListHyper h;
  h.lambda = get_double("lambda");
  h.rank = get_size("rank");
  h.k = get_size("list_k");
  h.rho_neg = get_double("rho_neg");
  h.step = get_double("step");
  h.decay = get_double("decay");
  h.epochs = static_cast<int>(get_int("epochs"));
  h.stochastic_queuing = get_bool("sq");
  h.seed = static_cast<std::uint64_t>(get_int("seed"));
  h.threads = get_size("threads");
  h.validate();
  return h;
}

DnaConfig RunConfig::dna_config() const {
  DnaConfig c;
  c.bits = get_size("bits");
  c.hashes = get_size("hashes");
  std::size_t capacity = get_size("capacity");
  if (c.bits == 0) {
    if (capacity == 0) throw ConfigError("set either 'bits' or 'capacity'");
    auto p = bloom_params(capacity, get_double("epsilon"));
    c.bits = p.bits;
    if (c.hashes == 0) c.hashes = p.hashes;
  } else if (c.hashes == 0) {
    c.hashes = capacity == 0
                   ? 1
                   : std::max<std::size_t>(
                         1, static_cast<std::size_t>(std::llround(
                                static_cast<double>(c.bits) / static_cast<double>(capacity) *
                                std::log(2.0))));
  }
  c.depth = static_cast<int>(get_int("depth"));
  c.theta = get_double("theta");
  c.threads = get_size("threads");
  if (c.depth < 1) throw ConfigError("depth must be >= 1");
  return c;
}

SyntheticSpec RunConfig::synthetic_spec() const {
  SyntheticSpec s;
  s.n_users = get_size("users");
  s.n_items = get_size("items");
  s.rank = get_size("synth_rank");
  s.influence_weight = get_double("influence");
  s.propagation_steps = static_cast<int>(get_int("steps"));
  s.edge_prob = get_double("edge_prob");
  s.train_frac = get_double("train_frac");
  s.test_frac = get_double("test_frac");
  s.validate();
  return s;
}

FeedbackMode RunConfig::feedback_mode() const {
  try {
    return parse_feedback_mode(require("mode"));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace cfrank
