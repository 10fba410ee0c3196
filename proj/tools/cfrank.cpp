// cfrank: data preparation, graph encoding, training, evaluation and
// benchmarking for the collaborative ranking library.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "cfrank/bench.hpp"
#include "cfrank/config.hpp"
#include "cfrank/dna.hpp"
#include "cfrank/error.hpp"
#include "cfrank/graph.hpp"
#include "cfrank/graph_mf.hpp"
#include "cfrank/metrics.hpp"
#include "cfrank/primal_cr.hpp"
#include "cfrank/ratings.hpp"
#include "cfrank/sql_rank.hpp"
#include "cfrank/synthetic.hpp"

namespace fs = std::filesystem;
using namespace cfrank;

namespace {

void note(const std::string& msg) { std::cerr << "cfrank: " << msg << '\n'; }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

std::string output_dir(const RunConfig& cfg) {
  const auto& dir = cfg.require("output");
  fs::create_directories(dir);
  return dir;
}

struct IdTables {
  std::optional<std::vector<std::int64_t>> users, items;
  const std::vector<std::int64_t>* u() const { return users ? &*users : nullptr; }
  const std::vector<std::int64_t>* i() const { return items ? &*items : nullptr; }
};

IdTables id_tables(const RunConfig& cfg) {
  IdTables t;
  if (cfg.has("user_map")) {
    auto in = open_in(cfg.get("user_map"));
    t.users = load_id_map(in);
  }
  if (cfg.has("item_map")) {
    auto in = open_in(cfg.get("item_map"));
    t.items = load_id_map(in);
  }
  return t;
}

// Training data plus an optional held-out set sharing its index space.
struct Data {
  RatingsMatrix train;
  std::optional<RatingsMatrix> test;
};

Data load_data(const RunConfig& cfg, bool need_test) {
  FeedbackMode mode = cfg.feedback_mode();
  IdTables ids = id_tables(cfg);
  Data d;
  d.train = load_ratings_file(cfg.require("train"), mode, ids.u(), ids.i());
  if (need_test) cfg.require("test");
  if (cfg.has("test"))
    d.test = load_ratings_file(cfg.get("test"), mode, &d.train.user_ids(), &d.train.item_ids());
  note("loaded " + std::to_string(d.train.nnz()) + " training entries (" +
       std::to_string(d.train.n_users()) + " users, " + std::to_string(d.train.n_items()) +
       " items)");
  return d;
}

Graph load_user_graph(const RunConfig& cfg, const RatingsMatrix& train) {
  return load_graph_file(cfg.require("graph"), train.n_users(), &train.user_ids());
}

DnaEncoding load_encoding(const RunConfig& cfg, std::size_t n_users) {
  auto b = load_dna_file(cfg.require("dna"));
  if (b.n() != n_users)
    throw DataError("DNA encoding covers " + std::to_string(b.n()) + " nodes, data has " +
                    std::to_string(n_users) + " users");
  return b;
}

// Graph for grmf/grwmf according to graph_source.
Graph training_graph(const RunConfig& cfg, const RatingsMatrix& train) {
  const auto& src = cfg.get("graph_source");
  if (src == "none") return Graph(train.n_users());
  if (src == "raw") return load_user_graph(cfg, train);
  if (src == "dna") return augment_graph(load_user_graph(cfg, train), load_encoding(cfg, train.n_users()));
  throw ConfigError("graph_source must be raw, dna or none");
}

RatingsMatrix side_matrix(const RunConfig& cfg, const RatingsMatrix& train) {
  const auto& src = cfg.get("graph_source");
  if (src == "none")
    return RatingsMatrix::from_triples(train.n_users(), 0, {}, FeedbackMode::kReal);
  if (src == "raw") return graph_as_matrix(load_user_graph(cfg, train));
  if (src == "dna") return bipartite_view(load_encoding(cfg, train.n_users()));
  throw ConfigError("graph_source must be raw, dna or none");
}

const std::vector<std::string> kAlgorithms = {"mf",        "grmf",        "grwmf",   "cofactor",
                                              "primal-cr", "primal-crpp", "sql-rank"};

// Validates every option the command needs before any file is read.
void validate(const std::string& command, const RunConfig& cfg) {
  if (command == "split") {
    cfg.require("input");
    cfg.require("output");
    cfg.get_size("train_count");
    cfg.get_size("min_test");
    cfg.get_size("binarize");
    cfg.feedback_mode();
  } else if (command == "synth") {
    cfg.synthetic_spec();
    cfg.require("output");
  } else if (command == "encode") {
    cfg.require("graph");
    cfg.require("output");
    cfg.dna_config();
  } else if (command == "train") {
    const auto& alg = cfg.require("algorithm");
    if (std::find(kAlgorithms.begin(), kAlgorithms.end(), alg) == kAlgorithms.end())
      throw ConfigError("unknown algorithm '" + alg + "'");
    cfg.require("train");
    cfg.require("output");
    cfg.feedback_mode();
    if (alg == "primal-cr" || alg == "primal-crpp") {
      cfg.cr_hyper();
    } else if (alg == "sql-rank") {
      cfg.list_hyper();
    } else {
      cfg.mf_hyper();
      const auto& src = cfg.get("graph_source");
      if (src != "raw" && src != "dna" && src != "none")
        throw ConfigError("graph_source must be raw, dna or none");
      if (alg != "mf" && src != "none") cfg.require("graph");
      if (alg != "mf" && src == "dna") cfg.require("dna");
    }
  } else if (command == "eval") {
    cfg.require("model");
    cfg.require("train");
    cfg.require("test");
    cfg.require("output");
    if (cfg.get_size("eval_k") < 1) throw ConfigError("eval_k must be >= 1");
    if (!(cfg.get_double("halflife") > 1.0)) throw ConfigError("halflife must be > 1");
    cfg.get_double("threshold");
    cfg.get_double("neutral");
    cfg.feedback_mode();
  } else if (command == "bench") {
    cfg.require("output");
    cfg.get_size_list("bench_degrees");
    cfg.get_size("bench_users");
    cfg.get_size("bench_rank");
  }
}

int cmd_split(const RunConfig& cfg) {
  RatingsMatrix r = load_ratings_file(cfg.get("input"), cfg.feedback_mode());
  if (auto t = cfg.get_size("binarize")) r = binarize(r, static_cast<int>(t));
  auto split = split_fixed_count(r, cfg.get_size("train_count"), cfg.get_size("min_test"),
                                 static_cast<std::uint64_t>(cfg.get_int("seed")));
  const auto dir = output_dir(cfg);
  save_split(dir, split);
  cfg.save_file(dir + "/config.txt");
  note("split " + std::to_string(r.nnz()) + " entries into " + std::to_string(split.train.nnz()) +
       " train / " + std::to_string(split.test.nnz()) + " test");
  return 0;
}

int cmd_synth(const RunConfig& cfg) {
  auto data = generate_synthetic(cfg.synthetic_spec(), static_cast<std::uint64_t>(cfg.get_int("seed")));
  const auto dir = output_dir(cfg);
  save_ratings_file(dir + "/train.txt", data.train);
  save_ratings_file(dir + "/test.txt", data.test);
  save_graph_file(dir + "/graph.txt", data.graph);
  {
    auto out = open_out(dir + "/users.map");
    save_id_map(out, data.train.user_ids());
  }
  {
    auto out = open_out(dir + "/items.map");
    save_id_map(out, data.train.item_ids());
  }
  cfg.save_file(dir + "/config.txt");
  note("wrote " + std::to_string(data.train.nnz()) + " train / " + std::to_string(data.test.nnz()) +
       " test entries and " + std::to_string(data.graph.num_edges()) + " edges to " + dir);
  return 0;
}

int cmd_encode(const RunConfig& cfg) {
  DnaConfig dc = cfg.dna_config();
  IdTables ids = id_tables(cfg);
  std::size_t n = ids.users ? ids.users->size() : 0;
  Graph g = load_graph_file(cfg.get("graph"), n, ids.u());
  DnaEncoding b = dna_encode(g, dc);
  save_dna_file(cfg.get("output"), b);
  note("encoded " + std::to_string(g.n()) + " nodes with c=" + std::to_string(dc.bits) +
       " k=" + std::to_string(dc.hashes) + " d=" + std::to_string(dc.depth));
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const auto& alg = cfg.get("algorithm");
  Data d = load_data(cfg, false);
  const RatingsMatrix* test = d.test ? &*d.test : nullptr;
  FactorModel model;
  if (alg == "mf") {
    model = mf_train(d.train, cfg.mf_hyper(), {test});
  } else if (alg == "grmf") {
    model = grmf_train(d.train, training_graph(cfg, d.train), cfg.mf_hyper(), {test});
  } else if (alg == "grwmf") {
    model = grwmf_train(d.train, training_graph(cfg, d.train), cfg.mf_hyper(), {test});
  } else if (alg == "cofactor") {
    model = cofactor_train(d.train, side_matrix(cfg, d.train), cfg.mf_hyper(), {test});
  } else if (alg == "primal-cr" || alg == "primal-crpp") {
    auto variant = alg == "primal-cr" ? CrVariant::kPrimalCr : CrVariant::kPrimalCrPlusPlus;
    model = train_primal_cr(d.train, cfg.cr_hyper(), variant, {test});
  } else {
    ListMode mode = d.train.mode() == FeedbackMode::kImplicit ? ListMode::kImplicit : ListMode::kExplicit;
    model = train_sql_rank(d.train, cfg.list_hyper(), mode,
                           {test, cfg.get_size("eval_k"), cfg.get_double("threshold")});
  }
  const auto dir = output_dir(cfg);
  save_model_file(dir + "/model.txt", model);
  {
    auto out = open_out(dir + "/log.tsv");
    save_log(out, model.log);
  }
  {
    auto out = open_out(dir + "/users.map");
    save_id_map(out, d.train.user_ids());
  }
  {
    auto out = open_out(dir + "/items.map");
    save_id_map(out, d.train.item_ids());
  }
  cfg.save_file(dir + "/config.txt");
  note("trained " + alg + " for " + std::to_string(model.log.empty() ? 0 : model.log.back().epoch) +
       " epochs, final objective " + std::to_string(model.log.empty() ? 0.0 : model.log.back().objective));
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  FactorModel model = load_model_file(cfg.get("model"));
  Data d = load_data(cfg, true);
  const RatingsMatrix& test = *d.test;
  const std::size_t k = cfg.get_size("eval_k");
  std::vector<MetricLine> lines;
  lines.push_back({"ndcg", k, ndcg_at_k(model, test, k)});
  if (test.mode() == FeedbackMode::kImplicit) {
    lines.push_back({"precision", k, precision_at_k_implicit(model, d.train, test, k)});
    lines.push_back({"precision", 1, precision_at_k_implicit(model, d.train, test, 1)});
  } else {
    const double thr = cfg.get_double("threshold");
    lines.push_back({"precision", k, precision_at_k_explicit(model, d.train, test, k, thr)});
    lines.push_back({"precision", 1, precision_at_k_explicit(model, d.train, test, 1, thr)});
  }
  const double rel = test.mode() == FeedbackMode::kExplicit ? cfg.get_double("threshold") : 1.0;
  lines.push_back({"map", 0, map_score(model, d.train, test, rel)});
  lines.push_back({"recall", k, recall_at_k(model, d.train, test, k, rel)});
  lines.push_back({"hlu", 0, hlu(model, d.train, test, cfg.get_double("halflife"), cfg.get_double("neutral"))});
  try {
    lines.push_back({"pairwise_error", 0, pairwise_error(model, test)});
  } catch (const DataError&) {
    note("no comparable test pairs; pairwise error skipped");
  }
  lines.push_back({"rmse", 0, rmse(model, test)});
  if (cfg.has("rgg_no_graph") && cfg.has("rgg_with_g") && cfg.has("rgg_with_x"))
    lines.push_back({"rgg", 0,
                     rgg(cfg.get_double("rgg_no_graph"), cfg.get_double("rgg_with_g"),
                         cfg.get_double("rgg_with_x"))});
  auto out = open_out(cfg.get("output"));
  write_metrics_report(out, lines);
  return 0;
}

int cmd_bench(const RunConfig& cfg) {
  BenchSpec spec;
  spec.users = cfg.get_size("bench_users");
  spec.rank = cfg.get_size("bench_rank");
  spec.degrees = cfg.get_size_list("bench_degrees");
  spec.levels = static_cast<int>(cfg.get_int("bench_levels"));
  spec.reps = static_cast<int>(cfg.get_int("bench_reps"));
  spec.kernels.clear();
  for (const auto& k : CLI::detail::split(cfg.get("bench_kernels"), ','))
    spec.kernels.push_back(CLI::detail::trim_copy(k));
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  spec.threads = cfg.get_size("threads");
  auto cells = run_bench(spec);
  auto out = open_out(cfg.get("output"));
  write_bench_table(out, cells);
  for (const auto& [kernel, slope] : bench_slopes(cells))
    note("log-log slope " + kernel + " = " + std::to_string(slope));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collaborative ranking toolkit"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "key=value configuration file");
  std::map<std::string, std::string> flags;
  for (const auto& key : config_keys())
    app.add_option("--" + key.name, flags[key.name], key.help + " [" + key.default_value + "]");

  const std::map<std::string, std::string> commands = {
      {"split", "split a ratings file into train/test by a fixed count per user"},
      {"synth", "generate a synthetic dataset with a user graph"},
      {"encode", "compute the Graph DNA encoding of a graph"},
      {"train", "train a model"},
      {"eval", "evaluate a saved model"},
      {"bench", "time the pairwise kernels"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    cfg.apply_env();
    for (const auto& key : config_keys())
      if (app.count("--" + key.name)) cfg.set(key.name, flags[key.name], ConfigLayer::kFlag);
    validate(command, cfg);
    if (command == "split") return cmd_split(cfg);
    if (command == "synth") return cmd_synth(cfg);
    if (command == "encode") return cmd_encode(cfg);
    if (command == "train") return cmd_train(cfg);
    if (command == "eval") return cmd_eval(cfg);
    return cmd_bench(cfg);
  } catch (const Error& e) {
    std::cerr << "cfrank " << command << ": " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "cfrank " << command << ": " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  }
}
