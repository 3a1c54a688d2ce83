#include <omp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gern/diagnostics.hpp"
#include "gern/error.hpp"
#include "gern/io.hpp"
#include "gern/linearize.hpp"
#include "gern/resistance.hpp"
#include "gern/spanning.hpp"
#include "gern/stats.hpp"
#include "gern/trainer.hpp"
#include "gern/version.hpp"
#include "gern/wta.hpp"
#include "json.hpp"

using namespace gern;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Globals {
  std::uint64_t seed = 0;
  int threads = 0;
  fs::path output_dir = "gern-out";
  std::string format = "csv";
};

// Rows of scalars written as CSV or a JSON array of objects.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  void add(std::vector<json> row) { rows.push_back(std::move(row)); }
};

std::string csv_cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    std::ostringstream out;
    out.precision(17);
    out << v.get<double>();
    return out.str();
  }
  return v.dump();
}

fs::path write_table(const Globals& g, const std::string& name, const Table& table) {
  const fs::path path = g.output_dir / (name + (g.format == "json" ? ".json" : ".csv"));
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  if (g.format == "json") {
    json array = json::array();
    for (const auto& row : table.rows) {
      json object;
      for (std::size_t c = 0; c < table.columns.size(); ++c) object[table.columns[c]] = row[c];
      array.push_back(object);
    }
    out << array.dump(2) << '\n';
  } else {
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_cell(row[c]);
      out << '\n';
    }
  }
  return path;
}

void write_run(const Globals& g, const std::string& command, const json& config, const json& timings,
               const json& results) {
  json run;
  run["command"] = command;
  run["version"] = kVersion;
  run["seed"] = g.seed;
  run["threads"] = omp_get_max_threads();
  run["format"] = g.format;
  run["config"] = config;
  run["timings"] = timings;
  run["results"] = results;
  std::ofstream out(g.output_dir / "run.json");
  if (!out) throw Error(ErrorKind::IoError, "cannot write run.json");
  out << run.dump(2) << '\n';
}

struct BundleArgs {
  std::string dir;
  bool largest_component = false;

  void attach(CLI::App* app) {
    app->add_option("--bundle", dir, "Dataset bundle directory")->required();
    app->add_flag("--largest-component", largest_component, "Keep only the largest connected component");
  }

  DatasetBundle load(json& config) const {
    LoadReport report;
    auto bundle = load_bundle(dir, {.largest_component = largest_component}, &report);
    config["bundle"] = dir;
    config["largest_component"] = largest_component;
    if (report.self_loops_dropped) std::cerr << "dropped " << report.self_loops_dropped << " self-loops\n";
    if (report.duplicate_edges_merged) {
      std::cerr << "merged " << report.duplicate_edges_merged << " duplicate edges\n";
    }
    if (report.nodes_dropped) {
      std::cerr << "kept the largest of " << report.components << " components, dropped "
                << report.nodes_dropped << " nodes\n";
    }
    return bundle;
  }
};

struct SplitArgs {
  std::string name;
  std::size_t per_class = 20;
  double fraction = 0.0;
  std::optional<std::size_t> val_count;

  void attach(CLI::App* app) {
    app->add_option("--split", name, "Named split stored in the bundle");
    app->add_option("--per-class", per_class, "Training nodes per class")->capture_default_str();
    app->add_option("--train-fraction", fraction, "Training fraction instead of --per-class");
    app->add_option("--val-count", val_count, "Validation size (default min(500, 25% of the rest))");
  }

  Split make(const DatasetBundle& bundle, std::uint64_t seed, json& config) const {
    if (!name.empty()) {
      const auto it = bundle.splits.find(name);
      if (it == bundle.splits.end()) throw Error(ErrorKind::InvalidArgument, "bundle has no split '" + name + "'");
      config["split"] = name;
      return it->second;
    }
    RngStream rng(seed, 4);
    const SplitMode mode = fraction > 0.0 ? SplitMode::train_fraction(fraction) : SplitMode::per_class_count(per_class);
    config["split"] = fraction > 0.0 ? json{{"train_fraction", fraction}} : json{{"per_class", per_class}};
    if (val_count) config["val_count"] = *val_count;
    return make_split(bundle.labels, mode, {.count = val_count, .fraction = std::nullopt}, rng);
  }
};

struct GeneratorArgs {
  std::string name = "a-rst";
  double beta = 0.5;

  void attach(CLI::App* app) {
    app->add_option("--generator", name, "wilson, aldous-broder, a-rst or bfs")->capture_default_str();
    app->add_option("--beta", beta, "A-RST walk length factor")->capture_default_str();
  }

  GeneratorSpec spec() const { return {parse_tree_generator(name), beta}; }
};

std::span<const NodeId> all_nodes(std::vector<NodeId>& storage, NodeId n) {
  storage.resize(n);
  for (NodeId v = 0; v < n; ++v) storage[v] = v;
  return storage;
}

// ---- train ----

struct TrainArgs {
  BundleArgs bundle;
  SplitArgs split;
  std::string config_file;
  std::vector<std::string> overrides;
  std::string checkpoint;
};

void run_train(const Globals& g, const TrainArgs& a) {
  json config;
  const auto bundle = a.bundle.load(config);
  TrainConfig tc = a.config_file.empty() ? TrainConfig{} : load_train_config(a.config_file);
  tc.seed = g.seed;
  for (const auto& entry : a.overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "--set expects key=value, got '" + entry + "'");
    apply_config_entry(tc, entry.substr(0, eq), entry.substr(eq + 1));
  }
  tc.validate();
  const Split split = a.split.make(bundle, g.seed, config);
  split.validate(bundle.graph.node_count());
  config["train"] = {{"max_epochs", tc.max_epochs},   {"layers", tc.layers},
                     {"hidden", tc.hidden},           {"pool_size", tc.pool_size},
                     {"generator", std::string(to_string(tc.generator))},
                     {"beta", tc.beta},               {"topology", to_string(tc.topology)},
                     {"lr", tc.lr},                   {"weight_decay", tc.weight_decay},
                     {"dropout", tc.dropout},         {"lr_decay", tc.schedule.decay_factor},
                     {"patience", tc.schedule.patience}, {"lr_min", tc.schedule.lr_min},
                     {"max_steps_per_lr", tc.schedule.max_steps_per_lr},
                     {"val_every", tc.val_every},
                     {"degree_convention", tc.degree_convention == DegreeConvention::SelfLoop ? "self-loop" : "plain"},
                     {"seed", tc.seed}};

  const auto start = Clock::now();
  const auto result = train_gern(bundle.graph, bundle.features, bundle.labels, split, tc);
  const double train_seconds = seconds_since(start);
  const auto test = split.test.empty()
                        ? Evaluation{}
                        : evaluate(result.model, bundle.graph, bundle.features, bundle.labels, split.test,
                                   tc.degree_convention);

  Table history{{"epoch", "pool_index", "lr", "train_loss", "validated", "val_loss", "val_accuracy", "train_nodes",
                 "train_edges", "step_seconds"},
                {}};
  double step_total = 0.0;
  for (const auto& r : result.history.records) {
    history.add({r.epoch, r.pool_index, r.lr, r.train_loss, r.validated ? 1 : 0, r.val_loss, r.val_accuracy,
                 r.train_nodes, r.train_edges, r.step_seconds});
    step_total += r.step_seconds;
  }
  write_table(g, "history", history);
  const fs::path ckpt = a.checkpoint.empty() ? g.output_dir / "model.ckpt" : fs::path(a.checkpoint);
  save_checkpoint(result.model, ckpt);

  const double mean_step = step_total / static_cast<double>(std::max<std::size_t>(1, result.history.records.size()));
  write_run(g, "train", config,
            {{"total_seconds", train_seconds},
             {"pool_seconds", result.history.pool_seconds},
             {"mean_step_seconds", mean_step}},
            {{"epochs", result.history.records.size()},
             {"best_epoch", result.history.best_epoch},
             {"best_val_accuracy", result.history.best_val_accuracy},
             {"stopped_by_schedule", result.history.stopped_by_schedule},
             {"test_accuracy", test.accuracy},
             {"test_loss", test.loss},
             {"checkpoint", ckpt.string()}});
  std::cout << "epochs " << result.history.records.size() << ", best epoch " << result.history.best_epoch
            << ", val accuracy " << result.history.best_val_accuracy << ", test accuracy " << test.accuracy
            << ", mean step " << 1e3 * mean_step << " ms\n";
}

// ---- evaluate ----

struct EvaluateArgs {
  BundleArgs bundle;
  SplitArgs split;
  std::string checkpoint;
  std::string subset = "test";
  std::string convention = "self-loop";
  std::size_t block_rows = 0;
};

void run_evaluate(const Globals& g, const EvaluateArgs& a) {
  json config;
  const auto bundle = a.bundle.load(config);
  const auto model = load_checkpoint(a.checkpoint);
  config["checkpoint"] = a.checkpoint;
  config["subset"] = a.subset;
  config["block_rows"] = a.block_rows;
  std::vector<NodeId> storage;
  std::span<const NodeId> nodes;
  Split split;
  if (a.subset == "all") {
    nodes = all_nodes(storage, bundle.graph.node_count());
  } else {
    split = a.split.make(bundle, g.seed, config);
    nodes = a.subset == "train" ? split.train : a.subset == "validation" ? split.validation : split.test;
  }
  const auto convention = a.convention == "plain" ? DegreeConvention::Plain : DegreeConvention::SelfLoop;
  const auto start = Clock::now();
  const auto eval = evaluate(model, bundle.graph, bundle.features, bundle.labels, nodes, convention, a.block_rows);
  const double seconds = seconds_since(start);
  Table predictions{{"node", "label", "prediction"}, {}};
  for (NodeId v = 0; v < bundle.graph.node_count(); ++v) {
    predictions.add({v, bundle.labels[v], eval.predictions[v]});
  }
  write_table(g, "predictions", predictions);
  write_run(g, "evaluate", config, {{"inference_seconds", seconds}},
            {{"accuracy", eval.accuracy}, {"loss", eval.loss}, {"nodes", nodes.size()}});
  std::cout << a.subset << " accuracy " << eval.accuracy << " (" << nodes.size() << " nodes), loss " << eval.loss
            << '\n';
}

// ---- rst-stats ----

struct RstStatsArgs {
  BundleArgs bundle;
  GeneratorArgs generator;
  std::uint64_t trials = 10000;
  std::string compare;
  bool exact = false;
};

void run_rst_stats(const Globals& g, const RstStatsArgs& a) {
  json config;
  const auto bundle = a.bundle.load(config);
  config["generator"] = a.generator.name;
  config["beta"] = a.generator.beta;
  config["trials"] = a.trials;
  const auto start = Clock::now();
  const auto table = edge_inclusion_frequencies(bundle.graph, a.generator.spec(), a.trials, RngStream(g.seed, 5));
  json timings{{"sampling_seconds", seconds_since(start)}};
  std::optional<EdgeFrequencyTable> other;
  if (!a.compare.empty()) {
    config["compare"] = a.compare;
    other = edge_inclusion_frequencies(bundle.graph, {parse_tree_generator(a.compare), a.generator.beta}, a.trials,
                                       RngStream(g.seed, 6));
  }
  std::optional<ResistanceMatrix> exact;
  if (a.exact) {
    const auto t = Clock::now();
    exact = effective_resistance_exact(bundle.graph);
    timings["exact_seconds"] = seconds_since(t);
  }
  Table out{{"u", "v", "frequency", "std_error"}, {}};
  if (other) out.columns.insert(out.columns.end(), {"compare_frequency"});
  if (exact) out.columns.insert(out.columns.end(), {"resistance"});
  json results;
  double gap = 0.0, other_gap = 0.0;
  for (EdgeId e = 0; e < table.edges.size(); ++e) {
    std::vector<json> row{table.edges[e].u, table.edges[e].v, table.frequency(e), table.standard_error(e)};
    if (other) row.push_back(other->frequency(e));
    if (exact) {
      const double r = exact->edge_values()[e];
      row.push_back(r);
      gap += std::abs(table.frequency(e) - r);
      if (other) other_gap += std::abs(other->frequency(e) - r);
    }
    out.add(std::move(row));
  }
  write_table(g, "edge_frequencies", out);
  const double m = static_cast<double>(std::max<std::size_t>(1, table.edges.size()));
  if (other) {
    const auto cmp = compare_frequency_tables(table, *other);
    results["compare"] = {{"mean_abs_diff", cmp.mean_abs_diff}, {"ks_statistic", cmp.ks_statistic},
                          {"ks_pvalue", cmp.ks_pvalue}};
    std::cout << a.generator.name << " vs " << a.compare << ": mean |diff| " << cmp.mean_abs_diff << ", KS "
              << cmp.ks_statistic << " (p " << cmp.ks_pvalue << ")\n";
  }
  if (exact) {
    results["mean_abs_gap_to_exact"] = gap / m;
    std::cout << a.generator.name << " mean |freq - r| " << gap / m << '\n';
    if (other) {
      results["compare_mean_abs_gap_to_exact"] = other_gap / m;
      std::cout << a.compare << " mean |freq - r| " << other_gap / m << '\n';
    }
  }
  write_run(g, "rst-stats", config, timings, results);
}

// ---- resistance ----

struct ResistanceArgs {
  BundleArgs bundle;
  GeneratorArgs generator;
  std::string method = "exact";
  std::uint64_t trials = 10000;
};

void run_resistance(const Globals& g, const ResistanceArgs& a) {
  json config;
  const auto bundle = a.bundle.load(config);
  config["method"] = a.method;
  const auto start = Clock::now();
  ResistanceMatrix r;
  if (a.method == "exact") {
    r = effective_resistance_exact(bundle.graph);
  } else if (a.method == "mc") {
    config["generator"] = a.generator.name;
    config["trials"] = a.trials;
    r = effective_resistance_mc(bundle.graph, a.trials, a.generator.spec(), RngStream(g.seed, 7));
  } else {
    throw Error(ErrorKind::InvalidArgument, "--method must be exact or mc");
  }
  const double seconds = seconds_since(start);
  Table out{{"u", "v", "resistance", "std_error"}, {}};
  for (std::size_t e = 0; e < r.edges().size(); ++e) {
    out.add({r.edges()[e].u, r.edges()[e].v, r.edge_values()[e], r.edge_std_errors()[e]});
  }
  write_table(g, "resistance", out);
  const double phi = static_cast<double>(cutsize(bundle.graph, bundle.labels));
  const double phi_r = resistance_weighted_cutsize(bundle.graph, bundle.labels, r);
  write_run(g, "resistance", config, {{"seconds", seconds}}, {{"cutsize", phi}, {"weighted_cutsize", phi_r}});
  std::cout << "cutsize " << phi << ", resistance-weighted cutsize " << phi_r << '\n';
}

// ---- linearize ----

struct LinearizeArgs {
  BundleArgs bundle;
  GeneratorArgs generator;
  std::size_t count = 100;
  bool write_orders = false;
};

void run_linearize(const Globals& g, const LinearizeArgs& a) {
  json config;
  const auto bundle = a.bundle.load(config);
  config["generator"] = a.generator.name;
  config["beta"] = a.generator.beta;
  config["count"] = a.count;
  const auto spec = a.generator.spec();
  Table out{{"draw", "tree_cutsize", "path_cutsize", "seconds"}, {}};
  std::ofstream orders;
  if (a.write_orders) orders.open(g.output_dir / "orders.txt");
  std::vector<double> tree_cuts, path_cuts;
  double total = 0.0;
  for (std::size_t i = 0; i < a.count; ++i) {
    RngStream rng = RngStream(g.seed, 8).derive(i);
    const auto start = Clock::now();
    const SpanningTree tree = generate_tree(bundle.graph, spec, rng);
    const PathGraph path = dfs_linearize(tree, std::nullopt, rng);
    const double seconds = seconds_since(start);
    total += seconds;
    tree_cuts.push_back(static_cast<double>(cutsize(tree.as_graph(), bundle.labels)));
    path_cuts.push_back(static_cast<double>(path_cutsize(path, bundle.labels)));
    out.add({i, tree_cuts.back(), path_cuts.back(), seconds});
    if (orders) {
      for (std::size_t k = 0; k < path.order().size(); ++k) orders << (k ? " " : "") << path.order()[k];
      orders << '\n';
    }
  }
  write_table(g, "linearize", out);
  const auto t = stats::mean_stderr(tree_cuts);
  const auto p = stats::mean_stderr(path_cuts);
  write_run(g, "linearize", config, {{"total_seconds", total}, {"mean_seconds", total / std::max<std::size_t>(1, a.count)}},
            {{"tree_cutsize_mean", t.mean}, {"tree_cutsize_stderr", t.std_error},
             {"path_cutsize_mean", p.mean}, {"path_cutsize_stderr", p.std_error}});
  std::cout << "tree cutsize " << t.mean << " +- " << t.std_error << ", path cutsize " << p.mean << " +- "
            << p.std_error << '\n';
}

// ---- wta ----

struct WtaArgs {
  BundleArgs bundle;
  std::uint64_t trials = 1000;
  std::int32_t default_label = 0;
};

void run_wta(const Globals& g, const WtaArgs& a) {
  json config;
  const auto bundle = a.bundle.load(config);
  config["trials"] = a.trials;
  config["default_label"] = a.default_label;
  const auto start = Clock::now();
  const auto summary = wta_expected_mistakes(bundle.graph, bundle.labels, a.trials, OrderMode::Random,
                                             RngStream(g.seed, 9), a.default_label);
  const double seconds = seconds_since(start);
  Table out{{"trial", "mistakes"}, {}};
  for (std::size_t t = 0; t < summary.per_trial.size(); ++t) out.add({t, summary.per_trial[t]});
  write_table(g, "wta", out);
  write_run(g, "wta", config, {{"seconds", seconds}}, {{"mean", summary.mean}, {"std_error", summary.std_error}});
  std::cout << "mean mistakes " << summary.mean << " +- " << summary.std_error << '\n';
}

// ---- diagnostics ----

struct DiagnosticsArgs {
  BundleArgs bundle;
  std::vector<std::size_t> depths{1, 2, 3, 4, 5};
  std::size_t width = 128;
  std::size_t trials = 20;
  std::size_t probes = 20;
  std::vector<std::string> variants{"full", "rst", "rpg"};
  std::string kind = "both";
};

void run_diagnostics(const Globals& g, const DiagnosticsArgs& a) {
  json config;
  const auto bundle = a.bundle.load(config);
  config["depths"] = a.depths;
  config["width"] = a.width;
  config["trials"] = a.trials;
  config["probes"] = a.probes;
  config["variants"] = a.variants;
  config["kind"] = a.kind;
  std::vector<DiagnosticVariant> variants;
  for (const auto& v : a.variants) variants.push_back(parse_diagnostic_variant(v));
  Table out{{"metric", "variant", "depth", "mean", "stderr"}, {}};
  json timings;
  if (a.kind == "both" || a.kind == "smoothing") {
    const auto start = Clock::now();
    for (const auto& r : oversmoothing_curve(bundle.graph, a.depths, a.width, a.trials, variants, RngStream(g.seed, 10))) {
      out.add({"oversmoothing", to_string(r.variant), r.depth, r.mean, r.std_error});
    }
    timings["oversmoothing_seconds"] = seconds_since(start);
  }
  if (a.kind == "both" || a.kind == "squashing") {
    const auto start = Clock::now();
    for (const auto& r : oversquashing_experiment(bundle.graph, a.depths, a.width, a.trials, RngStream(g.seed, 11),
                                                  a.probes)) {
      if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) continue;
      out.add({"oversquashing", to_string(r.variant), r.depth, r.mean, r.std_error});
    }
    timings["oversquashing_seconds"] = seconds_since(start);
  }
  if (a.kind != "both" && a.kind != "smoothing" && a.kind != "squashing") {
    throw Error(ErrorKind::InvalidArgument, "--kind must be smoothing, squashing or both");
  }
  const auto path = write_table(g, "diagnostics", out);
  write_run(g, "diagnostics", config, timings, {{"table", path.string()}});
  for (const auto& row : out.rows) {
    std::cout << csv_cell(row[0]) << ' ' << csv_cell(row[1]) << " t=" << csv_cell(row[2]) << ' ' << csv_cell(row[3])
              << " +- " << csv_cell(row[4]) << '\n';
  }
}

// ---- synth ----

struct SynthArgs {
  std::string kind = "clique-chain";
  std::size_t cliques = 3;
  std::size_t size = 3;
  std::size_t blocks = 4;
  double p_in = 0.5;
  double p_out = 0.05;
  bool binary = false;
  std::size_t per_class = 0;
};

void run_synth(const Globals& g, const SynthArgs& a) {
  RngStream rng(g.seed, 12);
  json config{{"kind", a.kind}, {"binary", a.binary}};
  DatasetBundle bundle;
  if (a.kind == "clique-chain") {
    config["cliques"] = a.cliques;
    config["size"] = a.size;
    bundle = synth_clique_chain(a.cliques, a.size, rng);
  } else if (a.kind == "sbm") {
    config.update({{"blocks", a.blocks}, {"size", a.size}, {"p_in", a.p_in}, {"p_out", a.p_out}});
    bundle = synth_sbm(a.blocks, a.size, a.p_in, a.p_out, rng);
  } else {
    throw Error(ErrorKind::InvalidArgument, "--kind must be clique-chain or sbm");
  }
  if (a.per_class > 0) {
    RngStream split_rng(g.seed, 13);
    bundle.splits["default"] = make_split(bundle.labels, SplitMode::per_class_count(a.per_class), {}, split_rng);
    config["per_class"] = a.per_class;
  }
  bundle.meta["seed"] = std::to_string(g.seed);
  const auto dir = g.output_dir / "bundle";
  const auto start = Clock::now();
  save_bundle(bundle, dir, a.binary ? FeatureFormat::Binary : FeatureFormat::Text);
  write_run(g, "synth", config, {{"seconds", seconds_since(start)}},
            {{"bundle", dir.string()}, {"n", bundle.graph.node_count()}, {"m", bundle.graph.edge_count()}});
  std::cout << "wrote " << dir.string() << " (n=" << bundle.graph.node_count() << ", m=" << bundle.graph.edge_count()
            << ")\n";
}

// ---- convert ----

struct ConvertArgs {
  BundleArgs bundle;
  bool binary = false;
  bool normalize = false;
};

void run_convert(const Globals& g, const ConvertArgs& a) {
  json config;
  auto bundle = a.bundle.load(config);
  config["binary"] = a.binary;
  config["row_normalize"] = a.normalize;
  if (a.normalize) {
    row_normalize(bundle.features);
    bundle.meta["row_normalized"] = "true";
  }
  const auto dir = g.output_dir / "bundle";
  const auto start = Clock::now();
  save_bundle(bundle, dir, a.binary ? FeatureFormat::Binary : FeatureFormat::Text);
  write_run(g, "convert", config, {{"seconds", seconds_since(start)}}, {{"bundle", dir.string()}});
  std::cout << "wrote " << dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GERN: graph learning on random path graphs"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "OpenMP threads (0 keeps the default)");
  app.add_option("--output-dir", g.output_dir, "Directory for tables and run.json")->capture_default_str();
  app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a GCN on random path graphs");
  train.bundle.attach(train_cmd);
  train.split.attach(train_cmd);
  train_cmd->add_option("--config", train.config_file, "key=value training config file");
  train_cmd->add_option("--set", train.overrides, "Config override key=value (repeatable)");
  train_cmd->add_option("--checkpoint", train.checkpoint, "Checkpoint path (default <output-dir>/model.ckpt)");

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Full-graph inference with a checkpoint");
  eval.bundle.attach(eval_cmd);
  eval.split.attach(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--subset", eval.subset, "Nodes to score")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}))
      ->capture_default_str();
  eval_cmd->add_option("--degree-convention", eval.convention, "self-loop or plain")
      ->check(CLI::IsMember({"self-loop", "plain"}));
  eval_cmd->add_option("--block-rows", eval.block_rows, "Blockwise inference block size (0 = whole graph)");

  RstStatsArgs rst;
  auto* rst_cmd = app.add_subcommand("rst-stats", "Edge inclusion frequencies of random spanning trees");
  rst.bundle.attach(rst_cmd);
  rst.generator.attach(rst_cmd);
  rst_cmd->add_option("--trials", rst.trials, "Trees to draw")->capture_default_str();
  rst_cmd->add_option("--compare", rst.compare, "Second generator to compare against");
  rst_cmd->add_flag("--exact", rst.exact, "Also compare with exact effective resistances");

  ResistanceArgs res;
  auto* res_cmd = app.add_subcommand("resistance", "Effective resistances of the graph edges");
  res.bundle.attach(res_cmd);
  res.generator.attach(res_cmd);
  res_cmd->add_option("--method", res.method, "exact or mc")->check(CLI::IsMember({"exact", "mc"}))->capture_default_str();
  res_cmd->add_option("--trials", res.trials, "Monte-Carlo trees")->capture_default_str();

  LinearizeArgs lin;
  auto* lin_cmd = app.add_subcommand("linearize", "Draw random path graphs and their cut sizes");
  lin.bundle.attach(lin_cmd);
  lin.generator.attach(lin_cmd);
  lin_cmd->add_option("--count", lin.count, "Path graphs to draw")->capture_default_str();
  lin_cmd->add_flag("--write-orders", lin.write_orders, "Write node orders to orders.txt");

  WtaArgs wta;
  auto* wta_cmd = app.add_subcommand("wta", "Nearest-revealed-neighbor mistakes on random path graphs");
  wta.bundle.attach(wta_cmd);
  wta_cmd->add_option("--trials", wta.trials, "Games to play")->capture_default_str();
  wta_cmd->add_option("--default-label", wta.default_label, "First prediction")->capture_default_str();

  DiagnosticsArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnostics", "Over-smoothing and over-squashing curves");
  diag.bundle.attach(diag_cmd);
  diag_cmd->add_option("--depths", diag.depths, "Layer counts")->delimiter(',')->capture_default_str();
  diag_cmd->add_option("--width", diag.width, "Channels per layer")->capture_default_str();
  diag_cmd->add_option("--trials", diag.trials, "Independent trials")->capture_default_str();
  diag_cmd->add_option("--probes", diag.probes, "Probe nodes per trial")->capture_default_str();
  diag_cmd->add_option("--variants", diag.variants, "full, rst, rpg")->delimiter(',')->capture_default_str();
  diag_cmd->add_option("--kind", diag.kind, "smoothing, squashing or both")
      ->check(CLI::IsMember({"smoothing", "squashing", "both"}))
      ->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic bundle to <output-dir>/bundle");
  synth_cmd->add_option("--kind", synth.kind, "clique-chain or sbm")
      ->check(CLI::IsMember({"clique-chain", "sbm"}))
      ->capture_default_str();
  synth_cmd->add_option("--cliques", synth.cliques, "Cliques in the chain")->capture_default_str();
  synth_cmd->add_option("--size", synth.size, "Clique or block size")->capture_default_str();
  synth_cmd->add_option("--blocks", synth.blocks, "SBM blocks")->capture_default_str();
  synth_cmd->add_option("--p-in", synth.p_in, "SBM within-block edge probability")->capture_default_str();
  synth_cmd->add_option("--p-out", synth.p_out, "SBM between-block edge probability")->capture_default_str();
  synth_cmd->add_option("--per-class", synth.per_class, "Store a split named 'default' with this many train nodes per class");
  synth_cmd->add_flag("--binary", synth.binary, "Write features.bin");

  ConvertArgs convert;
  auto* convert_cmd = app.add_subcommand("convert", "Rewrite a bundle to <output-dir>/bundle");
  convert.bundle.attach(convert_cmd);
  convert_cmd->add_flag("--binary", convert.binary, "Write features.bin");
  convert_cmd->add_flag("--row-normalize", convert.normalize, "Scale feature rows to unit L1 norm");

  CLI11_PARSE(app, argc, argv);

  try {
    if (g.threads > 0) omp_set_num_threads(g.threads);
    fs::create_directories(g.output_dir);
    if (train_cmd->parsed()) run_train(g, train);
    if (eval_cmd->parsed()) run_evaluate(g, eval);
    if (rst_cmd->parsed()) run_rst_stats(g, rst);
    if (res_cmd->parsed()) run_resistance(g, res);
    if (lin_cmd->parsed()) run_linearize(g, lin);
    if (wta_cmd->parsed()) run_wta(g, wta);
    if (diag_cmd->parsed()) run_diagnostics(g, diag);
    if (synth_cmd->parsed()) run_synth(g, synth);
    if (convert_cmd->parsed()) run_convert(g, convert);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
