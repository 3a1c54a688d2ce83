#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gern/diagnostics.hpp"
#include "gern/error.hpp"
#include "gern/gcn.hpp"
#include "gern/io.hpp"
#include "gern/linearize.hpp"
#include "gern/resistance.hpp"
#include "gern/spanning.hpp"
#include "gern/stats.hpp"
#include "gern/trainer.hpp"
#include "gern/wta.hpp"
#include "oracles.hpp"

using namespace gern;

namespace {

using Clock = std::chrono::steady_clock;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Fail;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, fmt, args...);
  return buffer;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

std::vector<double> exact_edge_resistances(const Graph& g) {
  const auto r = effective_resistance_exact(g);
  return {r.edge_values().begin(), r.edge_values().end()};
}

double mean_abs_gap(const EdgeFrequencyTable& table, const std::vector<double>& exact) {
  double total = 0.0;
  for (std::size_t e = 0; e < exact.size(); ++e) total += std::abs(table.frequency(e) - exact[e]);
  return total / static_cast<double>(exact.size());
}

// Clique chain with the standard one-labeled-node-per-clique split.
struct ChainTask {
  DatasetBundle bundle;
  Split split;
};

ChainTask chain_task() {
  RngStream rng(2024);
  ChainTask task{synth_clique_chain(3, 3, rng), {}};
  for (NodeId v = 0; v < 9; ++v) {
    if (v % 3 == 1) {
      task.split.train.push_back(v);
    } else {
      task.split.test.push_back(v);
    }
  }
  return task;
}

TrainConfig chain_config(TrainTopology topology) {
  TrainConfig c;
  c.max_epochs = 300;
  c.layers = 2;
  c.hidden = 16;
  c.pool_size = 50;
  c.topology = topology;
  c.seed = 7;
  return c;
}

// 1. Uniformity of the exact samplers on K4.
Outcome rst_uniformity() {
  const Graph k4 = oracle::complete(4);
  const auto trees = oracle::enumerate_spanning_trees(k4);
  std::map<std::uint64_t, std::size_t> index;
  for (std::size_t i = 0; i < trees.size(); ++i) index[trees[i]] = i;
  const std::vector<double> uniform(trees.size(), 1.0 / static_cast<double>(trees.size()));
  std::string detail = format("%zu trees;", trees.size());
  bool ok = trees.size() == 16;
  const std::pair<const char*, TreeGenerator> samplers[] = {{"wilson", TreeGenerator::Wilson},
                                                            {"aldous-broder", TreeGenerator::AldousBroder}};
  for (const auto& [name, kind] : samplers) {
    RngStream rng(11, static_cast<std::uint64_t>(kind));
    std::vector<std::uint64_t> counts(trees.size(), 0);
    for (int draw = 0; draw < 100000; ++draw) {
      const SpanningTree t = generate_tree(k4, {kind, 0.5}, rng);
      std::uint64_t mask = 0;
      for (EdgeId e : t.edge_ids()) mask |= std::uint64_t{1} << e;
      ++counts[index.at(mask)];
    }
    const auto chi = stats::chi_square_gof(counts, uniform);
    ok = ok && chi.pvalue > 1e-3;
    detail += format(" %s chi2=%.2f p=%.3f;", name, chi.statistic, chi.pvalue);
  }
  return verdict(ok, detail + " need p > 1e-3 and < 10 s");
}

// 2. Monte-Carlo resistances against the pseudoinverse.
Outcome resistance_equivalence() {
  std::size_t edges = 0, violations = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const NodeId n = 5 + static_cast<NodeId>(s % 46);
    const Graph g = oracle::random_connected(n, n + s % 17, 1000 + s);
    const auto exact = exact_edge_resistances(g);
    const auto mc = effective_resistance_mc(g, 10000, {TreeGenerator::Wilson, 0.5}, RngStream(21, s));
    for (std::size_t e = 0; e < exact.size(); ++e) {
      const double gap = std::abs(mc.edge_values()[e] - exact[e]);
      const double tolerance = std::max(0.02, 4.0 * mc.edge_std_errors()[e]);
      worst = std::max(worst, gap / tolerance);
      ++edges;
      if (gap > tolerance) ++violations;
    }
  }
  return verdict(violations == 0,
                 format("50 graphs, %zu edges, %zu outside max(0.02, 4 se), worst gap/tol=%.3f; need 0 and < 60 s",
                        edges, violations, worst));
}

// Synthetic families for the linearization checks.
struct LabeledGraph {
  Graph graph;
  Labels labels;
};

std::vector<LabeledGraph> linearization_families() {
  std::vector<LabeledGraph> out;
  RngStream rng(31);
  for (auto [c, s] : {std::pair{3, 3}, {4, 5}, {10, 10}}) {
    auto b = synth_clique_chain(c, s, rng);
    out.push_back({b.graph, b.labels});
  }
  for (auto [blocks, size, p, q] : {std::tuple{2, 20, 0.5, 0.05}, {4, 25, 0.5, 0.05}, {3, 30, 0.2, 0.02}}) {
    auto b = synth_sbm(blocks, size, p, q, rng);
    out.push_back({b.graph, b.labels});
  }
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Graph g = oracle::random_connected(40, 60, 300 + s);
    std::vector<std::int32_t> y(40);
    for (auto& v : y) v = static_cast<std::int32_t>(rng.uniform_index(3));
    out.push_back({g, Labels(y, 3)});
  }
  return out;
}

// 3. Phi(P, y) <= 2 Phi(T, y) for every linearization.
Outcome linearization_invariant() {
  const auto families = linearization_families();
  const std::size_t per_family = (10000 + families.size() - 1) / families.size();
  std::size_t pairs = 0, violations = 0, expectation_failures = 0;
  std::string detail;
  for (std::size_t f = 0; f < families.size(); ++f) {
    const auto& [g, y] = families[f];
    const double phi_r = resistance_weighted_cutsize(g, y, effective_resistance_exact(g));
    RngStream rng(41, f);
    std::vector<double> path_cuts;
    for (std::size_t i = 0; i < per_family; ++i) {
      const SpanningTree t = wilson(g, rng);
      const PathGraph p = dfs_linearize(t, std::nullopt, rng);
      const std::size_t tree_cut = cutsize(t.as_graph(), y);
      const std::size_t path_cut = path_cutsize(p, y);
      if (path_cut > 2 * tree_cut) ++violations;
      path_cuts.push_back(static_cast<double>(path_cut));
      ++pairs;
    }
    const auto ms = stats::mean_stderr(path_cuts);
    if (ms.mean > 2.0 * phi_r + 3.0 * ms.std_error + 1e-12) ++expectation_failures;
  }
  detail = format("%zu pairs over %zu families, %zu violations; E[Phi(P)] <= 2 Phi^R + 3 se failed on %zu",
                  pairs, families.size(), violations, expectation_failures);
  return verdict(violations == 0 && expectation_failures == 0 && pairs >= 10000, detail);
}

// 4. Mean tree cut equals the resistance-weighted cut.
Outcome expectation_identity() {
  std::vector<LabeledGraph> cases;
  {
    RngStream rng(51);
    auto chain = synth_clique_chain(3, 3, rng);
    cases.push_back({chain.graph, chain.labels});
    for (int i = 0; i < 3; ++i) {
      auto b = synth_sbm(2 + i, 15, 0.4, 0.05, rng);
      cases.push_back({b.graph, b.labels});
    }
  }
  bool ok = true;
  std::string detail;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto& [g, y] = cases[c];
    const double exact = resistance_weighted_cutsize(g, y, effective_resistance_exact(g));
    RngStream rng(52, c);
    std::vector<double> cuts;
    for (int i = 0; i < 10000; ++i) cuts.push_back(static_cast<double>(cutsize(wilson(g, rng).as_graph(), y)));
    const auto ms = stats::mean_stderr(cuts);
    const bool within = std::abs(ms.mean - exact) <= 3.0 * ms.std_error + 1e-12;
    ok = ok && within;
    detail += format("%s mean=%.4f exact=%.4f se=%.4f; ", c == 0 ? "chain" : "sbm", ms.mean, exact, ms.std_error);
  }
  return verdict(ok, detail + "need |mean - exact| <= 3 se");
}

// 5. A-RST frequencies track resistances; BFS trees do not.
Outcome arst_fidelity() {
  RngStream graph_rng(61);
  const Graph k4 = oracle::complete(4);
  const Graph sbm = synth_sbm(4, 25, 0.5, 0.05, graph_rng).graph;
  bool ok = true;
  std::string detail;
  for (const auto& [name, g] : {std::pair<const char*, const Graph&>{"K4", k4}, {"sbm", sbm}}) {
    const auto exact = exact_edge_resistances(g);
    const auto arst = edge_inclusion_frequencies(g, {TreeGenerator::ARst, 0.5}, 100000, RngStream(62));
    const auto bfs = edge_inclusion_frequencies(g, {TreeGenerator::RandomBfs, 0.5}, 100000, RngStream(63));
    const double arst_gap = mean_abs_gap(arst, exact);
    const double bfs_gap = mean_abs_gap(bfs, exact);
    ok = ok && arst_gap <= 0.02 && bfs_gap > arst_gap;
    detail += format("%s a_rst=%.5f bfs=%.5f; ", name, arst_gap, bfs_gap);
  }
  return verdict(ok, detail + "need a_rst <= 0.02 and bfs > a_rst");
}

// 6. Backpropagation against central differences.
Outcome gradient_check() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    RngStream rng(71, s);
    const NodeId n = 8 + static_cast<NodeId>(s);
    const Graph g = oracle::random_connected(n, n, 700 + s);
    const NormalizedAdjacency a(g);
    Matrix<double> x(n, 4);
    for (double& v : x.values()) v = rng.normal();
    std::vector<std::int32_t> labels(n);
    for (auto& v : labels) v = static_cast<std::int32_t>(rng.uniform_index(3));
    const Labels y(labels, 3);
    std::vector<NodeId> subset;
    for (NodeId v = 0; v < n; v += 2) subset.push_back(v);
    const std::vector<std::size_t> dims{4, 6, 5, 3};
    auto model = glorot_init<double>(dims, 0.0, rng);
    auto loss = [&] {
      const auto cache = gcn_forward(model, a, x, false, rng);
      return cross_entropy_loss(cache.log_probs, y, subset);
    };
    const auto cache = gcn_forward(model, a, x, false, rng);
    const auto grads = gcn_backward(model, cache, y, subset);
    double diff = 0.0, norm_a = 0.0, norm_fd = 0.0;
    const double h = 1e-6;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      for (std::size_t k = 0; k < model.weights[l].values().size(); ++k) {
        double& w = model.weights[l].values()[k];
        const double keep = w;
        w = keep + h;
        const double up = loss();
        w = keep - h;
        const double down = loss();
        w = keep;
        const double fd = (up - down) / (2 * h);
        const double an = grads[l].values()[k];
        diff += (an - fd) * (an - fd);
        norm_a += an * an;
        norm_fd += fd * fd;
      }
    }
    worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(std::max(norm_a, norm_fd)), 1e-300));
  }
  return verdict(worst <= 1e-4, format("5 instances, worst relative error %.2e; need <= 1e-4 and < 5 s", worst));
}

// 7. Homophilic recovery on the clique chain.
Outcome homophilic_recovery() {
  const auto task = chain_task();
  const auto result = train_gern(task.bundle.graph, task.bundle.features, task.bundle.labels, task.split,
                                 chain_config(TrainTopology::Rpg));
  const auto eval = evaluate(result.model, task.bundle.graph, task.bundle.features, task.bundle.labels,
                             task.split.test);
  return verdict(eval.accuracy == 1.0,
                 format("held-out accuracy %.3f after %zu epochs (best epoch %zu); need 1.0 within 300 epochs, < 5 s",
                        eval.accuracy, result.history.records.size(), result.history.best_epoch));
}

// 8. Planetoid Cora, when a converted bundle is supplied.
Outcome cora_reproduction() {
  const char* dir = std::getenv("GERN_CORA_BUNDLE");
  if (dir == nullptr) return {Status::Skip, "GERN_CORA_BUNDLE not set; no Cora bundle available"};
  auto bundle = load_bundle(dir, {.largest_component = true});
  Split split;
  if (bundle.splits.count("planetoid")) {
    split = bundle.splits.at("planetoid");
  } else {
    RngStream rng(81);
    split = make_split(bundle.labels, SplitMode::per_class_count(20), {.count = 500, .fraction = std::nullopt}, rng);
  }
  TrainConfig c;
  c.layers = 3;
  c.hidden = 128;
  c.pool_size = 250;
  c.seed = 8;
  const auto result = train_gern(bundle.graph, bundle.features, bundle.labels, split, c);
  const auto eval = evaluate(result.model, bundle.graph, bundle.features, bundle.labels, split.test);
  const double points = 100.0 * eval.accuracy;
  return verdict(std::abs(points - 81.17) <= 3.0,
                 format("test accuracy %.2f; need 81.17 +- 3.0", points));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// 9. Sparse training steps.
Outcome path_sparsity() {
  bool edges_ok = true;
  std::string detail;
  auto check_edges = [&](const DatasetBundle& b, const Split& split, TrainConfig c) {
    std::size_t worst = 0;
    train_gern(b.graph, b.features, b.labels, split, c, [&](const StepView& view) {
      worst = std::max<std::size_t>(worst, view.subgraph->edge_count());
    });
    edges_ok = edges_ok && worst + 1 <= b.graph.node_count();
    detail += format("%s max step edges %zu (n-1=%u); ", b.name.c_str(), worst, b.graph.node_count() - 1);
  };
  {
    const auto task = chain_task();
    TrainConfig c = chain_config(TrainTopology::Rpg);
    c.max_epochs = 50;
    check_edges(task.bundle, task.split, c);
    RngStream rng(91);
    const auto sbm = synth_sbm(4, 25, 0.5, 0.05, rng);
    RngStream split_rng(92);
    const auto split = make_split(sbm.labels, SplitMode::per_class_count(5), {}, split_rng);
    check_edges(sbm, split, c);
  }
  RngStream rng(93);
  const auto big = synth_sbm(5, 10000, 16.0 / 10000.0, 4.0 / 40000.0, rng);
  RngStream split_rng(94);
  const auto split = make_split(big.labels, SplitMode::per_class_count(20), {.count = 500, .fraction = std::nullopt}, split_rng);
  TrainConfig c;
  c.max_epochs = 15;
  c.layers = 2;
  c.hidden = 64;
  c.pool_size = 5;
  c.val_every = 1000;
  c.seed = 9;
  std::vector<double> rpg_steps, full_steps;
  std::size_t worst = 0;
  const auto rpg = train_gern(big.graph, big.features, big.labels, split, c, [&](const StepView& view) {
    worst = std::max<std::size_t>(worst, view.subgraph->edge_count());
  });
  edges_ok = edges_ok && worst + 1 <= big.graph.node_count();
  c.topology = TrainTopology::Full;
  const auto full = train_gern(big.graph, big.features, big.labels, split, c);
  // The first steps warm caches and allocators.
  for (std::size_t e = 3; e < rpg.history.records.size(); ++e) rpg_steps.push_back(rpg.history.records[e].step_seconds);
  for (std::size_t e = 3; e < full.history.records.size(); ++e) full_steps.push_back(full.history.records[e].step_seconds);
  const double speedup = median(full_steps) / median(rpg_steps);
  detail += format("sbm-50000 max step edges %zu; step %.3f ms vs full %.3f ms, speedup %.1fx; "
                   "need edges <= n-1 and speedup >= 3",
                   worst, 1e3 * median(rpg_steps), 1e3 * median(full_steps), speedup);
  return verdict(edges_ok && speedup >= 3.0, detail);
}

// 10. Path generation time scales linearly.
Outcome rpg_scaling() {
  std::vector<double> times;
  std::string detail;
  for (NodeId n : {10000u, 20000u, 40000u}) {
    const Graph g = oracle::random_connected(n, 7 * static_cast<std::size_t>(n), 1000 + n);
    RngStream rng(101, n);
    for (int warm = 0; warm < 2; ++warm) dfs_linearize(a_rst(g, 0.5, rng), std::nullopt, rng);
    const int reps = 10;
    const auto start = Clock::now();
    for (int r = 0; r < reps; ++r) dfs_linearize(a_rst(g, 0.5, rng), std::nullopt, rng);
    times.push_back(seconds_since(start) / reps);
    detail += format("n=%u %.2f ms; ", n, 1e3 * times.back());
  }
  const double r1 = times[1] / times[0];
  const double r2 = times[2] / times[1];
  return verdict(r1 <= 3.0 && r2 <= 3.0, detail + format("ratios %.2f, %.2f; need <= 3", r1, r2));
}

// 11. Over-smoothing and over-squashing directions.
Outcome diagnostics_directions() {
  RngStream graph_rng(111);
  const Graph g = synth_sbm(4, 25, 0.5, 0.05, graph_rng).graph;
  const std::vector<std::size_t> depths{2, 3, 4, 5};
  const std::size_t trials = 20;
  const auto smooth = oversmoothing_curve(g, depths, 128, trials, kAllVariants, RngStream(112));
  const auto squash = oversquashing_experiment(g, depths, 128, trials, RngStream(113));
  auto find = [](const std::vector<DiagnosticRun>& runs, DiagnosticVariant v, std::size_t t) {
    for (const auto& r : runs) {
      if (r.variant == v && r.depth == t) return r;
    }
    throw Error(ErrorKind::InvalidArgument, "missing run");
  };
  bool ok = true;
  std::string detail;
  for (std::size_t t : depths) {
    const auto full = find(smooth, DiagnosticVariant::Full, t);
    const auto rst = find(smooth, DiagnosticVariant::Rst, t);
    const auto rpg = find(smooth, DiagnosticVariant::Rpg, t);
    const auto q_full = find(squash, DiagnosticVariant::Full, t);
    const auto q_rpg = find(squash, DiagnosticVariant::Rpg, t);
    const double combined = std::hypot(rst.std_error, rpg.std_error);
    const bool overlap = std::abs(rst.mean - rpg.mean) <= 2.0 * combined;
    const bool smoothing = t < 3 || rpg.mean >= full.mean;
    const bool squashing = t < 3 || q_rpg.mean >= q_full.mean;
    ok = ok && overlap && smoothing && squashing;
    detail += format("t=%zu mu full/rst/rpg %.3g/%.3g/%.3g (rst-rpg %.2f comb se), infl full/rpg %.3g/%.3g; ", t,
                     full.mean, rst.mean, rpg.mean, combined > 0 ? std::abs(rst.mean - rpg.mean) / combined : 0.0,
                     q_full.mean, q_rpg.mean);
  }
  return verdict(ok, detail + "need rpg >= full (t >= 3), |rst - rpg| <= 2 comb se");
}

// 12. WTA mistakes against Phi^R ln n.
Outcome wta_bound() {
  bool ok = true;
  std::string detail;
  for (NodeId n : {27u, 81u, 243u}) {
    RngStream rng(121, n);
    const auto b = synth_clique_chain(3, n / 3, rng);
    const double phi_r = resistance_weighted_cutsize(b.graph, b.labels, effective_resistance_exact(b.graph));
    const auto summary = wta_expected_mistakes(b.graph, b.labels, 1000, OrderMode::Random, RngStream(122, n));
    const double ratio = summary.mean / (phi_r * std::log(static_cast<double>(n)));
    ok = ok && ratio <= 2.5;
    detail += format("n=%u mean=%.2f PhiR=%.2f ratio=%.3f; ", n, summary.mean, phi_r, ratio);
  }
  return verdict(ok, detail + "need ratio <= 2.5");
}

// 13. Trees vs path graphs: both train, and linearization adds little cut.
Outcome ablation() {
  const auto task = chain_task();
  std::string detail;
  bool trained = true;
  for (TrainTopology t : {TrainTopology::Rst, TrainTopology::Rpg}) {
    const auto result = train_gern(task.bundle.graph, task.bundle.features, task.bundle.labels, task.split,
                                   chain_config(t));
    const auto eval = evaluate(result.model, task.bundle.graph, task.bundle.features, task.bundle.labels,
                               task.split.test);
    trained = trained && !result.history.records.empty();
    detail += format("%s trained %zu epochs, accuracy %.3f; ", to_string(t), result.history.records.size(),
                     eval.accuracy);
  }
  RngStream rng(131);
  double tree_cut = 0.0, path_cut = 0.0;
  for (int i = 0; i < 100; ++i) {
    const SpanningTree t = a_rst(task.bundle.graph, 0.5, rng);
    tree_cut += static_cast<double>(cutsize(t.as_graph(), task.bundle.labels));
    path_cut += static_cast<double>(path_cutsize(dfs_linearize(t, std::nullopt, rng), task.bundle.labels));
  }
  const double excess = path_cut / tree_cut - 1.0;
  detail += format("mean cut tree %.3f path %.3f, excess %.1f%%; need both trained and excess < 15%%",
                   tree_cut / 100, path_cut / 100, 100 * excess);
  return verdict(trained && excess < 0.15, detail);
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"rst-uniformity", rst_uniformity},
      {"resistance-equivalence", resistance_equivalence},
      {"linearization-invariant", linearization_invariant},
      {"expectation-identity", expectation_identity},
      {"arst-fidelity", arst_fidelity},
      {"gradient-check", gradient_check},
      {"homophilic-recovery", homophilic_recovery},
      {"cora-reproduction", cora_reproduction},
      {"path-sparsity", path_sparsity},
      {"rpg-scaling", rpg_scaling},
      {"diagnostics-directions", diagnostics_directions},
      {"wta-bound", wta_bound},
      {"ablation", ablation},
  };
  // Runtime budgets in seconds, where one is set.
  const std::map<std::string, double> budgets{{"rst-uniformity", 10.0},
                                              {"resistance-equivalence", 60.0},
                                              {"gradient-check", 5.0},
                                              {"homophilic-recovery", 5.0},
                                              {"cora-reproduction", 900.0}};
  int failures = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {Status::Fail, std::string("threw: ") + e.what()};
    }
    const double seconds = seconds_since(start);
    if (outcome.status == Status::Pass && budgets.count(name) && seconds > budgets.at(name)) {
      outcome.status = Status::Fail;
      outcome.detail += format(" [over the %.0f s budget]", budgets.at(name));
    }
    const char* label = outcome.status == Status::Pass ? "PASS" : outcome.status == Status::Skip ? "SKIP" : "FAIL";
    if (outcome.status == Status::Fail) ++failures;
    std::printf("%s %2d %-24s %s (%.2f s)\n", label, index, name, outcome.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
