#include "gern/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string_view>

#include "gern/error.hpp"

namespace gern {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t to_size(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size() || v < 0) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidArgument, "bad value for " + key + ": '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidArgument, "bad value for " + key + ": '" + value + "'");
  }
}

// One pool entry restricted to what a training step touches.
struct TrainingView {
  Neighborhood neighborhood;
  NormalizedAdjacency adjacency;
  Labels labels;
  std::vector<NodeId> train_local;
};

TrainingView make_view(const Graph& h, std::span<const NodeId> train, const Labels& y,
                       std::size_t hops, DegreeConvention convention) {
  TrainingView view;
  view.neighborhood = k_hop_neighborhood(h, train, static_cast<std::uint32_t>(hops));
  const auto& nodes = view.neighborhood.nodes;
  std::vector<std::uint32_t> degrees(nodes.size());
  std::vector<std::int32_t> labels(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    degrees[i] = h.degree(nodes[i]);
    labels[i] = y[nodes[i]];
  }
  view.adjacency = NormalizedAdjacency(view.neighborhood.induced, degrees, convention);
  view.labels = Labels(std::move(labels), y.class_count());
  for (NodeId v : train) view.train_local.push_back(view.neighborhood.local_of[v]);
  return view;
}

}  // namespace

const char* to_string(TrainTopology t) noexcept {
  switch (t) {
    case TrainTopology::Rpg: return "rpg";
    case TrainTopology::Rst: return "rst";
    case TrainTopology::Full: return "full";
  }
  return "?";
}

TrainTopology parse_train_topology(const std::string& name) {
  if (name == "rpg") return TrainTopology::Rpg;
  if (name == "rst") return TrainTopology::Rst;
  if (name == "full") return TrainTopology::Full;
  throw Error(ErrorKind::InvalidArgument, "unknown topology '" + name + "' (rpg, rst, full)");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (layers == 0) fail("layers must be positive");
  if (hidden == 0) fail("hidden must be positive");
  if (pool_size == 0) fail("pool_size must be positive");
  if (!(beta >= 0.0)) fail("beta must be non-negative");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(schedule.decay_factor > 0.0 && schedule.decay_factor < 1.0)) {
    fail("lr_decay must lie in (0, 1)");
  }
  if (schedule.patience == 0) fail("patience must be positive");
  if (!(schedule.lr_min > 0.0)) fail("lr_min must be positive");
  if (schedule.max_steps_per_lr == 0) fail("max_steps_per_lr must be positive");
  if (val_every == 0) fail("val_every must be positive");
}

void apply_config_entry(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "max_epochs") {
    c.max_epochs = to_size(key, value);
  } else if (key == "layers") {
    c.layers = to_size(key, value);
  } else if (key == "hidden") {
    c.hidden = to_size(key, value);
  } else if (key == "pool_size") {
    c.pool_size = to_size(key, value);
  } else if (key == "generator") {
    c.generator = parse_tree_generator(value);
  } else if (key == "beta") {
    c.beta = to_double(key, value);
  } else if (key == "topology") {
    c.topology = parse_train_topology(value);
  } else if (key == "lr") {
    c.lr = to_double(key, value);
  } else if (key == "weight_decay") {
    c.weight_decay = to_double(key, value);
  } else if (key == "dropout") {
    c.dropout = to_double(key, value);
  } else if (key == "lr_decay") {
    c.schedule.decay_factor = to_double(key, value);
  } else if (key == "patience") {
    c.schedule.patience = to_size(key, value);
  } else if (key == "lr_min") {
    c.schedule.lr_min = to_double(key, value);
  } else if (key == "max_steps_per_lr") {
    c.schedule.max_steps_per_lr = to_size(key, value);
  } else if (key == "val_every") {
    c.val_every = to_size(key, value);
  } else if (key == "degree_convention") {
    if (value == "self-loop") {
      c.degree_convention = DegreeConvention::SelfLoop;
    } else if (value == "plain") {
      c.degree_convention = DegreeConvention::Plain;
    } else {
      throw Error(ErrorKind::InvalidArgument, "degree_convention must be self-loop or plain");
    }
  } else if (key == "seed") {
    c.seed = to_size(key, value);
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
  }
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  TrainConfig config;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::ParseError,
                  path.filename().string() + ":" + std::to_string(number) + ": expected key=value");
    }
    apply_config_entry(config, std::string(trim(view.substr(0, eq))),
                       std::string(trim(view.substr(eq + 1))));
  }
  config.validate();
  return config;
}

LrDecision lr_schedule_step(std::span<const EpochRecord> history, double current_lr,
                            const LrSchedule& schedule) {
  std::size_t steps_at_lr = 0;
  for (auto it = history.rbegin(); it != history.rend() && it->lr == current_lr; ++it) ++steps_at_lr;

  std::optional<std::size_t> last_improvement;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].validated && history[i].val_accuracy > best) {
      best = history[i].val_accuracy;
      last_improvement = i;
    }
  }
  const std::size_t since_improvement =
      last_improvement ? history.size() - 1 - *last_improvement : history.size();
  const std::size_t stale = std::min(since_improvement, steps_at_lr);

  LrDecision decision{current_lr, false, false};
  if (stale >= schedule.patience || steps_at_lr >= schedule.max_steps_per_lr) {
    const double next = current_lr * schedule.decay_factor;
    if (next < schedule.lr_min * (1.0 - 1e-9)) {
      decision.stop = true;
    } else {
      decision.lr = next;
      decision.decayed = true;
    }
  }
  return decision;
}

std::vector<Graph> make_training_pool(const Graph& g, TrainTopology topology,
                                      const GeneratorSpec& generator, std::size_t count,
                                      const RngStream& rng) {
  if (topology == TrainTopology::Full) return {g};
  std::vector<Graph> pool(count);
  const auto total = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < total; ++i) {
    RngStream local = rng.derive(static_cast<std::uint64_t>(i));
    SpanningTree tree = generate_tree(g, generator, local);
    if (topology == TrainTopology::Rst) {
      pool[static_cast<std::size_t>(i)] = tree.as_graph();
    } else {
      pool[static_cast<std::size_t>(i)] = dfs_linearize(tree, std::nullopt, local).to_graph();
    }
  }
  return pool;
}

double accuracy(const Matrix<float>& scores, const Labels& y, std::span<const NodeId> subset) {
  if (subset.empty()) throw Error(ErrorKind::EmptySubset, "accuracy over an empty subset");
  std::size_t correct = 0;
  for (NodeId v : subset) {
    const auto row = scores.row(v);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == y[v]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(subset.size());
}

Evaluation evaluate(const GcnModel<float>& model, const Graph& g, const Matrix<float>& features,
                    const Labels& y, std::span<const NodeId> subset, DegreeConvention convention,
                    std::size_t block_rows) {
  const NormalizedAdjacency adjacency(g, convention);
  const Matrix<float> logits = block_rows > 0
                                   ? gcn_propagate_blockwise(model, adjacency, features, block_rows)
                                   : gcn_propagate(model, adjacency, features);
  const Matrix<float> log_probs = log_softmax(logits);
  Evaluation out;
  out.predictions = argmax_rows(log_probs);
  if (!subset.empty()) {
    out.loss = cross_entropy_loss(log_probs, y, subset);
    out.accuracy = accuracy(log_probs, y, subset);
  }
  return out;
}

TrainResult train_gern(const Graph& g, const Matrix<float>& features, const Labels& y,
                       const Split& split, const TrainConfig& config,
                       const StepObserver& observer) {
  config.validate();
  split.validate(g.node_count());
  if (split.train.empty()) throw Error(ErrorKind::EmptySubset, "no training nodes");
  if (features.rows() != g.node_count() || y.size() != g.node_count()) {
    throw Error(ErrorKind::ShapeMismatch, "features, labels and graph disagree on node count");
  }
  const std::span<const NodeId> selection =
      split.validation.empty() ? std::span<const NodeId>(split.train) : split.validation;

  RngStream pool_rng(config.seed, 1);
  RngStream init_rng(config.seed, 2);
  RngStream dropout_rng(config.seed, 3);

  TrainResult result;
  TrainHistory& history = result.history;

  const auto pool_start = Clock::now();
  const std::vector<Graph> pool =
      make_training_pool(g, config.topology, GeneratorSpec{config.generator, config.beta},
                         config.pool_size, pool_rng);
  std::vector<TrainingView> views(pool.size());
  const bool whole_graph = config.topology == TrainTopology::Full;
  if (whole_graph) {
    TrainingView& view = views.front();
    view.neighborhood.nodes.resize(g.node_count());
    for (NodeId v = 0; v < g.node_count(); ++v) view.neighborhood.nodes[v] = v;
    view.neighborhood.induced = g;
    view.adjacency = NormalizedAdjacency(g, config.degree_convention);
    view.labels = y;
    view.train_local = split.train;
  } else {
    const auto total = static_cast<std::int64_t>(pool.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < total; ++i) {
      views[static_cast<std::size_t>(i)] = make_view(pool[static_cast<std::size_t>(i)], split.train,
                                                     y, config.layers, config.degree_convention);
    }
  }
  history.pool_seconds = seconds_since(pool_start);

  std::vector<std::size_t> dims{features.cols()};
  for (std::size_t l = 0; l + 1 < config.layers; ++l) dims.push_back(config.hidden);
  dims.push_back(static_cast<std::size_t>(y.class_count()));
  GcnModel<float> model = glorot_init<float>(dims, config.dropout, init_rng);
  AdamState<float> adam = AdamState<float>::zeros_like(model);
  const NormalizedAdjacency full_adjacency(g, config.degree_convention);

  result.model = model;
  history.best_val_accuracy = -1.0;
  double lr = config.lr;
  double last_val_loss = 0.0;
  double last_val_accuracy = 0.0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  Matrix<float> local_features;

  for (std::size_t e = 0; e < config.max_epochs; ++e) {
    const std::size_t index = e % views.size();
    const TrainingView& view = views[index];

    const auto step_start = Clock::now();
    const Matrix<float>* x = &features;
    if (!whole_graph) {
      local_features = gather_rows(features, view.neighborhood.nodes);
      x = &local_features;
    }
    const ForwardCache<float> cache = gcn_forward(model, view.adjacency, *x, true, dropout_rng);
    const double loss = cross_entropy_loss(cache.log_probs, view.labels, view.train_local);
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::NonFiniteLoss, "loss became non-finite at epoch " + std::to_string(e + 1));
    }
    const Gradients<float> grads = gcn_backward(model, cache, view.labels, view.train_local);
    adam_step(model, grads, adam, lr, config.weight_decay);
    const double step_seconds = seconds_since(step_start);

    if (observer) {
      observer(StepView{e + 1, index, &pool[index], &view.neighborhood.induced, view.neighborhood.nodes,
                        view.train_local});
    }

    EpochRecord record;
    record.epoch = e + 1;
    record.pool_index = index;
    record.lr = lr;
    record.train_loss = loss;
    record.train_nodes = view.neighborhood.nodes.size();
    record.train_edges = view.neighborhood.induced.edge_count();
    record.step_seconds = step_seconds;
    const bool validate_now = e % config.val_every == 0 || e + 1 == config.max_epochs;
    if (validate_now) {
      const Matrix<float> log_probs = log_softmax(gcn_propagate(model, full_adjacency, features));
      last_val_loss = cross_entropy_loss(log_probs, y, selection);
      last_val_accuracy = accuracy(log_probs, y, selection);
      record.validated = true;
      if (last_val_accuracy > history.best_val_accuracy ||
          (last_val_accuracy == history.best_val_accuracy && last_val_loss < best_val_loss)) {
        best_val_loss = last_val_loss;
        history.best_val_accuracy = last_val_accuracy;
        history.best_epoch = e + 1;
        result.model = model;
      }
    }
    record.val_loss = last_val_loss;
    record.val_accuracy = last_val_accuracy;
    history.records.push_back(record);

    const LrDecision next = lr_schedule_step(history.records, lr, config.schedule);
    if (next.stop) {
      history.stopped_by_schedule = true;
      break;
    }
    lr = next.lr;
  }
  return result;
}

}  // namespace gern
