#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gern/gcn.hpp"
#include "gern/graph.hpp"
#include "gern/kernels.hpp"
#include "gern/linearize.hpp"
#include "gern/matrix.hpp"
#include "gern/rng.hpp"
#include "gern/spanning.hpp"

namespace gern {

/// Graph each training step runs on.
enum class TrainTopology {
  Rpg,   // linearized random spanning tree (path graph)
  Rst,   // the random spanning tree itself
  Full,  // the input graph, whole-graph step
};

const char* to_string(TrainTopology t) noexcept;
TrainTopology parse_train_topology(const std::string& name);

struct LrSchedule {
  double decay_factor = 0.31622776601683794;  // 10^-0.5
  std::size_t patience = 100;
  double lr_min = 1e-4;
  std::size_t max_steps_per_lr = 1000;
};

struct TrainConfig {
  std::size_t max_epochs = 1000;
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t pool_size = 250;
  TreeGenerator generator = TreeGenerator::ARst;
  double beta = 0.5;
  TrainTopology topology = TrainTopology::Rpg;
  double lr = 1e-2;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  LrSchedule schedule;
  std::size_t val_every = 1;
  DegreeConvention degree_convention = DegreeConvention::SelfLoop;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on out-of-range values.
  void validate() const;
};

/// Sets one field from its key=value spelling, e.g. "hidden", "64".
/// Throws InvalidArgument for unknown keys or unparsable values.
void apply_config_entry(TrainConfig& config, const std::string& key, const std::string& value);
/// Reads key=value lines ('#' comments allowed) over the defaults.
TrainConfig load_train_config(const std::filesystem::path& path);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t pool_index = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  bool validated = false;
  double val_loss = 0.0;      // last validated value when !validated
  double val_accuracy = 0.0;  // likewise
  std::size_t train_nodes = 0;
  std::size_t train_edges = 0;
  double step_seconds = 0.0;  // subgraph fetch, forward, backward, update
};

struct TrainHistory {
  std::vector<EpochRecord> records;
  std::size_t best_epoch = 0;  // 1-based; max val accuracy, then min val loss, then earliest
  double best_val_accuracy = 0.0;
  double pool_seconds = 0.0;
  bool stopped_by_schedule = false;
};

struct LrDecision {
  double lr = 0.0;
  bool decayed = false;
  bool stop = false;
};

/// Next learning rate given the records so far (the last one belongs to
/// `current_lr`). An epoch improves when its validation accuracy strictly
/// exceeds every earlier one. The rate decays once the epochs since the last
/// improvement, counted only at the current rate, reach `patience`, or the
/// current rate has run `max_steps_per_lr` steps. Stops when the decayed
/// rate would fall below lr_min.
LrDecision lr_schedule_step(std::span<const EpochRecord> history, double current_lr,
                            const LrSchedule& schedule);

/// Pool of training graphs on the node set of `g`: A-RST / Wilson / ... trees
/// (per `generator`), linearized for Rpg. Entry i draws from rng.derive(i),
/// so the pool does not depend on the thread count.
std::vector<Graph> make_training_pool(const Graph& g, TrainTopology topology,
                                      const GeneratorSpec& generator, std::size_t count,
                                      const RngStream& rng);

/// What the observer sees after each optimizer step.
struct StepView {
  std::size_t epoch = 0;
  std::size_t pool_index = 0;
  const Graph* pool_graph = nullptr;  // the epoch's training graph on all nodes
  const Graph* subgraph = nullptr;    // local ids
  std::span<const NodeId> nodes;     // local id -> node of the input graph
  std::span<const NodeId> train_local;
};

using StepObserver = std::function<void(const StepView&)>;

struct TrainResult {
  GcnModel<float> model;  // parameters at best_epoch
  TrainHistory history;
};

/// Trains with one pool graph per epoch (cycled). Each step runs on the
/// `layers`-hop neighborhood of the training nodes inside the pool graph,
/// normalized with the pool graph's degrees. Validation runs full-graph
/// inference; with an empty validation set the training nodes are used.
/// Throws NonFiniteLoss.
TrainResult train_gern(const Graph& g, const Matrix<float>& features, const Labels& y,
                       const Split& split, const TrainConfig& config,
                       const StepObserver& observer = {});

/// Fraction of `subset` whose argmax prediction matches y.
double accuracy(const Matrix<float>& scores, const Labels& y, std::span<const NodeId> subset);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::int32_t> predictions;  // every node
};

/// Full-graph inference; block_rows > 0 evaluates blockwise.
Evaluation evaluate(const GcnModel<float>& model, const Graph& g, const Matrix<float>& features,
                    const Labels& y, std::span<const NodeId> subset,
                    DegreeConvention convention = DegreeConvention::SelfLoop,
                    std::size_t block_rows = 0);

}  // namespace gern
