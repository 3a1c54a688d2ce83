#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gern/graph.hpp"
#include "gern/matrix.hpp"
#include "gern/rng.hpp"

namespace gern {

/// Graph, node features, labels and optional named splits.
///
/// On disk a bundle is a directory:
///   edges.tsv      "u<TAB>v" per line, 0-based, '#' comments
///   features.tsv   one whitespace-separated row per node, or
///   features.bin   "GERNFEAT", u64 rows, u64 cols, row-major f32 (LE)
///   labels.tsv     one integer per line
///   meta.txt       key=value lines; name, n, c, d0 required
///   split.<name>.tsv  optional, "node<TAB>train|validation|test"
struct DatasetBundle {
  std::string name;
  Graph graph;
  Matrix<float> features;
  Labels labels;
  std::map<std::string, Split> splits;
  std::map<std::string, std::string> meta;  // extra keys, provenance notes
};

struct LoadOptions {
  /// Keep only the largest connected component instead of failing with
  /// DisconnectedGraph.
  bool largest_component = false;
};

struct LoadReport {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicate_edges_merged = 0;
  std::size_t nodes_dropped = 0;  // outside the largest component
  std::size_t components = 1;
};

DatasetBundle load_bundle(const std::filesystem::path& dir, const LoadOptions& options = {},
                          LoadReport* report = nullptr);

enum class FeatureFormat { Text, Binary };

void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir,
                 FeatureFormat format = FeatureFormat::Text);

void write_binary_features(const Matrix<float>& features, const std::filesystem::path& path);
Matrix<float> read_binary_features(const std::filesystem::path& path);

/// Scales every row to unit L1 norm (rows of zeros are left alone).
void row_normalize(Matrix<float>& features);

/// Restricts a bundle to the nodes `keep` (ascending), remapping ids.
DatasetBundle induced_bundle(const DatasetBundle& bundle, std::span<const NodeId> keep);

struct SplitMode {
  enum class Kind { PerClass, Fraction };
  Kind kind = Kind::PerClass;
  std::size_t per_class = 20;
  double fraction = 0.1;

  static SplitMode per_class_count(std::size_t k) { return {Kind::PerClass, k, 0.0}; }
  static SplitMode train_fraction(double f) { return {Kind::Fraction, 0, f}; }
};

/// Validation set size: an explicit count, an explicit fraction of the
/// non-training nodes, or (both empty) min(500, 25% of them).
struct ValidationSize {
  std::optional<std::size_t> count;
  std::optional<double> fraction;
};

/// Train nodes per mode, validation drawn from the remainder, test = rest.
/// Throws ClassTooSmall naming the first class with too few members.
Split make_split(const Labels& y, const SplitMode& mode, const ValidationSize& validation,
                 RngStream& rng);

/// `cliques` complete graphs on `clique_size` nodes, clique i joined to
/// clique i+1 by the single bridge (last node of i, first node of i+1).
/// One class per clique; features are one-hot class plus N(0, 0.1^2) noise.
DatasetBundle synth_clique_chain(std::size_t cliques, std::size_t clique_size, RngStream& rng);

/// Stochastic block model with `blocks` equal blocks; labels are block ids
/// and features follow synth_clique_chain. Regenerates up to 20 times until
/// connected, then throws CouldNotConnect.
DatasetBundle synth_sbm(std::size_t blocks, std::size_t block_size, double p_in, double p_out,
                        RngStream& rng);

/// One-hot class indicator plus Gaussian noise with standard deviation
/// `noise`; width is the class count.
Matrix<float> noisy_one_hot_features(const Labels& y, double noise, RngStream& rng);

}  // namespace gern
