#include "gern/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

#include "gern/error.hpp"

namespace gern {

namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 8> kFeatureMagic{'G', 'E', 'R', 'N', 'F', 'E', 'A', 'T'};

static_assert(std::endian::native == std::endian::little,
              "binary feature I/O assumes a little-endian host");

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, path.string());
  return in;
}

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  return out;
}

[[noreturn]] void parse_failure(const fs::path& path, std::size_t line, std::string_view what) {
  throw Error(ErrorKind::ParseError,
              path.filename().string() + ":" + std::to_string(line) + ": " + std::string(what));
}

template <class V>
V parse_number(std::string_view token, const fs::path& path, std::size_t line) {
  V value{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    parse_failure(path, line, "cannot parse '" + std::string(token) + "'");
  }
  return value;
}

// Calls `fn(line_number, content)` for every non-empty, non-comment line.
template <class Fn>
void for_each_record(const fs::path& path, Fn&& fn) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    fn(number, view);
  }
}

std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::map<std::string, std::string> read_meta(const fs::path& path) {
  std::map<std::string, std::string> meta;
  for_each_record(path, [&](std::size_t line, std::string_view view) {
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) parse_failure(path, line, "expected key=value");
    meta[std::string(trim(view.substr(0, eq)))] = std::string(trim(view.substr(eq + 1)));
  });
  return meta;
}

std::string require_meta(const std::map<std::string, std::string>& meta, const std::string& key,
                         const fs::path& path) {
  const auto it = meta.find(key);
  if (it == meta.end()) {
    throw Error(ErrorKind::ParseError, path.filename().string() + ": missing key '" + key + "'");
  }
  return it->second;
}

Matrix<float> read_text_features(const fs::path& path, std::size_t expected_cols) {
  std::vector<float> values;
  std::size_t rows = 0;
  for_each_record(path, [&](std::size_t line, std::string_view view) {
    const auto fields = split_fields(view);
    if (fields.size() != expected_cols) {
      throw Error(ErrorKind::ShapeMismatch, path.filename().string() + ":" + std::to_string(line) +
                                                ": " + std::to_string(fields.size()) +
                                                " columns, expected " +
                                                std::to_string(expected_cols));
    }
    for (auto f : fields) values.push_back(parse_number<float>(f, path, line));
    ++rows;
  });
  return Matrix<float>(rows, expected_cols, std::move(values));
}

Split read_split(const fs::path& path, NodeId n) {
  Split split;
  for_each_record(path, [&](std::size_t line, std::string_view view) {
    const auto fields = split_fields(view);
    if (fields.size() != 2) parse_failure(path, line, "expected 'node<TAB>set'");
    const auto node = parse_number<NodeId>(fields[0], path, line);
    if (node >= n) parse_failure(path, line, "node id out of range");
    if (fields[1] == "train") {
      split.train.push_back(node);
    } else if (fields[1] == "validation") {
      split.validation.push_back(node);
    } else if (fields[1] == "test") {
      split.test.push_back(node);
    } else {
      parse_failure(path, line, "unknown split set '" + std::string(fields[1]) + "'");
    }
  });
  split.validate(n);
  return split;
}

std::vector<NodeId> largest_component_nodes(const Graph& g, std::size_t* components) {
  std::vector<NodeId> comp(g.node_count(), kNoNode);
  std::vector<std::size_t> sizes;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < g.node_count(); ++s) {
    if (comp[s] != kNoNode) continue;
    const auto id = static_cast<NodeId>(sizes.size());
    sizes.push_back(0);
    comp[s] = id;
    stack.push_back(s);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      ++sizes[id];
      for (NodeId w : g.neighbors(u)) {
        if (comp[w] == kNoNode) {
          comp[w] = id;
          stack.push_back(w);
        }
      }
    }
  }
  *components = sizes.size();
  const auto best = static_cast<NodeId>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  std::vector<NodeId> keep;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (comp[v] == best) keep.push_back(v);
  }
  return keep;
}

std::string format_float(float v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

void write_binary_features(const Matrix<float>& features, const fs::path& path) {
  std::ofstream out = open_output(path, std::ios::out | std::ios::binary);
  out.write(kFeatureMagic.data(), kFeatureMagic.size());
  const std::uint64_t rows = features.rows();
  const std::uint64_t cols = features.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(features.data()),
            static_cast<std::streamsize>(features.size() * sizeof(float)));
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

Matrix<float> read_binary_features(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::array<char, 8> magic{};
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || magic != kFeatureMagic) {
    throw Error(ErrorKind::ParseError, path.filename().string() + ": bad feature header");
  }
  Matrix<float> m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
  if (!in) throw Error(ErrorKind::ParseError, path.filename().string() + ": truncated features");
  return m;
}

DatasetBundle load_bundle(const fs::path& dir, const LoadOptions& options, LoadReport* report) {
  const fs::path meta_path = dir / "meta.txt";
  auto meta = read_meta(meta_path);
  const auto n = static_cast<NodeId>(std::stoul(require_meta(meta, "n", meta_path)));
  const auto c = static_cast<std::int32_t>(std::stol(require_meta(meta, "c", meta_path)));
  const auto d0 = static_cast<std::size_t>(std::stoul(require_meta(meta, "d0", meta_path)));

  const fs::path edges_path = dir / "edges.tsv";
  std::vector<Edge> edges;
  for_each_record(edges_path, [&](std::size_t line, std::string_view view) {
    const auto fields = split_fields(view);
    if (fields.size() != 2) parse_failure(edges_path, line, "expected 'u<TAB>v'");
    const auto u = parse_number<NodeId>(fields[0], edges_path, line);
    const auto v = parse_number<NodeId>(fields[1], edges_path, line);
    if (u >= n || v >= n) parse_failure(edges_path, line, "node id out of range");
    edges.push_back({u, v});
  });

  const fs::path labels_path = dir / "labels.tsv";
  std::vector<std::int32_t> label_values;
  for_each_record(labels_path, [&](std::size_t line, std::string_view view) {
    label_values.push_back(parse_number<std::int32_t>(view, labels_path, line));
  });
  if (label_values.size() != n) {
    throw Error(ErrorKind::ShapeMismatch, "labels.tsv has " + std::to_string(label_values.size()) +
                                              " rows, meta n = " + std::to_string(n));
  }

  Matrix<float> features;
  if (fs::exists(dir / "features.bin")) {
    features = read_binary_features(dir / "features.bin");
  } else {
    features = read_text_features(dir / "features.tsv", d0);
  }
  if (features.rows() != n || features.cols() != d0) {
    throw Error(ErrorKind::ShapeMismatch,
                "features are " + std::to_string(features.rows()) + "x" +
                    std::to_string(features.cols()) + ", expected " + std::to_string(n) + "x" +
                    std::to_string(d0));
  }
  if (!features.all_finite()) throw Error(ErrorKind::ParseError, "features contain non-finite values");

  BuildReport build;
  Graph graph = Graph::from_edges(edges, n, Connectivity::Allow, &build);
  LoadReport local;
  local.self_loops_dropped = build.self_loops_dropped;
  local.duplicate_edges_merged = build.duplicates_dropped;

  DatasetBundle bundle;
  bundle.name = require_meta(meta, "name", meta_path);
  for (const char* key : {"name", "n", "c", "d0"}) meta.erase(key);
  bundle.meta = std::move(meta);
  bundle.labels = Labels(std::move(label_values), c);
  bundle.features = std::move(features);

  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    if (file.starts_with("split.") && file.ends_with(".tsv")) {
      bundle.splits[file.substr(6, file.size() - 10)] = read_split(entry.path(), n);
    }
  }

  const std::size_t components = graph.component_count();
  local.components = components;
  if (components > 1) {
    if (!options.largest_component) {
      throw Error(ErrorKind::DisconnectedGraph,
                  bundle.name + " has " + std::to_string(components) +
                      " connected components (use the largest-component option)");
    }
    bundle.graph = std::move(graph);
    const std::vector<NodeId> keep = largest_component_nodes(bundle.graph, &local.components);
    local.nodes_dropped = n - keep.size();
    bundle = induced_bundle(bundle, keep);
    bundle.meta["largest_component_nodes_dropped"] = std::to_string(local.nodes_dropped);
  } else {
    bundle.graph = std::move(graph);
  }
  if (report != nullptr) *report = local;
  return bundle;
}

DatasetBundle induced_bundle(const DatasetBundle& bundle, std::span<const NodeId> keep) {
  const NodeId n = bundle.graph.node_count();
  std::vector<NodeId> local_of(n, kNoNode);
  for (NodeId i = 0; i < keep.size(); ++i) local_of[keep[i]] = i;
  std::vector<Edge> edges;
  for (const Edge& e : bundle.graph.edges()) {
    if (local_of[e.u] != kNoNode && local_of[e.v] != kNoNode) {
      edges.push_back({local_of[e.u], local_of[e.v]});
    }
  }
  DatasetBundle out;
  out.name = bundle.name;
  out.meta = bundle.meta;
  out.graph = Graph::from_edges(edges, static_cast<NodeId>(keep.size()), Connectivity::Allow);
  out.features = gather_rows(bundle.features, keep);
  std::vector<std::int32_t> labels;
  labels.reserve(keep.size());
  for (NodeId v : keep) labels.push_back(bundle.labels[v]);
  out.labels = Labels(std::move(labels), bundle.labels.class_count());
  for (const auto& [name, split] : bundle.splits) {
    Split mapped;
    auto remap = [&](const std::vector<NodeId>& src, std::vector<NodeId>& dst) {
      for (NodeId v : src) {
        if (local_of[v] != kNoNode) dst.push_back(local_of[v]);
      }
    };
    remap(split.train, mapped.train);
    remap(split.validation, mapped.validation);
    remap(split.test, mapped.test);
    if (!mapped.train.empty()) out.splits[name] = std::move(mapped);
  }
  return out;
}

void save_bundle(const DatasetBundle& bundle, const fs::path& dir, FeatureFormat format) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorKind::IoError, "cannot create directory " + dir.string());
  }
  const NodeId n = bundle.graph.node_count();
  {
    std::ofstream meta = open_output(dir / "meta.txt");
    meta << "name=" << bundle.name << "\nn=" << n << "\nc=" << bundle.labels.class_count()
         << "\nd0=" << bundle.features.cols() << "\n";
    for (const auto& [key, value] : bundle.meta) meta << key << "=" << value << "\n";
    if (!meta) throw Error(ErrorKind::IoError, "failed writing meta.txt");
  }
  {
    std::ofstream edges = open_output(dir / "edges.tsv");
    for (const Edge& e : bundle.graph.edges()) edges << e.u << '\t' << e.v << '\n';
    if (!edges) throw Error(ErrorKind::IoError, "failed writing edges.tsv");
  }
  {
    std::ofstream labels = open_output(dir / "labels.tsv");
    for (std::int32_t y : bundle.labels.values()) labels << y << '\n';
    if (!labels) throw Error(ErrorKind::IoError, "failed writing labels.tsv");
  }
  fs::remove(dir / "features.bin", ec);
  fs::remove(dir / "features.tsv", ec);
  if (format == FeatureFormat::Binary) {
    write_binary_features(bundle.features, dir / "features.bin");
  } else {
    std::ofstream out = open_output(dir / "features.tsv");
    std::string line;
    for (std::size_t i = 0; i < bundle.features.rows(); ++i) {
      line.clear();
      const auto row = bundle.features.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j > 0) line += '\t';
        line += format_float(row[j]);
      }
      out << line << '\n';
    }
    if (!out) throw Error(ErrorKind::IoError, "failed writing features.tsv");
  }
  for (const auto& [name, split] : bundle.splits) {
    std::ofstream out = open_output(dir / ("split." + name + ".tsv"));
    for (NodeId v : split.train) out << v << "\ttrain\n";
    for (NodeId v : split.validation) out << v << "\tvalidation\n";
    for (NodeId v : split.test) out << v << "\ttest\n";
    if (!out) throw Error(ErrorKind::IoError, "failed writing split " + name);
  }
}

void row_normalize(Matrix<float>& features) {
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto row = features.row(i);
    double total = 0.0;
    for (float v : row) total += std::abs(static_cast<double>(v));
    if (total == 0.0) continue;
    for (float& v : row) v = static_cast<float>(v / total);
  }
}

Split make_split(const Labels& y, const SplitMode& mode, const ValidationSize& validation,
                 RngStream& rng) {
  const auto n = static_cast<NodeId>(y.size());
  std::vector<char> taken(n, 0);
  Split split;
  if (mode.kind == SplitMode::Kind::PerClass) {
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(y.class_count()));
    for (NodeId v = 0; v < n; ++v) members[static_cast<std::size_t>(y[v])].push_back(v);
    for (std::size_t c = 0; c < members.size(); ++c) {
      if (members[c].size() < mode.per_class) {
        throw Error(ErrorKind::ClassTooSmall,
                    "class " + std::to_string(c) + " has " + std::to_string(members[c].size()) +
                        " members, " + std::to_string(mode.per_class) + " requested");
      }
    }
    for (auto& group : members) {
      rng.shuffle(std::span<NodeId>(group));
      for (std::size_t k = 0; k < mode.per_class; ++k) split.train.push_back(group[k]);
    }
  } else {
    if (!(mode.fraction > 0.0 && mode.fraction < 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "training fraction must lie in (0, 1)");
    }
    std::vector<NodeId> all(n);
    std::iota(all.begin(), all.end(), NodeId{0});
    rng.shuffle(std::span<NodeId>(all));
    const auto count = static_cast<std::size_t>(std::llround(mode.fraction * n));
    split.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(count, 1)));
  }
  for (NodeId v : split.train) taken[v] = 1;

  std::vector<NodeId> rest;
  for (NodeId v = 0; v < n; ++v) {
    if (!taken[v]) rest.push_back(v);
  }
  rng.shuffle(std::span<NodeId>(rest));
  std::size_t val_count = 0;
  if (validation.count) {
    val_count = *validation.count;
  } else if (validation.fraction) {
    val_count = static_cast<std::size_t>(std::llround(*validation.fraction * rest.size()));
  } else {
    val_count = std::min<std::size_t>(500, rest.size() / 4);
  }
  val_count = std::min(val_count, rest.size());
  split.validation.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(val_count));
  split.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(val_count), rest.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Matrix<float> noisy_one_hot_features(const Labels& y, double noise, RngStream& rng) {
  const auto width = static_cast<std::size_t>(y.class_count());
  Matrix<float> x(y.size(), width);
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t c = 0; c < width; ++c) {
      const double base = static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0;
      x(i, c) = static_cast<float>(base + rng.normal(0.0, noise));
    }
  }
  return x;
}

DatasetBundle synth_clique_chain(std::size_t cliques, std::size_t clique_size, RngStream& rng) {
  if (cliques < 1 || clique_size < 2) {
    throw Error(ErrorKind::InvalidArgument, "need cliques >= 1 and clique_size >= 2");
  }
  const auto n = static_cast<NodeId>(cliques * clique_size);
  std::vector<Edge> edges;
  std::vector<std::int32_t> labels(n);
  for (std::size_t c = 0; c < cliques; ++c) {
    const auto base = static_cast<NodeId>(c * clique_size);
    for (NodeId a = 0; a < clique_size; ++a) {
      labels[base + a] = static_cast<std::int32_t>(c);
      for (NodeId b = a + 1; b < clique_size; ++b) edges.push_back({base + a, base + b});
    }
    if (c + 1 < cliques) {
      edges.push_back({static_cast<NodeId>(base + clique_size - 1),
                       static_cast<NodeId>(base + clique_size)});
    }
  }
  DatasetBundle bundle;
  bundle.name = "clique-chain-" + std::to_string(cliques) + "x" + std::to_string(clique_size);
  bundle.graph = build_graph(edges, n);
  bundle.labels = Labels(std::move(labels), static_cast<std::int32_t>(std::max<std::size_t>(cliques, 2)));
  bundle.features = noisy_one_hot_features(bundle.labels, 0.1, rng);
  bundle.meta["generator"] = "clique_chain";
  bundle.meta["seed"] = std::to_string(rng.seed());
  return bundle;
}

namespace {

// Visits each of `count` candidate slots independently with probability p
// by geometric skipping.
template <class Fn>
void bernoulli_slots(std::uint64_t count, double p, RngStream& rng, Fn&& fn) {
  if (p <= 0.0 || count == 0) return;
  if (p >= 1.0) {
    for (std::uint64_t k = 0; k < count; ++k) fn(k);
    return;
  }
  const double log_q = std::log1p(-p);
  std::uint64_t k = 0;
  while (true) {
    const double u = 1.0 - rng.uniform01();  // (0, 1]
    const double skip = std::floor(std::log(u) / log_q);
    if (skip >= static_cast<double>(count - k)) return;
    k += static_cast<std::uint64_t>(skip);
    fn(k);
    if (++k >= count) return;
  }
}

}  // namespace

DatasetBundle synth_sbm(std::size_t blocks, std::size_t block_size, double p_in, double p_out,
                        RngStream& rng) {
  if (blocks < 1 || block_size < 1) throw Error(ErrorKind::InvalidArgument, "empty block model");
  if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "probabilities must lie in [0, 1]");
  }
  const auto n = static_cast<NodeId>(blocks * block_size);
  std::vector<std::int32_t> labels(n);
  for (NodeId v = 0; v < n; ++v) labels[v] = static_cast<std::int32_t>(v / block_size);

  constexpr int kAttempts = 20;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    RngStream draw = rng.derive(static_cast<std::uint64_t>(attempt));
    std::vector<Edge> edges;
    const std::uint64_t s = block_size;
    for (std::size_t a = 0; a < blocks; ++a) {
      const auto base_a = static_cast<NodeId>(a * block_size);
      // Upper triangle of block a, row-major: row i holds s - 1 - i slots.
      NodeId row = 0;
      std::uint64_t row_start = 0;
      bernoulli_slots(s * (s - 1) / 2, p_in, draw, [&](std::uint64_t k) {
        while (k >= row_start + (s - 1 - row)) {
          row_start += s - 1 - row;
          ++row;
        }
        const auto col = static_cast<NodeId>(row + 1 + (k - row_start));
        edges.push_back({base_a + row, base_a + col});
      });
      for (std::size_t b = a + 1; b < blocks; ++b) {
        const auto base_b = static_cast<NodeId>(b * block_size);
        bernoulli_slots(s * s, p_out, draw, [&](std::uint64_t k) {
          edges.push_back({base_a + static_cast<NodeId>(k / s), base_b + static_cast<NodeId>(k % s)});
        });
      }
    }
    Graph g = Graph::from_edges(edges, n, Connectivity::Allow);
    if (!g.is_connected()) continue;
    DatasetBundle bundle;
    bundle.name = "sbm-" + std::to_string(blocks) + "x" + std::to_string(block_size);
    bundle.graph = std::move(g);
    bundle.labels =
        Labels(std::move(labels), static_cast<std::int32_t>(std::max<std::size_t>(blocks, 2)));
    bundle.features = noisy_one_hot_features(bundle.labels, 0.1, draw);
    bundle.meta["generator"] = "sbm";
    bundle.meta["p_in"] = std::to_string(p_in);
    bundle.meta["p_out"] = std::to_string(p_out);
    bundle.meta["seed"] = std::to_string(rng.seed());
    return bundle;
  }
  throw Error(ErrorKind::CouldNotConnect, "block model stayed disconnected after " +
                                              std::to_string(kAttempts) + " attempts");
}

}  // namespace gern
