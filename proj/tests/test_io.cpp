#include <algorithm>
#include <cstring>
#include <filesystem>
#include <functional>
#include <fstream>
#include <set>

#include "doctest.h"
#include "gern/error.hpp"
#include "gern/io.hpp"
#include "oracles.hpp"

using namespace gern;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("gern_io_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Path on n nodes with one-column features, two classes.
void write_path_bundle(const fs::path& dir, NodeId n, const std::string& extra_edges = "") {
  std::string edges, features, labels;
  for (NodeId v = 0; v + 1 < n; ++v) edges += std::to_string(v) + "\t" + std::to_string(v + 1) + "\n";
  for (NodeId v = 0; v < n; ++v) {
    features += std::to_string(v) + "\n";
    labels += std::to_string(v % 2) + "\n";
  }
  write_file(dir / "edges.tsv", edges + extra_edges);
  write_file(dir / "features.tsv", features);
  write_file(dir / "labels.tsv", labels);
  write_file(dir / "meta.txt", "name=path\nn=" + std::to_string(n) + "\nc=2\nd0=1\n");
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("fixture bundle") {
  const auto b = load_bundle(GERN_FIXTURE_DIR "/tiny");
  CHECK(b.name == "tiny");
  CHECK(b.graph.node_count() == 3);
  CHECK(b.graph.edge_count() == 2);
  CHECK(b.features.rows() == 3);
  CHECK(b.features.cols() == 2);
  CHECK(b.features(1, 0) == 0.5f);
  CHECK(b.labels.class_count() == 2);
  CHECK(b.labels[2] == 1);
}

TEST_CASE("self-loops and duplicates are dropped and reported") {
  TempDir dir("loops");
  write_path_bundle(dir.path, 8, "5\t5\n3\t2\n");
  LoadReport report;
  const auto b = load_bundle(dir.path, {}, &report);
  CHECK(report.self_loops_dropped == 1);
  CHECK(report.duplicate_edges_merged == 1);
  CHECK(b.graph.edge_count() == 7);
  CHECK_FALSE(b.graph.find_edge(5, 5));
}

TEST_CASE("malformed bundles") {
  TempDir dir("bad");
  SUBCASE("feature rows disagree with n") {
    write_path_bundle(dir.path, 6);
    write_file(dir.path / "features.tsv", "1\n2\n3\n4\n5\n");
    CHECK(kind_of([&] { load_bundle(dir.path); }) == ErrorKind::ShapeMismatch);
    const auto msg = message_of([&] { load_bundle(dir.path); });
    CHECK(msg.find('5') != std::string::npos);
    CHECK(msg.find('6') != std::string::npos);
  }
  SUBCASE("missing labels") {
    write_path_bundle(dir.path, 6);
    fs::remove(dir.path / "labels.tsv");
    CHECK(kind_of([&] { load_bundle(dir.path); }) == ErrorKind::MissingFile);
  }
  SUBCASE("unparsable edge line") {
    write_path_bundle(dir.path, 6);
    write_file(dir.path / "edges.tsv", "# header\n0\t1\n1\tx\n");
    CHECK(kind_of([&] { load_bundle(dir.path); }) == ErrorKind::ParseError);
    CHECK(message_of([&] { load_bundle(dir.path); }).find("edges.tsv:3") != std::string::npos);
  }
  SUBCASE("endpoint out of range") {
    write_path_bundle(dir.path, 6, "2\t9\n");
    CHECK(kind_of([&] { load_bundle(dir.path); }) == ErrorKind::ParseError);
    CHECK(message_of([&] { load_bundle(dir.path); }).find("edges.tsv:6") != std::string::npos);
  }
  SUBCASE("two components") {
    write_path_bundle(dir.path, 6);
    write_file(dir.path / "edges.tsv", "0\t1\n1\t2\n3\t4\n");
    CHECK(kind_of([&] { load_bundle(dir.path); }) == ErrorKind::DisconnectedGraph);
    LoadReport report;
    const auto b = load_bundle(dir.path, {.largest_component = true}, &report);
    CHECK(b.graph.node_count() == 3);
    CHECK(report.components == 3);
    CHECK(report.nodes_dropped == 3);
    CHECK(b.features(2, 0) == 2.0f);
  }
}

TEST_CASE("text and binary round trips") {
  RngStream rng(1);
  auto bundle = synth_clique_chain(3, 4, rng);
  RngStream split_rng(2);
  bundle.splits["fixed"] = make_split(bundle.labels, SplitMode::per_class_count(1), {}, split_rng);
  bundle.meta["source"] = "synthetic";
  for (FeatureFormat format : {FeatureFormat::Text, FeatureFormat::Binary}) {
    TempDir dir(format == FeatureFormat::Text ? "text" : "binary");
    save_bundle(bundle, dir.path / "out", format);
    const auto back = load_bundle(dir.path / "out");
    CHECK(back.name == bundle.name);
    CHECK(back.features == bundle.features);
    CHECK(back.graph.edge_count() == bundle.graph.edge_count());
    CHECK(back.labels.values().size() == bundle.labels.values().size());
    CHECK(std::equal(back.labels.values().begin(), back.labels.values().end(),
                     bundle.labels.values().begin()));
    REQUIRE(back.splits.count("fixed") == 1);
    CHECK(back.splits.at("fixed").train == bundle.splits.at("fixed").train);
    CHECK(back.splits.at("fixed").test == bundle.splits.at("fixed").test);
    CHECK(back.meta.at("source") == "synthetic");
  }
}

TEST_CASE("binary feature layout") {
  TempDir dir("layout");
  const Matrix<float> m(2, 3, std::vector<float>{1, 2, 3, 4, 5, 6.5f});
  write_binary_features(m, dir.path / "f.bin");
  std::ifstream in(dir.path / "f.bin", std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 8 + 16 + 6 * 4);
  CHECK(std::string(bytes.data(), 8) == "GERNFEAT");
  std::uint64_t rows = 0, cols = 0;
  std::memcpy(&rows, bytes.data() + 8, 8);
  std::memcpy(&cols, bytes.data() + 16, 8);
  CHECK(rows == 2);
  CHECK(cols == 3);
  float last = 0;
  std::memcpy(&last, bytes.data() + 24 + 20, 4);
  CHECK(last == 6.5f);
  CHECK(read_binary_features(dir.path / "f.bin") == m);
  write_file(dir.path / "g.bin", "NOTFEATS");
  CHECK(kind_of([&] { read_binary_features(dir.path / "g.bin"); }) == ErrorKind::ParseError);
}

TEST_CASE("saving into an impossible directory") {
  TempDir dir("blocked");
  write_file(dir.path / "plain", "x");
  RngStream rng(3);
  const auto bundle = synth_clique_chain(2, 3, rng);
  CHECK(kind_of([&] { save_bundle(bundle, dir.path / "plain" / "out"); }) == ErrorKind::IoError);
}

TEST_CASE("row normalization") {
  Matrix<float> m(2, 3, std::vector<float>{1, -1, 2, 0, 0, 0});
  row_normalize(m);
  CHECK(m(0, 0) == doctest::Approx(0.25));
  CHECK(m(0, 1) == doctest::Approx(-0.25));
  CHECK(m(1, 2) == 0.0f);
}

TEST_CASE("splits") {
  std::vector<std::int32_t> values(90);
  for (std::size_t v = 0; v < 90; ++v) values[v] = static_cast<std::int32_t>(v % 3);
  const Labels y(values, 3);
  SUBCASE("per class") {
    RngStream rng(4);
    const Split s = make_split(y, SplitMode::per_class_count(2), {}, rng);
    CHECK(s.train.size() == 6);
    std::vector<int> per(3, 0);
    for (NodeId v : s.train) ++per[y[v]];
    CHECK(per == std::vector<int>{2, 2, 2});
    // min(500, 84 / 4).
    CHECK(s.validation.size() == 21);
    CHECK(s.test.size() == 63);
    std::set<NodeId> all(s.train.begin(), s.train.end());
    all.insert(s.validation.begin(), s.validation.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 90);
    RngStream again(4);
    CHECK(make_split(y, SplitMode::per_class_count(2), {}, again).train == s.train);
  }
  SUBCASE("fraction") {
    std::vector<std::int32_t> big(1000);
    for (std::size_t v = 0; v < 1000; ++v) big[v] = static_cast<std::int32_t>(v % 4);
    RngStream rng(5);
    const Split s = make_split(Labels(big, 4), SplitMode::train_fraction(0.1), {.count = 100, .fraction = std::nullopt}, rng);
    CHECK(s.train.size() == 100);
    CHECK(s.validation.size() == 100);
    CHECK(s.test.size() == 800);
  }
  SUBCASE("class too small") {
    RngStream rng(6);
    std::vector<std::int32_t> skewed(70, 0);
    for (std::size_t v = 60; v < 70; ++v) skewed[v] = 1;
    const Labels z(skewed, 2);
    CHECK(kind_of([&] { make_split(z, SplitMode::per_class_count(20), {}, rng); }) ==
          ErrorKind::ClassTooSmall);
    CHECK(message_of([&] { make_split(z, SplitMode::per_class_count(20), {}, rng); }).find('1') !=
          std::string::npos);
  }
}

TEST_CASE("clique chain generator") {
  RngStream rng(7);
  const auto b = synth_clique_chain(3, 3, rng);
  CHECK(b.graph.node_count() == 9);
  CHECK(b.graph.edge_count() == 11);
  CHECK(oracle::weighted_cut(b.graph, b.labels) == doctest::Approx(2.0));
  CHECK(b.graph.find_edge(2, 3));
  CHECK(b.graph.find_edge(5, 6));
  CHECK(b.features.cols() == 3);
  const auto single = synth_clique_chain(1, 5, rng);
  CHECK(single.graph.edge_count() == 10);
  const auto caveman = synth_clique_chain(10, 10, rng);
  CHECK(oracle::weighted_cut(caveman.graph, caveman.labels) == doctest::Approx(9.0));
}

TEST_CASE("stochastic block model") {
  RngStream rng(8);
  const auto complete = synth_sbm(2, 5, 1.0, 1.0, rng);
  CHECK(complete.graph.edge_count() == 45);
  const auto k4 = synth_sbm(1, 4, 1.0, 0.0, rng);
  CHECK(k4.graph.edge_count() == 6);
  CHECK(kind_of([&] { synth_sbm(2, 10, 1.0, 0.0, rng); }) == ErrorKind::CouldNotConnect);
  // The resistance-weighted cut undercuts the plain cut between blocks.
  double plain = 0.0, weighted = 0.0;
  for (int s = 0; s < 100; ++s) {
    const auto b = synth_sbm(2, 20, 0.5, 0.05, rng);
    weighted += oracle::weighted_cut(b.graph, b.labels);
    for (const Edge& e : b.graph.edges()) plain += b.labels[e.u] != b.labels[e.v] ? 1.0 : 0.0;
  }
  CHECK(weighted < plain);
}

TEST_CASE("induced bundle") {
  RngStream rng(9);
  const auto b = synth_clique_chain(2, 3, rng);
  const std::vector<NodeId> keep{3, 4, 5};
  const auto sub = induced_bundle(b, keep);
  CHECK(sub.graph.node_count() == 3);
  CHECK(sub.graph.edge_count() == 3);
  CHECK(sub.labels[0] == b.labels[3]);
  CHECK(sub.features(1, 0) == b.features(4, 0));
}
