#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "gern/diagnostics.hpp"
#include "gern/error.hpp"
#include "oracles.hpp"

using namespace gern;

namespace {

Matrix<double> gaussian(std::size_t rows, std::size_t cols, RngStream& rng) {
  Matrix<double> m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

GcnModel<double> square_model(std::size_t depth, std::size_t width, RngStream& rng) {
  const std::vector<std::size_t> dims(depth + 1, width);
  return glorot_init<double>(dims, 0.0, rng);
}

// Entrywise 1-norm of the Jacobian block by central differences.
double finite_difference_influence(const GcnModel<double>& model, const Graph& g, Matrix<double> x,
                                   NodeId v, std::span<const NodeId> sources) {
  const double h = 1e-6;
  const std::size_t width = x.cols();
  const std::size_t out = model.weights.back().cols();
  double total = 0.0;
  for (NodeId u : sources) {
    for (std::size_t k = 0; k < width; ++k) {
      const double keep = x(u, k);
      x(u, k) = keep + h;
      const auto plus = diagnostic_propagate(model, g, x);
      x(u, k) = keep - h;
      const auto minus = diagnostic_propagate(model, g, x);
      x(u, k) = keep;
      for (std::size_t j = 0; j < out; ++j) total += std::abs((plus(v, j) - minus(v, j)) / (2 * h));
    }
  }
  return total;
}

}  // namespace

TEST_CASE("oversmoothing metric") {
  CHECK(oversmoothing_metric(Matrix<double>(4, 3, 2.5)) == 0.0);
  // Columns (1, -1) and (0, 0) after centering.
  const Matrix<double> x(2, 2, std::vector<double>{2.0, 5.0, 0.0, 5.0});
  CHECK(oversmoothing_metric(x) == doctest::Approx(std::sqrt(2.0)));
  RngStream rng(1);
  const auto y = gaussian(30, 4, rng);
  auto shifted = y;
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = 0; j < 4; ++j) shifted(i, j) += static_cast<double>(j) * 10.0 - 3.0;
  }
  CHECK(oversmoothing_metric(shifted) == doctest::Approx(oversmoothing_metric(y)).epsilon(1e-12));
  auto scaled = y;
  for (double& v : scaled.values()) v *= -3.0;
  CHECK(oversmoothing_metric(scaled) == doctest::Approx(3.0 * oversmoothing_metric(y)));
  CHECK_THROWS_AS(oversmoothing_metric(Matrix<double>()), Error);
}

TEST_CASE("propagation without layers is the identity") {
  RngStream rng(2);
  const Graph g = oracle::cycle(6);
  const auto x = gaussian(6, 3, rng);
  CHECK(diagnostic_propagate(GcnModel<double>{}, g, x) == x);
}

TEST_CASE("propagation matches the dense network with a linear last layer") {
  RngStream rng(3);
  const Graph g = oracle::random_connected(12, 10, 4);
  const auto x = gaussian(12, 5, rng);
  const auto model = square_model(3, 5, rng);
  const auto dense = oracle::dense_gcn(g, x, model.weights);
  const auto out = diagnostic_propagate(model, g, x);
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = 0; j < 5; ++j) CHECK(out(i, j) == doctest::Approx(dense(i, j)).epsilon(1e-10));
  }
}

TEST_CASE("single linear layer on an edge") {
  const Graph edge = oracle::path(2);
  RngStream rng(5);
  const auto x = gaussian(2, 3, rng);
  const auto model = square_model(1, 3, rng);
  double w1 = 0.0;
  for (double w : model.weights[0].values()) w1 += std::abs(w);
  const std::vector<NodeId> other{1};
  // a_01 = 1 / sqrt(2 * 2).
  CHECK(oversquashing_influence(model, edge, x, 0, std::span<const NodeId>(other)) ==
        doctest::Approx(0.5 * w1));
  const std::vector<NodeId> both{0, 1};
  CHECK(oversquashing_influence(model, edge, x, 0, std::span<const NodeId>(both)) ==
        doctest::Approx(w1));
}

TEST_CASE("zero depth influence") {
  const Graph g = oracle::path(4);
  RngStream rng(6);
  const auto x = gaussian(4, 7, rng);
  const std::vector<NodeId> self{0, 2};
  const std::vector<NodeId> away{1, 3};
  CHECK(oversquashing_influence(GcnModel<double>{}, g, x, 2, std::span<const NodeId>(self)) == 7.0);
  CHECK(oversquashing_influence(GcnModel<double>{}, g, x, 2, std::span<const NodeId>(away)) == 0.0);
  CHECK(oversquashing_influence_forward(GcnModel<double>{}, g, x, 2, std::span<const NodeId>(self)) ==
        7.0);
}

TEST_CASE("reverse, forward and finite-difference influence agree") {
  RngStream rng(7);
  for (std::size_t depth : {1, 2, 3}) {
    const Graph g = oracle::random_connected(10, 8, depth);
    const auto x = gaussian(10, 4, rng);
    const auto model = square_model(depth, 4, rng);
    const std::vector<NodeId> sources{0, 3, 4, 9};
    const NodeId v = 3;
    const double reverse = oversquashing_influence(model, g, x, v, std::span<const NodeId>(sources));
    const double forward =
        oversquashing_influence_forward(model, g, x, v, std::span<const NodeId>(sources));
    CHECK(reverse == doctest::Approx(forward).epsilon(1e-12));
    const double fd = finite_difference_influence(model, g, x, v, sources);
    CHECK(std::abs(reverse - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
  }
  // Float matches double closely.
  const Graph g = oracle::random_connected(15, 20, 9);
  const auto x = gaussian(15, 6, rng);
  const auto model = square_model(2, 6, rng);
  const std::vector<NodeId> sources{1, 2, 5};
  const double d = oversquashing_influence(model, g, x, 2, std::span<const NodeId>(sources));
  const double f = oversquashing_influence(model.cast<float>(), g, x.cast<float>(), 2,
                                           std::span<const NodeId>(sources));
  CHECK(f == doctest::Approx(d).epsilon(1e-4));
}

TEST_CASE("oversmoothing curve") {
  const Graph g = oracle::random_connected(40, 60, 1);
  const std::vector<std::size_t> depths{0, 1, 4};
  const auto runs = oversmoothing_curve(g, depths, 8, 3, kAllVariants, RngStream(11));
  REQUIRE(runs.size() == 9);
  // Depth 0 sees the same features under every variant.
  std::set<double> zero;
  for (const auto& r : runs) {
    CHECK(r.values.size() == 3);
    if (r.depth == 0) zero.insert(r.mean);
  }
  CHECK(zero.size() == 1);
  const auto again = oversmoothing_curve(g, depths, 8, 3, kAllVariants, RngStream(11));
  for (std::size_t i = 0; i < runs.size(); ++i) CHECK(runs[i].values == again[i].values);
  const std::vector<std::size_t> none;
  CHECK_THROWS_AS(oversmoothing_curve(g, none, 8, 3, kAllVariants, RngStream(11)), Error);
}

TEST_CASE("oversquashing experiment sources come from the path graph") {
  const Graph g = oracle::random_connected(50, 80, 2);
  const std::vector<std::size_t> depths{1, 2, 3};
  std::vector<ProbeRecord> audit;
  const auto runs = oversquashing_experiment(g, depths, 8, 2, RngStream(12), 10, &audit);
  REQUIRE(runs.size() == 9);
  CHECK(audit.size() == 2 * 3 * 10);
  for (const auto& rec : audit) {
    CHECK(rec.sources.size() <= 2 * rec.depth + 1);
    CHECK(std::find(rec.sources.begin(), rec.sources.end(), rec.probe) != rec.sources.end());
    CHECK(rec.influence.size() == 3);
    for (double value : rec.influence) CHECK(value >= 0.0);
  }
  const auto again = oversquashing_experiment(g, depths, 8, 2, RngStream(12), 10);
  for (std::size_t i = 0; i < runs.size(); ++i) CHECK(runs[i].values == again[i].values);
}

TEST_CASE("single trial has zero standard error") {
  const Graph g = oracle::cycle(10);
  const std::vector<std::size_t> depths{2};
  const auto runs = oversmoothing_curve(g, depths, 4, 1, kAllVariants, RngStream(13));
  for (const auto& r : runs) CHECK(r.std_error == 0.0);
}

TEST_CASE("variant names") {
  for (DiagnosticVariant v : kAllVariants) CHECK(parse_diagnostic_variant(to_string(v)) == v);
  CHECK_THROWS_AS(parse_diagnostic_variant("mesh"), Error);
}
