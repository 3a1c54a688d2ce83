#include "gern/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gern/error.hpp"

namespace gern::stats {

namespace {

// Series expansion of P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x); used for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw Error(ErrorKind::InvalidArgument, "gamma_q domain");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_square_sf(double x, double dof) { return gamma_q(0.5 * dof, 0.5 * x); }

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> expected_probability) {
  if (observed.size() != expected_probability.size() || observed.size() < 2) {
    throw Error(ErrorKind::LengthMismatch, "chi-square needs matching bins (>= 2)");
  }
  double total = 0.0;
  for (auto o : observed) total += static_cast<double>(o);
  ChiSquareResult r;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = total * expected_probability[i];
    const double diff = static_cast<double>(observed[i]) - expected;
    r.statistic += diff * diff / expected;
  }
  r.dof = static_cast<double>(observed.size() - 1);
  r.pvalue = chi_square_sf(r.statistic, r.dof);
  return r;
}

double kolmogorov_sf(double lambda) {
  if (lambda < 1e-3) return 1.0;
  // Alternating series; the small-lambda regime uses the Jacobi theta form.
  if (lambda < 1.18) {
    const double y = std::exp(-M_PI * M_PI / (8.0 * lambda * lambda));
    double sum = 0.0;
    for (int j = 1; j < 200; j += 2) {
      const double term = std::pow(y, j * j);
      sum += term;
      if (term < 1e-18) break;
    }
    return 1.0 - std::sqrt(2.0 * M_PI) / lambda * sum;
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j < 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptySubset, "KS test needs samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  KsResult r;
  r.statistic = d;
  const double ne = std::sqrt(na * nb / (na + nb));
  r.pvalue = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

MeanStderr mean_stderr(std::span<const double> values) {
  MeanStderr r;
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std_error = std::sqrt(ss / (values.size() - 1)) / std::sqrt(static_cast<double>(values.size()));
  }
  return r;
}

}  // namespace gern::stats
