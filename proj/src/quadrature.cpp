#include "cdid/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cdid/error.hpp"
#include "cdid/summation.hpp"

namespace cdid {

GaussLegendreRule gauss_legendre(std::size_t n) {
  if (n == 0) throw ConfigError("quadrature rule needs at least one node");
  GaussLegendreRule rule{std::vector<double>(n), std::vector<double>(n)};
  const auto nd = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const auto kd = static_cast<double>(k);
        const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
        p0 = p1;
        p1 = p2;
      }
      derivative = nd * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / derivative;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const GaussLegendreRule& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  CompensatedSum sum;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum.add(rule.weights[i] * f(mid + half * rule.nodes[i]));
  }
  return half * sum.value();
}

double integrate_composite(const std::function<double(double)>& f,
                           std::vector<double> breakpoints, const GaussLegendreRule& rule) {
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  CompensatedSum sum;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    sum.add(integrate(f, breakpoints[i], breakpoints[i + 1], rule));
  }
  return sum.value();
}

}  // namespace cdid
