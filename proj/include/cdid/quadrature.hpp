#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cdid {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule, nodes found by Newton iteration on P_n.
GaussLegendreRule gauss_legendre(std::size_t n);

// Integral of f over [a, b] with the given rule.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const GaussLegendreRule& rule);

// Composite rule: the rule is applied on every panel between consecutive
// sorted breakpoints (duplicates ignored).
double integrate_composite(const std::function<double(double)>& f,
                           std::vector<double> breakpoints, const GaussLegendreRule& rule);

}  // namespace cdid
