#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "cdid/kernel.hpp"

namespace cdid {

// Exact-expectation toy model: binary X, control share g(X), treated doses
// Uniform[dose_lo, dose_hi] independent of X, control drift E(X) and effect
// tau(u) = a + b u + c u^2. Expectations are sums over X and Gauss-Legendre
// integrals over the dose.
struct ToyModel {
  double p_x1 = 0.4;
  std::array<double, 2> propensity = {0.6, 0.35};
  std::array<double, 2> drift = {1.0, -0.5};
  double dose_lo = 0.5;
  double dose_hi = 3.5;
  double target_dose = 2.0;
  double effect_a = 0.0;
  double effect_b = 0.0;
  double effect_c = -0.5;
  // Perturbation direction for (g, f_h, E), one entry per value of X.
  std::array<double, 2> delta_propensity = {0.2, -0.15};
  std::array<double, 2> delta_density = {0.05, -0.04};
  std::array<double, 2> delta_drift = {0.5, -0.8};
  std::size_t nodes = 64;

  void validate() const;
  double effect(double u) const noexcept { return effect_a + (effect_b + effect_c * u) * u; }
  // Marginal dose density at u > 0.
  double dose_density(double u) const noexcept;
};

// Kernel-smoothed target (1 / f_D(d)) integral f_D(u) tau(u) K_h(u - d) du.
double toy_att_h(const ToyModel& model, const KernelSpec& kernel);
double toy_att(const ToyModel& model);

struct OrthogonalityRow {
  double r = 0.0;
  double psi_deviation = 0.0;  // |m_psi(r) - m_psi(0)|
  double phi_deviation = 0.0;  // |m_phi(r) - m_phi(0)|
  double psi_ratio = 0.0;      // psi_deviation / r^2
  double phi_ratio = 0.0;      // phi_deviation / r
};

struct OrthogonalityReport {
  std::vector<OrthogonalityRow> rows;
  double psi_at_zero = 0.0;    // m_psi(0), zero up to quadrature error
  double psi_ratio_spread = 0.0;  // max / min of psi_ratio over all r
  double phi_ratio_spread = 0.0;  // max / min - 1 of phi_ratio over the last three r
  bool pass = false;              // psi spread < 10, phi spread <= 0.2, phi ratio > 0
};

// Score means at eta_0 + r delta for the orthogonal score psi and the
// unadjusted plug-in score phi. Needs at least two positive r values.
OrthogonalityReport orthogonality_probe(const ToyModel& model, const KernelSpec& kernel,
                                        const std::vector<double>& r_values);

struct BiasRateRow {
  double h = 0.0;
  double bias = 0.0;  // |ATT_h(d) - ATT(d)|
};

struct BiasRateReport {
  std::vector<BiasRateRow> rows;
  double slope = 0.0;  // least-squares slope of log bias on log h
  bool monotone = false;
  bool pass = false;   // |slope - 2| <= 0.3
};

BiasRateReport bias_rate_probe(const ToyModel& model, KernelFamily family,
                               const std::vector<double>& h_values);

inline const std::vector<double> kDefaultProbeR = {0.2, 0.1, 0.05, 0.025, 0.0125};
inline const std::vector<double> kDefaultProbeH = {0.4, 0.2, 0.1, 0.05};
inline constexpr double kDefaultProbeBandwidth = 0.2;

}  // namespace cdid
