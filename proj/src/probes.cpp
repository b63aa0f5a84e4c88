#include "cdid/probes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "cdid/error.hpp"
#include "cdid/quadrature.hpp"

namespace cdid {

namespace {

// Integral over the treated dose support with panel breaks at d +/- m h so
// every panel sees a smooth integrand.
class SupportIntegrator {
 public:
  SupportIntegrator(const ToyModel& model, const KernelSpec& kernel)
      : coarse_(gauss_legendre(model.nodes)), fine_(gauss_legendre(model.nodes * 3 / 2)) {
    breaks_ = {model.dose_lo, model.dose_hi};
    const double h = kernel.bandwidth();
    for (int m = -12; m <= 12; ++m) {
      const double b = model.target_dose + m * h;
      if (b > model.dose_lo && b < model.dose_hi) breaks_.push_back(b);
    }
  }

  double operator()(const std::function<double(double)>& f) const {
    const double value = integrate_composite(f, breaks_, coarse_);
    const double check = integrate_composite(f, breaks_, fine_);
    if (std::abs(value - check) > 1e-10 * std::max(1.0, std::abs(value))) {
      throw NumericError("toy-model quadrature did not converge");
    }
    return value;
  }

 private:
  GaussLegendreRule coarse_;
  GaussLegendreRule fine_;
  std::vector<double> breaks_;
};

double mean_propensity(const ToyModel& m) {
  return (1.0 - m.p_x1) * m.propensity[0] + m.p_x1 * m.propensity[1];
}

double uniform_density(const ToyModel& m) { return 1.0 / (m.dose_hi - m.dose_lo); }

struct ScoreMeans {
  double psi = 0.0;
  double phi = 0.0;
};

// Expected orthogonal and plug-in scores (without the -theta term) under
// nuisances eta_0 + r delta.
ScoreMeans score_means(const ToyModel& m, const KernelSpec& kernel,
                       const SupportIntegrator& integrate, double r) {
  const double d = m.target_dose;
  const double f_d = m.dose_density(d);
  const double u_dens = uniform_density(m);
  const double kernel_at_zero = scaled_kernel(kernel, -d);
  const double mass_near_d =
      integrate([&](double u) { return u_dens * scaled_kernel(kernel, u - d); });
  ScoreMeans out;
  for (int x = 0; x < 2; ++x) {
    const double px = x == 1 ? m.p_x1 : 1.0 - m.p_x1;
    const double g0 = m.propensity[x];
    const double e0 = m.drift[x];
    const double g = g0 + r * m.delta_propensity[x];
    const double e = e0 + r * m.delta_drift[x];
    const double fh0 = (1.0 - g0) * mass_near_d + g0 * kernel_at_zero;
    const double fh = fh0 + r * m.delta_density[x];

    // Treated rows: D ~ Uniform, Delta Y has mean e0 + tau(D).
    const double treated_psi = integrate([&](double u) {
      const double w = scaled_kernel(kernel, u - d) * g / (f_d * g);
      return u_dens * w * (e0 + m.effect(u) - e);
    });
    const double treated_phi = integrate([&](double u) {
      const double w = scaled_kernel(kernel, u - d) * g / (f_d * g);
      return u_dens * w * (e0 + m.effect(u));
    });
    // Control rows: D = 0, Delta Y has mean e0.
    const double control_w = (kernel_at_zero * g - fh) / (f_d * g);
    out.psi += px * ((1.0 - g0) * treated_psi + g0 * control_w * (e0 - e));
    out.phi += px * ((1.0 - g0) * treated_phi + g0 * control_w * e0);
  }
  return out;
}

std::vector<double> checked_positive(const std::vector<double>& values, const char* what) {
  if (values.size() < 2) {
    throw ConfigError(std::string("probe needs at least two ") + what + " values");
  }
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("probe ") + what + " values must be positive");
    }
  }
  return values;
}

}  // namespace

void ToyModel::validate() const {
  if (!(p_x1 > 0.0 && p_x1 < 1.0)) throw ConfigError("toy model needs P(X=1) in (0, 1)");
  if (!(dose_lo > 0.0 && dose_hi > dose_lo)) throw ConfigError("toy dose support must be positive");
  if (!(target_dose > dose_lo && target_dose < dose_hi)) {
    throw ConfigError("toy target dose must be interior to the dose support");
  }
  for (double g : propensity) {
    if (!(g > 0.0 && g < 1.0)) throw ConfigError("toy propensities must lie in (0, 1)");
  }
  if (nodes < 2) throw ConfigError("toy quadrature needs at least 2 nodes");
}

double ToyModel::dose_density(double u) const noexcept {
  if (u < dose_lo || u > dose_hi) return 0.0;
  return (1.0 - mean_propensity(*this)) * uniform_density(*this);
}

double toy_att(const ToyModel& model) { return model.effect(model.target_dose); }

double toy_att_h(const ToyModel& model, const KernelSpec& kernel) {
  model.validate();
  const SupportIntegrator integrate(model, kernel);
  const double d = model.target_dose;
  const double numerator = integrate([&](double u) {
    return model.dose_density(u) * model.effect(u) * scaled_kernel(kernel, u - d);
  });
  return numerator / model.dose_density(d);
}

OrthogonalityReport orthogonality_probe(const ToyModel& model, const KernelSpec& kernel,
                                        const std::vector<double>& r_values) {
  model.validate();
  const auto rs = checked_positive(r_values, "r");
  const SupportIntegrator integrate(model, kernel);
  const double theta = toy_att_h(model, kernel);
  const ScoreMeans base = score_means(model, kernel, integrate, 0.0);

  OrthogonalityReport report;
  report.psi_at_zero = base.psi - theta;
  for (double r : rs) {
    const ScoreMeans at = score_means(model, kernel, integrate, r);
    OrthogonalityRow row;
    row.r = r;
    row.psi_deviation = std::abs(at.psi - base.psi);
    row.phi_deviation = std::abs(at.phi - base.phi);
    row.psi_ratio = row.psi_deviation / (r * r);
    row.phi_ratio = row.phi_deviation / r;
    report.rows.push_back(row);
  }

  auto spread = [](auto first, auto last, auto field) {
    double lo = INFINITY;
    double hi = 0.0;
    for (auto it = first; it != last; ++it) {
      lo = std::min(lo, (*it).*field);
      hi = std::max(hi, (*it).*field);
    }
    return lo > 0.0 ? hi / lo : INFINITY;
  };
  report.psi_ratio_spread =
      spread(report.rows.begin(), report.rows.end(), &OrthogonalityRow::psi_ratio);
  const auto tail = report.rows.size() >= 3 ? report.rows.end() - 3 : report.rows.begin();
  report.phi_ratio_spread = spread(tail, report.rows.end(), &OrthogonalityRow::phi_ratio) - 1.0;
  report.pass = report.psi_ratio_spread < 10.0 && report.phi_ratio_spread <= 0.2 &&
                report.rows.back().phi_ratio > 0.0;
  return report;
}

BiasRateReport bias_rate_probe(const ToyModel& model, KernelFamily family,
                               const std::vector<double>& h_values) {
  auto hs = checked_positive(h_values, "h");
  std::sort(hs.begin(), hs.end(), std::greater<>());
  const double truth = toy_att(model);
  BiasRateReport report;
  double sx = 0.0, sy = 0.0;
  for (double h : hs) {
    const double bias = std::abs(toy_att_h(model, KernelSpec(h, family)) - truth);
    if (!(bias > 0.0)) throw NumericError("smoothing bias vanished; slope is undefined");
    report.rows.push_back({h, bias});
    sx += std::log(h);
    sy += std::log(bias);
  }
  const auto k = static_cast<double>(hs.size());
  const double mx = sx / k;
  const double my = sy / k;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& row : report.rows) {
    sxy += (std::log(row.h) - mx) * (std::log(row.bias) - my);
    sxx += (std::log(row.h) - mx) * (std::log(row.h) - mx);
  }
  report.slope = sxy / sxx;
  report.monotone = true;
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    if (!(report.rows[i].bias < report.rows[i - 1].bias)) report.monotone = false;
  }
  report.pass = std::abs(report.slope - 2.0) <= 0.3;
  return report;
}

}  // namespace cdid
