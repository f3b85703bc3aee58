#pragma once

#include <cmath>
#include <stdexcept>

namespace qsnegf {

/// Grand canonical reservoir state shared by every lead (k_B = 1).
class Ensemble {
public:
  Ensemble(double temperature, double chemical_potential)
      : temperature_(temperature), mu_(chemical_potential) {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
      throw std::invalid_argument("Ensemble: temperature must be positive and finite");
    if (!std::isfinite(chemical_potential))
      throw std::invalid_argument("Ensemble: chemical potential must be finite");
  }

  double temperature() const { return temperature_; }
  double mu() const { return mu_; }
  double beta() const { return 1.0 / temperature_; }

  /// Reduced energy beta * (e - mu).
  double reduced(double e) const { return (e - mu_) / temperature_; }

private:
  double temperature_;
  double mu_;
};

/// ln(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// 1 / (1 + e^x) without overflow.
inline double logistic_complement(double x) {
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

/// Fermi-Dirac occupation f(e).
inline double fermi(const Ensemble& ens, double e) { return logistic_complement(ens.reduced(e)); }

/// df/de = -beta f (1 - f).
inline double fermi_derivative(const Ensemble& ens, double e) {
  const double x = ens.reduced(e);
  const double f = logistic_complement(x);
  const double h = logistic_complement(-x);
  return -ens.beta() * f * h;
}

/// s(e) = x f + ln(1 + e^{-x}), x = beta (e - mu). Evaluated on |x| since s is even in x.
inline double entropy_kernel(const Ensemble& ens, double e) {
  const double x = std::abs(ens.reduced(e));
  return x * logistic_complement(x) + std::log1p(std::exp(-x));
}

/// omega(e) = -T ln(1 + e^{-x}); d omega / de = f.
inline double grand_kernel(const Ensemble& ens, double e) {
  return -ens.temperature() * softplus(-ens.reduced(e));
}

/// -ln f(e) = softplus(x): the particle-like entropy weight.
inline double neg_log_fermi(const Ensemble& ens, double e) { return softplus(ens.reduced(e)); }

/// -ln(1 - f(e)) = softplus(-x): the hole-like entropy weight.
inline double neg_log_fermi_complement(const Ensemble& ens, double e) {
  return softplus(-ens.reduced(e));
}

}  // namespace qsnegf
