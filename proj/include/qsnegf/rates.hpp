#pragma once

#include <cstddef>
#include <vector>

#include "qsnegf/greens.hpp"
#include "qsnegf/kernels.hpp"
#include "qsnegf/quadrature.hpp"

namespace qsnegf {

/// Reservoir-correction share of one lead.
struct LeadShare {
  double N = 0.0;
  double U = 0.0;
  double S = 0.0;
  double Omega = 0.0;
};

/// Equilibrium state functions at one protocol point.
struct Snapshot {
  double N_S = 0.0;
  double U_S = 0.0;
  double S_S = 0.0;
  double Omega_S = 0.0;
  /// <H_S> = Tr{h rho}.
  double H_S = 0.0;
  /// <H_SR>, from (2/pi) Im Tr{Sigma G} directly.
  double H_SR = 0.0;
  /// The double-integral entropy term: Tr{M_f M_p} + Tr{M_{1-f} M_h}.
  double coherence = 0.0;
  /// Occupation of each system orbital.
  std::vector<double> N_site;
  std::vector<LeadShare> lead;
  /// Integral of g_S + sum delta g_R plus every pole weight; equals the orbital count.
  double state_count = 0.0;
  std::size_t n_bound = 0;

  double dOmega_R() const;
  double dN_R() const;
};

Snapshot snapshot(const FrozenSystem& system, const Ensemble& ens, const QuadratureOptions& options = {});
Snapshot snapshot(const SystemModel& model, double u, const Ensemble& ens, const QuadratureOptions& options = {});

/// First-order rates per unit protocol parameter.
struct RateVector {
  double Wext = 0.0;
  double OmegaS = 0.0;
  double US = 0.0;
  double SS = 0.0;
  double NS = 0.0;
  std::vector<double> dOmegaR;
  std::vector<double> dUR;
  std::vector<double> dSR;
  std::vector<double> dNR;
  std::vector<double> NS_site;
  /// <dH_S/du>.
  double HS_power = 0.0;
  /// <dH_SR/du>.
  double HSR_power = 0.0;
  /// I^W_S from W_S rate minus <d(H_S + H_SR/2)/du>.
  double IWS = 0.0;
  /// I^W_S from the explicit spectral integral.
  double IWS_explicit = 0.0;

  double dOmegaR_total() const;
  /// Thermodynamic work rate on the system: Wext minus the reservoir corrections.
  double WS() const { return Wext - dOmegaR_total(); }
  double sum_rule_residual() const { return Wext - OmegaS - dOmegaR_total(); }
  double first_law_residual(const Ensemble& ens) const {
    return US - ens.temperature() * SS - ens.mu() * NS - WS();
  }
};

/// Step used for the central u-difference of bound-state terms.
inline constexpr double kPoleStep = 1e-5;

RateVector partitioned_rates(const SystemModel& model, double u, const Ensemble& ens,
                             const QuadratureOptions& options = {});

double external_power(const SystemModel& model, double u, const Ensemble& ens, const QuadratureOptions& options = {});

struct CouplingPowers {
  double HS = 0.0;
  double HSR = 0.0;
};
CouplingPowers coupling_powers(const SystemModel& model, double u, const Ensemble& ens,
                               const QuadratureOptions& options = {});

struct NonlocalWork {
  double bookkeeping = 0.0;
  double explicit_form = 0.0;
};
NonlocalWork nonlocal_work_rate(const SystemModel& model, double u, const Ensemble& ens,
                                const QuadratureOptions& options = {});

/// Largest change of any rate component between n_theta and 2 n_theta.
double rate_refinement_error(const SystemModel& model, double u, const Ensemble& ens,
                             const QuadratureOptions& options = {});

/// Largest change of any snapshot component between n_theta and 2 n_theta.
double snapshot_refinement_error(const FrozenSystem& system, const Ensemble& ens,
                                 const QuadratureOptions& options = {});

}  // namespace qsnegf
