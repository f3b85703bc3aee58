#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qsnegf/greens.hpp"
#include "qsnegf/kernels.hpp"

namespace qsnegf {

/// System orbitals plus finite tight-binding chains, diagonalized exactly.
///
/// Orbitals 0..n-1 are the system; each lead contributes `chain_length`
/// further sites, its first site coupled to the lead's orbital with V.
class FiniteUniverse {
public:
  /// Largest dense dimension accepted.
  static constexpr std::size_t kMaxDimension = 2000;

  FiniteUniverse(Eigen::MatrixXd h, std::size_t n_system);

  /// Truncates every chain lead of a frozen system to `chain_length` sites.
  static FiniteUniverse from_system(const FrozenSystem& system, std::size_t chain_length);

  std::size_t dimension() const { return static_cast<std::size_t>(h_.rows()); }
  std::size_t system_dimension() const { return n_system_; }
  const Eigen::MatrixXd& hamiltonian() const { return h_; }
  const Eigen::VectorXd& energies() const { return energies_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  /// <nu|Pi_S|nu> for every eigenstate.
  Eigen::VectorXd system_weights() const;
  /// <mu|Pi_S|nu>.
  Eigen::MatrixXd system_overlaps() const;

  /// max_nu |h v_nu - e_nu v_nu| / |h|.
  double residual() const;
  /// Mean spacing of the eigenvalues.
  double level_spacing() const;

private:
  Eigen::MatrixXd h_;
  std::size_t n_system_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXd vectors_;
};

struct FiniteThermo {
  double U = 0.0;
  double S = 0.0;
  double N = 0.0;
  double Omega = 0.0;
  double U_S = 0.0;
  double S_S = 0.0;
  double N_S = 0.0;
  double Omega_S = 0.0;
};

FiniteThermo finite_thermo(const FiniteUniverse& univ, const Ensemble& ens);

/// System and complementary alpha-entropies. The reservoir side takes the
/// remaining 1 - alpha of the cross terms, so S_S + S_R = S_total.
struct FiniteAlphaEntropy {
  double S_S = 0.0;
  double S_R = 0.0;
  double S_total = 0.0;
};

FiniteAlphaEntropy finite_alpha_entropy(const FiniteUniverse& univ, const Ensemble& ens, double alpha);

/// Lorentzian-broadened system LDOS. Throws std::domain_error when eta is
/// below the mean level spacing.
double finite_ldos(const FiniteUniverse& univ, double e, double eta);

}  // namespace qsnegf
