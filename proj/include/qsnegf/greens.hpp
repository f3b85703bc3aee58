#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsnegf/reservoir.hpp"
#include "qsnegf/small_matrix.hpp"

namespace qsnegf {

/// Coupling amplitude V(u) of one lead and its protocol derivative.
struct LeadDrive {
  double amplitude = 0.0;
  double rate = 0.0;
};

/// Instantaneous Hamiltonian data at one value of the protocol parameter.
struct SystemState {
  SmallMatrix h;
  SmallMatrix dh;
  std::array<LeadDrive, kMaxDim> drive{};
};

/// Driven system block h_S(u) plus the leads it is embedded in.
///
/// Each lead couples to exactly one orbital with a scalar amplitude, and each
/// orbital carries at most one lead.
class SystemModel {
public:
  using Path = std::function<SystemState(double u)>;

  SystemModel(std::size_t dim, std::vector<ChainReservoir> leads, Path path);

  std::size_t dim() const { return dim_; }
  const std::vector<ChainReservoir>& leads() const { return leads_; }
  SystemState state(double u) const;

private:
  std::size_t dim_;
  std::vector<ChainReservoir> leads_;
  Path path_;
};

/// G^A and its analytic derivatives at one (u, e).
struct GreensEval {
  SmallMatrix g;
  SmallMatrix dg_du;
  SmallMatrix dg_de;
  /// (G^A - G^A^dagger) / (2 pi i): Hermitian and positive semidefinite.
  SmallMatrix spectral;
  SmallMatrix sigma;
  SmallMatrix dsigma_de;
  SmallMatrix dsigma_du;
  SmallMatrix dsigma_de_du;
  std::array<SelfEnergyEval, kMaxDim> lead{};
  std::size_t n_leads = 0;
};

/// A real pole of G^A outside every active lead band.
struct BoundState {
  double energy = 0.0;
  /// Nearest chain band edge and energy - edge, resolved below the spacing of doubles at `energy`.
  /// NaN edge when no chain band borders the pole.
  double edge = std::numeric_limits<double>::quiet_NaN();
  double offset = 0.0;
  /// Residue of G^A at the pole; rank one.
  SmallMatrix residue;
  /// -Tr{(dSigma_alpha/de)(e_b) Z}: the pole's weight in each lead's correction.
  std::array<double, kMaxDim> reservoir_weight{};

  double system_weight() const { return residue.trace().real(); }
  double total_weight() const;
};

/// Thrown when e lands on a pole of G^A (Gamma = 0 and a singular resolvent).
class BoundStateHit : public std::runtime_error {
public:
  explicit BoundStateHit(double energy)
      : std::runtime_error("G^A is singular at e = " + std::to_string(energy)), energy_(energy) {}
  double energy() const { return energy_; }

private:
  double energy_;
};

/// Values of the resolvent and its derivatives at a complex energy.
struct ComplexGreens {
  SmallMatrix g;
  SmallMatrix dg_du;
  SmallMatrix dg_de;
  SmallMatrix dsigma_de;
  SmallMatrix dsigma_du;
};

/// A SystemModel frozen at one protocol parameter value.
class FrozenSystem {
public:
  FrozenSystem(const SystemModel& model, double u);
  FrozenSystem(std::size_t dim, std::vector<ChainReservoir> leads, SystemState state);

  std::size_t dim() const { return dim_; }
  const std::vector<ChainReservoir>& leads() const { return leads_; }
  const SystemState& state() const { return state_; }

  /// Leads with nonzero coupling amplitude; only these broaden the spectrum.
  std::vector<std::size_t> active_leads() const;

  GreensEval eval(double e, const EdgeOffset& near = {}) const;
  ComplexGreens eval(cplx z) const;
  /// Same at z = edge + offset, for z closer to a band edge than double spacing resolves.
  ComplexGreens eval(double edge, cplx offset) const;

  /// det(e - h - Sigma(e)); real outside all active bands.
  cplx determinant(double e) const;

  std::vector<BoundState> bound_states() const;

private:
  /// e - h - Sigma(e) at e = edge + offset as the part fixed at the edge (returned) plus a
  /// diagonal part that vanishes with the offset. Fills dSigma/de and optionally dSigma/du.
  SmallMatrix edge_resolvent(double edge, cplx offset, SmallMatrix& moving, SmallMatrix& dsigma_de,
                             SmallMatrix* dsigma_du) const;

  std::size_t dim_;
  std::vector<ChainReservoir> leads_;
  SystemState state_;
};

/// Eigenpairs of a Hermitian h as unit-weight poles, ascending in energy.
std::vector<BoundState> isolated_levels(const SmallMatrix& h);

GreensEval eval_greens(const SystemModel& sys, double u, double e);

/// g_S(u, e) = Tr A = (1/pi) Im Tr G^A.
double ldos_system(const SystemModel& sys, double u, double e);

/// delta g_{R,alpha}(u, e) = -(1/pi) Im Tr{(dSigma_alpha/de) G^A}.
double ldos_reservoir_correction(const SystemModel& sys, double u, double e, std::size_t lead);

/// All real poles of G^A outside the active lead bands, sorted by energy.
std::vector<BoundState> find_bound_states(const SystemModel& sys, double u);

/// Per-node continuum densities from an already evaluated G^A.
double system_density(const GreensEval& ge);
double reservoir_density(const GreensEval& ge, const FrozenSystem& fs, std::size_t lead);

}  // namespace qsnegf
