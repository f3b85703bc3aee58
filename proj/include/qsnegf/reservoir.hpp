#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include "qsnegf/small_matrix.hpp"

namespace qsnegf {

/// How the lead's embedding self-energy depends on energy.
enum class LeadSpectrum {
  /// Semi-infinite tight-binding chain: semicircular coupling width with
  /// square-root band edges.
  chain,
  /// Energy-independent surrogate: Sigma = i V^2 / t0 inside the chain's band
  /// window and zero outside, with dSigma/de forced to zero.
  flat,
};

/// Semi-infinite tight-binding lead attached to one system orbital.
///
/// The embedding self-energy factorizes as Sigma(u, e) = V(u)^2 sigma(e), with
/// sigma independent of the coupling amplitude. The hopping sign is irrelevant:
/// the surface Green's function depends on t0 only through t0^2.
struct ChainReservoir {
  double hopping = 1.25;
  double band_center = 0.0;
  std::size_t site = 0;
  std::string label;
  LeadSpectrum spectrum = LeadSpectrum::chain;

  double lower_edge() const { return band_center - 2.0 * hopping; }
  double upper_edge() const { return band_center + 2.0 * hopping; }
  bool inside_band(double e) const { return e > lower_edge() && e < upper_edge(); }

  void validate() const {
    if (!(hopping > 0.0) || !std::isfinite(hopping))
      throw std::invalid_argument("ChainReservoir: hopping must be positive and finite");
    if (!std::isfinite(band_center))
      throw std::invalid_argument("ChainReservoir: band center must be finite");
  }
};

/// Exact distance of an energy from a band edge, for energies too close to the
/// edge for e - edge to be resolved in double precision.
struct EdgeOffset {
  double edge = std::numeric_limits<double>::quiet_NaN();
  /// Positive toward the band interior.
  double distance = 0.0;
};

/// Unit-coupling surface self-energy sigma(e) and its energy derivative.
struct UnitSelfEnergy {
  cplx value;
  cplx d_energy;
  /// True when e sits exactly on a band edge, where d_energy diverges.
  bool edge_singular = false;
};

UnitSelfEnergy unit_self_energy(const ChainReservoir& lead, double e, const EdgeOffset& near = {});

/// Analytic continuation of sigma and dsigma/de off the real axis.
///
/// Branch chosen so that the lower half plane reproduces the advanced
/// function on the band and the real axis outside the band gives the decaying
/// root. Analytic everywhere except on the band interval.
UnitSelfEnergy unit_self_energy(const ChainReservoir& lead, cplx z);

/// One lead's self-energy and the partial derivatives used by the rate formulas.
struct SelfEnergyEval {
  cplx sigma;
  cplx d_energy;
  cplx d_u;
  cplx d_energy_u;
  bool edge_singular = false;

  double lambda() const { return sigma.real(); }
  double gamma() const { return 2.0 * sigma.imag(); }
};

/// Sigma^A = Lambda + i Gamma / 2 for coupling V(u) = amplitude, dV/du = rate.
///
/// At an exact band edge the one-sided finite Sigma is returned, the energy
/// derivatives are NaN and edge_singular is set.
SelfEnergyEval surface_sigma(const ChainReservoir& lead, double amplitude, double rate, double e,
                             const EdgeOffset& near = {});

class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

struct RecursionResult {
  cplx sigma;
  /// |g - 1/(z - e0 - t0^2 g)| of the returned surface function.
  double residual = 0.0;
  int iterations = 0;
};

/// V^2 g_surf from renormalization-decimation of the chain at e - i eta.
///
/// Each iteration doubles the effective chain length, so n_iter bounds the
/// number of doublings. Throws ConvergenceError when the renormalized hopping
/// has not fallen below tolerance after n_iter iterations.
RecursionResult surface_sigma_recursion(const ChainReservoir& lead, double amplitude, double e,
                                        double eta, int n_iter, double tolerance = 1e-15);

}  // namespace qsnegf
