#pragma once

#include <vector>

#include "qsnegf/protocol.hpp"
#include "qsnegf/rates.hpp"

namespace qsnegf {

/// <H_S> + alpha <H_SR>.
double alpha_internal_energy(const Snapshot& snap, double alpha);
double alpha_internal_energy(const FrozenSystem& system, const Ensemble& ens, double alpha,
                             const QuadratureOptions& options = {});

/// Integral of <dH_S/du> + alpha <dH_SR/du> along a finished protocol.
double alpha_work(const ScenarioResult& run, double alpha);

/// The two spectral pieces of the alpha-entropy:
/// alpha-S = 2 alpha local + (1 - 2 alpha) coherence.
struct AlphaEntropyTerms {
  /// Integral of g_S s plus poles (the Hilbert-space S_S).
  double local = 0.0;
  /// Double integral of Tr{A(e) A(e')} [f(e) (-ln f(e')) + (1 - f(e)) (-ln(1 - f(e')))],
  /// continuum and pole parts of A both included.
  double coherence = 0.0;

  double value(double alpha) const { return 2.0 * alpha * local + (1.0 - 2.0 * alpha) * coherence; }
};

AlphaEntropyTerms alpha_entropy_terms(const FrozenSystem& system, const Ensemble& ens,
                                      const QuadratureOptions& options = {});
double alpha_entropy(const FrozenSystem& system, const Ensemble& ens, double alpha,
                     const QuadratureOptions& options = {});
double alpha_entropy(const Snapshot& snap, double alpha);

/// Entropy change implied by the thermodynamic identity with alpha-U and alpha-W:
/// [Delta(alpha-U_S) - mu Delta N_S - alpha-W_S] / T.
double entropy_eog(const ScenarioResult& run, const Ensemble& ens, double alpha);

struct AlphaPoint {
  double alpha = 0.0;
  double delta_alpha_U = 0.0;
  double delta_alpha_S = 0.0;
  /// One entry per path.
  std::vector<double> alpha_W;
  std::vector<double> delta_S_eog;
};

struct AlphaSweep {
  std::vector<AlphaPoint> points;
  /// Coherence term at the initial and final endpoints.
  double coherence_initial = 0.0;
  double coherence_final = 0.0;
};

/// Evaluates every alpha on a set of protocols sharing their endpoints.
AlphaSweep alpha_sweep(const std::vector<const ScenarioResult*>& paths, const Ensemble& ens,
                       const std::vector<double>& alphas);

/// alpha values start, start + step, ... up to end (inclusive within 1e-9 step).
std::vector<double> alpha_grid(double start, double end, double step);

}  // namespace qsnegf
