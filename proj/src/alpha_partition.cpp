#include "qsnegf/alpha_partition.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace qsnegf {

double alpha_internal_energy(const Snapshot& snap, double alpha) { return snap.H_S + alpha * snap.H_SR; }

double alpha_internal_energy(const FrozenSystem& system, const Ensemble& ens, double alpha,
                             const QuadratureOptions& options) {
  return alpha_internal_energy(snapshot(system, ens, options), alpha);
}

double alpha_work(const ScenarioResult& run, double alpha) {
  return run.total.HS_power + alpha * run.total.HSR_power;
}

AlphaEntropyTerms alpha_entropy_terms(const FrozenSystem& system, const Ensemble& ens,
                                      const QuadratureOptions& options) {
  const EnergyGrid grid = EnergyGrid::build(system, ens, options);
  AlphaEntropyTerms t;
  t.local = integrate_spectral(
      grid, [&](const EnergyNode& node) {
        return entropy_kernel(ens, node.energy) * system_density(system.eval(node.energy, node.near));
      },
      [&](const BoundState& b) { return entropy_kernel(ens, b.energy) * b.system_weight(); });

  using Weight = std::function<double(double)>;
  const std::pair<Weight, Weight> terms[] = {
      {[&](double e) { return fermi(ens, e); }, [&](double e) { return neg_log_fermi(ens, e); }},
      {[&](double e) { return 1.0 - fermi(ens, e); }, [&](double e) { return neg_log_fermi_complement(ens, e); }},
  };
  t.coherence = integrate_double_separable(
      grid, [&](const EnergyNode& node) { return system.eval(node.energy, node.near).spectral; }, [](const BoundState& b) { return b.residue; },
      std::span<const std::pair<Weight, Weight>>(terms));
  return t;
}

double alpha_entropy(const FrozenSystem& system, const Ensemble& ens, double alpha,
                     const QuadratureOptions& options) {
  return alpha_entropy_terms(system, ens, options).value(alpha);
}

double alpha_entropy(const Snapshot& snap, double alpha) {
  return AlphaEntropyTerms{snap.S_S, snap.coherence}.value(alpha);
}

double entropy_eog(const ScenarioResult& run, const Ensemble& ens, double alpha) {
  const double dU = alpha_internal_energy(run.final, alpha) - alpha_internal_energy(run.initial, alpha);
  const double dN = run.final.N_S - run.initial.N_S;
  return (dU - ens.mu() * dN - alpha_work(run, alpha)) / ens.temperature();
}

AlphaSweep alpha_sweep(const std::vector<const ScenarioResult*>& paths, const Ensemble& ens,
                       const std::vector<double>& alphas) {
  if (paths.empty()) throw std::invalid_argument("alpha_sweep: no protocol results");
  AlphaSweep sweep;
  const ScenarioResult& ref = *paths.front();
  sweep.coherence_initial = ref.initial.coherence;
  sweep.coherence_final = ref.final.coherence;
  for (double a : alphas) {
    AlphaPoint p;
    p.alpha = a;
    p.delta_alpha_U = alpha_internal_energy(ref.final, a) - alpha_internal_energy(ref.initial, a);
    p.delta_alpha_S = alpha_entropy(ref.final, a) - alpha_entropy(ref.initial, a);
    for (const ScenarioResult* r : paths) {
      p.alpha_W.push_back(alpha_work(*r, a));
      p.delta_S_eog.push_back(entropy_eog(*r, ens, a));
    }
    sweep.points.push_back(std::move(p));
  }
  return sweep;
}

std::vector<double> alpha_grid(double start, double end, double step) {
  if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(end) || end < start)
    throw std::invalid_argument("alpha_grid: need start <= end and step > 0");
  std::vector<double> out;
  const long n = std::lround(std::floor((end - start) / step + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(start + step * static_cast<double>(k));
  return out;
}

}  // namespace qsnegf
