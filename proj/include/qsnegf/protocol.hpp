#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "qsnegf/greens.hpp"
#include "qsnegf/kernels.hpp"
#include "qsnegf/quadrature.hpp"
#include "qsnegf/rates.hpp"

namespace qsnegf {

enum class ModelKind { resonant_level, two_level };

/// Parametrized system: the resonant level (eps_s, V) or the two-level
/// system (eps1, eps2, w, V1, V2) with one lead on each orbital.
///
/// h_S and the coupling amplitudes are linear in the parameters, so the
/// u-derivatives follow from the parameter rates alone.
class ModelDefinition {
public:
  static ModelDefinition resonant_level(double eps_s, double V, const ChainReservoir& lead = {});
  static ModelDefinition two_level(double eps1, double eps2, double w, double V1, double V2,
                                   const ChainReservoir& lead = {});

  ModelKind kind() const { return kind_; }
  std::size_t dim() const { return kind_ == ModelKind::resonant_level ? 1 : 2; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  std::size_t parameter_index(const std::string& name) const;
  const std::vector<double>& initial() const { return initial_; }
  void set_initial(const std::string& name, double value);
  std::vector<ChainReservoir> leads() const;
  const ChainReservoir& reservoir() const { return reservoir_; }

  SystemState state(const std::vector<double>& params, const std::vector<double>& rates) const;

  /// Model frozen at the given parameters (zero rates).
  SystemModel frozen(const std::vector<double>& params) const;

private:
  ModelKind kind_ = ModelKind::resonant_level;
  std::vector<std::string> names_;
  std::vector<double> initial_;
  ChainReservoir reservoir_;
};

enum class RampShape { linear, smoothstep };

/// One parameter moving from `from` to `to` over a segment's local s in [0, 1].
/// Both shapes are polynomials and are evaluated as such outside [0, 1].
struct Ramp {
  double from = 0.0;
  double to = 0.0;
  RampShape shape = RampShape::linear;

  double value(double s) const;
  double rate(double s) const;
};

struct ProtocolSegment {
  std::map<std::string, Ramp> ramps;
  int steps = 16;
};

/// Segments run in order, each occupying an equal share of the global u in [0, 1].
struct Protocol {
  std::vector<ProtocolSegment> segments;

  /// Parameter values at the start of every segment plus the final values.
  std::vector<std::vector<double>> joints(const ModelDefinition& model) const;
  /// A copy run backwards.
  Protocol reversed(const ModelDefinition& model) const;
};

/// SystemModel for one segment, parametrized by its local s (rates per unit s).
SystemModel segment_model(const ModelDefinition& model, const std::vector<double>& start,
                          const ProtocolSegment& segment);

struct ProtocolOptions {
  QuadratureOptions quadrature;
  /// Overrides every segment's step count when positive.
  int u_steps = 0;
  /// Worker threads for independent u points; 0 picks the hardware count.
  int threads = 0;
  /// Take a snapshot at every step end (for state-function curves).
  bool step_snapshots = true;
};

/// Rate evaluation at one u-quadrature node.
struct ProtocolSample {
  double u = 0.0;
  std::vector<double> params;
  /// Rates per unit global u.
  RateVector rates;
};

/// Cumulative integrals at one step end.
struct ProtocolRow {
  double u = 0.0;
  std::vector<double> params;
  RateVector cumulative;
  Snapshot snapshot;
  bool has_snapshot = false;
};

struct Residuals {
  /// max over u of |Wext - OmegaS - sum dOmegaR| (rates per unit u).
  double sum_rule_rate = 0.0;
  /// |W_ext - Delta Omega_S - sum delta Delta Omega_R| with Delta from endpoint snapshots.
  double sum_rule = 0.0;
  /// |Delta U_S - T Delta S_S - mu Delta N_S - W_S|.
  double first_law = 0.0;
  /// max over u of |U_S' - T S_S' - mu N_S' - W_S'|.
  double first_law_rate = 0.0;
  /// max over u of |<dH_S/du> + <dH_SR/du> - Wext|.
  double power_sum = 0.0;
  /// max over u of the difference between the two I^W_S routes.
  double nonlocal_routes = 0.0;
  /// |integral of rate - snapshot difference| per state function.
  std::map<std::string, double> rate_vs_snapshot;

  double rate_vs_snapshot_max() const;
};

struct ScenarioResult {
  std::vector<std::string> parameter_names;
  std::vector<ProtocolRow> rows;
  std::vector<ProtocolSample> samples;
  Snapshot initial;
  Snapshot final;
  /// Protocol integrals of every rate.
  RateVector total;
  /// Local s of bound-state thresholds found, as global u.
  std::vector<double> thresholds;
  Residuals residuals;

  double W_ext() const { return total.Wext; }
  double W_S() const { return total.WS(); }
  double delta_Omega_S() const { return final.Omega_S - initial.Omega_S; }
  double delta_dOmega_R() const { return final.dOmega_R() - initial.dOmega_R(); }
};

ScenarioResult run_protocol(const ModelDefinition& model, const Protocol& protocol, const Ensemble& ens,
                            const ProtocolOptions& options = {});

/// acc += weight * r, componentwise.
void accumulate(RateVector& acc, const RateVector& r, double weight);

}  // namespace qsnegf
