#include "qsnegf/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace qsnegf {

namespace {

constexpr double kJoinTolerance = 1e-12;

// Runs job(i) for i in [0, n) on up to `threads` workers. Results go to
// caller-owned slots, so the outcome does not depend on scheduling.
template <class Job>
void parallel_for(std::size_t n, int threads, Job&& job) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void scale_rates(RateVector& r, double k) {
  RateVector zero;
  zero.dOmegaR.assign(r.dOmegaR.size(), 0.0);
  zero.dUR.assign(r.dUR.size(), 0.0);
  zero.dSR.assign(r.dSR.size(), 0.0);
  zero.dNR.assign(r.dNR.size(), 0.0);
  zero.NS_site.assign(r.NS_site.size(), 0.0);
  accumulate(zero, r, k);
  r = zero;
}

RateVector zero_like(const ModelDefinition& model) {
  RateVector r;
  const std::size_t n_leads = model.leads().size();
  r.dOmegaR.assign(n_leads, 0.0);
  r.dUR.assign(n_leads, 0.0);
  r.dSR.assign(n_leads, 0.0);
  r.dNR.assign(n_leads, 0.0);
  r.NS_site.assign(model.dim(), 0.0);
  return r;
}

std::size_t pole_count(const SystemModel& m, double s) { return FrozenSystem(m, s).bound_states().size(); }

double locate_threshold(const SystemModel& m, double a, double b, std::size_t count_a) {
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (a + b);
    if (pole_count(m, mid) == count_a)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

struct Interval {
  double a;
  double b;
};

// Integration intervals in local s; a step across a bound-state threshold is
// split there and each side graded geometrically toward it in 8 pieces.
std::vector<Interval> segment_intervals(const SystemModel& m, int steps, std::vector<double>& thresholds) {
  std::vector<double> edges;
  for (int k = 0; k <= steps; ++k) edges.push_back(static_cast<double>(k) / steps);
  std::vector<std::size_t> counts(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) counts[k] = pole_count(m, edges[k]);
  std::vector<Interval> out;
  for (int k = 0; k < steps; ++k) {
    const double a = edges[k];
    const double b = edges[k + 1];
    if (counts[k] == counts[k + 1]) {
      out.push_back({a, b});
      continue;
    }
    const double t = locate_threshold(m, a, b, counts[k]);
    thresholds.push_back(t);
    auto graded = [&](double from, double to) {
      // Points from `from` to `to` with spacing halving toward `to`.
      std::vector<double> pts{from};
      const double span = to - from;
      for (int j = 1; j < 8; ++j) pts.push_back(to - span * std::ldexp(1.0, -j));
      pts.push_back(to);
      return pts;
    };
    const auto left = graded(a, t);
    for (std::size_t j = 0; j + 1 < left.size(); ++j) out.push_back({left[j], left[j + 1]});
    auto right = graded(b, t);
    std::reverse(right.begin(), right.end());
    for (std::size_t j = 0; j + 1 < right.size(); ++j) out.push_back({right[j], right[j + 1]});
  }
  return out;
}

}  // namespace

ModelDefinition ModelDefinition::resonant_level(double eps_s, double V, const ChainReservoir& lead) {
  lead.validate();
  ModelDefinition m;
  m.kind_ = ModelKind::resonant_level;
  m.names_ = {"eps_s", "V"};
  m.initial_ = {eps_s, V};
  m.reservoir_ = lead;
  return m;
}

ModelDefinition ModelDefinition::two_level(double eps1, double eps2, double w, double V1, double V2,
                                           const ChainReservoir& lead) {
  lead.validate();
  ModelDefinition m;
  m.kind_ = ModelKind::two_level;
  m.names_ = {"eps1", "eps2", "w", "V1", "V2"};
  m.initial_ = {eps1, eps2, w, V1, V2};
  m.reservoir_ = lead;
  return m;
}

std::size_t ModelDefinition::parameter_index(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::invalid_argument("unknown model parameter '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

void ModelDefinition::set_initial(const std::string& name, double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("parameter '" + name + "' must be finite");
  initial_[parameter_index(name)] = value;
}

std::vector<ChainReservoir> ModelDefinition::leads() const {
  if (kind_ == ModelKind::resonant_level) {
    ChainReservoir l = reservoir_;
    l.site = 0;
    if (l.label.empty()) l.label = "R";
    return {l};
  }
  ChainReservoir l1 = reservoir_;
  ChainReservoir l2 = reservoir_;
  l1.site = 0;
  l2.site = 1;
  l1.label = "R1";
  l2.label = "R2";
  return {l1, l2};
}

SystemState ModelDefinition::state(const std::vector<double>& p, const std::vector<double>& dp) const {
  SystemState st;
  if (kind_ == ModelKind::resonant_level) {
    st.h = SmallMatrix(1);
    st.dh = SmallMatrix(1);
    st.h(0, 0) = p[0];
    st.dh(0, 0) = dp[0];
    st.drive[0] = {p[1], dp[1]};
    return st;
  }
  st.h = SmallMatrix(2);
  st.dh = SmallMatrix(2);
  st.h(0, 0) = p[0];
  st.h(1, 1) = p[1];
  st.h(0, 1) = st.h(1, 0) = p[2];
  st.dh(0, 0) = dp[0];
  st.dh(1, 1) = dp[1];
  st.dh(0, 1) = st.dh(1, 0) = dp[2];
  st.drive[0] = {p[3], dp[3]};
  st.drive[1] = {p[4], dp[4]};
  return st;
}

SystemModel ModelDefinition::frozen(const std::vector<double>& params) const {
  const std::vector<double> zero(params.size(), 0.0);
  const SystemState st = state(params, zero);
  return SystemModel(dim(), leads(), [st](double) { return st; });
}

double Ramp::value(double s) const {
  if (shape == RampShape::linear) return from + (to - from) * s;
  return from + (to - from) * s * s * (3.0 - 2.0 * s);
}

double Ramp::rate(double s) const {
  if (shape == RampShape::linear) return to - from;
  return (to - from) * 6.0 * s * (1.0 - s);
}

std::vector<std::vector<double>> Protocol::joints(const ModelDefinition& model) const {
  std::vector<std::vector<double>> out{model.initial()};
  for (const auto& seg : segments) {
    std::vector<double> p = out.back();
    for (const auto& [name, ramp] : seg.ramps) {
      const std::size_t i = model.parameter_index(name);
      if (std::abs(ramp.from - p[i]) > kJoinTolerance)
        throw std::invalid_argument("protocol: ramp of '" + name + "' starts at " + std::to_string(ramp.from) +
                                    " but the parameter is " + std::to_string(p[i]));
      if (!std::isfinite(ramp.to)) throw std::invalid_argument("protocol: ramp of '" + name + "' is not finite");
      p[i] = ramp.to;
    }
    if (seg.steps < 1) throw std::invalid_argument("protocol: segment step count must be >= 1");
    out.push_back(p);
  }
  return out;
}

Protocol Protocol::reversed(const ModelDefinition& model) const {
  (void)joints(model);
  Protocol r;
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    ProtocolSegment seg;
    seg.steps = it->steps;
    for (const auto& [name, ramp] : it->ramps) seg.ramps[name] = Ramp{ramp.to, ramp.from, ramp.shape};
    r.segments.push_back(seg);
  }
  return r;
}

SystemModel segment_model(const ModelDefinition& model, const std::vector<double>& start,
                          const ProtocolSegment& segment) {
  std::vector<std::pair<std::size_t, Ramp>> moving;
  for (const auto& [name, ramp] : segment.ramps) moving.emplace_back(model.parameter_index(name), ramp);
  auto path = [model, start, moving](double s) {
    std::vector<double> p = start;
    std::vector<double> dp(start.size(), 0.0);
    for (const auto& [i, ramp] : moving) {
      p[i] = ramp.value(s);
      dp[i] = ramp.rate(s);
    }
    return model.state(p, dp);
  };
  return SystemModel(model.dim(), model.leads(), path);
}

void accumulate(RateVector& acc, const RateVector& r, double weight) {
  acc.Wext += weight * r.Wext;
  acc.OmegaS += weight * r.OmegaS;
  acc.US += weight * r.US;
  acc.SS += weight * r.SS;
  acc.NS += weight * r.NS;
  acc.HS_power += weight * r.HS_power;
  acc.HSR_power += weight * r.HSR_power;
  acc.IWS += weight * r.IWS;
  acc.IWS_explicit += weight * r.IWS_explicit;
  auto add = [weight](std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::logic_error("accumulate: mismatched rate vectors");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += weight * b[i];
  };
  add(acc.dOmegaR, r.dOmegaR);
  add(acc.dUR, r.dUR);
  add(acc.dSR, r.dSR);
  add(acc.dNR, r.dNR);
  add(acc.NS_site, r.NS_site);
}

double Residuals::rate_vs_snapshot_max() const {
  double m = 0.0;
  for (const auto& [name, v] : rate_vs_snapshot) m = std::max(m, v);
  return m;
}

ScenarioResult run_protocol(const ModelDefinition& model, const Protocol& protocol, const Ensemble& ens,
                            const ProtocolOptions& options) {
  const auto joints = protocol.joints(model);
  const std::size_t n_seg = protocol.segments.size();
  ScenarioResult result;
  result.parameter_names = model.parameter_names();

  const GaussRule rule = gauss_legendre(4);

  struct Node {
    std::size_t segment;
    double s;
    double weight;
  };
  struct StepEnd {
    std::size_t segment;
    double s;
    std::size_t first_node;
    std::size_t end_node;
  };
  std::vector<SystemModel> models;
  std::vector<Node> nodes;
  std::vector<StepEnd> ends;
  for (std::size_t k = 0; k < n_seg; ++k) {
    const auto& seg = protocol.segments[k];
    models.push_back(segment_model(model, joints[k], seg));
    const int steps = options.u_steps > 0 ? options.u_steps : seg.steps;
    std::vector<double> local_thresholds;
    const auto intervals = segment_intervals(models.back(), steps, local_thresholds);
    for (double t : local_thresholds) result.thresholds.push_back((k + t) / static_cast<double>(n_seg));
    for (const auto& iv : intervals) {
      const std::size_t first = nodes.size();
      const double mid = 0.5 * (iv.a + iv.b);
      const double half = 0.5 * (iv.b - iv.a);
      for (std::size_t q = 0; q < rule.nodes.size(); ++q)
        nodes.push_back({k, mid + half * rule.nodes[q], half * rule.weights[q]});
      ends.push_back({k, iv.b, first, nodes.size()});
    }
  }

  auto params_at = [&](std::size_t k, double s) {
    std::vector<double> p = joints[k];
    for (const auto& [name, ramp] : protocol.segments[k].ramps) p[model.parameter_index(name)] = ramp.value(s);
    return p;
  };
  auto global_u = [&](std::size_t k, double s) { return (static_cast<double>(k) + s) / static_cast<double>(n_seg); };

  std::vector<RateVector> rates(nodes.size());
  std::vector<Snapshot> step_snaps(options.step_snapshots ? ends.size() : 0);
  Snapshot initial;
  Snapshot final_snap;
  const std::size_t n_jobs = nodes.size() + step_snaps.size() + 2;
  parallel_for(n_jobs, options.threads, [&](std::size_t i) {
    if (i < nodes.size()) {
      const auto& nd = nodes[i];
      try {
        rates[i] = partitioned_rates(models[nd.segment], nd.s, ens, options.quadrature);
      } catch (const std::exception& e) {
        throw std::runtime_error("rate evaluation failed at u = " + std::to_string(global_u(nd.segment, nd.s)) +
                                 ": " + e.what());
      }
      return;
    }
    i -= nodes.size();
    if (i < step_snaps.size()) {
      step_snaps[i] = snapshot(models[ends[i].segment], ends[i].s, ens, options.quadrature);
      return;
    }
    i -= step_snaps.size();
    if (i == 0)
      initial = snapshot(model.frozen(joints.front()), 0.0, ens, options.quadrature);
    else
      final_snap = snapshot(model.frozen(joints.back()), 0.0, ens, options.quadrature);
  });
  result.initial = initial;
  result.final = final_snap;

  // Ordered reduction; per-unit-s rates become per-unit-u by the factor n_seg.
  RateVector acc = zero_like(model);
  for (std::size_t e = 0; e < ends.size(); ++e) {
    for (std::size_t i = ends[e].first_node; i < ends[e].end_node; ++i) {
      accumulate(acc, rates[i], nodes[i].weight);
      ProtocolSample sample;
      sample.u = global_u(nodes[i].segment, nodes[i].s);
      sample.params = params_at(nodes[i].segment, nodes[i].s);
      sample.rates = rates[i];
      scale_rates(sample.rates, static_cast<double>(n_seg));
      result.samples.push_back(std::move(sample));
    }
    ProtocolRow row;
    row.u = global_u(ends[e].segment, ends[e].s);
    row.params = params_at(ends[e].segment, ends[e].s);
    row.cumulative = acc;
    if (options.step_snapshots) {
      row.snapshot = step_snaps[e];
      row.has_snapshot = true;
    }
    result.rows.push_back(std::move(row));
  }
  result.total = acc;

  Residuals& res = result.residuals;
  for (const auto& sm : result.samples) {
    const RateVector& r = sm.rates;
    res.sum_rule_rate = std::max(res.sum_rule_rate, std::abs(r.sum_rule_residual()));
    res.first_law_rate = std::max(res.first_law_rate, std::abs(r.first_law_residual(ens)));
    res.power_sum = std::max(res.power_sum, std::abs(r.HS_power + r.HSR_power - r.Wext));
    res.nonlocal_routes = std::max(res.nonlocal_routes, std::abs(r.IWS - r.IWS_explicit));
  }
  const Snapshot& a = result.initial;
  const Snapshot& b = result.final;
  const double dU = b.U_S - a.U_S;
  const double dS = b.S_S - a.S_S;
  const double dN = b.N_S - a.N_S;
  res.sum_rule = std::abs(acc.Wext - (b.Omega_S - a.Omega_S) - (b.dOmega_R() - a.dOmega_R()));
  res.first_law = std::abs(dU - ens.temperature() * dS - ens.mu() * dN - acc.WS());
  res.rate_vs_snapshot["Omega_S"] = std::abs(acc.OmegaS - (b.Omega_S - a.Omega_S));
  res.rate_vs_snapshot["U_S"] = std::abs(acc.US - dU);
  res.rate_vs_snapshot["S_S"] = std::abs(acc.SS - dS);
  res.rate_vs_snapshot["N_S"] = std::abs(acc.NS - dN);
  for (std::size_t i = 0; i < acc.NS_site.size(); ++i)
    res.rate_vs_snapshot["N_site" + std::to_string(i + 1)] = std::abs(acc.NS_site[i] - (b.N_site[i] - a.N_site[i]));
  const auto leads = model.leads();
  for (std::size_t l = 0; l < leads.size(); ++l) {
    const std::string tag = "_" + leads[l].label;
    res.rate_vs_snapshot["dOmega" + tag] = std::abs(acc.dOmegaR[l] - (b.lead[l].Omega - a.lead[l].Omega));
    res.rate_vs_snapshot["dU" + tag] = std::abs(acc.dUR[l] - (b.lead[l].U - a.lead[l].U));
    res.rate_vs_snapshot["dS" + tag] = std::abs(acc.dSR[l] - (b.lead[l].S - a.lead[l].S));
    res.rate_vs_snapshot["dN" + tag] = std::abs(acc.dNR[l] - (b.lead[l].N - a.lead[l].N));
  }
  return result;
}

}  // namespace qsnegf
