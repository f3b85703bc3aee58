#include "qsnegf/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qsnegf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kContourPoints = 64;

struct Kernels {
  double f;
  double ef;
  double s;
  double w;
};

Kernels kernels_at(const Ensemble& ens, double e) {
  const double f = fermi(ens, e);
  return {f, e * f, entropy_kernel(ens, e), grand_kernel(ens, e)};
}

void put4(std::span<double> out, std::size_t at, const Kernels& k, double density) {
  out[at] += k.f * density;
  out[at + 1] += k.ef * density;
  out[at + 2] += k.s * density;
  out[at + 3] += k.w * density;
}

// Packed layout shared by snapshots and state-function rates:
// [N, U, S, Omega] (system), one occupation per orbital, [N, U, S, Omega] per lead.
struct StateLayout {
  std::size_t n;
  std::size_t leads;
  std::size_t site(std::size_t i) const { return 4 + i; }
  std::size_t lead(std::size_t a) const { return 4 + n + 4 * a; }
  std::size_t size() const { return 4 + n + 4 * leads; }
};

// Real diagonal self-energy at a pole (outside every active band).
SmallMatrix real_sigma(const FrozenSystem& fs, double e, bool rate) {
  SmallMatrix m(fs.dim());
  for (std::size_t a = 0; a < fs.leads().size(); ++a) {
    const auto& drv = fs.state().drive[a];
    const double scale = rate ? 2.0 * drv.amplitude * drv.rate : drv.amplitude * drv.amplitude;
    if (scale == 0.0) continue;
    const std::size_t s = fs.leads()[a].site;
    m(s, s) += scale * unit_self_energy(fs.leads()[a], e).value.real();
  }
  return m;
}

// Pole contributions of the state functions.
std::vector<double> pole_state_terms(const FrozenSystem& fs, const std::vector<BoundState>& poles,
                                     const Ensemble& ens, const StateLayout& lay) {
  std::vector<double> out(lay.size(), 0.0);
  std::span<double> o(out);
  for (const auto& b : poles) {
    const Kernels k = kernels_at(ens, b.energy);
    put4(o, 0, k, b.system_weight());
    for (std::size_t i = 0; i < lay.n; ++i) o[lay.site(i)] += k.f * b.residue(i, i).real();
    for (std::size_t a = 0; a < lay.leads; ++a) put4(o, lay.lead(a), k, b.reservoir_weight[a]);
  }
  (void)fs;
  return out;
}

double distance_to_bands(const FrozenSystem& fs, double e) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t a : fs.active_leads()) {
    d = std::min(d, std::abs(e - fs.leads()[a].lower_edge()));
    d = std::min(d, std::abs(e - fs.leads()[a].upper_edge()));
  }
  return d;
}

// Laurent coefficients c1 (1/(z-e_b)) and c2 (1/(z-e_b)^2) of
// Tr{dG/du dSigma/de - dG/de dSigma/du} around a pole.
std::pair<double, double> contour_coefficients(const FrozenSystem& fs, const std::vector<BoundState>& poles,
                                               std::size_t index) {
  const BoundState& b = poles[index];
  const double eb = b.energy;
  double gap = distance_to_bands(fs, eb);
  if (!std::isnan(b.edge)) {
    // eb may round onto its own edge; the exact offset stands in for that distance.
    gap = std::abs(b.offset);
    for (std::size_t a : fs.active_leads())
      for (double x : {fs.leads()[a].lower_edge(), fs.leads()[a].upper_edge()})
        if (x != b.edge) gap = std::min(gap, std::abs(eb - x));
  }
  double radius = std::min(0.1, 0.5 * gap);
  for (std::size_t j = 0; j < poles.size(); ++j)
    if (j != index) radius = std::min(radius, 0.5 * std::abs(poles[j].energy - eb));
  cplx c1 = 0.0;
  cplx c2 = 0.0;
  for (int k = 0; k < kContourPoints; ++k) {
    const double phi = 2.0 * kPi * (k + 0.5) / kContourPoints;
    const cplx step = std::polar(radius, phi);
    // Near a chain edge the circle is walked as an offset from it, resolved below double spacing.
    const ComplexGreens cg = std::isnan(b.edge) ? fs.eval(eb + step) : fs.eval(b.edge, b.offset + step);
    const cplx value = trace_product(cg.dg_du, cg.dsigma_de) - trace_product(cg.dg_de, cg.dsigma_du);
    c1 += value * step;
    c2 += value * step * step;
  }
  return {c1.real() / kContourPoints, c2.real() / kContourPoints};
}

std::vector<double> snapshot_vector(const FrozenSystem& fs, const Ensemble& ens, const QuadratureOptions& options,
                                    std::size_t& n_bound) {
  const std::size_t n = fs.dim();
  const StateLayout lay{n, fs.leads().size()};
  const std::size_t at_hs = lay.size();
  const std::size_t at_hsr = at_hs + 1;
  const std::size_t at_count = at_hs + 2;
  const std::size_t at_moments = at_hs + 3;
  const std::size_t block = 2 * n * n;
  const std::size_t width = at_moments + 4 * block;

  const EnergyGrid grid = EnergyGrid::build(fs, ens, options);
  n_bound = grid.poles().size();
  const auto& h = fs.state().h;

  auto moments = [&](std::span<double> o, const SmallMatrix& m, double f, double p, double q) {
    const double wts[4] = {f, 1.0 - f, p, q};
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t at = at_moments + t * block + 2 * (i * n + j);
          o[at] += wts[t] * m(i, j).real();
          o[at + 1] += wts[t] * m(i, j).imag();
        }
  };

  auto density = [&](const EnergyNode& node, std::span<double> o) {
    const double e = node.energy;
    const GreensEval ge = fs.eval(e, node.near);
    const Kernels k = kernels_at(ens, e);
    const double gs = system_density(ge);
    put4(o, 0, k, gs);
    for (std::size_t i = 0; i < n; ++i) o[lay.site(i)] = k.f * ge.g(i, i).imag() / kPi;
    double count = gs;
    for (std::size_t a = 0; a < lay.leads; ++a) {
      const double dg = reservoir_density(ge, fs, a);
      put4(o, lay.lead(a), k, dg);
      count += dg;
    }
    o[at_hs] = k.f * trace_product(h, ge.g).imag() / kPi;
    o[at_hsr] = k.f * 2.0 * trace_product(ge.sigma, ge.g).imag() / kPi;
    o[at_count] = count;
    moments(o, ge.spectral, k.f, neg_log_fermi(ens, e), neg_log_fermi_complement(ens, e));
  };

  auto pole = [&](const BoundState& b, std::span<double> o) {
    const Kernels k = kernels_at(ens, b.energy);
    put4(o, 0, k, b.system_weight());
    for (std::size_t i = 0; i < n; ++i) o[lay.site(i)] = k.f * b.residue(i, i).real();
    for (std::size_t a = 0; a < lay.leads; ++a) put4(o, lay.lead(a), k, b.reservoir_weight[a]);
    o[at_hs] = k.f * trace_product(h, b.residue).real();
    o[at_hsr] = k.f * 2.0 * trace_product(real_sigma(fs, b.energy, false), b.residue).real();
    o[at_count] = b.total_weight();
    moments(o, b.residue, k.f, neg_log_fermi(ens, b.energy), neg_log_fermi_complement(ens, b.energy));
  };

  auto out = integrate_spectral(grid, width, density, pole);

  // Replace the moment block by the coherence value Tr{M_f M_p} + Tr{M_{1-f} M_q}.
  auto matrix = [&](std::size_t t) {
    SmallMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t at = at_moments + t * block + 2 * (i * n + j);
        m(i, j) = cplx(out[at], out[at + 1]);
      }
    return m;
  };
  const double coherence =
      trace_product(matrix(0), matrix(2)).real() + trace_product(matrix(1), matrix(3)).real();
  out.resize(at_moments + 1);
  out[at_moments] = coherence;
  return out;
}

Snapshot unpack_snapshot(const std::vector<double>& v, std::size_t n, std::size_t leads, std::size_t n_bound) {
  const StateLayout lay{n, leads};
  Snapshot s;
  s.N_S = v[0];
  s.U_S = v[1];
  s.S_S = v[2];
  s.Omega_S = v[3];
  for (std::size_t i = 0; i < n; ++i) s.N_site.push_back(v[lay.site(i)]);
  for (std::size_t a = 0; a < leads; ++a) {
    const std::size_t at = lay.lead(a);
    s.lead.push_back({v[at], v[at + 1], v[at + 2], v[at + 3]});
  }
  s.H_S = v[lay.size()];
  s.H_SR = v[lay.size() + 1];
  s.state_count = v[lay.size() + 2];
  s.coherence = v[lay.size() + 3];
  s.n_bound = n_bound;
  return s;
}

std::vector<double> rate_vector(const SystemModel& model, double u, const Ensemble& ens,
                                const QuadratureOptions& options) {
  const FrozenSystem fs(model, u);
  const std::size_t n = fs.dim();
  const StateLayout lay{n, fs.leads().size()};
  const std::size_t at_wext = lay.size();
  const std::size_t at_hs = at_wext + 1;
  const std::size_t at_hsr = at_wext + 2;
  const std::size_t at_iw = at_wext + 3;
  const std::size_t width = at_wext + 4;

  const EnergyGrid grid = EnergyGrid::build(fs, ens, options);
  const auto& dh = fs.state().dh;

  auto density = [&](const EnergyNode& node, std::span<double> o) {
    const double e = node.energy;
    const GreensEval ge = fs.eval(e, node.near);
    const Kernels k = kernels_at(ens, e);
    put4(o, 0, k, ge.dg_du.trace().imag() / kPi);
    for (std::size_t i = 0; i < n; ++i) o[lay.site(i)] = k.f * ge.dg_du(i, i).imag() / kPi;
    for (std::size_t a = 0; a < lay.leads; ++a) {
      const std::size_t s = fs.leads()[a].site;
      const cplx term = ge.lead[a].d_energy * ge.dg_du(s, s) + ge.lead[a].d_energy_u * ge.g(s, s);
      put4(o, lay.lead(a), k, -term.imag() / kPi);
    }
    const double hs = trace_product(dh, ge.g).imag() / kPi;
    const double hsr = trace_product(ge.dsigma_du, ge.g).imag() / kPi;
    o[at_hs] = k.f * hs;
    o[at_hsr] = k.f * hsr;
    o[at_wext] = k.f * (hs + hsr);
    const cplx iw = trace_product(ge.dg_du, ge.dsigma_de) - trace_product(ge.dg_de, ge.dsigma_du);
    o[at_iw] = k.w * iw.imag() / kPi;
  };

  const auto poles = grid.poles();
  const std::vector<BoundState> pole_list(poles.begin(), poles.end());
  auto pole = [&](const BoundState& b, std::span<double> o) {
    const Kernels k = kernels_at(ens, b.energy);
    const double hs = trace_product(dh, b.residue).real();
    const double hsr = trace_product(real_sigma(fs, b.energy, true), b.residue).real();
    o[at_hs] = k.f * hs;
    o[at_hsr] = k.f * hsr;
    o[at_wext] = k.f * (hs + hsr);
    const std::size_t index = static_cast<std::size_t>(&b - poles.data());
    const auto [c1, c2] = contour_coefficients(fs, pole_list, index);
    o[at_iw] = c1 * k.w + c2 * k.f;
  };

  auto out = integrate_spectral(grid, width, density, pole);

  // Moving poles: central u-difference of the pole terms of the state functions.
  const FrozenSystem up(model, u + kPoleStep);
  const FrozenSystem down(model, u - kPoleStep);
  const auto poles_up = up.bound_states();
  const auto poles_down = down.bound_states();
  if (poles_up.size() != poles_down.size()) {
    // A threshold inside the stencil: second-order one-sided difference on the side that matches u.
    const double side = poles_up.size() == pole_list.size() ? 1.0 : -1.0;
    const FrozenSystem far(model, u + 2.0 * side * kPoleStep);
    const auto f0 = pole_state_terms(fs, pole_list, ens, lay);
    const auto f1 = side > 0.0 ? pole_state_terms(up, poles_up, ens, lay) : pole_state_terms(down, poles_down, ens, lay);
    const auto f2 = pole_state_terms(far, far.bound_states(), ens, lay);
    for (std::size_t c = 0; c < lay.size(); ++c)
      out[c] += side * (-3.0 * f0[c] + 4.0 * f1[c] - f2[c]) / (2.0 * kPoleStep);
  } else if (!poles_up.empty()) {
    const auto plus = pole_state_terms(up, poles_up, ens, lay);
    const auto minus = pole_state_terms(down, poles_down, ens, lay);
    for (std::size_t c = 0; c < lay.size(); ++c) out[c] += (plus[c] - minus[c]) / (2.0 * kPoleStep);
  }
  return out;
}

RateVector unpack_rates(const std::vector<double>& v, std::size_t n, std::size_t leads) {
  const StateLayout lay{n, leads};
  RateVector r;
  r.NS = v[0];
  r.US = v[1];
  r.SS = v[2];
  r.OmegaS = v[3];
  for (std::size_t i = 0; i < n; ++i) r.NS_site.push_back(v[lay.site(i)]);
  for (std::size_t a = 0; a < leads; ++a) {
    const std::size_t at = lay.lead(a);
    r.dNR.push_back(v[at]);
    r.dUR.push_back(v[at + 1]);
    r.dSR.push_back(v[at + 2]);
    r.dOmegaR.push_back(v[at + 3]);
  }
  r.Wext = v[lay.size()];
  r.HS_power = v[lay.size() + 1];
  r.HSR_power = v[lay.size() + 2];
  r.IWS = r.WS() - r.HS_power - 0.5 * r.HSR_power;
  r.IWS_explicit = -0.5 * r.HSR_power + v[lay.size() + 3];
  return r;
}

double max_difference(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

double Snapshot::dOmega_R() const {
  double s = 0.0;
  for (const auto& l : lead) s += l.Omega;
  return s;
}

double Snapshot::dN_R() const {
  double s = 0.0;
  for (const auto& l : lead) s += l.N;
  return s;
}

double RateVector::dOmegaR_total() const {
  double s = 0.0;
  for (double x : dOmegaR) s += x;
  return s;
}

Snapshot snapshot(const FrozenSystem& system, const Ensemble& ens, const QuadratureOptions& options) {
  std::size_t n_bound = 0;
  const auto v = snapshot_vector(system, ens, options, n_bound);
  return unpack_snapshot(v, system.dim(), system.leads().size(), n_bound);
}

Snapshot snapshot(const SystemModel& model, double u, const Ensemble& ens, const QuadratureOptions& options) {
  return snapshot(FrozenSystem(model, u), ens, options);
}

RateVector partitioned_rates(const SystemModel& model, double u, const Ensemble& ens,
                             const QuadratureOptions& options) {
  return unpack_rates(rate_vector(model, u, ens, options), model.dim(), model.leads().size());
}

double external_power(const SystemModel& model, double u, const Ensemble& ens, const QuadratureOptions& options) {
  return partitioned_rates(model, u, ens, options).Wext;
}

CouplingPowers coupling_powers(const SystemModel& model, double u, const Ensemble& ens,
                               const QuadratureOptions& options) {
  const RateVector r = partitioned_rates(model, u, ens, options);
  return {r.HS_power, r.HSR_power};
}

NonlocalWork nonlocal_work_rate(const SystemModel& model, double u, const Ensemble& ens,
                                const QuadratureOptions& options) {
  const RateVector r = partitioned_rates(model, u, ens, options);
  return {r.IWS, r.IWS_explicit};
}

double rate_refinement_error(const SystemModel& model, double u, const Ensemble& ens,
                             const QuadratureOptions& options) {
  QuadratureOptions fine = options;
  fine.n_theta = std::min(2 * options.n_theta, options.n_max);
  return max_difference(rate_vector(model, u, ens, options), rate_vector(model, u, ens, fine));
}

double snapshot_refinement_error(const FrozenSystem& system, const Ensemble& ens, const QuadratureOptions& options) {
  QuadratureOptions fine = options;
  fine.n_theta = std::min(2 * options.n_theta, options.n_max);
  std::size_t nb = 0;
  return max_difference(snapshot_vector(system, ens, options, nb), snapshot_vector(system, ens, fine, nb));
}

}  // namespace qsnegf
