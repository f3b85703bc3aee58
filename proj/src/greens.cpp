#include "qsnegf/greens.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qsnegf {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_hermitian(const SmallMatrix& m, double tol) {
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j)
      if (std::abs(m(i, j) - std::conj(m(j, i))) > tol) return false;
  return true;
}

struct Interval {
  double lower;
  double upper;
};

std::vector<Interval> merged_bands(const std::vector<ChainReservoir>& leads,
                                   const std::vector<std::size_t>& active) {
  std::vector<Interval> bands;
  for (std::size_t a : active) bands.push_back({leads[a].lower_edge(), leads[a].upper_edge()});
  std::sort(bands.begin(), bands.end(), [](const Interval& x, const Interval& y) { return x.lower < y.lower; });
  std::vector<Interval> merged;
  for (const auto& b : bands) {
    if (!merged.empty() && b.lower <= merged.back().upper)
      merged.back().upper = std::max(merged.back().upper, b.upper);
    else
      merged.push_back(b);
  }
  return merged;
}

// Unit sigma at edge + offset as fixed + moving, where moving vanishes with the
// offset and is computed from it directly when the lead owns the edge.
struct EdgeSplit {
  cplx fixed;
  cplx moving;
  cplx d_energy;
};

// Re sigma at a chain band edge. Shared by every near-edge assembly so that they all round
// the fixed part identically.
double unit_at_edge(const ChainReservoir& lead, double edge) {
  const double t = lead.hopping;
  return (1.0 / (2.0 * t * t)) * (edge - lead.band_center);
}

EdgeSplit split_unit(const ChainReservoir& lead, double edge, cplx offset) {
  const bool lower = edge == lead.lower_edge();
  if (lead.spectrum != LeadSpectrum::chain || !(lower || edge == lead.upper_edge())) {
    const UnitSelfEnergy unit = unit_self_energy(lead, edge + offset);
    return {0.0, unit.value, unit.d_energy};
  }
  const double t = lead.hopping;
  const double scale = 1.0 / (2.0 * t * t);
  const cplx root =
      lower ? std::sqrt(offset - 4.0 * t) * std::sqrt(offset) : std::sqrt(offset) * std::sqrt(offset + 4.0 * t);
  const cplx x = (edge - lead.band_center) + offset;
  return {unit_at_edge(lead, edge), scale * (offset - root), scale * (1.0 - x / root)};
}

}  // namespace

std::vector<BoundState> isolated_levels(const SmallMatrix& h) {
  std::vector<BoundState> out;
  const std::size_t n = h.dim();
  if (n == 1) {
    BoundState b;
    b.energy = h(0, 0).real();
    b.residue = SmallMatrix::identity(1);
    out.push_back(b);
    return out;
  }
  const double a = h(0, 0).real();
  const double d = h(1, 1).real();
  const cplx off = h(0, 1);
  const double mean = 0.5 * (a + d);
  const double half = 0.5 * (a - d);
  const double rad = std::sqrt(half * half + std::norm(off));
  for (double lambda : {mean - rad, mean + rad}) {
    cplx v0;
    cplx v1;
    if (std::abs(off) == 0.0) {
      const bool first = (lambda == mean - rad) == (a <= d);
      v0 = first ? 1.0 : 0.0;
      v1 = first ? 0.0 : 1.0;
    } else {
      v0 = off;
      v1 = lambda - a;
      const double norm = std::sqrt(std::norm(v0) + std::norm(v1));
      v0 /= norm;
      v1 /= norm;
    }
    BoundState b;
    b.energy = lambda;
    b.residue = SmallMatrix(2);
    b.residue(0, 0) = v0 * std::conj(v0);
    b.residue(0, 1) = v0 * std::conj(v1);
    b.residue(1, 0) = v1 * std::conj(v0);
    b.residue(1, 1) = v1 * std::conj(v1);
    out.push_back(b);
  }
  return out;
}

double BoundState::total_weight() const {
  double w = system_weight();
  for (double r : reservoir_weight) w += r;
  return w;
}

SystemModel::SystemModel(std::size_t dim, std::vector<ChainReservoir> leads, Path path)
    : dim_(dim), leads_(std::move(leads)), path_(std::move(path)) {
  if (dim_ == 0 || dim_ > kMaxDim) throw std::invalid_argument("SystemModel: dimension must be 1 or 2");
  if (leads_.size() > dim_) throw std::invalid_argument("SystemModel: at most one lead per orbital");
  std::array<bool, kMaxDim> used{};
  for (const auto& lead : leads_) {
    lead.validate();
    if (lead.site >= dim_) throw std::invalid_argument("SystemModel: lead attached to a nonexistent orbital");
    if (used[lead.site]) throw std::invalid_argument("SystemModel: two leads on the same orbital");
    used[lead.site] = true;
  }
  if (!path_) throw std::invalid_argument("SystemModel: empty parameter path");
  for (double u : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const SystemState s = path_(u);
    if (s.h.dim() != dim_ || s.dh.dim() != dim_)
      throw std::invalid_argument("SystemModel: path returns matrices of the wrong dimension");
    if (!is_hermitian(s.h, 1e-12) || !is_hermitian(s.dh, 1e-12))
      throw std::invalid_argument("SystemModel: h_S(u) is not Hermitian at u = " + std::to_string(u));
  }
}

SystemState SystemModel::state(double u) const { return path_(u); }

FrozenSystem::FrozenSystem(const SystemModel& model, double u)
    : dim_(model.dim()), leads_(model.leads()), state_(model.state(u)) {}

FrozenSystem::FrozenSystem(std::size_t dim, std::vector<ChainReservoir> leads, SystemState state)
    : dim_(dim), leads_(std::move(leads)), state_(std::move(state)) {}

std::vector<std::size_t> FrozenSystem::active_leads() const {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < leads_.size(); ++a)
    if (state_.drive[a].amplitude != 0.0) out.push_back(a);
  return out;
}

GreensEval FrozenSystem::eval(double e, const EdgeOffset& near) const {
  GreensEval ge;
  const std::size_t n = dim_;
  ge.sigma = SmallMatrix(n);
  ge.dsigma_de = SmallMatrix(n);
  ge.dsigma_du = SmallMatrix(n);
  ge.dsigma_de_du = SmallMatrix(n);
  ge.n_leads = leads_.size();
  for (std::size_t a = 0; a < leads_.size(); ++a) {
    const auto& lead = leads_[a];
    const auto& drv = state_.drive[a];
    const SelfEnergyEval se = surface_sigma(lead, drv.amplitude, drv.rate, e, near);
    if (se.edge_singular && drv.amplitude != 0.0)
      throw std::domain_error("eval_greens: energy lies exactly on a band edge");
    ge.lead[a] = se;
    const std::size_t s = lead.site;
    ge.sigma(s, s) += se.sigma;
    ge.dsigma_de(s, s) += se.d_energy;
    ge.dsigma_du(s, s) += se.d_u;
    ge.dsigma_de_du(s, s) += se.d_energy_u;
  }
  const SmallMatrix one = SmallMatrix::identity(n);
  if (near.distance > 0.0) {
    // Inside a chain band Re Sigma is linear in e, so e - h - Sigma splits into a real part
    // fixed at the edge and a diagonal part advanced by the exact distance.
    SmallMatrix fixed = one * cplx(near.edge) - state_.h;
    SmallMatrix moving(n);
    double step = near.edge < e ? near.distance : -near.distance;
    for (const auto& lead : leads_) {
      if (near.edge == lead.lower_edge()) step = near.distance;
      if (near.edge == lead.upper_edge()) step = -near.distance;
    }
    for (std::size_t i = 0; i < n; ++i) moving(i, i) = step;
    for (std::size_t a = 0; a < leads_.size(); ++a) {
      const auto& lead = leads_[a];
      const std::size_t s = lead.site;
      const double v2 = state_.drive[a].amplitude * state_.drive[a].amplitude;
      const bool owns = near.edge == lead.lower_edge() || near.edge == lead.upper_edge();
      if (lead.spectrum == LeadSpectrum::chain && (owns || lead.inside_band(e))) {
        const double k = v2 / (2.0 * lead.hopping * lead.hopping);
        fixed(s, s) -= v2 * unit_at_edge(lead, near.edge);
        moving(s, s) -= k * step + cplx(0.0, ge.lead[a].sigma.imag());
      } else {
        moving(s, s) -= ge.lead[a].sigma;
      }
    }
    if (determinant_plus_diagonal(fixed, moving) == cplx(0.0)) throw BoundStateHit(e);
    ge.g = inverse_plus_diagonal(fixed, moving);
  } else {
    const SmallMatrix d = one * cplx(e) - state_.h - ge.sigma;
    if (d.determinant() == cplx(0.0)) throw BoundStateHit(e);
    ge.g = d.inverse();
  }
  ge.dg_du = ge.g * (state_.dh + ge.dsigma_du) * ge.g;
  ge.dg_de = (ge.g * (one - ge.dsigma_de) * ge.g) * cplx(-1.0);
  ge.spectral = (ge.g - ge.g.adjoint()) * (1.0 / cplx(0.0, 2.0 * kPi));
  return ge;
}

ComplexGreens FrozenSystem::eval(cplx z) const {
  const std::size_t n = dim_;
  ComplexGreens cg;
  SmallMatrix sigma(n);
  cg.dsigma_de = SmallMatrix(n);
  cg.dsigma_du = SmallMatrix(n);
  for (std::size_t a = 0; a < leads_.size(); ++a) {
    const auto& drv = state_.drive[a];
    if (drv.amplitude == 0.0 && drv.rate == 0.0) continue;
    const UnitSelfEnergy unit = unit_self_energy(leads_[a], z);
    const std::size_t s = leads_[a].site;
    const double v2 = drv.amplitude * drv.amplitude;
    const double dv2 = 2.0 * drv.amplitude * drv.rate;
    sigma(s, s) += v2 * unit.value;
    cg.dsigma_de(s, s) += v2 * unit.d_energy;
    cg.dsigma_du(s, s) += dv2 * unit.value;
  }
  const SmallMatrix one = SmallMatrix::identity(n);
  cg.g = (one * z - state_.h - sigma).inverse();
  cg.dg_du = cg.g * (state_.dh + cg.dsigma_du) * cg.g;
  cg.dg_de = (cg.g * (one - cg.dsigma_de) * cg.g) * cplx(-1.0);
  return cg;
}

SmallMatrix FrozenSystem::edge_resolvent(double edge, cplx offset, SmallMatrix& moving, SmallMatrix& dsigma_de,
                                         SmallMatrix* dsigma_du) const {
  const std::size_t n = dim_;
  SmallMatrix fixed = SmallMatrix::identity(n) * cplx(edge) - state_.h;
  moving = SmallMatrix::identity(n) * offset;
  dsigma_de = SmallMatrix(n);
  for (std::size_t a = 0; a < leads_.size(); ++a) {
    const auto& drv = state_.drive[a];
    if (drv.amplitude == 0.0 && drv.rate == 0.0) continue;
    const std::size_t s = leads_[a].site;
    const double v2 = drv.amplitude * drv.amplitude;
    const EdgeSplit unit = split_unit(leads_[a], edge, offset);
    fixed(s, s) -= v2 * unit.fixed;
    moving(s, s) -= v2 * unit.moving;
    dsigma_de(s, s) += v2 * unit.d_energy;
    if (dsigma_du) (*dsigma_du)(s, s) += 2.0 * drv.amplitude * drv.rate * (unit.fixed + unit.moving);
  }
  return fixed;
}

ComplexGreens FrozenSystem::eval(double edge, cplx offset) const {
  ComplexGreens cg;
  cg.dsigma_du = SmallMatrix(dim_);
  SmallMatrix moving;
  const SmallMatrix fixed = edge_resolvent(edge, offset, moving, cg.dsigma_de, &cg.dsigma_du);
  const SmallMatrix one = SmallMatrix::identity(dim_);
  cg.g = inverse_plus_diagonal(fixed, moving);
  cg.dg_du = cg.g * (state_.dh + cg.dsigma_du) * cg.g;
  cg.dg_de = (cg.g * (one - cg.dsigma_de) * cg.g) * cplx(-1.0);
  return cg;
}

cplx FrozenSystem::determinant(double e) const {
  SmallMatrix d = SmallMatrix::identity(dim_) * cplx(e) - state_.h;
  for (std::size_t a = 0; a < leads_.size(); ++a) {
    const auto& drv = state_.drive[a];
    if (drv.amplitude == 0.0) continue;
    const std::size_t s = leads_[a].site;
    d(s, s) -= drv.amplitude * drv.amplitude * unit_self_energy(leads_[a], e).value;
  }
  return d.determinant();
}

std::vector<BoundState> FrozenSystem::bound_states() const {
  const auto active = active_leads();
  if (active.empty()) return isolated_levels(state_.h);

  const auto bands = merged_bands(leads_, active);
  double hop = 0.0;
  for (std::size_t a : active) hop = std::max(hop, leads_[a].hopping);
  const double base_window = 10.0 * (2.0 * hop + state_.h.max_abs());
  const double asymptotic_left = (dim_ % 2 == 0) ? 1.0 : -1.0;

  auto det = [&](double e) { return determinant(e).real(); };
  SmallMatrix scratch;
  SmallMatrix moving;
  auto det_near = [&](double edge, double offset) {
    const SmallMatrix fixed = edge_resolvent(edge, cplx(offset, 0.0), moving, scratch, nullptr);
    return determinant_plus_diagonal(fixed, moving).real();
  };
  auto chain_edge = [&](double x) {
    for (std::size_t a : active)
      if (leads_[a].spectrum == LeadSpectrum::chain && (x == leads_[a].lower_edge() || x == leads_[a].upper_edge()))
        return true;
    return false;
  };

  // Bisection on a sign change of f between lo and hi.
  auto refine = [](auto&& f, double lo, double hi, double flo) {
    for (int it = 0; it < 2200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double fm = f(mid);
      if (fm == 0.0) return mid;
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  struct Root {
    double energy;
    double edge;
    double offset;
  };

  struct Sample {
    double x;
    double edge;    // chain edge the offset refers to, or NaN
    double offset;  // x - edge, exact where the sample sits closer to the edge than x resolves
    double f;
  };

  // Sample points clustered geometrically toward the finite ends of (lo, hi). Next to a
  // chain edge the cluster is laid out and evaluated as offsets, so poles closer to the
  // edge than the spacing of doubles are still bracketed.
  auto scan = [&](double lo, double hi, bool lo_is_edge, bool hi_is_edge, std::vector<Root>& roots) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double width = hi - lo;
    const bool lo_chain = lo_is_edge && chain_edge(lo);
    const bool hi_chain = hi_is_edge && chain_edge(hi);
    auto at = [&](double x) { return Sample{x, nan, 0.0, det(x)}; };
    auto near = [&](double edge, double offset) {
      return Sample{edge + offset, edge, offset, det_near(edge, offset)};
    };
    constexpr int kUniform = 400;
    constexpr int kFirstCluster = 9;  // width / 2^9 lies below the first uniform step
    const int depth = 120;
    std::vector<Sample> pts;
    if (!lo_is_edge) pts.push_back(at(lo));
    if (lo_is_edge)
      for (int k = lo_chain ? depth : 62; k >= kFirstCluster; --k) {
        const double d = width * std::ldexp(1.0, -k);
        pts.push_back(lo_chain ? near(lo, d) : at(lo + d));
      }
    for (int k = 1; k < kUniform; ++k) pts.push_back(at(lo + width * k / kUniform));
    if (hi_is_edge)
      for (int k = kFirstCluster; k <= (hi_chain ? depth : 62); ++k) {
        const double d = width * std::ldexp(1.0, -k);
        pts.push_back(hi_chain ? near(hi, -d) : at(hi - d));
      }
    if (!hi_is_edge) pts.push_back(at(hi));
    // Band edges themselves are excluded: the pole lies strictly outside.
    std::erase_if(pts, [&](const Sample& p) {
      return std::isnan(p.edge) && ((lo_is_edge && p.x <= lo) || (hi_is_edge && p.x >= hi));
    });

    auto nearest_edge = [&](double x) {
      double edge = nan;
      if (lo_chain) edge = lo;
      if (hi_chain && (std::isnan(edge) || hi - x < x - lo)) edge = hi;
      return edge;
    };
    auto offset_from = [](const Sample& p, double edge) { return p.edge == edge ? p.offset : p.x - edge; };
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Sample& p = pts[i];
      if (p.f == 0.0) {
        const double edge = std::isnan(p.edge) ? nearest_edge(p.x) : p.edge;
        roots.push_back({p.x, edge, std::isnan(edge) ? 0.0 : offset_from(p, edge)});
        continue;
      }
      if (i + 1 >= pts.size() || pts[i + 1].f == 0.0 || (p.f > 0.0) == (pts[i + 1].f > 0.0)) continue;
      const Sample& q = pts[i + 1];
      const double edge = nearest_edge(0.5 * (p.x + q.x));
      if (std::isnan(edge)) {
        roots.push_back({refine(det, p.x, q.x, p.f), nan, 0.0});
        continue;
      }
      // Bisect in the offset from the edge so that roots next to it keep full relative precision.
      auto f = [&](double o) { return det_near(edge, o); };
      const double o0 = offset_from(p, edge);
      const double o1 = offset_from(q, edge);
      const double offset = o0 < o1 ? refine(f, o0, o1, f(o0)) : refine(f, o1, o0, f(o1));
      roots.push_back({edge + offset, edge, offset});
    }
    std::vector<std::pair<double, double>> out;
    for (const Sample& p : pts) out.emplace_back(p.x, p.f);
    return out;
  };

  std::vector<Root> roots;
  for (int attempt = 0; attempt < 2; ++attempt) {
    roots.clear();
    const double window = base_window * (attempt == 0 ? 1.0 : 10.0);
    const double left_far = bands.front().lower - window;
    const double right_far = bands.back().upper + window;
    const auto left = scan(left_far, bands.front().lower, false, true, roots);
    for (std::size_t k = 0; k + 1 < bands.size(); ++k) scan(bands[k].upper, bands[k + 1].lower, true, true, roots);
    const auto right = scan(bands.back().upper, right_far, true, false, roots);
    const bool left_ok = !left.empty() && (left.front().second > 0.0) == (asymptotic_left > 0.0);
    const bool right_ok = !right.empty() && right.back().second > 0.0;
    if (left_ok && right_ok) break;
    if (attempt == 1) throw std::runtime_error("find_bound_states: pole beyond the widened scan window");
  }

  std::sort(roots.begin(), roots.end(), [](const Root& x, const Root& y) { return x.energy < y.energy; });
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](const Root& x, const Root& y) { return std::abs(x.energy - y.energy) < 1e-12; }),
              roots.end());

  std::vector<BoundState> out;
  const SmallMatrix one = SmallMatrix::identity(dim_);
  for (const Root& r : roots) {
    SmallMatrix d;
    SmallMatrix dsigma;
    std::array<cplx, kMaxDim> lead_derivative{};
    if (std::isnan(r.edge)) {
      d = one * cplx(r.energy) - state_.h;
      dsigma = SmallMatrix(dim_);
      for (std::size_t a : active) {
        const auto unit = unit_self_energy(leads_[a], r.energy);
        const double v2 = state_.drive[a].amplitude * state_.drive[a].amplitude;
        const std::size_t s = leads_[a].site;
        d(s, s) -= v2 * unit.value;
        dsigma(s, s) += v2 * unit.d_energy;
        lead_derivative[a] = v2 * unit.d_energy;
      }
    } else {
      SmallMatrix shift;
      d = edge_resolvent(r.edge, cplx(r.offset, 0.0), shift, dsigma, nullptr);
      d = d + shift;
      for (std::size_t a : active) {
        const double v2 = state_.drive[a].amplitude * state_.drive[a].amplitude;
        lead_derivative[a] = v2 * split_unit(leads_[a], r.edge, cplx(r.offset, 0.0)).d_energy;
      }
    }
    const SmallMatrix adj = d.adjugate();
    const cplx slope = trace_product(adj, one - dsigma);
    BoundState b;
    b.energy = r.energy;
    b.edge = r.edge;
    b.offset = r.offset;
    b.residue = adj * (1.0 / slope);
    for (std::size_t a : active) {
      const std::size_t s = leads_[a].site;
      b.reservoir_weight[a] = -(lead_derivative[a] * b.residue(s, s)).real();
    }
    out.push_back(b);
  }
  return out;
}

GreensEval eval_greens(const SystemModel& sys, double u, double e) { return FrozenSystem(sys, u).eval(e); }

double system_density(const GreensEval& ge) { return ge.g.trace().imag() / kPi; }

double reservoir_density(const GreensEval& ge, const FrozenSystem& fs, std::size_t lead) {
  const std::size_t s = fs.leads()[lead].site;
  return -(ge.lead[lead].d_energy * ge.g(s, s)).imag() / kPi;
}

double ldos_system(const SystemModel& sys, double u, double e) { return system_density(eval_greens(sys, u, e)); }

double ldos_reservoir_correction(const SystemModel& sys, double u, double e, std::size_t lead) {
  if (lead >= sys.leads().size()) throw std::out_of_range("ldos_reservoir_correction: no such lead");
  const FrozenSystem fs(sys, u);
  return reservoir_density(fs.eval(e), fs, lead);
}

std::vector<BoundState> find_bound_states(const SystemModel& sys, double u) {
  return FrozenSystem(sys, u).bound_states();
}

}  // namespace qsnegf
