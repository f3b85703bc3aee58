#include "qsnegf/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace qsnegf {

namespace {

constexpr double kPi = std::numbers::pi;

GaussRule compute_gauss_legendre(std::size_t n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

double pairwise_range(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_range(x, h) + pairwise_range(x + h, n - h);
}

// Node at angle theta with its exact distance to the nearer edge. The rounded
// energy is kept strictly inside the segment.
EnergyNode band_node(const BandSegment& seg, double theta, double weight) {
  const double r = 0.5 * (seg.upper - seg.lower);
  EnergyNode node{0.0, weight, {}};
  if (theta < 0.5 * kPi) {
    const double s = std::sin(0.5 * theta);
    node.near = {seg.lower, 2.0 * r * s * s};
    node.energy = std::max(seg.lower + node.near.distance, std::nextafter(seg.lower, seg.upper));
  } else {
    const double c = std::cos(0.5 * theta);
    node.near = {seg.upper, 2.0 * r * c * c};
    node.energy = std::min(seg.upper - node.near.distance, std::nextafter(seg.upper, seg.lower));
  }
  return node;
}

void add_graded(std::vector<double>& breaks, double centre, double first, double reach) {
  for (double d = first; d < reach; d *= 2.0) {
    breaks.push_back(centre - d);
    breaks.push_back(centre + d);
  }
}

std::vector<double> theta_breaks(const BandSegment& seg, const std::vector<FocusPoint>& focus,
                                 const QuadratureOptions& options) {
  constexpr double base = kPi / 8.0;
  std::vector<double> breaks;
  for (int k = 0; k <= 8; ++k) breaks.push_back(base * k);
  for (double d = options.edge_grading; d < base; d *= 2.0) {
    breaks.push_back(d);
    breaks.push_back(kPi - d);
  }
  const double c = 0.5 * (seg.lower + seg.upper);
  const double r = 0.5 * (seg.upper - seg.lower);
  for (const auto& fp : focus) {
    if (!(fp.energy > seg.lower && fp.energy < seg.upper)) continue;
    const double theta = std::acos(std::clamp((c - fp.energy) / r, -1.0, 1.0));
    const double sine = std::sin(theta);
    double width = std::sqrt(2.0 * fp.width / r);
    if (sine > 0.0) width = std::min(width, fp.width / (r * sine));
    breaks.push_back(theta);
    add_graded(breaks, theta, width, base);
  }
  std::vector<double> kept;
  for (double b : breaks)
    if (b >= 0.0 && b <= kPi) kept.push_back(b);
  std::sort(kept.begin(), kept.end());
  std::vector<double> out;
  for (double b : kept)
    if (out.empty() || b - out.back() > 1e-15) out.push_back(b);
  out.front() = 0.0;
  out.back() = kPi;
  return out;
}

}  // namespace

GaussRule gauss_legendre(std::size_t order) {
  if (order == 0) throw std::invalid_argument("gauss_legendre: order must be positive");
  static std::mutex mutex;
  static std::map<std::size_t, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_gauss_legendre(order)).first;
  return it->second;
}

double pairwise_sum(std::span<const double> values) { return pairwise_range(values.data(), values.size()); }

EnergyGrid EnergyGrid::build(std::vector<BandSegment> segments, const std::vector<FocusPoint>& focus,
                             std::vector<BoundState> poles, const QuadratureOptions& options) {
  if (options.n_theta < 1 || options.n_max < options.n_theta)
    throw std::invalid_argument("EnergyGrid: need 1 <= n_theta <= n_max");
  EnergyGrid grid;
  const std::size_t m = static_cast<std::size_t>(std::max(4, options.n_theta / 20));
  const GaussRule rule = gauss_legendre(m);
  for (const auto& seg : segments) {
    if (!(seg.upper > seg.lower)) throw std::invalid_argument("EnergyGrid: empty band segment");
    const double r = 0.5 * (seg.upper - seg.lower);
    const auto breaks = theta_breaks(seg, focus, options);
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
      const double mid = 0.5 * (breaks[p] + breaks[p + 1]);
      const double half = 0.5 * (breaks[p + 1] - breaks[p]);
      for (std::size_t k = 0; k < m; ++k) {
        const double theta = mid + half * rule.nodes[k];
        const double w = r * std::sin(theta) * half * rule.weights[k];
        if (w > 0.0) grid.nodes_.push_back(band_node(seg, theta, w));
      }
    }
  }
  grid.segments_ = std::move(segments);
  grid.poles_ = std::move(poles);
  return grid;
}

EnergyGrid EnergyGrid::build(const FrozenSystem& system, const Ensemble& ens, const QuadratureOptions& options) {
  const auto active = system.active_leads();
  std::vector<BandSegment> bands;
  for (std::size_t a : active) bands.push_back({system.leads()[a].lower_edge(), system.leads()[a].upper_edge()});
  std::sort(bands.begin(), bands.end(), [](const BandSegment& x, const BandSegment& y) { return x.lower < y.lower; });
  std::vector<BandSegment> merged;
  for (const auto& b : bands) {
    if (!merged.empty() && b.lower <= merged.back().upper)
      merged.back().upper = std::max(merged.back().upper, b.upper);
    else
      merged.push_back(b);
  }

  std::vector<FocusPoint> focus;
  focus.push_back({ens.mu(), ens.temperature()});

  // Resonances: eigenvalues of h + Re Sigma(e), iterated to a fixed point.
  const auto& st = system.state();
  const std::size_t n = system.dim();
  for (std::size_t k = 0; k < n && !active.empty(); ++k) {
    double e = 0.0;
    SmallMatrix heff = st.h;
    {
      const auto levels = isolated_levels(st.h);
      e = levels[k].energy;
    }
    double width = 0.0;
    for (int it = 0; it < 8; ++it) {
      heff = st.h;
      SmallMatrix broad(n);
      for (std::size_t a : active) {
        const auto& lead = system.leads()[a];
        const double v2 = st.drive[a].amplitude * st.drive[a].amplitude;
        const cplx s = v2 * unit_self_energy(lead, e).value;
        heff(lead.site, lead.site) += s.real();
        broad(lead.site, lead.site) += s.imag();
      }
      const auto levels = isolated_levels(heff);
      e = levels[k].energy;
      width = trace_product(levels[k].residue, broad).real();
    }
    focus.push_back({e, std::max(width, 1e-6)});
  }

  return build(std::move(merged), focus, system.bound_states(), options);
}

}  // namespace qsnegf
