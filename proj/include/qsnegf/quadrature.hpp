#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "qsnegf/greens.hpp"
#include "qsnegf/kernels.hpp"
#include "qsnegf/small_matrix.hpp"

namespace qsnegf {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(std::size_t order);

/// Ordered pairwise summation; result independent of how the caller chunks work.
double pairwise_sum(std::span<const double> values);

struct QuadratureOptions {
  /// Nominal nodes per band segment. Each panel of the segment receives
  /// n_theta / 20 Gauss-Legendre nodes (at least 4).
  int n_theta = 400;
  /// Ceiling for the doubling refinement.
  int n_max = 6400;
  /// Relative change allowed between n_theta and 2 n_theta.
  double tolerance = 1e-8;
  /// Width (in theta) of the innermost panel at each band edge.
  double edge_grading = 1e-12;
};

/// A refinement point inside a band segment: panels are graded geometrically
/// toward `energy`, starting from panels of roughly `width`.
struct FocusPoint {
  double energy;
  double width;
};

struct EnergyNode {
  double energy;
  double weight;
  /// Set for band nodes; lets integrands resolve e - edge below double spacing.
  EdgeOffset near{};
};

namespace detail {
// Integrands may take the whole node or just its energy.
template <class Fn, class... Rest>
decltype(auto) at_node(Fn&& fn, const EnergyNode& node, Rest&&... rest) {
  if constexpr (std::is_invocable_v<Fn, const EnergyNode&, Rest...>)
    return fn(node, std::forward<Rest>(rest)...);
  else
    return fn(node.energy, std::forward<Rest>(rest)...);
}
}  // namespace detail

/// Open energy interval integrated with e = center - radius cos(theta).
///
/// The substitution absorbs inverse-square-root edge behaviour: the Jacobian
/// radius * sin(theta) vanishes at both ends.
struct BandSegment {
  double lower;
  double upper;
};

/// Continuum nodes over the active band segments plus the discrete pole list.
class EnergyGrid {
public:
  EnergyGrid() = default;

  static EnergyGrid build(std::vector<BandSegment> segments, const std::vector<FocusPoint>& focus,
                          std::vector<BoundState> poles, const QuadratureOptions& options);

  /// Grid for a frozen system: segments from the active leads, refinement at
  /// mu and at estimated resonance positions, poles from the bound-state search.
  static EnergyGrid build(const FrozenSystem& system, const Ensemble& ens, const QuadratureOptions& options);

  std::span<const EnergyNode> nodes() const { return nodes_; }
  std::span<const BoundState> poles() const { return poles_; }
  std::span<const BandSegment> segments() const { return segments_; }

private:
  std::vector<BandSegment> segments_;
  std::vector<EnergyNode> nodes_;
  std::vector<BoundState> poles_;
};

/// Integral of a density over the continuum plus discrete pole terms.
///
/// density(e) is the continuum integrand; pole(b) the weight a bound state
/// contributes (the coefficient of delta(e - e_b) in the same integrand).
template <class Density, class Pole>
double integrate_spectral(const EnergyGrid& grid, Density&& density, Pole&& pole) {
  const auto nodes = grid.nodes();
  std::vector<double> terms;
  terms.reserve(nodes.size() + grid.poles().size());
  for (const auto& node : nodes) terms.push_back(node.weight * detail::at_node(density, node));
  for (const auto& b : grid.poles()) terms.push_back(pole(b));
  return pairwise_sum(terms);
}

/// Vector-valued form: density(e, out) and pole(b, out) fill `width` components.
template <class Density, class Pole>
std::vector<double> integrate_spectral(const EnergyGrid& grid, std::size_t width, Density&& density, Pole&& pole) {
  const auto nodes = grid.nodes();
  const std::size_t rows = nodes.size() + grid.poles().size();
  std::vector<double> table(rows * width, 0.0);
  std::vector<double> scratch(width);
  std::size_t r = 0;
  for (const auto& node : nodes) {
    std::fill(scratch.begin(), scratch.end(), 0.0);
    detail::at_node(density, node, std::span<double>(scratch));
    for (std::size_t k = 0; k < width; ++k) table[k * rows + r] = node.weight * scratch[k];
    ++r;
  }
  for (const auto& b : grid.poles()) {
    std::fill(scratch.begin(), scratch.end(), 0.0);
    pole(b, std::span<double>(scratch));
    for (std::size_t k = 0; k < width; ++k) table[k * rows + r] = scratch[k];
    ++r;
  }
  std::vector<double> out(width);
  for (std::size_t k = 0; k < width; ++k)
    out[k] = pairwise_sum(std::span<const double>(table.data() + k * rows, rows));
  return out;
}

/// Double spectral integral  sum over (x, x') of w w' Tr{M(x) M(x')} K(e, e').
///
/// x runs over the continuum nodes and the poles (pole weight 1, matrix =
/// the system-block residue), so all four continuum/pole combinations are
/// included. spectral(e) returns the continuum matrix density; pole_matrix(b)
/// the residue block.
template <class Spectral, class PoleMatrix, class Kernel2>
double integrate_double(const EnergyGrid& grid, Spectral&& spectral, PoleMatrix&& pole_matrix, Kernel2&& kernel) {
  struct Point {
    double energy;
    double weight;
    SmallMatrix m;
  };
  std::vector<Point> pts;
  for (const auto& node : grid.nodes()) pts.push_back({node.energy, node.weight, detail::at_node(spectral, node)});
  for (const auto& b : grid.poles()) pts.push_back({b.energy, 1.0, pole_matrix(b)});
  std::vector<double> row(pts.size());
  std::vector<double> rows(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j)
      row[j] = pts[j].weight * trace_product(pts[i].m, pts[j].m).real() * kernel(pts[i].energy, pts[j].energy);
    rows[i] = pts[i].weight * pairwise_sum(row);
  }
  return pairwise_sum(rows);
}

/// Same double integral for a separable kernel K(e, e') = sum_k left_k(e) right_k(e').
///
/// Reduces to Tr{M_left,k M_right,k} with single spectral integrals M.
template <class Spectral, class PoleMatrix, class Left, class Right>
double integrate_double_separable(const EnergyGrid& grid, Spectral&& spectral, PoleMatrix&& pole_matrix,
                                  std::span<const std::pair<Left, Right>> terms) {
  std::vector<SmallMatrix> node_m;
  for (const auto& node : grid.nodes()) node_m.push_back(detail::at_node(spectral, node));
  std::vector<SmallMatrix> pole_m;
  for (const auto& b : grid.poles()) pole_m.push_back(pole_matrix(b));
  const std::size_t n = node_m.empty() ? (pole_m.empty() ? 1 : pole_m.front().dim()) : node_m.front().dim();
  auto moment = [&](const auto& weight_fn) {
    SmallMatrix acc(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> re;
        std::vector<double> im;
        std::size_t r = 0;
        for (const auto& node : grid.nodes()) {
          const cplx v = node.weight * weight_fn(node.energy) * node_m[r++](i, j);
          re.push_back(v.real());
          im.push_back(v.imag());
        }
        r = 0;
        for (const auto& b : grid.poles()) {
          const cplx v = weight_fn(b.energy) * pole_m[r++](i, j);
          re.push_back(v.real());
          im.push_back(v.imag());
        }
        acc(i, j) = cplx(pairwise_sum(re), pairwise_sum(im));
      }
    return acc;
  };
  std::vector<double> parts;
  for (const auto& [left, right] : terms) parts.push_back(trace_product(moment(left), moment(right)).real());
  return pairwise_sum(parts);
}

/// Value plus the |I(2 n_theta) - I(n_theta)| error estimate.
struct SpectralIntegral {
  double value = 0.0;
  double error = 0.0;
  int n_theta = 0;
  bool converged = false;
};

/// Doubles n_theta from options.n_theta until the relative change falls below
/// options.tolerance or n_max is reached; reports the achieved estimate.
template <class Evaluate>
SpectralIntegral integrate_refined(const QuadratureOptions& options, Evaluate&& evaluate_at) {
  SpectralIntegral out;
  QuadratureOptions o = options;
  double previous = evaluate_at(o);
  for (;;) {
    const int next = o.n_theta * 2;
    if (next > o.n_max) {
      out.value = previous;
      out.n_theta = o.n_theta;
      out.converged = false;
      return out;
    }
    o.n_theta = next;
    const double current = evaluate_at(o);
    out.value = current;
    out.error = std::abs(current - previous);
    out.n_theta = o.n_theta;
    if (out.error <= o.tolerance * std::max(1.0, std::abs(current))) {
      out.converged = true;
      return out;
    }
    previous = current;
  }
}

}  // namespace qsnegf
