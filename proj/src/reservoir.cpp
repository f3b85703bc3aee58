#include "qsnegf/reservoir.hpp"

#include <cmath>
#include <limits>

namespace qsnegf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

UnitSelfEnergy flat_self_energy(const ChainReservoir& lead, double x) {
  UnitSelfEnergy out;
  if (std::abs(x) < 2.0 * lead.hopping) out.value = cplx(0.0, 1.0 / lead.hopping);
  return out;
}

}  // namespace

UnitSelfEnergy unit_self_energy(const ChainReservoir& lead, double e, const EdgeOffset& near) {
  const double t = lead.hopping;
  const double x = e - lead.band_center;
  if (lead.spectrum == LeadSpectrum::flat) return flat_self_energy(lead, x);

  const double scale = 1.0 / (2.0 * t * t);
  // (x - 2t)(x + 2t) keeps precision near the edges better than x^2 - 4t^2.
  double disc = (x - 2.0 * t) * (x + 2.0 * t);
  if (near.distance > 0.0 && near.edge == lead.lower_edge())
    disc = (near.distance - 4.0 * t) * near.distance;
  else if (near.distance > 0.0 && near.edge == lead.upper_edge())
    disc = near.distance * (near.distance - 4.0 * t);
  UnitSelfEnergy out;
  if (disc < 0.0) {
    const double root = std::sqrt(-disc);
    out.value = scale * cplx(x, root);
    out.d_energy = scale * cplx(1.0, -x / root);
  } else if (disc > 0.0) {
    const double root = std::sqrt(disc);
    const double sgn = x > 0.0 ? 1.0 : -1.0;
    out.value = scale * (x - sgn * root);
    out.d_energy = scale * (1.0 - std::abs(x) / root);
  } else {
    out.value = scale * x;
    out.d_energy = cplx(kNaN, kNaN);
    out.edge_singular = true;
  }
  return out;
}

UnitSelfEnergy unit_self_energy(const ChainReservoir& lead, cplx z) {
  const double t = lead.hopping;
  const cplx x = z - lead.band_center;
  if (lead.spectrum == LeadSpectrum::flat) return flat_self_energy(lead, x.real());

  const double scale = 1.0 / (2.0 * t * t);
  // Product of principal roots: cut only on [-2t, 2t].
  const cplx root = std::sqrt(x - 2.0 * t) * std::sqrt(x + 2.0 * t);
  UnitSelfEnergy out;
  out.value = scale * (x - root);
  out.d_energy = scale * (1.0 - x / root);
  return out;
}

SelfEnergyEval surface_sigma(const ChainReservoir& lead, double amplitude, double rate, double e,
                             const EdgeOffset& near) {
  const UnitSelfEnergy unit = unit_self_energy(lead, e, near);
  const double v2 = amplitude * amplitude;
  const double dv2 = 2.0 * amplitude * rate;
  SelfEnergyEval out;
  out.sigma = v2 * unit.value;
  out.d_u = dv2 * unit.value;
  out.d_energy = v2 * unit.d_energy;
  out.d_energy_u = dv2 * unit.d_energy;
  out.edge_singular = unit.edge_singular;
  return out;
}

RecursionResult surface_sigma_recursion(const ChainReservoir& lead, double amplitude, double e,
                                        double eta, int n_iter, double tolerance) {
  if (!(eta > 0.0)) throw std::invalid_argument("surface_sigma_recursion: eta must be positive");
  if (n_iter < 1) throw std::invalid_argument("surface_sigma_recursion: n_iter must be >= 1");
  RecursionResult out;
  if (amplitude == 0.0) return out;

  // Advanced: evaluate at e - i eta so that Im g >= 0.
  const cplx z(e, -eta);
  const double t = lead.hopping;
  cplx forward = t;
  cplx backward = t;
  cplx surface = lead.band_center;
  cplx bulk = lead.band_center;
  int it = 0;
  for (; it < n_iter; ++it) {
    const cplx g = 1.0 / (z - bulk);
    const cplx fgb = forward * g * backward;
    const cplx bgf = backward * g * forward;
    surface += fgb;
    bulk += fgb + bgf;
    forward = forward * g * forward;
    backward = backward * g * backward;
    if (std::abs(forward) + std::abs(backward) < tolerance) {
      ++it;
      break;
    }
  }
  const cplx g_surf = 1.0 / (z - surface);
  out.iterations = it;
  out.residual = std::abs(g_surf - 1.0 / (z - lead.band_center - t * t * g_surf));
  out.sigma = amplitude * amplitude * g_surf;
  if (std::abs(forward) + std::abs(backward) >= tolerance) {
    throw ConvergenceError("surface_sigma_recursion: decimation did not converge", out.residual);
  }
  return out;
}

}  // namespace qsnegf
