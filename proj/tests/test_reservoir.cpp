#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "qsnegf/quadrature.hpp"
#include "qsnegf/reservoir.hpp"

using namespace qsnegf;

namespace {

ChainReservoir lead(double t0 = 1.25) {
  ChainReservoir r;
  r.hopping = t0;
  return r;
}

}  // namespace

TEST_CASE("self-energy at the band centre") {
  const auto se = surface_sigma(lead(), 0.6, 0.0, 0.0);
  CHECK(std::abs(se.sigma.real()) < 1e-15);
  CHECK(se.sigma.imag() == doctest::Approx(0.288).epsilon(1e-14));
  CHECK(se.gamma() == doctest::Approx(0.576).epsilon(1e-14));
}

TEST_CASE("self-energy outside the band") {
  const auto se = surface_sigma(lead(), 1.0, 0.0, 3.0);
  CHECK(se.lambda() == doctest::Approx(0.32 * (3.0 - std::sqrt(9.0 - 6.25))).epsilon(1e-14));
  CHECK(se.lambda() == doctest::Approx(0.429340).epsilon(1e-6));
  CHECK(se.gamma() == 0.0);
  const auto below = surface_sigma(lead(), 1.0, 0.0, -3.0);
  CHECK(below.lambda() == doctest::Approx(-se.lambda()));
}

TEST_CASE("band edges: Gamma vanishes and the derivative is flagged") {
  for (double e : {-2.5, 2.5}) {
    const auto se = surface_sigma(lead(), 0.7, 0.1, e);
    CHECK(se.gamma() == 0.0);
    CHECK(se.edge_singular);
    CHECK(std::isnan(se.d_energy.real()));
    CHECK(std::abs(se.lambda()) == doctest::Approx(0.49 / 1.25));
  }
}

TEST_CASE("self-energy is continuous across the band edges") {
  const double d = 1e-10;
  for (double e : {-2.5, 2.5}) {
    const cplx in = surface_sigma(lead(), 1.0, 0.0, e - std::copysign(d, e)).sigma;
    const cplx out = surface_sigma(lead(), 1.0, 0.0, e + std::copysign(d, e)).sigma;
    CHECK(std::abs(in - out) < 1e-4);
  }
}

TEST_CASE("u-derivatives follow the factorization") {
  const double V = 0.8;
  const double dV = -0.3;
  for (double e : {-3.0, -1.0, 0.4, 2.2, 2.9}) {
    const auto se = surface_sigma(lead(), V, dV, e);
    const auto unit = unit_self_energy(lead(), e);
    CHECK(std::abs(se.d_u - 2 * V * dV * unit.value) < 1e-15);
    CHECK(std::abs(se.d_energy_u - 2 * V * dV * unit.d_energy) < 1e-14);
  }
}

TEST_CASE("amplitude scaling is exact") {
  for (double e : {-2.7, -0.3, 1.9, 4.0}) {
    const cplx a = surface_sigma(lead(), 0.9, 0.0, e).sigma;
    const cplx b = surface_sigma(lead(), 0.3, 0.0, e).sigma;
    CHECK(std::abs(a - 9.0 * b) < 1e-14);
  }
}

TEST_CASE("energy derivative matches finite differences") {
  const double h = 1e-6;
  for (double e : {-3.5, -2.0, -0.7, 0.0, 1.1, 2.3, 3.3}) {
    const auto unit = unit_self_energy(lead(), e);
    const cplx fd = (unit_self_energy(lead(), e + h).value - unit_self_energy(lead(), e - h).value) / (2 * h);
    CHECK(std::abs(unit.d_energy - fd) < 1e-7);
  }
}

TEST_CASE("complex continuation reproduces the real-axis function") {
  for (double e : {-4.0, -2.2, -0.5, 0.0, 1.7, 2.45, 3.1}) {
    const auto real_axis = unit_self_energy(lead(), e);
    const auto below = unit_self_energy(lead(), cplx(e, -1e-12));
    CHECK(std::abs(real_axis.value - below.value) < 1e-8);
    CHECK(std::abs(real_axis.d_energy - below.d_energy) < 1e-6);
  }
}

TEST_CASE("recursion oracle") {
  const auto centre = surface_sigma_recursion(lead(), 0.6, 0.0, 1e-6, 10000);
  CHECK(std::abs(centre.sigma - cplx(0.0, 0.288)) < 1e-4);
  CHECK(centre.sigma.imag() >= 0.0);
  const auto outside = surface_sigma_recursion(lead(), 1.0, 3.0, 1e-6, 10000);
  CHECK(std::abs(outside.sigma - cplx(0.4293, 0.0)) < 1e-4);
  CHECK(std::abs(surface_sigma_recursion(lead(), 0.0, 0.7, 1e-6, 10).sigma) == 0.0);
}

TEST_CASE("recursion oracle reports non-convergence") {
  CHECK_THROWS_AS(surface_sigma_recursion(lead(), 1.0, 0.3, 1e-6, 3), ConvergenceError);
  CHECK_THROWS_AS(surface_sigma_recursion(lead(), 1.0, 0.3, 0.0, 10), std::invalid_argument);
  try {
    surface_sigma_recursion(lead(), 1.0, 0.3, 1e-6, 3);
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() >= 0.0);
  }
}

TEST_CASE("closed form against recursion on a 401-point grid") {
  const ChainReservoir l = lead();
  double worst = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double e = -3.5 + 7.0 * k / 400.0;
    if (std::abs(std::abs(e) - 2.5) < 1e-3) continue;
    const cplx closed = surface_sigma(l, 0.8, 0.0, e).sigma;
    const cplx rec = surface_sigma_recursion(l, 0.8, e, 1e-6, 10000).sigma;
    worst = std::max(worst, std::abs(closed - rec));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("Kramers-Kronig: Lambda is the Hilbert transform of Gamma/2") {
  const ChainReservoir l = lead();
  const double lo = l.lower_edge();
  const double hi = l.upper_edge();
  QuadratureOptions opts;
  opts.n_theta = 800;
  const EnergyGrid grid = EnergyGrid::build({{lo, hi}}, {}, {}, opts);
  auto half_gamma = [&](double e) { return unit_self_energy(l, e).value.imag(); };

  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> pick(lo + 1e-3, hi - 1e-3);
  for (int k = 0; k < 200; ++k) {
    const double e = pick(rng);
    const double g0 = half_gamma(e);
    // Subtracted principal value: the remainder integrates analytically.
    const double regular = integrate_spectral(
        grid, [&](double x) { return (half_gamma(x) - g0) / (e - x); }, [](const BoundState&) { return 0.0; });
    const double pv = (regular + g0 * std::log((e - lo) / (hi - e))) / std::numbers::pi;
    const double lambda = unit_self_energy(l, e).value.real();
    CHECK(std::abs(pv - lambda) <= 1e-3 * std::max(std::abs(lambda), 1.0 / l.hopping));
  }
}

TEST_CASE("flat spectrum surrogate") {
  ChainReservoir l = lead(2.0);
  l.spectrum = LeadSpectrum::flat;
  const auto in = surface_sigma(l, 0.6, 0.1, 1.0);
  CHECK(in.sigma == cplx(0.0, 0.36 / 2.0));
  CHECK(in.d_energy == cplx(0.0));
  const auto out = surface_sigma(l, 0.6, 0.1, 5.0);
  CHECK(out.sigma == cplx(0.0));
}

TEST_CASE("reservoir validation") {
  ChainReservoir l;
  l.hopping = -1.0;
  CHECK_THROWS_AS(l.validate(), std::invalid_argument);
  l.hopping = 1.0;
  l.band_center = INFINITY;
  CHECK_THROWS_AS(l.validate(), std::invalid_argument);
}
