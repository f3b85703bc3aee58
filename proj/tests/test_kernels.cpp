#include "doctest.h"

#include <cmath>

#include "qsnegf/kernels.hpp"

using namespace qsnegf;

TEST_CASE("fermi reference values") {
  CHECK(fermi(Ensemble(0.02, 0.0), 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fermi(Ensemble(0.02, 0.0), 10.0) < 1e-200);
  CHECK(fermi(Ensemble(0.02, 0.0), -10.0) == 1.0);
  const double e = 0.3 + 0.1 * std::log(3.0);
  CHECK(std::abs(fermi(Ensemble(0.1, 0.3), e) - 0.25) < 1e-15);
}

TEST_CASE("fermi is monotone and saturates") {
  const Ensemble ens(0.02, 0.0);
  double prev = 1.0;
  for (int k = -2000; k <= 2000; ++k) {
    const double f = fermi(ens, 0.005 * k);
    CHECK(f <= prev);
    CHECK(f >= 0.0);
    prev = f;
  }
}

TEST_CASE("entropy kernel reference values") {
  for (double T : {0.02, 0.3, 1.0, 7.0}) CHECK(entropy_kernel(Ensemble(T, 0.4), 0.4) == doctest::Approx(std::log(2.0)));
  CHECK(entropy_kernel(Ensemble(0.02, 0.0), 1.0) < 1e-19);
  CHECK(entropy_kernel(Ensemble(0.02, 0.0), -1.0) < 1e-19);

  const Ensemble ens(1.0, 0.0);
  const double f = fermi(ens, 1.0);
  const double naive = -f * std::log(f) - (1.0 - f) * std::log(1.0 - f);
  CHECK(std::abs(entropy_kernel(ens, 1.0) - naive) < 1e-14);
  CHECK(std::abs(entropy_kernel(ens, 1.0) - 0.582203) < 1e-6);
}

TEST_CASE("entropy kernel is particle-hole symmetric") {
  const Ensemble ens(0.07, 0.35);
  for (int k = -50; k <= 50; ++k) {
    const double e = 0.35 + 0.013 * k;
    CHECK(entropy_kernel(ens, e) == doctest::Approx(entropy_kernel(ens, 0.7 - e)).epsilon(1e-13));
  }
}

TEST_CASE("grand kernel reference values") {
  const Ensemble ens(0.02, 0.0);
  CHECK(grand_kernel(ens, 0.0) == doctest::Approx(-0.02 * std::log(2.0)));
  CHECK(std::abs(grand_kernel(ens, -2.0) + 2.0) < 1e-12);
  CHECK(std::abs(grand_kernel(ens, 2.0)) < 1e-12);
}

TEST_CASE("kernel derivatives by central differences") {
  const Ensemble ens(0.05, 0.2);
  const double h = 1e-6;
  for (int k = -100; k <= 100; ++k) {
    const double e = 0.2 + 10.0 * 0.05 * k / 100.0;
    const double domega = (grand_kernel(ens, e + h) - grand_kernel(ens, e - h)) / (2 * h);
    const double f = fermi(ens, e);
    CHECK(std::abs(domega - f) <= 1e-6 * std::max(f, 1e-3));
    const double ds = (entropy_kernel(ens, e + h) - entropy_kernel(ens, e - h)) / (2 * h);
    const double expected = ens.beta() * (e - 0.2) * fermi_derivative(ens, e);
    CHECK(std::abs(ds - expected) < 1e-6 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("omega = (e - mu) f - T s pointwise") {
  for (double T : {0.02, 0.5}) {
    const Ensemble ens(T, -0.3);
    for (int k = -300; k <= 300; ++k) {
      const double e = -0.3 + 0.01 * k;
      const double rhs = (e + 0.3) * fermi(ens, e) - T * entropy_kernel(ens, e);
      CHECK(std::abs(grand_kernel(ens, e) - rhs) < 1e-12);
    }
  }
}

TEST_CASE("kernels stay finite far in the tails") {
  const Ensemble ens(1e-3, 0.0);
  for (double e : {-1e3, -10.0, 10.0, 1e3}) {
    CHECK(std::isfinite(fermi(ens, e)));
    CHECK(std::isfinite(entropy_kernel(ens, e)));
    CHECK(std::isfinite(grand_kernel(ens, e)));
    CHECK(std::isfinite(neg_log_fermi(ens, e)));
    CHECK(std::isfinite(neg_log_fermi_complement(ens, e)));
  }
  CHECK(neg_log_fermi(ens, 1e3) == doctest::Approx(1e6));
}

TEST_CASE("ensemble validation") {
  CHECK_THROWS_AS(Ensemble(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Ensemble(-1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Ensemble(1.0, NAN), std::invalid_argument);
  CHECK(Ensemble(0.5, 0.0).beta() == 2.0);
}
