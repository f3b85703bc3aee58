#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "qsnegf/oracle.hpp"
#include "qsnegf/protocol.hpp"
#include "qsnegf/rates.hpp"

using namespace qsnegf;

namespace {

const Ensemble kCold(0.02, 0.0);

FrozenSystem rlm(double eps, double V) {
  return FrozenSystem(ModelDefinition::resonant_level(eps, V).frozen({eps, V}), 0.0);
}

Eigen::MatrixXd random_symmetric(int d, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = g(rng);
  return a;
}

// Applies x -> fn(x) to a symmetric matrix through its own eigendecomposition.
template <class Fn>
Eigen::MatrixXd matrix_function(const Eigen::MatrixXd& m, Fn fn) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd v = es.eigenvalues();
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = fn(v(k));
  return es.eigenvectors() * v.asDiagonal() * es.eigenvectors().transpose();
}

// Tr{o_n n} + Tr{o_p (1 - n)} with o = (1 - 2 alpha) P L P + alpha {P, L}.
double assembled_alpha_entropy(const Eigen::MatrixXd& h, int n_sys, const Ensemble& ens, double alpha) {
  const int d = static_cast<int>(h.rows());
  const Eigen::MatrixXd x = (h - ens.mu() * Eigen::MatrixXd::Identity(d, d)) * ens.beta();
  const Eigen::MatrixXd n = matrix_function(x, [](double y) { return 1.0 / (1.0 + std::exp(y)); });
  const Eigen::MatrixXd lp = matrix_function(x, [](double y) { return std::log1p(std::exp(y)); });
  const Eigen::MatrixXd lh = matrix_function(x, [](double y) { return std::log1p(std::exp(-y)); });
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
  p.topLeftCorner(n_sys, n_sys).setIdentity();
  auto op = [&](const Eigen::MatrixXd& l) {
    return ((1.0 - 2.0 * alpha) * p * l * p + alpha * (p * l + l * p)).eval();
  };
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(d, d);
  return (op(lp) * n).trace() + (op(lh) * (one - n)).trace();
}

}  // namespace

TEST_CASE("two-site mirror universe") {
  Eigen::MatrixXd h(2, 2);
  h << 0.0, 1.0, 1.0, 0.0;
  const FiniteUniverse u(h, 1);
  CHECK(u.energies()(0) == doctest::Approx(-1.0));
  CHECK(u.energies()(1) == doctest::Approx(1.0));
  const FiniteThermo t = finite_thermo(u, kCold);
  CHECK(t.N_S == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(t.S < 1e-19);
  CHECK(t.Omega == doctest::Approx(t.U - 0.02 * t.S).epsilon(1e-14));
  const FiniteAlphaEntropy a = finite_alpha_entropy(u, Ensemble(0.7, 0.0), 0.5);
  CHECK(a.S_S == doctest::Approx(a.S_total / 2).epsilon(1e-13));
  CHECK(a.S_R == doctest::Approx(a.S_total / 2).epsilon(1e-13));
  CHECK(u.system_weights().sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(u.residual() < 1e-10);
}

TEST_CASE("alpha = 1/2 coincides with the projected thermodynamics") {
  std::mt19937 rng(7);
  const FiniteUniverse u(random_symmetric(12, rng), 3);
  const Ensemble ens(0.4, 0.1);
  CHECK(finite_alpha_entropy(u, ens, 0.5).S_S == doctest::Approx(finite_thermo(u, ens).S_S).epsilon(1e-12));
}

TEST_CASE("alpha-entropies of complementary subspaces add to the total") {
  std::mt19937 rng(11);
  for (int d : {3, 17, 60, 200}) {
    const FiniteUniverse u(random_symmetric(d, rng), static_cast<std::size_t>(d / 3 + 1));
    for (double beta : {0.5, 5.0, 80.0})
      for (double alpha : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        const FiniteAlphaEntropy a = finite_alpha_entropy(u, Ensemble(1.0 / beta, 0.0), alpha);
        CHECK(std::abs(a.S_S + a.S_R - a.S_total) < 1e-12 * std::max(1.0, std::abs(a.S_S) + std::abs(a.S_R)));
      }
  }
}

TEST_CASE("double sum agrees with operator assembly") {
  Eigen::MatrixXd h(3, 3);
  h << 0.3, 0.8, 0.0, 0.8, 0.0, 1.25, 0.0, 1.25, 0.0;
  const FiniteUniverse u(h, 1);
  const Ensemble ens(0.5, 0.0);
  for (double alpha : {0.0, 0.5, 1.0})
    CHECK(std::abs(finite_alpha_entropy(u, ens, alpha).S_S - assembled_alpha_entropy(h, 1, ens, alpha)) < 1e-12);
}

TEST_CASE("alpha = 1 entropy of a deep level is negative at low temperature") {
  const int d = 40;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  h(0, 0) = -3.0;
  h(0, 1) = h(1, 0) = 1.0;
  for (int i = 1; i + 1 < d; ++i) h(i, i + 1) = h(i + 1, i) = 1.25;
  const FiniteUniverse u(h, 1);
  CHECK(finite_alpha_entropy(u, Ensemble(1.0 / 400.0, 0.0), 1.0).S_S < 0.0);
}

TEST_CASE("finite chains converge to the continuum") {
  for (double eps : {1.0, 1.5, -1.0, -1.5})
    for (double V : {0.3, 0.6, 0.9, 1.2}) {
      const FrozenSystem fs = rlm(eps, V);
      const Snapshot s = snapshot(fs, kCold);
      double last = 1.0;
      for (std::size_t L : {100u, 200u, 400u, 800u}) {
        const FiniteThermo t = finite_thermo(FiniteUniverse::from_system(fs, L), kCold);
        const double err =
            std::max({std::abs(t.N_S - s.N_S), std::abs(t.S_S - s.S_S), std::abs(t.U_S - s.U_S)});
        CHECK(err <= last + 1e-9);
        last = err;
      }
      CHECK(last < 1e-3);
    }
}

TEST_CASE("finite LDOS") {
  const FiniteUniverse bare = FiniteUniverse::from_system(rlm(0.4, 0.0), 800);
  for (double e : {0.4, 0.45, 1.0})
    CHECK(finite_ldos(bare, e, 0.02) ==
          doctest::Approx(0.02 / ((e - 0.4) * (e - 0.4) + 4e-4) / std::numbers::pi).epsilon(1e-12));

  const FrozenSystem fs = rlm(0.5, 0.6);
  const FiniteUniverse u = FiniteUniverse::from_system(fs, 800);
  for (double e : {-2.0, -0.3, 0.5, 1.1, 2.3}) {
    const double continuum = fs.eval(cplx(e, -0.02)).g.trace().imag() / std::numbers::pi;
    CHECK(finite_ldos(u, e, 0.02) == doctest::Approx(continuum).epsilon(1e-4));
  }

  for (double V : {0.9, 1.2}) {
    const FiniteUniverse w = FiniteUniverse::from_system(rlm(0.0, V), 800);
    const double gamma = 2.0 * V * V / 1.25;
    CHECK(finite_ldos(w, 0.0, 0.02) == doctest::Approx(2.0 / (std::numbers::pi * gamma)).epsilon(0.03));
  }
  CHECK_THROWS_AS(finite_ldos(u, 0.0, 1e-4), std::domain_error);
  CHECK_THROWS_AS(finite_ldos(u, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("bound state appears as the top eigenvalue") {
  const FrozenSystem fs = rlm(2.0, 1.0);
  const FiniteUniverse u = FiniteUniverse::from_system(fs, 800);
  const Eigen::Index top = u.energies().size() - 1;
  const BoundState b = fs.bound_states().at(0);
  CHECK(std::abs(u.energies()(top) - b.energy) < u.level_spacing());
  CHECK(std::abs(u.system_weights()(top) - b.system_weight()) < u.level_spacing());
  CHECK(u.energies()(top) == doctest::Approx(2.602).epsilon(1e-3));
  CHECK(u.system_weights()(top) == doctest::Approx(0.545).epsilon(1e-3));
}

TEST_CASE("universe validation") {
  Eigen::MatrixXd bad(2, 2);
  bad << 0.0, 1.0, 0.5, 0.0;
  CHECK_THROWS_AS(FiniteUniverse(bad, 1), std::invalid_argument);
  CHECK_THROWS_AS(FiniteUniverse(Eigen::MatrixXd::Zero(2, 2), 3), std::invalid_argument);
  CHECK_THROWS_AS(FiniteUniverse(Eigen::MatrixXd::Zero(2001, 2001), 1), std::invalid_argument);
  CHECK_THROWS_AS(FiniteUniverse::from_system(rlm(0.0, 0.6), 0), std::invalid_argument);
  ChainReservoir flat;
  flat.spectrum = LeadSpectrum::flat;
  const FrozenSystem fs(ModelDefinition::resonant_level(0.0, 0.6, flat).frozen({0.0, 0.6}), 0.0);
  CHECK_THROWS_AS(FiniteUniverse::from_system(fs, 10), std::invalid_argument);
}
