#include "doctest.h"

#include <cmath>
#include <numbers>

#include "qsnegf/alpha_partition.hpp"

using namespace qsnegf;

namespace {

const Ensemble kCold(0.02, 0.0);

ProtocolSegment seg(std::map<std::string, Ramp> ramps) {
  ProtocolSegment s;
  s.ramps = std::move(ramps);
  s.steps = 8;
  return s;
}

struct TwoPaths {
  ScenarioResult a;
  ScenarioResult b;
};

const TwoPaths& protocol_two() {
  static const TwoPaths runs = [] {
    const ModelDefinition m = ModelDefinition::resonant_level(0.0, 0.6);
    ProtocolOptions o;
    o.step_snapshots = false;
    return TwoPaths{
        run_protocol(m, {{seg({{"eps_s", {0.0, 1.0}}}), seg({{"V", {0.6, 0.4}}})}}, kCold, o),
        run_protocol(m, {{seg({{"V", {0.6, 0.4}}}), seg({{"eps_s", {0.0, 1.0}}})}}, kCold, o),
    };
  }();
  return runs;
}

FrozenSystem rlm(double eps, double V) {
  return FrozenSystem(ModelDefinition::resonant_level(eps, V).frozen({eps, V}), 0.0);
}

}  // namespace

TEST_CASE("alpha = 1/2 reproduces the Hilbert-space partition") {
  for (double eps : {-1.0, 0.0, 0.7})
    for (double V : {0.6, 1.0}) {
      const FrozenSystem fs = rlm(eps, V);
      const Snapshot s = snapshot(fs, kCold);
      CHECK(alpha_internal_energy(s, 0.5) == doctest::Approx(s.U_S).epsilon(1e-8));
      CHECK(alpha_entropy(fs, kCold, 0.5) == doctest::Approx(s.S_S).epsilon(1e-12));
      CHECK(s.S_S >= 0.0);
      CHECK(s.S_S <= std::log(2.0));
    }
}

TEST_CASE("decoupled level: alpha-U is f eps_s for every alpha") {
  const Ensemble ens(0.3, 0.0);
  const FrozenSystem fs = rlm(0.4, 0.0);
  for (double a : {0.0, 0.3, 1.0})
    CHECK(alpha_internal_energy(fs, ens, a) == doctest::Approx(0.4 * fermi(ens, 0.4)).epsilon(1e-14));
}

TEST_CASE("alpha-U at 1 and 0 differ by the coupling energy") {
  const Snapshot s = snapshot(rlm(0.3, 0.8), kCold);
  CHECK(alpha_internal_energy(s, 1.0) - alpha_internal_energy(s, 0.0) == doctest::Approx(s.H_SR).epsilon(1e-14));
}

TEST_CASE("alpha quantities are affine in alpha") {
  const FrozenSystem fs = rlm(-0.4, 0.9);
  const double s0 = alpha_entropy(fs, kCold, 0.0);
  const double sh = alpha_entropy(fs, kCold, 0.5);
  const double s1 = alpha_entropy(fs, kCold, 1.0);
  CHECK(std::abs(sh - 0.5 * (s0 + s1)) < 1e-10);
  const TwoPaths& p = protocol_two();
  const double w0 = alpha_work(p.a, 0.0);
  const double wh = alpha_work(p.a, 0.5);
  const double w1 = alpha_work(p.a, 1.0);
  CHECK(std::abs(wh - 0.5 * (w0 + w1)) < 1e-10);
}

TEST_CASE("alpha = 1 work is the external work and path independent") {
  const TwoPaths& p = protocol_two();
  CHECK(alpha_work(p.a, 1.0) == doctest::Approx(p.a.W_ext()).epsilon(1e-8));
  CHECK(std::abs(alpha_work(p.a, 1.0) - alpha_work(p.b, 1.0)) < 1e-6);
  CHECK(std::abs(alpha_work(p.a, 0.0) - alpha_work(p.b, 0.0)) > 1e-3);
}

TEST_CASE("alpha work does not depend on alpha when V is fixed") {
  const ModelDefinition m = ModelDefinition::resonant_level(1.0, 0.6);
  ProtocolOptions o;
  o.step_snapshots = false;
  const ScenarioResult r = run_protocol(m, {{seg({{"eps_s", {1.0, 1.5}}})}}, kCold, o);
  CHECK(alpha_work(r, 0.0) == alpha_work(r, 1.0));
}

TEST_CASE("entropy from the thermodynamic identity") {
  const TwoPaths& p = protocol_two();
  const double dS = p.a.final.S_S - p.a.initial.S_S;
  CHECK(dS == doctest::Approx(-0.068).epsilon(0.005 / 0.068));
  const double eog_a = entropy_eog(p.a, kCold, 1.0);
  const double eog_b = entropy_eog(p.b, kCold, 1.0);
  CHECK(eog_a == doctest::Approx(5.57).epsilon(0.05 / 5.57));
  CHECK(std::abs(eog_a - eog_b) < 1e-4);
  CHECK(std::abs(eog_a / dS) == doctest::Approx(80.9).epsilon(3.0 / 80.9));
  CHECK(std::abs(entropy_eog(p.a, kCold, 0.5) - dS) > 1e-3);
  CHECK(std::abs(entropy_eog(p.b, kCold, 0.5) - dS) > 1e-3);
}

TEST_CASE("coherence term is positive and grows like beta") {
  for (double eps : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    const FrozenSystem fs = rlm(eps, 1.0);
    const double c25 = alpha_entropy_terms(fs, Ensemble(1.0 / 25.0, 0.0)).coherence;
    const double c50 = alpha_entropy_terms(fs, Ensemble(1.0 / 50.0, 0.0)).coherence;
    CHECK(c25 > 0.0);
    CHECK(c50 / c25 == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("alpha = 1 entropy turns negative at low temperature") {
  CHECK(alpha_entropy(rlm(0.0, 0.6), Ensemble(1.0 / 200.0, 0.0), 1.0) < 0.0);
}

TEST_CASE("alpha sweep bookkeeping") {
  const TwoPaths& p = protocol_two();
  const AlphaSweep sw = alpha_sweep({&p.a, &p.b}, kCold, alpha_grid(0.0, 1.0, 0.25));
  REQUIRE(sw.points.size() == 5);
  CHECK(sw.points[2].alpha == 0.5);
  CHECK(sw.points[2].delta_alpha_S == doctest::Approx(p.a.final.S_S - p.a.initial.S_S).epsilon(1e-12));
  CHECK(sw.points[4].alpha_W.size() == 2);
  CHECK(sw.coherence_initial > 0.0);
  CHECK_THROWS_AS(alpha_sweep({}, kCold, {0.5}), std::invalid_argument);
}

TEST_CASE("alpha grid") {
  const auto g = alpha_grid(0.0, 1.0, 0.05);
  CHECK(g.size() == 21);
  CHECK(g.back() == doctest::Approx(1.0));
  CHECK(alpha_grid(0.2, 0.2, 0.1).size() == 1);
  CHECK_THROWS_AS(alpha_grid(0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(alpha_grid(1.0, 0.0, 0.1), std::invalid_argument);
}
