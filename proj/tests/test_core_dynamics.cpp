#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qtoc/dynamics.hpp"
#include "qtoc/errors.hpp"

using namespace qtoc;

namespace {

QubitState random_state(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  QubitState s{complex{n(rng), n(rng)}, complex{n(rng), n(rng)}};
  const double k = 1.0 / s.norm();
  return k * s;
}

}  // namespace

TEST(ConstantPropagator, FreeEvolutionIsDiagonalPhase) {
  const ModelParams p{2.0, 0.5};
  const double t = 0.83;
  const Unitary2 u = constant_propagator(t, 0.0, p);
  EXPECT_NEAR(std::abs(u.a - std::polar(1.0, -t)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(u.d - std::polar(1.0, t)), 0.0, 1e-15);
  EXPECT_EQ(std::abs(u.b), 0.0);
  EXPECT_EQ(std::abs(u.c), 0.0);
}

TEST(ConstantPropagator, ZeroTimeIsIdentity) {
  const ModelParams p{2.0, 1.0};
  for (double u : {-1.0, 0.0, 0.3})
    EXPECT_LT(constant_propagator(0.0, u, p).max_abs_diff(Unitary2::identity()), 1e-16);
}

TEST(ConstantPropagator, MatchesFineRk4Integration) {
  const ModelParams p{2.0, 1.0};
  const Unitary2 exact = constant_propagator(1.3, 0.37, p);
  const Unitary2 ref = oracle::rk4_unitary([](double) { return 0.37; }, 1.3, p, 20000);
  EXPECT_LT(exact.max_abs_diff(ref), 1e-8);
}

TEST(ConstantPropagator, NegativeTimeIsDomainError) {
  EXPECT_THROW(constant_propagator(-1e-3, 0.1, ModelParams{}), DomainError);
}

TEST(ConstantPropagator, UnitaryWithUnitDeterminant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(0.0, 20.0), u(-1.0, 1.0);
  const ModelParams p{2.0, 1.0};
  for (int i = 0; i < 200; ++i) {
    const Unitary2 m = constant_propagator(t(rng), u(rng), p);
    EXPECT_LT(unitarity_error(m), 1e-12);
    EXPECT_LT(std::abs(m.det() - 1.0), 1e-12);
  }
}

TEST(Propagate, SingleSegmentMatchesConstantPropagator) {
  const ModelParams p{2.0, 0.4};
  const BangSequence b{0.4, 2.7, {}, {Bang::Plus}};
  const auto tr = propagate(Protocol{b}, p, QubitState::zero(), 5);
  const QubitState ref = constant_propagator(2.7, 0.4, p) * QubitState::zero();
  EXPECT_LT(std::abs(tr.states.back().c0 - ref.c0) + std::abs(tr.states.back().c1 - ref.c1), 1e-14);
}

TEST(Propagate, SemigroupProperty) {
  const ModelParams p{2.0, 0.4};
  const Unitary2 one = total_propagator(Protocol{BangSequence{0.4, 3.0, {}, {Bang::Minus}}}, p);
  const Unitary2 two = total_propagator(Protocol{BangSequence{0.4, 3.0, {1.1}, {Bang::Minus, Bang::Minus}}}, p);
  EXPECT_LT(one.max_abs_diff(two), 1e-13);
}

TEST(Propagate, CompositionAtInteriorPoint) {
  const ModelParams p{2.0, 0.3};
  const BangSequence b{0.3, 4.0, {0.7, 1.9, 3.1}, {Bang::Plus, Bang::Minus, Bang::Zero, Bang::Plus}};
  const PiecewiseConstant pc = to_piecewise(b);
  const double s = 2.3;
  const std::vector<double> at{s, 4.0};
  const auto tr = propagate(pc, p, QubitState::zero(), at);
  // Second leg restarted from the state at s.
  PiecewiseConstant tail{{0.0, 3.1 - s, 4.0 - s}, {0.0, 0.3}};
  const std::vector<double> end{4.0 - s};
  const auto rest = propagate(tail, p, tr.states[0], end);
  EXPECT_LT(std::abs(rest.states[0].c0 - tr.states[1].c0) + std::abs(rest.states[0].c1 - tr.states[1].c1), 1e-10);
}

TEST(Propagate, NormConservedAlongTrajectory) {
  const ModelParams p{2.0, 0.2};
  const auto tr = propagate(Protocol{rabi_protocol(p)}, p, QubitState::zero(), 1001);
  for (const auto& s : tr.states) EXPECT_NEAR(s.norm(), 1.0, 1e-10);
  EXPECT_LT(unitarity_error(tr.total), 1e-12);
}

TEST(Propagate, RabiGridRefinement) {
  const ModelParams p{2.0, 0.2};
  const Protocol rabi = rabi_protocol(p);
  auto pop = [&](double ppp) {
    const Unitary2 u = total_propagator(rabi, p, ppp);
    return std::norm((u * QubitState::zero()).c1);
  };
  EXPECT_NEAR(pop(kDefaultPointsPerPi), pop(10.0 * kDefaultPointsPerPi), 1e-8);
}

TEST(Propagate, RabiMatchesRk4) {
  const ModelParams p{2.0, 0.3};
  const Protocol rabi = rabi_protocol(p);
  const Unitary2 u = total_propagator(rabi, p);
  const Unitary2 ref = oracle::rk4_unitary([&](double t) { return value(rabi, t); }, duration(rabi), p, 100000);
  EXPECT_LT(u.max_abs_diff(ref), 1e-6);
}

TEST(Propagate, SampleTimeOutsideRangeRejected) {
  const PiecewiseConstant pc{{0.0, 1.0}, {0.1}};
  const std::vector<double> bad{1.5};
  EXPECT_THROW(propagate(pc, ModelParams{}, QubitState::zero(), bad), ValidationError);
}

TEST(Bloch, NorthPole) {
  const QubitState s = state_from_bloch({0.0, 0.0});
  EXPECT_NEAR(std::abs(s.c0 - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s.c1), 0.0, 1e-15);
}

TEST(Bloch, EquatorAtPhiPi) {
  const QubitState s = state_from_bloch({M_PI / 2, M_PI});
  EXPECT_NEAR(s.c0.real(), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(s.c1.real(), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(s.c1.imag(), 0.0, 1e-15);
}

TEST(Bloch, RoundTripUpToGlobalPhase) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const QubitState s = random_state(rng);
    const QubitState back = state_from_bloch(bloch_from_state(s));
    const QubitState canon = canonical_phase(s);
    EXPECT_LT(std::abs(back.c0 - canon.c0) + std::abs(back.c1 - canon.c1), 1e-12);
    EXPECT_NEAR(std::norm(inner(back, s)), 1.0, 1e-12);
  }
}

TEST(Bloch, SouthPoleTieBreak) {
  const QubitState s{complex{0.0, 0.0}, std::polar(1.0, 1.2)};
  const auto b = bloch_from_state(s);
  EXPECT_NEAR(b.theta, M_PI, 1e-15);
  const QubitState c = canonical_phase(s);
  EXPECT_NEAR(c.c1.real(), 1.0, 1e-15);
}

TEST(Bloch, ZeroVectorIsDomainError) { EXPECT_THROW(bloch_from_state(QubitState::null()), DomainError); }

TEST(StatePrepCost, PerfectOverlapAndOrthogonality) {
  const QubitState a = state_from_bloch({0.7 * M_PI, 0.0});
  const QubitState b = state_from_bloch({0.3 * M_PI, M_PI});
  EXPECT_NEAR(state_prep_cost(Unitary2::identity(), a, a), -1.0, 1e-15);
  EXPECT_NEAR(state_prep_cost(Unitary2::identity(), a, b), 0.0, 1e-15);
}

TEST(GateCost, KnownOperators) {
  const Unitary2 x = pauli::x;
  EXPECT_NEAR(gate_cost(x, GateKind::X), -1.0, 1e-15);
  EXPECT_NEAR(gate_cost(std::polar(1.0, 0.77) * x, GateKind::X), -1.0, 1e-15);
  EXPECT_NEAR(gate_cost(x, GateKind::PT), -1.0, 1e-15);
  EXPECT_NEAR(gate_cost(x, GateKind::Y), 0.0, 1e-15);
  EXPECT_NEAR(gate_cost(Unitary2::identity(), GateKind::X), 0.0, 1e-15);
  EXPECT_NEAR(gate_cost(Unitary2::identity(), GateKind::PT), 0.0, 1e-15);
  EXPECT_NEAR(gate_cost(pauli::y, GateKind::Y), -1.0, 1e-15);
}

TEST(GateCost, BoundsOnRandomUnitaries) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> t(0.0, 10.0), u(-1.0, 1.0);
  const ModelParams p{2.0, 1.0};
  for (int i = 0; i < 200; ++i) {
    const Unitary2 m = constant_propagator(t(rng), u(rng), p) * constant_propagator(t(rng), u(rng), p);
    for (GateKind k : {GateKind::X, GateKind::Y, GateKind::PT}) {
      const double c = gate_cost(m, k);
      EXPECT_GE(c, -1.0 - 1e-12);
      EXPECT_LE(c, 0.0);
    }
  }
}

TEST(Rabi, EvenPulseWithRabiDuration) {
  const ModelParams p{2.0, 0.5};
  const Rabi r = rabi_protocol(p);
  EXPECT_NEAR(r.T, 2.0 * M_PI, 1e-15);
  const Protocol pr = r;
  EXPECT_NEAR(value(pr, 0.5 * r.T), 0.5, 1e-15);
  for (double s : {0.1, 0.9, 2.5}) EXPECT_NEAR(value(pr, 0.5 * r.T + s), value(pr, 0.5 * r.T - s), 1e-14);
}

TEST(Rabi, IncompleteWithoutRotatingWaveApproximation) {
  const ModelParams p{2.0, 0.5};
  const double gap = gate_cost(total_propagator(Protocol{rabi_protocol(p)}, p), GateKind::X) + 1.0;
  EXPECT_GT(gap, 1e-3);
}

TEST(ModelParams, RejectsNonPositive) {
  EXPECT_THROW((ModelParams{2.0, 0.0}.validate()), ValidationError);
  EXPECT_THROW((ModelParams{-1.0, 0.5}.validate()), ValidationError);
  EXPECT_THROW(gate_kind_from_string("z"), ValidationError);
}
