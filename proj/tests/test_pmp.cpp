#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qtoc/pmp.hpp"
#include "qtoc/xgate.hpp"

using namespace qtoc;

namespace {

PiecewiseConstant random_pulse(std::mt19937_64& rng, std::size_t n, double T, double u_max) {
  std::uniform_real_distribution<double> u(-u_max, u_max), w(0.5, 1.5);
  std::vector<double> widths(n);
  double total = 0.0;
  for (double& x : widths) total += (x = w(rng));
  PiecewiseConstant pc{{0.0}, {}};
  for (double x : widths) {
    pc.edges.push_back(pc.edges.back() + x * T / total);
    pc.values.push_back(u(rng));
  }
  pc.edges.back() = T;
  return pc;
}

void expect_gradient_matches(const CostSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ModelParams p{2.0, 0.5};
  const PiecewiseConstant pc = random_pulse(rng, 15, 6.0, p.u_max);
  const auto g = cost_gradient(pc, p, spec);
  auto f = [&](const std::vector<double>& v) {
    PiecewiseConstant q = pc;
    q.values = v;
    return spec.evaluate(total_propagator(q, p));
  };
  const auto fd = oracle::central_difference(f, pc.values, 1e-6);
  EXPECT_LT(oracle::max_rel_error(g, fd), 1e-5);
}

}  // namespace

TEST(CostGradient, StatePrepMatchesFiniteDifferences) {
  const QubitState a = state_from_bloch({0.7 * M_PI, 0.0});
  const QubitState b = state_from_bloch({0.35 * M_PI, M_PI});
  expect_gradient_matches(CostSpec::state_prep(a, b), 1);
}

TEST(CostGradient, XGateMatchesFiniteDifferences) { expect_gradient_matches(CostSpec::gate(GateKind::X), 2); }
TEST(CostGradient, YGateMatchesFiniteDifferences) { expect_gradient_matches(CostSpec::gate(GateKind::Y), 3); }
TEST(CostGradient, TransferMatchesFiniteDifferences) { expect_gradient_matches(CostSpec::gate(GateKind::PT), 4); }

TEST(TerminalAdjoint, StatePrepNormAtTargetAndOrthogonal) {
  const QubitState tgt = state_from_bloch({0.35 * M_PI, M_PI});
  const CostSpec spec = CostSpec::state_prep(QubitState::zero(), tgt);
  const std::vector<QubitState> at{tgt};
  EXPECT_NEAR(terminal_adjoints(spec, at)[0].norm(), 2.0, 1e-14);
  const QubitState orth = state_from_bloch({M_PI - 0.35 * M_PI, 0.0});
  const std::vector<QubitState> off{orth};
  EXPECT_NEAR(terminal_adjoints(spec, off)[0].norm(), 0.0, 1e-14);
}

TEST(TerminalAdjoint, WrongArityRejected) {
  const std::vector<QubitState> one{QubitState::zero()};
  EXPECT_THROW(terminal_adjoints(CostSpec::gate(GateKind::X), one), ValidationError);
}

TEST(TerminalAdjoint, MatchesWirtingerDerivative) {
  // lambda_j = 2 dC/d<psi_j| checked component-wise by perturbing the final states.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (CostKind kind : {CostKind::X, CostKind::Y, CostKind::PT}) {
    CostSpec spec;
    spec.kind = kind;
    std::vector<QubitState> fin(2);
    for (auto& s : fin) s = {complex{n(rng), n(rng)}, complex{n(rng), n(rng)}};
    auto cost = [&](const std::vector<QubitState>& f) {
      const Unitary2 u{f[0].c0, f[1].c0, f[0].c1, f[1].c1};
      return spec.evaluate(u);
    };
    const auto lam = terminal_adjoints(spec, fin);
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j)
      for (int c = 0; c < 2; ++c) {
        auto shifted = [&](complex d) {
          auto f = fin;
          (c == 0 ? f[j].c0 : f[j].c1) += d;
          return cost(f);
        };
        // dC/dx - i dC/dy = 2 dC/dz; the adjoint carries 2 dC/dz*, its conjugate.
        const double dx = (shifted({h, 0}) - shifted({-h, 0})) / (2 * h);
        const double dy = (shifted({0, h}) - shifted({0, -h})) / (2 * h);
        const complex expect{dx, dy};
        const complex got = c == 0 ? lam[j].c0 : lam[j].c1;
        EXPECT_NEAR(std::abs(got - expect), 0.0, 1e-7) << to_string(kind) << " " << j << c;
      }
  }
}

TEST(ControlHamiltonian, ConstantOnEverySegment) {
  std::mt19937_64 rng(17);
  const ModelParams p{2.0, 0.4};
  const PiecewiseConstant pc = random_pulse(rng, 6, 5.0, p.u_max);
  for (const CostSpec& spec : {CostSpec::gate(GateKind::X), CostSpec::gate(GateKind::PT),
                               CostSpec::state_prep(QubitState::zero(), QubitState::one())}) {
    const auto rep = optimality_report(pc, p, spec);
    EXPECT_LT(rep.hoc_max_dev, 1e-10);
  }
}

TEST(OmegaEff, ZeroRatioGivesBangFrequency) {
  const ModelParams p{2.0, 0.5};
  EXPECT_NEAR(omega_eff(0.0, p), 2.0 * std::sqrt(1.25), 1e-14);
}

TEST(OmegaEff, ClosedFormValue) {
  const ModelParams p{2.0, 0.5};
  const double big = 2.0 * std::sqrt(1.25);
  const double r = 0.3;
  const double expect = big / (1.0 + (2.0 / M_PI) * std::asin(4.0 * r * 0.5 / (big * big)));
  EXPECT_NEAR(omega_eff(r, p), expect, 1e-14);
}

TEST(OmegaEff, OutsideDomainThrows) {
  const ModelParams p{2.0, 0.5};
  EXPECT_THROW(omega_eff(10.0, p), DomainError);
  EXPECT_THROW(omega_eff(-10.0, p), DomainError);
}

TEST(AnalyticalSwitching, VanishesAtSegmentEdges) {
  const ModelParams p{2.0, 0.5};
  const double A = 1.3, lambda0 = 0.4, T = 7.0;
  const double w = omega_eff(lambda0 / A, p);
  std::vector<double> edges;
  for (int k = -2; k <= 2; ++k) {
    edges.push_back(0.5 * T + (k + 0.5) * M_PI / w - 1e-12);
    edges.push_back(0.5 * T + (k + 0.5) * M_PI / w + 1e-12);
  }
  for (double v : analytical_switching(A, lambda0, w, T, p, edges)) EXPECT_NEAR(v, 0.0, 1e-10);
}

TEST(Alpha, SignAndUndefinedArcs) {
  EXPECT_GT(*alpha({0.3 * M_PI, 0.5 * M_PI}), 0.0);
  EXPECT_LT(*alpha({0.7 * M_PI, 0.5 * M_PI}), 0.0);
  EXPECT_LT(*alpha({0.3 * M_PI, -0.5 * M_PI}), 0.0);
  EXPECT_NEAR(*alpha({0.5 * M_PI, 1.0}), 0.0, 1e-15);
  EXPECT_FALSE(alpha({0.3 * M_PI, 0.0}));
  EXPECT_FALSE(alpha({0.3 * M_PI, M_PI}));
  EXPECT_FALSE(alpha({0.0, 1.0}));
}

TEST(BlochVelocity, MatchesFiniteDifferenceOfDynamics) {
  const ModelParams p{2.0, 0.6};
  const BlochPoint b{0.8, 1.1};
  const double h = 1e-6;
  for (double u : {-0.6, 0.0, 0.6}) {
    const QubitState s = state_from_bloch(b);
    const BlochPoint fwd = bloch_from_state(constant_propagator(h, u, p) * s);
    // backward step: exp(+iHh)
    const BlochPoint bwd = bloch_from_state(constant_propagator(h, u, p).adjoint() * s);
    const auto [dtheta, dphi] = bloch_velocity(b, u, p);
    EXPECT_NEAR(dtheta, (fwd.theta - bwd.theta) / (2 * h), 1e-6);
    EXPECT_NEAR(dphi, (fwd.phi - bwd.phi) / (2 * h), 1e-6);
  }
  EXPECT_THROW(bloch_velocity({0.0, 0.0}, 0.1, p), DomainError);
}

TEST(OptimalityReport, SwitchingFunctionRecoversOmegaEffOfGateOptimum) {
  const GateProblem gp{GateKind::X, ModelParams{2.0, 0.5}};
  const auto r = min_gate_time(gp);
  EXPECT_TRUE(r.report.passes());
  EXPECT_NEAR(r.report.omega_eff, 2.0435, 0.005 * 2.0435);
  EXPECT_NEAR(r.report.omega_eff_zeros, r.audit_omega_eff, 1e-3 * r.audit_omega_eff);
}

TEST(OptimalityReport, RabiPulseFailsSignTest) {
  const ModelParams p{2.0, 0.5};
  const auto rep = optimality_report(Protocol{rabi_protocol(p)}, p, CostSpec::gate(GateKind::X));
  EXPECT_LT(rep.sign_fraction, 0.999);
  EXPECT_FALSE(rep.passes());
}
