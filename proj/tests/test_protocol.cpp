#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qtoc/protocol.hpp"

using namespace qtoc;

TEST(BangSequence, RightContinuousValues) {
  const Protocol b = BangSequence{0.5, 3.0, {1.0, 2.0}, {Bang::Plus, Bang::Zero, Bang::Minus}};
  EXPECT_EQ(value(b, 0.0), 0.5);
  EXPECT_EQ(value(b, 0.999), 0.5);
  EXPECT_EQ(value(b, 1.0), 0.0);
  EXPECT_EQ(value(b, 2.0), -0.5);
  EXPECT_EQ(value(b, 3.0), -0.5);
}

TEST(BangSequence, RejectsMalformedInput) {
  EXPECT_THROW(validate(BangSequence{0.5, 3.0, {2.0, 1.0}, {Bang::Plus, Bang::Minus, Bang::Plus}}), ValidationError);
  EXPECT_THROW(validate(BangSequence{0.5, 3.0, {1.0}, {Bang::Plus}}), ValidationError);
  EXPECT_THROW(validate(BangSequence{0.5, 3.0, {3.5}, {Bang::Plus, Bang::Minus}}), ValidationError);
  EXPECT_THROW(validate(BangSequence{0.0, 3.0, {}, {Bang::Plus}}), ValidationError);
  EXPECT_THROW(validate(BangSequence{0.5, -1.0, {}, {Bang::Plus}}), ValidationError);
}

TEST(BangSequence, PiecewiseFormIsExact) {
  const BangSequence b{0.3, 2.0, {0.5, 1.25}, {Bang::Minus, Bang::Plus, Bang::Minus}};
  const PiecewiseConstant pc = to_piecewise(Protocol{b});
  ASSERT_EQ(pc.size(), 3u);
  EXPECT_EQ(pc.edges, (std::vector<double>{0.0, 0.5, 1.25, 2.0}));
  EXPECT_EQ(pc.values, (std::vector<double>{-0.3, 0.3, -0.3}));
}

TEST(OneParamBB, EvenSwitchTimesMirrorAboutMidpoint) {
  const OneParamBB o{0.5, 5.3, 2.04, 1, Parity::Even};
  const auto t = one_param_switch_times(o);
  ASSERT_EQ(t.size() % 2, 0u);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(t[i] + t[t.size() - 1 - i], o.T, 1e-12);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_NEAR(t[i] - t[i - 1], M_PI / o.omega_eff, 1e-12);
}

TEST(OneParamBB, OddParityHasSwitchAtMidpoint) {
  const OneParamBB o{0.5, 5.3, 2.04, 1, Parity::Odd};
  const auto t = one_param_switch_times(o);
  ASSERT_EQ(t.size() % 2, 1u);
  EXPECT_NEAR(t[t.size() / 2], 2.65, 1e-15);
}

TEST(OneParamBB, BangSequenceAgreesWithSignOfCosine) {
  std::mt19937_64 rng(2);
  for (Parity par : {Parity::Even, Parity::Odd})
    for (int sign : {1, -1}) {
      const OneParamBB o{0.4, 7.1, 1.97, sign, par};
      const Protocol direct = o;
      const Protocol bang = to_bang_sequence(o);
      std::uniform_real_distribution<double> t(0.0, o.T);
      for (int i = 0; i < 200; ++i) {
        const double s = t(rng);
        EXPECT_EQ(value(direct, s), value(bang, s)) << s;
      }
    }
}

TEST(Tanh, FullTimesAreMirrored) {
  const Tanh h{0.2, 10.0, 4.0, {4.0, 1.0, 2.5}};
  const auto all = h.full_times();
  ASSERT_EQ(all.size(), 6u);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_DOUBLE_EQ(all[i] + all[5 - i], 10.0);
}

TEST(Tanh, SteepLimitIsBangBang) {
  const Tanh h{0.3, 8.0, 1e6, {1.5, 3.2}};
  const auto sw = h.full_times();
  const Protocol bang = BangSequence{0.3, 8.0, sw, {Bang::Minus, Bang::Plus, Bang::Minus, Bang::Plus, Bang::Minus}};
  const Protocol smooth = h;
  for (int i = 0; i <= 400; ++i) {
    const double t = 8.0 * i / 400.0;
    bool near_switch = false;
    for (double s : sw) near_switch |= std::abs(t - s) < 1e-4;
    if (!near_switch) {
      EXPECT_NEAR(value(smooth, t), value(bang, t), 1e-12) << t;
    }
  }
}

TEST(Tanh, BoundedAndEven) {
  const Tanh h{0.2, 14.0, 4.0, {1.0, 2.2, 3.9, 5.5}};
  const Protocol pr = h;
  for (int i = 0; i <= 1000; ++i) {
    const double t = 14.0 * i / 1000.0;
    EXPECT_LE(std::abs(value(pr, t)), 0.2 * (1.0 + 1e-12));
    EXPECT_NEAR(value(pr, t), value(pr, 14.0 - t), 1e-12);
  }
}

TEST(Tanh, RejectsTimesOutsideDuration) {
  EXPECT_THROW(validate(Tanh{0.2, 5.0, 4.0, {6.0}}), ValidationError);
  EXPECT_THROW(validate(Tanh{0.2, 5.0, 0.0, {1.0}}), ValidationError);
}

TEST(ThirdHarmonic, MixingRatioRange) {
  EXPECT_NO_THROW(validate(ThirdHarmonic{0.2, 10.0, 2.0, kThirdHarmonicRMin}));
  EXPECT_NO_THROW(validate(ThirdHarmonic{0.2, 10.0, 2.0, kThirdHarmonicRMax}));
  EXPECT_THROW(validate(ThirdHarmonic{0.2, 10.0, 2.0, -0.13}), ValidationError);
  EXPECT_THROW(validate(ThirdHarmonic{0.2, 10.0, 2.0, 1.01}), ValidationError);
}

TEST(ThirdHarmonic, PeakAtMidpointAndBounded) {
  for (double R : {-0.125, 0.0, 0.4, 1.0}) {
    const Protocol pr = ThirdHarmonic{0.3, 9.0, 2.1, R};
    EXPECT_NEAR(value(pr, 4.5), 0.3, 1e-15);
    for (int i = 0; i <= 2000; ++i) EXPECT_LE(std::abs(value(pr, 9.0 * i / 2000.0)), 0.3 * (1.0 + 1e-12));
  }
}

TEST(Sampled, RejectsOverAmplitude) {
  EXPECT_THROW(validate(Sampled{0.5, 1.0, {0.1, 0.6}}), ValidationError);
  EXPECT_THROW(validate(Sampled{0.5, 1.0, {}}), ValidationError);
}

TEST(SampleUniform, MidpointValues) {
  const Protocol rabi = Rabi{0.5, 2.0 * M_PI, 2.0};
  const Sampled s = sample_uniform(rabi, 100);
  ASSERT_EQ(s.values.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) {
    const double t = (i + 0.5) * s.dt();
    EXPECT_DOUBLE_EQ(s.values[i], 0.5 * std::cos(2.0 * (t - M_PI)));
  }
}

TEST(Reduction, GridDensityScalesWithDuration) {
  EXPECT_EQ(reduction_points(M_PI), 2000u);
  EXPECT_EQ(reduction_points(10.0 * M_PI), 20000u);
  const PiecewiseConstant pc = to_piecewise(Protocol{Rabi{0.5, 2.0 * M_PI, 2.0}});
  EXPECT_EQ(pc.size(), 4000u);
  EXPECT_NEAR(pc.duration(), 2.0 * M_PI, 1e-15);
}

TEST(Protocol, VariantNames) {
  EXPECT_EQ(variant_name(Protocol{Rabi{}}), "rabi");
  EXPECT_EQ(variant_name(Protocol{Tanh{}}), "tanh");
  EXPECT_EQ(variant_name(Protocol{ThirdHarmonic{}}), "third_harmonic");
}
