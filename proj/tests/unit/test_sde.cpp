#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "lmid/errors.hpp"
#include "lmid/schedule.hpp"
#include "lmid/score_model.hpp"
#include "lmid/sde.hpp"
#include "lmid/verify.hpp"
#include "test_support.hpp"

using namespace lmid;
using lmid::testing::random_image;

namespace {

class ZeroScore : public ScoreFunction {
 public:
  explicit ZeroScore(int ch = 0) : ch_(ch) {}
  int cond_channels() const override { return ch_; }
  ScoreField score(const Image& x, std::span<const Image>, double) const override {
    return ScoreField(x.width(), x.height(), 0.0f);
  }

 private:
  int ch_;
};

// Returns a fixed field, ignoring its inputs.
class FixedScore : public ScoreFunction {
 public:
  explicit FixedScore(ScoreField f) : f_(std::move(f)) {}
  int cond_channels() const override { return 0; }
  ScoreField score(const Image&, std::span<const Image>, double) const override { return f_; }

 private:
  ScoreField f_;
};

}  // namespace

TEST(Schedule, Endpoints) {
  const NoiseSchedule s;
  EXPECT_DOUBLE_EQ(s.sigma(0.0), 0.01);
  EXPECT_DOUBLE_EQ(s.sigma(1.0), 1.0);
  EXPECT_NEAR(s.sigma(0.5), 0.1, 1e-15);
}

TEST(Schedule, RateClosedForm) {
  const NoiseSchedule s;
  for (int k = 0; k <= 20; ++k) {
    const double t = k / 20.0;
    EXPECT_NEAR(s.dsigma2_dt(t) / (s.sigma(t) * s.sigma(t)), 2.0 * std::log(100.0), 1e-12);
    // central difference of sigma^2
    const double h = 1e-6;
    const double lo = std::max(0.0, t - h), hi = std::min(1.0, t + h);
    const double fd = (std::pow(s.sigma(hi), 2) - std::pow(s.sigma(lo), 2)) / (hi - lo);
    EXPECT_NEAR(fd, s.dsigma2_dt(t), 1e-5 * s.dsigma2_dt(t));  // one-sided at the ends
  }
  for (int k = 0; k < 10; ++k) EXPECT_LT(s.sigma(k / 10.0), s.sigma((k + 1) / 10.0));
}

TEST(Schedule, Errors) {
  const NoiseSchedule s;
  EXPECT_THROW(s.sigma(-0.01), InvalidArgument);
  EXPECT_THROW(s.sigma(1.01), InvalidArgument);
  EXPECT_THROW(s.dsigma2_dt(2.0), InvalidArgument);
  EXPECT_THROW(NoiseSchedule(0.0, 1.0), InvalidArgument);
  EXPECT_THROW(NoiseSchedule(1.0, 0.5), InvalidArgument);
}

TEST(Perturb, SmallNoiseAtZero) {
  const Image x0 = random_image(32, 32, 1);
  Rng rng(7);
  const Image xt = perturb(x0, 0.0, NoiseSchedule{}, rng);
  for (std::size_t i = 0; i < x0.size(); ++i) EXPECT_LE(std::abs(xt[i] - x0[i]), 0.05);
}

TEST(Perturb, UnitStdAtOne) {
  const Image x0(1000, 1000, 0.5f);
  Rng rng(8);
  const Image xt = perturb(x0, 1.0, NoiseSchedule{}, rng);
  double s = 0, ss = 0;
  for (std::size_t i = 0; i < xt.size(); ++i) {
    const double d = static_cast<double>(xt[i]) - 0.5;
    s += d;
    ss += d * d;
  }
  const double n = static_cast<double>(xt.size());
  const double sd = std::sqrt(ss / n - (s / n) * (s / n));
  EXPECT_NEAR(sd, 1.0, 0.01);
}

TEST(Perturb, DeterministicBySeed) {
  const Image x0 = random_image(16, 16, 2);
  Rng a(9), b(9);
  EXPECT_EQ(perturb(x0, 0.7, NoiseSchedule{}, a), perturb(x0, 0.7, NoiseSchedule{}, b));
}

TEST(DsmTarget, ZeroAndLinear) {
  const NoiseSchedule s;
  const Image x0 = random_image(8, 8, 3);
  EXPECT_EQ(dsm_target(x0, x0, 0.4, s), Image(8, 8, 0.0f));
  const double sig2 = s.sigma(0.5) * s.sigma(0.5);
  Image xt = x0;
  const double c = 2.5;
  for (auto& v : xt.data()) v = static_cast<float>(v + sig2 * c);
  const ScoreField f = dsm_target(x0, xt, 0.5, s);
  for (float v : f.data()) EXPECT_NEAR(v, -c, 1e-4);
}

TEST(DsmTarget, FiniteDifferenceOfKernelLogDensity) {
  const NoiseSchedule s;
  const Image x0 = random_image(6, 6, 4);
  Rng rng(10);
  const double t = 0.6;
  const Image xt = perturb(x0, t, s, rng);
  const ScoreField f = dsm_target(x0, xt, t, s);
  const double sig2 = s.sigma(t) * s.sigma(t);
  auto logq = [&](const std::vector<double>& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc -= (x[i] - x0[i]) * (x[i] - x0[i]) / (2 * sig2);
    return acc;
  };
  std::vector<double> x(xt.data().begin(), xt.data().end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-5, keep = x[i];
    x[i] = keep + h;
    const double up = logq(x);
    x[i] = keep - h;
    const double dn = logq(x);
    x[i] = keep;
    const double fd = (up - dn) / (2 * h);
    EXPECT_NEAR(f[i], fd, 1e-5 * std::abs(fd) + 1e-4);
  }
}

TEST(DsmLoss, OracleModelZeroAndZeroModelHalfMeanSquare) {
  const NoiseSchedule s;
  const Image x0 = random_image(8, 8, 5);
  Rng rng(11);
  const double t = 0.3;
  const Image xt = perturb(x0, t, s, rng);
  const ScoreField target = dsm_target(x0, xt, t, s);
  EXPECT_EQ(dsm_loss(FixedScore(target), x0, xt, {}, t, s), 0.0);
  double half_ms = 0.0;
  for (float v : target.data()) half_ms += 0.5 * static_cast<double>(v) * v;
  half_ms /= static_cast<double>(target.size());
  EXPECT_NEAR(dsm_loss(ZeroScore(), x0, xt, {}, t, s), half_ms, 1e-12 * half_ms);
}

TEST(DsmLoss, ReproducibleAndChannelChecked) {
  const NoiseSchedule s;
  const ScoreModel model(ArchSpec{.cond_channels = 3, .depth = 1, .width = 8}, s, 3);
  const Image x0 = random_image(16, 16, 6);
  Rng a(12), b(12);
  const double la = dsm_loss(model, x0, 0.4, a, LmiConfig{}, s);
  const double lb = dsm_loss(model, x0, 0.4, b, LmiConfig{}, s);
  EXPECT_EQ(la, lb);
  EXPECT_GE(la, 0.0);
  LmiConfig value_only;
  value_only.mode = CondMode::kValueOnly;
  EXPECT_THROW(dsm_loss(model, x0, 0.4, a, value_only, s), ConfigError);
  std::vector<Image> one = {Image(16, 16)};
  EXPECT_THROW(dsm_loss(model, x0, x0, one, 0.4, s), ConfigError);
}

TEST(DsmLoss, PixelPermutationInvarianceAtUnitReceptiveField) {
  const NoiseSchedule s;
  ArchSpec arch{.cond_channels = 1, .depth = 0, .width = 0, .kernel = 1, .groups = 0, .time_dim = 0};
  ScoreModel model(arch, s, 21);
  std::mt19937_64 g(22);
  std::normal_distribution<float> nd(0.0f, 0.5f);
  for (auto& p : model.mutable_params()) p = nd(g);
  const Image x0 = random_image(8, 8, 7);
  Rng rng(13);
  const double t = 0.45;
  const Image xt = perturb(x0, t, s, rng);
  const Image cond = random_image(8, 8, 8);

  std::vector<std::size_t> perm(64);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), g);
  Image px0(8, 8), pxt(8, 8), pcond(8, 8);
  for (std::size_t i = 0; i < 64; ++i) {
    px0[i] = x0[perm[i]];
    pxt[i] = xt[perm[i]];
    pcond[i] = cond[perm[i]];
  }
  const std::vector<Image> c1 = {cond}, c2 = {pcond};
  const double a = dsm_loss(model, x0, xt, c1, t, s);
  const double b = dsm_loss(model, px0, pxt, c2, t, s);
  EXPECT_NEAR(a, b, 1e-12 * a);
}

TEST(ReverseStep, DriftTowardGaussianMean) {
  const NoiseSchedule s;
  const double mu = 0.5, s0 = 0.1, t = 0.8, dt = 0.005;
  const GaussianOracleScore oracle(mu, s0, s);
  Rng rng(14);
  const int runs = 20000;
  Image x(runs, 1, static_cast<float>(mu + 0.8));
  const ScoreField sc = oracle.score(x, {}, t);
  reverse_em_step(x, sc, s.dsigma2_dt(t), dt, rng);
  double dist = 0.0;
  for (float v : x.data()) dist += std::abs(v - mu);
  EXPECT_LT(dist / runs, 0.8);
  // drift-only: exact linear contraction
  Image y(1, 1, static_cast<float>(mu + 0.8));
  reverse_em_step(y, oracle.score(y, {}, t), s.dsigma2_dt(t), dt, rng, 0.0);
  const double var = s0 * s0 + s.sigma(t) * s.sigma(t);
  EXPECT_NEAR(y[0] - mu, 0.8 * (1.0 - s.dsigma2_dt(t) * dt / var), 1e-6);
}

TEST(EmTranslate, SingleStepZeroModelClosedForm) {
  const NoiseSchedule s;
  const Image src = random_image(8, 8, 15);
  SamplerConfig cfg;
  cfg.steps = 1;
  cfg.seed = 77;
  const Image out = em_translate(ZeroScore(3), src, s, cfg);
  Rng rng = make_rng(77, "sample");
  Image expect = src;
  for (auto& v : expect.data()) v = static_cast<float>(v + s.sigma(1.0) * standard_normal(rng));
  const double diff = std::sqrt(s.dsigma2_dt(1.0) * 1.0);
  for (auto& v : expect.data()) {
    v = static_cast<float>(v + diff * standard_normal(rng));
    v = std::clamp(v, 0.0f, 1.0f);
  }
  EXPECT_EQ(out, expect);
}

TEST(EmTranslate, DeterministicAndUnitRange) {
  const NoiseSchedule s;
  const ScoreModel model(ArchSpec{.cond_channels = 3, .depth = 1, .width = 8, .zero_init_final = false}, s, 5);
  const Image src = random_image(16, 16, 16);
  SamplerConfig cfg;
  cfg.steps = 5;
  cfg.seed = 3;
  const Image a = em_translate(model, src, s, cfg);
  EXPECT_EQ(a, em_translate(model, src, s, cfg));
  EXPECT_TRUE(a.in_unit_range());
  cfg.seed = 4;
  EXPECT_NE(a, em_translate(model, src, s, cfg));
}

TEST(EmTranslate, ChannelMismatchIsConfigError) {
  SamplerConfig cfg;
  cfg.lmi.mode = CondMode::kValueOnly;
  EXPECT_THROW(em_translate(ZeroScore(3), Image(8, 8), NoiseSchedule{}, cfg), ConfigError);
}

TEST(EmTranslate, DivergenceReportsStep) {
  class Exploding : public ScoreFunction {
   public:
    int cond_channels() const override { return 0; }
    ScoreField score(const Image& x, std::span<const Image>, double t) const override {
      return ScoreField(x.width(), x.height(), t < 0.9 ? std::numeric_limits<float>::infinity() : 0.f);
    }
  };
  SamplerConfig cfg;
  cfg.steps = 20;
  try {
    em_translate(Exploding(), Image(4, 4), NoiseSchedule{}, cfg);
    FAIL();
  } catch (const NumericalDivergence& e) {
    EXPECT_EQ(e.step(), 3);  // t = 1 - 3/20 = 0.85 is the first t < 0.9
  }
}

TEST(EmTranslate, DumpsTrajectory) {
  lmid::testing::TempDir dir("dump");
  SamplerConfig cfg;
  cfg.steps = 6;
  cfg.dump_every = 2;
  cfg.dump_dir = dir.path();
  em_translate(ZeroScore(), Image(4, 4, 0.5f), NoiseSchedule{}, cfg);
  for (int k : {0, 2, 4, 6}) {
    char name[32];
    std::snprintf(name, sizeof name, "step%05d.lmif", k);
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "step00001.lmif"));
}

TEST(Sdedit, NoOpLimit) {
  const Image src = random_image(8, 8, 17);
  SamplerConfig cfg;
  cfg.guidance = Guidance::kPerturb;
  cfg.t_start = 0.0;
  cfg.steps = 0;
  EXPECT_EQ(sdedit_translate(ZeroScore(3), src, NoiseSchedule{}, cfg), src);
  EXPECT_EQ(translate(ZeroScore(3), src, NoiseSchedule{}, cfg), src);
}

TEST(Sdedit, ZeroModelFromOneKeepsSourceMean) {
  const NoiseSchedule s;
  // Unclamped check of the mean of the pre-clamp state via many small runs
  // would need internals; with a mid-grey source the clamp is symmetric.
  const Image src(64, 64, 0.5f);
  SamplerConfig cfg;
  cfg.guidance = Guidance::kPerturb;
  cfg.t_start = 1.0;
  cfg.steps = 10;
  double mean = 0.0;
  const int runs = 20;
  for (int r = 0; r < runs; ++r) {
    cfg.seed = static_cast<std::uint64_t>(r);
    const Image out = sdedit_translate(ZeroScore(3), src, s, cfg);
    for (float v : out.data()) mean += v;
  }
  mean /= runs * 64.0 * 64.0;
  EXPECT_NEAR(mean, 0.5, 0.01);
}

TEST(Sdedit, DeterministicAndUsesZeroCondition) {
  // A model that reports whether any conditioning value is non-zero.
  class CondProbe : public ScoreFunction {
   public:
    mutable bool saw_nonzero = false;
    int cond_channels() const override { return 3; }
    ScoreField score(const Image& x, std::span<const Image> cond, double) const override {
      for (const auto& c : cond)
        for (float v : c.data()) saw_nonzero |= v != 0.0f;
      return ScoreField(x.width(), x.height(), 0.0f);
    }
  };
  const Image src = random_image(16, 16, 18);
  SamplerConfig cfg;
  cfg.guidance = Guidance::kPerturb;
  cfg.steps = 4;
  CondProbe probe;
  const Image a = sdedit_translate(probe, src, NoiseSchedule{}, cfg);
  EXPECT_FALSE(probe.saw_nonzero);
  EXPECT_EQ(a, sdedit_translate(probe, src, NoiseSchedule{}, cfg));
  cfg.guidance = Guidance::kLmi;
  em_translate(probe, src, NoiseSchedule{}, cfg);
  EXPECT_TRUE(probe.saw_nonzero);
}

TEST(Guidance, ParseRoundTrip) {
  for (auto g : {Guidance::kLmi, Guidance::kPerturb, Guidance::kNone}) {
    EXPECT_EQ(parse_guidance(to_string(g)), g);
  }
  EXPECT_THROW(parse_guidance("sdedit"), ConfigError);
}
