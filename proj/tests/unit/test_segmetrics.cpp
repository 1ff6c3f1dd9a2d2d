#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lmid/errors.hpp"
#include "lmid/segmetrics.hpp"
#include "test_support.hpp"

using namespace lmid;
using lmid::testing::random_image;
using lmid::testing::TempDir;

namespace {

Image mixture(int n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd(0.0, 0.02);
  const double modes[3] = {0.1, 0.5, 0.9};
  Image img(n, n);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(modes[g() % 3] + nd(g));
  return img;
}

LabelImage mask(int w, int h, std::vector<std::uint8_t> v) { return {w, h, std::move(v)}; }

double mse(const Image& a, const Image& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (double{a[i]} - b[i]) * (double{a[i]} - b[i]);
  return acc / a.size();
}

}  // namespace

TEST(KMeans, RecoversSeparatedModes) {
  const KMeansModel m = kmeans_fit({mixture(40, 1), mixture(40, 2)}, 3, 7);
  ASSERT_EQ(m.centroids.size(), 3u);
  EXPECT_NEAR(m.centroids[0], 0.1, 0.02);
  EXPECT_NEAR(m.centroids[1], 0.5, 0.02);
  EXPECT_NEAR(m.centroids[2], 0.9, 0.02);
  EXPECT_TRUE(std::is_sorted(m.centroids.begin(), m.centroids.end()));
}

TEST(KMeans, SingleClusterIsGlobalMean) {
  const Image a = random_image(10, 10, 3), b = random_image(7, 5, 4);
  double s = 0;
  for (float v : a.data()) s += v;
  for (float v : b.data()) s += v;
  const KMeansModel m = kmeans_fit({a, b}, 1, 1);
  EXPECT_NEAR(m.centroids[0], s / (a.size() + b.size()), 1e-12);
}

TEST(KMeans, DeterministicBySeedAndMonotoneInertia) {
  const std::vector<Image> imgs = {random_image(30, 30, 5)};
  EXPECT_EQ(kmeans_fit(imgs, 5, 11).centroids, kmeans_fit(imgs, 5, 11).centroids);
  const KMeansFit f = kmeans_fit_detailed(imgs, 5, 11);
  ASSERT_FALSE(f.inertia.empty());
  for (std::size_t i = 1; i < f.inertia.size(); ++i) EXPECT_LE(f.inertia[i], f.inertia[i - 1] + 1e-12);
  EXPECT_LE(f.iterations, 300);
}

TEST(KMeans, Errors) {
  EXPECT_THROW(kmeans_fit({}, 3, 1), InvalidArgument);
  EXPECT_THROW(kmeans_fit({Image(4, 4, 0.5f)}, 2, 1), DegenerateInput);
}

TEST(KMeansAssign, NearestWithLowerIndexTies) {
  const KMeansModel m{3, {0.2, 0.4, 0.8}, 0};
  const Image img(5, 1, std::vector<float>{0.2f, 0.4f, 0.8f, 0.0f, 1.0f});
  const LabelImage l = kmeans_assign(m, img);
  EXPECT_EQ(l.labels, (std::vector<std::uint8_t>{0, 1, 2, 0, 2}));
  // 0.3 is equidistant (in double) from 0.2 and 0.4 only approximately; use an
  // exactly representable tie instead.
  const KMeansModel t{2, {0.25, 0.75}, 0};
  EXPECT_EQ(kmeans_assign(t, Image(1, 1, 0.5f)).labels[0], 0);
  const LabelImage c = kmeans_assign(m, Image(6, 6, 0.55f));
  for (auto v : c.labels) EXPECT_EQ(v, c.labels[0]);
}

TEST(KMeansAssign, MatchesBruteForce) {
  const KMeansModel m = kmeans_fit({random_image(20, 20, 6)}, 4, 2);
  const Image img = random_image(17, 13, 7);
  const LabelImage l = kmeans_assign(m, img);
  for (std::size_t i = 0; i < img.size(); ++i) {
    int best = 0;
    for (int k = 1; k < 4; ++k) {
      if (std::abs(img[i] - m.centroids[k]) < std::abs(img[i] - m.centroids[best])) best = k;
    }
    EXPECT_EQ(l.labels[i], best);
  }
}

TEST(Dice, TrivialCases) {
  const LabelImage a = mask(4, 1, {0, 1, 2, 1});
  EXPECT_EQ(dice(a, a).mean, 1.0);
  EXPECT_EQ(binary_dice(mask(4, 1, {1, 1, 0, 0}), mask(4, 1, {0, 0, 1, 1})), 0.0);
  // |A| = |B| = 4, overlap 2.
  const LabelImage p = mask(6, 1, {1, 1, 1, 1, 0, 0});
  const LabelImage q = mask(6, 1, {0, 0, 1, 1, 1, 1});
  EXPECT_EQ(binary_dice(p, q), 0.5);
  EXPECT_EQ(binary_dice(mask(2, 1, {0, 0}), mask(2, 1, {0, 0})), 1.0);
}

TEST(Dice, PermutationAbsorbedAndSymmetric) {
  std::mt19937_64 g(8);
  LabelImage truth{12, 12, std::vector<std::uint8_t>(144)};
  for (auto& v : truth.labels) v = static_cast<std::uint8_t>(g() % 4);
  LabelImage pred = truth;
  for (int k = 0; k < 30; ++k) pred.labels[g() % 144] = static_cast<std::uint8_t>(g() % 4);
  const double base = dice(pred, truth).mean;
  const std::uint8_t perm[4] = {2, 0, 3, 1};
  LabelImage relabelled = pred;
  for (auto& v : relabelled.labels) v = perm[v];
  EXPECT_NEAR(dice(relabelled, truth).mean, base, 1e-15);
  EXPECT_NEAR(dice(truth, pred).mean, base, 1e-15);
  const DiceResult r = dice(relabelled, truth);
  for (int l = 0; l < 4; ++l) EXPECT_EQ(r.mapping[perm[l]], l);
  EXPECT_GE(base, 0.0);
  EXPECT_LE(base, 1.0);
}

TEST(Dice, MismatchIsInvalid) {
  EXPECT_THROW(dice(mask(2, 1, {0, 1}), mask(1, 2, {0, 1})), InvalidArgument);
}

TEST(Psnr, Formula) {
  const Image a(10, 10, 0.5f);
  Image b(10, 10, 0.6f);  // not exact in float; build MSE 0.01 exactly below
  Image c(4, 1, std::vector<float>{0.0f, 0.0f, 0.0f, 0.0f});
  Image d(4, 1, std::vector<float>{0.0f, 0.0f, 0.0f, 0.2f});  // MSE = 0.04 / 4 = 0.01
  EXPECT_NEAR(psnr(c, d), 20.0, 1e-6);
  EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
  EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / mse(a, b)), 1e-12);
}

TEST(Psnr, DecreasesWithNoise) {
  const Image a = random_image(32, 32, 9);
  double prev = std::numeric_limits<double>::infinity();
  for (double sd : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    std::mt19937_64 g(10);
    std::normal_distribution<double> nd(0.0, 1.0);
    Image b = a;
    for (auto& v : b.data()) v = static_cast<float>(v + sd * nd(g));
    const double p = psnr(a, b);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Ssim, IdentityAndInversion) {
  const Image a = random_image(16, 16, 11);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  Image board(16, 16), inv(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) {
      board.at(r, c) = static_cast<float>((r + c) % 2);
      inv.at(r, c) = 1.0f - board.at(r, c);
    }
  EXPECT_LT(ssim(board, inv), 0.0);
  EXPECT_GE(ssim(board, inv), -1.0);
  EXPECT_THROW(ssim(Image(10, 16), Image(10, 16)), InvalidArgument);
}

TEST(Ssim, ConstantImagesOfDifferentLevel) {
  // mu terms only: (2 mu_a mu_b + C1) / (mu_a^2 + mu_b^2 + C1), sigma terms 1.
  const double c1 = 1e-4, ma = 0.25, mb = 0.75;
  const double expect = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
  EXPECT_NEAR(ssim(Image(12, 12, 0.25f), Image(12, 12, 0.75f)), expect, 1e-9);
}

TEST(MetricCsv, SummaryAndRoundTrip) {
  TempDir dir("csv");
  const MetricReport r = summarize({{"0000", 0.8, 20.0, 0.6}, {"0001", 0.6, 22.0, 0.7}});
  EXPECT_NEAR(r.dice_mean, 0.7, 1e-15);
  EXPECT_NEAR(r.dice_std, std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(r.psnr_mean, 21.0, 1e-12);
  write_metric_csv(r, dir / "m.csv");
  const std::string text = lmid::testing::read_bytes(dir / "m.csv");
  EXPECT_EQ(text.substr(0, 21), "image,dice,psnr,ssim\n");
  EXPECT_NE(text.find("\nmean,"), std::string::npos);
  EXPECT_NE(text.find("\nstd,"), std::string::npos);
  const MetricReport back = read_metric_csv(dir / "m.csv");
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[1].id, "0001");
  EXPECT_NEAR(back.rows[1].psnr, 22.0, 1e-6);
  EXPECT_NEAR(back.ssim_mean, r.ssim_mean, 1e-6);
}
