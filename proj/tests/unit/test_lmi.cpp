#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "lmid/errors.hpp"
#include "lmid/lmi.hpp"
#include "test_support.hpp"

using namespace lmid;
using lmid::testing::random_image;
using lmid::testing::random_quantized;

namespace {

Patch make_patch(std::vector<std::uint8_t> v, int levels) {
  Patch p;
  p.levels = levels;
  p.radius = 0;
  p.values = std::move(v);
  return p;
}

Patch random_patch(std::mt19937_64& g, int n, int levels) {
  std::uniform_int_distribution<int> u(0, levels - 1);
  std::vector<std::uint8_t> v(n);
  for (auto& x : v) x = static_cast<std::uint8_t>(u(g));
  return make_patch(std::move(v), levels);
}

// Naive entropy from a map of counts.
double naive_entropy(const std::map<int, int>& counts, double n) {
  double h = 0.0;
  for (const auto& [k, c] : counts) h -= (c / n) * std::log(c / n);
  return h;
}

double identity_mi(const Patch& a, const Patch& b) {
  std::map<int, int> ca, cb, cab;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    ++ca[a.values[k]];
    ++cb[b.values[k]];
    ++cab[a.values[k] * 1000 + b.values[k]];
  }
  const double n = static_cast<double>(a.values.size());
  return naive_entropy(ca, n) + naive_entropy(cb, n) - naive_entropy(cab, n);
}

// Exhaustive sup with the documented tie rule, built on the public PDF ops.
LmiMatch oracle_point(const QuantizedImage& ref, const QuantizedImage& cur, Pixel i, int r,
                      int sr) {
  const Patch a = extract_patch(ref, i, r);
  LmiMatch best{-1.0, {0, 0}};
  for (int norm = 0; norm <= 2 * sr; ++norm) {
    for (int dr = -sr; dr <= sr; ++dr) {
      for (int dc = -sr; dc <= sr; ++dc) {
        if (std::abs(dr) + std::abs(dc) != norm) continue;
        const Pixel j{i.row + dr, i.col + dc};
        if (!cur.contains(j)) continue;
        const double mi = identity_mi(a, extract_patch(cur, j, r));
        if (mi > best.value + 1e-9) best = {mi, {dr, dc}};
      }
    }
  }
  return best;
}

}  // namespace

TEST(Histogram, ConstantPatch) {
  const PDF p = histogram(make_patch(std::vector<std::uint8_t>(9, 2), 4));
  EXPECT_EQ(p.levels, 4);
  EXPECT_EQ(p.mass, (std::vector<double>{0, 0, 1, 0}));
}

TEST(Histogram, EvenSplit) {
  std::vector<std::uint8_t> v;
  for (int l = 0; l < 7; ++l)
    for (int k = 0; k < 7; ++k) v.push_back(static_cast<std::uint8_t>(l));
  const PDF p = histogram(make_patch(v, 7));
  for (double m : p.mass) EXPECT_DOUBLE_EQ(m, 1.0 / 7.0);
}

TEST(Histogram, MatchesCountingOracle) {
  std::mt19937_64 g(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Patch p = random_patch(g, 49, 16);
    const PDF pdf = histogram(p);
    double total = 0.0;
    for (int l = 0; l < 16; ++l) {
      int c = 0;
      for (auto v : p.values) c += v == l;
      EXPECT_EQ(pdf.mass[l], c / 49.0);
      EXPECT_GE(pdf.mass[l], 0.0);
      total += pdf.mass[l];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(JointHistogram, SelfIsDiagonal) {
  std::mt19937_64 g(12);
  const Patch p = random_patch(g, 49, 8);
  const JointPDF j = joint_histogram(p, p);
  const PDF h = histogram(p);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) EXPECT_EQ(j.at(a, b), a == b ? h.mass[a] : 0.0);
}

TEST(JointHistogram, IndependentPairingIsOuterProduct) {
  // Every (x, y) pair of {0,1,2} x {0,1} appears exactly once.
  std::vector<std::uint8_t> a, b;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 2; ++y) {
      a.push_back(static_cast<std::uint8_t>(x));
      b.push_back(static_cast<std::uint8_t>(y));
    }
  const JointPDF j = joint_histogram(make_patch(a, 3), make_patch(b, 3));
  const PDF pa = j.marginal_first(), pb = j.marginal_second();
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) EXPECT_NEAR(j.at(x, y), pa.mass[x] * pb.mass[y], 1e-15);
  EXPECT_NEAR(mutual_information(j), 0.0, 1e-15);
}

TEST(JointHistogram, MatchesPairedCountOracleAndMarginals) {
  std::mt19937_64 g(13);
  for (int trial = 0; trial < 30; ++trial) {
    const Patch a = random_patch(g, 25, 6), b = random_patch(g, 25, 6);
    const JointPDF j = joint_histogram(a, b);
    double total = 0.0;
    for (int x = 0; x < 6; ++x)
      for (int y = 0; y < 6; ++y) {
        int c = 0;
        for (int k = 0; k < 25; ++k) c += a.values[k] == x && b.values[k] == y;
        EXPECT_EQ(j.at(x, y), c / 25.0);
        total += j.at(x, y);
      }
    EXPECT_NEAR(total, 1.0, 1e-12);
    const PDF ha = histogram(a), hb = histogram(b);
    for (int l = 0; l < 6; ++l) {
      EXPECT_NEAR(j.marginal_first().mass[l], ha.mass[l], 1e-15);
      EXPECT_NEAR(j.marginal_second().mass[l], hb.mass[l], 1e-15);
    }
  }
}

TEST(JointHistogram, SizeMismatch) {
  EXPECT_THROW(joint_histogram(make_patch({0, 1}, 2), make_patch({0}, 2)), InvalidArgument);
}

TEST(Entropy, Examples) {
  EXPECT_NEAR(entropy(PDF{4, {0.25, 0.25, 0.25, 0.25}}), 1.386294, 1e-6);
  EXPECT_NEAR(entropy(PDF{4, {0.25, 0.25, 0.25, 0.25}}), std::log(4.0), 1e-15);
  EXPECT_EQ(entropy(PDF{3, {0, 1, 0}}), 0.0);
  EXPECT_NEAR(entropy(PDF{4, {0.5, 0.5, 0, 0}}), 0.693147, 1e-6);
}

TEST(Entropy, BoundedByLogLevels) {
  std::mt19937_64 g(14);
  for (int trial = 0; trial < 100; ++trial) {
    const PDF p = histogram(random_patch(g, 49, 16));
    const double h = entropy(p);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(16.0) + 1e-12);
  }
}

TEST(MutualInformation, DiagonalEqualsEntropy) {
  std::mt19937_64 g(15);
  for (int trial = 0; trial < 50; ++trial) {
    const Patch p = random_patch(g, 49, 16);
    EXPECT_NEAR(mutual_information(joint_histogram(p, p)), entropy(histogram(p)), 1e-12);
  }
}

TEST(MutualInformation, EntropyIdentityNonNegativeSymmetric) {
  std::mt19937_64 g(16);
  for (int trial = 0; trial < 200; ++trial) {
    const Patch a = random_patch(g, 49, 8), b = random_patch(g, 49, 8);
    const double mi = mutual_information(joint_histogram(a, b));
    EXPECT_NEAR(mi, identity_mi(a, b), 1e-10);
    EXPECT_GE(mi, 0.0);
    EXPECT_NEAR(mi, mutual_information(joint_histogram(b, a)), 1e-12);
    EXPECT_LE(mi, entropy(histogram(a)) + 1e-12);
  }
}

TEST(LmiPoint, IdentityGivesEntropyAtZeroOffset) {
  const QuantizedImage q = random_quantized(12, 12, 16, 17);
  for (int r = 0; r < 12; r += 3) {
    for (int c = 0; c < 12; c += 2) {
      const LmiMatch m = lmi_point(q, q, {r, c}, 3, 3);
      EXPECT_EQ(m.offset, (Pixel{0, 0}));
      EXPECT_NEAR(m.value, entropy(histogram(extract_patch(q, {r, c}, 3))), 1e-12);
    }
  }
}

TEST(LmiPoint, FindsShift) {
  const QuantizedImage ref = random_quantized(16, 16, 16, 18);
  // cur(r, c) = ref(r, c - 1): the neighbourhood of ref at i reappears in cur at i + (0, 1).
  std::vector<std::uint8_t> v(256);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) v[r * 16 + c] = ref.at(r, std::max(0, c - 1));
  const QuantizedImage cur(16, 16, 16, v);
  for (int r = 4; r < 12; ++r) {
    for (int c = 4; c < 11; ++c) {
      const LmiMatch m = lmi_point(ref, cur, {r, c}, 2, 2);
      EXPECT_EQ(m.offset, (Pixel{0, 1})) << r << "," << c;
      EXPECT_NEAR(m.value, entropy(histogram(extract_patch(ref, {r, c}, 2))), 1e-12);
    }
  }
}

TEST(LmiPoint, BoundAndOracleOnRandomPairs) {
  for (std::uint64_t s = 0; s < 8; ++s) {
    const QuantizedImage ref = random_quantized(10, 9, 8, 100 + s);
    const QuantizedImage cur = random_quantized(10, 9, 8, 200 + s);
    for (int r = 0; r < 9; ++r) {
      for (int c = 0; c < 10; ++c) {
        const LmiMatch m = lmi_point(ref, cur, {r, c}, 1, 2);
        const LmiMatch o = oracle_point(ref, cur, {r, c}, 1, 2);
        EXPECT_NEAR(m.value, o.value, 1e-10);
        EXPECT_EQ(m.offset, o.offset);
        EXPECT_LE(m.value, entropy(histogram(extract_patch(ref, {r, c}, 1))) + 1e-12);
        EXPECT_LE(std::abs(m.offset.row), 2);
        EXPECT_LE(std::abs(m.offset.col), 2);
      }
    }
  }
}

TEST(LmiPoint, TiesPreferSmallestOffset) {
  // Constant images: every candidate has MI 0, so (0,0) must win.
  const QuantizedImage q(6, 6, 4, std::vector<std::uint8_t>(36, 1));
  const LmiMatch m = lmi_point(q, q, {3, 3}, 1, 2);
  EXPECT_EQ(m.offset, (Pixel{0, 0}));
  EXPECT_EQ(m.value, 0.0);
}

TEST(LmiPoint, Errors) {
  const QuantizedImage a = random_quantized(5, 5, 4, 1), b = random_quantized(6, 5, 4, 2);
  EXPECT_THROW(lmi_point(a, b, {0, 0}, 1, 1), InvalidArgument);
  EXPECT_THROW(lmi_point(a, a, {5, 0}, 1, 1), InvalidArgument);
}

TEST(LmiMap, SelfMapIsEntropyAtZeroOffset) {
  const Image img = random_image(16, 16, 19);
  const LmiConfig cfg;
  const CondMap m = lmi_map(img, img, cfg);
  const QuantizedImage q = quantize(img, cfg.levels);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) {
      const std::size_t i = r * 16 + c;
      EXPECT_EQ(m.drow[i], 0);
      EXPECT_EQ(m.dcol[i], 0);
      EXPECT_NEAR(m.value[i], entropy(histogram(extract_patch(q, {r, c}, cfg.radius))), 1e-12);
    }
  }
}

TEST(LmiMap, ConstantReferenceIsZero) {
  const CondMap m = lmi_map(Image(12, 12, 0.4f), random_image(12, 12, 20), LmiConfig{});
  for (double v : m.value) EXPECT_EQ(v, 0.0);
}

TEST(LmiMap, MatchesPerPixelLoopBitExactAcrossThreads) {
  LmiConfig cfg;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image a = random_image(16, 16, 300 + s), b = random_image(16, 16, 400 + s);
    const QuantizedImage qa = quantize(a, cfg.levels), qb = quantize(b, cfg.levels);
    const CondMap serial = lmi_map(a, b, cfg, 1);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        const LmiMatch m = lmi_point(qa, qb, {r, c}, cfg.radius, cfg.search_radius);
        const std::size_t i = r * 16 + c;
        EXPECT_EQ(serial.value[i], m.value);
        EXPECT_EQ(serial.drow[i], m.offset.row);
        EXPECT_EQ(serial.dcol[i], m.offset.col);
        EXPECT_GE(serial.value[i], 0.0);
      }
    }
    for (int t : {2, 3, 4, 7}) EXPECT_EQ(lmi_map(a, b, cfg, t), serial);
  }
}

TEST(LmiMap, DimensionMismatch) {
  EXPECT_THROW(lmi_map(Image(4, 4), Image(4, 5), LmiConfig{}), InvalidArgument);
}

TEST(CondPlanes, ScalingAndModes) {
  CondMap m{2, 1, 3, {0.5, 1.0}, {3, -3}, {0, 1}};
  const auto full = cond_planes(m, CondMode::kFull);
  ASSERT_EQ(full.size(), 3u);
  EXPECT_EQ(full[0][1], 1.0f);
  EXPECT_EQ(full[1][0], 1.0f);
  EXPECT_EQ(full[1][1], -1.0f);
  EXPECT_FLOAT_EQ(full[2][1], 1.0f / 3.0f);
  EXPECT_EQ(cond_planes(m, CondMode::kValueOnly).size(), 1u);
  for (const auto& p : zero_cond_planes(4, 3, CondMode::kFull)) EXPECT_EQ(p, Image(4, 3, 0.0f));
}

TEST(CondMapIo, RoundTrip) {
  lmid::testing::TempDir dir("condmap");
  const CondMap m = lmi_map(random_image(9, 7, 21), random_image(9, 7, 22), LmiConfig{});
  save_condmap(m, dir / "c.lmif");
  const CondMap back = load_condmap(dir / "c.lmif");
  EXPECT_EQ(back.drow, m.drow);
  EXPECT_EQ(back.dcol, m.dcol);
  ASSERT_EQ(back.value.size(), m.value.size());
  for (std::size_t i = 0; i < m.value.size(); ++i) {
    EXPECT_EQ(back.value[i], static_cast<double>(static_cast<float>(m.value[i])));
  }
}
