#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "lmid/errors.hpp"
#include "lmid/image_io.hpp"
#include "lmid/rng.hpp"
#include "lmid/synth.hpp"
#include "test_support.hpp"

using namespace lmid;
using lmid::testing::read_bytes;
using lmid::testing::TempDir;
namespace fs = std::filesystem;

TEST(Phantom, DeterministicBySeed) {
  const Phantom a = gen_phantom(42, 32, 5), b = gen_phantom(42, 32, 5);
  EXPECT_EQ(a.mask.labels, b.mask.labels);
  EXPECT_EQ(a.modality_a, b.modality_a);
  EXPECT_EQ(a.modality_b, b.modality_b);
  EXPECT_NE(gen_phantom(43, 32, 5).modality_b, a.modality_b);
}

TEST(Phantom, LabelsWithinKAndImagesInRange) {
  for (int k = 2; k <= 5; ++k) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Phantom p = gen_phantom(s, 24, k);
      std::set<int> seen(p.mask.labels.begin(), p.mask.labels.end());
      EXPECT_LE(seen.size(), static_cast<std::size_t>(k));
      EXPECT_LT(*seen.rbegin(), k);
      EXPECT_TRUE(p.modality_a.in_unit_range());
      EXPECT_TRUE(p.modality_b.in_unit_range());
      EXPECT_EQ(p.mask.width, 24);
      EXPECT_EQ(p.modality_a.width(), 24);
    }
  }
}

TEST(Phantom, ClassMeansMatchTables) {
  std::array<double, 5> sum_a{}, sum_b{};
  std::array<std::size_t, 5> count{};
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Phantom p = gen_phantom(derive_seed(1234, "means", s), 32, 5);
    for (std::size_t i = 0; i < p.mask.labels.size(); ++i) {
      const int l = p.mask.labels[i];
      sum_a[l] += p.modality_a[i];
      sum_b[l] += p.modality_b[i];
      ++count[l];
    }
  }
  for (int l = 0; l < 5; ++l) {
    ASSERT_GT(count[l], 1000u) << l;
    EXPECT_NEAR(sum_a[l] / count[l], kSourceIntensities[l], 0.01) << l;
    EXPECT_NEAR(sum_b[l] / count[l], kTargetIntensities[l], 0.01) << l;
  }
}

TEST(Phantom, CrossModalityMappingIsNonMonotone) {
  bool inversion = false;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      inversion |= kSourceIntensities[i] < kSourceIntensities[j] &&
                   kTargetIntensities[i] > kTargetIntensities[j];
  EXPECT_TRUE(inversion);
}

TEST(Phantom, Errors) {
  EXPECT_THROW(gen_phantom(1, 15, 3), InvalidArgument);
  EXPECT_THROW(gen_phantom(1, 32, 1), InvalidArgument);
  EXPECT_THROW(gen_phantom(1, 32, 6), InvalidArgument);
}

TEST(Dataset, LayoutManifestAndZeroShot) {
  TempDir dir("ds");
  const DatasetSpec spec{7, 5, 3, 16, 4};
  const Dataset ds = gen_dataset(dir.path(), spec);
  EXPECT_EQ(ds.train.size(), 5u);
  EXPECT_EQ(ds.test.size(), 3u);
  for (const auto& e : fs::directory_iterator(dir / "train")) {
    EXPECT_EQ(e.path().filename().string()[0], 'f');
  }
  EXPECT_TRUE(fs::exists(dir / "test/g0002.lmif"));
  EXPECT_TRUE(fs::exists(dir / "test/f0002.lmif"));
  EXPECT_TRUE(fs::exists(dir / "test/mask0002.pgm"));
  EXPECT_TRUE(audit_zero_shot(dir.path()).empty());

  const DatasetSpec back = read_manifest(dir.path());
  EXPECT_EQ(back.seed, 7u);
  EXPECT_EQ(back.n_train, 5);
  EXPECT_EQ(back.n_test, 3);
  EXPECT_EQ(back.size, 16);
  EXPECT_EQ(back.k_tissue, 4);

  // No source-modality bytes under train/.
  for (int i = 0; i < spec.n_train; ++i) {
    const Phantom p = gen_phantom(derive_seed(spec.seed, "phantom", i), spec.size, spec.k_tissue);
    EXPECT_EQ(ds.train[i], p.modality_b);
    EXPECT_NE(ds.train[i], p.modality_a);
  }

  const Dataset loaded = load_dataset(dir.path());
  ASSERT_EQ(loaded.test.size(), 3u);
  EXPECT_EQ(loaded.test[1].source, ds.test[1].source);
  EXPECT_EQ(loaded.test[1].mask.labels, ds.test[1].mask.labels);
  EXPECT_EQ(loaded.train[4], ds.train[4]);
}

TEST(Dataset, AuditFlagsIntruders) {
  TempDir dir("ds");
  const Dataset ds = gen_dataset(dir.path(), DatasetSpec{1, 2, 1, 16, 3});
  save_lmif(ds.test[0].source, dir / "train/g0000.lmif");
  const auto problems = audit_zero_shot(dir.path());
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("g0000"), std::string::npos);
}

TEST(Dataset, RegenerationFromManifestIsIdentical) {
  TempDir a("ds"), b("ds");
  gen_dataset(a.path(), DatasetSpec{99, 3, 2, 16, 5});
  gen_dataset(b.path(), read_manifest(a.path()));
  for (const auto& e : fs::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a.path());
    EXPECT_EQ(read_bytes(e.path()), read_bytes(b.path() / rel)) << rel;
  }
}

TEST(Dataset, DefaultsAreDeskScale) {
  const DatasetSpec d;
  EXPECT_EQ(d.n_train, 64);
  EXPECT_EQ(d.n_test, 16);
  EXPECT_EQ(d.size, 32);
}

TEST(Dataset, UnwritableRootIsIoError) {
  TempDir dir("ds");
  { std::ofstream(dir / "blocker") << "x"; }
  EXPECT_THROW(gen_dataset(dir / "blocker", DatasetSpec{}), IoError);
}
