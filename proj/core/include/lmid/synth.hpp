#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lmid/image.hpp"
#include "lmid/image_io.hpp"

namespace lmid {

// Base intensity per tissue class. Target ("T1w-like") and source
// ("PDw-like") tables are deliberately order-scrambled relative to each other.
inline constexpr std::array<double, 5> kTargetIntensities = {0.1, 0.45, 0.75, 0.95, 0.3};
inline constexpr std::array<double, 5> kSourceIntensities = {0.2, 0.85, 0.35, 0.6, 0.9};
inline constexpr double kTextureAmplitude = 0.03;
inline constexpr double kPixelNoise = 0.02;

struct Phantom {
  LabelImage mask;     // labels in [0, k_tissue)
  Image modality_a;    // source
  Image modality_b;    // target
  std::uint64_t seed = 0;
  int k_tissue = 0;
};

// 3-6 overlapping ellipses over a background class. Both modalities share the
// mask and a per-class low-frequency texture with the same phase; each adds
// its own pixel noise. Values clamped to [0,1].
Phantom gen_phantom(std::uint64_t seed, int size, int k_tissue);

struct DatasetSpec {
  std::uint64_t seed = 0;
  int n_train = 64;
  int n_test = 16;
  int size = 32;
  int k_tissue = 5;
};

struct TestCase {
  std::string id;  // "0000"
  Image source;    // modality_a (G)
  Image target;    // modality_b (F), held out
  LabelImage mask;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<Image> train;  // modality_b only
  std::vector<TestCase> test;
};

// Layout:
//   <root>/train/fXXXX.lmif
//   <root>/test/{gXXXX.lmif, fXXXX.lmif, maskXXXX.pgm}
//   <root>/manifest.txt
// Returns the in-memory dataset that was written.
Dataset gen_dataset(const std::filesystem::path& root, const DatasetSpec& spec);
Dataset load_dataset(const std::filesystem::path& root);
DatasetSpec read_manifest(const std::filesystem::path& root);

// Verifies that train/ holds exactly the manifest's target-modality files and
// nothing else. Returns a list of problems; empty means clean.
std::vector<std::string> audit_zero_shot(const std::filesystem::path& root);

}  // namespace lmid
