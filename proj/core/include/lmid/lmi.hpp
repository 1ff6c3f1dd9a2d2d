#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lmid/image.hpp"

namespace lmid {

// Which conditioning planes a CondMap exposes to the score network.
enum class CondMode {
  kFull,       // value, drow, dcol
  kValueOnly,  // value
};

struct LmiConfig {
  int levels = 16;
  int radius = 3;
  int search_radius = 3;
  CondMode mode = CondMode::kFull;

  int cond_channels() const noexcept { return mode == CondMode::kFull ? 3 : 1; }
  int samples() const noexcept { return (2 * radius + 1) * (2 * radius + 1); }
  void validate() const;
  friend bool operator==(const LmiConfig&, const LmiConfig&) = default;
};

struct PDF {
  int levels = 0;
  std::vector<double> mass;
};

// mass is row-major: mass[a * levels + b] for label a of the first patch and
// label b of the second.
struct JointPDF {
  int levels = 0;
  std::vector<double> mass;

  double at(int a, int b) const { return mass[static_cast<std::size_t>(a) * levels + b]; }
  PDF marginal_first() const;
  PDF marginal_second() const;
};

struct LmiMatch {
  double value = 0.0;  // nats
  Pixel offset;        // (drow, dcol) of the maximising neighbour
};

struct CondMap {
  int width = 0;
  int height = 0;
  int search_radius = 0;
  std::vector<double> value;       // per-pixel sup MI, nats, >= 0
  std::vector<std::int8_t> drow;   // argmax offsets, |.| <= search_radius
  std::vector<std::int8_t> dcol;

  friend bool operator==(const CondMap&, const CondMap&) = default;
};

PDF histogram(const Patch& p);
JointPDF joint_histogram(const Patch& a, const Patch& b);
double entropy(const PDF& pdf);
double mutual_information(const JointPDF& j);

// Sup over neighbours j within search_radius of i of the plug-in MI between
// patch(ref, i) and patch(cur, j). Only in-bounds j are considered. Offsets
// are visited by increasing L1 norm, then row-major; a later offset must beat
// the incumbent by more than kLmiTieTolerance to replace it.
LmiMatch lmi_point(const QuantizedImage& ref, const QuantizedImage& cur, Pixel i, int radius,
                   int search_radius);

inline constexpr double kLmiTieTolerance = 1e-12;

// Per-pixel lmi_point over the whole grid. `ref` and `cur` are quantized on
// the fixed [0,1] grid (values outside are clamped). Data-parallel across rows;
// the result does not depend on the thread count.
CondMap lmi_map(const Image& ref, const Image& cur, const LmiConfig& cfg, int threads = 0);
CondMap lmi_map(const QuantizedImage& ref, const QuantizedImage& cur, const LmiConfig& cfg,
                int threads = 0);

// Network input planes: value as-is, offsets scaled by 1/search_radius.
std::vector<Image> cond_planes(const CondMap& m, CondMode mode);
// All-zero planes, used for the unconditioned baseline.
std::vector<Image> zero_cond_planes(int width, int height, CondMode mode);

// LMIF container with three planes: value, drow, dcol.
void save_condmap(const CondMap& m, const std::filesystem::path& path);
CondMap load_condmap(const std::filesystem::path& path);

}  // namespace lmid
