#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "lmid/image.hpp"
#include "lmid/image_io.hpp"

namespace lmid {

struct KMeansModel {
  int k = 0;
  std::vector<double> centroids;  // ascending
  std::uint64_t seed = 0;
};

struct KMeansFit {
  KMeansModel model;
  std::vector<double> inertia;  // within-cluster sum of squares after each Lloyd iteration
  int iterations = 0;
};

// Lloyd iterations on pooled pixel intensities, k-means++ seeding. Stops when
// no centroid moves more than 1e-6 or after 300 iterations.
KMeansFit kmeans_fit_detailed(const std::vector<Image>& images, int k, std::uint64_t seed);
KMeansModel kmeans_fit(const std::vector<Image>& images, int k, std::uint64_t seed);

// Nearest centroid; ties go to the lower index.
LabelImage kmeans_assign(const KMeansModel& model, const Image& img);

struct DiceResult {
  double mean = 0.0;
  std::vector<double> per_class;
  std::vector<int> mapping;  // pred label -> truth label
};

// Multi-class Dice after relabelling `pred` with the permutation that
// maximises the mean per-class Dice (exhaustive; up to 8 labels). Classes
// empty in both masks score 1.
DiceResult dice(const LabelImage& pred, const LabelImage& truth);

// 2|A n B| / (|A| + |B|) with A, B the non-zero pixels; 1 when both are empty.
double binary_dice(const LabelImage& a, const LabelImage& b);

// 10 log10(1 / MSE) for data in [0,1]; +inf when identical.
double psnr(const Image& a, const Image& b);

// Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5), C1 = 0.01^2,
// C2 = 0.03^2.
double ssim(const Image& a, const Image& b);

struct MetricRow {
  std::string id;
  double dice = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  double dice_mean = 0.0, dice_std = 0.0;
  double psnr_mean = 0.0, psnr_std = 0.0;
  double ssim_mean = 0.0, ssim_std = 0.0;
};

MetricReport summarize(std::vector<MetricRow> rows);

// Header "image,dice,psnr,ssim", one row per image, then "mean" and "std" rows.
void write_metric_csv(const MetricReport& report, const std::filesystem::path& path);
MetricReport read_metric_csv(const std::filesystem::path& path);

}  // namespace lmid
