#include "lmid/segmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "lmid/errors.hpp"
#include "lmid/rng.hpp"

namespace lmid {
namespace {

constexpr int kMaxLloydIterations = 300;
constexpr double kCentroidTolerance = 1e-6;

int nearest(const std::vector<double>& centroids, double v) {
  int best = 0;
  double best_d = std::abs(v - centroids[0]);
  for (int c = 1; c < static_cast<int>(centroids.size()); ++c) {
    const double d = std::abs(v - centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

KMeansFit kmeans_fit_detailed(const std::vector<Image>& images, int k, std::uint64_t seed) {
  if (k < 1) throw InvalidArgument("kmeans_fit: k must be >= 1");
  std::vector<double> px;
  for (const auto& img : images) px.insert(px.end(), img.data().begin(), img.data().end());
  if (px.empty()) throw InvalidArgument("kmeans_fit: no pixels");
  {
    std::set<double> distinct;
    for (double v : px) {
      distinct.insert(v);
      if (static_cast<int>(distinct.size()) >= k) break;
    }
    if (static_cast<int>(distinct.size()) < k) {
      throw DegenerateInput("kmeans_fit: fewer distinct values than k = " + std::to_string(k));
    }
  }

  Rng rng = make_rng(seed, "kmeans");
  std::vector<double> centroids{px[rng() % px.size()]};
  std::vector<double> d2(px.size());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centroids) best = std::min(best, (px[i] - c) * (px[i] - c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      pick = px.size() - 1;
      for (std::size_t i = 0; i < px.size(); ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(px[pick]);
  }

  KMeansFit fit;
  std::vector<double> sum(k);
  std::vector<std::size_t> count(k);
  for (int it = 0; it < kMaxLloydIterations; ++it) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (double v : px) {
      const int c = nearest(centroids, v);
      sum[c] += v;
      ++count[c];
    }
    double moved = 0.0;
    for (int c = 0; c < k; ++c) {
      if (count[c] == 0) continue;  // keep an empty cluster where it was
      const double next = sum[c] / static_cast<double>(count[c]);
      moved = std::max(moved, std::abs(next - centroids[c]));
      centroids[c] = next;
    }
    double inertia = 0.0;
    for (double v : px) {
      const double d = v - centroids[nearest(centroids, v)];
      inertia += d * d;
    }
    fit.inertia.push_back(inertia);
    fit.iterations = it + 1;
    if (moved < kCentroidTolerance) break;
  }
  std::sort(centroids.begin(), centroids.end());
  fit.model = {k, std::move(centroids), seed};
  return fit;
}

KMeansModel kmeans_fit(const std::vector<Image>& images, int k, std::uint64_t seed) {
  return kmeans_fit_detailed(images, k, seed).model;
}

LabelImage kmeans_assign(const KMeansModel& model, const Image& img) {
  if (model.centroids.empty()) throw InvalidArgument("kmeans_assign: model not fitted");
  LabelImage out{img.width(), img.height(), LabelMask(img.size())};
  for (std::size_t i = 0; i < img.size(); ++i) {
    out.labels[i] = static_cast<std::uint8_t>(nearest(model.centroids, img[i]));
  }
  return out;
}

DiceResult dice(const LabelImage& pred, const LabelImage& truth) {
  if (pred.width != truth.width || pred.height != truth.height ||
      pred.labels.size() != truth.labels.size()) {
    throw InvalidArgument("dice: mask dimensions differ");
  }
  int K = 1;
  for (auto l : pred.labels) K = std::max(K, l + 1);
  for (auto l : truth.labels) K = std::max(K, l + 1);
  if (K > 8) throw InvalidArgument("dice: at most 8 labels supported for matching");

  std::vector<std::size_t> inter(static_cast<std::size_t>(K) * K, 0);
  std::vector<std::size_t> n_pred(K, 0), n_truth(K, 0);
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    ++inter[static_cast<std::size_t>(pred.labels[i]) * K + truth.labels[i]];
    ++n_pred[pred.labels[i]];
    ++n_truth[truth.labels[i]];
  }
  auto class_dice = [&](int p, int t) {
    const std::size_t denom = n_pred[p] + n_truth[t];
    if (denom == 0) return 1.0;
    return 2.0 * static_cast<double>(inter[static_cast<std::size_t>(p) * K + t]) /
           static_cast<double>(denom);
  };

  std::vector<int> perm(K);
  std::iota(perm.begin(), perm.end(), 0);
  DiceResult best;
  best.mean = -1.0;
  do {
    double total = 0.0;
    for (int p = 0; p < K; ++p) total += class_dice(p, perm[p]);
    const double mean = total / K;
    if (mean > best.mean) {
      best.mean = mean;
      best.mapping = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  best.per_class.assign(K, 0.0);
  for (int p = 0; p < K; ++p) best.per_class[best.mapping[p]] = class_dice(p, best.mapping[p]);
  return best;
}

double binary_dice(const LabelImage& a, const LabelImage& b) {
  if (a.labels.size() != b.labels.size() || a.width != b.width || a.height != b.height) {
    throw InvalidArgument("binary_dice: mask dimensions differ");
  }
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const bool fa = a.labels[i] != 0, fb = b.labels[i] != 0;
    na += fa;
    nb += fb;
    both += fa && fb;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw InvalidArgument("psnr: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw InvalidArgument("ssim: shape mismatch");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  if (a.width() < kWin || a.height() < kWin) throw InvalidArgument("ssim: image smaller than 11x11");
  constexpr double C1 = 0.01 * 0.01;
  constexpr double C2 = 0.03 * 0.03;

  double w[kWin][kWin];
  double wsum = 0.0;
  for (int y = 0; y < kWin; ++y)
    for (int x = 0; x < kWin; ++x) {
      const double dy = y - kWin / 2, dx = x - kWin / 2;
      w[y][x] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
      wsum += w[y][x];
    }
  for (auto& row : w)
    for (double& v : row) v /= wsum;

  double total = 0.0;
  int windows = 0;
  for (int r0 = 0; r0 + kWin <= a.height(); ++r0) {
    for (int c0 = 0; c0 + kWin <= a.width(); ++c0) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int y = 0; y < kWin; ++y)
        for (int x = 0; x < kWin; ++x) {
          const double va = a.at(r0 + y, c0 + x), vb = b.at(r0 + y, c0 + x);
          const double g = w[y][x];
          ma += g * va;
          mb += g * vb;
          saa += g * va * va;
          sbb += g * vb * vb;
          sab += g * va * vb;
        }
      const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
      total += ((2 * ma * mb + C1) * (2 * cov + C2)) /
               ((ma * ma + mb * mb + C1) * (var_a + var_b + C2));
      ++windows;
    }
  }
  return total / windows;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

MetricReport summarize(std::vector<MetricRow> rows) {
  MetricReport r;
  std::vector<double> d, p, s;
  for (const auto& row : rows) {
    d.push_back(row.dice);
    p.push_back(row.psnr);
    s.push_back(row.ssim);
  }
  std::tie(r.dice_mean, r.dice_std) = mean_std(d);
  std::tie(r.psnr_mean, r.psnr_std) = mean_std(p);
  std::tie(r.ssim_mean, r.ssim_std) = mean_std(s);
  r.rows = std::move(rows);
  return r;
}

void write_metric_csv(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  char line[160];
  out << "image,dice,psnr,ssim\n";
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f\n", r.id.c_str(), r.dice, r.psnr, r.ssim);
    out << line;
  }
  std::snprintf(line, sizeof line, "mean,%.6f,%.6f,%.6f\nstd,%.6f,%.6f,%.6f\n", report.dice_mean,
                report.psnr_mean, report.ssim_mean, report.dice_std, report.psnr_std,
                report.ssim_std);
  out << line;
}

MetricReport read_metric_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "image,dice,psnr,ssim") throw FormatError("unexpected metric CSV header", 0);
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    MetricRow r;
    std::string field;
    std::getline(ss, r.id, ',');
    if (r.id == "mean" || r.id == "std") continue;
    std::getline(ss, field, ',');
    r.dice = std::stod(field);
    std::getline(ss, field, ',');
    r.psnr = std::stod(field);
    std::getline(ss, field, ',');
    r.ssim = std::stod(field);
    rows.push_back(r);
  }
  return summarize(std::move(rows));
}

}  // namespace lmid
