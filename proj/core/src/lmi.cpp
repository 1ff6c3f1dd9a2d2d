#include "lmid/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "lmid/errors.hpp"
#include "lmid/image_io.hpp"
#include "lmid/parallel.hpp"

namespace lmid {

void LmiConfig::validate() const {
  if (levels < 2 || levels > kMaxLevels) throw InvalidArgument("lmi: levels must be in [2,256]");
  if (radius < 1 || radius > 60) throw InvalidArgument("lmi: radius must be in [1,60]");
  if (search_radius < 0 || search_radius > 127) {
    throw InvalidArgument("lmi: search_radius must be in [0,127]");
  }
}

PDF JointPDF::marginal_first() const {
  PDF p{levels, std::vector<double>(levels, 0.0)};
  for (int a = 0; a < levels; ++a)
    for (int b = 0; b < levels; ++b) p.mass[a] += at(a, b);
  return p;
}

PDF JointPDF::marginal_second() const {
  PDF p{levels, std::vector<double>(levels, 0.0)};
  for (int a = 0; a < levels; ++a)
    for (int b = 0; b < levels; ++b) p.mass[b] += at(a, b);
  return p;
}

PDF histogram(const Patch& p) {
  PDF pdf{p.levels, std::vector<double>(p.levels, 0.0)};
  if (p.values.empty()) return pdf;
  std::vector<std::size_t> counts(p.levels, 0);
  for (auto v : p.values) ++counts.at(v);
  const double n = static_cast<double>(p.values.size());
  for (int l = 0; l < p.levels; ++l) pdf.mass[l] = static_cast<double>(counts[l]) / n;
  return pdf;
}

JointPDF joint_histogram(const Patch& a, const Patch& b) {
  if (a.values.size() != b.values.size()) {
    throw InvalidArgument("joint_histogram: patches differ in sample count");
  }
  if (a.levels != b.levels) throw InvalidArgument("joint_histogram: patches differ in levels");
  const int L = a.levels;
  JointPDF j{L, std::vector<double>(static_cast<std::size_t>(L) * L, 0.0)};
  if (a.values.empty()) return j;
  std::vector<std::size_t> counts(j.mass.size(), 0);
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    ++counts.at(static_cast<std::size_t>(a.values[k]) * L + b.values[k]);
  }
  const double n = static_cast<double>(a.values.size());
  for (std::size_t c = 0; c < counts.size(); ++c) j.mass[c] = static_cast<double>(counts[c]) / n;
  return j;
}

double entropy(const PDF& pdf) {
  double h = 0.0;
  for (double p : pdf.mass) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double mutual_information(const JointPDF& j) {
  const PDF pa = j.marginal_first();
  const PDF pb = j.marginal_second();
  double mi = 0.0;
  for (int a = 0; a < j.levels; ++a) {
    for (int b = 0; b < j.levels; ++b) {
      const double p = j.at(a, b);
      if (p > 0.0) mi += p * std::log(p / (pa.mass[a] * pb.mass[b]));
    }
  }
  return std::max(0.0, mi);
}

namespace {

// Labels with an edge-replicated border of `pad` pixels, so neighbourhood
// reads need no clamping.
class PaddedLabels {
 public:
  PaddedLabels(const QuantizedImage& q, int pad)
      : pad_(pad), stride_(q.width() + 2 * pad), data_(static_cast<std::size_t>(stride_) *
                                                       (q.height() + 2 * pad)) {
    for (int r = -pad; r < q.height() + pad; ++r) {
      const int rr = std::clamp(r, 0, q.height() - 1);
      std::uint8_t* row = &data_[static_cast<std::size_t>(r + pad) * stride_];
      for (int c = -pad; c < q.width() + pad; ++c) {
        row[c + pad] = q.at(rr, std::clamp(c, 0, q.width() - 1));
      }
    }
  }
  const std::uint8_t* row(int r, int c) const {
    return &data_[static_cast<std::size_t>(r + pad_) * stride_ + (c + pad_)];
  }

 private:
  int pad_;
  int stride_;
  std::vector<std::uint8_t> data_;
};

// Count-form plug-in MI. With S(.) = sum c*ln(c) over the histogram counts of
// N samples:
//   H = ln N - S/N,   MI = H(A) + H(B) - H(A,B) = (S_AB - S_A - S_B)/N + ln N.
// S is built incrementally in scan order: bumping a count from c to c+1 adds
// (c+1)ln(c+1) - c ln c. The order is fixed per (image, pixel), so every
// caller gets the same bits, and for identical patches S_AB follows exactly
// the sequence of S_A, giving MI(X,X) == H(X).
class LocaleKernel {
 public:
  LocaleKernel(int levels, int radius)
      : levels_(levels),
        radius_(radius),
        side_(2 * radius + 1),
        n_(side_ * side_),
        log_n_(std::log(static_cast<double>(n_))),
        step_(n_, 0.0),
        joint_(static_cast<std::size_t>(levels) * levels, 0),
        counts_(levels, 0),
        keys_a_(n_),
        cells_(n_) {
    for (int c = 0; c < n_; ++c) {
      const double next = (c + 1) * std::log(static_cast<double>(c + 1));
      const double here = c > 0 ? c * std::log(static_cast<double>(c)) : 0.0;
      step_[c] = next - here;
    }
  }

  // S of the neighbourhood centred at (r, c); `distinct` gets the number of
  // occupied labels.
  double self_s(const PaddedLabels& p, int r, int c, int& distinct) {
    double s = 0.0;
    int k = 0;
    distinct = 0;
    for (int dr = -radius_; dr <= radius_; ++dr) {
      const std::uint8_t* row = p.row(r + dr, c - radius_);
      for (int q = 0; q < side_; ++q) {
        const int cnt = counts_[row[q]]++;
        distinct += cnt == 0;
        s += step_[cnt];
        cells_[k++] = row[q];
      }
    }
    for (int q = 0; q < n_; ++q) counts_[cells_[q]] = 0;
    return s;
  }

  // s_a, distinct_a: statistics of the reference neighbourhood at i.
  // s_cur(j): S of the current neighbourhood at j.
  template <typename SCur>
  LmiMatch run(const PaddedLabels& ref, const PaddedLabels& cur, int width, int height, Pixel i,
               double s_a, int distinct_a, const std::vector<Pixel>& offsets, SCur&& s_cur) {
    // H(A) = 0 bounds every candidate: report exact zero at the centre.
    if (distinct_a <= 1) return {0.0, {0, 0}};
    int k = 0;
    for (int dr = -radius_; dr <= radius_; ++dr) {
      const std::uint8_t* row = ref.row(i.row + dr, i.col - radius_);
      for (int c = 0; c < side_; ++c) keys_a_[k++] = row[c] * levels_;
    }

    LmiMatch best{-std::numeric_limits<double>::infinity(), {0, 0}};
    for (const Pixel& off : offsets) {
      const int jr = i.row + off.row, jc = i.col + off.col;
      if (jr < 0 || jr >= height || jc < 0 || jc >= width) continue;
      double s_ab = 0.0;
      k = 0;
      for (int dr = -radius_; dr <= radius_; ++dr) {
        const std::uint8_t* row = cur.row(jr + dr, jc - radius_);
        for (int c = 0; c < side_; ++c, ++k) {
          const int cell = keys_a_[k] + row[c];
          s_ab += step_[joint_[cell]++];
          cells_[k] = cell;
        }
      }
      for (int q = 0; q < n_; ++q) joint_[cells_[q]] = 0;
      const double mi = std::max(0.0, (s_ab - s_a - s_cur(jr, jc)) / n_ + log_n_);
      if (mi > best.value + kLmiTieTolerance) best = {mi, off};
    }
    return best;
  }

 private:
  int levels_;
  int radius_;
  int side_;
  int n_;
  double log_n_;
  std::vector<double> step_;
  std::vector<int> joint_;
  std::vector<int> counts_;
  std::vector<int> keys_a_;
  std::vector<int> cells_;
};

// Offsets within the search window, ordered by L1 norm then row-major.
std::vector<Pixel> search_order(int search_radius) {
  std::vector<Pixel> offsets;
  for (int dr = -search_radius; dr <= search_radius; ++dr)
    for (int dc = -search_radius; dc <= search_radius; ++dc) offsets.push_back({dr, dc});
  std::stable_sort(offsets.begin(), offsets.end(), [](const Pixel& a, const Pixel& b) {
    return std::abs(a.row) + std::abs(a.col) < std::abs(b.row) + std::abs(b.col);
  });
  return offsets;
}

void check_pair(const QuantizedImage& ref, const QuantizedImage& cur) {
  if (ref.width() != cur.width() || ref.height() != cur.height()) {
    throw InvalidArgument("lmi: reference and current images differ in dimensions");
  }
  if (ref.levels() != cur.levels()) throw InvalidArgument("lmi: level counts differ");
}

}  // namespace

LmiMatch lmi_point(const QuantizedImage& ref, const QuantizedImage& cur, Pixel i, int radius,
                   int search_radius) {
  check_pair(ref, cur);
  if (!ref.contains(i)) throw InvalidArgument("lmi_point: pixel outside image");
  if (radius < 1) throw InvalidArgument("lmi_point: radius must be >= 1");
  if (search_radius < 0) throw InvalidArgument("lmi_point: search radius must be >= 0");
  const PaddedLabels pr(ref, radius), pc(cur, radius + search_radius);
  LocaleKernel kernel(ref.levels(), radius);
  int distinct_a = 0, unused = 0;
  const double s_a = kernel.self_s(pr, i.row, i.col, distinct_a);
  return kernel.run(pr, pc, ref.width(), ref.height(), i, s_a, distinct_a,
                    search_order(search_radius),
                    [&](int r, int c) { return kernel.self_s(pc, r, c, unused); });
}

CondMap lmi_map(const QuantizedImage& ref, const QuantizedImage& cur, const LmiConfig& cfg,
                int threads) {
  cfg.validate();
  check_pair(ref, cur);
  if (ref.levels() != cfg.levels) throw InvalidArgument("lmi_map: quantization level mismatch");
  const int w = ref.width();
  const int h = ref.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  CondMap out{w, h, cfg.search_radius, std::vector<double>(n), std::vector<std::int8_t>(n),
              std::vector<std::int8_t>(n)};
  const auto offsets = search_order(cfg.search_radius);
  const PaddedLabels pr(ref, cfg.radius), pc(cur, cfg.radius + cfg.search_radius);

  // Per-pixel neighbourhood statistics, shared by every candidate pairing.
  std::vector<double> s_ref(n), s_cur(n);
  std::vector<int> distinct_ref(n);
  parallel_for(
      static_cast<std::size_t>(h),
      [&](std::size_t row_begin, std::size_t row_end) {
        LocaleKernel kernel(cfg.levels, cfg.radius);
        int unused = 0;
        for (auto r = static_cast<int>(row_begin); r < static_cast<int>(row_end); ++r) {
          for (int c = 0; c < w; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * w + c;
            s_ref[idx] = kernel.self_s(pr, r, c, distinct_ref[idx]);
            s_cur[idx] = kernel.self_s(pc, r, c, unused);
          }
        }
      },
      threads);

  parallel_for(
      static_cast<std::size_t>(h),
      [&](std::size_t row_begin, std::size_t row_end) {
        LocaleKernel kernel(cfg.levels, cfg.radius);
        const auto lookup = [&](int r, int c) { return s_cur[static_cast<std::size_t>(r) * w + c]; };
        for (auto r = static_cast<int>(row_begin); r < static_cast<int>(row_end); ++r) {
          for (int c = 0; c < w; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * w + c;
            const auto m = kernel.run(pr, pc, w, h, {r, c}, s_ref[idx], distinct_ref[idx],
                                      offsets, lookup);
            out.value[idx] = m.value;
            out.drow[idx] = static_cast<std::int8_t>(m.offset.row);
            out.dcol[idx] = static_cast<std::int8_t>(m.offset.col);
          }
        }
      },
      threads);
  return out;
}

CondMap lmi_map(const Image& ref, const Image& cur, const LmiConfig& cfg, int threads) {
  if (!ref.same_shape(cur)) {
    throw InvalidArgument("lmi_map: reference and current images differ in dimensions");
  }
  cfg.validate();
  return lmi_map(quantize(ref, cfg.levels), quantize(cur, cfg.levels), cfg, threads);
}

std::vector<Image> cond_planes(const CondMap& m, CondMode mode) {
  std::vector<Image> planes;
  Image value(m.width, m.height);
  for (std::size_t k = 0; k < m.value.size(); ++k) value[k] = static_cast<float>(m.value[k]);
  planes.push_back(std::move(value));
  if (mode == CondMode::kFull) {
    const float scale = m.search_radius > 0 ? 1.0f / static_cast<float>(m.search_radius) : 0.0f;
    Image dr(m.width, m.height);
    Image dc(m.width, m.height);
    for (std::size_t k = 0; k < m.value.size(); ++k) {
      dr[k] = static_cast<float>(m.drow[k]) * scale;
      dc[k] = static_cast<float>(m.dcol[k]) * scale;
    }
    planes.push_back(std::move(dr));
    planes.push_back(std::move(dc));
  }
  return planes;
}

std::vector<Image> zero_cond_planes(int width, int height, CondMode mode) {
  const int n = mode == CondMode::kFull ? 3 : 1;
  return std::vector<Image>(n, Image(width, height, 0.0f));
}

void save_condmap(const CondMap& m, const std::filesystem::path& path) {
  Image value(m.width, m.height);
  Image dr(m.width, m.height);
  Image dc(m.width, m.height);
  for (std::size_t k = 0; k < m.value.size(); ++k) {
    value[k] = static_cast<float>(m.value[k]);
    dr[k] = m.drow[k];
    dc[k] = m.dcol[k];
  }
  save_lmif_planes({value, dr, dc}, path);
}

CondMap load_condmap(const std::filesystem::path& path) {
  const auto planes = load_lmif_planes(path);
  if (planes.size() != 3) {
    throw FormatError("condition map needs 3 planes, found " + std::to_string(planes.size()), 12);
  }
  const int w = planes[0].width();
  const int h = planes[0].height();
  const std::size_t n = planes[0].size();
  CondMap m{w, h, 0, std::vector<double>(n), std::vector<std::int8_t>(n),
            std::vector<std::int8_t>(n)};
  int max_off = 0;
  for (std::size_t k = 0; k < n; ++k) {
    m.value[k] = planes[0][k];
    m.drow[k] = static_cast<std::int8_t>(planes[1][k]);
    m.dcol[k] = static_cast<std::int8_t>(planes[2][k]);
    max_off = std::max({max_off, std::abs(int{m.drow[k]}), std::abs(int{m.dcol[k]})});
  }
  m.search_radius = max_off;
  return m;
}

}  // namespace lmid
