#include "lmid/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmid/errors.hpp"

namespace lmid {

Image::Image(int width, int height, float fill) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("image dimensions must be positive");
  }
  width_ = width;
  height_ = height;
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Image::Image(int width, int height, std::vector<float> data) {
  if (width <= 0 || height <= 0) {
    throw InvalidArgument("image dimensions must be positive");
  }
  if (data.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidArgument("image data length " + std::to_string(data.size()) +
                          " does not match " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  width_ = width;
  height_ = height;
  data_ = std::move(data);
}

bool Image::in_unit_range() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; });
}

QuantizedImage::QuantizedImage(int width, int height, int levels,
                               std::vector<std::uint8_t> labels)
    : width_(width), height_(height), levels_(levels), labels_(std::move(labels)) {
  if (levels < 2 || levels > kMaxLevels) {
    throw InvalidArgument("quantization levels must be in [2, 256]");
  }
  if (labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidArgument("label count does not match dimensions");
  }
  for (auto l : labels_) {
    if (l >= levels) throw InvalidArgument("label exceeds level count");
  }
}

std::uint8_t quantize_value(float v, int levels) noexcept {
  if (!(v > 0.0f)) return 0;  // also maps NaN to 0
  if (v >= 1.0f) return static_cast<std::uint8_t>(levels - 1);
  const auto label = static_cast<int>(std::floor(static_cast<double>(v) * levels));
  return static_cast<std::uint8_t>(std::min(label, levels - 1));
}

QuantizedImage quantize(const Image& img, int levels) {
  if (levels < 2 || levels > kMaxLevels) {
    throw InvalidArgument("quantize: levels must be in [2, 256], got " + std::to_string(levels));
  }
  std::vector<std::uint8_t> labels(img.size());
  const auto src = img.data();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = quantize_value(src[i], levels);
  }
  return QuantizedImage(img.width(), img.height(), levels, std::move(labels));
}

Patch extract_patch(const QuantizedImage& qimg, Pixel center, int radius) {
  if (!qimg.contains(center)) {
    throw InvalidArgument("extract_patch: center (" + std::to_string(center.row) + "," +
                          std::to_string(center.col) + ") outside image");
  }
  if (radius < 1) throw InvalidArgument("extract_patch: radius must be >= 1");
  Patch p{center, radius, qimg.levels(), {}};
  const int side = 2 * radius + 1;
  p.values.reserve(static_cast<std::size_t>(side) * side);
  for (int dr = -radius; dr <= radius; ++dr) {
    const int r = std::clamp(center.row + dr, 0, qimg.height() - 1);
    for (int dc = -radius; dc <= radius; ++dc) {
      const int c = std::clamp(center.col + dc, 0, qimg.width() - 1);
      p.values.push_back(qimg.at(r, c));
    }
  }
  return p;
}

Image normalize_minmax(const Image& img) {
  Image out = img;
  if (img.empty()) return out;
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  const float range = *hi - *lo;
  for (auto& v : out.data()) {
    v = range > 0.0f ? (v - *lo) / range : 0.0f;
  }
  return out;
}

Image clamp_unit(Image img) {
  for (auto& v : img.data()) {
    v = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
  }
  return img;
}

}  // namespace lmid
