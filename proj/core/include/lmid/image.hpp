#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lmid {

struct Pixel {
  int row = 0;
  int col = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Row-major 2D scalar grid. Images proper hold values in [0,1]; the same type
// carries unconstrained fields (noisy diffusion states, score fields).
class Image {
 public:
  Image() = default;
  Image(int width, int height, float fill = 0.0f);
  Image(int width, int height, std::vector<float> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int row, int col) { return data_[index(row, col)]; }
  float at(int row, int col) const { return data_[index(row, col)]; }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  std::vector<float>& storage() noexcept { return data_; }

  bool contains(Pixel p) const noexcept {
    return p.row >= 0 && p.row < height_ && p.col >= 0 && p.col < width_;
  }
  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }
  // True when every value is finite and inside [0,1].
  bool in_unit_range() const noexcept;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

using ScoreField = Image;

class QuantizedImage {
 public:
  QuantizedImage() = default;
  QuantizedImage(int width, int height, int levels, std::vector<std::uint8_t> labels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int levels() const noexcept { return levels_; }
  std::uint8_t at(int row, int col) const {
    return labels_[static_cast<std::size_t>(row) * width_ + col];
  }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  bool contains(Pixel p) const noexcept {
    return p.row >= 0 && p.row < height_ && p.col >= 0 && p.col < width_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int levels_ = 0;
  std::vector<std::uint8_t> labels_;
};

// Square (2r+1)^2 neighbourhood, edge-clamped, in row-major scan order.
struct Patch {
  Pixel center;
  int radius = 0;
  int levels = 0;
  std::vector<std::uint8_t> values;
};

// Max supported quantization levels (labels are stored as bytes).
inline constexpr int kMaxLevels = 256;

// label = floor(v * levels), with v = 1 mapped to levels - 1. Values outside
// [0,1] are clamped first so noisy diffusion states can be quantized on the
// same grid as clean images.
QuantizedImage quantize(const Image& img, int levels);
std::uint8_t quantize_value(float v, int levels) noexcept;

Patch extract_patch(const QuantizedImage& qimg, Pixel center, int radius);

// Affine rescale to [0,1]; a constant image maps to all zeros.
Image normalize_minmax(const Image& img);
Image clamp_unit(Image img);

}  // namespace lmid
