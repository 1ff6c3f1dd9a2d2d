#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lmid/image.hpp"

namespace lmid {

using LabelMask = std::vector<std::uint8_t>;

// Binary PGM "P5", maxval 255. Pixel byte b maps to b / 255.
Image load_pgm(const std::filesystem::path& path);
// Values are clamped to [0,1] and rounded to the nearest of 256 levels.
void save_pgm(const Image& img, const std::filesystem::path& path);

struct LabelImage {
  int width = 0;
  int height = 0;
  LabelMask labels;
};
// Label masks are P5 files storing the label bytes verbatim.
LabelImage load_label_pgm(const std::filesystem::path& path);
void save_label_pgm(const LabelImage& mask, const std::filesystem::path& path);

// "LMIF" float container: magic, u32 LE width, u32 LE height, then
// width*height LE float32 per plane. Multi-plane files simply concatenate
// planes after the header.
std::vector<Image> load_lmif_planes(const std::filesystem::path& path);
void save_lmif_planes(const std::vector<Image>& planes, const std::filesystem::path& path);
Image load_lmif(const std::filesystem::path& path);
void save_lmif(const Image& img, const std::filesystem::path& path);

// Dispatches on extension: .pgm or .lmif.
Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

}  // namespace lmid
