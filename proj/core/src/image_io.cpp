#include "lmid/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "lmid/errors.hpp"

namespace lmid {
namespace {

static_assert(std::endian::native == std::endian::little,
              "LMIF/LMCK I/O assumes a little-endian host");

constexpr char kLmifMagic[4] = {'L', 'M', 'I', 'F'};
constexpr std::size_t kLmifHeader = 12;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::uint32_t read_u32(const std::vector<unsigned char>& b, std::size_t off) {
  std::uint32_t v;
  std::memcpy(&v, b.data() + off, 4);
  return v;
}

void append_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  const auto* p = reinterpret_cast<const unsigned char*>(&v);
  b.insert(b.end(), p, p + 4);
}

// Minimal PNM header tokenizer: skips whitespace and '#' comments.
class PnmHeader {
 public:
  explicit PnmHeader(const std::vector<unsigned char>& bytes) : b_(bytes) {}

  int next_int() {
    skip_space();
    const std::size_t start = pos_;
    long long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 1'000'000) throw FormatError("PGM header value too large", start);
      ++pos_;
    }
    if (pos_ == start) throw FormatError("expected integer in PGM header", start);
    return static_cast<int>(v);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) {
      throw FormatError("missing whitespace before PGM raster", pos_);
    }
    return pos_ + 1;
  }

  std::size_t pos() const { return pos_; }
  void set_pos(std::size_t p) { pos_ = p; }

 private:
  void skip_space() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& b_;
  std::size_t pos_ = 0;
};

struct RawPgm {
  int width;
  int height;
  std::vector<unsigned char> pixels;
};

RawPgm parse_pgm(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("bad PGM magic, expected P5", 0);
  }
  PnmHeader h(bytes);
  h.set_pos(2);
  const std::size_t dims_at = h.pos();
  const int w = h.next_int();
  const int hgt = h.next_int();
  if (w <= 0 || hgt <= 0) throw FormatError("PGM dimensions must be positive", dims_at);
  const std::size_t maxval_at = h.pos();
  const int maxval = h.next_int();
  if (maxval != 255) throw FormatError("only maxval 255 is supported", maxval_at);
  const std::size_t start = h.raster_start();
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(hgt);
  if (bytes.size() < start + n) {
    throw FormatError("truncated PGM raster: need " + std::to_string(n) + " bytes",
                      bytes.size());
  }
  return {w, hgt, std::vector<unsigned char>(bytes.begin() + start, bytes.begin() + start + n)};
}

std::vector<unsigned char> pgm_bytes(int w, int h, const std::vector<unsigned char>& pixels) {
  const std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::string extension_of(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace

Image load_pgm(const std::filesystem::path& path) {
  const auto raw = parse_pgm(read_all(path));
  std::vector<float> data(raw.pixels.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<float>(raw.pixels[i]) / 255.0f;
  }
  return Image(raw.width, raw.height, std::move(data));
}

void save_pgm(const Image& img, const std::filesystem::path& path) {
  std::vector<unsigned char> px(img.size());
  const auto src = img.data();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const float v = std::isnan(src[i]) ? 0.0f : std::clamp(src[i], 0.0f, 1.0f);
    px[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  write_all(path, pgm_bytes(img.width(), img.height(), px));
}

LabelImage load_label_pgm(const std::filesystem::path& path) {
  auto raw = parse_pgm(read_all(path));
  return {raw.width, raw.height, LabelMask(raw.pixels.begin(), raw.pixels.end())};
}

void save_label_pgm(const LabelImage& mask, const std::filesystem::path& path) {
  if (mask.labels.size() != static_cast<std::size_t>(mask.width) * mask.height) {
    throw InvalidArgument("label mask size does not match dimensions");
  }
  write_all(path, pgm_bytes(mask.width, mask.height,
                            std::vector<unsigned char>(mask.labels.begin(), mask.labels.end())));
}

std::vector<Image> load_lmif_planes(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kLmifMagic, 4) != 0) {
    throw FormatError("bad LMIF magic", 0);
  }
  if (bytes.size() < kLmifHeader) throw FormatError("truncated LMIF header", bytes.size());
  const std::uint32_t w = read_u32(bytes, 4);
  const std::uint32_t h = read_u32(bytes, 8);
  if (w == 0 || h == 0 || w > (1u << 15) || h > (1u << 15)) {
    throw FormatError("invalid LMIF dimensions", 4);
  }
  const std::size_t plane_bytes = std::size_t{w} * h * 4;
  const std::size_t payload = bytes.size() - kLmifHeader;
  if (payload == 0 || payload % plane_bytes != 0) {
    // Report where the last complete plane would have ended.
    throw FormatError("truncated LMIF payload", kLmifHeader + (payload / plane_bytes) * plane_bytes);
  }
  std::vector<Image> planes;
  for (std::size_t off = kLmifHeader; off < bytes.size(); off += plane_bytes) {
    std::vector<float> data(std::size_t{w} * h);
    std::memcpy(data.data(), bytes.data() + off, plane_bytes);
    planes.emplace_back(static_cast<int>(w), static_cast<int>(h), std::move(data));
  }
  return planes;
}

void save_lmif_planes(const std::vector<Image>& planes, const std::filesystem::path& path) {
  if (planes.empty()) throw InvalidArgument("save_lmif_planes: no planes");
  std::vector<unsigned char> out(kLmifMagic, kLmifMagic + 4);
  append_u32(out, static_cast<std::uint32_t>(planes.front().width()));
  append_u32(out, static_cast<std::uint32_t>(planes.front().height()));
  for (const auto& p : planes) {
    if (!p.same_shape(planes.front())) throw InvalidArgument("LMIF planes differ in shape");
    const auto* raw = reinterpret_cast<const unsigned char*>(p.data().data());
    out.insert(out.end(), raw, raw + p.size() * sizeof(float));
  }
  write_all(path, out);
}

Image load_lmif(const std::filesystem::path& path) {
  auto planes = load_lmif_planes(path);
  if (planes.size() != 1) {
    throw FormatError("expected a single-plane LMIF file, found " +
                          std::to_string(planes.size()) + " planes",
                      kLmifHeader);
  }
  return std::move(planes.front());
}

void save_lmif(const Image& img, const std::filesystem::path& path) {
  save_lmif_planes({img}, path);
}

Image load_image(const std::filesystem::path& path) {
  const auto ext = extension_of(path);
  if (ext == ".pgm") return load_pgm(path);
  if (ext == ".lmif") return load_lmif(path);
  throw InvalidArgument("unsupported image extension: " + path.string());
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const auto ext = extension_of(path);
  if (ext == ".pgm") return save_pgm(img, path);
  if (ext == ".lmif") return save_lmif(img, path);
  throw InvalidArgument("unsupported image extension: " + path.string());
}

}  // namespace lmid
