#include "lmid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "lmid/errors.hpp"
#include "lmid/rng.hpp"

namespace lmid {
namespace {

std::string index_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", i);
  return buf;
}

struct Texture {
  double fx, fy, phase;
};

}  // namespace

Phantom gen_phantom(std::uint64_t seed, int size, int k_tissue) {
  if (size < 16) throw InvalidArgument("gen_phantom: size must be >= 16");
  if (k_tissue < 2 || k_tissue > static_cast<int>(kTargetIntensities.size())) {
    throw InvalidArgument("gen_phantom: k_tissue must be in [2,5]");
  }
  Rng rng = make_rng(seed, "phantom");
  const std::size_t n = static_cast<std::size_t>(size) * size;
  Phantom ph{{size, size, LabelMask(n, 0)}, Image(size, size), Image(size, size), seed, k_tissue};

  const int n_ellipses = 3 + static_cast<int>(rng() % 4);
  for (int e = 0; e < n_ellipses; ++e) {
    const double cy = size * (0.2 + 0.6 * uniform01(rng));
    const double cx = size * (0.2 + 0.6 * uniform01(rng));
    const double ay = size * (0.12 + 0.23 * uniform01(rng));
    const double ax = size * (0.12 + 0.23 * uniform01(rng));
    const double theta = std::numbers::pi * uniform01(rng);
    const auto label = static_cast<std::uint8_t>(1 + rng() % (k_tissue - 1));
    const double c = std::cos(theta), s = std::sin(theta);
    for (int r = 0; r < size; ++r) {
      for (int col = 0; col < size; ++col) {
        const double dy = r + 0.5 - cy, dx = col + 0.5 - cx;
        const double u = (c * dx + s * dy) / ax;
        const double v = (-s * dx + c * dy) / ay;
        if (u * u + v * v <= 1.0) ph.mask.labels[static_cast<std::size_t>(r) * size + col] = label;
      }
    }
  }

  std::vector<Texture> textures(k_tissue);
  for (auto& t : textures) {
    t.fx = 0.5 + 1.5 * uniform01(rng);
    t.fy = 0.5 + 1.5 * uniform01(rng);
    t.phase = 2.0 * std::numbers::pi * uniform01(rng);
  }
  for (int r = 0; r < size; ++r) {
    for (int col = 0; col < size; ++col) {
      const std::size_t i = static_cast<std::size_t>(r) * size + col;
      const int label = ph.mask.labels[i];
      const Texture& tx = textures[label];
      const double texture =
          kTextureAmplitude *
          std::sin(2.0 * std::numbers::pi * (tx.fx * col + tx.fy * r) / size + tx.phase);
      const double a = kSourceIntensities[label] + texture + kPixelNoise * standard_normal(rng);
      const double b = kTargetIntensities[label] + texture + kPixelNoise * standard_normal(rng);
      ph.modality_a[i] = static_cast<float>(std::clamp(a, 0.0, 1.0));
      ph.modality_b[i] = static_cast<float>(std::clamp(b, 0.0, 1.0));
    }
  }
  return ph;
}

Dataset gen_dataset(const std::filesystem::path& root, const DatasetSpec& spec) {
  if (spec.n_train < 1 || spec.n_test < 1) throw InvalidArgument("gen_dataset: counts must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(root / "train", ec);
  fs::create_directories(root / "test", ec);
  if (ec || !fs::is_directory(root / "train") || !fs::is_directory(root / "test")) {
    throw IoError("cannot create dataset directories under " + root.string());
  }

  Dataset ds;
  ds.spec = spec;
  std::ostringstream files;
  for (int i = 0; i < spec.n_train; ++i) {
    const auto ph = gen_phantom(derive_seed(spec.seed, "phantom", i), spec.size, spec.k_tissue);
    const std::string rel = "train/f" + index_id(i) + ".lmif";
    save_lmif(ph.modality_b, root / rel);
    files << "file=" << rel << "\n";
    ds.train.push_back(ph.modality_b);
  }
  for (int j = 0; j < spec.n_test; ++j) {
    const int idx = spec.n_train + j;
    const auto ph = gen_phantom(derive_seed(spec.seed, "phantom", idx), spec.size, spec.k_tissue);
    const std::string id = index_id(j);
    save_lmif(ph.modality_a, root / ("test/g" + id + ".lmif"));
    save_lmif(ph.modality_b, root / ("test/f" + id + ".lmif"));
    save_label_pgm(ph.mask, root / ("test/mask" + id + ".pgm"));
    files << "file=test/g" << id << ".lmif\nfile=test/f" << id << ".lmif\nfile=test/mask" << id
          << ".pgm\n";
    ds.test.push_back({id, ph.modality_a, ph.modality_b, ph.mask});
  }

  std::ofstream m(root / "manifest.txt", std::ios::trunc);
  if (!m) throw IoError("cannot write manifest under " + root.string());
  auto table = [&](const auto& t) {
    std::ostringstream s;
    for (int k = 0; k < spec.k_tissue; ++k) s << (k ? "," : "") << t[k];
    return s.str();
  };
  m << "seed=" << spec.seed << "\n"
    << "size=" << spec.size << "\n"
    << "k_tissue=" << spec.k_tissue << "\n"
    << "n_train=" << spec.n_train << "\n"
    << "n_test=" << spec.n_test << "\n"
    << "source_intensities=" << table(kSourceIntensities) << "\n"
    << "target_intensities=" << table(kTargetIntensities) << "\n"
    << files.str();
  if (!m) throw IoError("failed writing manifest");
  return ds;
}

namespace {

std::multimap<std::string, std::string> read_kv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::multimap<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("manifest line without '='", 0);
    kv.emplace(line.substr(0, eq), line.substr(eq + 1));
  }
  return kv;
}

std::string need(const std::multimap<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("manifest missing key '" + key + "'", 0);
  return it->second;
}

}  // namespace

DatasetSpec read_manifest(const std::filesystem::path& root) {
  const auto kv = read_kv(root / "manifest.txt");
  DatasetSpec s;
  try {
    s.seed = std::stoull(need(kv, "seed"));
    s.size = std::stoi(need(kv, "size"));
    s.k_tissue = std::stoi(need(kv, "k_tissue"));
    s.n_train = std::stoi(need(kv, "n_train"));
    s.n_test = std::stoi(need(kv, "n_test"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("bad manifest value: ") + e.what(), 0);
  } catch (const std::out_of_range& e) {
    throw FormatError(std::string("manifest value out of range: ") + e.what(), 0);
  }
  return s;
}

Dataset load_dataset(const std::filesystem::path& root) {
  Dataset ds;
  ds.spec = read_manifest(root);
  for (int i = 0; i < ds.spec.n_train; ++i) {
    ds.train.push_back(load_lmif(root / ("train/f" + index_id(i) + ".lmif")));
  }
  for (int j = 0; j < ds.spec.n_test; ++j) {
    const std::string id = index_id(j);
    ds.test.push_back({id, load_lmif(root / ("test/g" + id + ".lmif")),
                       load_lmif(root / ("test/f" + id + ".lmif")),
                       load_label_pgm(root / ("test/mask" + id + ".pgm"))});
  }
  return ds;
}

std::vector<std::string> audit_zero_shot(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<std::string> problems;
  const auto kv = read_kv(root / "manifest.txt");
  std::set<std::string> declared;
  for (auto [it, end] = kv.equal_range("file"); it != end; ++it) {
    if (it->second.rfind("train/", 0) == 0) declared.insert(it->second.substr(6));
  }
  std::set<std::string> present;
  for (const auto& e : fs::directory_iterator(root / "train")) {
    const std::string name = e.path().filename().string();
    present.insert(name);
    if (name.empty() || name[0] != 'f' || e.path().extension() != ".lmif") {
      problems.push_back("unexpected file in train/: " + name);
    } else if (!declared.count(name)) {
      problems.push_back("train/" + name + " not listed in manifest");
    }
  }
  for (const auto& d : declared) {
    if (!present.count(d)) problems.push_back("manifest lists missing train/" + d);
  }
  return problems;
}

}  // namespace lmid
