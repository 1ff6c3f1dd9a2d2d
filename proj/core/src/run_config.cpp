#include "lmid/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "lmid/errors.hpp"
#include "lmid/rng.hpp"

namespace lmid {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_int(std::string_view key, std::string_view v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("config key '" + std::string(key) + "': expected an integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw ConfigError("config key '" + std::string(key) + "': expected a number, got '" + s + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false, got '" +
                    std::string(v) + "'");
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define LMID_INT(name, member, type)                                                       \
  Field {                                                                                   \
    name, [](RunConfig& c, std::string_view v) { c.member = parse_int<type>(name, v); },    \
        [](const RunConfig& c) { return std::to_string(c.member); }                         \
  }
#define LMID_DBL(name, member)                                                             \
  Field {                                                                                   \
    name, [](RunConfig& c, std::string_view v) { c.member = parse_double(name, v); },       \
        [](const RunConfig& c) { return fmt_double(c.member); }                             \
  }
#define LMID_BOOL(name, member)                                                            \
  Field {                                                                                   \
    name, [](RunConfig& c, std::string_view v) { c.member = parse_bool(name, v); },         \
        [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }         \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      LMID_INT("seed", seed, std::uint64_t),
      LMID_INT("threads", threads, int),
      LMID_INT("levels", lmi.levels, int),
      LMID_INT("radius", lmi.radius, int),
      LMID_INT("search_radius", lmi.search_radius, int),
      Field{"cond_mode",
            [](RunConfig& c, std::string_view v) {
              if (v == "full") c.lmi.mode = CondMode::kFull;
              else if (v == "value") c.lmi.mode = CondMode::kValueOnly;
              else throw ConfigError("config key 'cond_mode': expected full|value, got '" + std::string(v) + "'");
            },
            [](const RunConfig& c) {
              return std::string(c.lmi.mode == CondMode::kFull ? "full" : "value");
            }},
      LMID_DBL("sigma_min", sigma_min),
      LMID_DBL("sigma_max", sigma_max),
      LMID_INT("depth", arch.depth, int),
      LMID_INT("width", arch.width, int),
      LMID_INT("kernel", arch.kernel, int),
      LMID_INT("groups", arch.groups, int),
      LMID_INT("time_dim", arch.time_dim, int),
      LMID_BOOL("final_bias", arch.final_bias),
      LMID_BOOL("scale_by_sigma", arch.scale_by_sigma),
      LMID_BOOL("zero_init_final", arch.zero_init_final),
      LMID_DBL("lr", lr),
      LMID_DBL("beta1", beta1),
      LMID_DBL("beta2", beta2),
      LMID_DBL("eps", eps),
      LMID_INT("batch", batch, int),
      LMID_INT("iterations", iterations, std::uint64_t),
      LMID_DBL("t_min", t_min),
      LMID_DBL("t_max", t_max),
      Field{"loss_weighting",
            [](RunConfig& c, std::string_view v) { c.loss_weighting = parse_weighting(v); },
            [](const RunConfig& c) { return std::string(to_string(c.loss_weighting)); }},
      LMID_INT("steps", steps, int),
      Field{"guidance",
            [](RunConfig& c, std::string_view v) { c.guidance = parse_guidance(v); },
            [](const RunConfig& c) { return std::string(to_string(c.guidance)); }},
      LMID_DBL("t_start", t_start),
      LMID_INT("dump_every", dump_every, int),
      LMID_INT("kmeans_k", kmeans_k, int),
      LMID_INT("n_train", n_train, int),
      LMID_INT("n_test", n_test, int),
      LMID_INT("size", size, int),
      LMID_INT("k_tissue", k_tissue, int),
  };
  return f;
}

#undef LMID_INT
#undef LMID_DBL
#undef LMID_BOOL

const Field& find(std::string_view key) {
  for (const auto& f : fields()) {
    if (key == f.key) return f;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  find(trim(key)).set(*this, trim(value));
}

std::string RunConfig::get(std::string_view key) const { return find(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.emplace_back(f.key);
    return out;
  }();
  return k;
}

void RunConfig::validate() const {
  require(threads >= 0, "threads must be >= 0");
  require(lmi.levels >= 2 && lmi.levels <= 256, "levels must be in [2, 256]");
  require(lmi.radius >= 1, "radius must be >= 1");
  require(lmi.search_radius >= 0 && lmi.search_radius <= 127, "search_radius must be in [0, 127]");
  require(sigma_min > 0.0 && sigma_max > sigma_min, "need 0 < sigma_min < sigma_max");
  resolved_arch().validate();
  require(lr > 0.0, "lr must be > 0");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "betas must be in [0, 1)");
  require(eps > 0.0, "eps must be > 0");
  require(batch >= 1, "batch must be >= 1");
  require(t_min > 0.0 && t_min < t_max && t_max <= 1.0, "need 0 < t_min < t_max <= 1");
  require(steps >= 1, "steps must be >= 1");
  require(t_start >= 0.0 && t_start <= 1.0, "t_start must be in [0, 1]");
  require(dump_every >= 0, "dump_every must be >= 0");
  require(kmeans_k >= 1 && kmeans_k <= 8, "kmeans_k must be in [1, 8]");
  require(n_train >= 1 && n_test >= 1, "n_train and n_test must be >= 1");
  require(size >= 8, "size must be >= 8");
  require(k_tissue >= 2 && k_tissue <= 5, "k_tissue must be in [2, 5]");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += '=';
    out += f.get(*this);
    out += '\n';
  }
  return out;
}

ArchSpec RunConfig::resolved_arch() const {
  ArchSpec a = arch;
  a.cond_channels = lmi.cond_channels();
  return a;
}

AdamState RunConfig::adam() const {
  AdamState s;
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.iterations = iterations;
  t.batch = batch;
  t.t_min = t_min;
  t.t_max = t_max;
  t.seed = seed_for("train");
  t.weighting = loss_weighting;
  t.threads = threads;
  return t;
}

SamplerConfig RunConfig::sampler_config() const {
  SamplerConfig s;
  s.steps = steps;
  s.seed = seed_for("sample");
  s.lmi = lmi;
  s.guidance = guidance;
  s.t_start = t_start;
  s.dump_every = dump_every;
  s.threads = threads;
  return s;
}

DatasetSpec RunConfig::dataset_spec() const {
  DatasetSpec d;
  d.seed = seed_for("data");
  d.n_train = n_train;
  d.n_test = n_test;
  d.size = size;
  d.k_tissue = k_tissue;
  return d;
}

std::uint64_t RunConfig::seed_for(std::string_view purpose) const {
  return derive_seed(seed, purpose);
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      cfg.set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << cfg.to_text();
}

}  // namespace lmid
