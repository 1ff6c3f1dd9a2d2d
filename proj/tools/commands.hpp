#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lmid/run_config.hpp"
#include "lmid/segmetrics.hpp"

namespace lmid::cli {

namespace fs = std::filesystem;

// Resolved configuration plus the keys the user set explicitly (from a config
// file or --set). Explicit keys are checked against checkpoints.
struct Settings {
  RunConfig cfg;
  std::set<std::string> explicit_keys;

  void apply(const std::string& assignment);  // "key=value"
  void apply_file(const fs::path& path);
};

inline constexpr const char* kResolvedConfig = "resolved.cfg";
inline constexpr const char* kCheckpoint = "checkpoint.lmck";
inline constexpr const char* kLossCsv = "loss.csv";

void gen_data(const Settings& s, const fs::path& out);

struct TrainOptions {
  fs::path data;
  fs::path out;
  std::optional<fs::path> resume;
  std::uint64_t checkpoint_every = 0;  // 0: only at the end
  std::uint64_t log_every = 100;
};
void train(Settings s, const TrainOptions& opt, std::ostream& log);

struct TranslateOptions {
  fs::path data;
  fs::path checkpoint;
  fs::path out;
};
void translate(Settings s, const TranslateOptions& opt, std::ostream& log);

struct SegmentOptions {
  fs::path data;
  fs::path pred;
  fs::path out;
};
void segment(const Settings& s, const SegmentOptions& opt);

struct EvalOptions {
  fs::path data;
  fs::path pred;
  fs::path seg;
  fs::path out;  // CSV file
};
MetricReport eval(const Settings& s, const EvalOptions& opt);

struct VerifyOptions {
  fs::path out;
  int pairs = 100;
  int size = 32;
  int phantoms = 16;
};
// Returns true when every check passes.
bool verify(const Settings& s, const VerifyOptions& opt, std::ostream& log);

struct BenchRow {
  int threads = 0;
  double seconds = 0.0;  // best of the repetitions
  double pixels_per_second = 0.0;
  double speedup = 0.0;
};
struct BenchOptions {
  int size = 64;
  std::vector<int> threads = {1, 2, 4};
  int repeats = 5;
};
std::vector<BenchRow> bench(const Settings& s, const BenchOptions& opt, std::ostream& log);

// Checkpoint settings take precedence over defaults; explicitly set keys that
// disagree with the checkpoint raise ConfigError.
void adopt_checkpoint(Settings& s, const Checkpoint& ck);

std::string test_output_name(const std::string& prefix, const std::string& id,
                             const std::string& ext);

}  // namespace lmid::cli
