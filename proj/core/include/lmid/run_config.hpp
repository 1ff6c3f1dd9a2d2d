#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lmid/lmi.hpp"
#include "lmid/schedule.hpp"
#include "lmid/score_model.hpp"
#include "lmid/sde.hpp"
#include "lmid/synth.hpp"
#include "lmid/training.hpp"

namespace lmid {

// Every tunable of the pipeline as one flat record. Text form is one
// `key=value` per line; `#` starts a comment.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;

  LmiConfig lmi;
  double sigma_min = 0.01;
  double sigma_max = 1.0;
  ArchSpec arch;

  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch = 16;
  std::uint64_t iterations = 5000;
  double t_min = 1e-3;
  double t_max = 1.0;
  LossWeighting loss_weighting = LossWeighting::kSigma2;

  int steps = 200;
  Guidance guidance = Guidance::kLmi;
  double t_start = 0.5;
  int dump_every = 0;

  int kmeans_k = 5;

  int n_train = 64;
  int n_test = 16;
  int size = 32;
  int k_tissue = 5;

  // Applies one `key=value` assignment. Throws ConfigError on an unknown key
  // or unparsable value.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  // Range and consistency checks; throws ConfigError.
  void validate() const;

  std::string to_text() const;

  NoiseSchedule schedule() const { return {sigma_min, sigma_max}; }
  ArchSpec resolved_arch() const;  // arch with cond_channels taken from lmi.mode
  AdamState adam() const;
  TrainConfig train_config() const;
  SamplerConfig sampler_config() const;
  DatasetSpec dataset_spec() const;

  // Independent per-purpose seeds split from `seed`.
  std::uint64_t seed_for(std::string_view purpose) const;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace lmid
