#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "lmid/image.hpp"
#include "lmid/lmi.hpp"
#include "lmid/schedule.hpp"
#include "lmid/score_function.hpp"

namespace lmid {

// Encoder-decoder with skip connections. Each level is one block:
//   conv(k x k) -> GroupNorm -> SiLU -> + Linear(time embedding)
// with 2x average pooling on the way down and nearest upsampling + skip
// concatenation on the way up, followed by a k x k output convolution.
// width == 0 collapses the net to the output convolution alone.
struct ArchSpec {
  int cond_channels = 3;
  int depth = 2;
  int width = 16;
  int kernel = 3;          // 1 or 3
  int groups = 4;          // 0 disables GroupNorm
  int time_dim = 32;       // 0 disables time conditioning
  bool final_bias = true;
  bool scale_by_sigma = true;   // output divided by sigma(t)
  bool zero_init_final = true;

  int in_channels() const noexcept { return 1 + cond_channels; }
  void validate() const;
  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

// Number of parameters implied by the architecture.
std::size_t parameter_count(const ArchSpec& arch);

class ScoreModel : public ScoreFunction {
 public:
  ScoreModel() = default;
  ScoreModel(ArchSpec arch, NoiseSchedule schedule, std::uint64_t init_seed);
  ScoreModel(ArchSpec arch, NoiseSchedule schedule, std::vector<float> params);

  const ArchSpec& arch() const noexcept { return arch_; }
  const NoiseSchedule& schedule() const noexcept { return schedule_; }
  std::span<const float> params() const noexcept { return params_; }
  std::vector<float>& mutable_params() noexcept { return params_; }

  int cond_channels() const override { return arch_.cond_channels; }
  ScoreField score(const Image& x, std::span<const Image> cond, double t) const override;

  ScoreField forward(const Image& x, std::span<const Image> cond, double t) const;
  // Gradient of <upstream, forward(x, cond, t)> with respect to the parameters.
  std::vector<float> backward(const Image& x, std::span<const Image> cond, double t,
                              const ScoreField& upstream) const;
  // Fused pass: returns the output and writes the gradient of <g(out), out>
  // where g is supplied by `upstream_of` after the forward pass.
  ScoreField forward_backward(const Image& x, std::span<const Image> cond, double t,
                              const std::function<ScoreField(const ScoreField&)>& upstream_of,
                              std::vector<float>& grad) const;

 private:
  ArchSpec arch_;
  NoiseSchedule schedule_;
  std::vector<float> params_;
};

// Double-precision forward over a shadow copy of the parameters. Used by the
// finite-difference gradient check.
std::vector<double> forward_f64(const ArchSpec& arch, const NoiseSchedule& schedule,
                                std::span<const double> params, const Image& x,
                                std::span<const Image> cond, double t);
// Same backward pass as ScoreModel::backward, instantiated in double.
std::vector<double> backward_f64(const ArchSpec& arch, const NoiseSchedule& schedule,
                                 std::span<const double> params, const Image& x,
                                 std::span<const Image> cond, double t, const ScoreField& upstream);

struct AdamState {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<float> m;
  std::vector<float> v;

  static AdamState zeros(std::size_t n, double lr = 3e-4, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// Bias-corrected adaptive-moment update in place.
void adam_step(AdamState& state, std::span<float> params, std::span<const float> grads);

struct Checkpoint {
  ScoreModel model;
  AdamState optimizer;
  LmiConfig lmi;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// "LMCK" container. See README for the byte layout.
void save_checkpoint(const ScoreModel& model, const AdamState& optimizer, const LmiConfig& lmi,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lmid
