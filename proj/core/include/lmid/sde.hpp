#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lmid/image.hpp"
#include "lmid/lmi.hpp"
#include "lmid/rng.hpp"
#include "lmid/schedule.hpp"
#include "lmid/score_function.hpp"

namespace lmid {

enum class Guidance {
  kLmi,      // conditioned reverse SDE from t = 1
  kPerturb,  // noise the source to t_start, denoise with zeroed conditioning
  kNone,     // unconditioned reverse SDE from t = 1
};

struct SamplerConfig {
  int steps = 200;
  std::uint64_t seed = 0;
  LmiConfig lmi;
  Guidance guidance = Guidance::kLmi;
  double t_start = 0.5;  // perturb mode only
  int dump_every = 0;    // 0 disables trajectory dumps
  std::filesystem::path dump_dir;
  int threads = 0;       // workers for the per-step lmi_map
};

// x_t = x0 + sigma(t) z, z ~ N(0, I) per pixel.
Image perturb(const Image& x0, double t, const NoiseSchedule& schedule, Rng& rng);

// Score of the Gaussian perturbation kernel: -(xt - x0) / sigma(t)^2.
ScoreField dsm_target(const Image& x0, const Image& xt, double t, const NoiseSchedule& schedule);

// 1/2 * mean over pixels of |s(xt, cond, t) - dsm_target(x0, xt, t)|^2.
double dsm_loss(const ScoreFunction& model, const Image& x0, const Image& xt,
                std::span<const Image> cond, double t, const NoiseSchedule& schedule);

// Draws xt = perturb(x0, t), conditions on lmi_map(x0, xt) and returns the
// loss above.
double dsm_loss(const ScoreFunction& model, const Image& x0, double t, Rng& rng,
                const LmiConfig& lmi, const NoiseSchedule& schedule);

// One Euler-Maruyama step of the reverse SDE going from t to t - dt:
//   x += g2 * score * dt + sqrt(g2 * dt) * z,   g2 = d(sigma^2)/dt at t.
// Pass noise_scale = 0 for the drift-only recursion.
void reverse_em_step(Image& x, const ScoreField& score, double g2, double dt, Rng& rng,
                     double noise_scale = 1.0);

// Conditioned reverse SDE: starts at source + sigma(1) z and integrates
// t: 1 -> 0 in cfg.steps uniform steps, recomputing lmi_map(source, x_t) at
// every step. Output clamped to [0,1].
Image em_translate(const ScoreFunction& model, const Image& source, const NoiseSchedule& schedule,
                   const SamplerConfig& cfg);

// Perturbation-guidance baseline: source + sigma(t_start) z, then the reverse
// SDE from t_start to 0 with all conditioning planes zeroed.
Image sdedit_translate(const ScoreFunction& model, const Image& source,
                       const NoiseSchedule& schedule, const SamplerConfig& cfg);

// Dispatches on cfg.guidance.
Image translate(const ScoreFunction& model, const Image& source, const NoiseSchedule& schedule,
                const SamplerConfig& cfg);

Guidance parse_guidance(std::string_view s);
std::string_view to_string(Guidance g);

}  // namespace lmid
