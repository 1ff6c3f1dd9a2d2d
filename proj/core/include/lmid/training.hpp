#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "lmid/image.hpp"
#include "lmid/lmi.hpp"
#include "lmid/score_model.hpp"

namespace lmid {

enum class LossWeighting {
  kNone,    // plain 1/2 |s - target|^2
  kSigma2,  // scaled by sigma(t)^2, equalising the target magnitude across t
};

struct TrainConfig {
  std::uint64_t iterations = 5000;  // total optimizer steps; training resumes from AdamState::step
  int batch = 16;
  double t_min = 1e-3;
  double t_max = 1.0;
  std::uint64_t seed = 0;
  LossWeighting weighting = LossWeighting::kSigma2;
  int threads = 0;
};

struct TrainRecord {
  std::uint64_t iteration = 0;
  double loss = 0.0;       // batch mean of the unweighted denoising score-matching loss
  double objective = 0.0;  // batch mean of the weighted loss actually minimised
};

// Mini-batch Adam on the LMI-conditioned denoising score-matching objective.
// Iteration k draws its batch from streams derived from (seed, k), so a run
// resumed from a checkpoint at step k continues the uninterrupted trajectory.
// Throws NumericalDivergence on a non-finite loss.
std::vector<TrainRecord> train(ScoreModel& model, AdamState& optimizer,
                               const std::vector<Image>& dataset, const TrainConfig& cfg,
                               const LmiConfig& lmi,
                               const std::function<void(const TrainRecord&)>& on_step = {});

void write_loss_csv(const std::vector<TrainRecord>& log, const std::filesystem::path& path,
                    bool append = false);

LossWeighting parse_weighting(std::string_view s);
std::string_view to_string(LossWeighting w);

}  // namespace lmid
