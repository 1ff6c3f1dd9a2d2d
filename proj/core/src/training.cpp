#include "lmid/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "lmid/errors.hpp"
#include "lmid/parallel.hpp"
#include "lmid/rng.hpp"
#include "lmid/sde.hpp"

namespace lmid {
namespace {

struct ItemResult {
  double loss = 0.0;
  double objective = 0.0;
  std::vector<float> grad;
};

ItemResult train_item(const ScoreModel& model, const std::vector<Image>& dataset,
                      const TrainConfig& cfg, const LmiConfig& lmi, std::uint64_t iter, int item) {
  Rng rng = make_rng(cfg.seed, "train", iter, static_cast<std::uint64_t>(item));
  const Image& x0 = dataset[rng() % dataset.size()];
  const double t = cfg.t_min + (cfg.t_max - cfg.t_min) * uniform01(rng);
  const auto& schedule = model.schedule();
  const Image xt = perturb(x0, t, schedule, rng);
  std::vector<Image> cond;
  if (model.cond_channels() > 0) cond = cond_planes(lmi_map(x0, xt, lmi, 1), lmi.mode);
  const ScoreField target = dsm_target(x0, xt, t, schedule);
  const double sigma = schedule.sigma(t);
  const double weight = cfg.weighting == LossWeighting::kSigma2 ? sigma * sigma : 1.0;

  ItemResult r;
  const double inv_n = 1.0 / static_cast<double>(x0.size());
  model.forward_backward(
      xt, cond, t,
      [&](const ScoreField& s) {
        ScoreField up(s.width(), s.height());
        double acc = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
          const double d = static_cast<double>(s[i]) - target[i];
          acc += d * d;
          up[i] = static_cast<float>(weight * d * inv_n);
        }
        r.loss = 0.5 * acc * inv_n;
        r.objective = weight * r.loss;
        return up;
      },
      r.grad);
  return r;
}

}  // namespace

std::vector<TrainRecord> train(ScoreModel& model, AdamState& opt, const std::vector<Image>& dataset,
                               const TrainConfig& cfg, const LmiConfig& lmi,
                               const std::function<void(const TrainRecord&)>& on_step) {
  if (dataset.empty()) throw InvalidArgument("train: dataset is empty");
  if (cfg.batch < 1) throw ConfigError("train: batch must be >= 1");
  if (!(cfg.t_min >= 0.0 && cfg.t_min <= cfg.t_max && cfg.t_max <= 1.0)) {
    throw ConfigError("train: require 0 <= t_min <= t_max <= 1");
  }
  const int ch = model.cond_channels();
  if (ch != 0 && ch != lmi.cond_channels()) {
    throw ConfigError("train: model has " + std::to_string(ch) +
                      " conditioning channels but lmi config provides " +
                      std::to_string(lmi.cond_channels()));
  }
  const std::size_t n_params = model.params().size();
  if (opt.m.size() != n_params) opt = AdamState::zeros(n_params, opt.lr, opt.beta1, opt.beta2, opt.eps);

  std::vector<TrainRecord> log;
  std::vector<ItemResult> items(cfg.batch);
  std::vector<float> grad(n_params);
  while (opt.step < cfg.iterations) {
    const std::uint64_t iter = opt.step;
    parallel_for(
        items.size(),
        [&](std::size_t begin, std::size_t end) {
          for (std::size_t b = begin; b < end; ++b) {
            items[b] = train_item(model, dataset, cfg, lmi, iter, static_cast<int>(b));
          }
        },
        cfg.threads);
    // Fixed accumulation order keeps the update independent of thread count.
    TrainRecord rec{iter, 0.0, 0.0};
    std::fill(grad.begin(), grad.end(), 0.0f);
    for (const auto& it : items) {
      rec.loss += it.loss;
      rec.objective += it.objective;
      for (std::size_t i = 0; i < n_params; ++i) grad[i] += it.grad[i];
    }
    const float inv_b = 1.0f / static_cast<float>(cfg.batch);
    for (auto& g : grad) g *= inv_b;
    rec.loss /= cfg.batch;
    rec.objective /= cfg.batch;
    if (!std::isfinite(rec.loss) || !std::isfinite(rec.objective)) {
      throw NumericalDivergence("non-finite training loss", static_cast<std::int64_t>(iter));
    }
    adam_step(opt, model.mutable_params(), grad);
    log.push_back(rec);
    if (on_step) on_step(rec);
  }
  return log;
}

void write_loss_csv(const std::vector<TrainRecord>& log, const std::filesystem::path& path,
                    bool append) {
  const bool header = !append || !std::filesystem::exists(path);
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  if (header) out << "iteration,loss,objective\n";
  char line[96];
  for (const auto& r : log) {
    std::snprintf(line, sizeof line, "%llu,%.9g,%.9g\n",
                  static_cast<unsigned long long>(r.iteration), r.loss, r.objective);
    out << line;
  }
}

LossWeighting parse_weighting(std::string_view s) {
  if (s == "none") return LossWeighting::kNone;
  if (s == "sigma2") return LossWeighting::kSigma2;
  throw ConfigError("unknown loss weighting '" + std::string(s) + "' (expected none|sigma2)");
}

std::string_view to_string(LossWeighting w) {
  return w == LossWeighting::kNone ? "none" : "sigma2";
}

}  // namespace lmid
