#include "lmid/sde.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "lmid/errors.hpp"
#include "lmid/image_io.hpp"

namespace lmid {

Image perturb(const Image& x0, double t, const NoiseSchedule& schedule, Rng& rng) {
  const double s = schedule.sigma(t);
  Image xt = x0;
  for (auto& v : xt.data()) v = static_cast<float>(v + s * standard_normal(rng));
  return xt;
}

ScoreField dsm_target(const Image& x0, const Image& xt, double t, const NoiseSchedule& schedule) {
  if (!x0.same_shape(xt)) throw InvalidArgument("dsm_target: shape mismatch");
  const double s = schedule.sigma(t);
  const double inv_var = 1.0 / (s * s);
  ScoreField out(x0.width(), x0.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(-(static_cast<double>(xt[i]) - x0[i]) * inv_var);
  }
  return out;
}

double dsm_loss(const ScoreFunction& model, const Image& x0, const Image& xt,
                std::span<const Image> cond, double t, const NoiseSchedule& schedule) {
  if (static_cast<int>(cond.size()) != model.cond_channels()) {
    throw ConfigError("dsm_loss: model expects " + std::to_string(model.cond_channels()) +
                      " conditioning planes, got " + std::to_string(cond.size()));
  }
  const ScoreField target = dsm_target(x0, xt, t, schedule);
  const ScoreField s = model.score(xt, cond, t);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = static_cast<double>(s[i]) - target[i];
    acc += d * d;
  }
  return 0.5 * acc / static_cast<double>(s.size());
}

double dsm_loss(const ScoreFunction& model, const Image& x0, double t, Rng& rng,
                const LmiConfig& lmi, const NoiseSchedule& schedule) {
  const int ch = model.cond_channels();
  if (ch != 0 && ch != lmi.cond_channels()) {
    throw ConfigError("dsm_loss: model has " + std::to_string(ch) +
                      " conditioning channels but lmi config provides " +
                      std::to_string(lmi.cond_channels()));
  }
  const Image xt = perturb(x0, t, schedule, rng);
  std::vector<Image> cond;
  if (ch > 0) cond = cond_planes(lmi_map(x0, xt, lmi), lmi.mode);
  return dsm_loss(model, x0, xt, cond, t, schedule);
}

void reverse_em_step(Image& x, const ScoreField& score, double g2, double dt, Rng& rng,
                     double noise_scale) {
  const double diffusion = std::sqrt(g2 * dt) * noise_scale;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = x[i] + g2 * score[i] * dt;
    if (noise_scale != 0.0) v += diffusion * standard_normal(rng);
    x[i] = static_cast<float>(v);
  }
}

namespace {

void check_channels(const ScoreFunction& model, const SamplerConfig& cfg) {
  const int ch = model.cond_channels();
  if (ch != 0 && ch != cfg.lmi.cond_channels()) {
    throw ConfigError("model has " + std::to_string(ch) +
                      " conditioning channels but the sampler's lmi config provides " +
                      std::to_string(cfg.lmi.cond_channels()));
  }
}

void check_finite(const Image& x, int step) {
  for (float v : x.data()) {
    if (!std::isfinite(v)) throw NumericalDivergence("non-finite sampler state", step);
  }
}

void maybe_dump(const SamplerConfig& cfg, const Image& x, int step) {
  if (cfg.dump_every <= 0 || step % cfg.dump_every != 0) return;
  char name[32];
  std::snprintf(name, sizeof name, "step%05d.lmif", step);
  save_lmif(x, cfg.dump_dir / name);
}

// Integrates from t_begin down to 0 in `steps` uniform steps.
Image integrate(const ScoreFunction& model, const Image& source, Image x,
                const NoiseSchedule& schedule, const SamplerConfig& cfg, double t_begin,
                bool conditioned, Rng& rng) {
  const int ch = model.cond_channels();
  const std::vector<Image> zeros =
      ch > 0 ? zero_cond_planes(x.width(), x.height(), cfg.lmi.mode) : std::vector<Image>{};
  const double dt = t_begin / cfg.steps;
  for (int n = 0; n < cfg.steps; ++n) {
    maybe_dump(cfg, x, n);
    const double t = t_begin - n * dt;
    std::vector<Image> cond;
    if (ch > 0) {
      cond = conditioned ? cond_planes(lmi_map(source, x, cfg.lmi, cfg.threads), cfg.lmi.mode)
                         : zeros;
    }
    const ScoreField s = model.score(x, cond, t);
    reverse_em_step(x, s, schedule.dsigma2_dt(t), dt, rng);
    check_finite(x, n);
  }
  maybe_dump(cfg, x, cfg.steps);
  return clamp_unit(std::move(x));
}

}  // namespace

Image em_translate(const ScoreFunction& model, const Image& source, const NoiseSchedule& schedule,
                   const SamplerConfig& cfg) {
  check_channels(model, cfg);
  if (cfg.steps < 1) throw ConfigError("sampler steps must be >= 1");
  Rng rng = make_rng(cfg.seed, "sample");
  Image x = perturb(source, 1.0, schedule, rng);
  return integrate(model, source, std::move(x), schedule, cfg, 1.0,
                   cfg.guidance != Guidance::kNone, rng);
}

Image sdedit_translate(const ScoreFunction& model, const Image& source,
                       const NoiseSchedule& schedule, const SamplerConfig& cfg) {
  check_channels(model, cfg);
  if (!(cfg.t_start >= 0.0 && cfg.t_start <= 1.0)) throw ConfigError("t_start must lie in [0,1]");
  if (cfg.steps < 0) throw ConfigError("sampler steps must be >= 0");
  if (cfg.t_start == 0.0) return clamp_unit(source);
  Rng rng = make_rng(cfg.seed, "sample");
  Image x = perturb(source, cfg.t_start, schedule, rng);
  if (cfg.steps == 0) return clamp_unit(std::move(x));
  return integrate(model, source, std::move(x), schedule, cfg, cfg.t_start, false, rng);
}

Image translate(const ScoreFunction& model, const Image& source, const NoiseSchedule& schedule,
                const SamplerConfig& cfg) {
  switch (cfg.guidance) {
    case Guidance::kPerturb:
      return sdedit_translate(model, source, schedule, cfg);
    case Guidance::kLmi:
    case Guidance::kNone:
      return em_translate(model, source, schedule, cfg);
  }
  throw ConfigError("unknown guidance mode");
}

Guidance parse_guidance(std::string_view s) {
  if (s == "lmi") return Guidance::kLmi;
  if (s == "perturb") return Guidance::kPerturb;
  if (s == "none") return Guidance::kNone;
  throw ConfigError("unknown guidance '" + std::string(s) + "' (expected lmi|perturb|none)");
}

std::string_view to_string(Guidance g) {
  switch (g) {
    case Guidance::kLmi:
      return "lmi";
    case Guidance::kPerturb:
      return "perturb";
    case Guidance::kNone:
      return "none";
  }
  return "?";
}

}  // namespace lmid
