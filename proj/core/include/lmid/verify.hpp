#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "lmid/image.hpp"
#include "lmid/lmi.hpp"
#include "lmid/schedule.hpp"
#include "lmid/score_function.hpp"

namespace lmid {

// Plug-in MI of two positionally paired patches by an explicit loop over
// label pairs, recounting from the raw samples for every pair. Shares no code
// with the lmi module.
double mi_bruteforce(const Patch& a, const Patch& b);

struct LocaleRow {
  double t = 0.0;
  double zero_offset_fraction = 0.0;
};

struct Property1Report {
  std::size_t bound_checks = 0;
  std::size_t violations = 0;
  double max_excess = 0.0;  // max of lmi_value - entropy over all checks
  std::vector<LocaleRow> locale;
  bool bound_pass() const { return violations == 0; }
};

inline constexpr double kBoundTolerance = 1e-12;

// (a) for every pixel of every (ref, cur) pair, lmi_value <= entropy of the
//     reference neighbourhood histogram + kBoundTolerance;
// (b) for each t in t_grid, the fraction of pixels whose argmax offset in
//     lmi_map(F, perturb(F, t)) is (0,0), pooled over `images`.
Property1Report property1_suite(const std::vector<std::pair<Image, Image>>& pairs,
                                const std::vector<Image>& images, const LmiConfig& cfg,
                                const NoiseSchedule& schedule, const std::vector<double>& t_grid,
                                std::uint64_t seed);

std::vector<double> default_locale_grid();  // 0.1, 0.2, ..., 0.9

void write_property1_csv(const Property1Report& r, const std::filesystem::path& path);

// Score of N(mu, s0^2 + sigma(t)^2): -(x - mu) / (s0^2 + sigma(t)^2).
ScoreField analytic_gaussian_score(const Image& x, double t, double mu, double s0,
                                   const NoiseSchedule& schedule);

class GaussianOracleScore : public ScoreFunction {
 public:
  GaussianOracleScore(double mu, double s0, NoiseSchedule schedule)
      : mu_(mu), s0_(s0), schedule_(schedule) {}
  int cond_channels() const override { return 0; }
  ScoreField score(const Image& x, std::span<const Image>, double t) const override {
    return analytic_gaussian_score(x, t, mu_, s0_, schedule_);
  }

 private:
  double mu_;
  double s0_;
  NoiseSchedule schedule_;
};

// s(x, cond, t) = alpha(t) * cond_value + beta(t); exactly additive and
// homogeneous in the conditioning value.
class LinearScoreModel : public ScoreFunction {
 public:
  LinearScoreModel(std::function<double(double)> alpha, std::function<double(double)> beta)
      : alpha_(std::move(alpha)), beta_(std::move(beta)) {}
  int cond_channels() const override { return 1; }
  ScoreField score(const Image& x, std::span<const Image> cond, double t) const override;

 private:
  std::function<double(double)> alpha_;
  std::function<double(double)> beta_;
};

struct Property2Row {
  double dlmi = 0.0;
  double error = 0.0;      // mean generation-error difference at the horizon
  double reference = 0.0;  // -I * dlmi, I = integral of dsigma^2/ds * alpha
  double rel_error = 0.0;  // |error - reference| / |reference|
};

struct Property2Report {
  std::vector<Property2Row> rows;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double integral = 0.0;   // I used for the reference column
  double max_rel_error = 0.0;

  bool linear_pass() const { return r2 > 0.999; }
  bool intercept_pass() const { return std::abs(intercept) < 1e-9; }
  bool integral_pass() const { return max_rel_error < 1e-3; }
};

// Runs the drift-only Euler-Maruyama recursion of the conditioned SDE twice
// per level, once with the training-side conditioning value and once shifted
// by dlmi, from a shared state at s = 0 up to `horizon`, and reports the
// difference. `integral` supplies the closed-form integral of
// dsigma^2/ds * alpha over [0, horizon]; without it a composite Simpson rule
// with 2^16 panels is used.
Property2Report property2_harness(const std::function<double(double)>& alpha,
                                  const std::vector<double>& dlmi_levels, int steps,
                                  const NoiseSchedule& schedule, double horizon = 1.0,
                                  std::optional<double> integral = std::nullopt);

void write_property2_csv(const Property2Report& r, const std::filesystem::path& path);

}  // namespace lmid
