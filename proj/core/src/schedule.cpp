#include "lmid/schedule.hpp"

#include <cmath>

#include "lmid/errors.hpp"

namespace lmid {

NoiseSchedule::NoiseSchedule(double sigma_min, double sigma_max)
    : sigma_min_(sigma_min), sigma_max_(sigma_max) {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) || !std::isfinite(sigma_max)) {
    throw InvalidArgument("noise schedule requires 0 < sigma_min < sigma_max");
  }
}

double NoiseSchedule::sigma(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("sigma: t must lie in [0,1]");
  return sigma_min_ * std::pow(sigma_max_ / sigma_min_, t);
}

double NoiseSchedule::dsigma2_dt(double t) const {
  const double s = sigma(t);
  return 2.0 * s * s * std::log(sigma_max_ / sigma_min_);
}

}  // namespace lmid
