#pragma once

namespace lmid {

// Variance-exploding schedule sigma(t) = sigma_min * (sigma_max/sigma_min)^t
// on t in [0,1].
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  NoiseSchedule(double sigma_min, double sigma_max);

  double sigma_min() const noexcept { return sigma_min_; }
  double sigma_max() const noexcept { return sigma_max_; }

  double sigma(double t) const;
  // d(sigma^2)/dt = 2 sigma(t)^2 ln(sigma_max/sigma_min)
  double dsigma2_dt(double t) const;

  friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;

 private:
  double sigma_min_ = 0.01;
  double sigma_max_ = 1.0;
};

}  // namespace lmid
