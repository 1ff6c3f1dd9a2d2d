#pragma once

#include <span>

#include "lmid/image.hpp"

namespace lmid {

// Anything that can evaluate s(x, cond, t). The trained network and the
// analytic oracles share this interface so the samplers treat them alike.
class ScoreFunction {
 public:
  virtual ~ScoreFunction() = default;

  // Number of conditioning planes expected in `cond`; 0 means unconditioned.
  virtual int cond_channels() const = 0;
  virtual ScoreField score(const Image& x, std::span<const Image> cond, double t) const = 0;
};

}  // namespace lmid
