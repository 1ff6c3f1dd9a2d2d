#include "lmid/verify.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "lmid/errors.hpp"
#include "lmid/rng.hpp"
#include "lmid/sde.hpp"

namespace lmid {

double mi_bruteforce(const Patch& a, const Patch& b) {
  if (a.values.size() != b.values.size()) throw InvalidArgument("mi_bruteforce: size mismatch");
  const std::size_t n = a.values.size();
  if (n == 0) return 0.0;
  const int L = std::max(a.levels, b.levels);
  const double N = static_cast<double>(n);
  double mi = 0.0;
  for (int x = 0; x < L; ++x) {
    for (int y = 0; y < L; ++y) {
      std::size_t nxy = 0, nx = 0, ny = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const bool ax = a.values[k] == x;
        const bool by = b.values[k] == y;
        nx += ax;
        ny += by;
        nxy += ax && by;
      }
      if (nxy == 0) continue;
      const double pxy = nxy / N, px = nx / N, py = ny / N;
      mi += pxy * std::log(pxy / (px * py));
    }
  }
  return mi;
}

std::vector<double> default_locale_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 9; ++k) g.push_back(k / 10.0);
  return g;
}

Property1Report property1_suite(const std::vector<std::pair<Image, Image>>& pairs,
                                const std::vector<Image>& images, const LmiConfig& cfg,
                                const NoiseSchedule& schedule, const std::vector<double>& t_grid,
                                std::uint64_t seed) {
  Property1Report rep;
  rep.max_excess = -std::numeric_limits<double>::infinity();
  for (const auto& [ref, cur] : pairs) {
    const CondMap m = lmi_map(ref, cur, cfg);
    const QuantizedImage q = quantize(ref, cfg.levels);
    for (int r = 0; r < ref.height(); ++r) {
      for (int c = 0; c < ref.width(); ++c) {
        const double h = entropy(histogram(extract_patch(q, {r, c}, cfg.radius)));
        const double v = m.value[static_cast<std::size_t>(r) * ref.width() + c];
        rep.max_excess = std::max(rep.max_excess, v - h);
        ++rep.bound_checks;
        if (v > h + kBoundTolerance) ++rep.violations;
      }
    }
  }
  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    std::size_t zero = 0, total = 0;
    for (std::size_t k = 0; k < images.size(); ++k) {
      Rng rng = make_rng(seed, "locale", k, ti);
      const Image ft = perturb(images[k], t_grid[ti], schedule, rng);
      const CondMap m = lmi_map(images[k], ft, cfg);
      for (std::size_t i = 0; i < m.value.size(); ++i) {
        zero += m.drow[i] == 0 && m.dcol[i] == 0;
        ++total;
      }
    }
    rep.locale.push_back({t_grid[ti], total ? static_cast<double>(zero) / total : 0.0});
  }
  return rep;
}

void write_property1_csv(const Property1Report& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  char line[128];
  out << "kind,t,value\n";
  std::snprintf(line, sizeof line, "bound_checks,,%zu\nbound_violations,,%zu\nmax_excess,,%.3e\n",
                r.bound_checks, r.violations, r.max_excess);
  out << line;
  for (const auto& row : r.locale) {
    std::snprintf(line, sizeof line, "zero_offset_fraction,%.2f,%.6f\n", row.t,
                  row.zero_offset_fraction);
    out << line;
  }
  out << (r.bound_pass() ? "PASS" : "FAIL") << ",,bound\n";
}

ScoreField analytic_gaussian_score(const Image& x, double t, double mu, double s0,
                                   const NoiseSchedule& schedule) {
  const double s = schedule.sigma(t);
  const double var = s0 * s0 + s * s;
  ScoreField out(x.width(), x.height());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = static_cast<float>(-(static_cast<double>(x[i]) - mu) / var);
  }
  return out;
}

ScoreField LinearScoreModel::score(const Image& x, std::span<const Image> cond, double t) const {
  if (cond.size() != 1 || !cond[0].same_shape(x)) {
    throw ConfigError("LinearScoreModel expects one conditioning plane");
  }
  const double a = alpha_(t), b = beta_(t);
  ScoreField out(x.width(), x.height());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(a * cond[0][i] + b);
  return out;
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Drift-only recursion in double precision:
//   x_{n+1} = x_n - g2(s_n) * score(x_n, cond, s_n) * ds,  s_n = (n+1) ds
// i.e. reverse_em_step with a negative time increment, written from s = 0 up.
std::vector<double> drift_chain(const std::function<double(double)>& alpha,
                                const std::function<double(double)>& beta,
                                const std::vector<double>& x0, const std::vector<double>& cond,
                                int steps, const NoiseSchedule& schedule, double horizon) {
  std::vector<double> x = x0;
  const double ds = horizon / steps;
  for (int n = 0; n < steps; ++n) {
    const double s = (n + 1) * ds;
    const double g2 = schedule.dsigma2_dt(s);
    const double a = alpha(s), b = beta(s);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= g2 * (a * cond[i] + b) * ds;
  }
  return x;
}

}  // namespace

Property2Report property2_harness(const std::function<double(double)>& alpha,
                                  const std::vector<double>& dlmi_levels, int steps,
                                  const NoiseSchedule& schedule, double horizon,
                                  std::optional<double> integral) {
  if (steps < 1) throw InvalidArgument("property2_harness: steps must be >= 1");
  if (!(horizon > 0.0 && horizon <= 1.0)) throw InvalidArgument("property2_harness: bad horizon");
  for (std::size_t i = 0; i < dlmi_levels.size(); ++i) {
    if (dlmi_levels[i] < 0.0) throw InvalidArgument("property2_harness: levels must be >= 0");
  }
  Property2Report rep;
  rep.integral = integral ? *integral
                          : simpson([&](double s) { return schedule.dsigma2_dt(s) * alpha(s); },
                                    0.0, horizon, 1 << 16);

  // A small field with a fixed training-side conditioning map and a bias
  // term that cancels in the difference.
  constexpr int kPixels = 16;
  Rng rng(derive_seed(0x9e3779b9, "property2"));
  std::vector<double> x0(kPixels), cond_train(kPixels);
  for (int i = 0; i < kPixels; ++i) {
    x0[i] = uniform01(rng);
    cond_train[i] = 2.0 * uniform01(rng);
  }
  const auto beta = [](double s) { return 0.25 - 0.5 * s; };
  const auto base = drift_chain(alpha, beta, x0, cond_train, steps, schedule, horizon);

  for (double d : dlmi_levels) {
    std::vector<double> cond_test = cond_train;
    for (auto& c : cond_test) c += d;
    const auto shifted = drift_chain(alpha, beta, x0, cond_test, steps, schedule, horizon);
    double err = 0.0;
    for (int i = 0; i < kPixels; ++i) err += shifted[i] - base[i];
    err /= kPixels;
    Property2Row row{d, err, -rep.integral * d, 0.0};
    row.rel_error = row.reference != 0.0 ? std::abs(err - row.reference) / std::abs(row.reference)
                                         : std::abs(err);
    rep.max_rel_error = std::max(rep.max_rel_error, row.rel_error);
    rep.rows.push_back(row);
  }

  // Least-squares line error = slope * dlmi + intercept.
  const double n = static_cast<double>(rep.rows.size());
  if (n >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : rep.rows) {
      sx += r.dlmi;
      sy += r.error;
      sxx += r.dlmi * r.dlmi;
      sxy += r.dlmi * r.error;
    }
    const double denom = n * sxx - sx * sx;
    rep.slope = (n * sxy - sx * sy) / denom;
    rep.intercept = (sy - rep.slope * sx) / n;
    const double mean_y = sy / n;
    double ss_tot = 0, ss_res = 0;
    for (const auto& r : rep.rows) {
      const double fit = rep.slope * r.dlmi + rep.intercept;
      ss_res += (r.error - fit) * (r.error - fit);
      ss_tot += (r.error - mean_y) * (r.error - mean_y);
    }
    rep.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  }
  return rep;
}

void write_property2_csv(const Property2Report& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  char line[160];
  out << "dlmi,error,reference,rel_error\n";
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%.6e,%.12e,%.12e,%.3e\n", row.dlmi, row.error, row.reference,
                  row.rel_error);
    out << line;
  }
  std::snprintf(line, sizeof line, "# slope=%.12e intercept=%.3e r2=%.9f integral=%.12e\n", r.slope,
                r.intercept, r.r2, r.integral);
  out << line;
  const bool pass = r.linear_pass() && r.intercept_pass() && r.integral_pass();
  out << (pass ? "PASS" : "FAIL") << "\n";
}

}  // namespace lmid
