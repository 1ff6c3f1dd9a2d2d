#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <thread>

#include "lmid/errors.hpp"
#include "lmid/image_io.hpp"
#include "lmid/parallel.hpp"
#include "lmid/rng.hpp"
#include "lmid/verify.hpp"

namespace lmid::cli {
namespace {

// Keys stored in a checkpoint.
const std::vector<std::string> kCheckpointKeys = {
    "levels", "radius",         "search_radius",   "cond_mode", "sigma_min", "sigma_max",
    "depth",  "width",          "kernel",          "groups",    "time_dim",  "final_bias",
    "scale_by_sigma", "zero_init_final", "lr", "beta1", "beta2", "eps",
};

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (!fs::is_directory(p)) throw IoError("cannot create directory " + p.string());
}

void write_resolved(const Settings& s, const fs::path& path) { save_run_config(s.cfg, path); }

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw IoError(what + " not found: " + p.string());
}

}  // namespace

void Settings::apply(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  std::string key = assignment.substr(0, eq);
  while (!key.empty() && key.back() == ' ') key.pop_back();
  cfg.set(key, assignment.substr(eq + 1));
  explicit_keys.insert(key);
}

void Settings::apply_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  // Parse once for validation and line-numbered errors, then record keys.
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const RunConfig parsed = parse_run_config(text);
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t\r") + 1);
    cfg.set(key, parsed.get(key));
    explicit_keys.insert(key);
  }
}

void adopt_checkpoint(Settings& s, const Checkpoint& ck) {
  RunConfig from = s.cfg;
  from.lmi = ck.lmi;
  from.sigma_min = ck.model.schedule().sigma_min();
  from.sigma_max = ck.model.schedule().sigma_max();
  from.arch = ck.model.arch();
  from.lr = ck.optimizer.lr;
  from.beta1 = ck.optimizer.beta1;
  from.beta2 = ck.optimizer.beta2;
  from.eps = ck.optimizer.eps;
  for (const auto& key : kCheckpointKeys) {
    const std::string theirs = from.get(key);
    if (s.explicit_keys.count(key) && s.cfg.get(key) != theirs) {
      throw ConfigError("checkpoint was trained with " + key + "=" + theirs +
                        " but the run sets " + key + "=" + s.cfg.get(key) +
                        "; drop the override or use a matching checkpoint");
    }
    s.cfg.set(key, theirs);
  }
}

std::string test_output_name(const std::string& prefix, const std::string& id,
                             const std::string& ext) {
  return prefix + id + ext;
}

void gen_data(const Settings& s, const fs::path& out) {
  s.cfg.validate();
  ensure_dir(out);
  gen_dataset(out, s.cfg.dataset_spec());
  write_resolved(s, out / kResolvedConfig);
}

void train(Settings s, const TrainOptions& opt, std::ostream& log) {
  const Dataset ds = load_dataset(opt.data);
  ensure_dir(opt.out);

  ScoreModel model;
  AdamState adam;
  bool append = false;
  if (opt.resume) {
    require_file(*opt.resume, "checkpoint");
    Checkpoint ck = load_checkpoint(*opt.resume);
    adopt_checkpoint(s, ck);
    model = std::move(ck.model);
    adam = std::move(ck.optimizer);
    append = fs::exists(opt.out / kLossCsv);
    log << "resuming at iteration " << adam.step << "\n";
  }
  s.cfg.validate();
  if (!opt.resume) {
    model = ScoreModel(s.cfg.resolved_arch(), s.cfg.schedule(), s.cfg.seed_for("init"));
    adam = s.cfg.adam();
  }
  if (ds.train.front().width() % (1 << model.arch().depth) != 0) {
    throw ConfigError("image size " + std::to_string(ds.train.front().width()) +
                      " is not divisible by 2^depth");
  }
  write_resolved(s, opt.out / kResolvedConfig);

  TrainConfig tc = s.cfg.train_config();
  const std::uint64_t total = tc.iterations;
  const auto start = std::chrono::steady_clock::now();
  auto on_step = [&](const TrainRecord& r) {
    if (opt.log_every == 0 || (r.iteration + 1) % opt.log_every != 0) return;
    const double el =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char line[128];
    std::snprintf(line, sizeof line, "iter %llu loss %.6f objective %.6f elapsed %.1fs\n",
                  static_cast<unsigned long long>(r.iteration + 1), r.loss, r.objective, el);
    log << line << std::flush;
  };
  while (adam.step < total) {
    tc.iterations = opt.checkpoint_every > 0 ? std::min(total, adam.step + opt.checkpoint_every)
                                             : total;
    const auto records = train(model, adam, ds.train, tc, s.cfg.lmi, on_step);
    write_loss_csv(records, opt.out / kLossCsv, append);
    append = true;
    save_checkpoint(model, adam, s.cfg.lmi, opt.out / kCheckpoint);
  }
  if (!fs::exists(opt.out / kCheckpoint)) save_checkpoint(model, adam, s.cfg.lmi, opt.out / kCheckpoint);
  if (!fs::exists(opt.out / kLossCsv)) write_loss_csv({}, opt.out / kLossCsv);
}

void translate(Settings s, const TranslateOptions& opt, std::ostream& log) {
  require_file(opt.checkpoint, "checkpoint");
  const Checkpoint ck = load_checkpoint(opt.checkpoint);
  adopt_checkpoint(s, ck);
  s.cfg.validate();
  const Dataset ds = load_dataset(opt.data);
  ensure_dir(opt.out);
  write_resolved(s, opt.out / kResolvedConfig);

  const SamplerConfig base = s.cfg.sampler_config();
  const std::size_t n = ds.test.size();
  parallel_for(
      n,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
          const TestCase& tc = ds.test[j];
          SamplerConfig sc = base;
          sc.seed = derive_seed(base.seed, "image", j);
          sc.threads = 1;
          if (sc.dump_every > 0) {
            sc.dump_dir = opt.out / "dump" / tc.id;
            ensure_dir(sc.dump_dir);
          }
          const Image out = lmid::translate(ck.model, tc.source, ck.model.schedule(), sc);
          save_lmif(out, opt.out / test_output_name("t", tc.id, ".lmif"));
          save_pgm(out, opt.out / test_output_name("t", tc.id, ".pgm"));
        }
      },
      s.cfg.threads);
  log << "translated " << n << " images with guidance " << to_string(base.guidance) << "\n";
}

void segment(const Settings& s, const SegmentOptions& opt) {
  s.cfg.validate();
  const Dataset ds = load_dataset(opt.data);
  ensure_dir(opt.out);
  write_resolved(s, opt.out / kResolvedConfig);
  const KMeansModel km = kmeans_fit(ds.train, s.cfg.kmeans_k, s.cfg.seed_for("kmeans"));
  {
    std::ofstream c(opt.out / "centroids.txt", std::ios::trunc);
    if (!c) throw IoError("cannot write centroids under " + opt.out.string());
    char buf[40];
    for (double v : km.centroids) {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      c << buf;
    }
  }
  for (const auto& tc : ds.test) {
    const fs::path in = opt.pred / test_output_name("t", tc.id, ".lmif");
    require_file(in, "translation");
    save_label_pgm(kmeans_assign(km, load_lmif(in)), opt.out / test_output_name("seg", tc.id, ".pgm"));
  }
}

MetricReport eval(const Settings& s, const EvalOptions& opt) {
  s.cfg.validate();
  const Dataset ds = load_dataset(opt.data);
  std::vector<MetricRow> rows(ds.test.size());
  for (std::size_t j = 0; j < ds.test.size(); ++j) {
    const TestCase& tc = ds.test[j];
    const fs::path pred = opt.pred / test_output_name("t", tc.id, ".lmif");
    const fs::path seg = opt.seg / test_output_name("seg", tc.id, ".pgm");
    require_file(pred, "translation");
    require_file(seg, "segmentation");
    const Image img = load_lmif(pred);
    const LabelImage mask = load_label_pgm(seg);
    rows[j] = {tc.id, dice(mask, tc.mask).mean, psnr(img, tc.target), ssim(img, tc.target)};
  }
  const MetricReport report = summarize(std::move(rows));
  if (opt.out.has_parent_path()) ensure_dir(opt.out.parent_path());
  write_metric_csv(report, opt.out);
  fs::path cfg_path = opt.out;
  cfg_path.replace_extension(".resolved.cfg");
  write_resolved(s, cfg_path);
  return report;
}

bool verify(const Settings& s, const VerifyOptions& opt, std::ostream& log) {
  s.cfg.validate();
  ensure_dir(opt.out);
  write_resolved(s, opt.out / kResolvedConfig);
  const std::uint64_t seed = s.cfg.seed_for("verify");
  bool ok = true;
  auto report = [&](const char* name, bool pass, const std::string& detail) {
    log << (pass ? "PASS " : "FAIL ") << name << "  " << detail << "\n";
    ok = ok && pass;
  };
  char buf[256];

  // MI oracle on random patch pairs.
  {
    Rng rng = make_rng(seed, "mi-oracle");
    double worst = 0.0;
    const int L = s.cfg.lmi.levels, n = s.cfg.lmi.samples();
    for (int trial = 0; trial < 1000; ++trial) {
      Patch a{{0, 0}, s.cfg.lmi.radius, L, std::vector<std::uint8_t>(n)};
      Patch b = a;
      for (int k = 0; k < n; ++k) {
        a.values[k] = static_cast<std::uint8_t>(rng() % L);
        b.values[k] = static_cast<std::uint8_t>(rng() % L);
      }
      worst = std::max(worst, std::abs(mutual_information(joint_histogram(a, b)) -
                                       mi_bruteforce(a, b)));
    }
    std::snprintf(buf, sizeof buf, "max |mi - brute| = %.3e over 1000 pairs", worst);
    report("mi-oracle", worst <= 1e-10, buf);
  }

  // Bound and forward locale.
  {
    std::vector<std::pair<Image, Image>> pairs;
    for (int k = 0; k < opt.pairs; ++k) {
      Rng rng = make_rng(seed, "p1-pair", k);
      Image a(opt.size, opt.size), b(opt.size, opt.size);
      for (auto& v : a.data()) v = static_cast<float>(uniform01(rng));
      for (auto& v : b.data()) v = static_cast<float>(uniform01(rng));
      pairs.emplace_back(std::move(a), std::move(b));
    }
    std::vector<Image> phantoms;
    for (int k = 0; k < opt.phantoms; ++k) {
      phantoms.push_back(
          gen_phantom(derive_seed(seed, "p1-phantom", k), opt.size, s.cfg.k_tissue).modality_b);
    }
    const Property1Report r1 = property1_suite(pairs, phantoms, s.cfg.lmi, s.cfg.schedule(),
                                               default_locale_grid(), seed);
    write_property1_csv(r1, opt.out / "property1.csv");
    std::snprintf(buf, sizeof buf, "%zu violations in %zu checks, max excess %.3e",
                  r1.violations, r1.bound_checks, r1.max_excess);
    report("p1-bound", r1.bound_pass(), buf);
    for (const auto& row : r1.locale) {
      log << "     locale t=" << row.t << " zero-offset fraction " << row.zero_offset_fraction << "\n";
    }
  }

  // Linear error accumulation.
  {
    const NoiseSchedule sch = s.cfg.schedule();
    const double closed = sch.sigma_max() * sch.sigma_max() - sch.sigma_min() * sch.sigma_min();
    const Property2Report r2 = property2_harness([](double) { return 1.0; },
                                                 {1e-1, 1e-2, 1e-3, 1e-4}, 10000, sch, 1.0, closed);
    write_property2_csv(r2, opt.out / "property2.csv");
    std::snprintf(buf, sizeof buf, "R2 %.9f intercept %.2e max rel err %.2e", r2.r2, r2.intercept,
                  r2.max_rel_error);
    report("p2-convergence", r2.linear_pass() && r2.intercept_pass() && r2.integral_pass(), buf);
  }
  return ok;
}

std::vector<BenchRow> bench(const Settings& s, const BenchOptions& opt, std::ostream& log) {
  s.cfg.validate();
  Rng rng = make_rng(s.cfg.seed_for("bench"), "pair");
  Image a(opt.size, opt.size), b(opt.size, opt.size);
  for (auto& v : a.data()) v = static_cast<float>(uniform01(rng));
  for (auto& v : b.data()) v = static_cast<float>(uniform01(rng));
  const CondMap reference = lmi_map(a, b, s.cfg.lmi, 1);
  std::vector<BenchRow> rows;
  const double pixels = static_cast<double>(a.size());
  log << "threads  seconds    Mpixel/s  speedup\n";
  // Round-robin over thread counts so a slow stretch on a shared core hits every column.
  std::vector<double> best(opt.threads.size(), std::numeric_limits<double>::infinity());
  for (int r = 0; r < opt.repeats; ++r) {
    for (std::size_t i = 0; i < opt.threads.size(); ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const CondMap m = lmi_map(a, b, s.cfg.lmi, opt.threads[i]);
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!(m == reference)) throw std::runtime_error("lmi_map output depends on thread count");
      best[i] = std::min(best[i], dt);
    }
  }
  for (std::size_t i = 0; i < opt.threads.size(); ++i) {
    BenchRow row{opt.threads[i], best[i], pixels / best[i], 0.0};
    row.speedup = best.front() / best[i];
    rows.push_back(row);
    char line[96];
    std::snprintf(line, sizeof line, "%7d  %.6f  %8.4f  %7.2f\n", opt.threads[i], best[i],
                  row.pixels_per_second / 1e6, row.speedup);
    log << line;
  }
  log << "hardware threads: " << std::thread::hardware_concurrency() << "\n";
  return rows;
}

}  // namespace lmid::cli
