#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "lmid/errors.hpp"
#include "lmid/parallel.hpp"

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kDiverged = 3 };

}  // namespace

int main(int argc, char** argv) {
  using namespace lmid::cli;

  CLI::App app{"lmid: locale-MI conditioned diffusion for zero-shot modality translation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_file;
  std::vector<std::string> sets;
  int threads = -1;
  int dump_every = -1;
  app.add_option("--config", config_file, "key=value run configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--set", sets, "Override one config key (key=value); repeatable");
  app.add_option("--threads", threads, "Global worker cap (0 = all cores)")->check(CLI::NonNegativeNumber);

  std::string out, data, ckpt, pred, seg, resume, guidance;
  std::uint64_t checkpoint_every = 0, log_every = 100;
  VerifyOptions vopt;
  BenchOptions bopt;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic phantom dataset");
  gen->add_option("--out", out, "Dataset root")->required();

  auto* tr = app.add_subcommand("train", "Train the score model on the target modality");
  tr->add_option("--data", data, "Dataset root")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--out", out, "Run directory (checkpoint, loss.csv, resolved.cfg)")->required();
  tr->add_option("--resume", resume, "Continue from this checkpoint")->check(CLI::ExistingFile);
  tr->add_option("--checkpoint-every", checkpoint_every, "Write the checkpoint every N iterations");
  tr->add_option("--log-every", log_every, "Progress line every N iterations (0 = quiet)");

  auto* tl = app.add_subcommand("translate", "Translate held-out source images");
  tl->add_option("--data", data, "Dataset root")->required()->check(CLI::ExistingDirectory);
  tl->add_option("--ckpt", ckpt, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  tl->add_option("--out", out, "Output directory")->required();
  tl->add_option("--guidance", guidance, "lmi | perturb | none")
      ->check(CLI::IsMember({"lmi", "perturb", "none"}));
  tl->add_option("--dump-every", dump_every, "Dump the sampler state every k steps")
      ->check(CLI::NonNegativeNumber);

  auto* sg = app.add_subcommand("segment", "K-Means segmentation of translations");
  sg->add_option("--data", data, "Dataset root (K-Means is fit on train/)")->required()
      ->check(CLI::ExistingDirectory);
  sg->add_option("--pred", pred, "Directory of translations")->required()->check(CLI::ExistingDirectory);
  sg->add_option("--out", out, "Output directory for label masks")->required();

  auto* ev = app.add_subcommand("eval", "Dice / PSNR / SSIM against held-out ground truth");
  ev->add_option("--data", data, "Dataset root")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--pred", pred, "Directory of translations")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--seg", seg, "Directory of segmentations")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--out", out, "Metric CSV path")->required();

  auto* vf = app.add_subcommand("verify", "Run the property suites");
  vf->add_option("--out", out, "Report directory")->required();
  vf->add_option("--pairs", vopt.pairs, "Random image pairs for the bound check");
  vf->add_option("--size", vopt.size, "Image side for the suites");

  auto* bn = app.add_subcommand("bench", "lmi_map throughput versus thread count");
  bn->add_option("--size", bopt.size, "Image side");
  bn->add_option("--threads-list", bopt.threads, "Thread counts, first is the baseline")->delimiter(',');
  bn->add_option("--repeats", bopt.repeats, "Repetitions per thread count (best is kept)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    Settings s;
    if (!config_file.empty()) s.apply_file(config_file);
    for (const auto& kv : sets) s.apply(kv);
    if (threads >= 0) s.apply("threads=" + std::to_string(threads));
    if (dump_every >= 0) s.apply("dump_every=" + std::to_string(dump_every));
    if (!guidance.empty()) s.apply("guidance=" + guidance);
    lmid::set_max_threads(s.cfg.threads);

    if (*gen) {
      gen_data(s, out);
    } else if (*tr) {
      TrainOptions o{data, out, {}, checkpoint_every, log_every};
      if (!resume.empty()) o.resume = resume;
      train(s, o, std::cerr);
    } else if (*tl) {
      translate(s, {data, ckpt, out}, std::cerr);
    } else if (*sg) {
      segment(s, {data, pred, out});
    } else if (*ev) {
      const auto r = eval(s, {data, pred, seg, out});
      std::printf("dice %.4f +- %.4f  psnr %.3f +- %.3f  ssim %.4f +- %.4f\n", r.dice_mean,
                  r.dice_std, r.psnr_mean, r.psnr_std, r.ssim_mean, r.ssim_std);
    } else if (*vf) {
      return verify(s, {out, vopt.pairs, vopt.size, vopt.phantoms}, std::cout) ? kOk : kData;
    } else if (*bn) {
      bench(s, bopt, std::cout);
    }
  } catch (const lmid::NumericalDivergence& e) {
    std::cerr << "error: numerical divergence: " << e.what() << "\n";
    return kDiverged;
  } catch (const lmid::ConfigError& e) {
    std::cerr << "error: configuration: " << e.what() << "\n";
    return kUsage;
  } catch (const lmid::FormatError& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return kData;
  } catch (const lmid::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const lmid::DegenerateInput& e) {
    std::cerr << "error: degenerate input: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: invalid argument: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
